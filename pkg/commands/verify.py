"""``idereg verify``: cross-check the algebraic verdict against the collocation oracle."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor

from idereg.generating_solver import build_core, check_solvability, solve_family
from idereg.oracle import OracleVerdict, classify, family_distance, oracle_solve

from .common import CommandError, ExitCode, emit, load_problem

logger = logging.getLogger(__name__)


def _theory(problem, settings):
    core = build_core(problem, settings.tolerance, settings.quadrature)
    return core, check_solvability(core)


def verify(args) -> ExitCode:
    _, settings, problem = load_problem(args)
    with ThreadPoolExecutor(max_workers=2) as pool:
        theory = pool.submit(_theory, problem, settings)
        oracle = pool.submit(oracle_solve, problem, None, None, settings.oracle)
        core, report = theory.result()
        solution = oracle.result()

    if getattr(args, "grid", None):
        try:
            solution.grid.to_frame().to_csv(args.grid, index=False, float_format="%.17g", lineterminator="\n")
        except OSError as exc:
            raise CommandError(ExitCode.INVALID_INPUT, f"cannot write {args.grid}: {exc}") from exc
        logger.info("oracle grid written to %s", args.grid)

    verdict = classify(solution.min_residual, settings.oracle)
    indeterminate = verdict is OracleVerdict.INDETERMINATE
    agreement = None if indeterminate else (verdict is OracleVerdict.SOLVABLE) == report.solvable
    distance = None
    if report.solvable and verdict is OracleVerdict.SOLVABLE:
        distance = family_distance(solve_family(core), solution.grid)

    emit(
        {
            "theory": {
                "solvable": report.solvable,
                "cond1": report.cond1_residual,
                "cond2": report.cond2_residual,
            },
            "oracle": {
                "verdict": verdict.value,
                "min_residual": solution.min_residual,
                "nodes_per_subinterval": settings.oracle.nodes_per_subinterval,
            },
            "agreement": agreement,
            "indeterminate": indeterminate,
            "family_distance": distance,
        }
    )
    if agreement is False:
        logger.warning("solver says solvable=%s but the oracle says %s", report.solvable, verdict.value)
        return ExitCode.DISAGREEMENT
    return ExitCode.OK
