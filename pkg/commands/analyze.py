"""``idereg analyze``: ranks, solvability residuals and, with a kernel, the regularizability verdict."""

from __future__ import annotations

import logging

from idereg.control_synthesis import build_moments, build_system, check_regularizability, control_family, select_min_norm
from idereg.documents import AnalysisReport, ControlSummary, RankSummary, ResidualSummary
from idereg.generating_solver import build_core, check_solvability

from .common import ExitCode, emit, load_problem

logger = logging.getLogger(__name__)


def analyze(args) -> ExitCode:
    _, settings, problem = load_problem(args)
    core = build_core(problem, settings.tolerance, settings.quadrature)
    verdict = check_solvability(core)

    control = None
    if problem.kernel is not None:
        system = build_system(core, build_moments(problem, core))
        regularizability = check_regularizability(system, settings.tolerance)
        u_min_norm, control_dim = None, None
        if regularizability.regularizable:
            controls = control_family(system, settings.tolerance)
            u_min_norm, control_dim = select_min_norm(controls).tolist(), controls.dim
        control = ControlSummary(
            criterion_residual=regularizability.residual,
            regularizable=regularizability.regularizable,
            u_min_norm=u_min_norm,
            control_dim=control_dim,
        )

    report = AnalysisReport(
        ranks=RankSummary(rank_D=core.rank_D, r1=core.r1, d1=core.d1, rank_Q=core.rank_Q, r2=core.r2, d2=core.d2),
        residuals=ResidualSummary(cond1=verdict.cond1_residual, cond2=verdict.cond2_residual),
        solvable=verdict.solvable,
        control=control,
    )
    emit(report.model_dump())

    if verdict.solvable:
        return ExitCode.OK
    if control is not None and control.regularizable:
        return ExitCode.UNSOLVABLE
    logger.info("%s is unsolvable and no control kernel can repair it", args.file)
    return ExitCode.NOT_REGULARIZABLE
