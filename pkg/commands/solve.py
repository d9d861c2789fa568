"""``idereg solve``: sample one member of the solution family."""

from __future__ import annotations

import sys

import numpy as np
import pandas as pd

from idereg.errors import UnsolvableProblemError
from idereg.function_space import PiecewiseMatrixFunction, Side
from idereg.generating_solver import build_core, solve_family

from .common import CommandError, ExitCode, emit, load_problem


def sample_table(x: PiecewiseMatrixFunction, samples: int, impulse_instants=()) -> pd.DataFrame:
    """Rows (t, side, x1..xn) on a uniform grid; impulse instants get a left and a right row."""
    instants = set(impulse_instants)
    ts = sorted(set(np.linspace(x.a, x.b, samples).tolist()) | instants)
    rows = []
    for t in ts:
        if t in instants:
            rows.append((t, "left", *x.eval_at(t, Side.LEFT)[:, 0]))
            rows.append((t, "right", *x.eval_at(t, Side.RIGHT)[:, 0]))
        else:
            rows.append((t, "both", *x.eval_at(t, Side.RIGHT)[:, 0]))
    columns = ["t", "side"] + [f"x{i + 1}" for i in range(x.rows)]
    return pd.DataFrame(rows, columns=columns)


def solve(args) -> ExitCode:
    _, settings, problem = load_problem(args)
    core = build_core(problem, settings.tolerance, settings.quadrature)
    try:
        family = solve_family(core)
    except UnsolvableProblemError as exc:
        raise CommandError(ExitCode.UNSOLVABLE, f"{exc}; run `idereg regularize` to synthesize a control") from exc

    x = family.member(settings.params)
    table = sample_table(x, settings.samples, problem.impulse_instants)
    if settings.output == "json":
        emit({"columns": list(table.columns), "rows": table.values.tolist()})
    else:
        sys.stdout.write(table.to_csv(index=False, float_format="%.17g", lineterminator="\n"))
    return ExitCode.OK
