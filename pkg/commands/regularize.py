"""``idereg regularize``: synthesize a constant control and re-solve."""

from __future__ import annotations

import logging

from idereg.control_synthesis import regularize
from idereg.errors import NotRegularizableError

from .common import CommandError, ExitCode, emit, load_problem

logger = logging.getLogger(__name__)


def regularize_command(args) -> ExitCode:
    _, settings, problem = load_problem(args)
    if problem.kernel is None:
        raise CommandError(ExitCode.INVALID_INPUT, "regularize needs a control kernel K in the problem document")

    weight, u_ref = None, None
    if settings.objective == "weighted":
        if settings.weight is None:
            raise CommandError(ExitCode.INVALID_INPUT, "the weighted objective needs --weight or options.weight")
        weight, u_ref = settings.weight, settings.uref

    try:
        result = regularize(problem, tol=settings.tolerance, quad=settings.quadrature, weight=weight, u_ref=u_ref)
    except NotRegularizableError as exc:
        logger.info("%s: no constant control makes the problem solvable", args.file)
        emit({"regularizable": False, "criterion_residual": exc.criterion_residual})
        return ExitCode.NOT_REGULARIZABLE

    emit(
        {
            "u": result.u,
            "objective": settings.objective,
            "regularizable": True,
            "criterion_residual": result.system.criterion_residual,
            "control_dim": result.controls.dim,
            "family": {"r1": result.core.r1, "rank_Q": result.core.rank_Q, "r2": result.core.r2, "d2": result.core.d2},
            "residuals": {"cond1": result.report.cond1_residual, "cond2": result.report.cond2_residual},
            "solvable": result.report.solvable,
        }
    )
    return ExitCode.OK
