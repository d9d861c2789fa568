from pathlib import Path

import numpy as np
import pytest

from idereg.function_space import BivariateKernel, PiecewiseMatrixFunction, Side
from idereg.functionals import ImpulseRecord, LinearVectorFunctional, PointTerm
from idereg.generating_solver import D_SCALE, ProblemSpec, build_core
from idereg.instances import make_consistent, random_problem

PROBLEMS = Path(__file__).resolve().parent.parent / "problems"


def scalar_problem(f=1.0, kernel=1.0):
    """x' - ∫ x'(s) ds = f on [0, 1], x(0) = 0, control kernel K ≡ ``kernel``."""
    const = lambda v: PiecewiseMatrixFunction.constant(0.0, 1.0, [[v]])  # noqa: E731
    return ProblemSpec(
        a=0.0,
        b=1.0,
        A=const(0.0),
        B=const(1.0),
        Phi=const(1.0),
        f=const(f),
        ell=LinearVectorFunctional(out_dim=1, width=1, point_terms=(PointTerm(0.0, Side.RIGHT, [[1.0]]),)),
        alpha=[0.0],
        kernel=None if kernel is None else BivariateKernel(0.0, 1.0, np.full((1, 1, 1, 1), kernel)),
    )


@pytest.fixture
def s1():
    return scalar_problem()


@pytest.fixture
def rng():
    return np.random.default_rng(20240517)


@pytest.fixture
def problems_dir():
    return PROBLEMS


def stimulus_problem(jump_model="free"):
    """The two-state model shipped as problems/stimulus.json."""
    const = lambda v: PiecewiseMatrixFunction.constant(0.0, 1.0, v)  # noqa: E731
    return ProblemSpec(
        a=0.0,
        b=1.0,
        A=const([[0.0, 0.0]]),
        B=const([[1.0, 0.0]]),
        Phi=const([[1.0], [0.0]]),
        f=PiecewiseMatrixFunction.from_entries(0.0, 1.0, [[[1.0, 1.0]], [[0.2]]]),
        ell=LinearVectorFunctional(out_dim=2, width=2, point_terms=(PointTerm(0.0, Side.RIGHT, np.eye(2)),)),
        alpha=[1.0, 0.5],
        impulses=(ImpulseRecord(0.5, [[0.0, 1.0]], [[0.0, 0.1]], [0.05]),),
        kernel=BivariateKernel.from_entries(0.0, 1.0, [[[[1.0, -0.5]], [[0.0]]], [[[0.0]], [[0.0]]]]),
        jump_model=jump_model,
    )


@pytest.fixture
def stimulus():
    return stimulus_problem()


def well_separated(M, scale=0.0):
    """Singular values are either clearly nonzero or clearly zero."""
    s = np.linalg.svd(M, compute_uv=False) if M.size else np.zeros(0)
    reference = max(s[0] if s.size else 0.0, scale)
    if reference == 0.0:
        return True
    rel = s / reference
    return bool(np.all((rel > 1e-3) | (rel < 1e-12)))


def consistent_instances(rng, count, **kwargs):
    """Random well-conditioned problems whose data admit a solution, with their cores."""
    found = 0
    while found < count:
        p = make_consistent(random_problem(rng, **kwargs), rng)
        if p is None:
            continue
        core = build_core(p)
        if not (well_separated(core.D, D_SCALE) and well_separated(core.Q, core.Q_scale)):
            continue
        found += 1
        yield p, core
