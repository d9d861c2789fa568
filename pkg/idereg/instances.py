"""Random smooth problem instances for agreement and invariance checks."""

from __future__ import annotations

import dataclasses

import numpy as np

from .config import JumpModel
from .function_space import BivariateKernel, PiecewiseMatrixFunction, Side
from .functionals import ImpulseRecord, LinearVectorFunctional, PointTerm, apply
from .generating_solver import ProblemSpec, build_core


def _random_poly(rng: np.random.Generator, a: float, b: float, rows: int, cols: int, degree: int) -> PiecewiseMatrixFunction:
    return PiecewiseMatrixFunction.polynomial(a, b, rng.uniform(-1.0, 1.0, size=(degree + 1, rows, cols)))


def _random_impulse(rng: np.random.Generator, tau: float, n: int) -> ImpulseRecord:
    k = int(rng.integers(1, n))
    while True:
        E = rng.uniform(-1.0, 1.0, size=(k, n))
        S = rng.uniform(-1.0, 1.0, size=(k, n))
        if np.linalg.svd(E + S, compute_uv=False)[-1] > 0.1:
            return ImpulseRecord(tau, E, S, rng.uniform(-1.0, 1.0, size=k))


def random_problem(
    rng: np.random.Generator,
    *,
    max_m: int = 3,
    max_n: int = 3,
    max_p: int = 2,
    max_q: int = 3,
    degree: int = 3,
    jump_model: JumpModel = JumpModel.FREE,
    with_kernel: bool = False,
    a: float = 0.0,
    b: float = 1.0,
) -> ProblemSpec:
    """Polynomial data with coefficients uniform in [-1, 1].

    Impulses are only drawn for n ≥ 2 since every impulse needs k_i < n rows.
    The boundary functional mixes point terms at both ends, an interior point
    and, at random, an integral term with a quadratic weight.
    """
    m = int(rng.integers(1, max_m + 1))
    n = int(rng.integers(1, max_n + 1))
    p = int(rng.integers(0, max_p + 1)) if n >= 2 else 0
    q = int(rng.integers(1, max_q + 1))

    taus = np.sort(rng.uniform(a + 0.15 * (b - a), b - 0.15 * (b - a), size=p))
    while p > 1 and np.min(np.diff(taus)) < 0.1 * (b - a):
        taus = np.sort(rng.uniform(a + 0.15 * (b - a), b - 0.15 * (b - a), size=p))
    impulses = tuple(_random_impulse(rng, float(t), n) for t in taus)

    interior = float(rng.uniform(a + 0.05 * (b - a), b - 0.05 * (b - a)))
    terms = [
        PointTerm(a, Side.RIGHT, rng.uniform(-1.0, 1.0, size=(q, n))),
        PointTerm(b, Side.LEFT, rng.uniform(-1.0, 1.0, size=(q, n))),
        PointTerm(interior, Side.RIGHT, rng.uniform(-1.0, 1.0, size=(q, n))),
    ]
    weight = _random_poly(rng, a, b, q, n, 2) if rng.random() < 0.5 else None
    ell = LinearVectorFunctional(out_dim=q, width=n, point_terms=tuple(terms), weight=weight)

    kernel = None
    if with_kernel:
        kernel = BivariateKernel(a, b, rng.uniform(-1.0, 1.0, size=(degree + 1, degree + 1, n, n)))

    return ProblemSpec(
        a=a,
        b=b,
        A=_random_poly(rng, a, b, m, n, degree),
        B=_random_poly(rng, a, b, m, n, degree),
        Phi=_random_poly(rng, a, b, n, m, degree),
        f=_random_poly(rng, a, b, n, 1, degree),
        ell=ell,
        alpha=rng.uniform(-1.0, 1.0, size=q),
        impulses=impulses,
        kernel=kernel,
        jump_model=jump_model,
    )


def make_consistent(p: ProblemSpec, rng: np.random.Generator) -> ProblemSpec | None:
    """Replace γ and α by 𝔏 applied to a random solution of the equation.

    Returns None when the equation part itself is unsolvable (d₁ > 0 with an
    obstructed b̃), since no right-hand side can repair that.
    """
    core = build_core(p)
    if np.max(np.abs(core.P_D_star_d1 @ core.b_tilde), initial=0.0) > 1e-10:
        return None
    c = rng.uniform(-1.0, 1.0, size=core.r1)
    x = core.F + core.X_r1 @ c.reshape(-1, 1) if core.r1 else core.F
    delta = apply(core.functional, x, core.quad)[:, 0]
    impulses = []
    offset = 0
    for imp in p.impulses:
        impulses.append(dataclasses.replace(imp, gamma=delta[offset : offset + imp.k]))
        offset += imp.k
    return dataclasses.replace(p, impulses=tuple(impulses), alpha=delta[offset:])
