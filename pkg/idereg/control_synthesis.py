"""Constant controls u that make an unsolvable generating problem solvable.

With the control term k(t)u, k(t) = ∫_a^b K(t, s) ds, the data of the
generating problem change affinely in u:

    b̃(u) = b̃ + W₁ u,        W₁ = ∫ [A(s) k̃(s) + B(s) k(s)] ds,
    F(u) = F + G u,          G(t) = k̃(t) + Ψ₀(t) D⁺ W₁,

while D, Ψ₀, 𝔏 and therefore Q and every projector stay fixed. The
solvability conditions become the finite system U u = g.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .config import DEFAULT_QUADRATURE, DEFAULT_TOLERANCE, QuadratureConfig, ToleranceConfig
from .errors import InvalidInputError, InvalidWeightError, MissingControlKernelError, NotRegularizableError
from .function_space import PiecewiseMatrixFunction, antiderivative, collapse_kernel, integrate, l2_norm
from .functionals import LinearVectorFunctional, apply, magnitude
from .generating_solver import (
    AlgebraicCore,
    ProblemSpec,
    SolutionFamily,
    SolvabilityReport,
    build_core,
    check_solvability,
    solve_family,
)
from .linear_algebra import (
    as_real_matrix,
    as_real_vector,
    conull_projector,
    null_projector,
    numerical_rank,
    pseudoinverse,
    sup_norm,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ControlMoments:
    k: PiecewiseMatrixFunction
    k_tilde: PiecewiseMatrixFunction
    W1: np.ndarray
    G: PiecewiseMatrixFunction
    W1_scale: float = 0.0


@dataclass(frozen=True, eq=False)
class RegularizationSystem:
    U: np.ndarray
    g: np.ndarray
    P_U: np.ndarray
    P_U_star: np.ndarray
    criterion_residual: float
    d1: int
    d2: int
    scale: float = 0.0


@dataclass(frozen=True)
class RegularizabilityVerdict:
    residual: float
    regularizable: bool


@dataclass(frozen=True, eq=False)
class ControlFamily:
    """u = u₀ + P_U c, c ∈ R^n."""

    u0: np.ndarray
    P_U: np.ndarray
    dim: int

    def member(self, c) -> np.ndarray:
        return self.u0 + self.P_U @ as_real_vector(c, "control parameters")


@dataclass(frozen=True, eq=False)
class RegularizationResult:
    u: np.ndarray
    problem: ProblemSpec
    family: SolutionFamily
    report: SolvabilityReport
    system: RegularizationSystem
    controls: ControlFamily
    core: AlgebraicCore


def build_moments(p: ProblemSpec, core: AlgebraicCore) -> ControlMoments:
    if p.kernel is None:
        raise MissingControlKernelError("problem has no control kernel K")
    k = collapse_kernel(p.kernel)
    k_tilde = antiderivative(k)
    W1 = integrate(p.A @ k_tilde + p.B @ k, quad=core.quad)
    # Cauchy-Schwarz bound of ‖W₁‖ taken before the integrand cancels
    W1_scale = l2_norm(p.A, core.quad) * l2_norm(k_tilde, core.quad) + l2_norm(p.B, core.quad) * l2_norm(k, core.quad)
    G = k_tilde + core.psi0 @ (core.D_pinv @ W1)
    return ControlMoments(k=k, k_tilde=k_tilde, W1=W1, G=G, W1_scale=W1_scale)


def build_system(
    core: AlgebraicCore,
    moments: ControlMoments,
    functional: LinearVectorFunctional | None = None,
    delta=None,
) -> RegularizationSystem:
    """U = [P_{D*_{d₁}} W₁; P_{Q*_{d₂}} 𝔏G],  g = [-P_{D*_{d₁}} b̃; P_{Q*_{d₂}}(δ - 𝔏F)]."""
    functional = core.functional if functional is None else functional
    delta = core.problem.delta() if delta is None else as_real_vector(delta, "delta")
    LG = apply(functional, moments.G, core.quad)
    U = np.vstack([core.P_D_star_d1 @ moments.W1, core.P_Q_star_d2 @ LG])
    g = np.concatenate([-core.P_D_star_d1 @ core.b_tilde, core.P_Q_star_d2 @ (delta - core.LF)])
    scale = moments.W1_scale + magnitude(functional, moments.G, core.quad)
    P_U_star = conull_projector(U, core.tol, scale)
    residual = sup_norm(P_U_star @ g)
    logger.debug(
        "regularization system: U shape %s, rank %d, criterion %.3e", U.shape, numerical_rank(U, core.tol, scale), residual
    )
    return RegularizationSystem(
        U=U,
        g=g,
        P_U=null_projector(U, core.tol, scale),
        P_U_star=P_U_star,
        criterion_residual=residual,
        d1=core.d1,
        d2=core.d2,
        scale=scale,
    )


def check_regularizability(sys: RegularizationSystem, tol: ToleranceConfig = DEFAULT_TOLERANCE) -> RegularizabilityVerdict:
    """P_{U*} g = 0, i.e. U u = g is consistent."""
    return RegularizabilityVerdict(
        residual=sys.criterion_residual,
        regularizable=sys.criterion_residual < tol.solve_tol,
    )


def control_family(sys: RegularizationSystem, tol: ToleranceConfig = DEFAULT_TOLERANCE) -> ControlFamily:
    if not check_regularizability(sys, tol).regularizable:
        raise NotRegularizableError(sys.criterion_residual)
    u0 = pseudoinverse(sys.U, tol, sys.scale) @ sys.g
    return ControlFamily(u0=u0, P_U=sys.P_U, dim=numerical_rank(sys.P_U, tol))


def select_min_norm(fam: ControlFamily) -> np.ndarray:
    return fam.u0.copy()


def select_weighted(fam: ControlFamily, weight, u_ref, tol: ToleranceConfig = DEFAULT_TOLERANCE) -> np.ndarray:
    """Family member closest to ``u_ref`` in the norm induced by the SPD matrix ``weight``."""
    n = fam.u0.shape[0]
    W = as_real_matrix(weight, "weight")
    u_ref = as_real_vector(u_ref, "reference control")
    if W.shape != (n, n) or u_ref.shape != (n,):
        raise InvalidInputError(f"weight must be {n}x{n} and reference control of length {n}")
    if not np.allclose(W, W.T, rtol=1e-12, atol=1e-12 * max(1.0, np.abs(W).max(initial=0.0))):
        raise InvalidWeightError("weight matrix is not symmetric")
    try:
        L = np.linalg.cholesky(W)
    except np.linalg.LinAlgError as exc:
        raise InvalidWeightError("weight matrix is not positive definite") from exc
    # minimize ‖Lᵀ(u₀ + P_U c - u_ref)‖ over c
    c = pseudoinverse(L.T @ fam.P_U, tol) @ (L.T @ (u_ref - fam.u0))
    return fam.u0 + fam.P_U @ c


def apply_control(p: ProblemSpec, u) -> ProblemSpec:
    """Fold the control into the forcing: f ← f + k(·)u, and drop the kernel."""
    if p.kernel is None:
        raise MissingControlKernelError("problem has no control kernel K")
    u = as_real_vector(u, "control")
    if u.shape != (p.n,):
        raise InvalidInputError(f"control has length {u.shape[0]}, expected {p.n}")
    forcing = p.f + collapse_kernel(p.kernel) @ u.reshape(-1, 1)
    return p.with_forcing(forcing).without_kernel()


def regularize(
    p: ProblemSpec,
    delta=None,
    tol: ToleranceConfig = DEFAULT_TOLERANCE,
    quad: QuadratureConfig = DEFAULT_QUADRATURE,
    weight=None,
    u_ref=None,
) -> RegularizationResult:
    """Synthesize a control, apply it and re-solve.

    The minimum-norm control is used unless a weight is given, in which case
    the member closest to ``u_ref`` (zero by default) is chosen.
    """
    core = build_core(p, tol, quad)
    delta = p.delta() if delta is None else as_real_vector(delta, "delta")
    moments = build_moments(p, core)
    system = build_system(core, moments, core.functional, delta)
    controls = control_family(system, tol)
    if weight is None:
        u = select_min_norm(controls)
    else:
        u = select_weighted(controls, weight, np.zeros(p.n) if u_ref is None else u_ref, tol)
    logger.info("control u=%s (family dimension %d)", np.array2string(u, precision=6), controls.dim)

    regularized = apply_control(p, u)
    new_core = build_core(regularized, tol, quad)
    report = check_solvability(new_core, delta)
    family = solve_family(new_core, delta)
    return RegularizationResult(
        u=u,
        problem=regularized,
        family=family,
        report=report,
        system=system,
        controls=controls,
        core=new_core,
    )
