"""Solvability and general solution of the generating impulsive boundary-value problem.

The problem is

    ẋ(t) - Φ(t) ∫_a^b [A(s) x(s) + B(s) ẋ(s)] ds = f(t),   t ≠ τ_i,
    E_i (x(τ_i+) - x(τ_i-)) = S_i x(τ_i-) + γ_i,           ℓ x = α.

Writing c₁ = ∫ (A x + B ẋ) ds turns the equation into ẋ = Φ c₁ + f, hence

    x(t) = Ψ(t) c₁ + c₂ + Σ_i H_i(t) h_i + f̃(t),   Ψ' = Φ, f̃' = f,

and substituting back gives the algebraic system D ξ = b̃ for ξ = (c₁, c₂, h_1..h_p).
The boundary and interface conditions become 𝔏 x = δ with 𝔏 = [φ; ℓ]. Both
systems are resolved with pseudoinverses and orthoprojectors.
"""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass

import numpy as np

from .config import DEFAULT_QUADRATURE, DEFAULT_TOLERANCE, JumpModel, QuadratureConfig, ToleranceConfig
from .errors import InvalidInputError, UnsolvableProblemError
from .function_space import (
    BivariateKernel,
    PiecewiseMatrixFunction,
    Side,
    antiderivative,
    hstack,
    integrate,
    l2_norm,
    step_basis,
)
from .functionals import ImpulseRecord, LinearVectorFunctional, apply, build_delta, impulse_functional, magnitude, stack
from .linear_algebra import (
    as_real_vector,
    conull_projector,
    independent_columns,
    independent_rows,
    null_projector,
    numerical_rank,
    pseudoinverse,
    sup_norm,
)

logger = logging.getLogger(__name__)

# D = [I_m - ∫(AΨ + BΦ), ...] is measured against its identity block
D_SCALE = 1.0


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    a: float
    b: float
    A: PiecewiseMatrixFunction
    B: PiecewiseMatrixFunction
    Phi: PiecewiseMatrixFunction
    f: PiecewiseMatrixFunction
    ell: LinearVectorFunctional
    alpha: np.ndarray
    impulses: tuple[ImpulseRecord, ...] = ()
    kernel: BivariateKernel | None = None
    jump_model: JumpModel = JumpModel.FREE

    def __post_init__(self):
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "b", float(self.b))
        object.__setattr__(self, "impulses", tuple(self.impulses))
        object.__setattr__(self, "alpha", as_real_vector(self.alpha, "alpha"))
        object.__setattr__(self, "jump_model", JumpModel(self.jump_model))

        for name in ("A", "B", "Phi", "f"):
            fn = getattr(self, name)
            if (fn.a, fn.b) != (self.a, self.b):
                raise InvalidInputError(f"{name} is defined on [{fn.a}, {fn.b}], not [{self.a}, {self.b}]")
        m, n = self.A.shape
        expected = {"A": (m, n), "B": (m, n), "Phi": (n, m), "f": (n, 1)}
        for name, shape in expected.items():
            if getattr(self, name).shape != shape:
                raise InvalidInputError(f"{name} has shape {getattr(self, name).shape}, expected {shape}")

        taus = [imp.tau for imp in self.impulses]
        if any(not (self.a < t < self.b) for t in taus):
            raise InvalidInputError("impulse instants must lie strictly inside the interval")
        if any(s >= t for s, t in zip(taus, taus[1:])):
            raise InvalidInputError("impulse instants must be strictly increasing")
        for imp in self.impulses:
            if imp.n != n:
                raise InvalidInputError(f"impulse at τ={imp.tau} acts on R^{imp.n}, expected R^{n}")

        if self.ell.width != n:
            raise InvalidInputError(f"boundary functional acts on R^{self.ell.width}, expected R^{n}")
        if self.alpha.shape != (self.ell.out_dim,):
            raise InvalidInputError(f"alpha has length {self.alpha.shape[0]}, expected {self.ell.out_dim}")
        for term in self.ell.point_terms:
            if not (self.a <= term.t <= self.b):
                raise InvalidInputError(f"boundary point term at t={term.t} lies outside the interval")
        if self.ell.weight is not None and (self.ell.weight.a, self.ell.weight.b) != (self.a, self.b):
            raise InvalidInputError("boundary integral weight is defined on a different interval")

        if self.kernel is not None:
            if self.kernel.shape != (n, n):
                raise InvalidInputError(f"control kernel has shape {self.kernel.shape}, expected {(n, n)}")
            if (self.kernel.a, self.kernel.b) != (self.a, self.b):
                raise InvalidInputError("control kernel is defined on a different interval")

    @property
    def m(self) -> int:
        return self.A.rows

    @property
    def n(self) -> int:
        return self.A.cols

    @property
    def p(self) -> int:
        return len(self.impulses)

    @property
    def k(self) -> int:
        return sum(imp.k for imp in self.impulses)

    @property
    def q(self) -> int:
        return self.ell.out_dim

    @property
    def n_param(self) -> int:
        jumps = self.n * self.p if self.jump_model is JumpModel.FREE else 0
        return self.m + self.n + jumps

    @property
    def impulse_instants(self) -> tuple[float, ...]:
        return tuple(imp.tau for imp in self.impulses)

    def functional(self) -> LinearVectorFunctional:
        """𝔏 = [φ_1; …; φ_p; ℓ]."""
        return stack([impulse_functional(imp) for imp in self.impulses] + [self.ell], width=self.n)

    def delta(self) -> np.ndarray:
        return build_delta(self.impulses, self.alpha)

    def with_forcing(self, f: PiecewiseMatrixFunction) -> "ProblemSpec":
        return dataclasses.replace(self, f=f)

    def without_kernel(self) -> "ProblemSpec":
        return dataclasses.replace(self, kernel=None)


@dataclass(frozen=True, eq=False)
class DifferentialCore:
    """Everything fixed by D: Ψ₀, b̃, the projectors of D and X_{r₁} = Ψ₀ P_{D_{r₁}}."""

    problem: ProblemSpec
    functional: LinearVectorFunctional
    psi: PiecewiseMatrixFunction
    psi0: PiecewiseMatrixFunction
    f_tilde: PiecewiseMatrixFunction
    b_tilde: np.ndarray
    D: np.ndarray
    D_pinv: np.ndarray
    P_D: np.ndarray
    P_D_star: np.ndarray
    P_D_r1: np.ndarray
    P_D_star_d1: np.ndarray
    X_r1: PiecewiseMatrixFunction
    rank_D: int
    r1: int
    d1: int
    tol: ToleranceConfig
    quad: QuadratureConfig


@dataclass(frozen=True, eq=False)
class AlgebraicCore(DifferentialCore):
    F: PiecewiseMatrixFunction
    LF: np.ndarray
    Q: np.ndarray
    Q_scale: float
    Q_pinv: np.ndarray
    P_Q: np.ndarray
    P_Q_star: np.ndarray
    P_Q_r2: np.ndarray
    P_Q_star_d2: np.ndarray
    n2: int
    r2: int
    d2: int

    @property
    def rank_Q(self) -> int:
        return self.n2


@dataclass(frozen=True)
class SolvabilityReport:
    cond1_residual: float
    cond2_residual: float
    solvable: bool


@dataclass(frozen=True, eq=False)
class SolutionFamily:
    """x(·, c) = particular + basis·c, c ∈ R^{r₂}."""

    particular: PiecewiseMatrixFunction
    basis: PiecewiseMatrixFunction
    r2: int

    def member(self, c=None) -> PiecewiseMatrixFunction:
        if c is None:
            return self.particular
        c = as_real_vector(c, "family parameters")
        if c.shape != (self.r2,):
            raise InvalidInputError(f"family has {self.r2} parameters, got {c.shape[0]}")
        if self.r2 == 0:
            return self.particular
        return self.particular + self.basis @ c.reshape(-1, 1)

    def sample(self, ts, c=None, side: Side = Side.RIGHT) -> np.ndarray:
        """Member values at ``ts`` as a len(ts) × n array."""
        return self.member(c).sample(ts, side)[:, :, 0]


@dataclass(frozen=True)
class ResidualNorms:
    ide_residual: float
    cond_residual: float


def build_psi0(p: ProblemSpec) -> PiecewiseMatrixFunction:
    """Ψ₀ = [Ψ, I_n] or, with free jumps, [Ψ, I_n, H_1, …, H_p]."""
    blocks = [antiderivative(p.Phi), PiecewiseMatrixFunction.identity(p.a, p.b, p.n)]
    if p.jump_model is JumpModel.FREE:
        blocks.extend(step_basis(p.a, p.b, imp.tau, p.n) for imp in p.impulses)
    return hstack(blocks)


def build_D(p: ProblemSpec, quad: QuadratureConfig = DEFAULT_QUADRATURE) -> np.ndarray:
    """D = [I_m - ∫(AΨ + BΦ), -∫A, -∫_{τ_1}^b A, …] (jump blocks only with free jumps)."""
    psi = antiderivative(p.Phi)
    blocks = [
        np.eye(p.m) - integrate(p.A @ psi + p.B @ p.Phi, quad=quad),
        -integrate(p.A, quad=quad),
    ]
    if p.jump_model is JumpModel.FREE:
        blocks.extend(-integrate(p.A, imp.tau, p.b, quad=quad) for imp in p.impulses)
    return np.hstack(blocks)


def build_btilde(
    p: ProblemSpec, f: PiecewiseMatrixFunction | None = None, quad: QuadratureConfig = DEFAULT_QUADRATURE
) -> np.ndarray:
    """b̃ = ∫ [A f̃ + B f] ds with f̃ = ∫_a^t f."""
    f = p.f if f is None else f
    f_tilde = antiderivative(f)
    return integrate(p.A @ f_tilde + p.B @ f, quad=quad)[:, 0]


def build_F(core: DifferentialCore, f: PiecewiseMatrixFunction | None = None) -> PiecewiseMatrixFunction:
    """F(t) = f̃(t) + Ψ₀(t) D⁺ b̃ for the forcing ``f`` (the problem's own by default)."""
    if f is None:
        f_tilde, b_tilde = core.f_tilde, core.b_tilde
    else:
        f_tilde, b_tilde = antiderivative(f), build_btilde(core.problem, f, core.quad)
    return f_tilde + core.psi0 @ (core.D_pinv @ b_tilde).reshape(-1, 1)


def build_Q(core: DifferentialCore, functional: LinearVectorFunctional | None = None) -> np.ndarray:
    """Q = 𝔏 X_{r₁}."""
    functional = core.functional if functional is None else functional
    return apply(functional, core.X_r1, core.quad)


def build_core(
    p: ProblemSpec,
    tol: ToleranceConfig = DEFAULT_TOLERANCE,
    quad: QuadratureConfig = DEFAULT_QUADRATURE,
) -> AlgebraicCore:
    functional = p.functional()
    psi0 = build_psi0(p)

    D = build_D(p, quad)
    D_pinv = pseudoinverse(D, tol, D_SCALE)
    rank_D = numerical_rank(D, tol, D_SCALE)
    r1 = D.shape[1] - rank_D
    d1 = p.m - rank_D
    P_D = null_projector(D, tol, D_SCALE)
    P_D_r1 = independent_columns(P_D, r1, tol)
    P_D_star = conull_projector(D, tol, D_SCALE)

    stage = DifferentialCore(
        problem=p,
        functional=functional,
        psi=antiderivative(p.Phi),
        psi0=psi0,
        f_tilde=antiderivative(p.f),
        b_tilde=build_btilde(p, p.f, quad),
        D=D,
        D_pinv=D_pinv,
        P_D=P_D,
        P_D_star=P_D_star,
        P_D_r1=P_D_r1,
        P_D_star_d1=independent_rows(P_D_star, d1, tol),
        X_r1=psi0 @ P_D_r1,
        rank_D=rank_D,
        r1=r1,
        d1=d1,
        tol=tol,
        quad=quad,
    )

    F = build_F(stage)
    Q = build_Q(stage)
    # 𝔏 may cancel X_{r₁} exactly, so the rank of Q is measured against its operands
    Q_scale = magnitude(functional, stage.X_r1, quad)
    n2 = numerical_rank(Q, tol, Q_scale)
    r2 = r1 - n2
    d2 = functional.out_dim - n2
    P_Q = null_projector(Q, tol, Q_scale)
    P_Q_star = conull_projector(Q, tol, Q_scale)

    logger.info(
        "core: m=%d n=%d p=%d k+q=%d rank D=%d r1=%d d1=%d rank Q=%d r2=%d d2=%d",
        p.m, p.n, p.p, functional.out_dim, rank_D, r1, d1, n2, r2, d2,
    )
    logger.debug("D shape %s, Q shape %s, b_tilde %s", D.shape, Q.shape, stage.b_tilde)

    return AlgebraicCore(
        **{field.name: getattr(stage, field.name) for field in dataclasses.fields(DifferentialCore)},
        F=F,
        LF=apply(functional, F, quad)[:, 0],
        Q=Q,
        Q_scale=Q_scale,
        Q_pinv=pseudoinverse(Q, tol, Q_scale),
        P_Q=P_Q,
        P_Q_star=P_Q_star,
        P_Q_r2=independent_columns(P_Q, r2, tol),
        P_Q_star_d2=independent_rows(P_Q_star, d2, tol),
        n2=n2,
        r2=r2,
        d2=d2,
    )


def _delta_or_default(core: AlgebraicCore, delta) -> np.ndarray:
    delta = core.problem.delta() if delta is None else as_real_vector(delta, "delta")
    if delta.shape != (core.functional.out_dim,):
        raise InvalidInputError(f"delta has length {delta.shape[0]}, expected {core.functional.out_dim}")
    return delta


def check_solvability(core: AlgebraicCore, delta=None) -> SolvabilityReport:
    """Evaluate P_{D*_{d₁}} b̃ = 0 and P_{Q*_{d₂}}(δ - 𝔏F) = 0."""
    delta = _delta_or_default(core, delta)
    cond1 = sup_norm(core.P_D_star_d1 @ core.b_tilde)
    cond2 = sup_norm(core.P_Q_star_d2 @ (delta - core.LF))
    solvable = cond1 < core.tol.solve_tol and cond2 < core.tol.solve_tol
    logger.info("solvability: cond1=%.3e cond2=%.3e solvable=%s", cond1, cond2, solvable)
    return SolvabilityReport(cond1_residual=cond1, cond2_residual=cond2, solvable=solvable)


def solve_family(core: AlgebraicCore, delta=None) -> SolutionFamily:
    """x = X_{r₁} P_{Q_{r₂}} c + X_{r₁} Q⁺(δ - 𝔏F) + F."""
    delta = _delta_or_default(core, delta)
    report = check_solvability(core, delta)
    if not report.solvable:
        raise UnsolvableProblemError(report)
    particular = core.X_r1 @ (core.Q_pinv @ (delta - core.LF)).reshape(-1, 1) + core.F
    basis = core.X_r1 @ core.P_Q_r2
    return SolutionFamily(particular=particular, basis=basis, r2=core.r2)


def residual_norms(
    p: ProblemSpec,
    x: PiecewiseMatrixFunction,
    delta=None,
    quad: QuadratureConfig = DEFAULT_QUADRATURE,
) -> ResidualNorms:
    """L₂ residual of the integro-differential equation and sup residual of 𝔏x = δ.

    The control term is not part of the check; apply a control to the problem first.
    """
    if x.shape != (p.n, 1):
        raise InvalidInputError(f"candidate solution has shape {x.shape}, expected {(p.n, 1)}")
    functional = p.functional()
    delta = p.delta() if delta is None else as_real_vector(delta, "delta")
    x_dot = x.derivative()
    moment = integrate(p.A @ x + p.B @ x_dot, quad=quad)
    residual = x_dot - p.Phi @ moment - p.f
    return ResidualNorms(
        ide_residual=l2_norm(residual, quad),
        cond_residual=sup_norm(apply(functional, x, quad)[:, 0] - delta),
    )
