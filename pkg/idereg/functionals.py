"""Linear vector functionals: boundary conditions ℓ, impulse interfaces φ and their stack 𝔏."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .config import DEFAULT_QUADRATURE, DEFAULT_TOLERANCE, QuadratureConfig
from .errors import InvalidImpulseError, InvalidInputError
from .function_space import PiecewiseMatrixFunction, Side, integrate, l2_norm, matmul
from .linear_algebra import as_real_matrix, as_real_vector, numerical_rank


@dataclass(frozen=True, eq=False)
class PointTerm:
    """The term M·x(t±) of a functional."""

    t: float
    side: Side
    matrix: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "side", Side(self.side))
        object.__setattr__(self, "matrix", as_real_matrix(self.matrix, "point term matrix"))


@dataclass(frozen=True, eq=False)
class LinearVectorFunctional:
    """x ↦ Σ_j M_j x(t_j ±) + ∫_a^b W(t) x(t) dt with ``out_dim`` rows acting on R^width."""

    out_dim: int
    width: int
    point_terms: tuple[PointTerm, ...] = ()
    weight: PiecewiseMatrixFunction | None = None

    def __post_init__(self):
        object.__setattr__(self, "point_terms", tuple(self.point_terms))
        for term in self.point_terms:
            if term.matrix.shape != (self.out_dim, self.width):
                raise InvalidInputError(
                    f"point term at t={term.t} has shape {term.matrix.shape}, "
                    f"expected {(self.out_dim, self.width)}"
                )
        if self.weight is not None and self.weight.shape != (self.out_dim, self.width):
            raise InvalidInputError(f"integral weight has shape {self.weight.shape}, expected {(self.out_dim, self.width)}")

    def apply(self, X: PiecewiseMatrixFunction, quad: QuadratureConfig = DEFAULT_QUADRATURE) -> np.ndarray:
        return apply(self, X, quad)


@dataclass(frozen=True, eq=False)
class ImpulseRecord:
    """Impulse condition E(x(τ+) - x(τ-)) = S x(τ-) + γ with rank(E + S) = k < n."""

    tau: float
    E: np.ndarray
    S: np.ndarray
    gamma: np.ndarray = field(default=None)

    def __post_init__(self):
        E = as_real_matrix(self.E, "impulse matrix E")
        S = as_real_matrix(self.S, "impulse matrix S")
        if E.shape != S.shape:
            raise InvalidImpulseError(f"E has shape {E.shape} but S has shape {S.shape}")
        k, n = E.shape
        gamma = np.zeros(k) if self.gamma is None else as_real_vector(self.gamma, "gamma")
        if gamma.shape != (k,):
            raise InvalidImpulseError(f"gamma has length {gamma.shape[0]}, expected {k}")
        if not k < n:
            raise InvalidImpulseError(f"impulse at τ={self.tau} has k={k} rows, which must be fewer than n={n}")
        rank = numerical_rank(E + S, DEFAULT_TOLERANCE)
        if rank != k:
            raise InvalidImpulseError(f"impulse at τ={self.tau} has rank(E+S)={rank}, declared k={k}")
        object.__setattr__(self, "tau", float(self.tau))
        object.__setattr__(self, "E", E)
        object.__setattr__(self, "S", S)
        object.__setattr__(self, "gamma", gamma)

    @property
    def k(self) -> int:
        return self.E.shape[0]

    @property
    def n(self) -> int:
        return self.E.shape[1]


def impulse_functional(imp: ImpulseRecord) -> LinearVectorFunctional:
    """φ_i x = E_i x(τ_i+) - (E_i + S_i) x(τ_i-)."""
    return LinearVectorFunctional(
        out_dim=imp.k,
        width=imp.n,
        point_terms=(
            PointTerm(imp.tau, Side.RIGHT, imp.E),
            PointTerm(imp.tau, Side.LEFT, -(imp.E + imp.S)),
        ),
    )


def _padded_rows(M: np.ndarray, above: int, below: int) -> np.ndarray:
    return np.vstack([np.zeros((above, M.shape[1])), M, np.zeros((below, M.shape[1]))])


def stack(parts: Sequence[LinearVectorFunctional], width: int | None = None) -> LinearVectorFunctional:
    """Row-concatenate functionals, keeping their order."""
    parts = list(parts)
    if not parts:
        return LinearVectorFunctional(out_dim=0, width=0 if width is None else width)
    widths = {p.width for p in parts}
    if width is not None:
        widths.add(width)
    if len(widths) != 1:
        raise InvalidInputError(f"cannot stack functionals of widths {sorted(widths)}")
    width = widths.pop()
    total = sum(p.out_dim for p in parts)

    terms: list[PointTerm] = []
    weights: list[PiecewiseMatrixFunction] = []
    offset = 0
    for part in parts:
        below = total - offset - part.out_dim
        for term in part.point_terms:
            terms.append(PointTerm(term.t, term.side, _padded_rows(term.matrix, offset, below)))
        if part.weight is not None:
            weights.append(_padded_rows(np.eye(part.out_dim), offset, below) @ part.weight)
        offset += part.out_dim

    weight = None
    for w in weights:
        weight = w if weight is None else weight + w
    return LinearVectorFunctional(out_dim=total, width=width, point_terms=tuple(terms), weight=weight)


def apply(
    L: LinearVectorFunctional,
    X: PiecewiseMatrixFunction,
    quad: QuadratureConfig = DEFAULT_QUADRATURE,
) -> np.ndarray:
    """Apply ``L`` to each column of ``X``; the result is out_dim × X.cols."""
    if X.rows != L.width:
        raise InvalidInputError(f"functional of width {L.width} applied to a function with {X.rows} rows")
    out = np.zeros((L.out_dim, X.cols))
    for term in L.point_terms:
        out += term.matrix @ X.eval_at(term.t, term.side)
    if L.weight is not None:
        out += integrate(matmul(L.weight, X), quad=quad)
    return out


def magnitude(
    L: LinearVectorFunctional,
    X: PiecewiseMatrixFunction,
    quad: QuadratureConfig = DEFAULT_QUADRATURE,
) -> float:
    """Upper bound Σ_j ‖M_j‖·‖X(t_j±)‖ + ‖W‖₂·‖X‖₂ of the Frobenius norm of apply(L, X).

    It measures the operands before any cancellation between the terms of ``L``.
    """
    if X.rows != L.width:
        raise InvalidInputError(f"functional of width {L.width} applied to a function with {X.rows} rows")
    if X.cols == 0:
        return 0.0
    total = 0.0
    for term in L.point_terms:
        total += float(np.linalg.norm(term.matrix)) * float(np.linalg.norm(X.eval_at(term.t, term.side)))
    if L.weight is not None:
        total += l2_norm(L.weight, quad) * l2_norm(X, quad)
    return total


def build_delta(impulses: Iterable[ImpulseRecord], alpha) -> np.ndarray:
    """δ = (γ_1, …, γ_p, α), in the same order as the stacked functional."""
    blocks = [imp.gamma for imp in impulses]
    blocks.append(as_real_vector(alpha, "alpha"))
    return np.concatenate(blocks)


def resolve_side(t: float, side: Side | str | None, singular_points: Iterable[float], b: float) -> Side:
    """Side of a point term; a missing side is only allowed away from impulse instants and breakpoints."""
    if side is not None:
        return Side(side)
    if any(t == s for s in singular_points):
        raise InvalidInputError(f"point term at t={t} sits on a breakpoint and must declare a side")
    return Side.LEFT if t == b else Side.RIGHT
