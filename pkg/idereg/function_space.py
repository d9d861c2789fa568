"""Piecewise polynomial matrix functions of t on [a, b] and polynomial kernels K(t, s).

A piece is stored as an array of shape ``(degree + 1, rows, cols)`` holding
ascending power coefficients, so ``numpy.polynomial.polynomial.polyval``
evaluates a whole matrix at once. Piece ``i`` governs the open interval
between consecutive edges ``(a, *breakpoints, b)``; values at a breakpoint are
one-sided limits chosen with :class:`Side`.
"""

from __future__ import annotations

import bisect
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np
from numpy.polynomial import legendre
from numpy.polynomial import polynomial as poly

from .config import DEFAULT_QUADRATURE, QuadratureConfig
from .errors import InvalidInputError

logger = logging.getLogger(__name__)


class Side(str, Enum):
    LEFT = "left"
    RIGHT = "right"


def _trim(c: np.ndarray) -> np.ndarray:
    """Drop vanishing top-degree coefficient slices, keeping at least the constant."""
    last = c.shape[0]
    while last > 1 and not np.any(c[last - 1]):
        last -= 1
    return c[:last]


def _pad(c: np.ndarray, length: int) -> np.ndarray:
    if c.shape[0] >= length:
        return c
    extra = np.zeros((length - c.shape[0],) + c.shape[1:])
    return np.concatenate([c, extra], axis=0)


def _as_piece(c) -> np.ndarray:
    arr = np.array(c, dtype=float)
    if arr.ndim != 3 or arr.shape[0] == 0:
        raise InvalidInputError(f"piece coefficients must have shape (degree+1, rows, cols), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("piece coefficients must be finite")
    return _trim(arr)


def _poly_matmul(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    out = np.zeros((p.shape[0] + q.shape[0] - 1, p.shape[1], q.shape[2]))
    for i, pi in enumerate(p):
        out[i : i + q.shape[0]] += np.matmul(pi, q)
    return _trim(out)


@dataclass(frozen=True, eq=False)
class PiecewiseMatrixFunction:
    a: float
    b: float
    breakpoints: tuple[float, ...]
    pieces: tuple[np.ndarray, ...]

    # lets ``ndarray @ F`` fall through to __rmatmul__
    __array_ufunc__ = None

    def __post_init__(self):
        a, b = float(self.a), float(self.b)
        if not (np.isfinite(a) and np.isfinite(b) and a < b):
            raise InvalidInputError(f"domain [{a}, {b}] is not a proper interval")
        bps = tuple(float(x) for x in self.breakpoints)
        if any(not (a < x < b) for x in bps):
            raise InvalidInputError("breakpoints must lie strictly inside the domain")
        if any(x >= y for x, y in zip(bps, bps[1:])):
            raise InvalidInputError("breakpoints must be strictly increasing")
        pieces = tuple(_as_piece(c) for c in self.pieces)
        if len(pieces) != len(bps) + 1:
            raise InvalidInputError(f"{len(bps)} breakpoints need {len(bps) + 1} pieces, got {len(pieces)}")
        if len({c.shape[1:] for c in pieces}) != 1:
            raise InvalidInputError("all pieces must share one matrix shape")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "pieces", pieces)

    # -- constructors -------------------------------------------------------

    @classmethod
    def polynomial(cls, a: float, b: float, coefficients) -> "PiecewiseMatrixFunction":
        return cls(a, b, (), (coefficients,))

    @classmethod
    def constant(cls, a: float, b: float, value) -> "PiecewiseMatrixFunction":
        value = np.atleast_2d(np.asarray(value, dtype=float))
        return cls(a, b, (), (value[None],))

    @classmethod
    def zeros(cls, a: float, b: float, rows: int, cols: int) -> "PiecewiseMatrixFunction":
        return cls.constant(a, b, np.zeros((rows, cols)))

    @classmethod
    def identity(cls, a: float, b: float, n: int) -> "PiecewiseMatrixFunction":
        return cls.constant(a, b, np.eye(n))

    @classmethod
    def from_entries(cls, a: float, b: float, entries, breakpoints: Sequence[float] = ()) -> "PiecewiseMatrixFunction":
        """Build from nested lists where ``entries[i][j]`` is an ascending coefficient list.

        With breakpoints, ``entries`` is a list of such nested lists, one per piece.
        """
        if breakpoints:
            return cls(a, b, tuple(breakpoints), tuple(_entries_to_piece(e) for e in entries))
        return cls(a, b, (), (_entries_to_piece(entries),))

    # -- shape --------------------------------------------------------------

    @property
    def shape(self) -> tuple[int, int]:
        return self.pieces[0].shape[1:]

    @property
    def rows(self) -> int:
        return self.shape[0]

    @property
    def cols(self) -> int:
        return self.shape[1]

    @property
    def degree(self) -> int:
        return max(c.shape[0] for c in self.pieces) - 1

    @property
    def edges(self) -> tuple[float, ...]:
        return (self.a, *self.breakpoints, self.b)

    @property
    def intervals(self) -> list[tuple[float, float]]:
        e = self.edges
        return list(zip(e[:-1], e[1:]))

    # -- evaluation ---------------------------------------------------------

    def piece_index(self, t: float, side: Side = Side.RIGHT) -> int:
        if side is Side.LEFT and t > self.a:
            return bisect.bisect_left(self.breakpoints, t)
        return min(bisect.bisect_right(self.breakpoints, t), len(self.pieces) - 1)

    def eval_at(self, t: float, side: Side = Side.RIGHT) -> np.ndarray:
        t = float(t)
        if not (self.a <= t <= self.b):
            raise InvalidInputError(f"t = {t} outside domain [{self.a}, {self.b}]")
        if t == self.b:
            side = Side.LEFT
        return poly.polyval(t, self.pieces[self.piece_index(t, Side(side))])

    __call__ = eval_at

    def sample(self, ts: Iterable[float], side: Side = Side.RIGHT) -> np.ndarray:
        """Values at ``ts`` stacked along a leading axis."""
        values = [self.eval_at(t, side) for t in ts]
        if not values:
            return np.zeros((0, self.rows, self.cols))
        return np.stack(values)

    # -- structure ----------------------------------------------------------

    def refine(self, breakpoints: Iterable[float]) -> "PiecewiseMatrixFunction":
        """Same function re-expressed over the union of its breakpoints and ``breakpoints``."""
        merged = tuple(sorted(set(self.breakpoints).union(float(x) for x in breakpoints)))
        if merged == self.breakpoints:
            return self
        edges = (self.a, *merged, self.b)
        pieces = [self.pieces[self.piece_index(0.5 * (lo + hi))] for lo, hi in zip(edges[:-1], edges[1:])]
        return PiecewiseMatrixFunction(self.a, self.b, merged, tuple(pieces))

    def map_pieces(self, fn) -> "PiecewiseMatrixFunction":
        return PiecewiseMatrixFunction(self.a, self.b, self.breakpoints, tuple(fn(c) for c in self.pieces))

    def transpose(self) -> "PiecewiseMatrixFunction":
        return self.map_pieces(lambda c: np.transpose(c, (0, 2, 1)))

    @property
    def T(self) -> "PiecewiseMatrixFunction":
        return self.transpose()

    def columns(self, index) -> "PiecewiseMatrixFunction":
        return self.map_pieces(lambda c: c[:, :, index].reshape(c.shape[0], c.shape[1], -1))

    def derivative(self) -> "PiecewiseMatrixFunction":
        return self.map_pieces(lambda c: poly.polyder(c, axis=0) if c.shape[0] > 1 else np.zeros_like(c))

    def antiderivative(self) -> "PiecewiseMatrixFunction":
        return antiderivative(self)

    # -- arithmetic ---------------------------------------------------------

    def _same_domain(self, other: "PiecewiseMatrixFunction"):
        if (self.a, self.b) != (other.a, other.b):
            raise InvalidInputError(f"domains [{self.a}, {self.b}] and [{other.a}, {other.b}] differ")

    def __add__(self, other):
        if isinstance(other, PiecewiseMatrixFunction):
            return combine(1.0, self, 1.0, other)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, PiecewiseMatrixFunction):
            return combine(1.0, self, -1.0, other)
        return NotImplemented

    def __neg__(self):
        return self.scale(-1.0)

    def scale(self, alpha: float) -> "PiecewiseMatrixFunction":
        return self.map_pieces(lambda c: float(alpha) * c)

    def __mul__(self, alpha):
        if np.isscalar(alpha):
            return self.scale(alpha)
        return NotImplemented

    __rmul__ = __mul__

    def __matmul__(self, other):
        if isinstance(other, PiecewiseMatrixFunction):
            return matmul(self, other)
        M = np.atleast_2d(np.asarray(other, dtype=float))
        if M.shape[0] != self.cols:
            raise InvalidInputError(f"cannot multiply {self.shape} function by {M.shape} matrix")
        return self.map_pieces(lambda c: np.matmul(c, M))

    def __rmatmul__(self, other):
        M = np.atleast_2d(np.asarray(other, dtype=float))
        if M.shape[1] != self.rows:
            raise InvalidInputError(f"cannot multiply {M.shape} matrix by {self.shape} function")
        return self.map_pieces(lambda c: np.matmul(M, c))

    def __repr__(self) -> str:
        return (
            f"PiecewiseMatrixFunction({self.rows}x{self.cols} on [{self.a}, {self.b}], "
            f"breakpoints={list(self.breakpoints)}, degree={self.degree})"
        )


def _entries_to_piece(entries) -> np.ndarray:
    rows = len(entries)
    cols = len(entries[0]) if rows else 0
    if any(len(row) != cols for row in entries):
        raise InvalidInputError("ragged matrix rows in coefficient entries")
    length = max([len(e) for row in entries for e in row] + [1])
    piece = np.zeros((length, rows, cols))
    for i, row in enumerate(entries):
        for j, coeffs in enumerate(row):
            coeffs = np.atleast_1d(np.asarray(coeffs, dtype=float))
            piece[: coeffs.shape[0], i, j] = coeffs
    return piece


def _aligned(functions: Sequence[PiecewiseMatrixFunction]) -> list[PiecewiseMatrixFunction]:
    first = functions[0]
    for f in functions[1:]:
        first._same_domain(f)
    merged = sorted(set().union(*(f.breakpoints for f in functions)))
    return [f.refine(merged) for f in functions]


def combine(alpha: float, F: PiecewiseMatrixFunction, beta: float, G: PiecewiseMatrixFunction) -> PiecewiseMatrixFunction:
    """Pointwise alpha·F + beta·G over the union of both breakpoint sets."""
    if F.shape != G.shape:
        raise InvalidInputError(f"cannot combine {F.shape} and {G.shape} functions")
    F, G = _aligned([F, G])
    pieces = []
    for p, q in zip(F.pieces, G.pieces):
        length = max(p.shape[0], q.shape[0])
        pieces.append(_trim(alpha * _pad(p, length) + beta * _pad(q, length)))
    return PiecewiseMatrixFunction(F.a, F.b, F.breakpoints, tuple(pieces))


def matmul(F: PiecewiseMatrixFunction, G: PiecewiseMatrixFunction) -> PiecewiseMatrixFunction:
    """Pointwise matrix product F(t)·G(t)."""
    if F.cols != G.rows:
        raise InvalidInputError(f"cannot multiply {F.shape} and {G.shape} functions")
    F, G = _aligned([F, G])
    pieces = tuple(_poly_matmul(p, q) for p, q in zip(F.pieces, G.pieces))
    return PiecewiseMatrixFunction(F.a, F.b, F.breakpoints, pieces)


def hstack(functions: Sequence[PiecewiseMatrixFunction]) -> PiecewiseMatrixFunction:
    functions = _aligned(list(functions))
    rows = {f.rows for f in functions}
    if len(rows) != 1:
        raise InvalidInputError("hstack needs functions with equal row counts")
    pieces = []
    for parts in zip(*(f.pieces for f in functions)):
        length = max(p.shape[0] for p in parts)
        pieces.append(np.concatenate([_pad(p, length) for p in parts], axis=2))
    first = functions[0]
    return PiecewiseMatrixFunction(first.a, first.b, first.breakpoints, tuple(pieces))


def vstack(functions: Sequence[PiecewiseMatrixFunction]) -> PiecewiseMatrixFunction:
    return hstack([f.transpose() for f in functions]).transpose()


def _panels(F: PiecewiseMatrixFunction, lo: float, hi: float) -> list[tuple[float, float]]:
    edges = [lo, *(x for x in F.breakpoints if lo < x < hi), hi]
    return [(left, right) for left, right in zip(edges[:-1], edges[1:]) if right > left]


def integrate(
    F: PiecewiseMatrixFunction,
    lo: float | None = None,
    hi: float | None = None,
    quad: QuadratureConfig = DEFAULT_QUADRATURE,
) -> np.ndarray:
    """Entrywise integral over [lo, hi] by composite Gauss-Legendre, one panel per piece."""
    lo = F.a if lo is None else float(lo)
    hi = F.b if hi is None else float(hi)
    if lo > hi:
        raise InvalidInputError(f"reversed integration bounds [{lo}, {hi}]")
    if lo < F.a or hi > F.b:
        raise InvalidInputError(f"integration bounds [{lo}, {hi}] leave the domain [{F.a}, {F.b}]")
    nodes, weights = legendre.leggauss(quad.gauss_order)
    total = np.zeros(F.shape)
    for left, right in _panels(F, lo, hi):
        half, mid = 0.5 * (right - left), 0.5 * (right + left)
        coeffs = F.pieces[F.piece_index(mid)]
        total += half * (poly.polyval(mid + half * nodes, coeffs) @ weights)
    return total


def antiderivative(F: PiecewiseMatrixFunction) -> PiecewiseMatrixFunction:
    """G(t) = ∫_a^t F(s) ds, continuous across breakpoints."""
    pieces = []
    offset = np.zeros(F.shape)
    for (left, right), c in zip(F.intervals, F.pieces):
        integral = poly.polyint(c, lbnd=left, axis=0)
        integral[0] += offset
        pieces.append(integral)
        offset = poly.polyval(right, integral)
    return PiecewiseMatrixFunction(F.a, F.b, F.breakpoints, tuple(pieces))


def l2_norm(F: PiecewiseMatrixFunction, quad: QuadratureConfig = DEFAULT_QUADRATURE) -> float:
    """sqrt(∫ trace F(t)ᵀF(t) dt)."""
    gram = integrate(matmul(F.transpose(), F), quad=quad)
    return float(np.sqrt(max(np.trace(gram), 0.0)))


def step_basis(a: float, b: float, tau: float, n: int) -> PiecewiseMatrixFunction:
    """Jump carrier: zero up to and including τ (left limit), I_n after."""
    if not (a < tau < b):
        raise InvalidInputError(f"impulse instant {tau} must lie strictly inside ({a}, {b})")
    return PiecewiseMatrixFunction(a, b, (tau,), (np.zeros((1, n, n)), np.eye(n)[None]))


def fit_grid(ts, values, degree: int = 6, a: float | None = None, b: float | None = None) -> PiecewiseMatrixFunction:
    """Least-squares polynomial fit of samples ``values[k] ≈ F(ts[k])`` on a single piece."""
    ts = np.asarray(ts, dtype=float).reshape(-1)
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values.reshape(-1, 1, 1)
    elif values.ndim == 2:
        values = values[:, :, None]
    if values.shape[0] != ts.shape[0]:
        raise InvalidInputError(f"{ts.shape[0]} sample nodes but {values.shape[0]} sample values")
    if ts.shape[0] < degree + 1:
        raise InvalidInputError(f"degree {degree} fit needs at least {degree + 1} samples, got {ts.shape[0]}")
    if not (np.all(np.isfinite(ts)) and np.all(np.isfinite(values))):
        raise InvalidInputError("grid samples must be finite")
    a = float(ts.min()) if a is None else a
    b = float(ts.max()) if b is None else b
    rows, cols = values.shape[1:]
    coeffs = poly.polyfit(ts, values.reshape(ts.shape[0], -1), degree)
    logger.debug("fitted %dx%d grid of %d samples with degree %d", rows, cols, ts.shape[0], degree)
    return PiecewiseMatrixFunction.polynomial(a, b, coeffs.reshape(degree + 1, rows, cols))


@dataclass(frozen=True, eq=False)
class BivariateKernel:
    """K(t, s) = Σ c_kl t^k s^l with coefficients of shape (deg_t+1, deg_s+1, rows, cols)."""

    a: float
    b: float
    coefficients: np.ndarray

    def __post_init__(self):
        c = np.array(self.coefficients, dtype=float)
        if c.ndim != 4 or c.shape[0] == 0 or c.shape[1] == 0:
            raise InvalidInputError(f"kernel coefficients must have shape (kt, ks, rows, cols), got {c.shape}")
        if not np.all(np.isfinite(c)):
            raise InvalidInputError("kernel coefficients must be finite")
        if not float(self.a) < float(self.b):
            raise InvalidInputError("kernel domain is not a proper interval")
        object.__setattr__(self, "coefficients", c)

    @classmethod
    def from_entries(cls, a: float, b: float, entries) -> "BivariateKernel":
        """``entries[i][j]`` is the grid c_kl of entry (i, j)."""
        rows = len(entries)
        cols = len(entries[0]) if rows else 0
        grids = [[np.atleast_2d(np.asarray(g, dtype=float)) for g in row] for row in entries]
        if any(len(row) != cols for row in grids):
            raise InvalidInputError("ragged kernel entries")
        kt = max([g.shape[0] for row in grids for g in row] + [1])
        ks = max([g.shape[1] for row in grids for g in row] + [1])
        c = np.zeros((kt, ks, rows, cols))
        for i, row in enumerate(grids):
            for j, g in enumerate(row):
                c[: g.shape[0], : g.shape[1], i, j] = g
        return cls(a, b, c)

    @property
    def shape(self) -> tuple[int, int]:
        return self.coefficients.shape[2:]

    def __call__(self, t: float, s: float) -> np.ndarray:
        tp = t ** np.arange(self.coefficients.shape[0])
        sp = s ** np.arange(self.coefficients.shape[1])
        return np.einsum("klij,k,l->ij", self.coefficients, tp, sp)

    def scaled(self, factor: float) -> "BivariateKernel":
        return BivariateKernel(self.a, self.b, float(factor) * self.coefficients)


def collapse_kernel(K: BivariateKernel) -> PiecewiseMatrixFunction:
    """k(t) = ∫_a^b K(t, s) ds, integrated exactly in s."""
    powers = np.arange(1, K.coefficients.shape[1] + 1)
    moments = (K.b**powers - K.a**powers) / powers
    return PiecewiseMatrixFunction.polynomial(K.a, K.b, np.einsum("klij,l->kij", K.coefficients, moments))
