"""Brute-force verifier: collocation of the full problem and dense least squares.

The oracle only reads the problem data and its functionals. Unknowns are the
values of x at uniformly spaced nodes on every block between consecutive
impulse instants and data breakpoints; blocks are coupled only through the
integral term, the functional rows and, where x has to be continuous,
explicit continuity rows.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np
import pandas as pd
import scipy.linalg
from numpy.polynomial import legendre
from scipy.interpolate import BarycentricInterpolator, KroghInterpolator

from .config import DEFAULT_ORACLE, JumpModel, OracleConfig
from .errors import InvalidInputError
from .function_space import PiecewiseMatrixFunction, Side, collapse_kernel, fit_grid
from .generating_solver import ProblemSpec, SolutionFamily
from .linear_algebra import as_real_vector

logger = logging.getLogger(__name__)

_LSTSQ_CUTOFF = 1e-12


class OracleVerdict(str, Enum):
    SOLVABLE = "solvable"
    UNSOLVABLE = "unsolvable"
    INDETERMINATE = "indeterminate"


@dataclass(frozen=True, eq=False)
class OracleGrid:
    """Nodal values of a discrete solution; ``values[j]`` is x at ``ts[j]`` from ``sides[j]``."""

    ts: np.ndarray
    sides: tuple[Side, ...]
    values: np.ndarray
    block: np.ndarray
    edges: tuple[float, ...]

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame({"t": self.ts, "side": [s.value for s in self.sides]})
        for i in range(self.values.shape[1]):
            frame[f"x{i + 1}"] = self.values[:, i]
        return frame


@dataclass(frozen=True, eq=False)
class OracleSolution:
    min_residual: float
    grid: OracleGrid


def _difference_matrix(nodes: np.ndarray, width: int) -> np.ndarray:
    """First-derivative matrix on ``nodes`` from local interpolation stencils."""
    count = nodes.shape[0]
    width = min(width, count)
    h = nodes[1] - nodes[0]
    interp = KroghInterpolator(np.arange(width, dtype=float), np.eye(width))
    Dm = np.zeros((count, count))
    for row in range(count):
        start = min(max(row - width // 2, 0), count - width)
        Dm[row, start : start + width] = interp.derivative(float(row - start)) / h
    return Dm


def _quadrature_weights(nodes: np.ndarray, width: int) -> tuple[np.ndarray, np.ndarray]:
    """Trapezoid weights and their end-corrected counterpart.

    The corrected rule changes the first and last ``r`` weights so that
    Legendre polynomials of degree < 2r integrate exactly.
    """
    count = nodes.shape[0]
    lo, hi = nodes[0], nodes[-1]
    trapezoid = np.full(count, (hi - lo) / (count - 1))
    trapezoid[[0, -1]] *= 0.5

    r = min((width + 1) // 2, count // 2)
    corrected_idx = np.r_[np.arange(r), np.arange(count - r, count)]
    x = (2.0 * nodes - (lo + hi)) / (hi - lo)
    V = legendre.legvander(x, 2 * r - 1).T
    moments = np.zeros(2 * r)
    moments[0] = hi - lo
    correction = np.linalg.solve(V[:, corrected_idx], moments - V @ trapezoid)
    corrected = trapezoid.copy()
    corrected[corrected_idx] += correction
    return trapezoid, corrected


def _block_edges(p: ProblemSpec) -> tuple[tuple[float, ...], set[float]]:
    """Block edges and the subset of interior edges where x must stay continuous."""
    data_breaks = set(p.A.breakpoints) | set(p.B.breakpoints) | set(p.Phi.breakpoints) | set(p.f.breakpoints)
    if p.ell.weight is not None:
        data_breaks |= set(p.ell.weight.breakpoints)
    taus = set(p.impulse_instants)
    interior = sorted(data_breaks | taus)
    if p.jump_model is JumpModel.NONE:
        continuous = set(interior)
    else:
        continuous = data_breaks - taus
    return (p.a, *interior, p.b), continuous


class _Discretization:
    """Node layout and the dense least-squares system of one problem."""

    def __init__(self, p: ProblemSpec, cfg: OracleConfig):
        self.p = p
        self.cfg = cfg
        self.edges, self.continuous = _block_edges(p)
        M = cfg.nodes_per_subinterval
        self.M = M
        self.blocks = []
        for lo, hi in zip(self.edges[:-1], self.edges[1:]):
            nodes = np.linspace(lo, hi, M)
            trapezoid, corrected = _quadrature_weights(nodes, cfg.stencil_width)
            self.blocks.append(
                {
                    "nodes": nodes,
                    "D": _difference_matrix(nodes, cfg.stencil_width),
                    "trapezoid": trapezoid,
                    "weights": corrected,
                }
            )
        self.n = p.n
        self.unknowns = len(self.blocks) * M * self.n

    def columns(self, block: int, node: int) -> slice:
        start = (block * self.M + node) * self.n
        return slice(start, start + self.n)

    def node_side(self, node: int) -> Side:
        return Side.LEFT if node == self.M - 1 else Side.RIGHT

    def derivative_rows(self, block: int, node: int) -> np.ndarray:
        """Rows (n × unknowns) mapping the unknowns to ẋ at one node."""
        out = np.zeros((self.n, self.unknowns))
        Dm = self.blocks[block]["D"]
        eye = np.eye(self.n)
        for col in np.flatnonzero(Dm[node]):
            out[:, self.columns(block, col)] += Dm[node, col] * eye
        return out

    def value_rows(self, t: float, side: Side) -> np.ndarray:
        """Rows (n × unknowns) giving x(t±) by local interpolation."""
        out = np.zeros((self.n, self.unknowns))
        if t == self.p.b:
            side = Side.LEFT
        if t == self.p.a:
            side = Side.RIGHT
        block = next(
            i
            for i, (lo, hi) in enumerate(zip(self.edges[:-1], self.edges[1:]))
            if (lo <= t < hi if side is Side.RIGHT else lo < t <= hi)
        )
        nodes = self.blocks[block]["nodes"]
        hit = np.flatnonzero(np.isclose(nodes, t, rtol=0.0, atol=1e-14 * max(1.0, abs(t))))
        if hit.size:
            out[:, self.columns(block, int(hit[0]))] = np.eye(self.n)
            return out
        width = min(self.cfg.stencil_width, self.M)
        nearest = int(np.argmin(np.abs(nodes - t)))
        start = min(max(nearest - width // 2, 0), self.M - width)
        stencil = nodes[start : start + width]
        weights = BarycentricInterpolator(stencil, np.eye(width))(t).reshape(-1)
        for j, w in enumerate(weights):
            out[:, self.columns(block, start + j)] += w * np.eye(self.n)
        return out

    def assemble(self, delta: np.ndarray, u: np.ndarray | None):
        p = self.p
        forcing = p.f
        if u is not None and p.kernel is not None:
            forcing = forcing + collapse_kernel(p.kernel) @ u.reshape(-1, 1)

        # moment map z ↦ ∫ (A x + B ẋ) ds
        moment = np.zeros((p.m, self.unknowns))
        derivatives = {}
        for bi, block in enumerate(self.blocks):
            for j, t in enumerate(block["nodes"]):
                side = self.node_side(j)
                dx = self.derivative_rows(bi, j)
                derivatives[bi, j] = dx
                w = block["weights"][j]
                moment[:, self.columns(bi, j)] += w * p.A.eval_at(t, side)
                moment += w * (p.B.eval_at(t, side) @ dx)

        rows, rhs = [], []
        for bi, block in enumerate(self.blocks):
            for j, t in enumerate(block["nodes"]):
                side = self.node_side(j)
                scale = np.sqrt(block["trapezoid"][j])
                rows.append(scale * (derivatives[bi, j] - p.Phi.eval_at(t, side) @ moment))
                rhs.append(scale * forcing.eval_at(t, side)[:, 0])

        for bi, edge in enumerate(self.edges[1:-1]):
            if edge in self.continuous:
                jump = np.zeros((self.n, self.unknowns))
                jump[:, self.columns(bi + 1, 0)] = np.eye(self.n)
                jump[:, self.columns(bi, self.M - 1)] -= np.eye(self.n)
                rows.append(jump)
                rhs.append(np.zeros(self.n))

        functional = p.functional()
        L = np.zeros((functional.out_dim, self.unknowns))
        for term in functional.point_terms:
            L += term.matrix @ self.value_rows(term.t, term.side)
        if functional.weight is not None:
            for bi, block in enumerate(self.blocks):
                for j, t in enumerate(block["nodes"]):
                    Wt = functional.weight.eval_at(t, self.node_side(j))
                    L[:, self.columns(bi, j)] += block["weights"][j] * Wt
        rows.append(L)
        rhs.append(delta)
        return np.vstack(rows), np.concatenate(rhs)

    def grid(self, z: np.ndarray) -> OracleGrid:
        ts, sides, block_ids = [], [], []
        for bi, block in enumerate(self.blocks):
            for j, t in enumerate(block["nodes"]):
                ts.append(t)
                sides.append(self.node_side(j))
                block_ids.append(bi)
        return OracleGrid(
            ts=np.asarray(ts),
            sides=tuple(sides),
            values=z.reshape(-1, self.n),
            block=np.asarray(block_ids),
            edges=self.edges,
        )


def oracle_solve(p: ProblemSpec, delta=None, u=None, cfg: OracleConfig = DEFAULT_ORACLE) -> OracleSolution:
    """Least-squares collocation of the full problem; the residual approximates ‖IDE residual‖_{L₂} ⊕ ‖𝔏x - δ‖."""
    delta = p.delta() if delta is None else as_real_vector(delta, "delta")
    if delta.shape != (p.k + p.q,):
        raise InvalidInputError(f"delta has length {delta.shape[0]}, expected {p.k + p.q}")
    u = None if u is None else as_real_vector(u, "control")
    disc = _Discretization(p, cfg)
    matrix, rhs = disc.assemble(delta, u)
    z, *_ = scipy.linalg.lstsq(matrix, rhs, cond=_LSTSQ_CUTOFF, lapack_driver="gelsd")
    residual = float(np.linalg.norm(matrix @ z - rhs))
    logger.info("oracle: %d blocks x %d nodes, system %s, min residual %.3e", len(disc.blocks), disc.M, matrix.shape, residual)
    return OracleSolution(min_residual=residual, grid=disc.grid(z))


def classify(min_residual: float, cfg: OracleConfig = DEFAULT_ORACLE) -> OracleVerdict:
    if min_residual < cfg.residual_tol:
        return OracleVerdict.SOLVABLE
    if min_residual > cfg.margin_band * cfg.residual_tol:
        return OracleVerdict.UNSOLVABLE
    return OracleVerdict.INDETERMINATE


def oracle_solvable(p: ProblemSpec, delta=None, u=None, cfg: OracleConfig = DEFAULT_ORACLE) -> OracleVerdict:
    return classify(oracle_solve(p, delta, u, cfg).min_residual, cfg)


def family_distance(fam: SolutionFamily, grid: OracleGrid) -> float:
    """min_c max_nodes |x(t, c) - grid|, with c fitted by linear least squares."""
    if fam.particular.rows != grid.values.shape[1]:
        raise InvalidInputError("family and grid have different state dimensions")
    target = np.concatenate([grid.values[j] - fam.particular.eval_at(t, s)[:, 0] for j, (t, s) in enumerate(zip(grid.ts, grid.sides))])
    if fam.r2 == 0:
        return float(np.max(np.abs(target), initial=0.0))
    basis = np.vstack([fam.basis.eval_at(t, s) for t, s in zip(grid.ts, grid.sides)])
    c, *_ = scipy.linalg.lstsq(basis, target)
    return float(np.max(np.abs(basis @ c - target), initial=0.0))


def grid_to_function(grid: OracleGrid, degree: int = 6) -> PiecewiseMatrixFunction:
    """Per-block polynomial fit of a grid; breakpoints at the block edges."""
    pieces = []
    a, b = grid.edges[0], grid.edges[-1]
    for bi in range(len(grid.edges) - 1):
        mask = grid.block == bi
        fitted = fit_grid(grid.ts[mask], grid.values[mask][:, :, None], degree, grid.edges[bi], grid.edges[bi + 1])
        pieces.append(fitted.pieces[0])
    return PiecewiseMatrixFunction(a, b, grid.edges[1:-1], tuple(pieces))
