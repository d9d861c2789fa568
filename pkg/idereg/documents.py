"""JSON problem documents and analysis reports.

A document mirrors ProblemSpec with every matrix function spelled out as
coefficients or samples. Structural errors surface as pydantic
``ValidationError``; violations of the problem invariants surface as
``InvalidInputError`` when the document is turned into a ProblemSpec.
"""

from __future__ import annotations

import logging
from typing import Annotated, List, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .config import JumpModel
from .errors import InvalidInputError
from .function_space import BivariateKernel, PiecewiseMatrixFunction, fit_grid
from .functionals import ImpulseRecord, LinearVectorFunctional, PointTerm, resolve_side
from .generating_solver import ProblemSpec

logger = logging.getLogger(__name__)

DEFAULT_FIT_DEGREE = 6

Coefficients = List[List[List[float]]]


class _Document(BaseModel):
    model_config = ConfigDict(extra="forbid")


class PolyFunction(_Document):
    """Entry (i, j) is an ascending coefficient list in t."""

    kind: Literal["poly"]
    coeffs: Coefficients


class PiecewiseFunction(_Document):
    kind: Literal["piecewise"]
    breakpoints: List[float]
    pieces: List[Coefficients]


class GridFunction(_Document):
    """Samples ``values[k]`` at ``ts[k]``, least-squares fitted to one polynomial."""

    kind: Literal["grid"]
    ts: List[float]
    values: list
    fit_degree: Optional[int] = Field(None, ge=0)


FunctionDocument = Annotated[Union[PolyFunction, PiecewiseFunction, GridFunction], Field(discriminator="kind")]
WeightDocument = Annotated[Union[PolyFunction, PiecewiseFunction], Field(discriminator="kind")]


class KernelDocument(_Document):
    """Entry (i, j) is the grid c_kl of t^k s^l."""

    kind: Literal["poly2"]
    coeffs: List[List[List[List[float]]]]


class ImpulseDocument(_Document):
    tau: float
    E: List[List[float]]
    S: List[List[float]]
    gamma: Optional[List[float]] = None


class PointDocument(_Document):
    t: float
    side: Optional[Literal["left", "right"]] = None
    matrix: List[List[float]]


class BoundaryDocument(_Document):
    points: List[PointDocument] = []
    integral: Optional[WeightDocument] = None


class OptionsDocument(_Document):
    """Document-level counterparts of the command-line flags."""

    jump_model: Optional[JumpModel] = None
    gauss_order: Optional[int] = None
    rank_tol_rel: Optional[float] = None
    solve_tol: Optional[float] = None
    samples: Optional[int] = None
    params: Optional[List[float]] = None
    objective: Optional[Literal["minnorm", "weighted"]] = None
    weight: Optional[List[List[float]]] = None
    uref: Optional[List[float]] = None
    oracle_nodes: Optional[int] = None
    fit_degree: Optional[int] = Field(None, ge=0)


class DimsDocument(_Document):
    m: int = Field(ge=1)
    n: int = Field(ge=1)


class ProblemDocument(_Document):
    interval: List[float] = Field(min_length=2, max_length=2)
    dims: Optional[DimsDocument] = None
    A: FunctionDocument
    B: FunctionDocument
    Phi: FunctionDocument
    f: FunctionDocument
    K: Optional[KernelDocument] = None
    impulses: List[ImpulseDocument] = []
    ell: BoundaryDocument
    alpha: List[float]
    options: OptionsDocument = OptionsDocument()

    def to_problem(self, jump_model: JumpModel | None = None, fit_degree: int | None = None) -> ProblemSpec:
        """Build and validate the ProblemSpec; arguments override the options block."""
        a, b = self.interval
        if fit_degree is None:
            fit_degree = DEFAULT_FIT_DEGREE if self.options.fit_degree is None else self.options.fit_degree
        if jump_model is None:
            jump_model = self.options.jump_model or JumpModel.FREE

        functions = {
            name: _build_function(getattr(self, name), a, b, fit_degree, name)
            for name in ("A", "B", "Phi", "f")
        }
        if 0 in functions["A"].shape:
            raise InvalidInputError("A must have at least one row and one column")
        if self.dims is not None and functions["A"].shape != (self.dims.m, self.dims.n):
            raise InvalidInputError(f"A has shape {functions['A'].shape}, but dims declare {(self.dims.m, self.dims.n)}")

        impulses = tuple(ImpulseRecord(imp.tau, imp.E, imp.S, imp.gamma) for imp in self.impulses)
        singular = {imp.tau for imp in impulses}
        for fn in functions.values():
            singular.update(fn.breakpoints)

        n = functions["A"].cols
        q = len(self.alpha)
        terms = tuple(
            PointTerm(pt.t, resolve_side(pt.t, pt.side, singular, b), _as_matrix(pt.matrix, "ell point matrix"))
            for pt in self.ell.points
        )
        weight = None if self.ell.integral is None else _build_function(self.ell.integral, a, b, fit_degree, "ell integral")
        ell = LinearVectorFunctional(out_dim=q, width=n, point_terms=terms, weight=weight)

        kernel = None if self.K is None else BivariateKernel.from_entries(a, b, self.K.coeffs)
        problem = ProblemSpec(
            a=a,
            b=b,
            A=functions["A"],
            B=functions["B"],
            Phi=functions["Phi"],
            f=functions["f"],
            ell=ell,
            alpha=np.asarray(self.alpha, dtype=float),
            impulses=impulses,
            kernel=kernel,
            jump_model=jump_model,
        )
        logger.info("loaded problem m=%d n=%d p=%d q=%d on [%g, %g]", problem.m, problem.n, problem.p, problem.q, a, b)
        return problem


def _as_matrix(rows, name: str) -> np.ndarray:
    if not rows or any(len(r) != len(rows[0]) for r in rows):
        raise InvalidInputError(f"{name} must be a non-empty rectangular matrix")
    return np.asarray(rows, dtype=float)


def _build_function(doc, a: float, b: float, fit_degree: int, name: str) -> PiecewiseMatrixFunction:
    try:
        if isinstance(doc, PolyFunction):
            return PiecewiseMatrixFunction.from_entries(a, b, doc.coeffs)
        if isinstance(doc, PiecewiseFunction):
            if len(doc.pieces) != len(doc.breakpoints) + 1:
                raise InvalidInputError(f"{len(doc.breakpoints)} breakpoints need {len(doc.breakpoints) + 1} pieces")
            if not doc.breakpoints:
                return PiecewiseMatrixFunction.from_entries(a, b, doc.pieces[0])
            return PiecewiseMatrixFunction.from_entries(a, b, doc.pieces, doc.breakpoints)
        degree = fit_degree if doc.fit_degree is None else doc.fit_degree
        return fit_grid(doc.ts, np.asarray(doc.values, dtype=float), degree, a, b)
    except InvalidInputError as exc:
        raise InvalidInputError(f"{name}: {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise InvalidInputError(f"{name}: malformed values ({exc})") from exc


# -- reports ----------------------------------------------------------------


class RankSummary(BaseModel):
    rank_D: int
    r1: int
    d1: int
    rank_Q: int
    r2: int
    d2: int


class ResidualSummary(BaseModel):
    cond1: float
    cond2: float


class ControlSummary(BaseModel):
    criterion_residual: float
    regularizable: bool
    u_min_norm: Optional[List[float]] = None
    control_dim: Optional[int] = None


class AnalysisReport(BaseModel):
    ranks: RankSummary
    residuals: ResidualSummary
    solvable: bool
    control: Optional[ControlSummary] = None
