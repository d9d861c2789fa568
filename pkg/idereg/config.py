"""Validated numerical settings used across the solver, oracle and commands."""

from __future__ import annotations

from enum import Enum

from pydantic import BaseModel, ConfigDict, Field


class JumpModel(str, Enum):
    """Whether solutions may jump at impulse instants."""

    FREE = "free"
    NONE = "none"


class ToleranceConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    rank_tol_rel: float = Field(1e-10, gt=0, lt=1, description="relative singular value cutoff")
    solve_tol: float = Field(1e-8, gt=0, description="absolute residual threshold for verdicts")


class QuadratureConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    gauss_order: int = Field(8, ge=1, description="Gauss-Legendre points per panel")


class OracleConfig(BaseModel):
    """Settings of the collocation oracle.

    The residual threshold is looser than the solver's because the oracle
    works on a finite grid.
    """

    model_config = ConfigDict(frozen=True)

    nodes_per_subinterval: int = Field(64, ge=8)
    residual_tol: float = Field(1e-6, gt=0)
    margin_band: float = Field(10.0, ge=1)
    stencil_width: int = Field(9, ge=3)


DEFAULT_TOLERANCE = ToleranceConfig()
DEFAULT_QUADRATURE = QuadratureConfig()
DEFAULT_ORACLE = OracleConfig()
