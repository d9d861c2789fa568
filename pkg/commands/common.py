"""Shared plumbing for the subcommands: settings, document loading, output and exit codes."""

from __future__ import annotations

import json
import logging
import math
import re
import sys
from enum import IntEnum
from pathlib import Path
from typing import Any, Callable, List, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from idereg.config import JumpModel, OracleConfig, QuadratureConfig, ToleranceConfig
from idereg.documents import DEFAULT_FIT_DEGREE, ProblemDocument
from idereg.errors import (
    IderegError,
    InvalidInputError,
    MissingControlKernelError,
    NotRegularizableError,
    UnsolvableProblemError,
)
from idereg.generating_solver import ProblemSpec

logger = logging.getLogger(__name__)


class ExitCode(IntEnum):
    OK = 0
    INVALID_INPUT = 2
    UNSOLVABLE = 3
    NOT_REGULARIZABLE = 4
    DISAGREEMENT = 5


class CommandError(Exception):
    """Terminates a command with ``code``; ``detail`` goes to stderr."""

    def __init__(self, code: ExitCode, detail: str):
        super().__init__(detail)
        self.code = code
        self.detail = detail


class Settings(BaseModel):
    """Flags merged over the document's options block."""

    model_config = ConfigDict(frozen=True)

    tolerance: ToleranceConfig = ToleranceConfig()
    quadrature: QuadratureConfig = QuadratureConfig()
    oracle: OracleConfig = OracleConfig()
    jump_model: JumpModel = JumpModel.FREE
    fit_degree: int = Field(DEFAULT_FIT_DEGREE, ge=0)
    samples: int = Field(101, ge=2)
    params: Optional[List[float]] = None
    objective: Literal["minnorm", "weighted"] = "minnorm"
    weight: Optional[List[List[float]]] = None
    uref: Optional[List[float]] = None
    output: Optional[Literal["json", "csv"]] = None


def _chosen(**pairs: tuple[Any, Any]) -> dict[str, Any]:
    """Keep, per field, the flag value if given, else the document value, dropping unset fields."""
    out = {}
    for name, (flag, option) in pairs.items():
        value = flag if flag is not None else option
        if value is not None:
            out[name] = value
    return out


def read_json(path: str | Path) -> Any:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise CommandError(ExitCode.INVALID_INPUT, f"cannot read {path}: {exc.strerror}") from exc


def resolve_settings(doc: ProblemDocument, args) -> Settings:
    opts = doc.options
    weight = read_json(args.weight) if args.weight else None
    uref = read_json(args.uref) if args.uref else None
    return Settings(
        tolerance=ToleranceConfig(
            **_chosen(rank_tol_rel=(args.tol_rank, opts.rank_tol_rel), solve_tol=(args.tol_solve, opts.solve_tol))
        ),
        quadrature=QuadratureConfig(**_chosen(gauss_order=(args.quad_order, opts.gauss_order))),
        oracle=OracleConfig(**_chosen(nodes_per_subinterval=(args.oracle_nodes, opts.oracle_nodes))),
        **_chosen(
            jump_model=(args.jump_model, opts.jump_model),
            fit_degree=(None, opts.fit_degree),
            samples=(args.samples, opts.samples),
            params=(args.params, opts.params),
            objective=(args.objective, opts.objective),
            weight=(weight, opts.weight),
            uref=(uref, opts.uref),
            output=(args.output, None),
        ),
    )


def load_problem(args) -> tuple[ProblemDocument, Settings, ProblemSpec]:
    doc = ProblemDocument.model_validate(read_json(args.file))
    settings = resolve_settings(doc, args)
    problem = doc.to_problem(jump_model=settings.jump_model, fit_degree=settings.fit_degree)
    logger.debug("settings for %s: %s", args.file, settings)
    return doc, settings, problem


# -- output -------------------------------------------------------------------

_MARK = "@@"
_MARKED = re.compile(r'"@@([^"@]*)@@"')


def _format_float(x: float) -> str:
    text = f"{x:.17g}"
    if text.lstrip("-").isdigit():
        text += ".0"
    return text


def _mark_floats(value: Any) -> Any:
    if isinstance(value, dict):
        return {k: _mark_floats(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_mark_floats(v) for v in value]
    if isinstance(value, np.ndarray):
        return _mark_floats(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        x = float(value)
        return f"{_MARK}{_format_float(x)}{_MARK}" if math.isfinite(x) else None
    return value


def dumps(payload: Any) -> str:
    """JSON with every float written to 17 significant digits."""
    return _MARKED.sub(r"\1", json.dumps(_mark_floats(payload), indent=2))


def emit(payload: Any) -> None:
    sys.stdout.write(dumps(payload) + "\n")


def run(handler: Callable[[Any], ExitCode], args) -> ExitCode:
    """Run a subcommand and translate failures into exit codes."""
    try:
        return handler(args)
    except CommandError as exc:
        print(f"idereg: {exc.detail}", file=sys.stderr)
        return exc.code
    except UnsolvableProblemError as exc:
        print(f"idereg: {exc}", file=sys.stderr)
        return ExitCode.UNSOLVABLE
    except NotRegularizableError as exc:
        print(f"idereg: {exc}", file=sys.stderr)
        return ExitCode.NOT_REGULARIZABLE
    except ValidationError as exc:
        print(f"idereg: invalid input: {exc}", file=sys.stderr)
        return ExitCode.INVALID_INPUT
    except (InvalidInputError, MissingControlKernelError, json.JSONDecodeError) as exc:
        print(f"idereg: invalid input: {exc}", file=sys.stderr)
        return ExitCode.INVALID_INPUT
    except IderegError as exc:
        logger.exception("%s failed", args.command)
        print(f"idereg: {exc}", file=sys.stderr)
        return ExitCode.INVALID_INPUT
