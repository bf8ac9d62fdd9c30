"""
Run configuration: a JSON file plus command-line overrides (flags win).

    {
      "command": "verify",
      "domain": {"gamma1": 2.0},
      "problem": {"p": 2.0, "q": 2.0, "alpha": 0.5},
      "mesh": {"N": 32, "kappa": null},
      "solver": {"tol": 1e-10, ...},
      "search": {"grid_a": 33, ...},
      "poincare": {"strategy": "numeric_lower", ...},
      "quadrature": {"rtol": 1e-7, ...},
      "sweep": {"gamma1": [1.5, 2, 3], "alpha": [-0.5, 0, 1], ...},
      "out": "runs/verify"
    }

Unknown keys are rejected at every level.
"""
from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple, Type, TypeVar, Union

from .artifacts import config_hash
from .bounds import PoincareConfig, SearchConfig
from .cusp_map import CLOSED_FORM, QUADRATURE
from .eigensolver import SolverConfig
from .quadrature import QuadConfig
from .validation import ConfigError, InputValidator, ValidationError

COMMANDS = ("bound", "solve", "verify", "sweep", "mesh-info")
SOLVE_METHODS = ("auto", "inverse_iteration", "rayleigh_descent", "direct")
THREADS_ENV = "CUSP_SPECTRA_THREADS"

T = TypeVar("T")


@dataclass(frozen=True)
class DomainConfig:
    gamma1: float = 2.0
    n: int = 2

    def __post_init__(self) -> None:
        object.__setattr__(self, "gamma1", InputValidator.finite(self.gamma1, "gamma1"))
        if self.n != 2:
            raise ConfigError(f"only planar domains are solved (n={self.n})", field="domain.n",
                              value=self.n, suggestions=["Set domain.n to 2"])

    def to_dict(self) -> Dict[str, Any]:
        return {"gamma1": self.gamma1, "n": self.n}


@dataclass(frozen=True)
class ProblemConfig:
    p: float = 2.0
    q: float = 2.0
    alpha: float = 0.0

    def __post_init__(self) -> None:
        for name in ("p", "q", "alpha"):
            object.__setattr__(self, name, InputValidator.finite(getattr(self, name), name))

    def to_dict(self) -> Dict[str, Any]:
        return {"p": self.p, "q": self.q, "alpha": self.alpha}


@dataclass(frozen=True)
class MeshConfig:
    N: int = 32
    kappa: Optional[float] = None

    def __post_init__(self) -> None:
        InputValidator.integer_at_least(self.N, 2, "N")
        if self.kappa is not None:
            object.__setattr__(self, "kappa", InputValidator.finite(self.kappa, "kappa"))

    def to_dict(self) -> Dict[str, Any]:
        return {"N": self.N, "kappa": self.kappa}


@dataclass(frozen=True)
class SweepConfig:
    """Grids per parameter; an empty grid means "use the single configured value"."""

    gamma1: Tuple[float, ...] = ()
    p: Tuple[float, ...] = ()
    q: Tuple[float, ...] = ()
    alpha: Tuple[float, ...] = ()
    workers: Optional[int] = None

    def __post_init__(self) -> None:
        for name in ("gamma1", "p", "q", "alpha"):
            values = getattr(self, name)
            if isinstance(values, (int, float)):
                values = (values,)
            object.__setattr__(
                self, name, tuple(InputValidator.finite(v, f"sweep.{name}") for v in values)
            )
        if self.workers is not None:
            InputValidator.integer_at_least(self.workers, 1, "workers")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "gamma1": list(self.gamma1),
            "p": list(self.p),
            "q": list(self.q),
            "alpha": list(self.alpha),
            "workers": self.workers,
        }


@dataclass(frozen=True)
class RunConfig:
    """Everything one CLI invocation needs; hashed into the run manifest."""

    command: str = "bound"
    domain: DomainConfig = field(default_factory=DomainConfig)
    problem: ProblemConfig = field(default_factory=ProblemConfig)
    mesh: MeshConfig = field(default_factory=MeshConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    search: SearchConfig = field(default_factory=SearchConfig)
    poincare: PoincareConfig = field(default_factory=PoincareConfig)
    quadrature: QuadConfig = field(default_factory=QuadConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    method: str = "auto"
    bound_method: str = CLOSED_FORM
    point: Optional[Tuple[float, float, float]] = None
    slack: Optional[float] = None
    out: str = "cusp-spectra-out"

    def __post_init__(self) -> None:
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}", field="command", value=self.command,
                              suggestions=[f"Use one of {', '.join(COMMANDS)}"])
        if self.method not in SOLVE_METHODS:
            raise ConfigError(f"unknown solve method {self.method!r}", field="method", value=self.method,
                              suggestions=[f"Use one of {', '.join(SOLVE_METHODS)}"])
        if self.bound_method not in (CLOSED_FORM, QUADRATURE):
            raise ConfigError(f"unknown bound method {self.bound_method!r}", field="bound_method",
                              value=self.bound_method,
                              suggestions=[f"Use {CLOSED_FORM} or {QUADRATURE}"])
        if self.point is not None:
            if len(self.point) != 3:
                raise ConfigError("point needs exactly three values a, s, r", field="point",
                                  value=self.point)
            object.__setattr__(self, "point", tuple(InputValidator.finite(v, "point") for v in self.point))
        if self.slack is not None:
            slack = InputValidator.finite(self.slack, "slack")
            if not 0.0 <= slack < 1.0:
                raise ConfigError(f"slack={slack} outside [0, 1)", field="slack", value=slack)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "command": self.command,
            "domain": self.domain.to_dict(),
            "problem": self.problem.to_dict(),
            "mesh": self.mesh.to_dict(),
            "solver": self.solver.to_dict(),
            "search": self.search.to_dict(),
            "poincare": self.poincare.to_dict(),
            "quadrature": self.quadrature.to_dict(),
            "sweep": self.sweep.to_dict(),
            "method": self.method,
            "bound_method": self.bound_method,
            "point": None if self.point is None else list(self.point),
            "slack": self.slack,
            "out": self.out,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "RunConfig":
        """
        Build a config from nested dicts.

        Raises:
            ConfigError: unknown key or malformed section.
        """
        if not isinstance(data, Mapping):
            raise ConfigError("run config must be a JSON object", field="config")
        _reject_unknown(data, _TOP_KEYS, "config")
        kwargs: Dict[str, Any] = {}
        for name, section_cls in _SECTIONS.items():
            if name in data:
                kwargs[name] = _section(section_cls, data[name], name)
        for name in ("command", "method", "bound_method", "slack", "out"):
            if name in data:
                kwargs[name] = data[name]
        if data.get("point") is not None:
            point = data["point"]
            if isinstance(point, Mapping):
                _reject_unknown(point, ("a", "s", "r"), "point")
                point = (point.get("a"), point.get("s"), point.get("r"))
            kwargs["point"] = tuple(point)
        return _wrap(lambda: cls(**kwargs), "config")

    def hash(self) -> str:
        return config_hash(self.to_dict())

    def with_overrides(self, overrides: Mapping[str, Any]) -> "RunConfig":
        """
        Apply dotted-path overrides such as ``{"problem.p": 3.0}``; ``None``
        values are skipped.
        """
        data = self.to_dict()
        for path, value in overrides.items():
            if value is None:
                continue
            head, _, tail = path.partition(".")
            if tail:
                if head not in _SECTIONS:
                    raise ConfigError(f"unknown config section {head!r}", field=path)
                data[head][tail] = value
            else:
                data[head] = value
        return RunConfig.from_dict(data)


_SECTIONS: Dict[str, type] = {
    "domain": DomainConfig,
    "problem": ProblemConfig,
    "mesh": MeshConfig,
    "solver": SolverConfig,
    "search": SearchConfig,
    "poincare": PoincareConfig,
    "quadrature": QuadConfig,
    "sweep": SweepConfig,
}
_TOP_KEYS = tuple(_SECTIONS) + ("command", "method", "bound_method", "point", "slack", "out")


def _reject_unknown(data: Mapping[str, Any], allowed: Tuple[str, ...], where: str) -> None:
    unknown = sorted(set(data) - set(allowed))
    if unknown:
        raise ConfigError(
            f"unknown key(s) in {where}: {', '.join(unknown)}",
            field=where,
            value=unknown,
            suggestions=[f"Allowed keys: {', '.join(sorted(allowed))}"],
        )


def _wrap(build: Any, where: str) -> Any:
    try:
        return build()
    except ConfigError:
        raise
    except ValidationError as exc:
        raise ConfigError(f"invalid {where}: {exc.message}", field=exc.field, value=exc.value,
                          suggestions=exc.suggestions) from exc
    except TypeError as exc:
        raise ConfigError(f"invalid {where}: {exc}", field=where) from exc


def _section(section_cls: Type[T], data: Any, name: str) -> T:
    if not isinstance(data, Mapping):
        raise ConfigError(f"section {name!r} must be an object", field=name, value=data)
    allowed = tuple(f.name for f in dataclasses.fields(section_cls))  # type: ignore[arg-type]
    _reject_unknown(data, allowed, name)
    return _wrap(lambda: section_cls(**dict(data)), name)  # type: ignore[no-any-return]


def load_config(path: Union[str, Path]) -> RunConfig:
    """Read a JSON run config."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}", field="config", value=str(path)) from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}", field="config",
                          value=str(path)) from exc
    return RunConfig.from_dict(data)


def worker_count(requested: Optional[int] = None) -> int:
    """Pool size: ``requested`` or the CPU count, capped by CUSP_SPECTRA_THREADS."""
    count = requested or os.cpu_count() or 1
    cap = os.environ.get(THREADS_ENV)
    if cap:
        try:
            limit = int(cap)
        except ValueError as exc:
            raise ConfigError(f"{THREADS_ENV}={cap!r} is not an integer", field=THREADS_ENV) from exc
        if limit < 1:
            raise ConfigError(f"{THREADS_ENV}={limit} must be at least 1", field=THREADS_ENV)
        count = min(count, limit)
    return max(1, count)
