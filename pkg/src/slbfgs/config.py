"""Sweep configuration and its key=value file format."""

import itertools
import math
from collections.abc import Iterator
from dataclasses import dataclass, fields
from pathlib import Path

from slbfgs.linesearch import LineSearchConfig, LineSearchKind
from slbfgs.memory import InnerSolverConfig
from slbfgs.optimizer import OptimizerConfig, StoppingRule, Strategy
from slbfgs.problems import DEFAULT_ALPHAS, DEFAULT_GRID

ALL_STRATEGIES = tuple(Strategy)
TABLE_MEMORIES: tuple[int | None, ...] = (3, 5, 10, None)


def line_search_config(kind: LineSearchKind) -> LineSearchConfig:
    """Default constants for a line search kind."""
    if kind is LineSearchKind.ARMIJO:
        return LineSearchConfig.armijo()
    return LineSearchConfig.wolfe(strong=kind is LineSearchKind.STRONG_WOLFE)


def format_memory(memory: int | None) -> str:
    """Memory length as written in files; unbounded is "inf"."""
    return "inf" if memory is None else str(memory)


def parse_memory(text: str) -> int | None:
    """Inverse of :func:`format_memory`."""
    text = text.strip()
    if text.lower() in ("inf", "infinity"):
        return None
    try:
        value = int(text)
    except ValueError as exc:
        raise ValueError(f"Invalid memory length: {text!r}") from exc
    if value < 0:
        raise ValueError(f"Memory length must be non-negative, got {value}")
    return value


@dataclass(frozen=True)
class RunSpec:
    """One cell of a sweep."""

    strategy: Strategy
    memory: int | None
    alpha: float

    @property
    def label(self) -> str:
        """File-name friendly identifier."""
        return f"{self.strategy.value}_l{format_memory(self.memory)}_a{self.alpha:g}"

    @property
    def problem_label(self) -> str:
        """Identifier of the (memory, alpha) problem instance for profiles."""
        return f"l{format_memory(self.memory)}_a{self.alpha:g}"


@dataclass(frozen=True)
class SweepSpec:
    """Strategies × memory lengths × regularization weights on the quadratic family."""

    strategies: tuple[Strategy, ...] = ALL_STRATEGIES
    memories: tuple[int | None, ...] = TABLE_MEMORIES
    alphas: tuple[float, ...] = DEFAULT_ALPHAS
    m: int = DEFAULT_GRID
    line_search: LineSearchKind = LineSearchKind.ARMIJO
    grad_tol: float = 1e-13
    max_iter: int = 10000
    exact_seed_solve: bool = True
    inner_maxiter: int = 50
    inner_tol: float = 1e-2
    workers: int = 1
    newton_diagnostics: bool = False

    def __post_init__(self) -> None:
        if self.m < 1:
            raise ValueError(f"m must be at least 1, got {self.m}")
        if any(not alpha > 0.0 for alpha in self.alphas):
            raise ValueError(f"alphas must be positive, got {self.alphas}")
        if self.workers < 1:
            raise ValueError(f"workers must be at least 1, got {self.workers}")
        # trigger the validation of the derived configs once
        InnerSolverConfig(self.inner_maxiter, self.inner_tol)
        StoppingRule(self.grad_tol)

    @property
    def is_empty(self) -> bool:
        """Whether the sweep has no runs."""
        return not (self.strategies and self.memories and self.alphas)

    def runs(self) -> Iterator[RunSpec]:
        """Runs in a fixed order: alpha, then memory, then strategy."""
        for alpha, memory, strategy in itertools.product(self.alphas, self.memories, self.strategies):
            yield RunSpec(strategy, memory, alpha)

    def optimizer_config(self, run: RunSpec) -> OptimizerConfig:
        """Optimizer settings for one run."""
        inner = None if self.exact_seed_solve else InnerSolverConfig(self.inner_maxiter, self.inner_tol)
        return OptimizerConfig(
            memory=run.memory,
            seed_strategy=run.strategy,
            line_search=line_search_config(self.line_search),
            inner=inner,
            stopping=StoppingRule(self.grad_tol),
            max_iter=self.max_iter,
            keep_iterates=self.newton_diagnostics,
        )


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"Invalid boolean: {text!r}")


def _split(text: str) -> list[str]:
    return [item.strip() for item in text.split(",") if item.strip()]


def _parse_float(text: str) -> float:
    value = float(text)
    if math.isnan(value):
        raise ValueError(f"Invalid number: {text!r}")
    return value


_PARSERS = {
    "strategies": lambda v: tuple(Strategy(item.lower()) for item in _split(v)),
    "memories": lambda v: tuple(parse_memory(item) for item in _split(v)),
    "alphas": lambda v: tuple(_parse_float(item) for item in _split(v)),
    "m": int,
    "line_search": lambda v: LineSearchKind(v.strip().lower()),
    "grad_tol": _parse_float,
    "max_iter": int,
    "exact_seed_solve": _parse_bool,
    "inner_maxiter": int,
    "inner_tol": _parse_float,
    "workers": int,
    "newton_diagnostics": _parse_bool,
}
assert set(_PARSERS) == {f.name for f in fields(SweepSpec)}


def parse_sweep_spec(text: str) -> SweepSpec:
    """Parse key=value lines into a SweepSpec.

    Blank lines and ``#`` comments are ignored; omitted keys keep their
    defaults. An empty list value (``strategies=``) gives an empty sweep.

    Args:
        text: File contents

    Returns:
        SweepSpec
    """
    values: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep:
            raise ValueError(f"Line {lineno}: expected key=value, got {raw!r}")
        if key not in _PARSERS:
            raise ValueError(f"Line {lineno}: unknown key {key!r}")
        if key in values:
            raise ValueError(f"Line {lineno}: duplicate key {key!r}")
        try:
            values[key] = _PARSERS[key](value)
        except ValueError as exc:
            raise ValueError(f"Line {lineno}: invalid value for {key!r}: {exc}") from exc
    return SweepSpec(**values)  # type: ignore[arg-type]


def load_sweep_spec(path: str | Path) -> SweepSpec:
    """Read a sweep file."""
    return parse_sweep_spec(Path(path).read_text(encoding="utf-8"))
