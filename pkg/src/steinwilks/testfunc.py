"""Smooth bounded test functions h and their certified sup-norm bounds.

The bound formulas consume the *declared* norms, never sampled suprema: the
theory needs true upper bounds on ||h||, ||h'||, ||h''||, and sampling a grid
can only catch user error, not certify a bound.  ``validate_test_function``
is that guard.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigError, NormViolation

NORM_SLACK = 1e-9


@dataclass(frozen=True)
class TestFunction:
    """A C^2-bounded function on [0, inf) with declared sup-norm bounds."""

    eval_h: Callable[[np.ndarray], np.ndarray]
    eval_h1: Callable[[np.ndarray], np.ndarray]
    eval_h2: Callable[[np.ndarray], np.ndarray]
    norm_h: float
    norm_h1: float
    norm_h2: float
    name: str = "custom"

    def __post_init__(self):
        for label in ("norm_h", "norm_h1", "norm_h2"):
            v = float(getattr(self, label))
            if not np.isfinite(v) or v < 0:
                raise ConfigError(f"{label} must be a finite nonnegative real, got {v}")
            object.__setattr__(self, label, v)

    def scaled(self, factor: float) -> "TestFunction":
        """factor * h, with all declared norms scaled accordingly."""
        return TestFunction(
            eval_h=lambda x, f=self.eval_h: factor * np.asarray(f(x)),
            eval_h1=lambda x, f=self.eval_h1: factor * np.asarray(f(x)),
            eval_h2=lambda x, f=self.eval_h2: factor * np.asarray(f(x)),
            norm_h=abs(factor) * self.norm_h,
            norm_h1=abs(factor) * self.norm_h1,
            norm_h2=abs(factor) * self.norm_h2,
            name=f"{factor}*{self.name}",
        )


@dataclass(frozen=True)
class GridSpec:
    """Validation grid covering [0, x_max] with uniformly spaced points."""

    x_max: float = 50.0
    num_points: int = 100_001

    def points(self) -> np.ndarray:
        if self.num_points < 10_000:
            raise ConfigError("validation grid needs at least 10^4 points")
        if self.x_max <= 0:
            raise ConfigError("x_max must be positive")
        return np.linspace(0.0, self.x_max, self.num_points)


@dataclass(frozen=True)
class NormReport:
    """Sampled suprema of |h|, |h'|, |h''| against the declared bounds."""

    passed: bool
    sampled_sup: dict = field(default_factory=dict)   # norm name -> (sup, argmax)
    declared: dict = field(default_factory=dict)


def reciprocal_quadratic() -> TestFunction:
    """h_t(x) = 1/(x^2 + 2) with certified norms (1/2, 3*sqrt(1.5)/16, 1/2)."""
    return TestFunction(
        eval_h=lambda x: 1.0 / (np.asarray(x, dtype=float) ** 2 + 2.0),
        eval_h1=lambda x: -2.0 * np.asarray(x, dtype=float)
        / (np.asarray(x, dtype=float) ** 2 + 2.0) ** 2,
        eval_h2=lambda x: (6.0 * np.asarray(x, dtype=float) ** 2 - 4.0)
        / (np.asarray(x, dtype=float) ** 2 + 2.0) ** 3,
        norm_h=0.5,
        norm_h1=3.0 * np.sqrt(1.5) / 16.0,
        norm_h2=0.5,
        name="ht",
    )


def zero_function() -> TestFunction:
    return TestFunction(
        eval_h=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
        eval_h1=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
        eval_h2=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
        norm_h=0.0, norm_h1=0.0, norm_h2=0.0, name="zero",
    )


def constant_function(c: float) -> TestFunction:
    return TestFunction(
        eval_h=lambda x: np.full_like(np.asarray(x, dtype=float), c),
        eval_h1=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
        eval_h2=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
        norm_h=abs(c), norm_h1=0.0, norm_h2=0.0, name=f"const({c})",
    )


def tabulated_test_function(table: dict, name: str = "tabulated") -> TestFunction:
    """Build a TestFunction from an evaluator table.

    ``table`` must hold arrays ``x``, ``h``, ``h1``, ``h2`` of equal length and
    a ``norms`` entry (mapping or 3-sequence).  Evaluation is piecewise-linear
    interpolation, clamped at the table ends.
    """
    try:
        x = np.asarray(table["x"], dtype=float)
        hv = np.asarray(table["h"], dtype=float)
        h1v = np.asarray(table["h1"], dtype=float)
        h2v = np.asarray(table["h2"], dtype=float)
        norms = table["norms"]
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"evaluator table missing field: {exc}") from exc
    if isinstance(norms, dict):
        norm_triple = (float(norms["h"]), float(norms["h1"]), float(norms["h2"]))
    else:
        norm_triple = tuple(float(v) for v in norms)
        if len(norm_triple) != 3:
            raise ConfigError("norms must have exactly three entries")
    if not (x.ndim == 1 and x.size >= 2 and np.all(np.diff(x) > 0)):
        raise ConfigError("table x grid must be strictly increasing with >= 2 points")
    if not (x.size == hv.size == h1v.size == h2v.size):
        raise ConfigError("table columns must have equal length")
    return TestFunction(
        eval_h=lambda q: np.interp(np.asarray(q, dtype=float), x, hv),
        eval_h1=lambda q: np.interp(np.asarray(q, dtype=float), x, h1v),
        eval_h2=lambda q: np.interp(np.asarray(q, dtype=float), x, h2v),
        norm_h=norm_triple[0], norm_h1=norm_triple[1], norm_h2=norm_triple[2],
        name=name,
    )


BUILTIN_TEST_FUNCTIONS = {
    "ht": reciprocal_quadratic,
    "zero": zero_function,
}


def validate_test_function(h: TestFunction, grid: GridSpec | None = None) -> NormReport:
    """Check the declared sup norms against sampled suprema on the grid.

    Raises NormViolation at the worst offending point if any sampled value
    exceeds its declared norm by more than 1e-9; validation is deterministic
    and idempotent for a fixed grid.
    """
    grid = grid or GridSpec()
    xs = grid.points()
    declared = {"norm_h": h.norm_h, "norm_h1": h.norm_h1, "norm_h2": h.norm_h2}
    sampled = {}
    worst = None
    for norm_name, fn in (("norm_h", h.eval_h), ("norm_h1", h.eval_h1), ("norm_h2", h.eval_h2)):
        vals = np.abs(np.asarray(fn(xs), dtype=float))
        if not np.all(np.isfinite(vals)):
            bad = int(np.argmax(~np.isfinite(vals)))
            raise NormViolation(norm_name, float(xs[bad]), float(vals[bad]))
        imax = int(np.argmax(vals))
        sampled[norm_name] = (float(vals[imax]), float(xs[imax]))
        excess = vals[imax] - declared[norm_name]
        if excess > NORM_SLACK and (worst is None or excess > worst[3]):
            worst = (norm_name, float(xs[imax]), float(vals[imax]), float(excess))
    if worst is not None:
        raise NormViolation(worst[0], worst[1], worst[2])
    return NormReport(passed=True, sampled_sup=sampled, declared=declared)
