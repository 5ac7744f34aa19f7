"""Adaptive damping-factor schedules.

Each schedule is a small state machine producing the scalar damping
factor (applied as lam * I) for the next damped solve, driven by the
current tracking-error norm and/or the Jacobian condition number.
Schedules are owned by a single solve; clone them for parallel runs.
"""
from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np


class DampingError(ValueError):
    """Contract violation in a damping schedule."""


@dataclass
class DampingObservation:
    """Per-iteration inputs to a schedule.

    error_norm / prev_error_norm are ||y* - y||_2 at the current and
    previous iterate; cond is the Jacobian condition number (max over
    the horizon blocks for predictive solves).
    """

    error_norm: float
    prev_error_norm: Optional[float] = None
    cond: Optional[float] = None

    def __post_init__(self):
        if self.error_norm < 0:
            raise DampingError("error_norm must be non-negative")
        if self.prev_error_norm is not None and self.prev_error_norm < 0:
            raise DampingError("prev_error_norm must be non-negative")
        if self.cond is not None and self.cond < 1:
            raise DampingError("condition number must be >= 1")


def cond(J) -> float:
    """Condition number sigma_max / sigma_min, +inf when rank deficient."""
    s = np.linalg.svd(np.asarray(J, dtype=float), compute_uv=False)
    if s.size == 0 or s[0] == 0.0 or s[-1] < 1e-15 * s[0]:
        return float("inf")
    return float(s[0] / s[-1])


class DampingSchedule:
    """Base class: next_lambda advances the state, peek does not."""

    def next_lambda(self, obs: DampingObservation) -> float:
        raise NotImplementedError

    def peek(self) -> float:
        raise NotImplementedError

    def clone(self) -> "DampingSchedule":
        return copy.deepcopy(self)


@dataclass
class Constant(DampingSchedule):
    lambda0: float = 0.0

    def __post_init__(self):
        if self.lambda0 < 0:
            raise DampingError("lambda0 must be non-negative")

    def next_lambda(self, obs: DampingObservation) -> float:
        return self.lambda0

    def peek(self) -> float:
        return self.lambda0


@dataclass
class RatioRule(DampingSchedule):
    """Multiply by a1 when the error ratio exceeds 1, else divide by a2."""

    lambda0: float
    a1: float
    a2: float
    lam: float = field(init=False)

    def __post_init__(self):
        if self.lambda0 < 0:
            raise DampingError("lambda0 must be non-negative")
        if self.a1 < 1 or self.a2 < 1:
            raise DampingError("a1 and a2 must be >= 1")
        self.lam = self.lambda0

    def next_lambda(self, obs: DampingObservation) -> float:
        prev = obs.prev_error_norm
        # missing/zero previous error: ratio treated as <= 1 (divide branch)
        if prev is not None and prev > 0 and obs.error_norm / prev > 1:
            self.lam *= self.a1
        else:
            self.lam /= self.a2
        return self.lam

    def peek(self) -> float:
        return self.lam


@dataclass
class ThresholdRule(DampingSchedule):
    """Multiply by a1 while the error exceeds t1, else divide by a2.

    With reset_on_cross, crossing from below t1 back above it resets the
    state to lambda0 before the multiplicative update.
    """

    lambda0: float
    a1: float
    a2: float
    t1: float
    reset_on_cross: bool = False
    lam: float = field(init=False)
    _prev_above: Optional[bool] = field(init=False, default=None)

    def __post_init__(self):
        if self.lambda0 < 0:
            raise DampingError("lambda0 must be non-negative")
        if self.a1 < 1 or self.a2 < 1:
            raise DampingError("a1 and a2 must be >= 1")
        self.lam = self.lambda0

    def next_lambda(self, obs: DampingObservation) -> float:
        above = obs.error_norm > self.t1
        if self.reset_on_cross and above and self._prev_above is False:
            self.lam = self.lambda0
        if above:
            self.lam *= self.a1
        else:
            self.lam /= self.a2
        self._prev_above = above
        return self.lam

    def peek(self) -> float:
        return self.lam


def _bin_index(thresholds: Sequence[float], value: float) -> int:
    """Index of the bin [prev, t_i] containing value; clamps past the end."""
    idx = int(np.searchsorted(thresholds, value, side="left"))
    return min(idx, len(thresholds) - 1)


@dataclass
class LookupTable(DampingSchedule):
    """Two-way lookup over (error bin, condition-number bin)."""

    error_bins: Sequence[float]
    cond_bins: Sequence[float]
    table: Sequence[Sequence[float]]
    _last: float = field(init=False, default=0.0)

    def __post_init__(self):
        self.error_bins = [float(e) for e in self.error_bins]
        self.cond_bins = [float(c) for c in self.cond_bins]
        self.table = np.asarray(self.table, dtype=float)
        if np.any(np.diff(self.error_bins) <= 0) or np.any(np.diff(self.cond_bins) <= 0):
            raise DampingError("bin thresholds must be strictly ascending")
        if self.table.shape != (len(self.error_bins), len(self.cond_bins)):
            raise DampingError("table shape must be (error bins) x (cond bins)")
        if np.any(self.table < 0):
            raise DampingError("table entries must be non-negative")
        self._last = float(self.table[0, 0])

    def next_lambda(self, obs: DampingObservation) -> float:
        if obs.cond is None:
            raise DampingError("LookupTable needs the condition number")
        row = _bin_index(self.error_bins, obs.error_norm)
        col = _bin_index(self.cond_bins, obs.cond)
        self._last = float(self.table[row, col])
        return self._last

    def peek(self) -> float:
        return self._last


@dataclass
class CondRule(DampingSchedule):
    """Piecewise-constant in the condition number; 0 below the first bin."""

    cond_bins: Sequence[float]
    lambdas: Sequence[float]
    _last: float = field(init=False, default=0.0)

    def __post_init__(self):
        self.cond_bins = [float(c) for c in self.cond_bins]
        self.lambdas = [float(v) for v in self.lambdas]
        if np.any(np.diff(self.cond_bins) <= 0):
            raise DampingError("bin thresholds must be strictly ascending")
        if len(self.lambdas) != len(self.cond_bins):
            raise DampingError("need one lambda per condition threshold")
        if any(v < 0 for v in self.lambdas):
            raise DampingError("lambda values must be non-negative")

    def next_lambda(self, obs: DampingObservation) -> float:
        if obs.cond is None:
            raise DampingError("CondRule needs the condition number")
        # number of thresholds <= cond; 0 means below the first bin
        idx = int(np.searchsorted(self.cond_bins, obs.cond, side="right"))
        self._last = 0.0 if idx == 0 else self.lambdas[min(idx, len(self.lambdas)) - 1]
        return self._last

    def peek(self) -> float:
        return self._last


def schedule_from_config(spec: dict) -> DampingSchedule:
    """Build a schedule from a JSON config fragment.

    Shapes: {"type": "constant", "lambda0": ...},
    {"type": "ratio", "lambda0": ..., "a1": ..., "a2": ...},
    {"type": "threshold", "lambda0": ..., "a1": ..., "a2": ..., "t1": ...,
     "reset_on_cross": false},
    {"type": "lookup", "error_bins": [...], "cond_bins": [...], "table": [[...]]},
    {"type": "cond", "cond_bins": [...], "lambdas": [...]}.
    """
    kind = spec.get("type")
    if kind == "constant":
        return Constant(float(spec["lambda0"]))
    if kind == "ratio":
        return RatioRule(float(spec["lambda0"]), float(spec["a1"]), float(spec["a2"]))
    if kind == "threshold":
        return ThresholdRule(
            float(spec["lambda0"]),
            float(spec["a1"]),
            float(spec["a2"]),
            float(spec["t1"]),
            bool(spec.get("reset_on_cross", False)),
        )
    if kind == "lookup":
        return LookupTable(spec["error_bins"], spec["cond_bins"], spec["table"])
    if kind == "cond":
        return CondRule(spec["cond_bins"], spec["lambdas"])
    raise DampingError(f"unknown schedule type: {kind!r}")
