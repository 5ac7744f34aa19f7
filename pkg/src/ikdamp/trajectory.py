"""Desired-trajectory generators and horizon-window extraction."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import List

import numpy as np


@dataclass(frozen=True)
class Trajectory:
    """Ordered task-vector samples indexed by the integer time base k=1..K."""

    samples: np.ndarray  # K x M_y

    def __post_init__(self):
        samples = np.atleast_2d(np.asarray(self.samples, dtype=float))
        if samples.size == 0:
            raise ValueError("trajectory must be non-empty")
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def dim(self) -> int:
        return self.samples.shape[1]


def helix(k_max: int) -> Trajectory:
    """Helical reference: circle of radius 3 about (4, 0) rising by k/200."""
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    k = np.arange(1, k_max + 1, dtype=float)
    return Trajectory(
        np.column_stack(
            [
                4.0 + 3.0 * np.sin(np.pi * k / 50.0),
                3.0 * np.cos(np.pi * k / 50.0),
                5.0 + k / 200.0,
            ]
        )
    )


def lspb(start, goal, total_steps: int, blend_fraction: float = 0.2) -> Trajectory:
    """Linear segment with parabolic blends, per coordinate.

    Parabolic acceleration over the first blend_fraction of the samples,
    constant velocity in the middle, symmetric deceleration at the end.
    Endpoints match start and goal exactly.
    """
    start = np.asarray(start, dtype=float).ravel()
    goal = np.asarray(goal, dtype=float).ravel()
    if start.shape != goal.shape:
        raise ValueError("start and goal must have the same dimension")
    if total_steps < 4:
        raise ValueError("need at least 4 samples")
    if not 0.0 < blend_fraction < 0.5:
        raise ValueError("blend_fraction must lie in (0, 0.5)")
    if blend_fraction * total_steps < 1:
        raise ValueError("blend region must cover at least one sample")

    tau = np.arange(total_steps, dtype=float) / (total_steps - 1)
    tb = blend_fraction
    v = 1.0 / (1.0 - tb)  # peak velocity for unit displacement
    s = np.empty_like(tau)
    accel = tau <= tb
    decel = tau >= 1.0 - tb
    cruise = ~accel & ~decel
    s[accel] = 0.5 * v / tb * tau[accel] ** 2
    s[cruise] = v * (tau[cruise] - 0.5 * tb)
    s[decel] = 1.0 - 0.5 * v / tb * (1.0 - tau[decel]) ** 2
    return Trajectory(start[None, :] + s[:, None] * (goal - start)[None, :])


def horizon_window(traj: Trajectory, k: int, n: int) -> List[np.ndarray]:
    """Samples k+1 .. k+n (1-based), repeating the last one past the end."""
    if not 0 <= k < len(traj):
        raise ValueError("k out of range")
    if n < 1:
        raise ValueError("horizon must be >= 1")
    out = []
    last = len(traj) - 1
    for j in range(n):
        out.append(traj.samples[min(k + j, last)].copy())
    return out


def save_csv(traj: Trajectory, path) -> None:
    """Write columns: k, then the task components (17 significant digits)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["k"] + [f"y{i + 1}" for i in range(traj.dim)])
        for k, row in enumerate(traj.samples, start=1):
            writer.writerow([k] + [f"{v:.17g}" for v in row])


def load_csv(path) -> Trajectory:
    rows = []
    with open(path) as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header and header[0] != "k":
            rows.append([float(v) for v in header[1:]])
        for line in reader:
            if not line:
                continue
            rows.append([float(v) for v in line[1:]])
    return Trajectory(np.asarray(rows, dtype=float))
