"""n-step predictive damped control and receding-horizon tracking.

The predictive law stacks n waypoint errors against a block-lower-
triangular Jacobian and solves one coupled damped system; only the
first joint increment is committed (receding horizon). With n = 1 it
degenerates exactly to the one-step law in `mfac`.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence

import numpy as np

from .damping import DampingObservation, cond
from .kinematics import DhChain, KinematicModel, Pose, forward, jacobian
from .mfac import (
    SolveReport,
    SolveStatus,
    SolverConfig,
    _as_target,
    _block_lower_triangular,
    mfac_step,
    task_error,
)
from .trajectory import Trajectory, horizon_window


class HorizonMode(Enum):
    # FROZEN replicates the current Jacobian across the horizon;
    # PROPAGATED evaluates future blocks at provisional future states.
    FROZEN = "frozen"
    PROPAGATED = "propagated"


class SingularBlockError(ValueError):
    """A horizon block lost row rank where a right inverse was required."""

    def __init__(self, index: int):
        super().__init__(f"rank-deficient Jacobian block at horizon index {index}")
        self.index = index


@dataclass
class StackedSystem:
    """Horizon-n stacked linear system.

    psi is the (n*M_y) x (n*M_u) block-lower-triangular Jacobian stack,
    targets the stacked desired outputs, base the current output y(k).
    """

    psi: np.ndarray
    targets: np.ndarray
    base: np.ndarray
    n: int
    m_y: int
    m_u: int

    def residual(self) -> np.ndarray:
        return self.targets - np.tile(self.base, self.n)


def build_psi(jacobians: Sequence[np.ndarray]) -> np.ndarray:
    """Block-lower-triangular stack: row r holds blocks J_0 .. J_r."""
    if len(jacobians) == 0:
        raise ValueError("need at least one Jacobian block")
    blocks = [np.asarray(J, dtype=float) for J in jacobians]
    shape = blocks[0].shape
    if any(b.shape != shape for b in blocks):
        raise ValueError("all Jacobian blocks must share one shape")
    return _block_lower_triangular(blocks)


def mfapc_step(sys: StackedSystem, lam: float):
    """Solve the stacked damped system; returns (dQ, dq_first)."""
    dQ = mfac_step(sys.psi, sys.residual(), lam)
    return dQ, dQ[: sys.m_u]


def _right_inverse(J: np.ndarray, index: int) -> np.ndarray:
    s = np.linalg.svd(J, compute_uv=False)
    if s[-1] <= 0 or s[0] / s[-1] >= 1e12:
        raise SingularBlockError(index)
    if J.shape[0] == J.shape[1]:
        return np.linalg.inv(J)
    return J.T @ np.linalg.inv(J @ J.T)


def psi_right_inverse(jacobians: Sequence[np.ndarray]) -> np.ndarray:
    """Block-bidiagonal right inverse of the stacked Jacobian.

    Diagonal blocks are the per-stage right inverses, first subdiagonal
    their negatives; the product psi @ result is the identity.
    """
    blocks = [np.asarray(J, dtype=float) for J in jacobians]
    if not blocks:
        raise ValueError("need at least one Jacobian block")
    invs = [_right_inverse(J, i) for i, J in enumerate(blocks)]
    n = len(blocks)
    m_y, m_u = blocks[0].shape
    out = np.zeros((n * m_u, n * m_y))
    for i in range(n):
        out[i * m_u:(i + 1) * m_u, i * m_y:(i + 1) * m_y] = invs[i]
        if i > 0:
            out[i * m_u:(i + 1) * m_u, (i - 1) * m_y:i * m_y] = -invs[i]
    return out


def _window_targets(model: KinematicModel, targets) -> list:
    return [_as_target(model, t) for t in targets]


def solve_ik_predictive(
    model: KinematicModel,
    targets: Sequence,
    q0,
    config: SolverConfig,
    mode: HorizonMode = HorizonMode.FROZEN,
) -> SolveReport:
    """Iterative predictive IK over a fixed window of n targets.

    Each iteration stacks the window errors against the current (frozen)
    or provisional future (propagated) Jacobians, solves the coupled
    damped system, and commits the first increment; provisional future
    states advance by the cumulative increment blocks. Stops when the
    stacked error norm is <= config.delta or after config.n_up rounds.
    """
    targets = _window_targets(model, targets)
    n = len(targets)
    if n < 1:
        raise ValueError("need at least one target")
    q = np.asarray(q0, dtype=float).ravel().copy()
    if q.shape[0] != model.m_u:
        raise ValueError(f"q0 length must be {model.m_u}")
    schedule = config.schedule
    m_u = model.m_u

    provisional = [q.copy() for _ in range(n)]
    error_trace: List[float] = []
    lambda_trace: List[float] = []
    q_trace: List[np.ndarray] = []
    prev_norm: Optional[float] = None
    status = SolveStatus.MAX_ITERATIONS

    for _ in range(config.n_up):
        if mode is HorizonMode.FROZEN:
            resid_blocks = [task_error(model, t, q) for t in targets]
            stacked_err_blocks = resid_blocks
            jac_blocks = [jacobian(model, q)] * n
        else:
            resid_blocks = [task_error(model, t, q) for t in targets]
            stacked_err_blocks = [
                task_error(model, t, provisional[j]) for j, t in enumerate(targets)
            ]
            jac_blocks = [jacobian(model, provisional[j]) for j in range(n)]

        err = float(np.linalg.norm(np.concatenate(stacked_err_blocks)))
        error_trace.append(err)
        if err <= config.delta:
            lambda_trace.append(schedule.peek())
            q_trace.append(q.copy())
            status = SolveStatus.CONVERGED
            break

        lam = schedule.next_lambda(
            DampingObservation(
                err,
                prev_error_norm=prev_norm,
                cond=max(cond(J) for J in jac_blocks),
            )
        )
        lambda_trace.append(lam)
        psi = build_psi(jac_blocks)
        dQ = mfac_step(psi, np.concatenate(resid_blocks), lam)
        cumulative = np.cumsum(dQ.reshape(n, m_u), axis=0)
        provisional = [q + cumulative[j] for j in range(n)]
        q = provisional[0].copy()
        q_trace.append(q.copy())
        prev_norm = err

    return SolveReport(
        q_final=q,
        status=status,
        iterations=len(error_trace),
        error_trace=error_trace,
        lambda_trace=lambda_trace,
        dq_total=q - np.asarray(q0, dtype=float).ravel(),
        q_trace=q_trace,
    )


@dataclass
class TrackStep:
    k: int
    target: np.ndarray
    output: np.ndarray
    error_norm: float
    lam: float
    inner_iterations: int
    q: np.ndarray


@dataclass
class TrackReport:
    steps: List[TrackStep]
    settling_step: Optional[int]    # first k after which error stays < threshold
    max_post_settling_error: Optional[float]
    settle_threshold: float = 0.1

    @property
    def error_norms(self) -> np.ndarray:
        return np.array([s.error_norm for s in self.steps])


def _settling(errors: np.ndarray, threshold: float):
    above = np.nonzero(errors >= threshold)[0]
    if errors.size == 0:
        return None, None
    first = 0 if above.size == 0 else int(above[-1]) + 1
    if first >= errors.size:
        return None, None
    return first + 1, float(np.max(errors[first:]))


def receding_horizon_track(
    model: KinematicModel,
    trajectory: Trajectory,
    q0,
    config: SolverConfig,
    mode: HorizonMode = HorizonMode.FROZEN,
    y0=None,
    settle_threshold: float = 0.1,
) -> TrackReport:
    """Track a desired trajectory with the receding-horizon law.

    At each step the horizon window (padded at the trajectory tail by
    repeating the last waypoint) is stacked, one predictive increment is
    committed, and the plant advances by true forward kinematics. With
    config.n_up == 1 this is the pure one-increment-per-step controller
    and the damping schedule is fed the frozen-model predicted stacked
    error after each commit; with n_up > 1 a full inner predictive solve
    runs at every waypoint.

    y0 overrides the initial plant output (it may be inconsistent with
    q0; the plant re-synchronizes after the first commit).
    """
    n = config.horizon
    if len(trajectory) < n:
        raise ValueError("trajectory must be at least as long as the horizon")
    q = np.asarray(q0, dtype=float).ravel().copy()
    schedule = config.schedule
    y = (
        np.asarray(y0, dtype=float).ravel().copy()
        if y0 is not None
        else forward(model, q)
    )

    steps: List[TrackStep] = []
    single_step = config.n_up <= 1
    for t in range(len(trajectory)):
        window = horizon_window(trajectory, t, n)
        if single_step:
            lam = schedule.peek()
            J = jacobian(model, q)
            psi = build_psi([J] * n)
            if isinstance(model, DhChain):
                resid = np.concatenate(
                    [task_error(model, _as_target(model, w), q) for w in window]
                )
            else:
                # residual against the reported plant output, which may be
                # initialized inconsistently with q
                resid = np.concatenate(window) - np.tile(y, n)
            dQ = mfac_step(psi, resid, lam)
            q = q + dQ[: model.m_u]
            # frozen-model prediction of the stacked outputs after the move
            predicted_err = float(np.linalg.norm(resid - psi @ dQ))
            y = forward(model, q)
            schedule.next_lambda(
                DampingObservation(predicted_err, cond=cond(J))
            )
            inner = 1
        else:
            targets = [w for w in window]
            report = solve_ik_predictive(model, targets, q, config, mode)
            q = report.q_final
            y = forward(model, q)
            lam = report.lambda_trace[-1]
            inner = report.iterations
        target = trajectory.samples[t]
        err = float(np.linalg.norm(task_error(model, _as_target(model, target), q)))
        steps.append(
            TrackStep(
                k=t + 1,
                target=np.asarray(target, dtype=float),
                output=y.copy(),
                error_norm=err,
                lam=lam,
                inner_iterations=inner,
                q=q.copy(),
            )
        )

    errors = np.array([s.error_norm for s in steps])
    settle, max_after = _settling(errors, settle_threshold)
    return TrackReport(
        steps=steps,
        settling_step=settle,
        max_post_settling_error=max_after,
        settle_threshold=settle_threshold,
    )
