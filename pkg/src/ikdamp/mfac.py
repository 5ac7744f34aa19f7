"""One-step damped control law and the iterative IK solver.

The control law solves (J^T J + lam*I) dq = J^T e, i.e. one damped
least-squares (Levenberg-Marquardt) step on the task-space error.
`solve_ik` iterates that step with an adaptive damping schedule until
the error norm drops below a tolerance; `stacked_solve` packs the same
iteration into one block-triangular coupled solve as a cross-check.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Union

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .damping import DampingObservation, DampingSchedule, Constant, cond
from .kinematics import (
    DhChain,
    KinematicModel,
    Pose,
    forward,
    jacobian,
    pose_error,
    pose_from_task,
)


class SolveStatus(Enum):
    CONVERGED = "converged"
    MAX_ITERATIONS = "max_iterations"


@dataclass
class SolverConfig:
    delta: float = 1e-10        # final error tolerance
    n_up: int = 500             # iteration cap
    schedule: DampingSchedule = field(default_factory=Constant)
    horizon: int = 1

    def __post_init__(self):
        if self.delta <= 0:
            raise ValueError("delta must be positive")
        if self.n_up < 1:
            raise ValueError("n_up must be >= 1")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")


@dataclass
class SolveReport:
    q_final: np.ndarray
    status: SolveStatus
    iterations: int
    error_trace: List[float]
    lambda_trace: List[float]
    dq_total: np.ndarray
    q_trace: List[np.ndarray] = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return self.status is SolveStatus.CONVERGED


def mfac_step(J, e, lam: float) -> np.ndarray:
    """Solve (J^T J + lam*I) dq = J^T e.

    lam > 0 uses a Cholesky solve on the (positive definite) normal
    equations. lam = 0 falls back to the minimum-norm least-squares
    solution so singular Jacobians do not crash.
    """
    J = np.asarray(J, dtype=float)
    e = np.asarray(e, dtype=float).ravel()
    if e.shape[0] != J.shape[0]:
        raise ValueError("error vector length must match Jacobian rows")
    if lam < 0:
        raise ValueError("lam must be non-negative")
    if lam > 0:
        A = J.T @ J + lam * np.eye(J.shape[1])
        return cho_solve(cho_factor(A, lower=True), J.T @ e)
    return np.linalg.lstsq(J, e, rcond=None)[0]


def _as_target(model: KinematicModel, target) -> Union[np.ndarray, Pose]:
    """Normalize a target: 6-vector targets on a DhChain become a Pose."""
    if isinstance(target, Pose):
        if not isinstance(model, DhChain):
            raise ValueError("Pose targets need a DhChain model")
        return target
    target = np.asarray(target, dtype=float).ravel()
    if target.shape[0] != model.m_y:
        raise ValueError(f"target length must be {model.m_y}")
    if isinstance(model, DhChain):
        return pose_from_task(target)
    return target


def task_error(model: KinematicModel, target, q) -> np.ndarray:
    """Task-space error of target relative to the configuration q."""
    if isinstance(target, Pose):
        return pose_error(target, model.forward_pose(q))
    return np.asarray(target, dtype=float) - forward(model, q)


def solve_ik(model: KinematicModel, target, q0, config: SolverConfig) -> SolveReport:
    """Iterative damped IK toward a single waypoint.

    Per iteration: evaluate forward kinematics and the error, update the
    damping factor from the schedule, take one damped step. Stops when
    the error norm is <= config.delta or after config.n_up iterations.
    """
    target = _as_target(model, target)
    q = np.asarray(q0, dtype=float).ravel().copy()
    if q.shape[0] != model.m_u:
        raise ValueError(f"q0 length must be {model.m_u}")
    schedule = config.schedule

    error_trace: List[float] = []
    lambda_trace: List[float] = []
    q_trace: List[np.ndarray] = []
    prev_norm: Optional[float] = None
    status = SolveStatus.MAX_ITERATIONS

    for _ in range(config.n_up):
        e = task_error(model, target, q)
        err = float(np.linalg.norm(e))
        error_trace.append(err)
        if err <= config.delta:
            lambda_trace.append(schedule.peek())
            q_trace.append(q.copy())
            status = SolveStatus.CONVERGED
            break
        J = jacobian(model, q)
        lam = schedule.next_lambda(
            DampingObservation(err, prev_error_norm=prev_norm, cond=cond(J))
        )
        lambda_trace.append(lam)
        q = q + mfac_step(J, e, lam)
        q_trace.append(q.copy())
        prev_norm = err

    if status is not SolveStatus.CONVERGED and error_trace[-1] <= config.delta:
        status = SolveStatus.CONVERGED
    return SolveReport(
        q_final=q,
        status=status,
        iterations=len(error_trace),
        error_trace=error_trace,
        lambda_trace=lambda_trace,
        dq_total=q - np.asarray(q0, dtype=float).ravel(),
        q_trace=q_trace,
    )


def _block_lower_triangular(blocks: List[np.ndarray]) -> np.ndarray:
    """Assemble [[J0], [J0, J1], ...] with zeros above the diagonal."""
    n = len(blocks)
    m_y, m_u = blocks[0].shape
    out = np.zeros((n * m_y, n * m_u))
    for r in range(n):
        for c in range(r + 1):
            out[r * m_y:(r + 1) * m_y, c * m_u:(c + 1) * m_u] = blocks[c]
    return out


def stacked_solve(model: KinematicModel, target, q0, config: SolverConfig):
    """Single coupled solve over a block of N damped steps.

    A preliminary greedy sweep (N plain damped iterations) supplies the
    provisional configurations for the stage Jacobians and the damping
    sequence; the coupled block-triangular system is then solved in one
    shot and the summed increment applied. Returns (dQ, report). The
    coupled minimizer is generally NOT equal to the greedy sequential
    iteration; compare reports to quantify the discrepancy.
    """
    target = _as_target(model, target)
    q0 = np.asarray(q0, dtype=float).ravel()
    n = config.horizon
    sweep_schedule = config.schedule.clone()

    q = q0.copy()
    jacobians: List[np.ndarray] = []
    lams: List[float] = []
    prev_norm: Optional[float] = None
    for _ in range(n):
        e = task_error(model, target, q)
        err = float(np.linalg.norm(e))
        J = jacobian(model, q)
        lam = sweep_schedule.next_lambda(
            DampingObservation(err, prev_error_norm=prev_norm, cond=cond(J))
        )
        jacobians.append(J)
        lams.append(lam)
        q = q + mfac_step(J, e, lam)
        prev_norm = err

    psi = _block_lower_triangular(jacobians)
    m_u = model.m_u
    e0 = task_error(model, target, q0)
    rhs_resid = np.tile(e0, n)
    lam_diag = np.repeat(lams, m_u)
    if np.all(lam_diag > 0):
        A = psi.T @ psi + np.diag(lam_diag)
        dQ = cho_solve(cho_factor(A, lower=True), psi.T @ rhs_resid)
    elif np.any(lam_diag > 0):
        A = psi.T @ psi + np.diag(lam_diag)
        dQ = np.linalg.lstsq(A, psi.T @ rhs_resid, rcond=None)[0]
    else:
        dQ = np.linalg.lstsq(psi, rhs_resid, rcond=None)[0]

    blocks = dQ.reshape(n, m_u)
    cumulative = np.cumsum(blocks, axis=0)
    error_trace = [
        float(np.linalg.norm(task_error(model, target, q0 + cumulative[i])))
        for i in range(n)
    ]
    q_final = q0 + cumulative[-1]
    status = (
        SolveStatus.CONVERGED
        if error_trace[-1] <= config.delta
        else SolveStatus.MAX_ITERATIONS
    )
    report = SolveReport(
        q_final=q_final,
        status=status,
        iterations=n,
        error_trace=error_trace,
        lambda_trace=lams,
        dq_total=cumulative[-1].copy(),
        q_trace=[q0 + cumulative[i] for i in range(n)],
    )
    return dQ, report
