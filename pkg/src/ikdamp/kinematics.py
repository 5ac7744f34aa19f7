"""Manipulator models, forward kinematics, Jacobians and pose errors.

Two model families are provided: a closed-form three-link arm (3 joint
angles -> Cartesian position) and a generic serial chain described by
classic Denavit-Hartenberg rows (joint angles -> full 6-DOF pose).
All operations are pure functions over immutable model objects.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np


class KinematicsError(ValueError):
    """Contract violation in a kinematics operation."""


ROTATION_TOL = 1e-9


def _as_vector(q, length: int, name: str = "q") -> np.ndarray:
    q = np.asarray(q, dtype=float).ravel()
    if q.shape != (length,):
        raise KinematicsError(f"{name} must have length {length}, got {q.shape}")
    if not np.all(np.isfinite(q)):
        raise KinematicsError(f"{name} contains non-finite entries")
    return q


def check_rotation(R, tol: float = ROTATION_TOL) -> np.ndarray:
    """Validate a 3x3 rotation matrix (orthonormal, det +1)."""
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3):
        raise KinematicsError(f"rotation must be 3x3, got {R.shape}")
    if np.max(np.abs(R.T @ R - np.eye(3))) > tol:
        raise KinematicsError("rotation matrix is not orthonormal")
    if abs(np.linalg.det(R) - 1.0) > tol:
        raise KinematicsError("rotation matrix determinant is not +1")
    return R


@dataclass(frozen=True)
class Pose:
    """End-effector position (meters) and orientation (rotation matrix)."""

    position: np.ndarray
    rotation: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "position", _as_vector(self.position, 3, "position"))
        object.__setattr__(self, "rotation", check_rotation(self.rotation))


def rot_z(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def rot_y(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_x(a: float) -> np.ndarray:
    c, s = math.cos(a), math.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def euler_zyx_from_rotation(R) -> np.ndarray:
    """Extract intrinsic Z-Y-X Euler angles (alpha, beta, gamma) from R.

    R = rot_z(alpha) @ rot_y(beta) @ rot_x(gamma). The convention is a
    reporting choice only; error arithmetic works on rotation matrices.
    """
    R = np.asarray(R, dtype=float)
    beta = math.atan2(-R[2, 0], math.hypot(R[0, 0], R[1, 0]))
    if abs(math.cos(beta)) < 1e-12:
        # gimbal lock: fold gamma into alpha
        alpha = math.atan2(-R[0, 1], R[1, 1])
        gamma = 0.0
    else:
        alpha = math.atan2(R[1, 0], R[0, 0])
        gamma = math.atan2(R[2, 1], R[2, 2])
    return np.array([alpha, beta, gamma])


def rotation_from_euler_zyx(angles) -> np.ndarray:
    a, b, g = np.asarray(angles, dtype=float).ravel()
    return rot_z(a) @ rot_y(b) @ rot_x(g)


def axis_angle_to_rotation(axis, angle: float) -> np.ndarray:
    """Rodrigues rotation matrix from a unit axis and an angle."""
    axis = np.asarray(axis, dtype=float).ravel()
    if axis.shape != (3,):
        raise KinematicsError("axis must be a 3-vector")
    if abs(np.linalg.norm(axis) - 1.0) > 1e-9:
        raise KinematicsError("axis must be a unit vector")
    kx, ky, kz = axis
    K = np.array([[0.0, -kz, ky], [kz, 0.0, -kx], [-ky, kx, 0.0]])
    return np.eye(3) + math.sin(angle) * K + (1.0 - math.cos(angle)) * (K @ K)


def orientation_error(desired, current) -> np.ndarray:
    """Equivalent angle-axis error vector between two orientations.

    Computes the relative rotation D = desired @ current.T, its equivalent
    angle theta = arccos((trace(D) - 1)/2) and axis, and returns axis*theta.
    Near theta = 0 the error is taken as zero; near theta = pi the axis is
    recovered from the diagonal of D (the off-diagonal numerator vanishes).
    """
    D = check_rotation(desired) @ check_rotation(current).T
    cos_theta = np.clip((np.trace(D) - 1.0) / 2.0, -1.0, 1.0)
    theta = math.acos(cos_theta)
    if theta < 1e-9:
        return np.zeros(3)
    if abs(theta - math.pi) < 1e-6:
        # D ~ 2*k k^T - I: largest diagonal picks the dominant axis component
        diag = np.clip((np.diag(D) + 1.0) / 2.0, 0.0, None)
        i = int(np.argmax(diag))
        k = np.zeros(3)
        k[i] = math.sqrt(diag[i])
        for j in range(3):
            if j != i:
                k[j] = D[i, j] / (2.0 * k[i])
        k /= np.linalg.norm(k)
        return k * theta
    k = np.array([D[2, 1] - D[1, 2], D[0, 2] - D[2, 0], D[1, 0] - D[0, 1]])
    return k / (2.0 * math.sin(theta)) * theta


def pose_error(desired: Pose, current: Pose) -> np.ndarray:
    """6-vector task error: position difference, then angle-axis error."""
    return np.concatenate(
        [desired.position - current.position,
         orientation_error(desired.rotation, current.rotation)]
    )


class KinematicModel:
    """Base interface: joint vector -> task vector and Jacobian."""

    m_u: int
    m_y: int

    def forward(self, q: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def jacobian(self, q: np.ndarray) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True)
class ThreeLink(KinematicModel):
    """Three-link arm with closed-form position kinematics.

    Joint 1 rotates the arm plane about the base z axis; joints 2 and 3
    are in-plane. Output is the Cartesian tip position (x, y, z).
    """

    l1: float = 5.0
    l2: float = 7.0
    l3: float = 7.0

    m_u = 3
    m_y = 3

    def __post_init__(self):
        if min(self.l1, self.l2, self.l3) <= 0:
            raise KinematicsError("link lengths must be strictly positive")

    def forward(self, q) -> np.ndarray:
        q1, q2, q3 = _as_vector(q, 3)
        r = self.l2 * math.sin(q2) + self.l3 * math.sin(q2 + q3)
        z = self.l1 + self.l2 * math.cos(q2) + self.l3 * math.cos(q2 + q3)
        return np.array([r * math.cos(q1), r * math.sin(q1), z])

    def jacobian(self, q) -> np.ndarray:
        q1, q2, q3 = _as_vector(q, 3)
        s23 = math.sin(q2 + q3)
        c23 = math.cos(q2 + q3)
        r = self.l2 * math.sin(q2) + self.l3 * s23
        dr = self.l2 * math.cos(q2) + self.l3 * c23
        c1, s1 = math.cos(q1), math.sin(q1)
        return np.array(
            [
                [-r * s1, dr * c1, self.l3 * c23 * c1],
                [r * c1, dr * s1, self.l3 * c23 * s1],
                [0.0, -r, -self.l3 * s23],
            ]
        )


@dataclass(frozen=True)
class DhRow:
    alpha: float  # link twist, radians
    a: float      # link length, meters
    d: float      # link offset, meters
    theta_offset: float = 0.0

    def transform(self, q: float) -> np.ndarray:
        """Classic DH transform Rz(theta) Tz(d) Tx(a) Rx(alpha)."""
        th = q + self.theta_offset
        ct, st = math.cos(th), math.sin(th)
        ca, sa = math.cos(self.alpha), math.sin(self.alpha)
        return np.array(
            [
                [ct, -st * ca, st * sa, self.a * ct],
                [st, ct * ca, -ct * sa, self.a * st],
                [0.0, sa, ca, self.d],
                [0.0, 0.0, 0.0, 1.0],
            ]
        )


@dataclass(frozen=True)
class DhChain(KinematicModel):
    """Serial revolute chain from classic Denavit-Hartenberg rows.

    Task vector is (x, y, z, alpha, beta, gamma) with Z-Y-X Euler angles;
    error arithmetic goes through `pose_error` so the Euler choice only
    affects reporting.
    """

    rows: tuple

    m_y = 6

    def __post_init__(self):
        rows = tuple(
            r if isinstance(r, DhRow) else DhRow(*r) for r in self.rows
        )
        if not rows:
            raise KinematicsError("DH chain needs at least one row")
        object.__setattr__(self, "rows", rows)

    @property
    def m_u(self) -> int:
        return len(self.rows)

    def forward_pose(self, q) -> Pose:
        q = _as_vector(q, self.m_u)
        T = np.eye(4)
        for row, qi in zip(self.rows, q):
            T = T @ row.transform(qi)
        return Pose(T[:3, 3], T[:3, :3])

    def forward(self, q) -> np.ndarray:
        pose = self.forward_pose(q)
        return np.concatenate(
            [pose.position, euler_zyx_from_rotation(pose.rotation)]
        )

    def jacobian(self, q) -> np.ndarray:
        """Geometric Jacobian: linear rows z_i x (p_e - p_i), angular rows z_i."""
        q = _as_vector(q, self.m_u)
        T = np.eye(4)
        origins = [T[:3, 3].copy()]
        axes = [T[:3, 2].copy()]
        for row, qi in zip(self.rows, q):
            T = T @ row.transform(qi)
            origins.append(T[:3, 3].copy())
            axes.append(T[:3, 2].copy())
        p_e = origins[-1]
        J = np.zeros((6, self.m_u))
        for i in range(self.m_u):
            J[:3, i] = np.cross(axes[i], p_e - origins[i])
            J[3:, i] = axes[i]
        return J


def forward(model: KinematicModel, q) -> np.ndarray:
    return model.forward(q)


def forward_pose(model: KinematicModel, q) -> Pose:
    if not isinstance(model, DhChain):
        raise KinematicsError("forward_pose requires a DhChain model")
    return model.forward_pose(q)


def jacobian(model: KinematicModel, q) -> np.ndarray:
    return model.jacobian(q)


def jacobian_fd(model: KinematicModel, q, h: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian oracle.

    For DhChain models the orientation rows are differenced through
    `pose_error` against the pose at q, so the convention matches the
    geometric Jacobian.
    """
    if h <= 0:
        raise KinematicsError("step size h must be positive")
    q = np.asarray(q, dtype=float).ravel()

    if isinstance(model, DhChain):
        base = model.forward_pose(q)

        def output(qq):
            p = model.forward_pose(qq)
            return np.concatenate(
                [p.position,
                 orientation_error(p.rotation, base.rotation)]
            )
    else:
        output = model.forward

    cols = []
    for i in range(len(q)):
        dq = np.zeros_like(q)
        dq[i] = h
        cols.append((output(q + dq) - output(q - dq)) / (2.0 * h))
    return np.column_stack(cols)


def load_dh_chain(source) -> DhChain:
    """Build a DhChain from a JSON document, path, or parsed dict.

    Schema: {"rows": [{"alpha": ..., "a": ..., "d": ..., "theta_offset": ...}, ...]}
    Angles in radians, lengths in meters; theta_offset defaults to 0.
    """
    if isinstance(source, (str, Path)):
        with open(source) as fh:
            doc = json.load(fh)
    else:
        doc = source
    try:
        rows = [
            DhRow(
                alpha=float(r["alpha"]),
                a=float(r["a"]),
                d=float(r["d"]),
                theta_offset=float(r.get("theta_offset", 0.0)),
            )
            for r in doc["rows"]
        ]
    except (KeyError, TypeError) as exc:
        raise KinematicsError(f"malformed DH document: {exc}") from exc
    return DhChain(tuple(rows))


# Documented default 6-DOF elbow manipulator (classic DH, meters/radians).
# Users override it with their own table via load_dh_chain.
DEFAULT_DH_ROWS = (
    DhRow(alpha=math.pi / 2, a=0.0, d=0.0, theta_offset=0.0),
    DhRow(alpha=0.0, a=0.4318, d=0.0, theta_offset=0.0),
    DhRow(alpha=-math.pi / 2, a=0.0203, d=0.15005, theta_offset=0.0),
    DhRow(alpha=math.pi / 2, a=0.0, d=0.4318, theta_offset=0.0),
    DhRow(alpha=-math.pi / 2, a=0.0, d=0.0, theta_offset=0.0),
    DhRow(alpha=0.0, a=0.0, d=0.0563, theta_offset=0.0),
)


def default_dh_chain() -> DhChain:
    return DhChain(DEFAULT_DH_ROWS)


def pose_from_task(task) -> Pose:
    """Interpret a 6-vector (x, y, z, alpha, beta, gamma) as a Pose."""
    task = _as_vector(task, 6, "task")
    return Pose(task[:3], rotation_from_euler_zyx(task[3:]))
