"""Quaternion and small-matrix algebra used by every other module.

Quaternions are scalar-first ``numpy`` arrays ``[w, x, y, z]``: a real part
``w`` and a vector part ``(x, y, z)``.  ``q`` and ``-q`` describe the same
rotation (double cover); nothing here forces a canonical sign, because the
observer layer handles sign explicitly and canonicalizing would hide the
behavior under test.
"""
from __future__ import annotations

import numpy as np

__all__ = [
    "quat_mul",
    "quat_conj",
    "quat_normalize",
    "quat_to_rot",
    "skew",
    "error_quat",
]


def quat_mul(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Hamilton product p ⊗ q.

    Neither factor needs unit norm (products with pure quaternions occur in
    the kinematics).  For unit inputs the result is unit: the product norm
    is the product of norms.
    """
    pw, px, py, pz = p
    qw, qx, qy, qz = q
    return np.array(
        [
            pw * qw - px * qx - py * qy - pz * qz,
            pw * qx + qw * px + py * qz - pz * qy,
            pw * qy + qw * py + pz * qx - px * qz,
            pw * qz + qw * pz + px * qy - py * qx,
        ]
    )


def quat_conj(q: np.ndarray) -> np.ndarray:
    """Conjugate (w, -x, -y, -z)."""
    return np.array([q[0], -q[1], -q[2], -q[3]])


def quat_normalize(q: np.ndarray) -> np.ndarray:
    """Rescale to unit norm. Raises on (near-)zero input."""
    n = float(np.linalg.norm(q))
    if n < 1e-12:
        raise ValueError("cannot normalize a near-zero quaternion")
    return np.asarray(q, dtype=float) / n


def quat_to_rot(q: np.ndarray) -> np.ndarray:
    """Rotation matrix of a unit quaternion.

    Satisfies ``quat_to_rot(q) @ u == vector part of q ⊗ (0, u) ⊗ q*`` and
    is insensitive to the sign of ``q``.

    Raises
    ------
    ValueError
        if ``q`` deviates from unit norm by more than 1e-6.
    """
    n = float(np.linalg.norm(q))
    if abs(n - 1.0) > 1e-6:
        raise ValueError(f"quat_to_rot expects a unit quaternion, got norm {n!r}")
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def skew(v: np.ndarray) -> np.ndarray:
    """Cross-product matrix: ``skew(v) @ u == cross(v, u)``."""
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def error_quat(q_est: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Relative rotation conj(q_est) ⊗ q, renormalized.

    Identity (+1, 0, 0, 0) or its negative means the two inputs agree as
    rotations.
    """
    return quat_normalize(quat_mul(quat_conj(q_est), q))
