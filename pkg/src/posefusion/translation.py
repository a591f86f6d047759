"""Translation observer: position, velocity, and accel-bias estimation.

Consumes specific-force measurements plus position fixes, and an attitude
feed (rotation, angular-velocity and angular-acceleration cross-product
matrices).  The same derivative serves two wirings: feed the true attitude
for the standalone observer, or feed the attitude observer's estimates for
the full cascade — the code path is identical, only the feed differs.

The gain terms involving the feed ("anticipation" of the rotating
measurement frame) are evaluated through cross products rather than
building the matrices, which keeps the inner loop cheap and is exact for
per-axis scalar gains.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .gains import TranslationGains

__all__ = [
    "TranslationState",
    "AttitudeFeed",
    "translation_derivative",
    "translation_step",
    "OmegaDotFilter",
]


@dataclass(frozen=True)
class TranslationState:
    """Estimates: position (m), velocity (m/s), accel bias (m/s^2)."""

    p: np.ndarray
    v: np.ndarray
    accel_bias: np.ndarray

    def __post_init__(self) -> None:
        for name in ("p", "v", "accel_bias"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (3,) or not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} must be a finite 3-vector")
            object.__setattr__(self, name, arr)


@dataclass(frozen=True)
class AttitudeFeed:
    """Attitude information the translation observer consumes.

    ``R`` rotates body to world; ``Om`` and ``Omd`` are the cross-product
    matrices of angular velocity and angular acceleration.  Skewness of the
    latter two is validated (a non-skew feed means the attitude source is
    broken, and silently symmetrizing would hide that).
    """

    R: np.ndarray
    Om: np.ndarray
    Omd: np.ndarray

    def __post_init__(self) -> None:
        R = np.asarray(self.R, dtype=float)
        object.__setattr__(self, "R", R)
        for name in ("Om", "Omd"):
            M = np.asarray(getattr(self, name), dtype=float)
            if M.shape != (3, 3) or np.max(np.abs(M + M.T)) > 1e-9:
                raise ValueError(f"attitude feed {name} must be skew-symmetric")
            object.__setattr__(self, name, M)


def translation_derivative(
    s: TranslationState,
    a_meas: np.ndarray,
    p_meas: np.ndarray,
    feed: AttitudeFeed,
    K: TranslationGains,
    g: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Observer right-hand side, with innovation p_e = p_meas - p̂::

        p̂'  = v̂ + k3 p_e
        v̂'  = R (a_m - b̂) - g + (k2 I + k3 R Om R^T) p_e
        b̂'  = -(k1 I + k2 Om + k3 (Om^2 - Omd)) R^T p_e

    The Om-dependent terms compensate the rotating frame the bias lives in;
    dropping them breaks the constant-gain convergence argument.
    """
    R, Om, Omd = feed.R, feed.Om, feed.Omd
    p_e = np.asarray(p_meas, dtype=float) - s.p
    omega = np.array([Om[2, 1], Om[0, 2], Om[1, 0]])
    omega_dot = np.array([Omd[2, 1], Omd[0, 2], Omd[1, 0]])

    dp = s.v + K.k3 * p_e
    # R Om R^T p_e == (R omega) x p_e  (rotation of a cross product)
    dv = R @ (np.asarray(a_meas, dtype=float) - s.accel_bias) - np.asarray(g, dtype=float)
    dv = dv + K.k2 * p_e + K.k3 * np.cross(R @ omega, p_e)
    u = R.T @ p_e
    db = -(
        K.k1 * u
        + K.k2 * np.cross(omega, u)
        + K.k3 * (np.cross(omega, np.cross(omega, u)) - np.cross(omega_dot, u))
    )
    return dp, dv, db


def translation_step(
    s: TranslationState,
    a_meas: np.ndarray,
    p_meas: np.ndarray,
    feed: AttitudeFeed,
    K: TranslationGains,
    g: np.ndarray,
    dt: float,
) -> TranslationState:
    """One RK4 step holding measurements and feed constant over the step."""
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")

    def f(st: TranslationState):
        return translation_derivative(st, a_meas, p_meas, feed, K, g)

    k1 = f(s)
    k2 = f(TranslationState(s.p + 0.5 * dt * k1[0], s.v + 0.5 * dt * k1[1],
                            s.accel_bias + 0.5 * dt * k1[2]))
    k3 = f(TranslationState(s.p + 0.5 * dt * k2[0], s.v + 0.5 * dt * k2[1],
                            s.accel_bias + 0.5 * dt * k2[2]))
    k4 = f(TranslationState(s.p + dt * k3[0], s.v + dt * k3[1],
                            s.accel_bias + dt * k3[2]))
    return TranslationState(
        s.p + (dt / 6.0) * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]),
        s.v + (dt / 6.0) * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]),
        s.accel_bias + (dt / 6.0) * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2]),
    )


@dataclass
class OmegaDotFilter:
    """Angular-acceleration estimate: backward difference + first-order low-pass.

    ``tau`` is the filter time constant in seconds; ``tau = 0`` passes the
    raw difference through.  The filter state starts at zero, so the first
    samples under-report — by design, matching a cold-started deployment.
    """

    tau: float
    _state: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self) -> None:
        if self.tau < 0.0:
            raise ValueError(f"filter time constant must be >= 0, got {self.tau}")

    def update(self, omega_prev: np.ndarray, omega_curr: np.ndarray, dt: float) -> np.ndarray:
        """Feed one sample pair; returns the filtered angular acceleration."""
        if dt <= 0.0:
            raise ValueError(f"dt must be positive, got {dt}")
        raw = (np.asarray(omega_curr, dtype=float) - np.asarray(omega_prev, dtype=float)) / dt
        if self.tau == 0.0:
            self._state = raw
        else:
            alpha = float(np.exp(-dt / self.tau))
            self._state = alpha * self._state + (1.0 - alpha) * raw
        return self._state.copy()

    @property
    def value(self) -> np.ndarray:
        return self._state.copy()
