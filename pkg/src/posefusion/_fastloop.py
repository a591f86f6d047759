"""Private scalar-arithmetic integration core.

Coupled fixed-step RK4 of truth + attitude observer + translation observer
as one 26-dimensional ODE.  Written in plain floats and tuples on purpose:
numpy dispatch overhead dominates at 3- and 4-vector sizes, and this loop
runs twenty thousand steps per acceptance run.  The public numpy modules
define the semantics; ``tests/test_harness.py`` pins this loop to the
reference implementation built from them, so treat any edit here as an
edit to both.

State column layout of the returned array (one row per step, column 0 is
time): p(3) v(3) q(4) | q_est(4) gyro_bias_est(3) | p_est(3) v_est(3)
accel_bias_est(3).

Measurements are evaluated at the RK4 stage times when pose decimation is
1 (the default): truth and observers advance as one flow, so no
zero-order-hold lag enters the error dynamics.  With decimation > 1 the
pose is frozen between arrivals, which reintroduces hold lag — that mode
exists precisely to study the degradation.
"""
from __future__ import annotations

import math

import numpy as np

from .config import RunConfig

__all__ = ["run_fast"]


def _qmul(pw, px, py, pz, qw, qx, qy, qz):
    return (
        pw * qw - px * qx - py * qy - pz * qz,
        pw * qx + qw * px + py * qz - pz * qy,
        pw * qy + qw * py + pz * qx - px * qz,
        pw * qz + qw * pz + px * qy - py * qx,
    )


def _rot(qw, qx, qy, qz):
    return (
        (qw * qw + qx * qx - qy * qy - qz * qz, 2 * (qx * qy - qw * qz), 2 * (qx * qz + qw * qy)),
        (2 * (qx * qy + qw * qz), qw * qw - qx * qx + qy * qy - qz * qz, 2 * (qy * qz - qw * qx)),
        (2 * (qx * qz - qw * qy), 2 * (qy * qz + qw * qx), qw * qw - qx * qx - qy * qy + qz * qz),
    )


def _mv(R, v):
    return (R[0][0] * v[0] + R[0][1] * v[1] + R[0][2] * v[2],
            R[1][0] * v[0] + R[1][1] * v[1] + R[1][2] * v[2],
            R[2][0] * v[0] + R[2][1] * v[1] + R[2][2] * v[2])


def _mtv(R, v):
    return (R[0][0] * v[0] + R[1][0] * v[1] + R[2][0] * v[2],
            R[0][1] * v[0] + R[1][1] * v[1] + R[2][1] * v[2],
            R[0][2] * v[0] + R[1][2] * v[1] + R[2][2] * v[2])


def _cross(a, b):
    return (a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0])


def _signals(t):
    a = (math.sin(t), 2.0 * math.sin(0.1 * t), 0.3)
    w = (math.sin(2.0 * t), -math.sin(4.0 * t), 2.0 * math.sin(t))
    wd = (2.0 * math.cos(2.0 * t), -4.0 * math.cos(4.0 * t), 2.0 * math.cos(t))
    return a, w, wd


def run_fast(cfg: RunConfig, flip_time: float | None = None) -> np.ndarray:
    """Integrate the configured scenario; optionally sign-flip the measured
    quaternion from ``flip_time`` onward (continuity probe)."""
    dt = cfg.dt
    c1, c2 = cfg.c1, cfg.c2
    k1g, k2g, k3g = cfg.k1, cfg.k2, cfg.k3
    ba = tuple(cfg.truth_accel_bias)
    bg = tuple(cfg.truth_gyro_bias)
    grav = tuple(cfg.gravity)
    feed_true = cfg.feed_mode == "true"
    wdot_analytic = cfg.omega_dot_mode == "analytic"
    bias_term = cfg.omega_dot_bias_term
    decim = cfg.pose_decimation

    def deriv(t, X, wdot_est, pose_hold):
        (px, py, pz, vx, vy, vz, qw, qx, qy, qz,
         hw, hx, hy, hz, bgx, bgy, bgz,
         phx, phy, phz, vhx, vhy, vhz, bax, bay, baz) = X
        a, w, wd = _signals(t)
        am = (a[0] + ba[0], a[1] + ba[1], a[2] + ba[2])
        wm = (w[0] + bg[0], w[1] + bg[1], w[2] + bg[2])
        # rotations come from normalized quaternions: mid-stage states drift
        # off the unit sphere (first-order for the estimate, whose correction
        # has a radial component) and the homogeneous form would scale R
        nq = 1.0 / math.sqrt(qw * qw + qx * qx + qy * qy + qz * qz)
        R = _rot(qw * nq, qx * nq, qy * nq, qz * nq)

        # --- truth kinematics ---
        Ra = _mv(R, a)
        dtruth = (vx, vy, vz,
                  Ra[0] - grav[0], Ra[1] - grav[1], Ra[2] - grav[2],
                  *_qmul(qw, qx, qy, qz, 0.0, 0.5 * w[0], 0.5 * w[1], 0.5 * w[2]))

        # --- measured pose (live at stage time, or held when decimated) ---
        if pose_hold is None:
            mp = (px, py, pz)
            mq = (qw, qx, qy, qz)
        else:
            mp, mq = pose_hold
        if flip_time is not None and t >= flip_time:
            mq = (-mq[0], -mq[1], -mq[2], -mq[3])

        # --- attitude observer ---
        ew, ex, ey, ez = _qmul(hw, -hx, -hy, -hz, mq[0], mq[1], mq[2], mq[3])
        n = math.sqrt(ew * ew + ex * ex + ey * ey + ez * ez)
        ew, ex, ey, ez = ew / n, ex / n, ey / n, ez / n
        s = 1.0 if ew >= 0.0 else -1.0
        cw = 2.0 * c1 * (1.0 - abs(ew))
        cx = wm[0] - bgx + 2.0 * c1 * s * ex
        cy = wm[1] - bgy + 2.0 * c1 * s * ey
        cz = wm[2] - bgz + 2.0 * c1 * s * ez
        datt = (*_qmul(hw, hx, hy, hz, 0.5 * cw, 0.5 * cx, 0.5 * cy, 0.5 * cz),
                -c2 * ew * ex, -c2 * ew * ey, -c2 * ew * ez)

        # --- translation observer ---
        if feed_true:
            Rf, wf, wdf = R, w, wd
        else:
            nh = 1.0 / math.sqrt(hw * hw + hx * hx + hy * hy + hz * hz)
            Rf = _rot(hw * nh, hx * nh, hy * nh, hz * nh)
            wf = (wm[0] - bgx, wm[1] - bgy, wm[2] - bgz)
            if wdot_analytic:
                wdf = wd
            elif bias_term:
                wdf = (wdot_est[0] + c2 * ew * ex,
                       wdot_est[1] + c2 * ew * ey,
                       wdot_est[2] + c2 * ew * ez)
            else:
                wdf = wdot_est
        pe = (mp[0] - phx, mp[1] - phy, mp[2] - phz)
        f = (am[0] - bax, am[1] - bay, am[2] - baz)
        Rf_f = _mv(Rf, f)
        ww = _mv(Rf, wf)
        c3 = _cross(ww, pe)
        dph = (vhx + k3g * pe[0], vhy + k3g * pe[1], vhz + k3g * pe[2])
        dvh = (Rf_f[0] - grav[0] + k2g * pe[0] + k3g * c3[0],
               Rf_f[1] - grav[1] + k2g * pe[1] + k3g * c3[1],
               Rf_f[2] - grav[2] + k2g * pe[2] + k3g * c3[2])
        u = _mtv(Rf, pe)
        t2 = _cross(wf, u)
        t3 = _cross(wf, _cross(wf, u))
        t4 = _cross(wdf, u)
        dba = (-(k1g * u[0] + k2g * t2[0] + k3g * (t3[0] - t4[0])),
               -(k1g * u[1] + k2g * t2[1] + k3g * (t3[1] - t4[1])),
               -(k1g * u[2] + k2g * t2[2] + k3g * (t3[2] - t4[2])))
        return (*dtruth, *datt, *dph, *dvh, *dba)

    X = (*cfg.truth_p0, *cfg.truth_v0, *cfg.truth_q0,
         *cfg.obs_q0, *cfg.obs_gyro_bias0,
         *cfg.obs_p0, *cfg.obs_v0, *cfg.obs_accel_bias0)
    n_steps = round(cfg.duration / dt)
    rows = np.empty((n_steps + 1, 27))
    rows[0] = (0.0, *X)
    tau = cfg.omega_dot_tau
    alpha = math.exp(-dt / tau) if tau > 0.0 else 0.0
    wdot_f = (0.0, 0.0, 0.0)
    wm_prev = None
    pose_hold = None
    t = 0.0
    for i in range(n_steps):
        # angular-acceleration filter: once per step, held through the stages
        _, w, _ = _signals(t)
        wm = (w[0] + bg[0], w[1] + bg[1], w[2] + bg[2])
        if wm_prev is not None:
            raw = ((wm[0] - wm_prev[0]) / dt,
                   (wm[1] - wm_prev[1]) / dt,
                   (wm[2] - wm_prev[2]) / dt)
            wdot_f = (alpha * wdot_f[0] + (1.0 - alpha) * raw[0],
                      alpha * wdot_f[1] + (1.0 - alpha) * raw[1],
                      alpha * wdot_f[2] + (1.0 - alpha) * raw[2])
        wm_prev = wm
        if decim > 1:
            if i % decim == 0:
                pose_hold = ((X[0], X[1], X[2]), (X[6], X[7], X[8], X[9]))
        else:
            pose_hold = None

        k1 = deriv(t, X, wdot_f, pose_hold)
        X2 = tuple(x + 0.5 * dt * d for x, d in zip(X, k1))
        k2 = deriv(t + 0.5 * dt, X2, wdot_f, pose_hold)
        X3 = tuple(x + 0.5 * dt * d for x, d in zip(X, k2))
        k3 = deriv(t + 0.5 * dt, X3, wdot_f, pose_hold)
        X4 = tuple(x + dt * d for x, d in zip(X, k3))
        k4 = deriv(t + dt, X4, wdot_f, pose_hold)
        X = tuple(x + (dt / 6.0) * (d1 + 2.0 * d2 + 2.0 * d3 + d4)
                  for x, d1, d2, d3, d4 in zip(X, k1, k2, k3, k4))
        # renormalize both quaternions
        Xl = list(X)
        for off in (6, 10):
            nq = math.sqrt(Xl[off] ** 2 + Xl[off + 1] ** 2
                           + Xl[off + 2] ** 2 + Xl[off + 3] ** 2)
            Xl[off] /= nq
            Xl[off + 1] /= nq
            Xl[off + 2] /= nq
            Xl[off + 3] /= nq
        X = tuple(Xl)
        t = (i + 1) * dt
        rows[i + 1] = (t, *X)
    return rows
