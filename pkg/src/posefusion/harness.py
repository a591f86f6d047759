"""Simulation harness: end-to-end runs, error series, fits, CSV and plots.

A run co-simulates ground truth with both observers at a fixed step and
returns a :class:`RunRecord` holding the raw state history plus every
derived error series the analysis needs (attitude error norm, bias error
norm, Lyapunov value, stacked translation error, and the time-varying
quadratic metric in which the translation error contracts).

Two integration engines exist: the scalar fast loop (default) and a numpy
reference built from the public module functions.  They implement the same
semantics; the test suite holds them together.
"""
from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import _fastloop
from .attitude import AttitudeGains, AttitudeState, attitude_derivative
from .config import RunConfig
from .gains import TranslationGains, synthesize_certificate
from .quat import error_quat, quat_mul, quat_normalize, quat_to_rot, skew
from .sim import truth_signals
from .translation import AttitudeFeed, TranslationState, translation_derivative

__all__ = [
    "RunRecord",
    "run_simulation",
    "fit_decay_rate",
    "attitude_envelope_check",
    "first_crossing_time",
    "emit_csv",
    "read_csv",
    "emit_plots",
    "dump_truth_csv",
    "CSV_COLUMNS",
]


@dataclass(frozen=True)
class RunRecord:
    """Complete history of one run, one row per integration step."""

    cfg: RunConfig
    t: np.ndarray                 # (n,)
    p: np.ndarray                 # (n, 3) truth position
    v: np.ndarray                 # (n, 3) truth velocity
    q: np.ndarray                 # (n, 4) truth orientation
    q_est: np.ndarray             # (n, 4)
    gyro_bias_est: np.ndarray     # (n, 3)
    p_est: np.ndarray             # (n, 3)
    v_est: np.ndarray             # (n, 3)
    accel_bias_est: np.ndarray    # (n, 3)
    q_err: np.ndarray = field(init=False)          # (n, 4) error quaternion
    att_err: np.ndarray = field(init=False)        # (n,) |vector part of q_err|
    gyro_bias_err: np.ndarray = field(init=False)  # (n,)
    lyapunov: np.ndarray = field(init=False)       # (n,)
    x_err: np.ndarray = field(init=False)          # (n, 9) p/v/bias error stack
    _metric_cache: np.ndarray | None = field(init=False, default=None, repr=False)

    def __post_init__(self) -> None:
        q, qh = self.q, self.q_est
        qe = np.empty_like(q)
        # conj(q_est) (x) q, vectorized over rows
        qe[:, 0] = qh[:, 0] * q[:, 0] + np.sum(qh[:, 1:] * q[:, 1:], axis=1)
        qe[:, 1] = (qh[:, 0] * q[:, 1] - qh[:, 1] * q[:, 0]
                    - (qh[:, 2] * q[:, 3] - qh[:, 3] * q[:, 2]))
        qe[:, 2] = (qh[:, 0] * q[:, 2] - qh[:, 2] * q[:, 0]
                    - (qh[:, 3] * q[:, 1] - qh[:, 1] * q[:, 3]))
        qe[:, 3] = (qh[:, 0] * q[:, 3] - qh[:, 3] * q[:, 0]
                    - (qh[:, 1] * q[:, 2] - qh[:, 2] * q[:, 1]))
        qe /= np.linalg.norm(qe, axis=1, keepdims=True)
        object.__setattr__(self, "q_err", qe)
        object.__setattr__(self, "att_err", np.linalg.norm(qe[:, 1:], axis=1))
        bge = self.cfg.truth_gyro_bias[None, :] - self.gyro_bias_est
        object.__setattr__(self, "gyro_bias_err", np.linalg.norm(bge, axis=1))
        object.__setattr__(
            self, "lyapunov",
            self.att_err ** 2 + self.gyro_bias_err ** 2 / (2.0 * self.cfg.c2),
        )
        xe = np.hstack([
            self.p - self.p_est,
            self.v - self.v_est,
            self.cfg.truth_accel_bias[None, :] - self.accel_bias_est,
        ])
        object.__setattr__(self, "x_err", xe)

    @property
    def translation_err(self) -> np.ndarray:
        """(n,) combined position/velocity/bias error norm."""
        return np.linalg.norm(self.x_err, axis=1)

    @property
    def metric(self) -> np.ndarray:
        """(n,) series of x_err' M(t) x_err; computed on first access."""
        if self._metric_cache is None:
            object.__setattr__(self, "_metric_cache", _metric_series(self))
        return self._metric_cache


def _metric_series(rec: RunRecord) -> np.ndarray:
    """x' M(t) x along the run, in the certificate from the configured gains.

    The metric is anchored to the true trajectory: rotation from the truth
    quaternion, angular rate and acceleration from the analytic drive
    signals.  Evaluated as z' P z with z the solution of the
    inverse-transform system, which avoids forming M itself.
    """
    K = TranslationGains(rec.cfg.k1, rec.cfg.k2, rec.cfg.k3)
    cert = synthesize_certificate(K, rec.cfg.contraction_rate)
    P = cert.P
    n = len(rec.t)
    out = np.empty(n)
    Ui = np.zeros((9, 9))
    Ui[0:3, 6:9] = np.eye(3)
    Ui[3:6, 3:6] = np.eye(3)
    for i in range(n):
        R = quat_to_rot(rec.q[i])
        _, w, wd = truth_signals(rec.t[i])
        Om = skew(w)
        G = Om @ Om - skew(wd)
        Rt = R.T
        Ui[3:6, 6:9] = R @ Om @ Rt
        Ui[6:9, 0:3] = -Rt
        Ui[6:9, 3:6] = -Om @ Rt
        Ui[6:9, 6:9] = -G @ Rt
        z = np.linalg.solve(Ui, rec.x_err[i])
        out[i] = z @ P @ z
    return out


def _randomized(cfg: RunConfig) -> RunConfig:
    """Observer initial state drawn from a seeded generator (truth untouched)."""
    rng = np.random.default_rng(cfg.seed)
    q0 = rng.normal(size=4)
    return cfg.with_overrides(
        obs_q0=q0 / np.linalg.norm(q0),
        obs_p0=rng.normal(scale=2.0, size=3),
        obs_v0=rng.normal(scale=2.0, size=3),
    )


def run_simulation(
    cfg: RunConfig,
    engine: str = "fast",
    flip_time: float | None = None,
) -> RunRecord:
    """Simulate the configured scenario and return its full record.

    ``engine`` selects the scalar fast loop (default) or the numpy
    reference implementation ("reference"); both produce the same
    trajectories to ~1e-10 relative.  ``flip_time`` negates the measured
    quaternion from that time onward, exercising the double-cover
    continuity of the attitude observer.
    """
    if cfg.randomize_init:
        cfg = _randomized(cfg)
    if engine == "fast":
        rows = _fastloop.run_fast(cfg, flip_time=flip_time)
    elif engine == "reference":
        rows = _reference_run(cfg, flip_time=flip_time)
    else:
        raise ValueError(f"unknown engine {engine!r}")
    return RunRecord(
        cfg=cfg,
        t=rows[:, 0],
        p=rows[:, 1:4],
        v=rows[:, 4:7],
        q=rows[:, 7:11],
        q_est=rows[:, 11:15],
        gyro_bias_est=rows[:, 15:18],
        p_est=rows[:, 18:21],
        v_est=rows[:, 21:24],
        accel_bias_est=rows[:, 24:27],
    )


def _reference_run(cfg: RunConfig, flip_time: float | None = None) -> np.ndarray:
    """Numpy engine assembled from the public module functions.

    Kept deliberately naive — it exists to define the semantics the fast
    loop must reproduce, not to be quick.
    """
    att_g = AttitudeGains(cfg.c1, cfg.c2)
    K = TranslationGains(cfg.k1, cfg.k2, cfg.k3)
    g = cfg.gravity
    dt = cfg.dt
    n_steps = round(cfg.duration / dt)

    p, v, q = cfg.truth_p0.copy(), cfg.truth_v0.copy(), cfg.truth_q0.copy()
    att = AttitudeState(cfg.obs_q0, cfg.obs_gyro_bias0)
    tr = TranslationState(cfg.obs_p0, cfg.obs_v0, cfg.obs_accel_bias0)

    rows = np.empty((n_steps + 1, 27))

    def pack(t):
        return (t, *p, *v, *q, *att.q, *att.gyro_bias, *tr.p, *tr.v, *tr.accel_bias)

    rows[0] = pack(0.0)
    wdot_f = np.zeros(3)
    wm_prev = None
    alpha = math.exp(-dt / cfg.omega_dot_tau) if cfg.omega_dot_tau > 0 else 0.0
    pose_hold: tuple[np.ndarray, np.ndarray] | None = None
    t = 0.0

    def stage_deriv(tt, pp, vv, qq, aq, ab, tp, tv, tb, wdot_est, hold):
        a, w, wd = truth_signals(tt)
        am = a + cfg.truth_accel_bias
        wm = w + cfg.truth_gyro_bias
        Rtrue = quat_to_rot(quat_normalize(qq))
        dp, dv = vv, Rtrue @ a - g
        dq = 0.5 * quat_mul(qq, np.array([0.0, *w]))
        if hold is None:
            mp, mq = pp, qq
        else:
            mp, mq = hold
        if flip_time is not None and tt >= flip_time:
            mq = -mq
        st = AttitudeState(aq, ab)
        daq, dab = attitude_derivative(st, wm, quat_normalize(mq), att_g)
        if cfg.feed_mode == "true":
            feed = AttitudeFeed(Rtrue, skew(w), skew(wd))
        else:
            wf = wm - ab
            if cfg.omega_dot_mode == "analytic":
                wdf = wd
            else:
                wdf = wdot_est
                if cfg.omega_dot_bias_term:
                    qe = error_quat(aq, quat_normalize(mq))
                    wdf = wdf + cfg.c2 * qe[0] * qe[1:]
            feed = AttitudeFeed(quat_to_rot(quat_normalize(aq)), skew(wf), skew(wdf))
        dtp, dtv, dtb = translation_derivative(
            TranslationState(tp, tv, tb), am, mp, feed, K, g)
        return dp, dv, dq, daq, dab, dtp, dtv, dtb

    for i in range(n_steps):
        _, w, _ = truth_signals(t)
        wm = w + cfg.truth_gyro_bias
        if wm_prev is not None:
            raw = (wm - wm_prev) / dt
            wdot_f = alpha * wdot_f + (1.0 - alpha) * raw
        wm_prev = wm
        if cfg.pose_decimation > 1:
            if i % cfg.pose_decimation == 0:
                pose_hold = (p.copy(), q.copy())
            hold = pose_hold
        else:
            hold = None

        y0 = (p, v, q, att.q, att.gyro_bias, tr.p, tr.v, tr.accel_bias)
        k1 = stage_deriv(t, *y0, wdot_f, hold)
        y1 = tuple(x + 0.5 * dt * d for x, d in zip(y0, k1))
        k2 = stage_deriv(t + 0.5 * dt, *y1, wdot_f, hold)
        y2 = tuple(x + 0.5 * dt * d for x, d in zip(y0, k2))
        k3 = stage_deriv(t + 0.5 * dt, *y2, wdot_f, hold)
        y3 = tuple(x + dt * d for x, d in zip(y0, k3))
        k4 = stage_deriv(t + dt, *y3, wdot_f, hold)
        out = tuple(
            x + (dt / 6.0) * (a + 2 * b + 2 * c + d)
            for x, a, b, c, d in zip(y0, k1, k2, k3, k4)
        )
        p, v, q = out[0], out[1], quat_normalize(out[2])
        att = AttitudeState(quat_normalize(out[3]), out[4])
        tr = TranslationState(out[5], out[6], out[7])
        t = (i + 1) * dt
        rows[i + 1] = pack(t)
    return rows


def fit_decay_rate(t: np.ndarray, values: np.ndarray, window: tuple[float, float]) -> float:
    """Least-squares exponential decay rate over a time window.

    Fits log(values) against t and returns the negated slope, so a decaying
    series yields a positive rate.  Values inside the window must be
    strictly positive.
    """
    t0, t1 = window
    if not t1 > t0:
        raise ValueError(f"window must satisfy t1 > t0, got {window}")
    mask = (t >= t0) & (t <= t1)
    if not np.any(mask):
        raise ValueError(f"window {window} selects no samples")
    vals = values[mask]
    if np.any(vals <= 0.0):
        raise ValueError("decay-rate fit needs strictly positive values in the window")
    slope = np.polyfit(t[mask], np.log(vals), 1)[0]
    return float(-slope)


def first_crossing_time(t: np.ndarray, series: np.ndarray, threshold: float) -> float:
    """First time the series reaches (<=) the threshold; NaN if it never does."""
    idx = np.nonzero(series <= threshold)[0]
    return float(t[idx[0]]) if idx.size else float("nan")


def attitude_envelope_check(
    record: RunRecord, c1: float, b_bar: float
) -> tuple[bool, float, float]:
    """Check the attitude error against its exponential-plus-offset envelope.

    Tests  att_err(t) <= att_err(0) e^{-c1 t} + (b_bar / 2 c1)(1 - e^{-c1 t}) + 1e-3
    at every sample.  Returns ``(holds, max_violation, threshold_crossing)``
    where the crossing is the first time the error reaches b_bar / (2 c1).

    The envelope's decay rate presumes the idealized norm-preserving error
    flow; the integrated observer contracts at a state-dependent fraction
    of c1 while the error is large, so expect transient violations on
    aggressive initial errors (see the acceptance suite, which documents
    this as a known red check).
    """
    t = record.t
    env = (record.att_err[0] * np.exp(-c1 * t)
           + (b_bar / (2.0 * c1)) * (1.0 - np.exp(-c1 * t))
           + 1e-3)
    excess = record.att_err - env
    max_violation = float(np.max(excess))
    crossing = first_crossing_time(t, record.att_err, b_bar / (2.0 * c1))
    return max_violation <= 0.0, max_violation, crossing


CSV_COLUMNS = (
    ["t"]
    + [f"p_{ax}" for ax in "xyz"] + [f"v_{ax}" for ax in "xyz"]
    + [f"q_{c}" for c in "wxyz"]
    + [f"q_est_{c}" for c in "wxyz"] + [f"gyro_bias_est_{ax}" for ax in "xyz"]
    + [f"p_est_{ax}" for ax in "xyz"] + [f"v_est_{ax}" for ax in "xyz"]
    + [f"accel_bias_est_{ax}" for ax in "xyz"]
    + ["att_err", "gyro_bias_err", "lyapunov", "metric"]
)


def _record_matrix(record: RunRecord) -> np.ndarray:
    return np.column_stack([
        record.t, record.p, record.v, record.q,
        record.q_est, record.gyro_bias_est,
        record.p_est, record.v_est, record.accel_bias_est,
        record.att_err, record.gyro_bias_err, record.lyapunov, record.metric,
    ])


def emit_csv(record: RunRecord, path: str) -> None:
    """Write the record with a fixed column order at 17 significant digits.

    17 digits round-trips IEEE doubles exactly, so identical configs
    produce byte-identical files and re-parsing reproduces the arrays.
    """
    data = _record_matrix(record)
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_COLUMNS)
            for row in data:
                writer.writerow([f"{x:.17g}" for x in row])
    except OSError as exc:
        raise OSError(f"cannot write CSV to {path}: {exc}") from exc


def read_csv(path: str) -> tuple[list[str], np.ndarray]:
    """Parse a CSV written by :func:`emit_csv`: (header, float matrix)."""
    try:
        with open(path, "r", newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            data = np.array([[float(x) for x in row] for row in reader])
    except OSError as exc:
        raise OSError(f"cannot read CSV from {path}: {exc}") from exc
    return header, data


def emit_plots(record: RunRecord, out_dir: str) -> list[str]:
    """Write the two standard diagnostic plots; returns the file paths.

    One shows the attitude error norm with its threshold line and first
    crossing, the other the translation error metric on a log axis.
    """
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    os.makedirs(out_dir, exist_ok=True)
    b_bar = float(np.max(record.gyro_bias_err))
    thr = b_bar / (2.0 * record.cfg.c1)
    crossing = first_crossing_time(record.t, record.att_err, thr)

    paths = []
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.semilogy(record.t, np.maximum(record.att_err, 1e-18), label="attitude error")
    ax.axhline(thr, color="gray", linestyle="--", label=f"threshold {thr:.4g}")
    if math.isfinite(crossing):
        ax.axvline(crossing, color="black", linewidth=0.8)
    ax.set_xlabel("t [s]")
    ax.set_ylabel("|error vector|")
    ax.legend()
    ax.set_title("Attitude error")
    path = os.path.join(out_dir, "attitude_error.png")
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    paths.append(path)

    fig, ax = plt.subplots(figsize=(7, 4))
    ax.semilogy(record.t, np.maximum(record.metric, 1e-30), label="x' M(t) x")
    ax.set_xlabel("t [s]")
    ax.set_ylabel("metric value")
    ax.legend()
    ax.set_title("Translation error metric")
    path = os.path.join(out_dir, "translation_metric.png")
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    paths.append(path)
    return paths


def dump_truth_csv(cfg: RunConfig, path: str) -> None:
    """Integrate truth only and write t, p, v, q, ba, bg, am, wm per step."""
    from .sim import TruthState, corrupt, truth_step

    state = TruthState(
        p=cfg.truth_p0, v=cfg.truth_v0, q=cfg.truth_q0,
        accel_bias=cfg.truth_accel_bias, gyro_bias=cfg.truth_gyro_bias,
    )
    n_steps = round(cfg.duration / cfg.dt)
    header = (
        ["t"]
        + [f"p_{ax}" for ax in "xyz"] + [f"v_{ax}" for ax in "xyz"]
        + [f"q_{c}" for c in "wxyz"]
        + [f"accel_bias_{ax}" for ax in "xyz"] + [f"gyro_bias_{ax}" for ax in "xyz"]
        + [f"a_meas_{ax}" for ax in "xyz"] + [f"omega_meas_{ax}" for ax in "xyz"]
    )
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            t = 0.0
            for i in range(n_steps + 1):
                imu, pose = corrupt(state, t)
                row = [t, *state.p, *state.v, *state.q,
                       *state.accel_bias, *state.gyro_bias,
                       *imu.a_meas, *imu.omega_meas]
                writer.writerow([f"{x:.17g}" for x in row])
                if i < n_steps:
                    state = truth_step(state, t, cfg.dt, cfg.gravity)
                    t = (i + 1) * cfg.dt
    except OSError as exc:
        raise OSError(f"cannot write truth CSV to {path}: {exc}") from exc
