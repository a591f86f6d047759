"""The ten release criteria, runnable from the CLI and from the test suite.

Each criterion is a method returning a :class:`CriterionResult`; the suite
object caches the simulation runs several criteria share, so the whole set
completes in a few seconds.  The criteria check the library's central
claims end to end: gain synthesis round-trips, observability holds along
trajectories, both observers contract at (or near) their certified rates,
the cascade converges, and the double-cover handling is exact.

One criterion is expected to fail by design reality rather than by bug:
the attitude-error envelope bounds the transient with the full correction
gain as its decay rate, but the sphere-constrained error flow contracts at
that rate scaled by the error quaternion's scalar part, which starts well
below one for large initial errors.  The check is asserted as stated
anyway — an honest red with a measured excess beats a loosened bound.  Its
companion clause (fitted decay rate over the pre-threshold window) passes
with margin.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .attitude import attitude_jacobian_residual
from .config import RunConfig, default_config
from .gains import (
    TranslationGains,
    decoupling_inverse,
    decoupling_inverse_recursive,
    gain_consistency_residual,
    observability_matrix,
    pole_place,
    synthesize_certificate,
    system_matrix,
    verify_contraction_lmi,
)
from .harness import (
    RunRecord,
    attitude_envelope_check,
    first_crossing_time,
    fit_decay_rate,
    run_simulation,
)
from .quat import quat_normalize, quat_to_rot, skew
from .sim import true_rotation_interpolant, truth_signals

__all__ = ["CriterionResult", "AcceptanceSuite", "CRITERION_COUNT"]

CRITERION_COUNT = 10


@dataclass(frozen=True)
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] criterion {self.number:2d} — {self.name}: {self.detail}"


class AcceptanceSuite:
    """Runs the criteria against one configuration (the shipped default
    unless another is supplied), sharing simulation runs between them."""

    def __init__(self, cfg: RunConfig | None = None):
        self.cfg = cfg if cfg is not None else default_config()
        self._runs: dict[str, RunRecord] = {}

    # --- shared artifacts -------------------------------------------------

    def _estimated_run(self) -> RunRecord:
        if "estimated" not in self._runs:
            self._runs["estimated"] = run_simulation(
                self.cfg.with_overrides(feed_mode="estimated")
            )
        return self._runs["estimated"]

    def _true_feed_run(self) -> RunRecord:
        if "true" not in self._runs:
            self._runs["true"] = run_simulation(
                self.cfg.with_overrides(
                    feed_mode="true", omega_dot_mode="analytic", duration=10.0
                )
            )
        return self._runs["true"]

    def _flipped_run(self) -> RunRecord:
        if "flipped" not in self._runs:
            self._runs["flipped"] = run_simulation(
                self.cfg.with_overrides(feed_mode="estimated"), flip_time=5.0
            )
        return self._runs["flipped"]

    @staticmethod
    def _crossing(rec: RunRecord) -> tuple[float, float, float]:
        """(measured bias-error sup, threshold, first crossing time) of a run."""
        b_bar = float(np.max(rec.gyro_bias_err))
        thr = b_bar / (2.0 * rec.cfg.c1)
        return b_bar, thr, first_crossing_time(rec.t, rec.att_err, thr)

    def _gains(self) -> TranslationGains:
        return TranslationGains(self.cfg.k1, self.cfg.k2, self.cfg.k3)

    # --- criteria ---------------------------------------------------------

    def criterion_1(self) -> CriterionResult:
        K = pole_place((-4.0, -4.0, -4.0))
        got = (K.k1, K.k2, K.k3)
        want = (self.cfg.k1, self.cfg.k2, self.cfg.k3)
        return CriterionResult(
            1, "gain reproduction", got == want,
            f"pole_place(-4,-4,-4) = {got}, expected exactly {want}",
        )

    def criterion_2(self) -> CriterionResult:
        rng = np.random.default_rng(2)
        worst = 0.0
        for _ in range(1000):
            R = quat_to_rot(quat_normalize(rng.normal(size=4)))
            worst = max(worst, abs(np.linalg.det(observability_matrix(R)) + 1.0))
        return CriterionResult(
            2, "observability determinant", worst <= 1e-9,
            f"max |det + 1| = {worst:.3e} over 1000 random rotations (tol 1e-9)",
        )

    def criterion_3(self) -> CriterionResult:
        rng = np.random.default_rng(3)
        worst = 0.0
        for _ in range(1000):
            worst = max(worst, attitude_jacobian_residual(
                rng.normal(scale=2.0, size=3),
                rng.normal(scale=0.5, size=3),
                rng.normal(scale=0.5, size=3),
                self.cfg.c1,
            ))
        return CriterionResult(
            3, "attitude contraction residual", worst < 1e-12,
            f"max symmetrized-Jacobian residual = {worst:.3e} over 1000 draws (tol 1e-12)",
        )

    def criterion_4(self) -> CriterionResult:
        rec = self._estimated_run()
        b_bar, thr, crossing = self._crossing(rec)
        holds, excess, _ = attitude_envelope_check(rec, self.cfg.c1, b_bar)
        n_violations = int(np.sum(
            rec.att_err > (rec.att_err[0] * np.exp(-self.cfg.c1 * rec.t)
                           + thr * (1.0 - np.exp(-self.cfg.c1 * rec.t)) + 1e-3)
        ))
        rate = fit_decay_rate(rec.t, rec.att_err, (0.0, crossing))
        rate_ok = rate >= 0.85 * self.cfg.c1
        detail = (
            f"envelope holds: {holds} (max excess {excess:.4f} at {n_violations} of "
            f"{len(rec.t)} steps; sup bias err {b_bar:.4f}, stated bound "
            f"{self.cfg.bias_bound}); pre-threshold fitted rate {rate:.2f} "
            f"(need >= {0.85 * self.cfg.c1:.1f}): {rate_ok}"
        )
        return CriterionResult(4, "attitude error envelope and rate", holds and rate_ok, detail)

    def criterion_5(self) -> CriterionResult:
        rec = self._estimated_run()
        max_rise = float(np.max(np.diff(rec.lyapunov)))
        return CriterionResult(
            5, "Lyapunov monotonicity", max_rise <= 1e-9,
            f"max per-step increase = {max_rise:.3e} over the full run (tol 1e-9)",
        )

    def criterion_6(self) -> CriterionResult:
        rec = self._true_feed_run()
        _, _, crossing = self._crossing(rec)
        window = (2.0 * crossing, float(rec.t[-1]))
        rate = fit_decay_rate(rec.t, np.sqrt(rec.metric), window)
        need = 0.85 * self.cfg.contraction_rate
        return CriterionResult(
            6, "true-feed metric contraction", rate >= need,
            f"fitted decay of sqrt(metric) over [{window[0]:.2f}, {window[1]:.0f}] s "
            f"= {rate:.2f} (need >= {need:.2f})",
        )

    def criterion_7(self) -> CriterionResult:
        rec = self._estimated_run()
        _, _, crossing = self._crossing(rec)
        final_att = float(rec.att_err[-1])
        final_xe = float(np.linalg.norm(rec.x_err[-1]))
        start = 2.0 * crossing
        m = rec.metric[rec.t >= start]
        max_rise = float(np.max(np.diff(m)))
        slack = 1e-9 * float(rec.metric[0])
        mono = max_rise <= slack
        ok = final_att < 1e-3 and final_xe < 1e-2 and mono
        return CriterionResult(
            7, "cascade convergence", ok,
            f"final attitude err {final_att:.2e} (< 1e-3), final state err "
            f"{final_xe:.2e} (< 1e-2), metric non-increasing after {start:.2f} s: "
            f"{mono} (max rise {max_rise:.2e}, slack {slack:.2e})",
        )

    def criterion_8(self) -> CriterionResult:
        h = 1e-5
        times = np.linspace(0.1, 10.0, 100)
        R_of_t = true_rotation_interpolant(self.cfg.truth_q0, 10.0 + 1e-3)

        def A_fn(tt: float) -> np.ndarray:
            return system_matrix(R_of_t(tt))

        def O_fn(tt: float) -> np.ndarray:
            return observability_matrix(R_of_t(tt))

        worst = 0.0
        for t in times:
            _, w, wd = truth_signals(t)
            R64 = np.asarray(R_of_t(float(t)), dtype=float)
            explicit = decoupling_inverse(R64, skew(w), skew(wd))
            recursive = decoupling_inverse_recursive(A_fn, O_fn, float(t), h)
            gap = np.abs(explicit - np.asarray(recursive, dtype=float))
            worst = max(worst, float(np.max(gap)))
        return CriterionResult(
            8, "decoupling-transform oracle agreement", worst <= 1e-6,
            f"max elementwise gap = {worst:.3e} at 100 sample times, h = {h:g} (tol 1e-6)",
        )

    def criterion_9(self) -> CriterionResult:
        K = self._gains()
        cert = synthesize_certificate(K, self.cfg.contraction_rate)
        lmi = verify_contraction_lmi(cert, K)
        recovery = gain_consistency_residual(cert, K)
        ok = lmi <= 1e-9 and recovery <= 1e-6
        return CriterionResult(
            9, "certificate feasibility and gain recovery", ok,
            f"matrix-inequality max eigenvalue = {lmi:.3e} (tol 1e-9); "
            f"gain recovery residual = {recovery:.3e} (tol 1e-6); rho = {cert.rho:.6g}",
        )

    def criterion_10(self) -> CriterionResult:
        base = self._estimated_run()
        flipped = self._flipped_run()
        diff = float(np.max(np.abs(base.q_est - flipped.q_est)))
        return CriterionResult(
            10, "measurement sign-flip continuity", diff <= 1e-12,
            f"max |orientation-estimate difference| = {diff:.3e} with the measured "
            f"quaternion negated from t = 5 s (tol 1e-12)",
        )

    def run_all(self) -> list[CriterionResult]:
        return [getattr(self, f"criterion_{i}")() for i in range(1, CRITERION_COUNT + 1)]
