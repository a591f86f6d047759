import numpy as np
import pytest

from posefusion.quat import quat_normalize, quat_to_rot
from posefusion.sim import (
    STANDARD_GRAVITY,
    TruthState,
    corrupt,
    true_rotation_interpolant,
    truth_signals,
    truth_step,
)

Q0 = quat_normalize(np.array([0.7071, 0.0, 0.7071, 0.0]))


def bench_state():
    return TruthState(
        p=np.zeros(3), v=np.zeros(3), q=Q0,
        accel_bias=np.array([-0.1, 0.4, 0.2]),
        gyro_bias=np.array([0.1, -0.02, 0.05]),
    )


def test_signals_at_zero():
    a, w, wd = truth_signals(0.0)
    assert np.allclose(a, [0.0, 0.0, 0.3])
    assert np.allclose(w, [0.0, 0.0, 0.0])
    assert np.allclose(wd, [2.0, -4.0, 2.0])


def test_signals_at_quarter_period():
    t = np.pi / 2.0
    a, w, wd = truth_signals(t)
    assert np.allclose(a, [1.0, 2.0 * np.sin(0.1 * t), 0.3])
    assert np.allclose(w, [np.sin(2 * t), -np.sin(4 * t), 2.0])
    assert np.allclose(wd, [2 * np.cos(2 * t), -4 * np.cos(4 * t), 2 * np.cos(t)])


def test_standard_gravity_is_z_up():
    assert np.allclose(STANDARD_GRAVITY, [0.0, 0.0, 9.80665])


def test_truth_state_coerces_arrays():
    s = TruthState(p=[1, 2, 3], v=(0, 0, 0), q=list(Q0),
                   accel_bias=[0, 0, 0], gyro_bias=[0, 0, 0])
    assert isinstance(s.p, np.ndarray) and s.p.dtype == float


def test_corrupt_applies_biases_and_exact_pose():
    s = bench_state()
    imu, pose = corrupt(s, 0.7)
    a, w, _ = truth_signals(0.7)
    assert np.allclose(imu.a_meas, a + s.accel_bias)
    assert np.allclose(imu.omega_meas, w + s.gyro_bias)
    assert imu.t == 0.7
    assert np.array_equal(pose.p, s.p)
    assert np.array_equal(pose.q, s.q)
    pose.q[0] = 0.0   # measurement is a copy, not a view of the state
    assert s.q[0] != 0.0


def test_truth_step_keeps_unit_quaternion():
    s = bench_state()
    t = 0.0
    for _ in range(100):
        s = truth_step(s, t, 1e-2, STANDARD_GRAVITY)
        t += 1e-2
        assert np.linalg.norm(s.q) == pytest.approx(1.0, abs=1e-13)


def test_truth_step_requires_positive_dt():
    with pytest.raises(ValueError):
        truth_step(bench_state(), 0.0, 0.0, STANDARD_GRAVITY)


def integrate_truth(dt, t_end):
    s = bench_state()
    t = 0.0
    for _ in range(round(t_end / dt)):
        s = truth_step(s, t, dt, STANDARD_GRAVITY)
        t += dt
    return s


def test_truth_step_fourth_order_convergence():
    ref = integrate_truth(1e-4, 0.2)
    errs = []
    for dt in (2e-3, 1e-3):
        s = integrate_truth(dt, 0.2)
        errs.append(max(np.max(np.abs(s.p - ref.p)), np.max(np.abs(s.q - ref.q)),
                        np.max(np.abs(s.v - ref.v))))
    ratio = errs[0] / errs[1]
    assert 10.0 < ratio < 24.0   # halving dt cuts the error ~16x


def test_interpolant_initial_value_and_orthogonality():
    R_of_t = true_rotation_interpolant(Q0, 1.0)
    assert np.allclose(np.asarray(R_of_t(0.0), dtype=float), quat_to_rot(Q0),
                       atol=1e-12)
    for t in (0.0, 0.25, 0.5, 0.99):
        R = np.asarray(R_of_t(t), dtype=float)
        assert np.allclose(R.T @ R, np.eye(3), atol=1e-12)
        assert np.linalg.det(R) == pytest.approx(1.0, abs=1e-12)


def test_interpolant_range_checks():
    R_of_t = true_rotation_interpolant(Q0, 1.0)
    with pytest.raises(ValueError):
        R_of_t(-0.1)
    with pytest.raises(ValueError):
        R_of_t(1.5)


def test_interpolant_extended_precision():
    R_of_t = true_rotation_interpolant(Q0, 0.5)
    assert np.asarray(R_of_t(0.25)).dtype == np.longdouble


def test_interpolant_matches_step_integration():
    R_of_t = true_rotation_interpolant(Q0, 1.0)
    s = integrate_truth(1e-4, 1.0)
    assert np.allclose(np.asarray(R_of_t(1.0), dtype=float), quat_to_rot(s.q),
                       atol=1e-10)
