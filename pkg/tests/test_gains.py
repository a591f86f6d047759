import numpy as np
import pytest

from posefusion.gains import (
    ContractionCertificate,
    TranslationGains,
    certificate_from_lyapunov,
    chain_form,
    check_uniform_observability,
    decoupling_inverse,
    decoupling_inverse_recursive,
    gain_consistency_residual,
    metric_matrix,
    observability_matrix,
    pole_place,
    synthesize_certificate,
    system_matrix,
    verify_contraction_lmi,
)
from posefusion.quat import quat_normalize, quat_to_rot, skew
from posefusion.sim import true_rotation_interpolant, truth_signals

K_BENCH = TranslationGains(64.0, 48.0, 12.0)


@pytest.fixture(scope="module")
def rotation_of_t():
    q0 = quat_normalize(np.array([0.7071, 0.0, 0.7071, 0.0]))
    return true_rotation_interpolant(q0, 2.0)


def test_gains_validation():
    with pytest.raises(ValueError):
        TranslationGains(0.0, 48.0, 12.0)
    with pytest.raises(ValueError):
        TranslationGains(-1.0, 48.0, 12.0)
    # k2 k3 > k1 is the third-order stability condition
    with pytest.raises(ValueError):
        TranslationGains(100.0, 8.0, 12.0)
    assert np.allclose(K_BENCH.as_array(), [64.0, 48.0, 12.0])


def test_pole_place_triple_pole():
    K = pole_place([-4.0, -4.0, -4.0])
    assert (K.k1, K.k2, K.k3) == (64.0, 48.0, 12.0)


def test_pole_place_distinct_poles():
    K = pole_place([-1.0, -2.0, -3.0])
    assert (K.k1, K.k2, K.k3) == pytest.approx((6.0, 11.0, 6.0), abs=1e-12)


def test_pole_place_complex_pair():
    # (s+1-2j)(s+1+2j)(s+3) = s^3 + 5 s^2 + 11 s + 15
    K = pole_place([-1.0 + 2.0j, -1.0 - 2.0j, -3.0])
    assert (K.k1, K.k2, K.k3) == pytest.approx((15.0, 11.0, 5.0), abs=1e-12)


def test_pole_place_rejections():
    with pytest.raises(ValueError):
        pole_place([-1.0, -2.0])             # wrong count
    with pytest.raises(ValueError):
        pole_place([1.0, -2.0, -3.0])        # unstable
    with pytest.raises(ValueError):
        pole_place([-1.0 + 2.0j, -1.0 + 2.0j, -3.0])   # not a conjugate pair


def test_system_matrix_blocks():
    rng = np.random.default_rng(30)
    R = quat_to_rot(quat_normalize(rng.normal(size=4)))
    A = system_matrix(R)
    assert np.allclose(A[0:3, 3:6], np.eye(3))
    assert np.allclose(A[3:6, 6:9], -R)
    A[3:6, 6:9] = 0.0
    A[0:3, 3:6] = 0.0
    assert np.allclose(A, 0.0)


def test_observability_matrix_structure_and_determinant():
    rng = np.random.default_rng(31)
    for _ in range(25):
        R = quat_to_rot(quat_normalize(rng.normal(size=4)))
        O = observability_matrix(R)
        assert np.allclose(O[0:3, 0:3], np.eye(3))
        assert np.allclose(O[3:6, 3:6], np.eye(3))
        assert np.allclose(O[6:9, 6:9], -R)
        assert np.linalg.det(O) == pytest.approx(-1.0, abs=1e-12)


def test_matrix_builders_preserve_dtype():
    R = np.eye(3, dtype=np.longdouble)
    assert system_matrix(R).dtype == np.longdouble
    assert observability_matrix(R).dtype == np.longdouble


def test_uniform_observability_survives_rotations_not_degeneracy():
    ok, cond = check_uniform_observability(np.eye(3))
    assert ok and cond == pytest.approx(1.0)
    ok, _ = check_uniform_observability(np.zeros((3, 3)))
    assert not ok


def test_chain_form():
    Ao, Co = chain_form()
    sub = np.zeros((3, 3))
    sub[1, 0] = sub[2, 1] = 1.0
    assert np.allclose(Ao, np.kron(sub, np.eye(3)))
    assert np.allclose(Co[:, 6:9], np.eye(3))
    assert np.allclose(Co[:, 0:6], 0.0)


def test_synthesized_certificate_benchmark_values():
    cert = synthesize_certificate(K_BENCH, lam=2.0)
    # frozen closed-form values for the benchmark gains at rate 2
    P1 = np.array([
        [3.0 / 512.0, -3.0 / 256.0, 1.0 / 64.0],
        [-3.0 / 256.0, 1.0 / 32.0, -1.0 / 16.0],
        [1.0 / 64.0, -1.0 / 16.0, 1.0 / 4.0],
    ])
    assert np.allclose(cert.P, np.kron(P1, np.eye(3)), atol=1e-9)
    assert cert.rho == pytest.approx(2.0, abs=1e-9)
    assert cert.lam == 2.0
    assert cert.min_eig() > 0.0
    # defining property of the construction: the gain column lands on the
    # measurement row alone, scaled by rho/2
    k = K_BENCH.as_array()
    m = P1 @ k
    assert abs(m[0]) < 1e-9 and abs(m[1]) < 1e-9
    assert 2.0 * m[2] == pytest.approx(cert.rho, abs=1e-9)


def test_synthesized_certificate_passes_lmi_and_recovers_gains():
    cert = synthesize_certificate(K_BENCH, lam=2.0)
    assert verify_contraction_lmi(cert, K_BENCH) <= 1e-9
    assert gain_consistency_residual(cert, K_BENCH) <= 1e-6


def test_certificate_rate_beyond_pole_is_infeasible():
    # all closed-loop poles sit at -4; no certificate can beat that rate
    cert = synthesize_certificate(K_BENCH, lam=5.0)
    assert verify_contraction_lmi(cert, K_BENCH) > 0.0


def test_certificate_rate_on_pole_raises():
    with pytest.raises(np.linalg.LinAlgError):
        synthesize_certificate(K_BENCH, lam=4.0)
    with pytest.raises(np.linalg.LinAlgError):
        certificate_from_lyapunov(K_BENCH, lam=4.0)


def test_certificate_requires_positive_rate():
    with pytest.raises(ValueError):
        synthesize_certificate(K_BENCH, lam=0.0)
    with pytest.raises(ValueError):
        certificate_from_lyapunov(K_BENCH, lam=-1.0)


def test_plain_lyapunov_certificate_is_feasible():
    cert = certificate_from_lyapunov(K_BENCH, lam=1.0)
    assert cert.min_eig() > 0.0
    assert verify_contraction_lmi(cert, K_BENCH) <= 0.0


def test_lmi_rejects_asymmetric_p():
    P = np.eye(9)
    P[0, 1] = 1e-3
    cert = ContractionCertificate.__new__(ContractionCertificate)
    object.__setattr__(cert, "P", P)
    object.__setattr__(cert, "rho", 1.0)
    object.__setattr__(cert, "lam", 1.0)
    with pytest.raises(ValueError):
        verify_contraction_lmi(cert, K_BENCH)


def test_certificate_validates_p():
    with pytest.raises(ValueError):
        ContractionCertificate(P=np.eye(8), rho=1.0, lam=1.0)


def test_decoupling_inverse_static_case():
    U = decoupling_inverse(np.eye(3), np.zeros((3, 3)), np.zeros((3, 3)))
    want = np.zeros((9, 9))
    want[0:3, 6:9] = np.eye(3)
    want[3:6, 3:6] = np.eye(3)
    want[6:9, 0:3] = -np.eye(3)
    assert np.allclose(U, want)


def test_decoupling_inverse_blocks():
    rng = np.random.default_rng(32)
    R = quat_to_rot(quat_normalize(rng.normal(size=4)))
    w, wd = rng.normal(size=3), rng.normal(size=3)
    Om, Omd = skew(w), skew(wd)
    U = decoupling_inverse(R, Om, Omd)
    assert np.allclose(U[3:6, 6:9], R @ Om @ R.T)
    assert np.allclose(U[6:9, 0:3], -R.T)
    assert np.allclose(U[6:9, 3:6], -Om @ R.T)
    assert np.allclose(U[6:9, 6:9], -(Om @ Om - Omd) @ R.T)
    # invertible: the chain map round-trips
    assert np.allclose(U @ np.linalg.inv(U), np.eye(9), atol=1e-12)


def test_decoupling_inverse_rejects_nonskew():
    with pytest.raises(ValueError):
        decoupling_inverse(np.eye(3), np.eye(3), np.zeros((3, 3)))
    with pytest.raises(ValueError):
        decoupling_inverse(np.eye(3), np.zeros((3, 3)), np.diag([1.0, 0.0, 0.0]))


def test_recursion_exact_on_static_system():
    # constant matrices: every difference quotient vanishes and the
    # recursion must land exactly on the closed form
    def A_fn(t):
        return system_matrix(np.eye(3))

    def O_fn(t):
        return observability_matrix(np.eye(3))

    rec = decoupling_inverse_recursive(A_fn, O_fn, 0.5, 1e-4)
    want = decoupling_inverse(np.eye(3), np.zeros((3, 3)), np.zeros((3, 3)))
    assert np.allclose(rec, want, atol=1e-11)


def test_recursion_requires_positive_step():
    with pytest.raises(ValueError):
        decoupling_inverse_recursive(lambda t: np.eye(9), lambda t: np.eye(9), 0.0, 0.0)


def test_recursion_second_order_in_step(rotation_of_t):
    # halve the step in the truncation-dominated regime: error drops 4x
    R_of_t = rotation_of_t

    def A_fn(t):
        return system_matrix(np.asarray(R_of_t(t), dtype=float))

    def O_fn(t):
        return observability_matrix(np.asarray(R_of_t(t), dtype=float))

    _, w, wd = truth_signals(1.0)
    exact = decoupling_inverse(np.asarray(R_of_t(1.0), dtype=float), skew(w), skew(wd))
    errs = []
    for h in (1e-3, 5e-4):
        rec = decoupling_inverse_recursive(A_fn, O_fn, 1.0, h)
        errs.append(np.max(np.abs(np.asarray(rec, dtype=float) - exact)))
    assert errs[0] < 1e-4
    assert errs[0] / errs[1] == pytest.approx(4.0, abs=0.5)


def test_recursion_agrees_in_extended_precision(rotation_of_t):
    # at h = 1e-5 the nested quotients amplify double rounding to ~1e-6;
    # the extended-precision rotation feed keeps the floor near 1e-9
    R_of_t = rotation_of_t

    def A_fn(t):
        return system_matrix(R_of_t(t))

    def O_fn(t):
        return observability_matrix(R_of_t(t))

    for t in (0.3, 1.0, 1.7):
        _, w, wd = truth_signals(t)
        exact = decoupling_inverse(np.asarray(R_of_t(t), dtype=float), skew(w), skew(wd))
        rec = decoupling_inverse_recursive(A_fn, O_fn, t, 1e-5)
        assert np.max(np.abs(exact - np.asarray(rec, dtype=float))) < 1e-6


def test_metric_matrix_symmetric_positive_definite():
    rng = np.random.default_rng(33)
    cert = synthesize_certificate(K_BENCH, lam=2.0)
    R = quat_to_rot(quat_normalize(rng.normal(size=4)))
    Om, Omd = skew(rng.normal(size=3)), skew(rng.normal(size=3))
    M = metric_matrix(R, Om, Omd, cert.P)
    assert np.allclose(M, M.T)
    assert np.min(np.linalg.eigvalsh(M)) > 0.0
