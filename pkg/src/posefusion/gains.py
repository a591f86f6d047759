"""Gain selection and contraction certificates for the translation observer.

The translation error dynamics are linear time-varying with a special
structure: the only nonzero blocks of the 9x9 system matrix are an identity
coupling position-error to velocity-error and a rotation coupling
velocity-error to accel-bias error, while only position error is measured.
That structure makes the system uniformly observable with an
orthogonal-by-blocks observability matrix, and a time-dependent change of
coordinates (the "decoupling transform" below) turns it into three parallel
integrator chains.  Constant gains placed on the chains therefore work for
every trajectory, and a single quadratic certificate proves exponential
convergence in the transformed coordinates.

Everything here is a pure function on small dense matrices; scipy handles
the one Lyapunov equation involved.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_continuous_lyapunov

__all__ = [
    "TranslationGains",
    "ContractionCertificate",
    "observability_matrix",
    "check_uniform_observability",
    "pole_place",
    "chain_form",
    "system_matrix",
    "synthesize_certificate",
    "certificate_from_lyapunov",
    "verify_contraction_lmi",
    "gain_consistency_residual",
    "decoupling_inverse",
    "decoupling_inverse_recursive",
    "metric_matrix",
]

_I3 = np.eye(3)


@dataclass(frozen=True)
class TranslationGains:
    """Per-axis scalar gains; the full gain blocks are k_i times identity.

    The characteristic polynomial of the gained integrator chain is
    s^3 + k3 s^2 + k2 s + k1, so the gains must make that cubic Hurwitz:
    all positive and k2*k3 > k1.
    """

    k1: float
    k2: float
    k3: float

    def __post_init__(self) -> None:
        if not (self.k1 > 0.0 and self.k2 > 0.0 and self.k3 > 0.0):
            raise ValueError(f"gains must be positive, got {(self.k1, self.k2, self.k3)}")
        if not self.k2 * self.k3 > self.k1:
            raise ValueError(
                f"gains {(self.k1, self.k2, self.k3)} fail the Hurwitz condition k2*k3 > k1"
            )

    def as_array(self) -> np.ndarray:
        return np.array([self.k1, self.k2, self.k3])


@dataclass(frozen=True)
class ContractionCertificate:
    """Quadratic certificate (P, rho) for contraction at rate lam.

    ``P`` is 9x9 symmetric; ``rho`` scales the output injection in the
    matrix inequality.  Construction only enforces symmetry — a certificate
    built for an infeasible rate is intentionally representable (it then
    fails :func:`verify_contraction_lmi`, which is the point of having one).
    """

    P: np.ndarray
    rho: float
    lam: float

    def __post_init__(self) -> None:
        P = np.asarray(self.P, dtype=float)
        if P.shape != (9, 9):
            raise ValueError(f"certificate P must be 9x9, got {P.shape}")
        if np.max(np.abs(P - P.T)) > 1e-9:
            raise ValueError("certificate P must be symmetric")
        object.__setattr__(self, "P", P)

    def min_eig(self) -> float:
        return float(np.min(np.linalg.eigvalsh(self.P)))


def system_matrix(R: np.ndarray) -> np.ndarray:
    """9x9 translation-error system matrix: blocks (1,2) = I and (2,3) = -R.

    Preserves the dtype of ``R`` (extended-precision rotations yield an
    extended-precision system matrix, which the finite-difference oracle
    relies on).
    """
    R = np.asarray(R)
    A = np.zeros((9, 9), dtype=R.dtype)
    A[0:3, 3:6] = np.eye(3, dtype=R.dtype)
    A[3:6, 6:9] = -R
    return A


def observability_matrix(R: np.ndarray) -> np.ndarray:
    """Stacked observability matrix for position-only measurement.

    Built by lifting the measurement row block through the dynamics:
    N1 = C, N(i+1) = Ndot(i) + N(i) A.  Because C is constant and the first
    lift lands on a constant block, every Ndot term vanishes and the chain
    reduces to matrix products; the result is block-diagonal
    diag(I, I, -R), so the determinant is -det(R) = -1 for any rotation.
    Dtype follows ``R`` like :func:`system_matrix`.
    """
    A = system_matrix(R)
    C = np.zeros((3, 9), dtype=A.dtype)
    C[:, 0:3] = np.eye(3, dtype=A.dtype)
    n1 = C
    n2 = n1 @ A          # lift of a constant row block: time derivative is zero
    n3 = n2 @ A          # n2 is itself constant ([0 I 0]), same argument
    return np.vstack([n1, n2, n3])


def check_uniform_observability(R: np.ndarray) -> tuple[bool, float]:
    """Rank test on the stacked observability matrix.

    Returns ``(observable, condition_number)`` where observable means
    |det| > 1e-6.  ``R`` is not validated as a rotation on purpose: passing
    a degraded block (e.g. zeros) is how loss of observability is probed.
    """
    obs = observability_matrix(R)
    det = float(np.linalg.det(obs))
    return abs(det) > 1e-6, float(np.linalg.cond(obs))


def pole_place(poles) -> TranslationGains:
    """Gains whose closed-loop chain has the given three poles.

    The coefficients of prod(s - p_i) = s^3 + k3 s^2 + k2 s + k1 are read
    off directly.  Complex poles must come in conjugate pairs and all poles
    must be strictly stable, otherwise the gains would not be real/Hurwitz.
    """
    p = np.atleast_1d(np.asarray(poles, dtype=complex))
    if p.shape != (3,):
        raise ValueError(f"exactly three poles required, got {p.shape}")
    if np.any(p.real >= 0.0):
        raise ValueError(f"all poles must have negative real part, got {poles}")
    sort_key = lambda v: (v.real, v.imag)   # total order, so ties cannot reorder
    if not np.allclose(
        sorted(p, key=sort_key), sorted(np.conj(p), key=sort_key), atol=1e-12
    ):
        raise ValueError(f"complex poles must form conjugate pairs, got {poles}")
    coeffs = np.polynomial.polynomial.polyfromroots(p)  # ascending degree, monic
    k1, k2, k3 = coeffs[0].real, coeffs[1].real, coeffs[2].real
    return TranslationGains(k1=float(k1), k2=float(k2), k3=float(k3))


def chain_form() -> tuple[np.ndarray, np.ndarray]:
    """Integrator-chain coordinates: (A_o, C_o) with A_o 9x9, C_o 3x9.

    Three decoupled chains, one per axis, with measurement on the last
    block.  All the certificate math happens in these coordinates.
    """
    A1 = np.zeros((3, 3))
    A1[1, 0] = 1.0
    A1[2, 1] = 1.0
    Ao = np.kron(A1, _I3)
    Co = np.zeros((3, 9))
    Co[:, 6:9] = _I3
    return Ao, Co


def _chain_axis(K: TranslationGains) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-axis (3x3) chain matrices: open loop, gain column, closed loop."""
    A1 = np.zeros((3, 3))
    A1[1, 0] = 1.0
    A1[2, 1] = 1.0
    k = K.as_array()
    c1 = np.array([0.0, 0.0, 1.0])
    Acl = A1 - np.outer(k, c1)
    return A1, k, Acl


def _shifted_closed_loop(K: TranslationGains, lam: float) -> tuple[np.ndarray, np.ndarray]:
    """(k, Acl + lam I), refusing shifts that land on a closed-loop pole.

    The Lyapunov equation behind the certificates is uniquely solvable only
    when no two eigenvalues of the shifted matrix sum to zero; scipy would
    otherwise perturb the coefficients and hand back a meaningless result.
    Better to refuse loudly.
    """
    _, k, Acl = _chain_axis(K)
    As = Acl + lam * np.eye(3)
    # Singularity of the Lyapunov operator X -> As'X + XAs, via its Kronecker
    # sum.  (Eigenvalue pair sums are useless here: the shifted matrix is
    # defective at a collision and its numerical eigenvalues scatter at
    # eps^(1/3).)
    L = np.kron(np.eye(3), As.T) + np.kron(As.T, np.eye(3))
    sv = np.linalg.svd(L, compute_uv=False)
    if sv[-1] < 1e-9 * sv[0]:
        raise np.linalg.LinAlgError(
            f"contraction rate {lam} collides with a closed-loop pole; "
            "the shifted Lyapunov equation is singular"
        )
    return k, As


def synthesize_certificate(K: TranslationGains, lam: float) -> ContractionCertificate:
    """Build (P, rho) so the gain formula inverts exactly.

    Works per axis (the 9x9 problem is a Kronecker product of a 3x3 one).
    Solves the shifted Lyapunov equation

        (Acl + lam I)^T P1 + P1 (Acl + lam I) = -Q1,
        Q1 = diag(1 + th1, 1 + th2, 1),

    where (th1, th2) solve the 2x2 linear system forcing the first two
    entries of P1 @ k to zero.  Then rho = 2 (P1 @ k)[2] makes
    (rho/2) P^{-1} C_o^T land exactly on the block-diagonal gain stack —
    the closed-form counterpart of picking the certificate the gain formula
    came from.  With the default gains and lam = 2 this gives
    Q1 = diag(0, 0, 1) and rho = 2.

    For lam beyond the slowest closed-loop pole the construction still
    returns a certificate, but an indefinite one whose matrix-inequality
    residual is positive — the correct outcome, since no certificate can
    beat the pole.  At lam exactly equal to a pole the shifted equation is
    singular and a LinAlgError surfaces.
    """
    if lam <= 0.0:
        raise ValueError(f"contraction rate must be positive, got {lam}")
    k, As = _shifted_closed_loop(K, lam)

    def solve_p(Q1: np.ndarray) -> np.ndarray:
        P1 = solve_continuous_lyapunov(As.T, -Q1)
        return 0.5 * (P1 + P1.T)

    base = solve_p(np.diag([1.0, 1.0, 1.0]))
    da = solve_p(np.diag([1.0, 0.0, 0.0]))
    db = solve_p(np.diag([0.0, 1.0, 0.0]))
    # (P1 k)[0:2] is affine in (th1, th2); zero it
    M = np.column_stack([(da @ k)[0:2], (db @ k)[0:2]])
    th = np.linalg.solve(M, -(base @ k)[0:2])
    P1 = base + th[0] * da + th[1] * db
    rho = 2.0 * float((P1 @ k)[2])
    return ContractionCertificate(P=np.kron(P1, _I3), rho=rho, lam=float(lam))


def certificate_from_lyapunov(
    K: TranslationGains, lam: float, q_scale: float = 1.0
) -> ContractionCertificate:
    """Plain Lyapunov-equation certificate with Q = q_scale * I.

    Solves (Acl + lam I)^T P1 + P1 (Acl + lam I) = -q_scale I per axis and
    picks the smallest rho (via a Schur-complement bound, padded 0.1%) that
    keeps the matrix inequality nonpositive.  Simpler than
    :func:`synthesize_certificate` but the gain-recovery cross-check is
    only approximate for it; use it when any feasible certificate will do.
    """
    if lam <= 0.0:
        raise ValueError(f"contraction rate must be positive, got {lam}")
    k, As = _shifted_closed_loop(K, lam)
    P1 = solve_continuous_lyapunov(As.T, -q_scale * np.eye(3))
    P1 = 0.5 * (P1 + P1.T)
    # E = -q I + sym((P1 k) c1^T) - rho c1 c1^T must be <= 0; eliminating the
    # first two coordinates against the -qI block gives the minimal rho.
    m = P1 @ k
    rho_min = (2.0 * m[2] + (m[0] ** 2 + m[1] ** 2) / q_scale) if q_scale > 0 else 2.0 * m[2]
    rho = float(rho_min) * 1.001
    return ContractionCertificate(P=np.kron(P1, _I3), rho=rho, lam=float(lam))


def verify_contraction_lmi(cert: ContractionCertificate, K: TranslationGains) -> float:
    """Largest eigenvalue of the contraction matrix inequality; <= 0 certifies.

    Evaluates the symmetric form

        A_o^T P + P A_o + 2 lam P - rho C_o^T C_o

    in chain coordinates and returns its maximum eigenvalue.  Values at or
    below ~1e-9 certify contraction at rate ``cert.lam`` under gains whose
    output injection matches ``cert.rho``; see
    :func:`gain_consistency_residual` for the companion check that
    (rho/2) P^{-1} C_o^T actually reproduces ``K``.
    """
    P = cert.P
    if np.max(np.abs(P - P.T)) > 1e-9:
        raise ValueError("certificate P must be symmetric")
    Ao, Co = chain_form()
    E = Ao.T @ P + P @ Ao + 2.0 * cert.lam * P - cert.rho * (Co.T @ Co)
    E = 0.5 * (E + E.T)
    return float(np.max(np.linalg.eigvalsh(E)))


def gain_consistency_residual(cert: ContractionCertificate, K: TranslationGains) -> float:
    """Max abs deviation of (rho/2) P^{-1} C_o^T from the stacked gain blocks.

    The recovered 9x3 matrix should be [k1 I; k2 I; k3 I].  Exact (to float
    roundoff) for certificates from :func:`synthesize_certificate`;
    a diagnostic only for other constructions.
    """
    _, Co = chain_form()
    Ko = 0.5 * cert.rho * np.linalg.solve(cert.P, Co.T)
    target = np.vstack([K.k1 * _I3, K.k2 * _I3, K.k3 * _I3])
    return float(np.max(np.abs(Ko - target)))


def _check_skew(M: np.ndarray, name: str) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.shape != (3, 3) or np.max(np.abs(M + M.T)) > 1e-9:
        raise ValueError(f"{name} must be 3x3 skew-symmetric")
    return M


def decoupling_inverse(R: np.ndarray, Om: np.ndarray, Omd: np.ndarray) -> np.ndarray:
    """Inverse of the coordinate change into integrator-chain form, closed form.

    Block layout (G = Om^2 - Omd)::

        [    0         0        I     ]
        [    0         I      R Om R^T]
        [  -R^T    -Om R^T   -G  R^T  ]

    ``Om`` and ``Omd`` are the angular-velocity and angular-acceleration
    cross-product matrices and must be skew-symmetric.
    """
    Om = _check_skew(Om, "Om")
    Omd = _check_skew(Omd, "Omd")
    R = np.asarray(R, dtype=float)
    G = Om @ Om - Omd
    Rt = R.T
    U = np.zeros((9, 9))
    U[0:3, 6:9] = _I3
    U[3:6, 3:6] = _I3
    U[3:6, 6:9] = R @ Om @ Rt
    U[6:9, 0:3] = -Rt
    U[6:9, 3:6] = -Om @ Rt
    U[6:9, 6:9] = -G @ Rt
    return U


def _solve_dtype_preserving(M: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Linear solve that keeps extended-precision operands in extended precision.

    LAPACK (behind ``np.linalg.solve``) only handles single/double floats;
    anything wider goes through partial-pivot Gaussian elimination in the
    operand dtype.  The finite-difference oracle needs this: its nested
    difference quotients divide by h^2, so double rounding of intermediate
    solves would swamp the quantity being checked.
    """
    if M.dtype in (np.float32, np.float64, np.complex64, np.complex128):
        return np.linalg.solve(M, B)
    U = np.array(M, copy=True)
    X = np.array(B, dtype=U.dtype, copy=True)
    n = U.shape[0]
    for c in range(n):
        p = c + int(np.argmax(np.abs(U[c:, c])))
        if U[p, c] == 0:
            raise np.linalg.LinAlgError("singular matrix in dtype-preserving solve")
        if p != c:
            U[[c, p]] = U[[p, c]]
            X[[c, p]] = X[[p, c]]
        f = U[c + 1:, c] / U[c, c]
        U[c + 1:, c:] -= f[:, None] * U[c, c:]
        X[c + 1:] -= f[:, None] * X[c]
    out = np.zeros_like(X)
    for r in range(n - 1, -1, -1):
        out[r] = (X[r] - U[r, r + 1:] @ out[r + 1:]) / U[r, r]
    return out


def decoupling_inverse_recursive(A_fn, O_fn, t: float, h: float) -> np.ndarray:
    """Inverse transform by the generic column recursion; oracle for the closed form.

    Columns g1 = O(t)^{-1} [0; 0; I], g(i+1) = A(t) g_i - gdot_i, with each
    gdot taken by central difference at step ``h``.  Works for any
    observable system given its matrix functions; here it cross-checks
    :func:`decoupling_inverse` on simulated trajectories.

    The working dtype follows whatever ``O_fn`` returns.  With extended-
    precision matrix functions the whole recursion (times included) runs
    in extended precision — necessary at small ``h``, where the nested
    central differences amplify value rounding by roughly eps / h^2 and
    plain doubles would bury the answer in noise.
    """
    if h <= 0.0:
        raise ValueError(f"difference step must be positive, got {h}")
    probe = np.asarray(O_fn(t))
    if np.issubdtype(probe.dtype, np.floating):
        t = probe.dtype.type(t)
        h = probe.dtype.type(h)
    E = np.zeros((9, 3), dtype=probe.dtype)
    E[6:9, :] = np.eye(3, dtype=probe.dtype)

    def g1(tt) -> np.ndarray:
        O = np.asarray(O_fn(tt))
        try:
            return _solve_dtype_preserving(O, E)
        except np.linalg.LinAlgError as exc:
            raise np.linalg.LinAlgError(
                f"observability matrix is singular at t={tt}"
            ) from exc

    def g2(tt) -> np.ndarray:
        gdot = (g1(tt + h) - g1(tt - h)) / (2 * h)
        return A_fn(tt) @ g1(tt) - gdot

    g3_dot = (g2(t + h) - g2(t - h)) / (2 * h)
    cols = [g1(t), g2(t), A_fn(t) @ g2(t) - g3_dot]
    return np.hstack(cols)


def metric_matrix(
    R: np.ndarray, Om: np.ndarray, Omd: np.ndarray, P: np.ndarray
) -> np.ndarray:
    """Time-varying contraction metric M = T' P T, with T the chain-coordinate map.

    T is the inverse of :func:`decoupling_inverse` — it carries physical
    error coordinates into integrator-chain coordinates, where P certifies
    contraction; M is the pullback of P and is symmetric positive-definite
    whenever P is.
    """
    U = decoupling_inverse(R, Om, Omd)
    T = np.linalg.inv(U)
    M = T.T @ np.asarray(P, dtype=float) @ T
    return 0.5 * (M + M.T)
