"""Dirac matrices in the standard representation, the energy projectors
P+-(k), and the eigenstructure of alpha.k + beta m for complex k."""

import numpy as np

from ..errors import DomainError
from ..units import NATURAL

_S1 = np.array([[0, 1], [1, 0]], dtype=complex)
_S2 = np.array([[0, -1j], [1j, 0]], dtype=complex)
_S3 = np.array([[1, 0], [0, -1]], dtype=complex)
SIGMA = (_S1, _S2, _S3)

_Z2 = np.zeros((2, 2), dtype=complex)
_I2 = np.eye(2, dtype=complex)

ALPHA = tuple(np.block([[_Z2, s], [s, _Z2]]) for s in SIGMA)
BETA = np.block([[_I2, _Z2], [_Z2, -_I2]])
GAMMA = (BETA,) + tuple(BETA @ a for a in ALPHA)   # gamma^0..gamma^3
I4 = np.eye(4, dtype=complex)


class SpinorAlgebra:
    """Namespace handle over the standard-representation matrices."""

    alpha = ALPHA
    beta = BETA
    gamma = GAMMA
    identity = I4

    @staticmethod
    def anticommutator_residuals():
        """Max residuals of {a_i,a_j} = 2 delta_ij, {a_i,beta} = 0, beta^2 = 1."""
        res = []
        for i in range(3):
            for j in range(3):
                res.append(np.max(np.abs(ALPHA[i] @ ALPHA[j] + ALPHA[j] @ ALPHA[i]
                                         - 2.0 * (i == j) * I4)))
            res.append(np.max(np.abs(ALPHA[i] @ BETA + BETA @ ALPHA[i])))
        res.append(np.max(np.abs(BETA @ BETA - I4)))
        return float(max(res))


def mass_matrix(k, units=NATURAL):
    """M(k) = hbar c alpha.k + beta m c^2 (k may be complex)."""
    hbar, m, c = units.hbar, units.mass, units.c
    k = np.asarray(k)
    M = BETA * (m * c ** 2)
    for i in range(3):
        M = M + hbar * c * k[i] * ALPHA[i]
    return M


def omega_of_k(k, units=NATURAL):
    """Relativistic dispersion sqrt(c^2 k^2 + m^2 c^4 / hbar^2) (real k)."""
    hbar, m, c = units.hbar, units.mass, units.c
    k = np.asarray(k, float)
    k_sq = np.sum(k ** 2, axis=-1) if k.ndim else k ** 2
    return np.sqrt(c ** 2 * k_sq + (m * c ** 2 / hbar) ** 2)


def projector(k, units=NATURAL):
    """Energy projectors at real wavevector k.

    Returns (P_plus, P_minus, omega); P+- = (1/2)(I +- M(k)/hbar omega)
    project onto the two-dimensional +-hbar omega eigenspaces of M(k).
    """
    k = np.asarray(k, float)
    omega = float(omega_of_k(k, units))
    M = mass_matrix(k, units)
    P_plus = 0.5 * (I4 + M / (units.hbar * omega))
    P_minus = 0.5 * (I4 - M / (units.hbar * omega))
    return P_plus, P_minus, omega


def complex_k_spectrum(k, units=NATURAL, orth_tol=1e-10):
    """Eigenstructure of M(k) for complex 3-vectors k.

    Eigenvalues are +-sqrt(hbar^2 c^2 k.k + m^2 c^4) (bilinear k.k, no
    conjugation), each with a two-dimensional eigenspace.  The eigenspace
    orthogonality flag follows the pairing without conjugation, which is the
    one that distinguishes Re k parallel to Im k (orthogonal) from skewed
    directions (not orthogonal) on the reference axes; the Hermitian overlap
    is reported alongside, since with m > 0 the matrix stops being normal as
    soon as Im k is nonzero.
    """
    hbar, m, c = units.hbar, units.mass, units.c
    k = np.asarray(k, dtype=complex)
    eta = (hbar * c) ** 2 * np.sum(k * k) + (m * c ** 2) ** 2
    if abs(eta) < 1e-14:
        raise DomainError("degenerate spectrum: hbar^2 c^2 k.k + m^2 c^4 = 0")
    s0 = np.sqrt(eta)   # principal branch
    M = mass_matrix(k, units)
    evals, evecs = np.linalg.eig(M)
    plus = np.abs(evals - s0) < np.abs(evals + s0)
    V_plus = evecs[:, plus]
    V_minus = evecs[:, ~plus]
    dims = (V_plus.shape[1], V_minus.shape[1])
    # orthonormalize within each eigenspace, then measure cross overlaps
    Qp, _ = np.linalg.qr(V_plus)
    Qm, _ = np.linalg.qr(V_minus)
    if min(dims):
        hermitian = float(np.max(np.abs(Qp.conj().T @ Qm)))
        bilinear = float(np.max(np.abs(Qp.T @ Qm)))
    else:
        hermitian = bilinear = 0.0
    resid = max(float(np.max(np.abs(evals[plus] - s0))) if dims[0] else 0.0,
                float(np.max(np.abs(evals[~plus] + s0))) if dims[1] else 0.0)
    # real k: M is Hermitian and the eigenspaces are orthogonal in the
    # standard inner product.  Complex k with Re k || Im k: the Hermitian
    # pairing fails ([beta, alpha.Im k] != 0 spoils normality) but the
    # unconjugated pairing vanishes on the reference axes; either pairing
    # vanishing marks the parallel configuration.
    return {
        "eigenvalue": complex(s0),
        "dims": dims,
        "eigenvalue_residual": resid,
        "cross_overlap": min(bilinear, hermitian),
        "hermitian_overlap": hermitian,
        "bilinear_overlap": bilinear,
        "orthogonal": min(bilinear, hermitian) < orth_tol,
        "re_im_parallel": _parallel(np.real(k), np.imag(k)),
        "plus_basis": Qp,
        "minus_basis": Qm,
    }


def _parallel(a, b, tol=1e-12):
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na < tol or nb < tol:
        return True
    return bool(np.linalg.norm(np.cross(a, b)) < tol * na * nb)
