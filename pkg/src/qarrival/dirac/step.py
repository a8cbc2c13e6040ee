"""Reflection of a Dirac plane wave from an imaginary step potential.

The half space x3 >= 0 carries the skew potential -i lam A_mu gamma^0
gamma^mu with A future-timelike and A1 = A2 = 0 (the Lorentz-transformed
image of the scalar absorber).  Eigenmodes in the absorber region carry the
complex longitudinal wavenumber K3 fixed by matching the (complexified)
energy, and the transmitted factor decays for x3 -> +infinity.  Continuity
of the 4-spinor at x3 = 0 determines the reflected and transmitted
amplitudes; the reflected amplitude is O(lam).
"""

import numpy as np

from ..errors import ConfigurationError, DomainError
from ..units import NATURAL
from .algebra import mass_matrix, omega_of_k


def _eigenbasis(M, eigenvalue, tol=1e-8):
    """Basis (4 x r) of the eigenspace of M for the given eigenvalue."""
    evals, evecs = np.linalg.eig(M)
    sel = np.abs(evals - eigenvalue) < tol * max(1.0, abs(eigenvalue))
    V = evecs[:, sel]
    if V.shape[1] == 0:
        raise ConfigurationError("no eigenvector at the requested eigenvalue")
    Q, _ = np.linalg.qr(V)
    return Q


def dirac_step_reflection(k, lam, A_mu, units=NATURAL, energy_sign=+1,
                          incident=None):
    """Solve the step problem for incident wavevector k (k3 > 0).

    Parameters
    ----------
    k : 3-vector with k[2] > 0 (incidence toward the absorber).
    lam : absorber strength; small compared to hbar omega.
    A_mu : (A0, A1, A2, A3) future-timelike with A1 = A2 = 0.
    energy_sign : +1 or -1, selecting the incident energy branch.
    incident : optional 4-spinor A in the matching eigenspace; a default
        basis vector is used when omitted.

    Returns a dict with K3 (exact), K3_expansion (first order in lam),
    the spinors B and C, the reflected fraction norm ratio, and the
    residual of the (redundant) derivative matching condition.
    """
    hbar, m, c = units.hbar, units.mass, units.c
    k = np.asarray(k, float)
    if k[2] <= 0:
        raise DomainError("need k3 > 0")
    A_mu = np.asarray(A_mu, float)
    if A_mu[1] != 0 or A_mu[2] != 0:
        raise ConfigurationError("A_mu must have vanishing 1 and 2 components")
    if not (A_mu[0] > 0 and A_mu[0] ** 2 - A_mu[3] ** 2 > 0):
        raise ConfigurationError("A_mu must be future-timelike")
    omega = float(omega_of_k(k, units))
    E = energy_sign * hbar * omega
    if lam < 0 or lam > 0.1 * hbar * omega:
        raise DomainError("lam must lie in [0, 0.1 hbar omega]")

    # k3 > 0 means the incident *group* velocity points at the absorber;
    # on the negative-energy branch the phase runs against the group, so
    # the incident longitudinal phase wavenumber flips sign
    kz_inc = energy_sign * k[2]

    # transmitted eigenvalue of M(K) and the longitudinal wavenumber
    s_trans = E + 1j * lam * A_mu[0]
    k_perp_sq = k[0] ** 2 + k[1] ** 2
    K3_sq = (s_trans ** 2 - (m * c ** 2) ** 2) / (hbar * c) ** 2 - k_perp_sq
    K3 = np.sqrt(K3_sq)
    if lam == 0:
        # free case: the transmitted wave continues the incident phase
        K3 = np.sign(kz_inc) * abs(K3.real) + 0.0j
    else:
        def decay_rate(K):
            return K.imag - lam * A_mu[3] / (hbar * c)
        if decay_rate(K3) <= 0:
            K3 = -K3
            if decay_rate(K3) <= 0:
                raise ConfigurationError(
                    "no decaying transmitted branch exists for this (k, A_mu)")
    K3_expansion = kz_inc + 1j * lam * A_mu[0] * np.sqrt(
        hbar ** 2 * np.dot(k, k) + (m * c) ** 2) / (hbar ** 2 * c * k[2])

    # eigenspaces for incident, reflected (kz -> -kz), transmitted (complex)
    M_inc = mass_matrix(np.array([k[0], k[1], kz_inc]), units)
    M_ref = mass_matrix(np.array([k[0], k[1], -kz_inc]), units)
    M_tr = mass_matrix(np.array([k[0], k[1], K3], dtype=complex), units)
    basis_inc = _eigenbasis(M_inc, E)
    basis_ref = _eigenbasis(M_ref, E)
    basis_tr = _eigenbasis(M_tr, s_trans, tol=1e-8)
    if basis_ref.shape[1] != 2 or basis_tr.shape[1] != 2:
        raise ConfigurationError("unexpected eigenspace dimensions in matching")

    if incident is None:
        A = basis_inc[:, 0]
    else:
        A = np.asarray(incident, complex)
        if np.linalg.norm(M_inc @ A - E * A) > 1e-8 * np.linalg.norm(A):
            raise ConfigurationError("incident spinor is not an eigenmode")

    # continuity at x3 = 0: A + B = C with B, C in their eigenspaces
    system = np.concatenate([basis_tr, -basis_ref], axis=1)
    try:
        coeffs = np.linalg.solve(system, A)
    except np.linalg.LinAlgError as exc:
        raise ConfigurationError(f"singular matching system: {exc}") from exc
    C = basis_tr @ coeffs[:2]
    B = basis_ref @ coeffs[2:]

    # redundant scalar-style derivative condition, kept as a diagnostic
    mu = K3 - 1j * lam * A_mu[3] / (hbar * c)
    deriv_residual = float(np.linalg.norm(kz_inc * (A - B) - mu * C)
                           / (abs(kz_inc) * np.linalg.norm(A)))

    return {
        "K3": complex(K3),
        "K3_expansion": complex(K3_expansion),
        "B": B,
        "C": C,
        "B_norm_ratio": float(np.linalg.norm(B) / np.linalg.norm(A)),
        "derivative_residual": deriv_residual,
    }
