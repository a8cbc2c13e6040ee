"""Far-field Dirac wave and its stationary-phase verification.

The asymptotic wave at timelike (x, t) is carried by the single mode
k* = m c x / (hbar sqrt(c^2 t^2 - x^2)); both energy signs contribute, the
mode pair (k*, omega) and (-k*, -omega) moving at the same velocity.  The
claim is checked against direct Gauss-Legendre quadrature of the Fourier
integral over a k-box holding all but 1e-8 of the spectral mass."""

import numpy as np

from ..errors import DomainError
from ..special import gauss_nodes
from ..units import NATURAL
from .algebra import omega_of_k
from .spectral import split_energy


def stationary_wavevector(x, t, units=NATURAL):
    x = np.asarray(x, float)
    c = units.c
    s_sq = (c * t) ** 2 - float(np.sum(x ** 2))
    if s_sq <= 0:
        return None
    return units.mass * c * x / (units.hbar * np.sqrt(s_sq))


def asymptotic_dirac_wave(profile, x, t, units=NATURAL):
    """Closed-form far-field 4-spinor at one space-time point.

    Zero outside (and on) the light cone.  Inside,
    (hbar omega^{5/2} / m c^5) t^{-3/2} [e^{-3 i pi/4} P+(k*) psihat(k*)
    e^{i(k*.x - omega t)} + e^{+3 i pi/4} P-(-k*) psihat(-k*)
    e^{-i(k*.x - omega t)}] with the stationary mode k*.
    """
    if t <= 0:
        raise DomainError("asymptotic form needs t > 0")
    hbar, m, c = units.hbar, units.mass, units.c
    x = np.asarray(x, float)
    k_star = stationary_wavevector(x, t, units)
    if k_star is None:
        return np.zeros(4, dtype=complex)
    omega = float(omega_of_k(k_star, units))
    kx, ky, kz = k_star
    psi_p = profile.spectral(np.array(kx), np.array(ky), np.array(kz))
    psi_m = profile.spectral(np.array(-kx), np.array(-ky), np.array(-kz))
    plus, _, _ = split_energy(np.array(kx), np.array(ky), np.array(kz),
                              psi_p, units)
    _, minus, _ = split_energy(np.array(-kx), np.array(-ky), np.array(-kz),
                               psi_m, units)
    phase = float(np.dot(k_star, x)) - omega * t
    amp = hbar * omega ** 2.5 / (m * c ** 5) * t ** (-1.5)
    out = amp * (np.exp(-0.75j * np.pi) * plus * np.exp(1j * phase)
                 + np.exp(+0.75j * np.pi) * minus * np.exp(-1j * phase))
    return np.asarray(out, dtype=complex).reshape(4)


def direct_fourier_wave(profile, x, t, units=NATURAL, nodes_per_axis=64,
                        tail=1e-8, panels=1):
    """Brute-force oracle: quadrature of the full mode integral
    (2 pi)^{-3/2} int d^3k [P+ psihat(k) e^{i(k.x - w t)}
                            + P-(-k) psihat(-k) e^{i(-k.x + w t)}].

    The k box holds all but `tail` of the spectral mass; each axis is split
    into `panels` Gauss-Legendre panels of nodes_per_axis nodes, which keeps
    the rule resolving the quadratic phase (about (t/2 omega)(box/2)^2 /
    2 pi cycles per axis) at >= 3 nodes per cycle.
    """
    x = np.asarray(x, float)
    box = profile.k_box(tail)

    def axis_rule(lo, hi):
        edges = np.linspace(lo, hi, panels + 1)
        xs, ws = [], []
        for a, b in zip(edges[:-1], edges[1:]):
            xi, wi = gauss_nodes(a, b, nodes_per_axis)
            xs.append(xi)
            ws.append(wi)
        return np.concatenate(xs), np.concatenate(ws)

    (k1, w1) = axis_rule(*box[0])
    (k2, w2) = axis_rule(*box[1])
    (k3, w3) = axis_rule(*box[2])
    out = np.zeros(4, dtype=complex)
    # evaluate slab by slab along the first axis to bound memory
    for i in range(len(k1)):
        KX = np.full((len(k2), len(k3)), k1[i])
        KY, KZ = np.meshgrid(k2, k3, indexing="ij")
        W = w1[i] * (w2[:, None] * w3[None, :])
        omega = omega_of_k(np.stack([KX, KY, KZ], axis=-1), units)
        psi_p = profile.spectral(KX, KY, KZ)
        plus, _, _ = split_energy(KX, KY, KZ, psi_p, units)
        psi_m = profile.spectral(-KX, -KY, -KZ)
        _, minus, _ = split_energy(-KX, -KY, -KZ, psi_m, units)
        phase = KX * x[0] + KY * x[1] + KZ * x[2] - omega * t
        integrand = (plus * np.exp(1j * phase)[..., None]
                     + minus * np.exp(-1j * phase)[..., None])
        out += np.tensordot(W, integrand, axes=([0, 1], [0, 1]))
    return (2.0 * np.pi) ** (-1.5) * out


def direct_fourier_wave_spherical(profile, x, t, units=NATURAL, n_k=128,
                                  n_theta=160, n_phi=16, tail=1e-8):
    """Quadrature oracle in spherical k-coordinates with the polar axis
    along x, so the oscillatory phase k |x| cos(theta) - omega t lives only
    in the (k, theta) plane and the phi sum is short.

    Only valid for positive-energy profiles whose spectral support excludes
    the origin (forward-peaked packets, |k0| a few sigma_k above zero):
    then the backward cone carries no mass and a theta cone suffices.
    """
    if not getattr(profile, "positive_energy", False):
        raise DomainError("spherical oracle requires a positive-energy profile")
    x = np.asarray(x, float)
    r_x = np.linalg.norm(x)
    xhat = x / r_x
    k0 = np.asarray(profile.k0, float)
    k0_norm = np.linalg.norm(k0)
    half = profile.sigma_k * np.sqrt(-2.0 * np.log(tail))
    # frame with e3 = xhat
    a = np.array([1.0, 0.0, 0.0])
    if abs(np.dot(a, xhat)) > 0.9:
        a = np.array([0.0, 1.0, 0.0])
    e1 = np.cross(a, xhat)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(xhat, e1)

    k_lo = max(1e-9, k0_norm - half)
    k_hi = k0_norm + half
    if k0_norm > 1.2 * half:
        # forward-peaked: restrict theta to the cone covering the support
        cos_k0 = float(np.dot(k0, xhat) / k0_norm)
        theta_k0 = np.arccos(np.clip(cos_k0, -1, 1))
        theta_ball = np.arcsin(np.clip(half / k0_norm, 0, 1))
        theta_max = min(np.pi, theta_k0 + 1.1 * theta_ball)
        theta_min = max(0.0, theta_k0 - 1.1 * theta_ball)
    else:
        theta_min, theta_max = 0.0, np.pi

    kq, kw = gauss_nodes(k_lo, k_hi, n_k)
    tq, tw = gauss_nodes(theta_min, theta_max, n_theta)
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    pw = 2.0 * np.pi / n_phi

    K, TH = np.meshgrid(kq, tq, indexing="ij")
    cos_th, sin_th = np.cos(TH), np.sin(TH)
    omega = np.sqrt(units.c ** 2 * K ** 2
                    + (units.mass * units.c ** 2 / units.hbar) ** 2)
    phase = np.exp(1j * (K * r_x * cos_th - omega * t))
    W2 = kw[:, None] * tw[None, :] * K ** 2 * sin_th
    out = np.zeros(4, dtype=complex)
    for p in phi:
        dirs = (sin_th[..., None] * (np.cos(p) * e1 + np.sin(p) * e2)
                + cos_th[..., None] * xhat)
        KX = K * dirs[..., 0]
        KY = K * dirs[..., 1]
        KZ = K * dirs[..., 2]
        spin = profile.spectral(KX, KY, KZ)
        plus, _, _ = split_energy(KX, KY, KZ, spin, units)
        out += pw * np.tensordot(W2 * phase, plus, axes=([0, 1], [0, 1]))
    return (2.0 * np.pi) ** (-1.5) * out


def verify_stationary_phase(profile, x, t, units=NATURAL, nodes_per_axis=64,
                            method="cartesian", **kw):
    """Relative error of the closed asymptotic form against the quadrature
    oracle at one point: ||asym - direct|| / ||direct||."""
    a = asymptotic_dirac_wave(profile, x, t, units)
    if method == "spherical":
        d = direct_fourier_wave_spherical(profile, x, t, units, **kw)
    else:
        d = direct_fourier_wave(profile, x, t, units, nodes_per_axis, **kw)
    denom = np.linalg.norm(d)
    if denom == 0:
        raise DomainError("oracle wave vanished; pick a point inside the cone")
    return float(np.linalg.norm(a - d) / denom), a, d


def zitter_averaged_intensity(profile, x, t, units=NATURAL, n_avg=16):
    """psi^dagger psi time-averaged over one Zitterbewegung period
    2 pi / omega_0 with omega_0 = 2 m c^2 / hbar, from the asymptotic form,
    together with the cross-term-free reference sum."""
    hbar, m, c = units.hbar, units.mass, units.c
    period = 2.0 * np.pi / (2.0 * m * c ** 2 / hbar)
    ts = t + (np.arange(n_avg) + 0.5) / n_avg * period - 0.5 * period
    acc = 0.0
    for ti in ts:
        w = asymptotic_dirac_wave(profile, x, ti, units)
        acc += float(np.sum(np.abs(w) ** 2))
    avg = acc / n_avg

    # reference: drop the interference term between the energy signs
    k_star = stationary_wavevector(x, t, units)
    omega = float(omega_of_k(k_star, units))
    kx, ky, kz = k_star
    plus, _, _ = split_energy(np.array(kx), np.array(ky), np.array(kz),
                              profile.spectral(np.array(kx), np.array(ky),
                                               np.array(kz)), units)
    _, minus, _ = split_energy(np.array(-kx), np.array(-ky), np.array(-kz),
                               profile.spectral(np.array(-kx), np.array(-ky),
                                                np.array(-kz)), units)
    amp = hbar * omega ** 2.5 / (m * c ** 5) * t ** (-1.5)
    no_cross = amp ** 2 * float(np.sum(np.abs(plus) ** 2)
                                + np.sum(np.abs(minus) ** 2))
    return avg, no_cross
