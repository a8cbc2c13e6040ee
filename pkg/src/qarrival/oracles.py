"""Closed-form targets: the asymptotic free wave, scattering cross sections,
imaginary-step reflection/transmission coefficients, the leading-order
Bohmian time delay, surface flux distributions, the absorbing-boundary
reflection coefficient, and N-particle / multi-time densities.

These are the oracles that every simulated detection distribution is
verified against.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DomainError
from .fields import WaveField
from .histogram import DetectionHistogram, HistogramSpec
from .regions import DetectorRegion
from .special import gauss_nodes
from .units import NATURAL


# ---------------------------------------------------------------------------
# Asymptotic free wave and pointwise cross section
# ---------------------------------------------------------------------------

def asymptotic_free_wave(psihat, x, t, units=NATURAL, dim=None):
    """Far-field form (m/i hbar t)^{d/2} psihat(m x / hbar t) e^{i(k.x - w t)}.

    x has shape (..., dim) (or scalars in 1D).  Valid for t > 0; the relative
    error of the true evolution against this form falls off like 1/t.
    """
    if t <= 0:
        raise DomainError("asymptotic form requires t > 0")
    dim = dim if dim is not None else getattr(psihat, "dim")
    hbar, m = units.hbar, units.mass
    x = np.asarray(x, float)
    if dim == 1:
        xs = (x[..., 0] if x.ndim and x.shape[-1] == 1 else x,)
    else:
        xs = tuple(x[..., j] for j in range(3))
    k = tuple(m * xj / (hbar * t) for xj in xs)
    k_sq = sum(kj ** 2 for kj in k)
    omega = hbar * k_sq / (2.0 * m)
    phase = np.exp(1j * sum(kj * xj for kj, xj in zip(k, xs)) - 1j * omega * t)
    amp = (m / (hbar * t)) ** (dim / 2.0) * np.exp(-1j * np.pi * dim / 4.0)
    return amp * psihat.spectral(*k) * phase


def cross_section(psihat, region: DetectorRegion, x, t, units=NATURAL):
    """Detection density at surface point x and time t:
    (m/hbar)^d (n.x) t^-(d+1) |psihat(m x / hbar t)|^2."""
    if t <= 0:
        raise DomainError("cross section requires t > 0")
    hbar, m = units.hbar, units.mass
    x = np.asarray(x, float)
    d = region.dim
    if d == 1:
        u = np.sign(x[..., :1]) if x.ndim else np.array([np.sign(x)])
        n_dot_x = np.abs(x[..., 0] if x.ndim else x)
        k = (m * (x[..., 0] if x.ndim else x) / (hbar * t),)
    else:
        r = np.sqrt(np.sum(x ** 2, axis=-1))
        u = x / r[..., None]
        n = region.outward_normal_of_u(u)
        n_dot_x = np.sum(n * x, axis=-1)
        if np.any(n_dot_x <= 0):
            raise ConfigurationError("star-shape violation: n(x).x <= 0")
        k = tuple(m * x[..., j] / (hbar * t) for j in range(3))
    dens = (m / hbar) ** d * n_dot_x / t ** (d + 1) * np.abs(psihat.spectral(*k)) ** 2
    return dens


# ---------------------------------------------------------------------------
# Imaginary potential step: reflection and transmission
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StepScattering:
    """Stationary scattering data for the imaginary step of height lam."""

    k: float
    lam: float
    K: complex
    B: complex
    C: complex

    def matching_residuals(self):
        """(1 + B - C, k(1 - B) - K C); both vanish identically."""
        return (1.0 + self.B - self.C,
                self.k * (1.0 - self.B) - self.K * self.C)


def step_coefficients(k, lam, units=NATURAL) -> StepScattering:
    """B = (k - K)/(k + K), C = 2k/(k + K) with K^2 = k^2 + 2 i m lam / hbar^2,
    branch Im K > 0 so the transmitted wave decays into the absorber."""
    if not (k > 0 and lam >= 0):
        raise DomainError("need k > 0 and lam >= 0")
    hbar, m = units.hbar, units.mass
    K = np.sqrt(k ** 2 + 2j * m * lam / hbar ** 2)  # principal: Im K >= 0
    B = (k - K) / (k + K)
    C = 2.0 * k / (k + K)
    return StepScattering(float(k), float(lam), complex(K), complex(B), complex(C))


def reflected_transmitted_waves(psihat, x, t, R, lam, units=NATURAL, dim=None):
    """Far-field reflected and transmitted waves near the absorbing sphere.

    Returns (psi_ref, psi_trans).  psi_ref is valid for |x| < R (and uses the
    mode that reached R and bounced back, with the 1D/3D geometric focusing
    factor ((2R-|x|)/|x|)^((d-1)/2)); psi_trans for |x| >= R carries the
    absorber decay exp(-lam t (|x|-R) / hbar |x|).
    """
    if t <= 0:
        raise DomainError("need t > 0")
    dim = dim if dim is not None else getattr(psihat, "dim")
    hbar, m = units.hbar, units.mass
    x = np.asarray(x, float)
    r = np.abs(x) if dim == 1 else np.sqrt(np.sum(x ** 2, axis=-1))
    if np.any(r <= 0):
        raise DomainError("need x != 0")
    u = np.sign(x) if dim == 1 else x / r[..., None]
    amp = (m / (hbar * t)) ** (dim / 2.0) * np.exp(-1j * np.pi * dim / 4.0)

    def b_c_of(k_mag):
        K = np.sqrt(k_mag.astype(complex) ** 2 + 2j * m * lam / hbar ** 2)
        return (k_mag - K) / (k_mag + K), 2.0 * k_mag / (k_mag + K)

    # reflected branch (|x| < R): mode k' reached R and travels back inward
    if np.any(2.0 * R - r <= 0):
        raise DomainError("psi_ref needs 2R - |x| > 0")
    kr_mag = m * (2.0 * R - r) / (hbar * t)
    B, _ = b_c_of(np.asarray(kr_mag))
    geom = ((2.0 * R - r) / r) ** ((dim - 1) / 2.0)
    omega_r = hbar * kr_mag ** 2 / (2.0 * m)
    if dim == 1:
        k_args_r = (kr_mag * u,)
    else:
        k_args_r = tuple(kr_mag * u[..., j] for j in range(3))
    kr_dot_x = kr_mag * r
    psi_ref = (amp * B * geom * psihat.spectral(*k_args_r)
               * np.exp(1j * (2.0 * kr_mag * R - kr_dot_x - omega_r * t)))

    # transmitted branch (|x| >= R): factor C, then decay inside the absorber
    kt_mag = m * r / (hbar * t)
    _, C = b_c_of(np.asarray(kt_mag))
    omega_t = hbar * kt_mag ** 2 / (2.0 * m)
    if dim == 1:
        k_args_t = (kt_mag * u,)
    else:
        k_args_t = tuple(kt_mag * u[..., j] for j in range(3))
    decay = np.exp(-lam * t * np.clip(r - R, 0.0, None) / (hbar * r))
    psi_trans = (amp * C * psihat.spectral(*k_args_t) * decay
                 * np.exp(1j * (kt_mag * r - omega_t * t)))
    return psi_ref, psi_trans


# ---------------------------------------------------------------------------
# Leading-order Bohmian time delay
# ---------------------------------------------------------------------------

def delay_integral_j(psihat, v0, R, units=NATURAL, nodes=128, w_max=None):
    """J = int_0^1 drho (2-rho)^-1 e^{-2 i m R |v0| / hbar rho}
    conj(psihat)((2-rho)/rho * m v0 / hbar).

    Evaluated after substituting w = 1/rho, which makes the oscillation
    e^{-2 i m R |v0| w / hbar} linear in the integration variable; the
    window [1, w_max] is cut where the spectral amplitude at the rescaled
    argument (2w - 1) m v0 / hbar has died off.
    """
    hbar, m = units.hbar, units.mass
    v0 = np.atleast_1d(np.asarray(v0, float))
    speed = np.linalg.norm(v0)
    if w_max is None:
        if hasattr(psihat, "k_box"):
            box = psihat.k_box(1e-14)
            k_extent = max(max(abs(lo), abs(hi)) for lo, hi in box)
            scale_max = k_extent * hbar / (m * speed) * 1.05 + 1.0
            w_max = min(max(2.0, 0.5 * (scale_max + 1.0)), 50.0)
        else:
            w_max = 10.0
    w, wt = gauss_nodes(1.0, w_max, nodes)
    scale = 2.0 * w - 1.0
    k_args = tuple(scale * m * v / hbar for v in v0)
    # drho = -dw / w^2, (2 - rho)^-1 = w / (2w - 1)
    vals = (w / (2.0 * w - 1.0) / w ** 2
            * np.exp(-2j * m * R * speed * w / hbar)
            * np.conj(psihat.spectral(*k_args)))
    return complex(np.sum(wt * vals))


def time_delay_leading(psihat, v0, R, lam, units=NATURAL, nodes=128):
    """Leading-order arrival-time delay caused by the reflected wave,
    lam R Im[psihat(m v0/hbar) e^{2 i m R |v0|/hbar} J] / (m |v0|^3 |psihat|^2)."""
    hbar, m = units.hbar, units.mass
    v0 = np.atleast_1d(np.asarray(v0, float))
    speed = np.linalg.norm(v0)
    k0 = tuple(m * v / hbar for v in v0)
    amp = complex(psihat.spectral(*k0))
    if abs(amp) ** 2 < 1e-12:
        raise DomainError("psihat vanishes at m v0 / hbar: degenerate direction")
    J = delay_integral_j(psihat, v0, R, units, nodes)
    phase = np.exp(2j * m * R * speed / hbar)
    return float(lam * R * np.imag(amp * phase * J) / (m * speed ** 3 * abs(amp) ** 2))


# ---------------------------------------------------------------------------
# Absorbing boundary rule reflection coefficient (analytic oracle only)
# ---------------------------------------------------------------------------

def abr_reflection(k, kappa):
    """Hard-detector reflection fraction (k - kappa)^2 / (k + kappa)^2."""
    if not (k > 0 and kappa > 0):
        raise DomainError("need k > 0 and kappa > 0")
    return float((k - kappa) ** 2 / (k + kappa) ** 2)


# ---------------------------------------------------------------------------
# Pushforward oracle histogram for (u, tau)
# ---------------------------------------------------------------------------

def cross_section_histogram(psihat, region: DetectorRegion, spec: HistogramSpec,
                            v_ref, units=NATURAL, k_nodes=24, cell_nodes=6):
    """Bin-integrated limiting (u, tau) distribution.

    Independent of any simulation: the limiting law is the pushforward of
    |psihat(k)|^2 d^dk under k -> (k/|k|, tau = m v_ref s(u) / hbar |k|),
    integrated per histogram cell by Gauss-Legendre quadrature.  All radial
    mass sits at rho = 1.
    """
    hbar, m = units.hbar, units.mass
    hist = DetectionHistogram(spec, R=region.scale, v_ref=v_ref,
                              meta={"kind": "cross-section-oracle"})
    te = spec.tau_edges
    if region.dim == 1:
        for ui, sign in enumerate((-1.0, 1.0)):
            for ti in range(len(te) - 1):
                if te[ti + 1] <= 0:
                    continue
                k_hi = m * v_ref / (hbar * max(te[ti], 1e-12))
                k_lo = m * v_ref / (hbar * te[ti + 1])
                if not np.isfinite(k_hi):
                    k_hi = k_lo * 1e6
                k, w = gauss_nodes(k_lo, k_hi, k_nodes)
                mass = float(np.sum(w * np.abs(psihat.spectral(sign * k)) ** 2))
                hist.add(np.array([ui]), np.array([1.0]),
                         np.array([0.5 * (te[ti] + te[ti + 1])]),
                         np.array([mass]))
        return hist

    bins = hist.sphere_bins
    offsets = np.concatenate([[0], np.cumsum(bins.counts)])
    for b, c in enumerate(bins.counts):
        z0, z1 = bins.z_edges[b], bins.z_edges[b + 1]
        zq, zw = gauss_nodes(z1, z0, cell_nodes)
        for j in range(c):
            p0 = 2.0 * np.pi * j / c
            p1 = 2.0 * np.pi * (j + 1) / c
            pq, pw = gauss_nodes(p0, p1, cell_nodes)
            Z, P = np.meshgrid(zq, pq, indexing="ij")
            W = zw[:, None] * pw[None, :]
            s_th = np.sqrt(1.0 - Z ** 2)
            u = np.stack([s_th * np.cos(P), s_th * np.sin(P), Z], axis=-1)
            s_u = region.shape.value(u)
            ui = offsets[b] + j
            for ti in range(len(te) - 1):
                if te[ti + 1] <= 0:
                    continue
                # per direction node: radial integral over the tau window
                k_hi = m * v_ref * s_u / (hbar * max(te[ti], 1e-12))
                k_lo = m * v_ref * s_u / (hbar * te[ti + 1])
                kq, kw = np.polynomial.legendre.leggauss(k_nodes)
                K = 0.5 * (k_hi - k_lo)[..., None] * kq + 0.5 * (k_hi + k_lo)[..., None]
                KW = 0.5 * (k_hi - k_lo)[..., None] * kw
                dens = np.abs(psihat.spectral(K * u[..., 0:1], K * u[..., 1:2],
                                              K * u[..., 2:3])) ** 2
                mass = float(np.sum(W[..., None] * KW * dens * K ** 2))
                hist.add(np.array([ui]), np.array([1.0]),
                         np.array([0.5 * (te[ti] + te[ti + 1])]),
                         np.array([mass]))
    return hist


# ---------------------------------------------------------------------------
# Flux distribution from a stored field time series
# ---------------------------------------------------------------------------

def flux_distribution(snapshots, grid, region: DetectorRegion,
                      spec: HistogramSpec, v_ref, units=NATURAL):
    """Surface-flux histogram n.j integrated over the surface and snapshots.

    snapshots: sequence of (t, values) sorted in t.  The current j uses
    fourth-order centered differences.  Negative (inward) rates are binned
    with their sign; the report collects how much negativity occurred.
    """
    hbar, m = units.hbar, units.mass
    if region.dim != 1 or grid.dim != 1:
        raise ConfigurationError("flux histograms are computed on 1D grids "
                                 "(use the radial reduction for 3D)")
    hist = DetectionHistogram(spec, R=region.scale, v_ref=v_ref,
                              meta={"kind": "flux"})
    x = grid.x_axis()
    idx_plus = int(np.argmin(np.abs(x - region.scale)))
    idx_minus = int(np.argmin(np.abs(x + region.scale)))
    negative_mass = 0.0
    prev_t, prev_rate = None, None
    # single pass: snapshots may be a generator, fields are not retained
    for t, vals in snapshots:
        rate = np.empty(2)
        for slot, idx in enumerate((idx_minus, idx_plus)):
            d = (-vals[(idx + 2) % grid.n] + 8.0 * vals[(idx + 1) % grid.n]
                 - 8.0 * vals[(idx - 1) % grid.n] + vals[(idx - 2) % grid.n]
                 ) / (12.0 * grid.dx)
            j = (hbar / m) * np.imag(np.conj(vals[idx]) * d)
            rate[slot] = -j if slot == 0 else j    # outward components
        if prev_t is not None:
            dt = t - prev_t
            w = 0.5 * (prev_rate + rate) * dt
            tau = hist.tau_of_time(0.5 * (prev_t + t))
            negative_mass += float(-w[w < 0].sum())
            hist.add(np.array([0, 1]), np.array([1.0, 1.0]),
                     np.array([tau, tau]), w)
        prev_t, prev_rate = t, rate
    report = {"negative_mass": negative_mass,
              "net_flux": hist.total}
    return hist, report


# ---------------------------------------------------------------------------
# N-particle tensor density and the multi-time evaluation
# ---------------------------------------------------------------------------

def n_particle_cross_section(psihat_n, regions, points, units=NATURAL):
    """Joint detection density for N non-interacting particles.

    psihat_n(k_1, ..., k_N) takes N wavevectors (each a 3-vector); points is
    a list of (x_i, t_i); regions one DetectorRegion per particle (or a
    single shared one).
    """
    hbar, m = units.hbar, units.mass
    N = len(points)
    if not isinstance(regions, (list, tuple)):
        regions = [regions] * N
    k_args = []
    geom = 1.0
    for (x, t), reg in zip(points, regions):
        if t <= 0:
            raise DomainError("all t_i must be positive")
        x = np.asarray(x, float)
        r = np.linalg.norm(x)
        u = x / r
        n = reg.outward_normal_of_u(u[None, :])[0]
        ndx = float(np.dot(n, x))
        if ndx <= 0:
            raise ConfigurationError("star-shape violation at a detection point")
        geom *= (m ** 3 / hbar ** 3) * ndx / t ** 4
        k_args.append(m * x / (hbar * t))
    return geom * abs(psihat_n(*k_args)) ** 2


def povm_factorization_check(psihat_list, regions, points, units=NATURAL):
    """For a product state the N-particle density factorizes exactly into
    single-particle cross sections; returns (joint, product of singles)."""
    def product_amp(*ks):
        out = 1.0
        for p, k in zip(psihat_list, ks):
            out = out * p.spectral(k[0], k[1], k[2])
        return out

    joint = n_particle_cross_section(product_amp, regions, points, units)
    single = 1.0
    if not isinstance(regions, (list, tuple)):
        regions = [regions] * len(points)
    for p, reg, (x, t) in zip(psihat_list, regions, points):
        single *= float(cross_section(p, reg, np.asarray(x, float), t, units))
    return joint, single


class TwoParticleState:
    """Product or (anti)symmetrized pair of 3D Gaussian packets.

    Provides the exact multi-time wave function Phi(x1, t1, x2, t2) (each
    factor evolved in closed form) and the spectral amplitude on pairs."""

    def __init__(self, packet_a, packet_b, symmetry=None):
        if packet_a.dim != 3 or packet_b.dim != 3:
            raise ConfigurationError("two-particle states use 3D packets")
        self.a, self.b = packet_a, packet_b
        if symmetry not in (None, "sym", "antisym"):
            raise ConfigurationError("symmetry must be None, 'sym' or 'antisym'")
        self.symmetry = symmetry
        if symmetry is None:
            self._terms = [(1.0, packet_a, packet_b)]
        else:
            sign = 1.0 if symmetry == "sym" else -1.0
            from .gaussians import _spectral_overlap
            o = _spectral_overlap(packet_a, packet_b)
            norm = np.sqrt(2.0 + 2.0 * sign * abs(o) ** 2)
            self._terms = [(1.0 / norm, packet_a, packet_b),
                           (sign / norm, packet_b, packet_a)]

    def spectral_pair(self, k1, k2):
        out = 0.0
        for c, pa, pb in self._terms:
            out = out + c * pa.spectral(*k1) * pb.spectral(*k2)
        return out

    def multi_time(self, x1, t1, x2, t2, units=NATURAL):
        out = 0.0
        for c, pa, pb in self._terms:
            out = out + (c * pa.position(*x1, t=t1, units=units)
                         * pb.position(*x2, t=t2, units=units))
        return out


def multi_time_sigma(state: TwoParticleState, regions, points, units=NATURAL,
                     h=1e-3):
    """Two-particle detection density from the multi-time wave function:
    (hbar/2i)^2/(m1 m2) Phi* (d1_fwd - d1_bwd)(d2_fwd - d2_bwd) Phi with
    normal derivatives by central finite differences of step h."""
    hbar, m = units.hbar, units.mass
    if not isinstance(regions, (list, tuple)):
        regions = [regions, regions]
    (x1, t1), (x2, t2) = points
    x1 = np.asarray(x1, float)
    x2 = np.asarray(x2, float)
    n1 = regions[0].outward_normal_of_u((x1 / np.linalg.norm(x1))[None, :])[0]
    n2 = regions[1].outward_normal_of_u((x2 / np.linalg.norm(x2))[None, :])[0]

    def phi(s1, s2):
        return state.multi_time(x1 + s1 * h * n1, t1, x2 + s2 * h * n2, t2,
                                units=units)

    d1d2 = (phi(1, 1) - phi(1, -1) - phi(-1, 1) + phi(-1, -1)) / (4 * h * h)
    d1 = (phi(1, 0) - phi(-1, 0)) / (2 * h)
    d2 = (phi(0, 1) - phi(0, -1)) / (2 * h)
    val = phi(0, 0)
    bracket = 2.0 * np.real(np.conj(val) * d1d2) \
        - 2.0 * np.real(np.conj(d1) * d2)
    return float(-(hbar ** 2 / (4.0 * m * m)) * bracket)
