"""Classical straight-line ensemble reproducing the far-field Dirac
detection statistics, and the no-signaling comparison it enables.

Velocities are drawn from the mode distribution: sampling k from
|psihat_0(k)|^2 and mapping to the mode velocity v = c^2 k / omega is
exactly the relativistic velocity density of the far-field law, Jacobian
included.  Particles move on straight world lines from the origin; the
detecting surface is a world tube of piecewise-linear radius plus a final
spacelike cap.
"""

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError
from ..special import gauss_nodes
from ..histogram import SphereBins
from ..units import NATURAL
from .algebra import omega_of_k, projector, GAMMA
from .spectral import split_energy


@dataclass
class SpacetimeTube:
    """Radius profile R(t) with nodes [(t0=0, R0), ..., (t_cap, R_cap)].

    Detectors sit on the tube wall; anything undetected at t_cap is caught
    by the spacelike cap.
    """

    nodes: tuple
    c: float = 1.0

    def __post_init__(self):
        ts = [t for t, _ in self.nodes]
        rs = [r for _, r in self.nodes]
        if ts[0] != 0.0 or len(ts) < 2:
            raise ConfigurationError("tube nodes must start at t = 0")
        if any(t1 <= t0 for t0, t1 in zip(ts, ts[1:])):
            raise ConfigurationError("tube node times must increase")
        if any(r <= 0 for r in rs):
            raise ConfigurationError("tube radii must be positive")
        slopes = [(r1 - r0) / (t1 - t0) for (t0, r0), (t1, r1)
                  in zip(self.nodes, self.nodes[1:])]
        if any(abs(s) >= self.c for s in slopes):
            raise ConfigurationError("tube walls must stay timelike (|R'| < c)")
        self._check_star_shape()

    @property
    def t_cap(self):
        return self.nodes[-1][0]

    def radius(self, t):
        ts = np.array([n[0] for n in self.nodes])
        rs = np.array([n[1] for n in self.nodes])
        return np.interp(t, ts, rs)

    def _check_star_shape(self, n_speeds=512):
        speeds = np.linspace(0.0, self.c * 0.999, n_speeds)
        crossings = [self._crossings_of_speed(s) for s in speeds]
        if any(len(c) > 1 for c in crossings):
            raise ConfigurationError(
                "tube is not star-shaped: some rays cross the wall twice")

    def _crossings_of_speed(self, v):
        out = []
        for (t0, r0), (t1, r1) in zip(self.nodes, self.nodes[1:]):
            slope = (r1 - r0) / (t1 - t0)
            # solve v t = r0 + slope (t - t0)
            denom = v - slope
            if abs(denom) < 1e-15:
                continue
            t = (r0 - slope * t0) / denom
            if t0 <= t <= t1 and t > 0:
                out.append(t)
        return out

    def first_crossing_times(self, speeds):
        """Vectorized first wall crossing per speed; NaN if the particle is
        still inside at t_cap (cap detection)."""
        speeds = np.asarray(speeds, float)
        out = np.full(speeds.shape, np.nan)
        for (t0, r0), (t1, r1) in zip(self.nodes, self.nodes[1:]):
            slope = (r1 - r0) / (t1 - t0)
            denom = speeds - slope
            with np.errstate(divide="ignore", invalid="ignore"):
                t = (r0 - slope * t0) / denom
            hit = (denom > 0) & (t >= t0) & (t <= t1) & np.isnan(out)
            out[hit] = t[hit]
        return out


def velocity_density_from_packet(profile, v, units=NATURAL):
    """rho_v(v) for one particle: m^3 (1 - v^2/c^2)^{-5/2} / hbar^3 times
    the spinor-squared spectral density at k = m v / (hbar sqrt(1-v^2/c^2))."""
    hbar, m, c = units.hbar, units.mass, units.c
    v = np.asarray(v, float)
    v_sq = np.sum(v ** 2, axis=-1)
    gamma = 1.0 / np.sqrt(1.0 - v_sq / c ** 2)
    k = (m / hbar) * v * gamma[..., None]
    dens = np.sum(np.abs(profile.spectral(k[..., 0], k[..., 1], k[..., 2])) ** 2,
                  axis=-1)
    return (m / hbar) ** 3 * gamma ** 5 * dens


def sample_mode_velocities(profile, n, rng, units=NATURAL):
    """Draw k from |psihat_0|^2 (Gaussian proposal + projector-weight
    rejection), then map to mode velocities c^2 k / omega: exactly rho_v."""
    hbar, m, c = units.hbar, units.mass, units.c
    out = np.empty((n, 3))
    have = 0
    while have < n:
        todo = n - have
        k = profile.k0 + profile.sigma_k * rng.standard_normal((todo * 2, 3))
        spin = profile.spectral(k[:, 0], k[:, 1], k[:, 2])
        weight = np.sum(np.abs(spin) ** 2, axis=-1) / \
            np.maximum(profile.scalar(k[:, 0], k[:, 1], k[:, 2]) ** 2, 1e-300)
        accept = rng.uniform(size=k.shape[0]) < weight
        k = k[accept]
        omega = omega_of_k(k, units)
        v = c ** 2 * k / omega[:, None]
        take = min(todo, v.shape[0])
        out[have:have + take] = v[:take]
        have += take
    return out


def classical_ensemble_sigma(profile, tube: SpacetimeTube, n_samples, seed_rng,
                             n_u=16, n_t=32, units=NATURAL):
    """Monte Carlo detection histogram over (u-bin, wall-time bin) plus the
    cap column.  Returns (counts[u, t+1], bins, velocities_used)."""
    bins = SphereBins.make(n_u)
    t_edges = np.linspace(0.0, tube.t_cap, n_t + 1)
    v = sample_mode_velocities(profile, n_samples, seed_rng, units)
    speed = np.linalg.norm(v, axis=1)
    u = v / np.maximum(speed, 1e-300)[:, None]
    t_cross = tube.first_crossing_times(speed)
    capped = np.isnan(t_cross)
    u_idx = bins.index_of(u)
    counts = np.zeros((bins.n_bins, n_t + 1))
    ti = np.clip(np.searchsorted(t_edges, t_cross[~capped], side="right") - 1,
                 0, n_t - 1)
    np.add.at(counts, (u_idx[~capped], ti), 1.0)
    np.add.at(counts, (u_idx[capped], n_t), 1.0)
    return counts, {"t_edges": t_edges, "sphere_bins": bins}, v


def _speed_of_k(k, units):
    omega = np.sqrt(units.c ** 2 * k ** 2
                    + (units.mass * units.c ** 2 / units.hbar) ** 2)
    return units.c ** 2 * k / omega


def _k_of_speed(v, units):
    gamma = 1.0 / np.sqrt(1.0 - (v / units.c) ** 2)
    return units.mass * v * gamma / units.hbar


def _speed_reaching_wall_at(tube, t):
    """Monotone inverse of the first-crossing map: the speed whose first
    wall crossing happens at time t (bisection; crossing time decreases
    with speed)."""
    lo, hi = 1e-9, tube.c * (1 - 1e-12)
    if tube.first_crossing_times(np.array([hi]))[0] > t:
        return None   # even light-ish speeds cross later than t
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        tc = tube.first_crossing_times(np.array([mid]))[0]
        if np.isnan(tc) or tc > t:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def classical_sigma_oracle(profile, tube: SpacetimeTube, n_u=16, n_t=32,
                           units=NATURAL, k_nodes=24, cell_nodes=8):
    """Deterministic quadrature of the same pushforward the sampler uses:
    expected probability per (u-bin, wall-time bin) and cap column.

    Each wall-time bin [t_i, t_i+1) maps to a speed window (crossing time
    is monotone in speed), hence a radial k window integrated smoothly by
    Gauss-Legendre; the cap collects all slower modes."""
    bins = SphereBins.make(n_u)
    t_edges = np.linspace(0.0, tube.t_cap, n_t + 1)
    expected = np.zeros((bins.n_bins, n_t + 1))
    offsets = np.concatenate([[0], np.cumsum(bins.counts)])
    k_hi_box = max(abs(hi) for lo, hi in profile.k_box(1e-12)) * 2.0

    # k-window edges per t-bin (k decreasing with t)
    k_edges = []
    for t in t_edges:
        if t <= 0:
            k_edges.append(k_hi_box)
            continue
        v = _speed_reaching_wall_at(tube, t)
        k_edges.append(k_hi_box if v is None else
                       min(_k_of_speed(v, units), k_hi_box))
    k_edges = np.array(k_edges)

    for b, n_sec in enumerate(bins.counts):
        z0, z1 = bins.z_edges[b], bins.z_edges[b + 1]
        zq, zw = gauss_nodes(z1, z0, cell_nodes)
        for j in range(n_sec):
            p0 = 2.0 * np.pi * j / n_sec
            p1 = 2.0 * np.pi * (j + 1) / n_sec
            pq, pw = gauss_nodes(p0, p1, cell_nodes)
            Z, P = np.meshgrid(zq, pq, indexing="ij")
            W2 = zw[:, None] * pw[None, :]
            s_th = np.sqrt(1.0 - Z ** 2)
            ux, uy, uz = s_th * np.cos(P), s_th * np.sin(P), Z
            ui = offsets[b] + j

            def window_mass(k_lo, k_hi):
                if k_hi <= k_lo:
                    return 0.0
                kq, kw = gauss_nodes(k_lo, k_hi, k_nodes)
                total = 0.0
                for kk, ww in zip(kq, kw):
                    spin = profile.spectral(kk * ux, kk * uy, kk * uz)
                    dens = np.sum(np.abs(spin) ** 2, axis=-1)
                    total += float(np.sum(W2 * dens)) * ww * kk ** 2
                return total

            for ti in range(n_t):
                expected[ui, ti] += window_mass(k_edges[ti + 1], k_edges[ti])
            expected[ui, n_t] += window_mass(1e-9, k_edges[n_t])
    return expected, {"t_edges": t_edges, "sphere_bins": bins}


def past_marginal(counts, meta, t_split):
    """Wall detections strictly before t_split, flattened over (u, t-bin)."""
    t_edges = meta["t_edges"]
    keep = t_edges[1:] <= t_split + 1e-12
    return counts[:, :-1][:, keep]


def no_signaling_gap(counts_a, counts_b, n_samples):
    """TV between two past marginals and the null-expected TV from Monte
    Carlo fluctuations alone: E[TV] = (1/2) sum_b sqrt(4 p (1-p) / (pi n))."""
    pa = counts_a / n_samples
    pb = counts_b / n_samples
    tv = 0.5 * float(np.abs(pa - pb).sum())
    p = 0.5 * (pa + pb)
    null_tv = 0.5 * float(np.sum(np.sqrt(4.0 * p * (1 - p) / (np.pi * n_samples))))
    return tv, null_tv


# ---------------------------------------------------------------------------
# Pointwise Dirac cross-section formulas (fixed-time spherical surface)
# ---------------------------------------------------------------------------

def sigma_dirac_positive(profile, x3, t, n4, units=NATURAL):
    """Positive-energy far-field detection density at the space-time point
    (ct, x3) with outward 4-normal n4:
    c^4 m^3 x^0 (n.x) / (hbar^3 |x|^5) |psihat_0(m c x / hbar |x|)|^2."""
    hbar, m, c = units.hbar, units.mass, units.c
    x3 = np.asarray(x3, float)
    x0 = c * t
    s_sq = x0 ** 2 - float(np.sum(x3 ** 2))
    if s_sq <= 0:
        return 0.0
    mink = np.sqrt(s_sq)
    ndx = n4[0] * x0 - np.dot(np.asarray(n4[1:]), x3)
    k = m * c * x3 / (hbar * mink)
    dens = np.sum(np.abs(profile.spectral(np.array(k[0]), np.array(k[1]),
                                          np.array(k[2]))) ** 2)
    return float(c ** 4 * m ** 3 * x0 * ndx / (hbar ** 3 * mink ** 5) * dens)


def sigma_dirac_covariant(profile, x3, t, n4, units=NATURAL):
    """General-energy covariant density (interference terms averaged out):
    (m^2 c^3 / hbar^2 |x|^2) sum_s tilde-bar(s k) nslash tilde(s k) with
    k = m c x / (hbar |x|)."""
    hbar, m, c = units.hbar, units.mass, units.c
    x3 = np.asarray(x3, float)
    x0 = c * t
    s_sq = x0 ** 2 - float(np.sum(x3 ** 2))
    if s_sq <= 0:
        return 0.0
    mink = np.sqrt(s_sq)
    kvec = m * c * x3 / (hbar * mink)
    kx, ky, kz = (np.array(v) for v in kvec)
    psi_p = profile.spectral(kx, ky, kz)
    psi_m = profile.spectral(-kx, -ky, -kz)
    plus, _, omega = split_energy(kx, ky, kz, psi_p, units)
    _, minus, _ = split_energy(-kx, -ky, -kz, psi_m, units)
    k0 = float(omega) / c
    kappa = m * c / hbar
    tilde_p = (k0 / kappa) * np.asarray(plus).reshape(4)
    tilde_m = (k0 / kappa) * np.asarray(minus).reshape(4)
    nslash = n4[0] * GAMMA[0] - sum(n4[i + 1] * GAMMA[i + 1] for i in range(3))
    g0 = GAMMA[0]
    total = 0.0
    for tilde in (tilde_p, tilde_m):
        total += float(np.real(tilde.conj() @ (g0 @ (nslash @ tilde))))
    return (m ** 2 * c ** 3 / (hbar ** 2 * mink ** 2)) * total
