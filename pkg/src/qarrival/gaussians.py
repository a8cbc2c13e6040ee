"""Closed-form Gaussian wave-packet family.

Every oracle comparison in the package is anchored to initial states whose
Fourier transform and free evolution are known exactly: drifted (an)isotropic
Gaussians and superpositions of a few of them.  Keeping these closed forms in
one place lets derived expected values stay independent of any grid.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .fields import Grid, WaveField, SpectralField
from .special import gauss_nodes
from .units import NATURAL

_TAIL = 1e-8


def _as_tuple(v, dim):
    if np.isscalar(v):
        return (float(v),) * dim
    t = tuple(float(a) for a in v)
    if len(t) != dim:
        raise ConfigurationError(f"expected {dim} components, got {len(t)}")
    return t


@dataclass(frozen=True)
class GaussianPacket:
    """Drifted Gaussian, exp(-(x-c)^2/4 sigma^2 + i k0.(x-c)) up to norm.

    Normalized so that both |psi_0|^2 and |psi_hat_0|^2 integrate to one.
    sigma, k0, center may be scalars (isotropic) or per-axis tuples.
    """

    dim: int
    sigma: tuple = 1.0
    k0: tuple = 0.0
    center: tuple = 0.0

    def __post_init__(self):
        if self.dim not in (1, 3):
            raise ConfigurationError("dim must be 1 or 3")
        object.__setattr__(self, "sigma", _as_tuple(self.sigma, self.dim))
        object.__setattr__(self, "k0", _as_tuple(self.k0, self.dim))
        object.__setattr__(self, "center", _as_tuple(self.center, self.dim))
        if any(s <= 0 for s in self.sigma):
            raise ConfigurationError("sigma components must be positive")

    # -- spectral side ------------------------------------------------------

    def spectral(self, *k):
        """psi_hat_0 at wavenumbers k (one broadcastable array per axis)."""
        if len(k) != self.dim:
            raise ConfigurationError(f"expected {self.dim} wavenumber arrays")
        out = 1.0
        for kj, s, k0j, cj in zip(k, self.sigma, self.k0, self.center):
            kj = np.asarray(kj)
            out = out * ((2.0 * s ** 2 / np.pi) ** 0.25
                         * np.exp(-s ** 2 * (kj - k0j) ** 2)
                         * np.exp(-1j * kj * cj))
        return out

    def k_box(self, tail=_TAIL):
        """Per-axis (lo, hi) interval holding all but `tail` spectral mass."""
        half = np.sqrt(-np.log(tail) / 2.0)
        return [(k0j - half / s, k0j + half / s)
                for s, k0j in zip(self.sigma, self.k0)]

    # -- position side (exact free evolution) -------------------------------

    def position(self, *x, t=0.0, units=NATURAL):
        """Exact freely evolved psi(x, t); t = 0 gives the initial state."""
        if len(x) != self.dim:
            raise ConfigurationError(f"expected {self.dim} coordinate arrays")
        hbar, m = units.hbar, units.mass
        out = 1.0
        for xj, s, k0j, cj in zip(x, self.sigma, self.k0, self.center):
            xj = np.asarray(xj)
            a = s ** 2 + 0.5j * hbar * t / m
            b = 2.0 * s ** 2 * k0j + 1j * (xj - cj)
            pref = (2.0 * s ** 2 / np.pi) ** 0.25 / np.sqrt(2.0 * np.pi)
            out = out * (pref * np.sqrt(np.pi / a)
                         * np.exp(b ** 2 / (4.0 * a) - s ** 2 * k0j ** 2))
        return out

    def position_log_derivative(self, axis, *x, t=0.0, units=NATURAL):
        """d(log psi)/dx_axis at (x, t); the Bohmian velocity is
        (hbar/m) Im of this."""
        hbar, m = units.hbar, units.mass
        xj = np.asarray(x[axis])
        s, k0j, cj = self.sigma[axis], self.k0[axis], self.center[axis]
        a = s ** 2 + 0.5j * hbar * t / m
        b = 2.0 * s ** 2 * k0j + 1j * (xj - cj)
        return 1j * b / (2.0 * a)

    def width_sq(self, axis, t, units=NATURAL):
        """Spatial variance sigma^2(t) = sigma^2 + (hbar t / 2 m sigma)^2."""
        s = self.sigma[axis]
        return s ** 2 + (units.hbar * t / (2.0 * units.mass * s)) ** 2


class SuperposedPackets:
    """Normalized complex combination of GaussianPackets."""

    def __init__(self, coefficients, packets):
        if len(coefficients) != len(packets) or not packets:
            raise ConfigurationError("need one coefficient per packet")
        dims = {p.dim for p in packets}
        if len(dims) != 1:
            raise ConfigurationError("packets must share a dimension")
        self.dim = packets[0].dim
        self.packets = list(packets)
        coefficients = np.asarray(coefficients, dtype=complex)
        gram = np.array([[_spectral_overlap(a, b) for b in packets]
                         for a in packets])
        norm_sq = np.real(np.conj(coefficients) @ gram @ coefficients)
        self.coefficients = coefficients / np.sqrt(norm_sq)

    def spectral(self, *k):
        return sum(c * p.spectral(*k)
                   for c, p in zip(self.coefficients, self.packets))

    def position(self, *x, t=0.0, units=NATURAL):
        return sum(c * p.position(*x, t=t, units=units)
                   for c, p in zip(self.coefficients, self.packets))

    def k_box(self, tail=_TAIL):
        boxes = [p.k_box(tail) for p in self.packets]
        return [(min(b[j][0] for b in boxes), max(b[j][1] for b in boxes))
                for j in range(self.dim)]


def _axis_overlap(sa, ka, ca, sb, kb, cb):
    # integral of conj(spectral_a) * spectral_b over one axis
    a = sa ** 2 + sb ** 2
    b = 2.0 * (sa ** 2 * ka + sb ** 2 * kb) + 1j * (ca - cb)
    c = -(sa ** 2 * ka ** 2 + sb ** 2 * kb ** 2)
    pref = (2.0 * sa ** 2 / np.pi) ** 0.25 * (2.0 * sb ** 2 / np.pi) ** 0.25
    return pref * np.sqrt(np.pi / a) * np.exp(b ** 2 / (4.0 * a) + c)


def _spectral_overlap(pa, pb):
    out = 1.0
    for j in range(pa.dim):
        out = out * _axis_overlap(pa.sigma[j], pa.k0[j], pa.center[j],
                                  pb.sigma[j], pb.k0[j], pb.center[j])
    return out


# ---------------------------------------------------------------------------
# Sampling onto grids and quadrature helpers
# ---------------------------------------------------------------------------

def to_wave_field(packet, grid: Grid, units=NATURAL, renormalize=True):
    vals = packet.position(*grid.x_mesh(), t=0.0, units=units)
    vals = np.broadcast_to(vals, grid.shape).copy()
    f = WaveField(grid, vals, units)
    if renormalize:
        f = f.normalized()
    return f


def to_spectral_field(packet, grid: Grid, units=NATURAL):
    vals = packet.spectral(*grid.k_mesh())
    return SpectralField(grid, np.broadcast_to(vals, grid.shape).copy(), units)


def spectral_quadrature(packet, fn, nodes_per_axis=128, tail=_TAIL):
    """Integrate fn(k...) * |psi_hat_0(k)|^2 over the packet's k box."""
    box = packet.k_box(tail)
    axes = [gauss_nodes(lo, hi, nodes_per_axis) for lo, hi in box]
    if packet.dim == 1:
        x, w = axes[0]
        dens = np.abs(packet.spectral(x)) ** 2
        return float(np.sum(w * dens * fn(x)))
    (x1, w1), (x2, w2), (x3, w3) = axes
    K1, K2, K3 = np.meshgrid(x1, x2, x3, indexing="ij", sparse=True)
    W = (w1[:, None, None] * w2[None, :, None] * w3[None, None, :])
    dens = np.abs(packet.spectral(K1, K2, K3)) ** 2
    vals = fn(K1, K2, K3)
    return float(np.sum(W * dens * vals))


def reference_speed(packet, units=NATURAL, nodes_per_axis=128):
    """Mean hbar |k| / m over the spectral density."""
    if packet.dim == 1:
        kbar = spectral_quadrature(packet, lambda k: np.abs(k), nodes_per_axis)
    else:
        kbar = spectral_quadrature(
            packet, lambda k1, k2, k3: np.sqrt(k1 ** 2 + k2 ** 2 + k3 ** 2),
            nodes_per_axis=48)
    return units.hbar * kbar / units.mass
