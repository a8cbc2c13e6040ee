"""Origin-centered periodic grids and the unitary Fourier transform pair.

Convention (fixed throughout the package): forward kernel e^{-ik.x} with
symmetric normalization,

    psi_hat(k) = (2 pi)^(-d/2) integral e^{-ik.x} psi(x) dx ,

so that Parseval holds with the plain Riemann measures dx^d and dk^d.
"""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import ConfigurationError
from .units import PhysicalUnits, NATURAL


@dataclass(frozen=True)
class Grid:
    """Uniform origin-centered periodic grid in 1 or 3 dimensions.

    Parameters
    ----------
    dim : int
        Spatial dimension, 1 or 3.
    n : int
        Points per axis; power of two, at least 8.
    length : float
        Physical extent per axis; coordinates run over [-L/2, L/2).
    """

    dim: int
    n: int
    length: float

    def __post_init__(self):
        if self.dim not in (1, 3):
            raise ConfigurationError(f"dim must be 1 or 3, got {self.dim}")
        if self.n < 8 or (self.n & (self.n - 1)) != 0:
            raise ConfigurationError(
                f"points per axis must be a power of two >= 8, got {self.n}")
        if not self.length > 0:
            raise ConfigurationError("grid length must be positive")

    @property
    def dx(self):
        return self.length / self.n

    @property
    def dk(self):
        return 2.0 * np.pi / self.length

    @property
    def k_max(self):
        return np.pi / self.dx

    @property
    def shape(self):
        return (self.n,) * self.dim

    @property
    def cell_volume(self):
        return self.dx ** self.dim

    @property
    def k_cell_volume(self):
        return self.dk ** self.dim

    def x_axis(self):
        return _x_axis(self.n, self.length)

    def k_axis(self):
        """Monotone momentum axis, from -k_max to k_max - dk."""
        return _k_axis(self.n, self.length)

    def x_mesh(self):
        """Tuple of dim broadcastable coordinate arrays (sparse mesh)."""
        ax = self.x_axis()
        if self.dim == 1:
            return (ax,)
        return np.meshgrid(ax, ax, ax, indexing="ij", sparse=True)

    def k_mesh(self):
        ax = self.k_axis()
        if self.dim == 1:
            return (ax,)
        return np.meshgrid(ax, ax, ax, indexing="ij", sparse=True)

    def radius(self):
        """|x| on the grid (dense array)."""
        mesh = self.x_mesh()
        if self.dim == 1:
            return np.abs(mesh[0])
        return np.sqrt(mesh[0] ** 2 + mesh[1] ** 2 + mesh[2] ** 2)

    def k2_fft_order(self):
        return _k2_fft_order(self.dim, self.n, self.length)


@lru_cache(maxsize=64)
def _x_axis(n, length):
    dx = length / n
    return (np.arange(n) - n // 2) * dx


@lru_cache(maxsize=64)
def _k_axis(n, length):
    dk = 2.0 * np.pi / length
    return (np.arange(n) - n // 2) * dk


@lru_cache(maxsize=32)
def _k2_fft_order(dim, n, length):
    k1 = 2.0 * np.pi * np.fft.fftfreq(n, d=length / n)
    if dim == 1:
        return k1 ** 2
    kx, ky, kz = np.meshgrid(k1, k1, k1, indexing="ij", sparse=True)
    return kx ** 2 + ky ** 2 + kz ** 2


@dataclass
class WaveField:
    """Complex position-space amplitude on a Grid, with units attached."""

    grid: Grid
    values: np.ndarray
    units: PhysicalUnits = field(default_factory=lambda: NATURAL)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != self.grid.shape:
            raise ConfigurationError(
                f"values shape {self.values.shape} does not match grid {self.grid.shape}")

    def norm_sq(self):
        """Riemann sum of |psi|^2 dx^d."""
        return float(np.sum(np.abs(self.values) ** 2)) * self.grid.cell_volume

    def norm(self):
        return np.sqrt(self.norm_sq())

    def normalized(self):
        return WaveField(self.grid, self.values / self.norm(), self.units)

    def copy(self):
        return WaveField(self.grid, self.values.copy(), self.units)

    def edge_mass(self, margin_cells=4):
        """Absolute |psi|^2 mass within margin_cells of any grid edge."""
        dens = np.abs(self.values) ** 2
        core = dens
        for axis in range(self.grid.dim):
            sl = [slice(None)] * self.grid.dim
            sl[axis] = slice(margin_cells, self.grid.n - margin_cells)
            core = core[tuple(sl)]
        return (float(dens.sum()) - float(core.sum())) * self.grid.cell_volume

    def edge_mass_fraction(self, margin_cells=4):
        """Edge mass relative to the current total mass."""
        total = self.norm_sq()
        if total == 0.0:
            return 0.0
        return self.edge_mass(margin_cells) / total


@dataclass
class SpectralField:
    """Complex momentum-space amplitude on the dual grid (monotone k axes)."""

    grid: Grid
    values: np.ndarray
    units: PhysicalUnits = field(default_factory=lambda: NATURAL)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != self.grid.shape:
            raise ConfigurationError(
                f"values shape {self.values.shape} does not match grid {self.grid.shape}")

    def norm_sq(self):
        return float(np.sum(np.abs(self.values) ** 2)) * self.grid.k_cell_volume

    def norm(self):
        return np.sqrt(self.norm_sq())


def forward_transform(f: WaveField) -> SpectralField:
    """Unitary FFT with e^{-ik.x} kernel; values on the monotone k grid."""
    g = f.grid
    shifted = np.fft.ifftshift(f.values)
    spec = np.fft.fftn(shifted)
    spec = np.fft.fftshift(spec)
    spec *= g.cell_volume * (2.0 * np.pi) ** (-g.dim / 2.0)
    return SpectralField(g, spec, f.units)


def inverse_transform(g: SpectralField) -> WaveField:
    """Inverse of forward_transform (e^{+ik.x} kernel)."""
    gr = g.grid
    shifted = np.fft.ifftshift(g.values)
    vals = np.fft.ifftn(shifted)
    vals = np.fft.fftshift(vals)
    vals *= gr.n ** gr.dim * gr.k_cell_volume * (2.0 * np.pi) ** (-gr.dim / 2.0)
    return WaveField(gr, vals, g.units)


def spectral_centroid_speed(spec: SpectralField) -> float:
    """Mean of hbar|k|/m over |psi_hat|^2: the reference speed for tau scaling."""
    g = spec.grid
    dens = np.abs(spec.values) ** 2
    total = dens.sum()
    if total == 0.0:
        raise ConfigurationError("cannot take spectral centroid of a null field")
    mesh = g.k_mesh()
    if g.dim == 1:
        kabs = np.abs(mesh[0])
    else:
        kabs = np.sqrt(mesh[0] ** 2 + mesh[1] ** 2 + mesh[2] ** 2)
    kbar = float((dens * kabs).sum() / total)
    return spec.units.hbar * kbar / spec.units.mass
