"""Time evolution: exact spectral free steps and Strang split-step with a
complex (absorbing) potential.

The free kernel is diagonal in momentum space, exp(-i hbar k^2 t / 2m), so
free evolution is a single exact spectral multiply for any t.  With an
imaginary potential -i*lam outside the detector region, the potential factor
is the exact pointwise decay exp(-lam dt / hbar), and the per-step norm loss
is the absorbed probability that the detector modules bin into histograms.
"""

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, InstabilityError, WraparoundError
from .fields import Grid, WaveField, forward_transform
from .special import complex_erf
from .units import PhysicalUnits, NATURAL

SCHEMES = ("exact-free-spectral", "split-step-second-order")

# spectral density below this fraction of the peak does not count as occupied
_OCCUPANCY_FLOOR = 1e-12


@dataclass(frozen=True)
class EvolutionConfig:
    dt: float
    scheme: str = "split-step-second-order"
    edge_threshold: float = 1e-8
    edge_margin_cells: int = 4
    edge_check_stride: int = 16

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigurationError("dt must be positive")
        if self.scheme not in SCHEMES:
            raise ConfigurationError(f"unknown scheme {self.scheme!r}")


@dataclass
class ComplexPotential:
    """Pointwise complex potential; absorption requires Im V <= 0."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != self.grid.shape:
            raise ConfigurationError("potential shape does not match grid")
        if np.any(self.values.imag > 1e-15):
            raise ConfigurationError("Im V must be <= 0 everywhere (absorption only)")

    def absorbing_mask(self):
        return self.values.imag < 0


@dataclass
class EvolutionRecord:
    """Per-step bookkeeping from evolve_potential.

    times[i] is the end of step i; absorbed[i] the probability removed
    during step i; outside_mass[i] the |psi|^2 mass in the absorbing region
    at the end of the step.
    """

    times: np.ndarray
    absorbed: np.ndarray
    outside_mass: np.ndarray

    def total_absorbed(self):
        return float(self.absorbed.sum())

    def mean_residence_time(self):
        """Time-integrated outside mass per unit absorbed probability.

        For a constant absorption rate 2*lam/hbar this estimates the mean
        dwell time in the detector region before absorption.
        """
        total = self.total_absorbed()
        if total <= 0:
            raise ConfigurationError("no probability was absorbed")
        dt = self.times[1] - self.times[0] if len(self.times) > 1 else self.times[0]
        return float(self.outside_mass.sum() * dt / total)


def _kinetic_phase(grid: Grid, t: float, units: PhysicalUnits):
    return np.exp(-0.5j * units.hbar * grid.k2_fft_order() * t / units.mass)


def evolve_free(f: WaveField, t: float) -> WaveField:
    """Exact free evolution by time t >= 0 (single spectral multiply)."""
    if t < 0:
        raise ConfigurationError("t must be >= 0")
    if t == 0:
        return f.copy()
    spec = np.fft.fftn(np.fft.ifftshift(f.values))
    spec *= _kinetic_phase(f.grid, t, f.units)
    out = WaveField(f.grid, np.fft.fftshift(np.fft.ifftn(spec)), f.units)
    return out


def check_edge_mass(f: WaveField, cfg: EvolutionConfig, context="",
                    reference_norm_sq=1.0):
    """Fail hard when mass near the periodic edge exceeds the threshold.

    Edge mass is compared against the *initial* norm: during an absorbing
    run the surviving norm shrinks, and a fraction of it would spuriously
    inflate."""
    mass = f.edge_mass(cfg.edge_margin_cells)
    if mass > cfg.edge_threshold * reference_norm_sq:
        raise WraparoundError(
            f"edge mass {mass:.3e} exceeds {cfg.edge_threshold:.1e} of the "
            f"initial norm{' in ' + context if context else ''}; periodic "
            "images would corrupt detection statistics")


def occupied_kinetic_phase(f: WaveField, dt: float) -> float:
    """Largest kinetic phase advance per step among occupied Fourier modes."""
    spec = forward_transform(f)
    dens = np.abs(spec.values) ** 2
    occupied = dens > _OCCUPANCY_FLOOR * dens.max()
    mesh = spec.grid.k_mesh()
    if spec.grid.dim == 1:
        k2 = mesh[0] ** 2
    else:
        k2 = mesh[0] ** 2 + mesh[1] ** 2 + mesh[2] ** 2
    k2_occ = float(np.max(np.broadcast_to(k2, dens.shape)[occupied]))
    return 0.5 * f.units.hbar * k2_occ * dt / f.units.mass


def evolve_potential(f: WaveField, V: ComplexPotential, t_total: float,
                     cfg: EvolutionConfig, absorb_callback=None,
                     snapshot_callback=None, snapshot_stride=0,
                     check_occupancy=True):
    """Strang split-step evolution under H = -hbar^2/2m lap + V.

    Returns (final field, EvolutionRecord).  absorb_callback(i, t_mid, cell_mass)
    receives the per-cell probability absorbed during step i (cell_mass already
    includes the dx^d measure).  snapshot_callback(i, t, field) fires every
    snapshot_stride steps (and at step 0 / the final step).
    """
    if V.grid != f.grid:
        raise ConfigurationError("potential and field grids differ")
    if check_occupancy:
        phase = occupied_kinetic_phase(f, cfg.dt)
        if phase >= 0.25 * np.pi:
            raise ConfigurationError(
                f"kinetic phase per step {phase:.3f} rad >= pi/4 for occupied "
                "modes; reduce dt")

    n_steps = int(round(t_total / cfg.dt))
    if abs(n_steps * cfg.dt - t_total) > 1e-9 * max(1.0, t_total):
        raise ConfigurationError("t_total must be an integer multiple of dt")

    hbar = f.units.hbar
    grid = f.grid
    half_kin = _kinetic_phase(grid, 0.5 * cfg.dt, f.units)
    pot_factor = np.exp(-1j * V.values * cfg.dt / hbar)
    decay_sq = np.abs(pot_factor) ** 2          # <= 1 since Im V <= 0
    loss_frac = 1.0 - decay_sq
    mask = V.absorbing_mask()

    psi = f.values.copy()
    times = np.empty(n_steps)
    absorbed = np.empty(n_steps)
    outside = np.empty(n_steps)
    norm_prev = float(np.sum(np.abs(psi) ** 2)) * grid.cell_volume
    norm_start = norm_prev

    if snapshot_callback is not None:
        snapshot_callback(0, 0.0, WaveField(grid, psi.copy(), f.units))

    for i in range(n_steps):
        spec = np.fft.fftn(np.fft.ifftshift(psi))
        spec *= half_kin
        psi = np.fft.fftshift(np.fft.ifftn(spec))

        dens_before = np.abs(psi) ** 2
        cell_mass = dens_before * loss_frac * grid.cell_volume
        psi *= pot_factor

        spec = np.fft.fftn(np.fft.ifftshift(psi))
        spec *= half_kin
        psi = np.fft.fftshift(np.fft.ifftn(spec))

        t_end = (i + 1) * cfg.dt
        times[i] = t_end
        absorbed[i] = cell_mass.sum()
        outside[i] = float(np.sum((np.abs(psi) ** 2)[mask])) * grid.cell_volume
        if absorb_callback is not None:
            absorb_callback(i, t_end - 0.5 * cfg.dt, cell_mass)

        norm_now = float(np.sum(np.abs(psi) ** 2)) * grid.cell_volume
        if norm_now > norm_prev * (1.0 + 1e-10):
            raise InstabilityError(
                f"norm increased from {norm_prev} to {norm_now} at step {i}")
        norm_prev = norm_now

        if (i + 1) % cfg.edge_check_stride == 0 or i == n_steps - 1:
            check_edge_mass(WaveField(grid, psi, f.units), cfg,
                            context=f"step {i + 1}",
                            reference_norm_sq=norm_start)
        if snapshot_callback is not None and snapshot_stride > 0 and (
                (i + 1) % snapshot_stride == 0 or i == n_steps - 1):
            snapshot_callback(i + 1, t_end, WaveField(grid, psi.copy(), f.units))

    return WaveField(grid, psi, f.units), EvolutionRecord(times, absorbed, outside)


# ---------------------------------------------------------------------------
# Closed forms for the freely evolved soft step
# ---------------------------------------------------------------------------

def evolved_width_parameter(sigma, dt, units=NATURAL):
    """Complex width sigma(dt) = sqrt(sigma^2 + i hbar dt / 2m)."""
    return np.sqrt(sigma ** 2 + 0.5j * units.hbar * dt / units.mass)


def step_width(sigma, dt, units=NATURAL):
    """Real width w(dt) of the spread step edge: the width of the Gaussian
    that is the derivative of the evolved erf profile."""
    hbar, m = units.hbar, units.mass
    return np.sqrt(sigma ** 2 + (hbar * dt) ** 2 / (4.0 * m ** 2 * sigma ** 2))


def evolved_soft_step(x, k0, sigma, dt, units=NATURAL):
    """Freely evolved soft step (1/2)(1 - erf(x / 2 sigma)) e^{i k0 x}.

    Exact closed form: the erf edge keeps its erf shape with the complex
    width sigma(dt), drifts at the group velocity hbar k0 / m, and picks up
    the plane-wave phase.
    """
    if not sigma > 0:
        raise ConfigurationError("sigma must be positive")
    hbar, m = units.hbar, units.mass
    s_t = evolved_width_parameter(sigma, dt, units)
    arg = (np.asarray(x) - hbar * k0 * dt / m) / (2.0 * s_t)
    phase = np.exp(1j * k0 * np.asarray(x) - 0.5j * hbar * k0 ** 2 * dt / m)
    return 0.5 * (1.0 - complex_erf(arg)) * phase


def evolved_soft_barrier(x, k0, sigma, half_width, dt, units=NATURAL):
    """Freely evolved symmetric soft window (1/2)(1 - erf((|x|-R)/2 sigma)) e^{i k0 x}.

    Equal (up to e^{-(R/sigma)^2} corrections) to the difference of two soft
    steps at -R and +R, each of which evolves by the same closed form as
    evolved_soft_step.  Unlike the single step, the window is compatible with
    a periodic grid, so it is the profile used for grid-vs-closed-form
    identity checks.
    """
    if not (sigma > 0 and half_width > 0):
        raise ConfigurationError("sigma and half_width must be positive")
    hbar, m = units.hbar, units.mass
    s_t = evolved_width_parameter(sigma, dt, units)
    xs = np.asarray(x) - hbar * k0 * dt / m
    profile = 0.5 * (complex_erf((xs + half_width) / (2.0 * s_t))
                     - complex_erf((xs - half_width) / (2.0 * s_t)))
    phase = np.exp(1j * k0 * np.asarray(x) - 0.5j * hbar * k0 ** 2 * dt / m)
    return profile * phase


# ---------------------------------------------------------------------------
# Snapshot dumps
# ---------------------------------------------------------------------------

_HEADER = struct.Struct("<ii dd")   # dim, N, L, t (little-endian)


def dump_field_binary(f: WaveField, t: float, path):
    """Little-endian dump: header {dim:int32, N:int32, L:f64, t:f64}, then
    interleaved re/im float64 pairs in C order."""
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(f.grid.dim, f.grid.n, f.grid.length, t))
        inter = np.empty(f.values.size * 2)
        inter[0::2] = f.values.real.ravel()
        inter[1::2] = f.values.imag.ravel()
        fh.write(inter.astype("<f8").tobytes())


def load_field_binary(path, units=NATURAL):
    with open(path, "rb") as fh:
        dim, n, length, t = _HEADER.unpack(fh.read(_HEADER.size))
        raw = np.frombuffer(fh.read(), dtype="<f8")
    vals = (raw[0::2] + 1j * raw[1::2]).reshape((n,) * dim)
    return WaveField(Grid(dim, n, length), vals, units), t


def dump_field_csv(f: WaveField, t: float, path):
    """CSV dump (1D fields): columns x, re, im; header row records t."""
    if f.grid.dim != 1:
        raise ConfigurationError("CSV field dumps support 1D grids only")
    x = f.grid.x_axis()
    with open(path, "w") as fh:
        fh.write(f"# t={float(t)!r} N={f.grid.n} L={float(f.grid.length)!r}\n")
        fh.write("x,re,im\n")
        for xi, v in zip(x, f.values):
            fh.write(f"{float(xi)!r},{float(v.real)!r},{float(v.imag)!r}\n")
