"""Zitterbewegung helices: the trajectory of a two-mode (positive plus
negative energy) superposition in the frame where the shared mode is at
rest.  The velocity oscillates at omega_0 = 2 m c^2 / hbar and the orbit is
an ellipse in span{a, b} with spatial size at most c / omega_0 =
hbar / 2 m c."""

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigurationError
from ..units import PhysicalUnits, NATURAL
from .algebra import ALPHA, projector


@dataclass
class HelixParams:
    """Rest-frame spinor pair and the derived ellipse vectors."""

    u_plus: np.ndarray
    u_minus: np.ndarray
    units: PhysicalUnits = field(default_factory=lambda: NATURAL)
    x0: np.ndarray = None

    def __post_init__(self):
        self.u_plus = np.asarray(self.u_plus, complex)
        self.u_minus = np.asarray(self.u_minus, complex)
        self.x0 = np.zeros(3) if self.x0 is None else np.asarray(self.x0, float)
        P_plus, P_minus, _ = projector(np.zeros(3), self.units)
        if np.linalg.norm(P_plus @ self.u_plus - self.u_plus) > 1e-10:
            raise ConfigurationError("u_plus must lie in the k=0 positive-"
                                     "energy subspace (upper components)")
        if np.linalg.norm(P_minus @ self.u_minus - self.u_minus) > 1e-10:
            raise ConfigurationError("u_minus must lie in the k=0 negative-"
                                     "energy subspace (lower components)")

    @property
    def omega0(self):
        u = self.units
        return 2.0 * u.mass * u.c ** 2 / u.hbar

    def ellipse_vectors(self):
        """Real 3-vectors a, b with dX/dt = a cos(w0 t) + b sin(w0 t)."""
        c = self.units.c
        denom = (np.linalg.norm(self.u_plus) ** 2
                 + np.linalg.norm(self.u_minus) ** 2)
        cross = np.array([self.u_plus.conj() @ (ALPHA[i] @ self.u_minus)
                          for i in range(3)])
        a = 2.0 * c * np.real(cross) / denom
        b = -2.0 * c * np.imag(cross) / denom
        return a, b

    def speed_bounds_ok(self):
        """|a| <= c, |b| <= c, and the pointwise speed max_t |v(t)| <= c.

        The pointwise bound is the largest singular value of [a b]; it is
        what caps the orbit radius at c/omega0 = hbar/2mc.  (The quadrature
        sum sqrt(a^2 + b^2) can exceed c for skewed spinor pairs.)
        """
        a, b = self.ellipse_vectors()
        c = self.units.c
        s_max = np.linalg.svd(np.stack([a, b], axis=1), compute_uv=False)[0]
        return (np.linalg.norm(a) <= c * (1 + 1e-12)
                and np.linalg.norm(b) <= c * (1 + 1e-12)
                and s_max <= c * (1 + 1e-12))


def helix_velocity(h: HelixParams, t):
    a, b = h.ellipse_vectors()
    t = np.asarray(t, float)
    return (a[None, :] * np.cos(h.omega0 * t)[:, None]
            + b[None, :] * np.sin(h.omega0 * t)[:, None]) \
        if t.ndim else a * np.cos(h.omega0 * t) + b * np.sin(h.omega0 * t)


def helix_trajectory(h: HelixParams, t):
    """Closed form X(t) = X0 - (b/w0) cos(w0 t) + (a/w0) sin(w0 t), shifted
    so that X(0) = X0."""
    a, b = h.ellipse_vectors()
    w0 = h.omega0
    t = np.asarray(t, float)
    cos = np.cos(w0 * t)
    sin = np.sin(w0 * t)
    if t.ndim:
        return (h.x0[None, :] - np.outer(cos - 1.0, b / w0)
                + np.outer(sin, a / w0))
    return h.x0 - (cos - 1.0) * b / w0 + sin * a / w0


def integrate_helix_ode(h: HelixParams, t_max, dt):
    """Independent RK4 integration of dX/dt = a cos(w0 t) + b sin(w0 t)."""
    n = int(round(t_max / dt))
    x = h.x0.astype(float).copy()
    ts = np.empty(n + 1)
    xs = np.empty((n + 1, 3))
    ts[0], xs[0] = 0.0, x
    t = 0.0
    for i in range(n):
        k1 = helix_velocity(h, t)
        k2 = helix_velocity(h, t + 0.5 * dt)
        k3 = k2
        k4 = helix_velocity(h, t + dt)
        x = x + dt * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
        t += dt
        ts[i + 1], xs[i + 1] = t, x
    return ts, xs


def helix_fit(times, positions):
    """Fit period, semi-axes, and linear axis drift from trajectory samples.

    The drift and center are removed by least squares against
    {1, t, cos(w t), sin(w t)} and w is refined by golden-section search on
    the residual around the FFT frequency estimate.
    """
    times = np.asarray(times, float)
    pos = np.asarray(positions, float)

    def residual(w):
        cols = np.stack([np.ones_like(times), times,
                         np.cos(w * times), np.sin(w * times)], axis=1)
        coef, *_ = np.linalg.lstsq(cols, pos, rcond=None)
        r = pos - cols @ coef
        return float(np.sum(r ** 2)), coef

    # FFT frequency estimate from the strongest oscillating component
    dt = times[1] - times[0]
    detrended = pos - pos.mean(axis=0)
    spec = np.abs(np.fft.rfft(detrended, axis=0)) ** 2
    freqs = np.fft.rfftfreq(len(times), d=dt)
    amp = spec.sum(axis=1)
    amp[0] = 0.0
    w0 = 2.0 * np.pi * freqs[int(np.argmax(amp))]
    lo, hi = 0.8 * w0, 1.25 * w0
    gr = (np.sqrt(5.0) - 1.0) / 2.0
    c = hi - gr * (hi - lo)
    d = lo + gr * (hi - lo)
    for _ in range(80):
        if residual(c)[0] < residual(d)[0]:
            hi = d
        else:
            lo = c
        c = hi - gr * (hi - lo)
        d = lo + gr * (hi - lo)
    w = 0.5 * (lo + hi)
    _, coef = residual(w)
    cos_vec, sin_vec = coef[2], coef[3]
    M = np.stack([cos_vec, sin_vec], axis=1)
    svals = np.linalg.svd(M, compute_uv=False)
    return {
        "period": 2.0 * np.pi / w,
        "semi_major": float(svals[0]),
        "semi_minor": float(svals[1]),
        "axis_drift": coef[1],
        "center": coef[0],
    }
