"""Star-shaped detector regions Omega, described by a scale R and a shape
function s(u) on unit directions: the boundary is |x| = R s(x/|x|).

Built-in shapes: sphere (s = 1), ellipsoid (closed form), and tabulated s
values on a latitude/longitude mesh with bilinear interpolation.  The
outward normal is derived from s; the star-shape condition n(x).x > 0 is
checked on a deterministic sample of surface points.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError


def _unit(vecs):
    r = np.sqrt(np.sum(vecs ** 2, axis=-1, keepdims=True))
    return vecs / np.where(r == 0, 1.0, r)


def fibonacci_sphere(n):
    """n deterministic, nearly uniform unit vectors."""
    i = np.arange(n) + 0.5
    z = 1.0 - 2.0 * i / n
    phi = np.pi * (1.0 + np.sqrt(5.0)) * i
    s = np.sqrt(1.0 - z ** 2)
    return np.stack([s * np.cos(phi), s * np.sin(phi), z], axis=-1)


class ShapeFunction:
    """s(u) on the unit sphere plus its outward normal direction."""

    def value(self, u):
        raise NotImplementedError

    def normal(self, u):
        raise NotImplementedError


class Sphere(ShapeFunction):
    kind = "sphere"

    def value(self, u):
        return np.ones(np.asarray(u).shape[:-1])

    def normal(self, u):
        return np.asarray(u, dtype=float)


@dataclass
class Ellipsoid(ShapeFunction):
    """Semi-axes relative to R: boundary x^2/a^2 + y^2/b^2 + z^2/c^2 = R^2."""

    axes: tuple = (1.0, 1.0, 1.0)
    kind = "ellipsoid"

    def __post_init__(self):
        if len(self.axes) != 3 or any(a <= 0 for a in self.axes):
            raise ConfigurationError("ellipsoid needs three positive semi-axes")

    def value(self, u):
        u = np.asarray(u, dtype=float)
        a, b, c = self.axes
        q = (u[..., 0] / a) ** 2 + (u[..., 1] / b) ** 2 + (u[..., 2] / c) ** 2
        # zero-norm "directions" (the grid origin) sit deep inside any
        # star-shaped surface; give them the unit value
        with np.errstate(divide="ignore"):
            return np.where(q > 0, 1.0 / np.sqrt(np.where(q > 0, q, 1.0)), 1.0)

    def normal(self, u):
        # gradient of the quadratic form at the surface point x = R s(u) u
        u = np.asarray(u, dtype=float)
        a, b, c = self.axes
        g = np.stack([u[..., 0] / a ** 2, u[..., 1] / b ** 2,
                      u[..., 2] / c ** 2], axis=-1)
        return _unit(g)


class TabulatedShape(ShapeFunction):
    """s sampled on a (theta, phi) mesh; bilinear interpolation in between,
    normals by central differences of s on the sphere."""

    kind = "tabulated"

    def __init__(self, theta, phi, values):
        theta = np.asarray(theta, float)
        phi = np.asarray(phi, float)
        values = np.asarray(values, float)
        if values.shape != (theta.size, phi.size):
            raise ConfigurationError("values must have shape (n_theta, n_phi)")
        if np.any(values <= 0):
            raise ConfigurationError("s(u) must be positive")
        self.theta, self.phi, self.values = theta, phi, values

    def _interp(self, th, ph):
        ph = np.mod(ph, 2 * np.pi)
        it = np.clip(np.searchsorted(self.theta, th) - 1, 0, self.theta.size - 2)
        ip = np.clip(np.searchsorted(self.phi, ph) - 1, 0, self.phi.size - 2)
        t0, t1 = self.theta[it], self.theta[it + 1]
        p0, p1 = self.phi[ip], self.phi[ip + 1]
        wt = np.clip((th - t0) / (t1 - t0), 0, 1)
        wp = np.clip((ph - p0) / (p1 - p0), 0, 1)
        v = self.values
        return ((1 - wt) * (1 - wp) * v[it, ip] + wt * (1 - wp) * v[it + 1, ip]
                + (1 - wt) * wp * v[it, ip + 1] + wt * wp * v[it + 1, ip + 1])

    def value(self, u):
        u = np.asarray(u, dtype=float)
        th = np.arccos(np.clip(u[..., 2], -1, 1))
        ph = np.arctan2(u[..., 1], u[..., 0])
        return self._interp(th, ph)

    def normal(self, u):
        # n is parallel to r_hat - (grad_S s)/s on the sphere
        u = np.asarray(u, dtype=float)
        th = np.arccos(np.clip(u[..., 2], -1, 1))
        ph = np.arctan2(u[..., 1], u[..., 0])
        h = 1e-5
        s = self._interp(th, ph)
        ds_dth = (self._interp(th + h, ph) - self._interp(th - h, ph)) / (2 * h)
        ds_dph = (self._interp(th, ph + h) - self._interp(th, ph - h)) / (2 * h)
        sin_th = np.maximum(np.sin(th), 1e-12)
        th_hat = np.stack([np.cos(th) * np.cos(ph), np.cos(th) * np.sin(ph),
                           -np.sin(th)], axis=-1)
        ph_hat = np.stack([-np.sin(ph), np.cos(ph),
                           np.zeros_like(ph)], axis=-1)
        n = (u - (ds_dth / s)[..., None] * th_hat
             - (ds_dph / (s * sin_th))[..., None] * ph_hat)
        return _unit(n)


@dataclass
class DetectorRegion:
    """Omega = {|x| < R s(x/|x|)} with detectors filling the complement.

    1D regions are the interval (-R, R): s is identically one and the
    "directions" are the two signs.
    """

    dim: int
    scale: float
    shape: ShapeFunction = field(default_factory=Sphere)

    def __post_init__(self):
        if self.dim not in (1, 3):
            raise ConfigurationError("dim must be 1 or 3")
        if not self.scale > 0:
            raise ConfigurationError("R must be positive")
        if self.dim == 3:
            self.check_star_shape()

    # -- geometry ------------------------------------------------------------

    def boundary_radius_of_u(self, u):
        """R s(u) for unit directions u (shape (..., 3)); scalar 1 in 1D."""
        if self.dim == 1:
            return self.scale * np.ones(np.asarray(u).shape[:-1])
        return self.scale * self.shape.value(u)

    def outward_normal_of_u(self, u):
        if self.dim == 1:
            return np.asarray(u, dtype=float)
        return self.shape.normal(u)

    def contains(self, points):
        """points shape (..., dim); True inside Omega."""
        pts = np.asarray(points, dtype=float)
        if self.dim == 1:
            return np.abs(pts[..., 0]) < self.scale
        r = np.sqrt(np.sum(pts ** 2, axis=-1))
        u = _unit(pts.reshape(-1, 3)).reshape(pts.shape)
        return r < self.scale * self.shape.value(u)

    def signed_boundary_distance(self, points):
        """|x| - R s(u(x)): negative inside, positive outside (radial gauge)."""
        pts = np.asarray(points, dtype=float)
        if self.dim == 1:
            return np.abs(pts[..., 0]) - self.scale
        r = np.sqrt(np.sum(pts ** 2, axis=-1))
        u = _unit(pts.reshape(-1, 3)).reshape(pts.shape)
        return r - self.scale * self.shape.value(u)

    def check_star_shape(self, n_samples=2048):
        u = fibonacci_sphere(n_samples)
        x = self.boundary_radius_of_u(u)[:, None] * u
        n = self.outward_normal_of_u(u)
        ndotx = np.sum(n * x, axis=-1)
        if np.any(ndotx <= 0):
            raise ConfigurationError(
                "region is not star-shaped: n(x).x <= 0 at sampled surface points")
        return float(ndotx.min())


def sphere_region(dim, R):
    return DetectorRegion(dim, R, Sphere())


def ellipsoid_region(R, axes):
    return DetectorRegion(3, R, Ellipsoid(tuple(axes)))
