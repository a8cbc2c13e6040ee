"""Complex error function and Gauss-Legendre quadrature."""

import numpy as np
from scipy import special as _sp

from .errors import DomainError

# exp(-z^2) in the Faddeeva relation overflows once |Im z| is large; the
# soft-step evolution only ever needs |arg| < pi/4, far inside this bound.
_IM_LIMIT = 30.0


def complex_erf(z):
    """erf continued to the complex plane (Faddeeva route, via scipy).

    Accepts scalars or arrays.  Valid for |Im z| <= 30; outside that strip
    the erfc/Faddeeva evaluation overflows and a DomainError is raised.
    """
    z = np.asarray(z, dtype=complex)
    if np.any(np.abs(z.imag) > _IM_LIMIT):
        raise DomainError(f"complex_erf requires |Im z| <= {_IM_LIMIT}")
    out = _sp.erf(z)
    if z.ndim == 0:
        return complex(out)
    return out


def gauss_quadrature(f, a, b, n=64):
    """Integrate f over [a, b] with an n-node Gauss-Legendre rule.

    Exact for polynomials of degree <= 2n - 1.  f must accept an ndarray of
    nodes and return values (real or complex) of the same shape.
    """
    if not a < b:
        raise DomainError(f"need a < b, got a={a}, b={b}")
    nodes, weights = np.polynomial.legendre.leggauss(int(n))
    x = 0.5 * (b - a) * nodes + 0.5 * (b + a)
    y = np.asarray(f(x))
    acc = np.sum(weights * y, axis=-1) * 0.5 * (b - a)
    return complex(acc) if np.iscomplexobj(y) else float(acc)


def gauss_nodes(a, b, n=64):
    """Nodes and weights of the n-point Gauss-Legendre rule on [a, b]."""
    if not a < b:
        raise DomainError(f"need a < b, got a={a}, b={b}")
    nodes, weights = np.polynomial.legendre.leggauss(int(n))
    x = 0.5 * (b - a) * nodes + 0.5 * (b + a)
    w = 0.5 * (b - a) * weights
    return x, w
