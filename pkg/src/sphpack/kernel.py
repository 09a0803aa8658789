"""Wendland C2 kernel with compact support radius h.

    W(r, h) = sigma_d / h^d * (1 - q)^4 (1 + 4 q),   q = r / h < 1

sigma_1 = 3/2, sigma_2 = 7/pi.  The one-dimensional normalisation W1 = A W
integrates to one over [-h, h] and is identical to the d = 1 kernel.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError

KERNEL_FORM = "wendland_c2: W = sigma_d/h^d (1-q)^4 (1+4q), q=r/h, support r<h"

_SIGMA = {1: 1.5, 2: 7.0 / np.pi}


@dataclass(frozen=True)
class KernelSpec:
    cutoff: float
    dimension: int = 2

    def __post_init__(self):
        if self.dimension not in _SIGMA:
            raise InvalidArgumentError(f"dimension must be 1 or 2, got {self.dimension}")
        if not np.isfinite(self.cutoff) or self.cutoff <= 0:
            raise InvalidArgumentError(f"cutoff must be positive and finite, got {self.cutoff}")

    @property
    def h(self):
        return self.cutoff

    @property
    def sigma(self):
        return _SIGMA[self.dimension]

    @property
    def w0(self):
        """Kernel value at the origin."""
        return self.sigma / self.cutoff**self.dimension


def _q(r, spec):
    r = np.asarray(r, dtype=float)
    if not np.all(np.isfinite(r)):
        raise InvalidArgumentError("distance must be finite")
    if np.any(r < 0):
        raise InvalidArgumentError("distance must be non-negative")
    return np.minimum(r / spec.cutoff, 1.0)


def kernel_value(r, spec):
    q = _q(r, spec)
    out = spec.w0 * (1.0 - q) ** 4 * (1.0 + 4.0 * q)
    return out if out.ndim else float(out)


def kernel_derivative(r, spec):
    """dW/dr = -20 q (1 - q)^3 sigma_d / h^(d+1)."""
    q = _q(r, spec)
    out = -20.0 * spec.w0 / spec.cutoff * q * (1.0 - q) ** 3
    return out if out.ndim else float(out)


def one_d_normalization(spec):
    # int_{-h}^{h} W dr = (2/3) h * sigma_d / h^d
    return 1.0 / (spec.w0 * spec.cutoff * 2.0 / 3.0)


def w1_value(r, spec):
    q = _q(r, spec)
    out = 1.5 / spec.cutoff * (1.0 - q) ** 4 * (1.0 + 4.0 * q)
    return out if out.ndim else float(out)


def w1_derivative(r, spec):
    q = _q(r, spec)
    out = -30.0 / spec.cutoff**2 * q * (1.0 - q) ** 3
    return out if out.ndim else float(out)


def _tail(phi, spec):
    phi = np.asarray(phi, dtype=float)
    if not np.all(np.isfinite(phi)):
        raise InvalidArgumentError("phi must be finite")
    # int_t^h W1 dr for t = -phi clipped to [0, h]
    s = 1.0 - np.clip(-phi / spec.cutoff, 0.0, 1.0)
    return phi, 1.5 * s**5 - s**6


def boundary_integral(phi, spec):
    """int_{-phi}^{h} W1(max(r, 0)) dr, saturated at 1/2 for phi >= 0."""
    _, out = _tail(phi, spec)
    return out if out.ndim else float(out)


def boundary_integral_extended(phi, spec):
    """Boundary integral continued linearly for phi > 0.

    Taking the lower limit literally, the integrand stays at W1(0) on
    [-phi, 0], so the integral grows like 1/2 + phi W1(0) outside the domain.
    Its phi-derivative is W1(max(-phi, 0)), the confining force profile.
    """
    phi, out = _tail(phi, spec)
    out = out + np.maximum(phi, 0.0) * 1.5 / spec.cutoff
    return out if out.ndim else float(out)


def smoothed_fraction(phi, spec):
    """Smoothed characteristic function P(-phi) in [0, 1]."""
    _, tail = _tail(phi, spec)
    out = 1.0 - 2.0 * tail
    return out if out.ndim else float(out)
