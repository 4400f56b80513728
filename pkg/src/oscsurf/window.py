"""Window construction for the packet system.

The default profile is the autocorrelation of a smooth exponential bump
supported in [-1/8, 1/8]: the result is real, even, smooth, supported in
[-1/4, 1/4], and its Fourier transform is the square of the bump transform,
hence nonnegative everywhere and strictly positive on [-1/2, 1/2].

The window is normalized so that min of the transform over [-1/2, 1/2]
equals 1.  With that normalization the analysis-map energy bound constant
1/fourier_floor is exactly achievable: the per-frequency amplification is
1/transform^2 <= 1/floor^2 = 1/floor.

Fourier convention throughout: F(u) = integral f(x) exp(-2 pi i x u) dx.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import WindowConstructionError

BUMP_HALF = 0.125  # support half-width of the base bump
SUPPORT_HALF = 0.25  # support half-width of its autocorrelation


def _bump_poly_numerators(max_k):
    """Numerator polynomials N_k with g^(k)(t) = N_k(t) (1-t^2)^(-2k) g(t)
    for the unit bump g(t) = exp(-1/(1-t^2)) on (-1, 1)."""
    P = np.polynomial.Polynomial
    one_minus = P([1.0, 0.0, -1.0])
    nums = [P([1.0])]
    for k in range(max_k):
        Nk = nums[-1]
        nxt = one_minus * (Nk.deriv() * one_minus + P([0.0, 4.0 * k]) * Nk) \
            - P([0.0, 2.0]) * Nk
        nums.append(nxt)
    return nums


_NUMERATORS = _bump_poly_numerators(12)


def unit_bump_deriv(k, t):
    """k-th derivative of exp(-1/(1-t^2)) on (-1,1), 0 outside; vectorized.

    Near the support edge the rational prefactor blows up while the
    exponential dies faster; switch to log-space evaluation there.
    """
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    s = 1.0 - t * t
    inside = s > 0.0
    if not np.any(inside):
        return out
    ti, si = t[inside], s[inside]
    Nk = _NUMERATORS[k](ti)
    vals = np.zeros_like(ti)
    safe = si >= 0.01
    vals[safe] = Nk[safe] * np.exp(-1.0 / si[safe]) / si[safe] ** (2 * k)
    edge = ~safe
    if np.any(edge):
        mag = -1.0 / si[edge] - 2 * k * np.log(si[edge]) \
            + np.log(np.maximum(np.abs(Nk[edge]), 1e-300))
        vals[edge] = np.sign(Nk[edge]) * np.where(mag < -700, 0.0, np.exp(mag))
    out[inside] = vals
    return out


def bump_deriv(k, t, half=BUMP_HALF):
    """k-th derivative of the bump rescaled to support [-half, half]."""
    return unit_bump_deriv(k, np.asarray(t, dtype=float) / half) / half**k


_GL_CACHE = {}


def _gl(n):
    if n not in _GL_CACHE:
        _GL_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _GL_CACHE[n]


def _autocorr_deriv(k, x, n_gl=160):
    """(g * g^(k))(x) over the overlap interval, vectorized in x."""
    x = np.asarray(x, dtype=float)
    lo = np.maximum(-BUMP_HALF, x - BUMP_HALF)
    hi = np.minimum(BUMP_HALF, x + BUMP_HALF)
    width = hi - lo
    nodes, wts = _gl(n_gl)
    t = lo[..., None] + 0.5 * width[..., None] * (nodes + 1.0)
    vals = bump_deriv(0, t) * bump_deriv(k, x[..., None] - t)
    out = 0.5 * width * np.sum(vals * wts, axis=-1)
    return np.where(width > 0.0, out, 0.0)


def _bump_transform(u, n_gl=256):
    """Real transform of the base bump: integral over its support of
    g(t) cos(2 pi u t) dt (g is even)."""
    u = np.asarray(u, dtype=float)
    nodes, wts = _gl(n_gl)
    t = BUMP_HALF * nodes
    g = bump_deriv(0, t)
    return BUMP_HALF * np.sum(g * np.cos(2.0 * np.pi * u[..., None] * t) * wts,
                              axis=-1)


@dataclass(eq=False)
class Window:
    """The analysis window: samples, transform, and evaluation helpers."""

    support_half_width: float
    grid: np.ndarray
    samples: np.ndarray
    hat_grid: np.ndarray
    hat_samples: np.ndarray
    fourier_floor: float
    scale: float
    l2_norm: float
    profile: str = "autocorr-bump"
    _spline: object = field(default=None, repr=False)

    def phi(self, x):
        """Time-domain window, exactly zero outside the support."""
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        x = np.atleast_1d(x)
        out = np.zeros_like(x)
        m = np.abs(x) < self.support_half_width
        if np.any(m):
            out[m] = self._spline(x[m])
        return out[0] if scalar else out

    def phi_deriv(self, k, x):
        """Exact k-th derivative via quadrature of g * g^(k)."""
        if k == 0:
            return self.phi(x)
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        x = np.atleast_1d(x)
        out = np.zeros_like(x)
        m = np.abs(x) < self.support_half_width
        if np.any(m):
            out[m] = self.scale * _autocorr_deriv(k, x[m])
        return out[0] if scalar else out

    def phi_hat(self, u):
        """Transform of the window: scale * (bump transform)^2, nonnegative."""
        return self.scale * _bump_transform(u) ** 2

    @property
    def analysis_norm_constant(self):
        """The energy bound constant 1/fourier_floor."""
        return 1.0 / self.fourier_floor


def make_window(profile="autocorr-bump", grid=2**14):
    """Build a window passing both support and transform-positivity checks.

    Raises WindowConstructionError when the computed transform is not
    strictly positive on [-1/2, 1/2] (exercised by the 'negated' profile,
    which flips the sign of the default construction).
    """
    if profile not in ("autocorr-bump", "negated"):
        raise WindowConstructionError(f"unknown window profile {profile!r}")
    sign = -1.0 if profile == "negated" else 1.0

    ugrid = np.linspace(-0.5, 0.5, int(grid) + 1)
    hat_raw = sign * _bump_transform(ugrid) ** 2
    floor_raw = float(hat_raw.min())
    if floor_raw <= 0.0:
        raise WindowConstructionError(
            f"window transform dips to {floor_raw:.3g} on [-1/2, 1/2]")
    scale = 1.0 / floor_raw
    hat_samples = scale * hat_raw

    xgrid = np.linspace(-SUPPORT_HALF, SUPPORT_HALF, int(grid) + 1)
    samples = scale * _autocorr_deriv(0, xgrid)
    spline = CubicSpline(xgrid, samples, bc_type="natural")
    nodes, wts = _gl(400)
    l2 = math.sqrt(SUPPORT_HALF * float(np.sum(spline(SUPPORT_HALF * nodes) ** 2 * wts)))

    w = Window(
        support_half_width=SUPPORT_HALF,
        grid=xgrid,
        samples=samples,
        hat_grid=ugrid,
        hat_samples=hat_samples,
        fourier_floor=float(hat_samples.min()),
        scale=scale,
        l2_norm=l2,
        profile=profile,
    )
    w._spline = spline
    return w
