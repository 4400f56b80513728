"""Graph parametrization of the zero set M = {rho = 0} and quadrature on it.

Because every first partial of rho is bounded away from zero, M meets each
line parallel to a coordinate axis at most once, so M is globally a graph
x_{j0} = Psi(slice) over any coordinate slice.  Surface integrals are tensor
Gauss-Legendre sums over the slice with the graph density
(1 + |grad Psi|^2)^(1/2); slice points whose axis segment does not cross M
contribute zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConstraintError, NoRootError

DEFAULT_TOL_SCALE = 1e-12
_NEWTON_MAX = 80


def _axis_alpha(dim, j):
    alpha = [0] * dim
    alpha[j] = 1
    return tuple(alpha)


def _assemble(slice_pts, j0, vals, dim):
    """Insert the solved coordinate into slice points."""
    out = np.empty(slice_pts.shape[:-1] + (dim,))
    out[..., :j0] = slice_pts[..., :j0]
    out[..., j0] = vals
    out[..., j0 + 1:] = slice_pts[..., j0:]
    return out


def graph_solve_grid(inst, j0, slice_pts, tol=None):
    """Vectorized root solve of rho = 0 along axis j0 over slice points.

    Returns (values, found): the solved coordinate per slice point and a mask
    of points whose axis segment inside the box actually crosses M.  Newton
    iteration with clipping; monotonicity of rho along the axis guarantees a
    bracket whenever the endpoint signs differ.
    """
    dim = inst.dim
    if not 0 <= j0 < dim:
        raise ConstraintError(f"axis index {j0} out of range for dimension {dim}")
    if tol is None:
        tol = DEFAULT_TOL_SCALE * (1.0 + abs(inst.b1))
    slice_pts = np.asarray(slice_pts, dtype=float)
    b = inst.b1
    alpha1 = _axis_alpha(dim, j0)

    lo = np.full(slice_pts.shape[:-1], -b)
    hi = np.full(slice_pts.shape[:-1], b)
    f_lo = inst.rho.eval(_assemble(slice_pts, j0, lo, dim))
    f_hi = inst.rho.eval(_assemble(slice_pts, j0, hi, dim))
    found = np.sign(f_lo) != np.sign(f_hi)
    found |= (f_lo == 0.0) | (f_hi == 0.0)

    x = 0.5 * (lo + hi)
    for _ in range(_NEWTON_MAX):
        pts = _assemble(slice_pts, j0, x, dim)
        f = inst.rho.eval(pts)
        active = found & (np.abs(f) > tol)
        if not np.any(active):
            break
        df = inst.rho.deriv(alpha1, pts)
        step = np.where(active, f / np.where(df == 0.0, 1.0, df), 0.0)
        x = np.clip(x - step, -b, b)
    return x, found


def graph_solve(inst, j0, slice_point, tol=None):
    """Solve for the j0 coordinate of the unique point of M over one slice
    point.  Raises NoRootError when rho has constant sign along the segment."""
    slice_point = np.asarray(slice_point, dtype=float)
    if slice_point.shape != (inst.dim - 1,):
        raise ConstraintError(
            f"slice point must have {inst.dim - 1} coordinates")
    vals, found = graph_solve_grid(inst, j0, slice_point[None, :], tol=tol)
    if not bool(found[0]):
        raise NoRootError(
            f"rho has constant sign along axis {j0} over this slice point")
    return float(vals[0])


def grad_psi(inst, j0, points_on_m):
    """Gradient of the graph function at points of M: -d_j rho / d_{j0} rho."""
    pts = np.asarray(points_on_m, dtype=float)
    dim = inst.dim
    denom = inst.rho.deriv(_axis_alpha(dim, j0), pts)
    comps = []
    for j in range(dim):
        if j == j0:
            continue
        comps.append(-inst.rho.deriv(_axis_alpha(dim, j), pts) / denom)
    return np.stack(comps, axis=-1)


@dataclass(eq=False)
class GraphChart:
    """A solved graph chart: axis, slice->coordinate map and its gradient."""

    inst: object
    j0: int

    def psi(self, slice_pts):
        vals, found = graph_solve_grid(self.inst, self.j0, slice_pts)
        if not np.all(found):
            raise NoRootError("chart does not cover part of the slice set")
        return vals

    def grad(self, slice_pts):
        vals = self.psi(np.asarray(slice_pts, dtype=float))
        pts = _assemble(np.asarray(slice_pts, dtype=float), self.j0, vals,
                        self.inst.dim)
        return grad_psi(self.inst, self.j0, pts)


def gauss_legendre(n, lo, hi):
    x, w = np.polynomial.legendre.leggauss(int(n))
    mid, half = 0.5 * (hi + lo), 0.5 * (hi - lo)
    return mid + half * x, half * w


@dataclass(eq=False)
class SurfaceChart:
    """Quadrature nodes on M over a slice box, with density-weighted weights.

    points: (n, 2d) nodes on M (only where the graph exists); weights include
    the slice quadrature weight times (1 + |grad Psi|^2)^(1/2).
    """

    j0: int
    points: np.ndarray
    weights: np.ndarray
    boxes: tuple
    nodes_per_axis: tuple

    def integrate(self, values):
        return complex(np.sum(self.weights * values))


def build_chart(inst, j0, boxes, nodes_per_axis, rule="gauss"):
    """Tensor quadrature chart on M over the slice box.

    boxes: per-slice-axis (lo, hi) pairs, 2d-1 of them in slice order (the
    j0 axis removed).  nodes_per_axis: int or per-axis counts.
    """
    dim = inst.dim
    boxes = [(float(lo), float(hi)) for lo, hi in boxes]
    if len(boxes) != dim - 1:
        raise ConstraintError("need one (lo, hi) box per slice axis")
    if np.isscalar(nodes_per_axis):
        nodes_per_axis = (int(nodes_per_axis),) * (dim - 1)
    nodes_per_axis = tuple(int(n) for n in nodes_per_axis)

    axes, wts = [], []
    for (lo, hi), n in zip(boxes, nodes_per_axis):
        if rule == "gauss":
            x, w = gauss_legendre(n, lo, hi)
        elif rule == "uniform":
            x = np.linspace(lo, hi, n)
            if n > 1:
                w = np.full(n, (hi - lo) / (n - 1))
                w[0] *= 0.5
                w[-1] *= 0.5
            else:
                w = np.full(1, hi - lo)
        else:
            raise ConstraintError(f"unknown quadrature rule {rule!r}")
        axes.append(x)
        wts.append(w)
    mesh = np.meshgrid(*axes, indexing="ij")
    slice_pts = np.stack([m.ravel() for m in mesh], axis=-1)
    wmesh = np.meshgrid(*wts, indexing="ij")
    weights = np.ones(slice_pts.shape[0])
    for wm in wmesh:
        weights = weights * wm.ravel()

    vals, found = graph_solve_grid(inst, j0, slice_pts)
    slice_pts = slice_pts[found]
    weights = weights[found]
    pts = _assemble(slice_pts, j0, vals[found], dim)
    g = grad_psi(inst, j0, pts)
    density = np.sqrt(1.0 + np.sum(g * g, axis=-1))
    return SurfaceChart(j0=j0, points=pts, weights=weights * density,
                        boxes=tuple(boxes), nodes_per_axis=nodes_per_axis)


_CHART_CACHE_MAX = 24
_CHART_CACHE_NODE_CAP = 4_000_000


def cached_chart(inst, j0, boxes, nodes_per_axis, rule="gauss"):
    """Bounded chart cache keyed on the quadrature geometry.

    Charts are immutable; the cache evicts least-recently-used entries and
    skips storing very large charts outright.
    """
    key = ("chart", j0, tuple((round(lo, 14), round(hi, 14)) for lo, hi in boxes),
           tuple(np.atleast_1d(nodes_per_axis).tolist()), rule)
    cache = inst._caches.setdefault("charts", {})
    if key in cache:
        chart = cache.pop(key)
        cache[key] = chart  # refresh LRU order
        return chart
    chart = build_chart(inst, j0, boxes, nodes_per_axis, rule=rule)
    if len(chart.points) <= _CHART_CACHE_NODE_CAP:
        cache[key] = chart
        while len(cache) > _CHART_CACHE_MAX:
            cache.pop(next(iter(cache)))
    return chart


def surface_integral(inst, integrand, j0, resolution, boxes=None):
    """Tensor-grid approximation of the integral of a function over M.

    integrand: callable on (n, 2d) arrays returning (n,) values (complex ok).
    resolution: nodes per slice axis.  boxes defaults to the amplitude
    support box [-b0, b0]^(2d-1); callers integrating something not supported
    there should restrict explicitly.
    """
    if boxes is None:
        boxes = [(-inst.b0, inst.b0)] * (inst.dim - 1)
    chart = cached_chart(inst, j0, boxes, resolution)
    return chart.integrate(integrand(chart.points))


def size_bound_check(inst, f_sup, interval_lengths, j0):
    """Product-of-interval-lengths upper bound for surface integrals.

    Returns f_sup * prod_{j != j0} |I_j| * (1 + (2d-1)(C_rho C'_rho)^2)^(1/2)
    for comparison against measured values of surface integrals.
    """
    lengths = np.asarray(interval_lengths, dtype=float)
    if lengths.shape != (inst.dim,):
        raise ConstraintError("need one interval length per coordinate")
    if not 0 <= j0 < inst.dim:
        raise ConstraintError("axis index out of range")
    if f_sup == 0.0:
        return 0.0
    prod = 1.0
    for j, ell in enumerate(lengths):
        if j != j0:
            prod *= ell
    lip = inst.c_rho * inst.c_rho_inv
    return float(f_sup) * prod * np.sqrt(1.0 + (inst.dim - 1) * lip**2)
