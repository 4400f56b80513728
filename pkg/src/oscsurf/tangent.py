"""Tangential vector fields on M, their surface-measure duals, and the
iterated integration-by-parts machinery.

Two families of fields, both annihilating rho (hence tangent to every level
set):

  projection fields   X_i = d_i - (d_i rho / |grad rho|^2) sum_j (d_j rho) d_j
  rotation fields     X_{j1 j2} = (d_{j2} rho d_{j1} - d_{j1} rho d_{j2}) / norm

The dual operator is taken with respect to the Euclidean surface measure on
M.  For a tangent field X = sum_j c_j d_j acting on compactly supported
functions, integration by parts on M gives

    int_M (X f) g dsigma = int_M f X^+ g dsigma,
    X^+ g = -X g - g * (div c + X(S) / (2 S)),       S = |grad rho|^2.

The ambient-divergence part -X g - g div c alone is the dual for the measure
dx / |grad rho| concentrated on M; the X(S)/(2S) term converts to the
Euclidean surface measure used by the quadrature here (the two differ by the
factor |grad rho|).  Both the pairing identity and the iterated identity
below are exercised to quadrature accuracy in the tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConstraintError, HypothesisError
from .exprs import Const, FieldTerm, add, as_expr, div, evaluate_chunked, mul, scale, sqrt_expr
from .geometry import cached_chart

_GRAD_FLOOR = 1e-8


def _axis_gradient_infs(inst, density=7):
    """Per-axis grid infima of |d_j rho|, cached on the instance."""
    key = ("axis_grad_infs", density)
    if key not in inst._caches:
        from .instance import _grid_points
        pts = _grid_points(inst.dim, inst.b1, density)
        inst._caches[key] = np.abs(inst.grad_rho(pts)).min(axis=0)
    return inst._caches[key]


IBP_REFERENCE_NODES = 16


def _psi_boxes(psi, inst, j0):
    """Quadrature box per slice axis: the support of psi clipped to the
    amplitude box, when psi exposes one; otherwise the amplitude box."""
    from .fields import BumpField
    if isinstance(psi, BumpField):
        half = psi.support_half_width
        boxes = []
        for j in range(inst.dim):
            if j == j0:
                continue
            lo = max(psi.centers[j] - half, -inst.b0)
            hi = min(psi.centers[j] + half, inst.b0)
            boxes.append((lo, hi))
        return boxes
    return [(-inst.b0, inst.b0)] * (inst.dim - 1)


def _unit_alpha(dim, j):
    a = [0] * dim
    a[j] = 1
    return tuple(a)


def _rho_partials(inst):
    key = ("rho_partials",)
    if key not in inst._caches:
        dim = inst.dim
        g = [FieldTerm(inst.rho, _unit_alpha(dim, j)) for j in range(dim)]
        S = add(*[mul(gj, gj) for gj in g])
        inst._caches[key] = (g, S)
    return inst._caches[key]


@dataclass(eq=False)
class TangentField:
    """A tangential field: projection kind (index) or rotation kind (pair)."""

    inst: object
    index: int = None
    pair: tuple = None

    def __post_init__(self):
        dim = self.inst.dim
        if (self.index is None) == (self.pair is None):
            raise ConstraintError("specify exactly one of index or pair")
        if self.index is not None and not 0 <= self.index < dim:
            raise ConstraintError("field index out of range")
        if self.pair is not None:
            j1, j2 = self.pair
            if j1 == j2 or not (0 <= j1 < dim and 0 <= j2 < dim):
                raise ConstraintError("rotation pair must be two distinct axes")
        # both kinds divide by gradient data that the gradient-floor
        # hypothesis keeps positive; on degenerate test instances reject
        # fields whose denominators the per-axis grid infima cannot certify
        infs = _axis_gradient_infs(self.inst)
        if self.index is not None:
            ok = float(infs.max()) >= _GRAD_FLOOR  # |grad rho|^2 >= max_j inf_j^2
        else:
            ok = float(max(infs[self.pair[0]], infs[self.pair[1]])) >= _GRAD_FLOOR
        if not ok:
            raise HypothesisError(
                "the field's normalizing gradient data vanishes somewhere on "
                "the sample grid (instance corruption)")

    def coefficients(self):
        """The coefficient expressions c_j with X = sum_j c_j d_j."""
        key = ("tangent_coeffs", self.index, self.pair)
        cache = self.inst._caches
        if key not in cache:
            dim = self.inst.dim
            g, S = _rho_partials(self.inst)
            if self.index is not None:
                i = self.index
                coeffs = []
                for j in range(dim):
                    c = div(mul(g[i], g[j]), S)
                    if j == i:
                        coeffs.append(add(Const(1.0, dim), scale(c, -1.0)))
                    else:
                        coeffs.append(scale(c, -1.0))
            else:
                j1, j2 = self.pair
                norm = sqrt_expr(add(mul(g[j1], g[j1]), mul(g[j2], g[j2])))
                coeffs = [Const(0.0, dim) for _ in range(dim)]
                coeffs[j1] = div(g[j2], norm)
                coeffs[j2] = scale(div(g[j1], norm), -1.0)
            cache[key] = coeffs
        return cache[key]

    def _dual_multiplier(self):
        """div c + X(S)/(2S); the zeroth-order part of the dual operator."""
        key = ("dual_mult", self.index, self.pair)
        cache = self.inst._caches
        if key not in cache:
            g, S = _rho_partials(self.inst)
            coeffs = self.coefficients()
            div_c = add(*[c.d(j) for j, c in enumerate(coeffs)])
            xs = add(*[mul(c, S.d(j)) for j, c in enumerate(coeffs)])
            cache[key] = add(div_c, div(xs, scale(S, 2.0)))
        return cache[key]

    def apply(self, f):
        """X f as an expression; f may be a SmoothField or an expression."""
        f = as_expr(f)
        coeffs = self.coefficients()
        return add(*[mul(c, f.d(j)) for j, c in enumerate(coeffs)])

    def apply_dual(self, f):
        """X^+ f = -X f - f (div c + X(S)/(2S)), dual w.r.t. dsigma."""
        f = as_expr(f)
        return add(scale(self.apply(f), -1.0),
                   scale(mul(f, self._dual_multiplier()), -1.0))

    def tangency_residual(self, pts):
        """X rho, identically zero in exact arithmetic."""
        return self.apply(self.inst.rho).value(np.asarray(pts, dtype=float))


def apply_X(field, f, x):
    """Value of X f at x (accepts one point or a batch)."""
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    vals = field.apply(f).value(pts)
    if np.isscalar(vals):
        vals = np.full(len(pts), vals)
    return vals[0] if np.asarray(x).ndim == 1 else vals


def apply_X_star(field, f, x):
    """Value of the dual operator applied to f at x."""
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    vals = field.apply_dual(f).value(pts)
    if np.isscalar(vals):
        vals = np.full(len(pts), vals)
    return vals[0] if np.asarray(x).ndim == 1 else vals


def phase_with_modulation(inst, lam, xi):
    """The phase lambda * Phi + 2 pi xi . x as an expression."""
    dim = inst.dim
    xi = np.asarray(xi, dtype=float)
    terms = [scale(as_expr(inst.phi), lam)]
    for j in range(dim):
        if xi[j] != 0.0:
            terms.append(scale(FieldTerm(_coordinate_field(inst, j), (0,) * dim),
                               2.0 * np.pi * xi[j]))
    return add(*terms)


def _coordinate_field(inst, j):
    key = ("coord_field", j)
    if key not in inst._caches:
        from .fields import PolynomialField
        dim = inst.dim
        expo = [0] * dim
        expo[j] = 1
        inst._caches[key] = PolynomialField(dim, {tuple(expo): 1.0},
                                            half_widths=inst.b1)
    return inst._caches[key]


def projection_of_phase_gradient(inst, y, xi, lam):
    """The vector (X_1 w, ..., X_2d w) at y for w = lam Phi + 2 pi xi . x,
    together with the algebraic orthogonal projection of
    lam grad Phi(y) + 2 pi xi onto the complement of grad rho(y)."""
    y = np.asarray(y, dtype=float)
    pts = np.atleast_2d(y)
    xi = np.asarray(xi, dtype=float)
    grad_rho = inst.grad_rho(pts)
    vec = lam * inst.grad_phi(pts) + 2.0 * np.pi * xi
    coef = np.sum(vec * grad_rho, axis=-1, keepdims=True) \
        / np.sum(grad_rho * grad_rho, axis=-1, keepdims=True)
    proj = vec - coef * grad_rho

    phase = phase_with_modulation(inst, lam, xi)
    applied = np.stack(
        [TangentField(inst, index=i).apply(phase).value(pts)
         for i in range(inst.dim)], axis=-1)
    if y.ndim == 1:
        return applied[0], proj[0]
    return applied, proj


# ---------------------------------------------------------------------------
# Iterated integration by parts
# ---------------------------------------------------------------------------

@dataclass
class IBPReport:
    N: int
    lhs: complex
    rhs: complex
    rel_error: float


def l_operator(field, phase, k_tilde, psi):
    """L psi = X^+ psi - (i X phase - K) psi."""
    psi = as_expr(psi)
    phase = as_expr(phase)
    bracket = add(scale(field.apply(phase), 1j),
                  Const(-complex(k_tilde), psi.dim))
    return add(field.apply_dual(psi), scale(mul(bracket, psi), -1.0))


def _integrate_surface(inst, expr_or_callable, phase, chart):
    pts = chart.points
    phase_vals = evaluate_chunked(as_expr(phase), pts) if phase is not None else 0.0
    osc = np.exp(1j * phase_vals) if phase is not None else 1.0
    if callable(expr_or_callable) and not hasattr(expr_or_callable, "value"):
        vals = expr_or_callable(pts)
    else:
        vals = evaluate_chunked(as_expr(expr_or_callable), pts)
    return complex(np.sum(chart.weights * osc * vals))


def ibp_identity_check(inst, phase, psi, field, k_tilde, N,
                       nodes=IBP_REFERENCE_NODES, boxes=None, j0=None):
    """Both sides of the iterated identity

        int e^{i phase} psi dsigma = K^{-N} int e^{i phase} L^N psi dsigma

    by surface quadrature; L is applied by exact nested expansion.  With
    k_tilde None the shift is chosen as i X(phase) at the chart point nearest
    the box center, which keeps L well scaled on the support.
    """
    if k_tilde == 0:
        raise ConstraintError("the shift constant must be nonzero")
    if not 1 <= N <= 3:
        raise ConstraintError("iterated identity supported for N in 1..3")
    if j0 is None:
        j0 = inst.dim - 1
    if boxes is None:
        boxes = _psi_boxes(psi, inst, j0)
    chart = cached_chart(inst, j0, boxes, nodes)
    if k_tilde is None:
        center = np.array([0.5 * (lo + hi) for lo, hi in boxes])
        slice_pts = np.delete(chart.points, j0, axis=1)
        anchor = chart.points[int(np.argmin(np.sum((slice_pts - center) ** 2,
                                                   axis=1)))]
        k_tilde = 1j * complex(field.apply(as_expr(phase)).value(anchor[None, :])[0])
        if k_tilde == 0:
            k_tilde = 1j

    lhs = _integrate_surface(inst, psi, phase, chart)
    ln_psi = as_expr(psi)
    for _ in range(N):
        ln_psi = l_operator(field, phase, k_tilde, ln_psi)
    rhs = complex(k_tilde) ** (-N) * _integrate_surface(inst, ln_psi, phase, chart)
    floor = 1e-30
    rel = abs(lhs - rhs) / max(abs(lhs), floor)
    return IBPReport(N=N, lhs=lhs, rhs=rhs, rel_error=rel)


def decay_bound_probe(inst, phase, psi, field, N, K,
                      nodes=IBP_REFERENCE_NODES, boxes=None, j0=None):
    """lhs = |int e^{i phase} psi dsigma| and the stationary-phase majorant

        rhs = |K|^{-N} sum_{j=0}^{N} int |(X^+)^j psi| *
              [ |X phase - K|^{N-j} + sum_{l=2}^{N-j} |X^l phase|^{(N-j)/l} ] dsigma.

    Returns (lhs, rhs); the empirical constant is their ratio.
    """
    if K == 0:
        raise ConstraintError("the reference constant K must be nonzero")
    if N < 1:
        raise ConstraintError("the bound is stated for positive N")
    if j0 is None:
        j0 = inst.dim - 1
    if boxes is None:
        boxes = _psi_boxes(psi, inst, j0)
    chart = cached_chart(inst, j0, boxes, nodes)
    pts = chart.points

    lhs = abs(_integrate_surface(inst, psi, phase, chart))

    phase = as_expr(phase)
    xphase = field.apply(phase)
    xphase_vals = evaluate_chunked(xphase, pts)
    xpowers = {1: xphase}
    for ell in range(2, N + 1):
        xpowers[ell] = field.apply(xpowers[ell - 1])

    total = 0.0
    dual_j = as_expr(psi)
    for j in range(N + 1):
        dual_vals = np.abs(evaluate_chunked(dual_j, pts))
        bracket = np.abs(xphase_vals - complex(K)) ** (N - j)
        for ell in range(2, N - j + 1):
            bracket = bracket + np.abs(evaluate_chunked(xpowers[ell], pts)) ** ((N - j) / ell)
        total += float(np.sum(chart.weights.real * dual_vals * bracket))
        if j < N:
            dual_j = field.apply_dual(dual_j)
    rhs = abs(K) ** (-N) * total
    return lhs, rhs
