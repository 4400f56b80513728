import math

import numpy as np
import pytest

from oscsurf.errors import ConstraintError, HypothesisError, NoRootError
from oscsurf.fields import BumpField, PolynomialField
from oscsurf.geometry import (
    build_chart,
    grad_psi,
    graph_solve,
    size_bound_check,
    surface_integral,
)
from oscsurf.instance import admissible_constants, make_instance


@pytest.fixture(scope="module")
def paper():
    return make_instance("paper-even-d2", b0=0.3, b1=0.5)


@pytest.fixture(scope="module")
def tilted():
    return make_instance("tilted", b0=0.3, b1=0.5)


def x1_plus_x4_instance():
    rho = PolynomialField(4, {(1, 0, 0, 0): 1.0, (0, 0, 0, 1): 1.0},
                          half_widths=0.5)
    return make_instance("custom", b0=0.3, b1=0.5, rho=rho)


# -- admissible constants ----------------------------------------------------

def test_paper_constants(paper):
    # d_x2 rho = 1 identically, d_x1 rho = 1 + x1' in [0.5, 1.5]
    assert paper.c_rho_inv == pytest.approx(2.0)
    assert paper.c_rho_inv >= 1.0
    assert paper.c_rho == pytest.approx(2.25)  # sup |rho| at the corner
    assert paper.c_phi == pytest.approx(1.0)


def test_degenerate_field_constant_gradient():
    # all second derivatives vanish; with a single-point (center) grid the
    # sup is the first-derivative value 1
    rho = PolynomialField(4, {(1, 0, 0, 0): 1.0, (0, 1, 0, 0): 1.0,
                              (0, 0, 1, 0): 1.0, (0, 0, 0, 1): 1.0},
                          half_widths=0.5)
    inst = make_instance("custom", b0=0.3, b1=0.5, rho=rho, grid_density=1)
    assert inst.c_rho == pytest.approx(1.0)


def test_degenerate_field_any_density_on_small_box():
    # on a box where sup|rho| <= 1, the constant is 1 at every grid density
    rho = PolynomialField(4, {(1, 0, 0, 0): 1.0, (0, 1, 0, 0): 1.0,
                              (0, 0, 1, 0): 1.0, (0, 0, 0, 1): 1.0},
                          half_widths=0.25)
    for density in (1, 3, 9):
        inst = make_instance("custom", b0=0.1, b1=0.25, rho=rho,
                             grid_density=density)
        assert inst.c_rho == pytest.approx(1.0)


def test_constants_monotone_in_density(paper):
    c3 = admissible_constants(paper, 3)
    c9 = admissible_constants(paper, 9)
    assert c9[0] >= c3[0]       # sup estimates grow on nested grids
    assert c9[1] >= c3[1]       # 1/inf grows as the inf shrinks
    assert c9[2] >= c3[2]
    assert c9[3] >= c3[3]


def test_gradient_floor_violation_raises():
    flat = make_instance("flat", b0=0.3, b1=0.5)
    assert not flat.implicit_ok
    with pytest.raises(HypothesisError):
        admissible_constants(flat, 3)
    with pytest.raises(HypothesisError):
        flat.require_implicit()


# -- graph solve -------------------------------------------------------------

def test_graph_solve_linear():
    inst = make_instance("tilted", b0=0.3, b1=0.5)
    val = graph_solve(inst, 3, [0.1, 0.2, -0.05])
    assert val == pytest.approx(-0.25, abs=1e-11)


def test_graph_solve_paper_origin(paper):
    assert graph_solve(paper, 3, [0.0, 0.0, 0.0]) == pytest.approx(0.0, abs=1e-11)


def test_graph_solve_paper_newton_value(paper):
    # x1 x1' + x1 + x2 + x1' + x2' = 0 at (0.1, 0.1, 0.1): x2' = -(0.01 + 0.3)
    val = graph_solve(paper, 3, [0.1, 0.1, 0.1])
    assert val == pytest.approx(-0.31, abs=1e-11)


def test_graph_solve_no_root(paper):
    with pytest.raises(NoRootError):
        graph_solve(paper, 3, [0.45, 0.45, 0.45])


def test_graph_solve_residual_below_tolerance(paper):
    slice_pt = np.array([0.21, -0.13, 0.04])
    val = graph_solve(paper, 3, slice_pt, tol=1e-13)
    point = np.array([*slice_pt, val])
    assert abs(paper.rho.eval(point)) <= 1e-12


def test_graph_solve_bad_axis(paper):
    with pytest.raises(ConstraintError):
        graph_solve(paper, 7, [0.0, 0.0, 0.0])


# -- surface integrals -------------------------------------------------------

def test_flat_hyperplane_volume():
    flat = make_instance("flat", b0=0.3, b1=0.5)
    val = surface_integral(flat, lambda p: np.ones(len(p)), 3, 6,
                           boxes=[(-0.1, 0.1)] * 3)
    assert val.real == pytest.approx(0.008, rel=1e-12)


def test_tilted_hyperplane_density():
    inst = x1_plus_x4_instance()
    val = surface_integral(inst, lambda p: np.ones(len(p)), 3, 6,
                           boxes=[(-0.1, 0.1)] * 3)
    assert val.real == pytest.approx(0.008 * math.sqrt(2.0), rel=1e-12)


def test_chart_independence(paper):
    bump = BumpField(4, support_half_width=0.2, order=6, half_widths=0.5)
    vals = [surface_integral(paper, bump.eval, j0, 40,
                             boxes=[(-0.2, 0.2)] * 3) for j0 in (2, 3)]
    assert abs(vals[0] - vals[1]) / abs(vals[1]) < 1e-6


def test_graph_lipschitz_bound(paper):
    chart = build_chart(paper, 3, [(-0.3, 0.3)] * 3, 12)
    grads = grad_psi(paper, 3, chart.points)
    assert np.abs(grads).max() <= paper.c_rho * paper.c_rho_inv + 1e-9


# -- size bound --------------------------------------------------------------

def test_size_bound_zero_function(paper):
    assert size_bound_check(paper, 0.0, [0.2] * 4, 3) == 0.0


def test_size_bound_dominates_flat_volume():
    flat = make_instance("flat", b0=0.3, b1=0.5)
    bound = size_bound_check(flat, 1.0, [0.2] * 4, 3)
    assert bound >= 0.008  # infinite Lipschitz factor dominates trivially


def test_size_bound_dominates_measured(paper):
    rng = np.random.default_rng(9)
    for _ in range(20):
        half = rng.uniform(0.03, 0.2, size=4)
        boxes = [(-h, h) for h in half[[0, 1, 2]]]

        def indicator(p, h3=half[3]):
            return (np.abs(p[:, 3]) <= h3).astype(float)

        measured = abs(surface_integral(paper, indicator, 3, 24, boxes=boxes))
        bound = size_bound_check(paper, 1.0, 2.0 * half, 3)
        assert bound >= measured * (1.0 - 1e-9)


def test_surface_integral_rejects_bad_axis(paper):
    with pytest.raises(ConstraintError):
        surface_integral(paper, lambda p: np.ones(len(p)), 9, 4)
