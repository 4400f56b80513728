import math

import numpy as np
import pytest

from oscsurf.errors import (
    BandLimitError,
    BoundaryFrequencyError,
    ConstraintError,
    WindowConstructionError,
)
from oscsurf.tiling import build_tiling
from oscsurf.wavepackets import (
    WavePacket,
    analysis,
    derivative_bound_probe,
    from_spectrum,
    frequencies,
    packet_for,
    random_band_limited,
    round_trip_error,
    signal_grid,
    spectrum,
    synthesis,
)
from oscsurf.window import make_window


@pytest.fixture(scope="module")
def w():
    return make_window()


@pytest.fixture(scope="module")
def t10():
    return build_tiling(10.0, 40.0)


# -- window -------------------------------------------------------------------

def test_support_half_width_is_quarter(w):
    assert w.support_half_width == 0.25
    assert w.phi(np.array([0.26, -0.3])).tolist() == [0.0, 0.0]
    assert w.phi(np.array([0.2]))[0] != 0.0


def test_window_even_and_smooth(w):
    x = np.linspace(-0.24, 0.24, 101)
    assert np.allclose(w.phi(x), w.phi(-x), atol=1e-12)
    # first derivative is odd
    assert np.allclose(w.phi_deriv(1, x), -w.phi_deriv(1, -x), atol=1e-10)


def test_transform_nonnegative_with_unit_floor(w):
    assert np.all(w.hat_samples >= 0.0)
    assert w.fourier_floor == pytest.approx(1.0)
    assert w.phi_hat(np.array([0.5]))[0] >= w.fourier_floor - 1e-12
    assert w.analysis_norm_constant == pytest.approx(1.0)


def test_negated_profile_fails_construction():
    with pytest.raises(WindowConstructionError):
        make_window(profile="negated")


def test_unknown_profile_rejected():
    with pytest.raises(WindowConstructionError):
        make_window(profile="boxcar")


def test_phi_deriv_matches_difference_quotient(w):
    x = np.linspace(-0.2, 0.2, 41)
    h = 1e-6
    fd = (w.phi(x + h) - w.phi(x - h)) / (2 * h)
    assert np.max(np.abs(fd - w.phi_deriv(1, x))) < 1e-4


# -- packets ------------------------------------------------------------------

def test_packet_norm_matches_window_for_all_cells(w, t10):
    for cell in t10.cells:
        pk = WavePacket(window=w, cell=cell)
        assert pk.l2_norm() == pytest.approx(w.l2_norm, abs=1e-8)


def test_packet_support_containment(w, t10):
    pk = packet_for(w, t10, 12.0)
    r = max(10.0, 12.0) ** -0.5
    assert pk.support_half_width <= r / 2.0
    outside = np.array([r / 2 + 1e-9, -r])
    assert np.all(pk(outside) == 0.0)


def test_packet_modulation_and_scale(w, t10):
    pk = packet_for(w, t10, 12.0)
    assert pk.scale == 7
    assert pk.modulation == pytest.approx(12.5)


def test_derivative_probe_k0_bound(w, t10):
    sup_phi = float(np.abs(w.samples).max())
    ok, ratio = derivative_bound_probe(w, t10, 12.0, 0)
    assert ok
    assert ratio <= math.sqrt(3.0) * sup_phi + 1e-9


def test_derivative_probe_boundary_rejected(w, t10):
    with pytest.raises(BoundaryFrequencyError):
        derivative_bound_probe(w, t10, 9.0, 1)


def test_derivative_probe_support_scaling(w):
    lam = 10.0
    t = build_tiling(lam, 60.0)
    ok, _ = derivative_bound_probe(w, t, 12.0, 0)
    assert ok  # supp inside [-r/2, r/2] with r = 12^(-1/2)


# -- analysis / synthesis ------------------------------------------------------

def test_analysis_zero_signal(w, t10):
    grid = signal_grid(40.0)
    coeffs = analysis(w, t10, grid)
    assert coeffs.spectral == {}
    assert coeffs.norm_squared() == 0.0
    rec = synthesis(w, t10, coeffs)
    assert np.all(rec.values == 0.0)


def test_analysis_single_cell_support(w, t10):
    grid = signal_grid(40.0)
    xi = frequencies(grid)
    fhat = np.zeros(grid.n, dtype=complex)
    target = [q for q in t10.cells if (q.lo, q.hi) == (9, 16)][0]
    inside = (xi >= target.lo + 0.5) & (xi <= target.hi - 0.5)
    fhat[inside] = 1.0 + 0.5j
    f = from_spectrum(grid, fhat)
    coeffs = analysis(w, t10, f)
    assert set(coeffs.spectral) == {target}
    # V f vanishes for xi in other cells and on boundaries
    assert np.all(coeffs.evaluate(5.0).values == 0.0)
    assert np.all(coeffs.evaluate(9.0).values == 0.0)
    assert np.any(coeffs.evaluate(12.0).values != 0.0)


def test_cell_constancy(w, t10):
    grid = signal_grid(40.0)
    f = random_band_limited(np.random.default_rng(5), grid, 30.0)
    coeffs = analysis(w, t10, f)
    a = coeffs.evaluate(10.0).values
    b = coeffs.evaluate(15.0).values  # same cell [9, 16]
    assert np.array_equal(a, b)


def test_analysis_energy_bound(w, t10):
    rng = np.random.default_rng(6)
    grid = signal_grid(40.0)
    bound = 1.0 / w.fourier_floor + 1e-6
    for _ in range(10):
        f = random_band_limited(rng, grid, 30.0)
        coeffs = analysis(w, t10, f)
        assert coeffs.norm_squared() <= bound * f.norm() ** 2


def test_band_limit_violation(w, t10):
    grid = signal_grid(40.0)
    xi = frequencies(grid)
    fhat = np.zeros(grid.n, dtype=complex)
    fhat[np.abs(xi) > 60.0] = 1.0  # energy beyond the cover
    f = from_spectrum(grid, fhat)
    with pytest.raises(BandLimitError):
        analysis(w, t10, f)


def test_round_trip_random_signals(w):
    rng = np.random.default_rng(7)
    for lam in (1.0, 10.0, 100.0):
        xi_max = max(2 * lam, 30.0)
        t = build_tiling(lam, xi_max)
        grid = signal_grid(xi_max)
        for _ in range(5):
            f = random_band_limited(rng, grid, 0.8 * xi_max)
            assert round_trip_error(w, t, f) <= 1e-6


def test_round_trip_single_packet(w):
    lam = 10.0
    t = build_tiling(lam, 200.0)
    grid = signal_grid(200.0)
    pk = packet_for(w, t, 4.5)
    f = grid.copy_with(pk(grid.grid))
    assert round_trip_error(w, t, f) <= 1e-6


def test_synthesis_cell_mismatch(w, t10):
    grid = signal_grid(40.0)
    f = random_band_limited(np.random.default_rng(8), grid, 8.0)
    coeffs = analysis(w, t10, f)
    other = build_tiling(17.0, 40.0)  # n0 = 4: different central cells
    with pytest.raises(ConstraintError):
        synthesis(w, other, coeffs)


def test_spectrum_inverse_consistency():
    grid = signal_grid(20.0)
    rng = np.random.default_rng(9)
    f = grid.copy_with(rng.standard_normal(grid.n)
                       + 1j * rng.standard_normal(grid.n))
    _, fhat = spectrum(f)
    back = from_spectrum(grid, fhat)
    assert np.allclose(back.values, f.values, atol=1e-12)
