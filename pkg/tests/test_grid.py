"""Lattice, transform and file-format tests."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from restconv.errors import DimensionBudgetError, ExponentError, GridError
from restconv.grid import (
    AnalyticField,
    GridFunction,
    GridSpec,
    Spectrum,
    dft,
    discretize,
    gaussian,
    idft,
    load_grid,
    lp_norm,
    make_rng,
    random_field,
    random_spectrum,
    refine_function,
    save_grid,
    sobolev_norm,
    tensor_product,
)


def test_default_grid_sizes():
    assert GridSpec.default(2).N == 64
    assert GridSpec.default(3).N == 32
    assert GridSpec.default(6).N == 16
    assert GridSpec.default(1).L == 16.0


@pytest.mark.parametrize("bad", [0, 3, 48, -4])
def test_non_power_of_two_rejected(bad):
    with pytest.raises(GridError):
        GridSpec(2, bad)


def test_dimension_budget():
    with pytest.raises(DimensionBudgetError):
        GridSpec(7, 8)


def test_axes_in_fft_order():
    spec = GridSpec(1, 8, 4.0)
    assert np.allclose(spec.axis(), [0, 0.5, 1, 1.5, -2, -1.5, -1, -0.5])
    assert np.allclose(spec.freq_axis(), np.fft.fftfreq(8, d=0.5))


@pytest.mark.parametrize("n", [1, 2, 3])
def test_gaussian_is_self_dual(n):
    # exp(-pi|x|^2) transforms to exp(-pi|xi|^2)
    # Nyquist 4 and half-period 4 keep both tails below 1e-20
    spec = GridSpec(n, 64, 8.0)
    F = dft(gaussian(spec))
    want = np.exp(-np.pi * spec.freq_sq())
    assert np.max(np.abs(F.coeffs - want)) < 1e-12


def test_scaled_gaussian_transform():
    spec = GridSpec(2, 256, 16.0)
    a = 2.5
    F = dft(gaussian(spec, a))
    want = a ** (-1.0) * np.exp(-np.pi * spec.freq_sq() / a)
    assert np.max(np.abs(F.coeffs - want)) < 1e-12


@given(seed=st.integers(0, 2**32), n=st.integers(1, 3))
@settings(max_examples=30, deadline=None)
def test_plancherel_and_roundtrip(seed, n):
    spec = GridSpec(n, 16, 6.0)
    f = random_field(spec, seed)
    F = dft(f)
    lhs = lp_norm(f, 2)
    rhs = np.sqrt(spec.dxi**n * np.sum(np.abs(F.coeffs) ** 2))
    assert abs(lhs - rhs) <= 1e-12 * max(lhs, 1.0)
    assert np.allclose(idft(F).values, f.values, atol=1e-13)


def test_sobolev_zero_is_l2():
    f = random_field(GridSpec(2, 32, 8.0), 3)
    assert abs(sobolev_norm(f, 0.0) - lp_norm(f, 2)) < 1e-12


def test_lp_norm_exponent_guard():
    f = gaussian(GridSpec(1, 16, 4.0))
    with pytest.raises(ExponentError):
        lp_norm(f, 0.5)
    assert lp_norm(f, np.inf) == pytest.approx(1.0)


def test_lp_norm_large_exponent_tends_to_max():
    f = random_field(GridSpec(1, 64, 8.0), 1)
    assert lp_norm(f, 400) == pytest.approx(lp_norm(f, np.inf), rel=0.05)


def test_refinement_is_exact_for_band_limited():
    spec = GridSpec(2, 16, 4.0)
    S = random_spectrum(spec, 7, band=1.0)
    f = idft(S)
    g = refine_function(f)
    assert g.spec.N == 32
    # coarse samples are every other fine sample
    assert np.allclose(g.values[::2, ::2], f.values, atol=1e-13)
    assert abs(lp_norm(g, 2) - lp_norm(f, 2)) < 1e-12


def test_tensor_product_factorizes_transform():
    s1 = GridSpec(1, 32, 8.0)
    a, b = gaussian(s1, 1.0), gaussian(s1, 2.0)
    t = tensor_product([a, b])
    assert t.spec.n == 2
    F = dft(t).coeffs
    want = np.outer(dft(a).coeffs, dft(b).coeffs)
    assert np.allclose(F, want, atol=1e-14)


def test_discretize_both_sides():
    spec = GridSpec(1, 64, 8.0)
    g = discretize(AnalyticField(lambda p: np.exp(-np.pi * p[:, 0] ** 2)), spec)
    assert isinstance(g, GridFunction)
    S = discretize(AnalyticField(lambda p: np.exp(-np.pi * p[:, 0] ** 2), side="frequency"), spec)
    assert isinstance(S, Spectrum)
    assert np.allclose(g.values, idft(S).values, atol=1e-12)


def test_rejects_nonfinite_and_bad_shape():
    spec = GridSpec(1, 8)
    with pytest.raises(GridError):
        GridFunction(spec, np.full(8, np.nan))
    with pytest.raises(GridError):
        GridFunction(spec, np.zeros(4))


def test_file_roundtrip(tmp_path):
    spec = GridSpec(2, 8, 3.0)
    f = random_field(spec, 11)
    save_grid(tmp_path / "f.grid", f)
    g = load_grid(tmp_path / "f.grid")
    assert g.spec == spec and np.array_equal(g.values, f.values)
    S = dft(f)
    save_grid(tmp_path / "s.grid", S)
    T = load_grid(tmp_path / "s.grid")
    assert isinstance(T, Spectrum) and np.array_equal(T.coeffs, S.coeffs)


def test_bad_magic(tmp_path):
    p = tmp_path / "x.grid"
    p.write_bytes(b"not a grid file at all")
    with pytest.raises(GridError):
        load_grid(p)


def test_rng_is_deterministic():
    a = make_rng(5).standard_normal(4)
    b = make_rng(5).standard_normal(4)
    assert np.array_equal(a, b)
    assert np.array_equal(random_field(GridSpec(2, 8), 2).values, random_field(GridSpec(2, 8), 2).values)
