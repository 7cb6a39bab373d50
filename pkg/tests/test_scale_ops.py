"""Littlewood-Paley bands, decay fits, dilations and maximal averages."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from restconv.conv_ops import multilinear_apply
from restconv.errors import GridError, KernelError
from restconv.grid import GridSpec, random_field
from restconv.kernels import KernelHandle, QuadratureMeasure, bessel_multiplier, heat_kernel, product_sphere_measure
from restconv.scale_ops import (
    DecayFit,
    LPFamily,
    band_profile,
    dilate_spectrum,
    ftc_lemma_check,
    gamma_fit,
    lowpass,
    maximal_apply,
    maximal_exponent_range,
    maximal_l2_ratio,
    predicted_gamma,
    random_trig_poly,
    t_grid,
)
from restconv.subspace import make_subspace


def test_lowpass_plateau_and_support():
    s = np.array([0.0, 0.5, 0.8, 0.9, 1.0, 1.5])
    v = lowpass(s)
    assert np.allclose(v[:3], 1.0) and np.allclose(v[4:], 0.0) and 0 < v[3] < 1
    assert np.allclose(band_profile(np.array([1.0, 1.3, 1.6])), 1.0)
    assert np.allclose(band_profile(np.array([0.5, 2.0, 3.0])), 0.0)


@given(r=st.floats(0.0, 400.0))
def test_partition_of_unity(r):
    fam = LPFamily(8)
    total = sum(fam.window(j, r) for j in range(9))
    assert total == pytest.approx(1.0, abs=1e-14)


def test_window_range_guard():
    with pytest.raises(GridError):
        LPFamily(3).window(4, 1.0)


def test_for_spec_covers_lattice():
    spec = GridSpec(2, 64, 16.0)
    fam = LPFamily.for_spec(spec)
    r = np.sqrt(spec.freq_sq())
    total = sum(fam.window(j, r) for j in range(fam.j_max + 1))
    assert np.allclose(total, 1.0)


def test_decay_fit_exact_power_law():
    j = np.arange(2, 8)
    fit = DecayFit.fit(j, 3.0 * 2.0 ** (-0.7 * j))
    assert fit.gamma == pytest.approx(0.7, abs=1e-12)
    assert fit.intercept == pytest.approx(np.log2(3.0), abs=1e-12)
    assert fit.r2 == pytest.approx(1.0)


def test_gamma_of_bessel_potential_on_a_line():
    # |nu_hat| ~ |xi|^{-alpha}; a 1-d fiber of length 2^j adds 2^{j/2}
    alpha = 2.0
    fit = gamma_fit(bessel_multiplier(alpha, 2), make_subspace("coord:1", n=2), LPFamily(9), range(3, 9), L=4.0)
    assert fit.gamma == pytest.approx(predicted_gamma(alpha, 2, 1), abs=0.05)
    assert fit.r2 > 0.99


def test_gamma_fit_lattice_guard_and_minimum_bands():
    H = make_subspace("coord:1", n=2)
    nu = bessel_multiplier(2.0, 2)
    with pytest.raises(GridError):
        gamma_fit(nu, H, LPFamily(8), range(2, 7), spec=GridSpec(2, 64, 16.0))
    with pytest.raises(GridError):
        gamma_fit(nu, H, LPFamily(8), [2, 3], L=4.0)


def test_gamma_fit_routes_agree_on_resolved_bands():
    H = make_subspace("coord:1", n=2)
    nu = bessel_multiplier(2.0, 2)
    spec = GridSpec(2, 512, 4.0)
    fam = LPFamily(8)
    lat = gamma_fit(nu, H, fam, [1, 2, 3, 4, 5], spec=spec)
    fib = gamma_fit(nu, H, fam, [1, 2, 3, 4, 5], L=4.0, bases=[[b] for b in range(0, 128)])
    assert np.allclose(lat.norms, fib.norms, rtol=1e-10)


def test_heat_dilation_is_heat():
    xi = np.random.default_rng(0).normal(size=(20, 2))
    a = dilate_spectrum(heat_kernel(0.2, 2), 3.0).evaluate(xi)
    b = heat_kernel(0.2 * 9.0, 2).evaluate(xi)
    assert np.allclose(a, b, atol=1e-15)


def test_dilation_guards():
    with pytest.raises(KernelError):
        dilate_spectrum(KernelHandle(1, deposit=QuadratureMeasure([[0.0]], [1.0])), 2.0)
    with pytest.raises(KernelError):
        dilate_spectrum(heat_kernel(1.0, 1), 0.0)


def test_t_grid():
    ts = t_grid(1.0, 2.0, 8)
    assert ts.size == 9 and ts[0] == 1.0 and ts[-1] == pytest.approx(2.0)
    assert np.allclose(np.diff(np.log2(ts)), 1 / 8)
    assert t_grid(1.0, 1.5, 4)[-1] == 1.5
    with pytest.raises(GridError):
        t_grid(2.0, 1.0, 8)


def test_maximal_dominates_each_dilate():
    spec = GridSpec(2, 16, 8.0)
    fs = [random_field(spec, s, band=0.4) for s in (3, 4)]
    K = product_sphere_measure(2, 2)
    M = maximal_apply(K, fs, 1.0, 2.0, per_octave=4)
    for t in t_grid(1.0, 2.0, 4):
        B = np.abs(multilinear_apply(dilate_spectrum(K, t), fs).values)
        assert np.all(M.values >= B - 1e-12)
    with pytest.raises(GridError):
        maximal_apply(K, fs, 1.0, 2.0, per_octave=2)


def test_maximal_ratio_refinement_stability():
    spec = GridSpec(2, 16, 8.0)
    fs = [random_field(spec, s, band=0.4) for s in (1, 2)]
    K = product_sphere_measure(2, 2)
    a = maximal_l2_ratio(K, fs, 1.0, 2.0, 8, prune_tol=1e-12)
    b = maximal_l2_ratio(K, fs, 1.0, 2.0, 16, prune_tol=1e-12)
    assert abs(b - a) / a < 0.02


def test_exponent_bookkeeping():
    assert maximal_exponent_range(2, 0.5) == pytest.approx(4 / 2)
    assert maximal_exponent_range(1, 1.0) == pytest.approx(3 / 2)
    assert predicted_gamma(1.5, 2, 2) == pytest.approx(0.5)


@given(seed=st.integers(0, 2**31))
@settings(max_examples=50, deadline=None)
def test_ftc_lemma_on_trig_polys(seed):
    rep = ftc_lemma_check(random_trig_poly(seed), R=1.0)
    assert rep.passed


def test_ftc_lemma_equality_for_constants():
    rep = ftc_lemma_check(np.full(2048, 1.5 - 0.5j))
    assert rep.lhs == pytest.approx(rep.rhs, rel=1e-14)


def test_ftc_sample_guard():
    with pytest.raises(GridError):
        ftc_lemma_check(np.ones(100))
