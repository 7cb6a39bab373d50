"""Bilinear oscillatory operators, the surface transform and decay scans."""

import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from restconv.errors import ResolutionGuardError
from restconv.grid import GridFunction, GridSpec, random_field
from restconv.oscillatory import (
    PHASE_LABELS,
    Amplitude,
    OscillatoryOperator,
    Phase,
    Poly,
    check_guard,
    delta_z_phi,
    lambda_decay_scan,
    m_lambda_apply,
    make_phase,
    morse_phase,
    operator_norm_proxy,
    oscillatory_bound,
    oscillatory_grid,
    required_N,
    sigma_phi_hat,
    sigma_phi_hat_lattice,
    verify_oscillatory_bound,
)

AMP = Amplitude()
CUBIC = json.dumps({"d": 1, "p": [[1.0, [3]]], "q": [[-0.5, [2]]], "C": [[1.0]], "label": "cubic"})


def brute_sigma(phi, amp, lam, spec, xi):
    """Triple lattice sum over u, v and z, written from the definition."""
    ax = spec.axis()
    sup = ax[np.abs(ax) < amp.support_radius]
    z, u, v = (a[..., None] for a in np.meshgrid(ax, sup, sup, indexing="ij"))
    w = amp.evaluate(u, v) * amp.evaluate(u - z, v - z)
    dphi = phi.evaluate(u, v) - phi.evaluate(u - z, v - z)
    return np.sum(np.exp(-2j * np.pi * (xi * z[..., 0] + lam * dphi)) * w) * spec.h**3


def brute_apply(phi, amp, lam, f, g):
    """Direct double sum of f(x-u) g(x-v) e(lam phi(u,v)) psi(u,v)."""
    spec = f.spec
    h, N = spec.h, spec.N
    out = np.zeros(N, dtype=complex)
    for i in range(N):
        u = spec.axis()[i]
        if abs(u) >= amp.support_radius:
            continue
        for j in range(N):
            v = spec.axis()[j]
            if abs(v) >= amp.support_radius:
                continue
            k = amp.evaluate(np.array([u]), np.array([v])) * np.exp(2j * np.pi * lam * phi.evaluate(np.array([u]), np.array([v])))
            out += k * np.roll(f.values, i) * np.roll(g.values, j)
    return out * h**2


@pytest.mark.parametrize("label", ["dot", "squares", "cubic"])
def test_sigma_matches_triple_sum(label):
    phi = make_phase(CUBIC if label == "cubic" else label)
    lam = 2.0
    spec = oscillatory_grid(phi, AMP, lam)
    for xi in (0.0, 0.75, -1.5):
        got = sigma_phi_hat(phi, AMP, xi, lam, spec)
        assert abs(got - brute_sigma(phi, AMP, lam, spec, xi)) < 1e-13


def test_lattice_sigma_matches_pointwise():
    phi = make_phase("dot")
    spec = oscillatory_grid(phi, AMP, 4.0)
    lat = sigma_phi_hat_lattice(phi, AMP, 4.0, spec)
    xi = spec.freq_axis()[:6]
    assert np.allclose(lat[:6], sigma_phi_hat(phi, AMP, xi[:, None], 4.0, spec), atol=1e-14)


@pytest.mark.parametrize("label", ["dot", "squares", "rank-deficient", "cubic"])
def test_operator_matches_double_sum(label):
    phi = make_phase(CUBIC if label == "cubic" else label)
    lam = 3.0
    spec = oscillatory_grid(phi, AMP, lam)
    f, g = random_field(spec, 1), random_field(spec, 2)
    got = m_lambda_apply(phi, AMP, lam, f, g).values
    assert np.allclose(got, brute_apply(phi, AMP, lam, f, g), atol=1e-14)


def test_general_modulation_path_matches_shift_path():
    # a non-integral lam L^2 C / N forces the direct row transform
    phi = make_phase("dot")
    spec = GridSpec(1, 64, 4.0)
    f, g = random_field(spec, 3), random_field(spec, 4)
    lam = 3.3
    op = OscillatoryOperator(phi, AMP, lam, spec)
    assert not op._shift_ok
    assert np.allclose(op.apply(f.values, g.values), brute_apply(phi, AMP, lam, f, g), atol=1e-14)


@pytest.mark.parametrize("lam", [4.0, 3.3])
def test_adjoint(lam):
    phi = make_phase("dot")
    spec = GridSpec(1, 128, 4.0)
    op = OscillatoryOperator(phi, AMP, lam, spec)
    f, g, m = (random_field(spec, s).values for s in (5, 6, 7))
    lhs = np.vdot(m, op.apply(f, g))
    rhs = np.vdot(op.adjoint_f(m, g), f)
    assert abs(lhs - rhs) < 1e-12 * abs(lhs)


def test_bilinearity():
    phi = make_phase("squares")
    spec = oscillatory_grid(phi, AMP, 8.0)
    op = OscillatoryOperator(phi, AMP, 8.0, spec)
    f1, f2, g = (random_field(spec, s).values for s in (1, 2, 3))
    a, b = 0.3 - 1.2j, 2.0
    lhs = op.apply(a * f1 + b * f2, g)
    assert np.allclose(lhs, a * op.apply(f1, g) + b * op.apply(f2, g), atol=1e-13)


def test_zero_frequency_limit_is_mass():
    # psi has unit mass, so M(1, 1) = 1 when lam = 0
    spec = GridSpec(1, 256, 4.0)
    one = GridFunction(spec, np.ones(256))
    out = m_lambda_apply(make_phase("dot"), AMP, 0.0, one, one).values
    assert np.allclose(out, 1.0, atol=1e-12)


def test_refined_quadrature_agrees():
    phi = make_phase("dot")
    lam = 4.0
    spec = oscillatory_grid(phi, AMP, lam)
    fine = GridSpec(1, 4 * spec.N, spec.L)
    xi = np.array([[0.0], [0.5], [1.25]])
    a = sigma_phi_hat(phi, AMP, xi, lam, spec)
    b = sigma_phi_hat(phi, AMP, xi, lam, fine)
    assert np.max(np.abs(a - b)) < 1e-4


@given(u=st.floats(-1, 1), v=st.floats(-1, 1), z=st.floats(-2, 2))
def test_delta_z_dot(u, v, z):
    got = delta_z_phi(make_phase("dot"), [u], [v], [z])
    assert got == pytest.approx(z * (u + v) - z * z, abs=1e-12)


@given(
    u=st.lists(st.floats(-1, 1), min_size=2, max_size=2),
    v=st.lists(st.floats(-1, 1), min_size=2, max_size=2),
    z=st.lists(st.floats(-2, 2), min_size=2, max_size=2),
)
def test_delta_z_morse_is_negated_display(u, v, z):
    # the display sum s((z-u)^2 - u^2) equals -(phi(u,v) - phi(u-z,v-z))
    s_u, s_v = [1.0, -1.0], [-1.0, 1.0]
    phi = morse_phase(s_u, s_v)
    display = sum(s * ((zi - ui) ** 2 - ui**2) for s, zi, ui in zip(s_u, z, u))
    display += sum(s * ((zi - vi) ** 2 - vi**2) for s, zi, vi in zip(s_v, z, v))
    got = delta_z_phi(phi, np.array(u), np.array(v), np.array(z))
    assert got == pytest.approx(-display, abs=1e-12)


@pytest.mark.parametrize("spec", list(PHASE_LABELS) + [CUBIC])
def test_fd_consistency(spec):
    for d in (1, 2):
        if spec == CUBIC and d == 2:
            continue
        assert make_phase(spec, d).fd_consistency() < 1e-6


def test_hessian_flags():
    assert not make_phase("dot", 2).hessian_degenerate()
    assert not make_phase("squares", 1).hessian_degenerate()
    assert make_phase("rank-deficient", 2).hessian_degenerate()
    assert make_phase("zero", 1).hessian_degenerate()


def test_poly_derivatives():
    P = Poly(2, ((2.0, (2, 1)), (-1.0, (0, 3))))
    x = np.array([1.5, -0.5])
    assert P(x) == pytest.approx(2 * 2.25 * -0.5 + 0.125)
    assert np.allclose(P.gradient(x), [4 * 1.5 * -0.5, 2 * 2.25 - 3 * 0.25])
    assert np.allclose(P.hessian(x), [[4 * -0.5, 4 * 1.5], [4 * 1.5, -6 * -0.5]])
    with pytest.raises(ValueError):
        Poly(2, ((1.0, (1,)),))


def test_phase_serialization_roundtrip():
    phi = make_phase(CUBIC)
    back = Phase.from_dict(json.loads(json.dumps(phi.to_dict())))
    u, v = phi.sample_points()
    assert np.allclose(back.evaluate(u, v), phi.evaluate(u, v))
    with pytest.raises(ValueError):
        make_phase("saddle")


def test_transpose_swaps_roles():
    phi = make_phase(CUBIC)
    u, v = phi.sample_points()
    assert np.allclose(phi.transpose().evaluate(v, u), phi.evaluate(u, v))


def test_guard():
    phi = make_phase("dot")
    spec = GridSpec(1, 64, 4.0)
    need = required_N(phi, AMP, 100.0, 4.0)
    with pytest.raises(ResolutionGuardError) as err:
        check_guard(phi, AMP, 100.0, spec)
    assert err.value.required_N == need == 2048
    check_guard(phi, AMP, 100.0, GridSpec(1, need, 4.0))


@given(seed=st.integers(0, 10**6))
@settings(max_examples=10, deadline=None)
def test_bound_holds_on_random_pairs(seed):
    phi = make_phase("dot")
    spec = oscillatory_grid(phi, AMP, 16.0)
    rep = verify_oscillatory_bound(phi, AMP, 16.0, random_field(spec, seed), random_field(spec, seed + 1))
    assert rep.passed and rep.ratio <= 1 + 1e-6


def test_norm_proxy_is_between_random_and_bound():
    phi = make_phase("dot")
    lam = 16.0
    spec = oscillatory_grid(phi, AMP, lam)
    prox = operator_norm_proxy(phi, AMP, lam, spec, seeds=4, refinements=10)
    assert prox["random_max"] * (1 - 1e-5) <= prox["estimate"] <= oscillatory_bound(phi, AMP, lam, spec) * (1 + 1e-6)


def test_short_decay_scan():
    fit = lambda_decay_scan("dot", d=1, lambdas=(16, 32, 64), seeds=3, refinements=10)
    assert fit.slope == pytest.approx(-0.5, abs=0.15)
    assert fit.extra["upper_slope"] == pytest.approx(-0.5, abs=0.15)
    assert not fit.extra["degenerate"]
    assert all(r <= 1 + 1e-6 for r in fit.extra["bound_ratios"])
