"""Subspaces, fibers, restriction and mixed norms."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from restconv.errors import BandLimitError, ExponentError, SubspaceError
from restconv.grid import GridFunction, GridSpec, dft, lp_norm, random_field, random_spectrum
from restconv.mixed_norm import MixedNormParams, lambda_norm, mixed_spatial_norm
from restconv.subspace import (
    check_band_limit,
    fiber_labels,
    fibers,
    jacobian_from_chart,
    make_subspace,
    restrict,
    restrict_spectrum,
)

SUBSPACES = [
    ("coord:1", 2),
    ("coord:2", 3),
    ("coord:1", 3),
    ("diag:2x1", 2),
    ("diag:2x2", 4),
    ("diag:3x1", 3),
]


def _H(label, n):
    return make_subspace(label, n=n)


def _grid(n):
    return GridSpec(n, {2: 16, 3: 8, 4: 8}[n], 4.0)


def brute_lambda(S, H, r, p, convention="surface"):
    """Loop over the explicit fiber partition."""
    spec = S.spec
    inner = []
    for fb in fibers(H, spec, convention):
        idx = tuple((fb.members % spec.N).T)
        a = np.abs(S.coeffs[idx])
        inner.append(a.max() if np.isinf(r) else (fb.weight * np.sum(a**r)) ** (1 / r))
    inner = np.array(inner)
    if np.isinf(p):
        return inner.max()
    return (H.outer_weight(spec.L, convention) * np.sum(inner**p)) ** (1 / p)


def test_labels_parse():
    H = make_subspace("coord:2", n=3)
    assert (H.kind, H.n, H.k, H.codim) == ("coordinate", 3, 2, 1)
    D = make_subspace("diag:3x2")
    assert (D.n, D.k, D.m, D.d) == (6, 2, 3, 2)
    assert D.label == "diag:3x2"


@pytest.mark.parametrize(
    "args",
    [("coord:1",), ("coord:3", 2), ("diag:4x1",), ("diag:3x3",), ("diag:2x2", 3), ("plane",)],
)
def test_bad_subspaces(args):
    with pytest.raises(SubspaceError):
        make_subspace(*args)


@pytest.mark.parametrize("label,n", SUBSPACES)
def test_bases_are_orthonormal_complements(label, n):
    H = _H(label, n)
    B = np.vstack([H.basis_H, H.basis_perp])
    assert np.allclose(B @ B.T, np.eye(n), atol=1e-14)


def test_chart_jacobians():
    # eta -> (-eta/2, eta/2) per axis, and eta -> (eta1, eta2, -eta1-eta2)
    J2 = np.array([[-0.5], [0.5]])
    J3 = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, -1.0]])
    assert jacobian_from_chart(J2) == pytest.approx(make_subspace("diag:2x1").jacobian_rho)
    assert jacobian_from_chart(J3) == pytest.approx(make_subspace("diag:3x1").jacobian_rho)
    assert make_subspace("diag:2x2").jacobian_rho == pytest.approx(0.5)


@pytest.mark.parametrize("label,n", SUBSPACES)
def test_fibers_partition_lattice(label, n):
    H, spec = _H(label, n), _grid(n)
    fb = fibers(H, spec)
    assert len(fb) == spec.N**H.k
    sizes = {len(f.members) for f in fb}
    assert sizes == {spec.N**H.codim}
    allm = np.concatenate([f.members for f in fb]) % spec.N
    assert len({tuple(x) for x in allm}) == spec.size


@pytest.mark.parametrize("label,n", SUBSPACES)
def test_trace_spectrum_is_fiber_sum(label, n):
    H, spec = _H(label, n), _grid(n)
    f = random_field(spec, 4)
    lhs = dft(restrict(f, H)).coeffs
    rhs = restrict_spectrum(dft(f), H).coeffs
    assert np.max(np.abs(lhs - rhs)) < 1e-12 * np.max(np.abs(rhs))


@pytest.mark.parametrize("label,n", SUBSPACES)
@pytest.mark.parametrize("r,p", [(2, np.inf), (2, 2), (1, 3), (np.inf, 1), (3, 4)])
def test_lambda_matches_brute_fiber_loop(label, n, r, p):
    H, spec = _H(label, n), _grid(n)
    S = random_spectrum(spec, 9)
    for conv in ("surface", "rho"):
        got = lambda_norm(S, H, r=r, p=p, convention=conv)
        assert got == pytest.approx(brute_lambda(S, H, r, p, conv), rel=1e-12)


@given(seed=st.integers(0, 10**6), which=st.integers(0, len(SUBSPACES) - 1))
@settings(max_examples=25, deadline=None)
def test_lambda_22_is_l2(seed, which):
    label, n = SUBSPACES[which]
    H, spec = _H(label, n), _grid(n)
    f = random_field(spec, seed)
    assert lambda_norm(f, H, r=2, p=2) == pytest.approx(lp_norm(f, 2), rel=1e-12)


def test_lambda_of_tensor_product():
    # F = a(x') b(x''): Lambda_{2,inf} = sup|a_hat| * ||b||_2
    spec1 = GridSpec(1, 32, 8.0)
    a, b = random_field(spec1, 1), random_field(spec1, 2)
    F = np.multiply.outer(a.values, b.values)
    got = lambda_norm(GridFunction(GridSpec(2, 32, 8.0), F), make_subspace("coord:1", n=2))
    assert got == pytest.approx(np.abs(dft(a).coeffs).max() * lp_norm(b, 2), rel=1e-12)


@given(seed=st.integers(0, 10**6))
@settings(max_examples=20, deadline=None)
def test_lambda_inf_inf_is_sup(seed):
    H, spec = make_subspace("coord:1", n=2), _grid(2)
    S = random_spectrum(spec, seed)
    assert lambda_norm(S, H, r=np.inf, p=np.inf) == pytest.approx(np.abs(S.coeffs).max())


def test_mixed_params_validation():
    assert MixedNormParams("inf", "2").p == 2.0
    with pytest.raises(ExponentError):
        MixedNormParams(0.5, 2)


def test_mixed_spatial_l2_is_l2():
    for label, n in SUBSPACES:
        H, spec = _H(label, n), _grid(n)
        f = random_field(spec, 3)
        assert mixed_spatial_norm(f, H, 2, 2) == pytest.approx(lp_norm(f, 2), rel=1e-12)


def test_band_limit_guard():
    spec = GridSpec(2, 16, 4.0)
    check_band_limit(random_spectrum(spec, 1, band=0.9), m=2)
    with pytest.raises(BandLimitError):
        check_band_limit(random_spectrum(spec, 1), m=2)


def test_labels_shape():
    H = make_subspace("diag:2x1")
    lab = fiber_labels(H, GridSpec(2, 8))
    assert lab.shape == (8, 8) and lab[3, 2] == 5 and lab[7, 7] == 6
