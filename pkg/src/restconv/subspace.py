"""Coordinate and diagonal subspaces, their frequency fibers, and restriction.

Two subspaces are supported:

* ``coordinate(k)`` in ``R^n``: the plane ``x'' = 0`` with ``x = (x', x'')``,
  ``x'`` in ``R^k``.  The fiber over ``xi'`` is ``{(xi', xi'')}``.
* ``diagonal(m, d)`` in ``R^{md}``: ``{(x, ..., x)}``.  The fiber over ``xi`` is
  ``{(zeta^1, ..., zeta^m) : sum_j zeta^j = xi}``, taken modulo the lattice.

Weights
-------
Fiber sums carry a per-member weight.  For coordinate planes this is
``(1/L)^{n-k}``.  For the diagonal it is ``jacobian_rho * eta_cell`` which equals
``m^{d/2} (1/L)^{(m-1)d}``: the surface measure of the fiber plane.  Bases of
the diagonal are spaced ``1/(L sqrt(m))`` in the geometric coordinates of
``H*`` and the restricted function lives on ``H`` with surface element
``m^{d/2} dx``.  The literal coordinate expression (bases spaced ``1/L``,
members weighted by ``eta_cell`` alone) is exposed as the ``"rho"``
convention.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import BandLimitError, SubspaceError
from .grid import GridFunction, GridSpec, Spectrum

CONVENTIONS = ("surface", "rho")


def _helmert(m: int) -> np.ndarray:
    """Orthonormal rows spanning the complement of ``(1, ..., 1)`` in ``R^m``."""
    rows = []
    for j in range(1, m):
        r = np.zeros(m)
        r[:j] = 1.0
        r[j] = -float(j)
        rows.append(r / np.sqrt(j * (j + 1)))
    return np.array(rows).reshape(m - 1, m)


@dataclass(frozen=True, eq=False)
class Subspace:
    """A lattice-compatible linear subspace ``H`` of ``R^n``.

    Attributes
    ----------
    kind : {"coordinate", "diagonal"}
    n, k : int
        Ambient and subspace dimension.
    m, d : int or None
        Diagonal only: number of blocks and block dimension (``n = m d``).
    basis_H, basis_perp : ndarray
        Orthonormal row bases of ``H`` and its complement.
    jacobian_rho : float
        Gram factor of the fiber parametrization (``2^{-d/2}`` for the
        symmetric ``m = 2`` chart, ``3^{d/2}`` for ``m = 3``, 1 for
        coordinate planes).
    eta_cell : float
        Lattice cell volume of the fiber parameter ``eta``, in units of
        ``(1/L)^{(m-1)d}``.  The physical cell is ``eta_cell / L^{(m-1)d}``.
    """

    kind: str
    n: int
    k: int
    basis_H: np.ndarray = field(repr=False)
    basis_perp: np.ndarray = field(repr=False)
    jacobian_rho: float = 1.0
    eta_cell: float = 1.0
    m: int | None = None
    d: int | None = None

    @property
    def codim(self) -> int:
        return self.n - self.k

    @property
    def surface_factor(self) -> float:
        """Surface element of ``H`` in its lattice coordinates (``m^{d/2}`` on the diagonal)."""
        return float(self.m ** (self.d / 2)) if self.kind == "diagonal" else 1.0

    @property
    def label(self) -> str:
        if self.kind == "coordinate":
            return f"coord:{self.k}/{self.n}"
        return f"diag:{self.m}x{self.d}"

    def inner_weight(self, L: float, convention: str = "surface") -> float:
        """Frequency weight of one fiber member."""
        _check_conv(convention)
        if self.kind == "coordinate":
            return (1.0 / L) ** self.codim
        cell = self.eta_cell * (1.0 / L) ** self.codim
        return self.jacobian_rho * cell if convention == "surface" else cell

    def outer_weight(self, L: float, convention: str = "surface") -> float:
        """Frequency weight of one fiber base."""
        _check_conv(convention)
        if self.kind == "diagonal" and convention == "surface":
            return (1.0 / (L * np.sqrt(self.m))) ** self.d
        return (1.0 / L) ** self.k

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "n": self.n, "k": self.k, "jacobian_rho": self.jacobian_rho}
        if self.kind == "diagonal":
            out.update(m=self.m, d=self.d, eta_cell=self.eta_cell)
        return out


def _check_conv(convention: str):
    if convention not in CONVENTIONS:
        raise SubspaceError(f"unknown weight convention {convention!r}; use one of {CONVENTIONS}")


def make_subspace(kind: str, n: int | None = None, k: int | None = None, m: int | None = None, d: int | None = None) -> Subspace:
    """Build a supported subspace.

    ``kind`` may also be a short label: ``"coord:K"`` (needs ``n``) or
    ``"diag:MxD"``.

    Examples
    --------
    >>> make_subspace("coordinate", n=2, k=1).basis_perp
    array([[0., 1.]])
    >>> make_subspace("diag:2x2").jacobian_rho
    0.5
    """
    mt = re.fullmatch(r"coord(?:inate)?:(\d+)", kind)
    if mt:
        kind, k = "coordinate", int(mt.group(1))
    mt = re.fullmatch(r"diag(?:onal)?:(\d+)x(\d+)", kind)
    if mt:
        kind, m, d = "diagonal", int(mt.group(1)), int(mt.group(2))
        if n is not None and n != m * d:
            raise SubspaceError(f"diag:{m}x{d} lives in R^{m * d}, not R^{n}")
        n = m * d

    if kind == "coordinate":
        if n is None or k is None:
            raise SubspaceError("coordinate subspace needs n and k")
        if not 1 <= k <= n:
            raise SubspaceError(f"coordinate subspace needs 1 <= k <= n, got k={k}, n={n}")
        eye = np.eye(n)
        return Subspace("coordinate", n, k, eye[:k].copy(), eye[k:].copy())

    if kind == "diagonal":
        if m is None or d is None:
            if n is None or m is None:
                raise SubspaceError("diagonal subspace needs m and d (or m and n)")
            if n % m:
                raise SubspaceError(f"n={n} is not a multiple of m={m}")
            d = n // m
        if m not in (2, 3):
            raise SubspaceError(f"diagonal subspaces need m in {{2, 3}}, got m={m}")
        if d < 1 or m * d > 6:
            raise SubspaceError(f"diagonal subspace needs 1 <= m*d <= 6, got m={m}, d={d}")
        eye = np.eye(d)
        basis_H = np.kron(np.ones((1, m)) / np.sqrt(m), eye)
        basis_perp = np.kron(_helmert(m), eye)
        if m == 2:
            # symmetric chart eta -> (-eta/2, eta/2); eta steps by 2/L
            jac, cell = 2.0 ** (-d / 2), 2.0**d
        else:
            # rho chart eta -> (eta1, eta2, -eta1 - eta2)
            jac, cell = 3.0 ** (d / 2), 1.0
        return Subspace("diagonal", m * d, d, basis_H, basis_perp, jac, cell, m, d)

    raise SubspaceError(f"unsupported subspace kind {kind!r}")


def jacobian_from_chart(J: np.ndarray) -> float:
    """``sqrt(det(J^T J))`` for a chart differential ``J``."""
    return float(np.sqrt(np.linalg.det(J.T @ J)))


def base_spec(H: Subspace, spec: GridSpec) -> GridSpec:
    """Lattice of ``H`` (and of ``H*``) in its natural coordinates."""
    return GridSpec(H.k, spec.N, spec.L)


@lru_cache(maxsize=16)
def _labels(kind: str, n: int, k: int, m, d, N: int) -> np.ndarray:
    if kind == "coordinate":
        lab = np.arange(N**k, dtype=np.int64).reshape((N,) * k + (1,) * (n - k))
        return np.broadcast_to(lab, (N,) * n)
    dims = (N,) * n
    per_axis = []
    for a in range(d):
        s = np.zeros((1,) * n, dtype=np.int64)
        for j in range(m):
            ax = j * d + a
            s = s + np.arange(N, dtype=np.int64).reshape([-1 if b == ax else 1 for b in range(n)])
        per_axis.append(s % N)
    lab = np.zeros((1,) * n, dtype=np.int64)
    for a in range(d):
        lab = lab * N + per_axis[a]
    out = np.broadcast_to(lab, dims).copy()
    out.setflags(write=False)
    return out


def fiber_labels(H: Subspace, spec: GridSpec) -> np.ndarray:
    """Flat base index (C order over the ``H*`` lattice) of every frequency."""
    if spec.n != H.n:
        raise SubspaceError(f"grid is {spec.n}-dimensional but H lives in R^{H.n}")
    return _labels(H.kind, H.n, H.k, H.m, H.d, spec.N)


def fiber_reduce(H: Subspace, values: np.ndarray, spec: GridSpec, how: str = "sum") -> np.ndarray:
    """Aggregate ``values`` over each fiber; returns an array on the ``H*`` lattice.

    ``how`` is ``"sum"`` or ``"max"`` (the latter for real input).
    """
    N, k = spec.N, H.k
    values = np.asarray(values).reshape(spec.shape)
    if H.kind == "coordinate":
        flat = values.reshape((N,) * k + (-1,))
        return flat.sum(axis=-1) if how == "sum" else flat.max(axis=-1)
    lab = fiber_labels(H, spec).ravel()
    v = values.ravel()
    size = N**k
    if how == "max":
        out = np.full(size, -np.inf)
        np.maximum.at(out, lab, v)
    elif np.iscomplexobj(v):
        out = np.bincount(lab, weights=v.real, minlength=size) + 1j * np.bincount(lab, weights=v.imag, minlength=size)
    else:
        out = np.bincount(lab, weights=v, minlength=size)
    return out.reshape((N,) * k)


def fiber_expand(H: Subspace, base_values: np.ndarray, spec: GridSpec) -> np.ndarray:
    """Broadcast an ``H*`` array back to every member of its fiber."""
    lab = fiber_labels(H, spec)
    return np.asarray(base_values).ravel()[lab]


@dataclass(frozen=True, eq=False)
class FiberIndex:
    """One fiber: its base label, member frequencies (signed ints) and member weight."""

    base: tuple
    members: np.ndarray
    weight: float


def fibers(H: Subspace, spec: GridSpec, convention: str = "surface") -> list:
    """Enumerate the fiber partition of the frequency lattice.

    Bases and members are signed integer frequency labels.
    """
    lab = fiber_labels(H, spec).ravel()
    order = np.argsort(lab, kind="stable")
    counts = np.bincount(lab, minlength=spec.N**H.k)
    idx = spec.freq_index_axis()
    w = H.inner_weight(spec.L, convention)
    out = []
    start = 0
    for b, c in enumerate(counts):
        flat = order[start : start + c]
        start += c
        members = np.stack([idx[i] for i in np.unravel_index(flat, spec.shape)], axis=-1)
        base = tuple(int(idx[i]) for i in np.unravel_index(b, (spec.N,) * H.k))
        out.append(FiberIndex(base, members, w))
    return out


def restrict(f: GridFunction, H: Subspace) -> GridFunction:
    """Trace of ``f`` on ``H`` sampled on the ``k``-dimensional lattice."""
    spec = f.spec
    if spec.n != H.n:
        raise SubspaceError(f"grid is {spec.n}-dimensional but H lives in R^{H.n}")
    out_spec = base_spec(H, spec)
    if H.kind == "coordinate":
        vals = f.values[(Ellipsis,) + (0,) * H.codim] if H.codim else f.values
        return GridFunction(out_spec, vals)
    grids = tuple(np.indices((spec.N,) * H.d))
    return GridFunction(out_spec, f.values[grids * H.m])


def restrict_spectrum(F: Spectrum, H: Subspace) -> Spectrum:
    """Spectrum of the trace: ``(1/L)^{n-k}`` times the plain fiber sum of ``F``."""
    spec = F.spec
    return Spectrum(base_spec(H, spec), fiber_reduce(H, F.coeffs, spec) * spec.dxi**H.codim)


def check_band_limit(F: Spectrum, m: int, tol: float = 1e-12) -> None:
    """Reject spectra carrying relative energy above ``tol`` at ``|xi_i| >= N/(2 L m)``."""
    spec = F.spec
    cap = spec.N / (2 * spec.L * m)
    xi = np.abs(spec.freq_axis())
    outside = np.zeros(spec.shape, dtype=bool)
    for ax in range(spec.n):
        outside |= (xi >= cap).reshape([-1 if a == ax else 1 for a in range(spec.n)])
    e = np.abs(F.coeffs) ** 2
    tot = e.sum()
    if tot > 0 and e[outside].sum() > tol * tot:
        raise BandLimitError(f"spectrum has energy beyond the wrap-free cap |xi| < {cap:g} for m={m}")
