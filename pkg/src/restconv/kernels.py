"""Convolution kernels and measures, by closed-form spectrum or by quadrature deposit.

All spectra use the ``exp(-2 pi i <x, xi>)`` convention.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .errors import DimensionBudgetError, GridError, KernelError
from .grid import MAX_DIM, AnalyticField, GridFunction, GridSpec, Spectrum, dft, discretize, idft


# -- containers ---------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class QuadratureMeasure:
    """Atomic measure ``sum_q w_q delta_{x_q}`` in ``R^n``."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        w = np.asarray(self.weights, dtype=float).ravel()
        if pts.shape[0] != w.size:
            raise KernelError(f"{pts.shape[0]} points but {w.size} weights")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @property
    def n(self) -> int:
        return self.points.shape[1]

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())

    def to_json(self) -> str:
        return json.dumps({"n": self.n, "points": self.points.tolist(), "weights": self.weights.tolist()})

    @classmethod
    def from_json(cls, text: str) -> "QuadratureMeasure":
        d = json.loads(text)
        q = cls(np.asarray(d["points"], dtype=float).reshape(-1, int(d["n"])), d["weights"])
        return q


@dataclass(frozen=True, eq=False)
class KernelHandle:
    """A kernel on ``R^n`` given by exactly one of an analytic spectrum or a deposit."""

    n: int
    analytic: AnalyticField | None = None
    deposit: QuadratureMeasure | None = None
    label: str = ""
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if (self.analytic is None) == (self.deposit is None):
            raise KernelError("a KernelHandle holds exactly one representation")
        if self.analytic is not None and self.analytic.side != "frequency":
            raise KernelError("analytic kernels are specified by their spectrum")
        if self.deposit is not None and self.deposit.n != self.n:
            raise KernelError(f"deposit lives in R^{self.deposit.n}, handle claims R^{self.n}")

    @property
    def is_analytic(self) -> bool:
        return self.analytic is not None

    def evaluate(self, xi: np.ndarray) -> np.ndarray:
        """Spectrum at arbitrary frequencies ``xi`` of shape ``(M, n)``."""
        xi = np.atleast_2d(np.asarray(xi, dtype=float))
        if self.is_analytic:
            return np.asarray(self.analytic(xi), dtype=np.complex128) * np.ones(xi.shape[0])
        return nudft(self.deposit, xi)

    def spectrum(self, spec: GridSpec) -> Spectrum:
        """Spectrum sampled on the frequency lattice of ``spec``."""
        if spec.n != self.n:
            raise GridError(f"kernel lives in R^{self.n}, grid is {spec.n}-dimensional")
        if self.is_analytic:
            return discretize(self.analytic, spec)
        return deposit(self.deposit, spec)

    def to_dict(self) -> dict:
        return {"label": self.label, "n": self.n, **{k: v for k, v in self.params.items()}}


def _radial(fn, n: int, label: str, **params) -> KernelHandle:
    def ev(xi):
        return fn(np.sqrt(np.sum(xi * xi, axis=-1)))

    return KernelHandle(n, AnalyticField(ev, "frequency", label), label=label, params=params)


# -- exact transforms of atomic measures --------------------------------------


def nudft(measure: QuadratureMeasure, xi: np.ndarray, chunk: int = 1 << 22) -> np.ndarray:
    """``sum_q w_q exp(-2 pi i x_q . xi)`` at each row of ``xi``."""
    xi = np.atleast_2d(np.asarray(xi, dtype=float))
    P, w = measure.points, measure.weights
    out = np.empty(xi.shape[0], dtype=np.complex128)
    step = max(1, chunk // max(1, P.shape[0]))
    for a in range(0, xi.shape[0], step):
        ph = xi[a : a + step] @ P.T
        out[a : a + step] = np.exp(-2j * np.pi * ph) @ w
    return out


def deposit(measure: QuadratureMeasure, spec: GridSpec, chunk: int = 2048) -> Spectrum:
    """Exact Fourier transform of ``measure`` on the frequency lattice of ``spec``.

    The phase factorizes over axes, so the lattice sum is a matrix product of
    per-axis phase tables split into two axis groups.
    """
    n = spec.n
    if measure.n != n:
        raise GridError(f"measure lives in R^{measure.n}, grid is {n}-dimensional")
    half = spec.L / 2
    if np.any(np.abs(measure.points) > half + 1e-12):
        raise GridError("deposit points must lie inside the box [-L/2, L/2]^n")
    xi = spec.freq_axis()
    N = spec.N
    a = (n + 1) // 2
    P, w = measure.points, measure.weights
    acc = np.zeros((N**a, N ** (n - a)), dtype=np.complex128)

    def group(pts, axes):
        t = np.ones((pts.shape[0], 1), dtype=np.complex128)
        for ax in axes:
            e = np.exp(-2j * np.pi * np.outer(pts[:, ax], xi))
            t = (t[:, :, None] * e[:, None, :]).reshape(pts.shape[0], -1)
        return t

    for s in range(0, P.shape[0], chunk):
        pts = P[s : s + chunk]
        A = group(pts, range(a)) * w[s : s + chunk, None]
        B = group(pts, range(a, n))
        acc += A.T @ B
    return Spectrum(spec, acc.reshape(spec.shape))


# -- heat, Bessel and Riesz ----------------------------------------------------


def heat_kernel(t: float, n: int) -> KernelHandle:
    """Heat kernel ``(4 pi t)^{-n/2} exp(-|x|^2 / 4t)``; spectrum ``exp(-4 pi^2 t |xi|^2)``."""
    if not t > 0:
        raise KernelError(f"heat kernel needs t > 0, got {t}")
    return _radial(lambda r: np.exp(-4 * np.pi**2 * t * r * r), n, "heat", t=float(t))


def bessel_multiplier(s: float, n: int) -> KernelHandle:
    """Bessel potential spectrum ``(1 + |xi|^2)^{-s/2}``."""
    return _radial(lambda r: (1.0 + r * r) ** (-s / 2.0), n, "bessel", s=float(s))


def riesz_kernel(d: int, a: float) -> KernelHandle:
    """Riesz spectrum ``|xi|^{-a}``, set to zero at ``xi = 0``."""
    if not 0 < a < d:
        raise KernelError(f"Riesz order needs 0 < a < d={d}, got {a}")

    def prof(r):
        with np.errstate(divide="ignore"):
            return np.where(r > 0, r ** (-a), 0.0)

    return _radial(prof, d, "riesz", a=float(a))


def tensor_kernel(*factors: KernelHandle) -> KernelHandle:
    """``K_hat(xi^1, ..., xi^m) = prod_j K_j_hat(xi^j)`` for analytic factors."""
    if not all(f.is_analytic for f in factors):
        raise KernelError("tensor_kernel needs analytic factors")
    dims = [f.n for f in factors]
    n = sum(dims)
    if n > MAX_DIM:
        raise DimensionBudgetError(f"tensor kernel dimension {n} exceeds {MAX_DIM}")
    cuts = np.cumsum([0] + dims)

    def ev(xi):
        out = np.ones(xi.shape[0], dtype=np.complex128)
        for f, a, b in zip(factors, cuts[:-1], cuts[1:]):
            out = out * f.analytic(xi[:, a:b])
        return out

    label = "x".join(f.label for f in factors)
    return KernelHandle(n, AnalyticField(ev, "frequency", label), label=label, params={"factors": [f.to_dict() for f in factors]})


# -- spheres -------------------------------------------------------------------


def sphere_area(n: int, radius: float = 1.0) -> float:
    """Surface area of the radius-``radius`` sphere in ``R^n``."""
    return float(2 * np.pi ** (n / 2) / special.gamma(n / 2) * radius ** (n - 1))


def sphere_profile(n: int, radius: float = 1.0):
    """Radial function ``rho -> sigma_hat(|xi| = rho)`` of the sphere measure in ``R^n``."""
    nu = (n - 2) / 2.0
    area = sphere_area(n, radius)

    def prof(rho):
        z = 2 * np.pi * radius * np.asarray(rho, dtype=float)
        out = np.empty_like(z)
        small = z < 1e-4
        zz = z[small]
        # Gamma(nu+1) (z/2)^{-nu} J_nu(z) = 1 - z^2 / (4 (nu+1)) + ...
        out[small] = 1 - zz**2 / (4 * (nu + 1)) + zz**4 / (32 * (nu + 1) * (nu + 2))
        zb = z[~small]
        out[~small] = special.gamma(nu + 1) * (zb / 2) ** (-nu) * special.jv(nu, zb)
        return area * out

    return prof


def sphere_quadrature(n: int, radius: float = 1.0, n_polar: int = 32, n_azimuth: int | None = None) -> QuadratureMeasure:
    """Product-angle rule on the sphere in ``R^n``.

    Recursively writes ``x = (t, sqrt(1-t^2) y)`` with ``y`` on the sphere of
    one dimension lower and ``dsigma = (1-t^2)^{(n-3)/2} dt dsigma(y)``; the
    ``t`` integral uses Gauss-Jacobi nodes and the circle a uniform rule.
    """
    if not 2 <= n <= MAX_DIM:
        raise KernelError(f"sphere_quadrature supports 2 <= n <= {MAX_DIM}, got {n}")
    if n_azimuth is None:
        # the circle alone carries the whole rule when n = 2
        n_azimuth = max(2 * n_polar, 2048) if n == 2 else 2 * n_polar
    th = 2 * np.pi * np.arange(n_azimuth) / n_azimuth
    pts = np.stack([np.cos(th), np.sin(th)], axis=1)
    w = np.full(n_azimuth, 2 * np.pi / n_azimuth)
    for dim in range(3, n + 1):
        al = (dim - 3) / 2.0
        t, wt = special.roots_jacobi(n_polar, al, al)
        s = np.sqrt(1 - t * t)
        pts = np.concatenate(
            [np.repeat(t, pts.shape[0])[:, None], (s[:, None, None] * pts[None]).reshape(-1, dim - 1)], axis=1
        )
        w = (wt[:, None] * w[None]).ravel()
    return QuadratureMeasure(radius * pts, w * radius ** (n - 1))


def sphere_measure(n: int, radius: float = 1.0, n_polar: int = 32):
    """Sphere surface measure: analytic handle and an independent quadrature rule.

    Returns
    -------
    (KernelHandle, QuadratureMeasure)
    """
    if not 2 <= n <= MAX_DIM:
        raise KernelError(f"sphere_measure supports 2 <= n <= {MAX_DIM}, got {n}")
    h = _radial(sphere_profile(n, radius), n, "sphere", radius=float(radius))
    return h, sphere_quadrature(n, radius, n_polar)


def product_sphere_measure(m: int, d: int, radius: float = 1.0) -> KernelHandle:
    """Surface measure on ``S^{d-1} x ... x S^{d-1}`` (``m`` factors)."""
    if m * d > MAX_DIM:
        raise DimensionBudgetError(f"m*d = {m * d} exceeds {MAX_DIM}")
    if d < 2:
        raise KernelError("product spheres need d >= 2")
    fac = _radial(sphere_profile(d, radius), d, "sphere", radius=float(radius))
    k = tensor_kernel(*([fac] * m))
    return KernelHandle(m * d, k.analytic, label="product_sphere", params={"m": m, "d": d, "radius": float(radius)})


# -- wave propagator -----------------------------------------------------------


def wave_multiplier(t: float, n: int = 3) -> KernelHandle:
    """Spectrum ``sin(2 pi t |xi|) / (2 pi |xi|)`` with value ``t`` at the origin."""
    if not t > 0:
        raise KernelError(f"wave propagator needs t > 0, got {t}")

    def prof(r):
        r = np.asarray(r, dtype=float)
        return t * np.sinc(2 * t * r)

    return _radial(prof, n, "wave", t=float(t))


def wave_propagate_3d(f: GridFunction, t: float) -> GridFunction:
    """Solution at time ``t`` of ``u_tt = Laplacian u`` with ``u(0) = 0, u_t(0) = f`` (scaled by ``4 pi^2``).

    Spectrally ``u_hat = f_hat sin(2 pi t |xi|) / (2 pi |xi|)``.
    """
    if f.spec.n != 3:
        raise KernelError("wave_propagate_3d needs a 3-dimensional grid")
    F = dft(f)
    m = wave_multiplier(t).spectrum(f.spec)
    return idft(F * m)


def wave_spherical_mean(f_eval, x: np.ndarray, t: float, rule: QuadratureMeasure) -> np.ndarray:
    """``(t / 4 pi) * int_{S^2} f(x - t y) dsigma(y)`` using the unit-sphere ``rule``."""
    x = np.atleast_2d(x)
    out = np.empty(x.shape[0], dtype=np.complex128)
    for i, xi in enumerate(x):
        out[i] = rule.weights @ f_eval(xi[None, :] - t * rule.points)
    return out * t / (4 * np.pi)
