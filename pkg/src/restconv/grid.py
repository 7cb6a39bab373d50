"""Periodic lattices, sampled functions and the normalized discrete Fourier transform.

Conventions
-----------
A :class:`GridSpec` describes the torus ``[-L/2, L/2)^n`` sampled at ``N`` points
per axis with spacing ``h = L / N``.  Arrays are stored in FFT order, so index
``j`` on an axis corresponds to the coordinate ``fftfreq(N)[j] * L`` and the
frequency ``fftfreq(N, d=h)[j] = m / L`` with signed ``m`` in ``[-N/2, N/2)``.

The forward transform uses ``exp(-2 pi i <x, xi>)`` and is scaled by ``h**n`` so
that coefficients approximate the continuum transform.  Plancherel then reads
``(1/L)^n sum |F|^2 == h^n sum |f|^2``.
"""

from __future__ import annotations

import io
import json
import struct
from dataclasses import dataclass, field
from typing import Callable, Literal, Sequence

import numpy as np

from .errors import DimensionBudgetError, ExponentError, GridError

MAX_DIM = 6

# default points per axis by ambient dimension (period 16)
DEFAULT_N = {1: 64, 2: 64, 3: 32, 4: 32, 5: 16, 6: 16}
DEFAULT_L = 16.0

_MAGIC = b"RESTCONVGRID"
_VERSION = 1


def _is_pow2(N: int) -> bool:
    return N > 0 and (N & (N - 1)) == 0


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic lattice in ``n`` dimensions.

    Parameters
    ----------
    n : int
        Ambient dimension, ``1 <= n <= 6``.
    N : int
        Points per axis, a power of two.
    L : float
        Period of every axis.
    """

    n: int
    N: int
    L: float = DEFAULT_L

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise GridError(f"dimension must be a positive integer, got {self.n!r}")
        if self.n > MAX_DIM:
            raise DimensionBudgetError(f"n={self.n} exceeds the memory guard n <= {MAX_DIM}")
        if not isinstance(self.N, (int, np.integer)) or not _is_pow2(int(self.N)):
            raise GridError(f"N must be a power of two, got {self.N!r}")
        if not np.isfinite(self.L) or self.L <= 0:
            raise GridError(f"period L must be positive, got {self.L!r}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "L", float(self.L))

    @classmethod
    def default(cls, n: int, L: float = DEFAULT_L) -> "GridSpec":
        """Desk-scale default lattice for dimension ``n``."""
        if n > MAX_DIM:
            raise DimensionBudgetError(f"n={n} exceeds the memory guard n <= {MAX_DIM}")
        return cls(n, DEFAULT_N[n], L)

    @property
    def h(self) -> float:
        return self.L / self.N

    @property
    def dxi(self) -> float:
        return 1.0 / self.L

    @property
    def shape(self) -> tuple:
        return (self.N,) * self.n

    @property
    def size(self) -> int:
        return self.N**self.n

    def axis(self) -> np.ndarray:
        """Spatial coordinates of one axis in FFT order."""
        return np.fft.fftfreq(self.N) * self.L

    def freq_axis(self) -> np.ndarray:
        """Frequencies ``m / L`` of one axis in FFT order."""
        return np.fft.fftfreq(self.N, d=self.h)

    def freq_index_axis(self) -> np.ndarray:
        """Signed integer frequency labels of one axis in FFT order."""
        return np.rint(np.fft.fftfreq(self.N) * self.N).astype(np.int64)

    def freq_sq(self) -> np.ndarray:
        """``|xi|^2`` on the full frequency lattice."""
        xi2 = self.freq_axis() ** 2
        out = np.zeros(self.shape)
        for ax in range(self.n):
            out = out + xi2.reshape([-1 if a == ax else 1 for a in range(self.n)])
        return out

    def refine(self, factor: int = 2) -> "GridSpec":
        """Same period, ``factor`` times more points per axis."""
        return GridSpec(self.n, self.N * factor, self.L)

    def to_dict(self) -> dict:
        return {"n": self.n, "N": self.N, "L": self.L}


def _check_values(spec: GridSpec, arr, what: str) -> np.ndarray:
    arr = np.asarray(arr, dtype=np.complex128)
    if arr.size != spec.size:
        raise GridError(f"{what} has {arr.size} entries, expected N^n = {spec.size}")
    arr = arr.reshape(spec.shape)
    if not np.all(np.isfinite(arr)):
        bad = np.argwhere(~np.isfinite(arr))[0]
        raise GridError(f"{what} holds a non-finite value at lattice index {tuple(bad)}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Samples of a function on the spatial lattice of ``spec`` (FFT order)."""

    spec: GridSpec
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _check_values(self.spec, self.values, "values"))

    def __add__(self, other: "GridFunction") -> "GridFunction":
        _same_spec(self.spec, other.spec)
        return GridFunction(self.spec, self.values + other.values)

    def __mul__(self, c) -> "GridFunction":
        if isinstance(c, GridFunction):
            _same_spec(self.spec, c.spec)
            return GridFunction(self.spec, self.values * c.values)
        return GridFunction(self.spec, self.values * c)

    __rmul__ = __mul__

    def translate(self, shift: Sequence[int]) -> "GridFunction":
        """Cyclic shift by an integer lattice vector: ``g(x) = f(x - shift*h)``."""
        return GridFunction(self.spec, np.roll(self.values, tuple(shift), axis=tuple(range(self.spec.n))))


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Normalized Fourier coefficients ``F(m / L)`` on the frequency lattice (FFT order)."""

    spec: GridSpec
    coeffs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _check_values(self.spec, self.coeffs, "coeffs"))

    def __add__(self, other: "Spectrum") -> "Spectrum":
        _same_spec(self.spec, other.spec)
        return Spectrum(self.spec, self.coeffs + other.coeffs)

    def __mul__(self, c) -> "Spectrum":
        if isinstance(c, Spectrum):
            _same_spec(self.spec, c.spec)
            return Spectrum(self.spec, self.coeffs * c.coeffs)
        return Spectrum(self.spec, self.coeffs * c)

    __rmul__ = __mul__


@dataclass(frozen=True)
class AnalyticField:
    """A closed-form function evaluated on lattice points.

    ``evaluator`` receives an ``(M, n)`` float array of points and returns ``M``
    (complex) values.
    """

    evaluator: Callable[[np.ndarray], np.ndarray]
    side: Literal["spatial", "frequency"] = "spatial"
    label: str = field(default="", compare=False)

    def __post_init__(self):
        if self.side not in ("spatial", "frequency"):
            raise GridError(f"side must be 'spatial' or 'frequency', got {self.side!r}")

    def __call__(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return np.asarray(self.evaluator(pts))


def _same_spec(a: GridSpec, b: GridSpec):
    if a != b:
        raise GridError(f"grid mismatch: {a} vs {b}")


def lattice_points(axis: np.ndarray, n: int, start: int = 0, stop: int | None = None) -> np.ndarray:
    """Rows ``start:stop`` of the flattened ``n``-fold product of ``axis`` (C order)."""
    N = axis.size
    stop = N**n if stop is None else stop
    flat = np.arange(start, stop, dtype=np.int64)
    idx = np.unravel_index(flat, (N,) * n)
    return np.stack([axis[i] for i in idx], axis=-1)


def sample(field: AnalyticField, axis: np.ndarray, n: int, chunk: int = 1 << 20) -> np.ndarray:
    """Evaluate ``field`` on the product lattice of ``axis``; returns an ``n``-d array."""
    N = axis.size
    total = N**n
    out = np.empty(total, dtype=np.complex128)
    for a in range(0, total, chunk):
        b = min(a + chunk, total)
        vals = np.asarray(field.evaluator(lattice_points(axis, n, a, b)), dtype=np.complex128)
        out[a:b] = np.broadcast_to(vals, (b - a,))
    bad = ~np.isfinite(out)
    if bad.any():
        j = int(np.flatnonzero(bad)[0])
        pt = lattice_points(axis, n, j, j + 1)[0]
        raise GridError(f"evaluator returned a non-finite value at lattice point {pt.tolist()}")
    return out.reshape((N,) * n)


def discretize(field: AnalyticField, spec: GridSpec):
    """Sample ``field`` on the spatial or frequency lattice of ``spec``.

    Returns
    -------
    GridFunction or Spectrum
        According to ``field.side``.
    """
    if field.side == "spatial":
        return GridFunction(spec, sample(field, spec.axis(), spec.n))
    return Spectrum(spec, sample(field, spec.freq_axis(), spec.n))


def dft(f: GridFunction) -> Spectrum:
    """Normalized forward transform ``h^n * sum_j f(x_j) exp(-2 pi i x_j . xi_m)``."""
    spec = f.spec
    return Spectrum(spec, np.fft.fftn(f.values) * spec.h**spec.n)


def idft(s: Spectrum) -> GridFunction:
    """Exact inverse of :func:`dft`."""
    spec = s.spec
    return GridFunction(spec, np.fft.ifftn(s.coeffs) / spec.h**spec.n)


def tensor_product(factors: Sequence[GridFunction]) -> GridFunction:
    """``(f_1 x ... x f_m)(x^1, ..., x^m) = prod_j f_j(x^j)`` on ``R^{md}``."""
    if len(factors) == 0:
        raise GridError("tensor_product needs at least one factor")
    spec = factors[0].spec
    for f in factors[1:]:
        _same_spec(spec, f.spec)
    m = len(factors)
    n = m * spec.n
    if n > MAX_DIM:
        raise DimensionBudgetError(f"tensor dimension m*d = {n} exceeds {MAX_DIM}")
    out = factors[0].values
    for f in factors[1:]:
        out = np.multiply.outer(out, f.values)
    return GridFunction(GridSpec(n, spec.N, spec.L), out)


def lp_norm(f: GridFunction, p: float) -> float:
    """Riemann-sum ``L^p`` norm ``(h^n sum |f|^p)^{1/p}``; lattice max for ``p = inf``."""
    return weighted_lp(np.abs(f.values), f.spec.h ** f.spec.n, p)


def weighted_lp(a: np.ndarray, w: float, p: float) -> float:
    """``(w * sum a^p)^{1/p}`` for nonnegative ``a``; ``max a`` when ``p`` is infinite."""
    p = float(p)
    if not p >= 1:
        raise ExponentError(f"exponent must lie in [1, inf], got {p}")
    if np.isinf(p):
        return float(np.max(a)) if a.size else 0.0
    if p == 2:
        return float(np.sqrt(w * np.sum(a * a)))
    if p == 1:
        return float(w * np.sum(a))
    top = float(np.max(a)) if a.size else 0.0
    if top == 0.0:
        return 0.0
    # scale out the max to avoid overflow for large p
    return float(top * (w * np.sum((a / top) ** p)) ** (1.0 / p))


def sobolev_norm(f, s: float) -> float:
    """``L^2_s`` norm: ``sqrt((1/L)^n sum (1+|xi|^2)^s |F(xi)|^2)``.

    Accepts a :class:`GridFunction` or a :class:`Spectrum`.
    """
    sp = f if isinstance(f, Spectrum) else dft(f)
    spec = sp.spec
    w = (1.0 + spec.freq_sq()) ** s
    return float(np.sqrt(spec.dxi**spec.n * np.sum(w * np.abs(sp.coeffs) ** 2)))


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based generator keyed by ``seed``."""
    return np.random.Generator(np.random.Philox(key=int(seed) & ((1 << 64) - 1)))


def random_spectrum(spec: GridSpec, seed: int, band: float | None = None, width: float | None = None) -> Spectrum:
    """Random-phase spectrum with a Gaussian envelope, band-limited to ``|xi_i| < band``.

    Parameters
    ----------
    band : float, optional
        Per-axis frequency cap; defaults to the Nyquist value ``N / (2L)``.
    width : float, optional
        Envelope width; defaults to ``band / 2``.
    """
    band = spec.N / (2 * spec.L) if band is None else float(band)
    width = band / 2 if width is None else float(width)
    rng = make_rng(seed)
    z = rng.standard_normal(spec.shape) + 1j * rng.standard_normal(spec.shape)
    xi = spec.freq_axis()
    mask1 = (np.abs(xi) < band).astype(float)
    env = np.exp(-spec.freq_sq() / (2 * width**2))
    for ax in range(spec.n):
        env = env * mask1.reshape([-1 if a == ax else 1 for a in range(spec.n)])
    return Spectrum(spec, z * env)


def random_field(spec: GridSpec, seed: int, band: float | None = None, width: float | None = None) -> GridFunction:
    """Spatial counterpart of :func:`random_spectrum`."""
    return idft(random_spectrum(spec, seed, band, width))


def gaussian(spec: GridSpec, a: float = 1.0) -> GridFunction:
    """``exp(-pi a |x|^2)`` sampled on ``spec``."""
    x2 = np.zeros(spec.shape)
    x = spec.axis() ** 2
    for ax in range(spec.n):
        x2 = x2 + x.reshape([-1 if b == ax else 1 for b in range(spec.n)])
    return GridFunction(spec, np.exp(-np.pi * a * x2))


# -- binary grid files -------------------------------------------------------


def save_grid(path, obj) -> None:
    """Write a :class:`GridFunction` or :class:`Spectrum` to the binary grid format."""
    side = "spatial" if isinstance(obj, GridFunction) else "frequency"
    arr = obj.values if side == "spatial" else obj.coeffs
    header = json.dumps({**obj.spec.to_dict(), "side": side, "dtype": "complex128-le"}).encode()
    with open(path, "wb") as fh:
        fh.write(_MAGIC + struct.pack("<I", _VERSION))
        fh.write(struct.pack("<I", len(header)))
        fh.write(header)
        fh.write(np.ascontiguousarray(arr, dtype="<c16").tobytes())


def load_grid(path):
    """Read a file written by :func:`save_grid`."""
    with open(path, "rb") as fh:
        raw = fh.read()
    buf = io.BytesIO(raw)
    head = buf.read(16)
    if len(head) != 16 or head[:12] != _MAGIC:
        raise GridError(f"{path}: not a grid file (bad magic)")
    (ver,) = struct.unpack("<I", head[12:])
    if ver != _VERSION:
        raise GridError(f"{path}: unsupported version {ver}")
    (hlen,) = struct.unpack("<I", buf.read(4))
    meta = json.loads(buf.read(hlen).decode())
    if meta.get("dtype") != "complex128-le":
        raise GridError(f"{path}: unsupported dtype {meta.get('dtype')!r}")
    spec = GridSpec(int(meta["n"]), int(meta["N"]), float(meta["L"]))
    data = np.frombuffer(buf.read(), dtype="<c16")
    if data.size != spec.size:
        raise GridError(f"{path}: payload holds {data.size} values, expected {spec.size}")
    data = data.astype(np.complex128).reshape(spec.shape)
    return GridFunction(spec, data) if meta["side"] == "spatial" else Spectrum(spec, data)


def refine_function(f, factor: int = 2):
    """Spectral zero-padding onto a grid with ``factor`` times more points.

    Coefficients keep their values, so band-limited functions are reproduced
    exactly.  Accepts a :class:`GridFunction` or :class:`Spectrum` and returns
    the same kind.
    """
    S = f if isinstance(f, Spectrum) else dft(f)
    spec = S.spec
    new = spec.refine(factor)
    idx = spec.freq_index_axis() % new.N
    out = np.zeros(new.shape, dtype=np.complex128)
    out[np.ix_(*([idx] * spec.n))] = S.coeffs
    out = Spectrum(new, out)
    return out if isinstance(f, Spectrum) else idft(out)
