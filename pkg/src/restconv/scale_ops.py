"""Littlewood-Paley bands, decay-exponent fits, dilations and maximal averages."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import GridError, KernelError
from .grid import AnalyticField, GridFunction, GridSpec, Spectrum, dft, idft, lp_norm
from .kernels import KernelHandle
from .mixed_norm import lambda_norm
from .reports import VerificationReport
from .subspace import Subspace

# transition of the low-pass profile: 1 below A, 0 above B
_A, _B = 0.8, 1.0


def _smoothstep(t):
    """C-infinity step: 0 for t <= 0, 1 for t >= 1."""
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        f0 = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)
        f1 = np.where(t < 1, np.exp(-1.0 / np.where(t < 1, 1 - t, 1.0)), 0.0)
    return f0 / (f0 + f1)


def lowpass(s):
    """Smooth radial profile equal to 1 on ``[0, 0.8]`` and 0 on ``[1, inf)``."""
    return 1.0 - _smoothstep((np.asarray(s, dtype=float) - _A) / (_B - _A))


def band_profile(s):
    """Annular profile ``psi(s) = lowpass(s/2) - lowpass(s)``.

    Supported in ``[0.8, 2]`` and identically 1 on ``[1, 1.6]``.
    """
    s = np.asarray(s, dtype=float)
    return lowpass(s / 2) - lowpass(s)


@dataclass(frozen=True)
class LPFamily:
    """Dyadic partition ``psi0(|xi|) + sum_{j>=1} psi(2^{-j}|xi|) = 1``.

    ``psi0(s) = lowpass(s/2)`` is supported in ``|xi| <= 2``.
    """

    j_max: int = 8

    @property
    def psi0(self) -> AnalyticField:
        return AnalyticField(lambda xi: lowpass(np.linalg.norm(xi, axis=-1) / 2), "frequency", "psi0")

    @property
    def psi(self) -> AnalyticField:
        return AnalyticField(lambda xi: band_profile(np.linalg.norm(xi, axis=-1)), "frequency", "psi")

    def window(self, j: int, radius):
        """Band-``j`` weight at radius ``|xi|``."""
        if not 0 <= j <= self.j_max:
            raise GridError(f"band {j} outside 0..{self.j_max}")
        r = np.asarray(radius, dtype=float)
        return lowpass(r / 2) if j == 0 else band_profile(r / 2.0**j)

    @classmethod
    def for_spec(cls, spec: GridSpec) -> "LPFamily":
        """Enough bands to telescope to 1 on the whole frequency lattice of ``spec``."""
        rmax = np.sqrt(spec.n) * spec.N / (2 * spec.L)
        j = max(1, int(np.ceil(np.log2(max(rmax, 1.0) / _A))))
        return cls(j)


def _radius(spec: GridSpec) -> np.ndarray:
    return np.sqrt(spec.freq_sq())


def lp_component(F: Spectrum, fam: LPFamily, j: int) -> Spectrum:
    """``psi(2^{-j}|xi|) F_hat``; ``j = 0`` uses ``psi0``."""
    return Spectrum(F.spec, F.coeffs * fam.window(j, _radius(F.spec)))


# -- decay fits ----------------------------------------------------------------------


@dataclass
class DecayFit:
    """Least-squares line through ``(x, log2 y)``; ``gamma = -slope``.

    ``x`` is the band index for Littlewood-Paley fits and ``log2 lambda`` for
    oscillatory scans.
    """

    j_values: list
    norms: list
    slope: float
    intercept: float
    r2: float
    extra: dict = field(default_factory=dict)

    @property
    def gamma(self) -> float:
        return -self.slope

    def to_dict(self) -> dict:
        d = asdict(self)
        d["gamma"] = self.gamma
        return d

    @classmethod
    def fit(cls, x, y, **extra) -> "DecayFit":
        x = np.asarray(x, dtype=float)
        ly = np.log2(np.asarray(y, dtype=float))
        A = np.vstack([x, np.ones_like(x)]).T
        (slope, icpt), *_ = np.linalg.lstsq(A, ly, rcond=None)
        res = ly - (slope * x + icpt)
        tot = np.sum((ly - ly.mean()) ** 2)
        r2 = 1.0 - float(np.sum(res**2) / tot) if tot > 0 else 1.0
        return cls(x.tolist(), list(map(float, y)), float(slope), float(icpt), float(np.clip(r2, 0.0, 1.0)), dict(extra))


def _fiber_members(H: Subspace, base: np.ndarray, L: float, rmax: float) -> np.ndarray:
    """Integer frequency vectors (units of ``1/L``) of the fiber over ``base`` inside ``|zeta| <= rmax``."""
    R = int(np.ceil(rmax * L))
    if H.kind == "coordinate":
        g = np.arange(-R, R + 1)
        free = np.stack([a.ravel() for a in np.meshgrid(*([g] * H.codim), indexing="ij")], axis=-1)
        mem = np.concatenate([np.broadcast_to(base, (free.shape[0], H.k)), free], axis=1)
    else:
        m, d = H.m, H.d
        g = np.arange(-R, R + 1)
        free = np.stack([a.ravel() for a in np.meshgrid(*([g] * ((m - 1) * d)), indexing="ij")], axis=-1)
        blocks = [free[:, j * d : (j + 1) * d] for j in range(m - 1)]
        last = base[None, :] - sum(blocks)
        mem = np.concatenate(blocks + [last], axis=1)
    r2 = np.sum(mem.astype(float) ** 2, axis=1) / L**2
    return mem[r2 <= rmax * rmax]


def fiber_band_norms(kernel: KernelHandle, H: Subspace, L: float, fam: LPFamily, j_values, bases=None, gradient: bool = False, chunk: int = 1 << 20) -> np.ndarray:
    """``Lambda_{2,inf}`` norms of band pieces of ``kernel`` on an unbounded lattice of spacing ``1/L``.

    Fibers are enumerated directly (no periodic wrap) up to the outer edge of
    the largest band.  The supremum runs over the integer ``bases`` (default:
    a ray along the first axis of ``H*``).  With ``gradient=True`` the
    modulus of the frequency gradient of each band piece is used, by central
    differences with step ``1/(4L)``.
    """
    j_values = list(j_values)
    rmax = 2.0 * 2.0 ** max(j_values)
    if bases is None:
        top = int(rmax * L)
        steps = sorted({0, 1, 2} | {2**i for i in range(int(np.log2(max(top, 1))) + 1)})
        bases = [np.eye(H.k, dtype=np.int64)[0] * s for s in steps if s <= top]
    w = H.inner_weight(L)
    best = np.zeros(len(j_values))
    step = 1.0 / (4 * L)

    def piece(z, j):
        return kernel.evaluate(z) * fam.window(j, np.linalg.norm(z, axis=-1))

    for b in bases:
        b = np.asarray(b, dtype=np.int64).reshape(H.k)
        mem = _fiber_members(H, b, L, rmax) / L
        acc = np.zeros(len(j_values))
        for a in range(0, mem.shape[0], chunk):
            z = mem[a : a + chunk]
            if not gradient:
                kv = np.abs(kernel.evaluate(z)) ** 2
                rad = np.linalg.norm(z, axis=-1)
                for i, j in enumerate(j_values):
                    acc[i] += np.sum(kv * fam.window(j, rad) ** 2)
            else:
                for i, j in enumerate(j_values):
                    g2 = 0.0
                    for ax in range(H.n):
                        e = np.zeros(H.n)
                        e[ax] = step
                        g2 = g2 + np.abs((piece(z + e, j) - piece(z - e, j)) / (2 * step)) ** 2
                    acc[i] += np.sum(g2)
        best = np.maximum(best, np.sqrt(w * acc))
    return best


def gamma_fit(nu: KernelHandle, H: Subspace, fam: LPFamily, j_range, spec: GridSpec | None = None, L: float | None = None, bases=None, gradient: bool = False) -> DecayFit:
    """Fit ``||nu_j||_{Lambda_{2,inf}} ~ 2^{-j gamma}`` over the bands ``j_range``.

    With ``spec`` the band pieces are sampled on its periodic lattice and the
    bands must satisfy ``2^{j+1} <= N/(2L)``.  Otherwise fibers are enumerated
    on an unbounded lattice of spacing ``1/L``.
    """
    js = list(j_range)
    if len(js) < 3:
        raise GridError("gamma_fit needs at least 3 bands")
    if spec is not None:
        cap = spec.N / (2 * spec.L)
        bad = [j for j in js if 2.0 ** (j + 1) > cap]
        if bad:
            raise GridError(f"bands {bad} are not resolved: need 2^(j+1) <= N/(2L) = {cap:g}")
        S = nu.spectrum(spec)
        norms = [lambda_norm(lp_component(S, fam, j), H, r=2, p=np.inf) for j in js]
        route = "lattice"
    else:
        if L is None:
            raise GridError("gamma_fit needs a grid spec or a lattice period L")
        norms = fiber_band_norms(nu, H, L, fam, js, bases, gradient=gradient)
        route = "fiber"
    return DecayFit.fit(js, norms, route=route, kernel=nu.to_dict(), subspace=H.to_dict(), gradient=gradient)


def predicted_gamma(alpha: float, m: int, d: int) -> float:
    """Band decay implied by pointwise decay ``(1+|xi|)^{-alpha}``: ``alpha - (m-1)d/2``."""
    return alpha - (m - 1) * d / 2.0


def maximal_exponent_range(l: int, gamma: float) -> float:
    """Lower endpoint ``(2l + 2gamma - 1)/(l + 2gamma - 1)`` of the bilinear maximal range."""
    return (2 * l + 2 * gamma - 1) / (l + 2 * gamma - 1)


# -- dilations and maximal operators ---------------------------------------------------


def dilate_spectrum(G: KernelHandle, t: float) -> KernelHandle:
    """Spectrum ``xi -> G_hat(t xi)`` of ``G_t(x) = t^{-n} G(x/t)``."""
    if not G.is_analytic:
        raise KernelError("dilation needs an analytic spectrum; deposited spectra are not interpolated")
    if not t > 0:
        raise KernelError(f"dilation needs t > 0, got {t}")
    ev = G.analytic.evaluator
    return KernelHandle(
        G.n,
        AnalyticField(lambda xi: ev(t * np.asarray(xi)), "frequency", f"{G.label}@t={t:g}"),
        label=G.label,
        params={**G.params, "dilation": float(t)},
    )


def t_grid(t_min: float, t_max: float, per_octave: int) -> np.ndarray:
    """Geometric grid ``t_min 2^{k/per_octave}`` up to ``t_max`` (endpoint included)."""
    if not (t_min > 0 and t_max >= t_min):
        raise GridError(f"empty t-range [{t_min}, {t_max}]")
    if per_octave < 1:
        raise GridError("per_octave must be positive")
    k = int(np.floor(per_octave * np.log2(t_max / t_min) + 1e-9))
    ts = t_min * 2.0 ** (np.arange(k + 1) / per_octave)
    if ts[-1] < t_max * (1 - 1e-12):
        ts = np.append(ts, t_max)
    return ts


def maximal_apply(K: KernelHandle, f_list, t_min: float, t_max: float, per_octave: int = 8, prune_tol: float = 0.0, pairs=None) -> GridFunction:
    """Pointwise ``max_t |B_t(f_1, ..., f_m)|`` over the geometric grid of dilations."""
    from .conv_ops import DiagonalPairs

    if not K.is_analytic:
        raise KernelError("maximal_apply needs an analytic kernel")
    if per_octave < 4 and t_max > t_min:
        raise GridError("per_octave must be at least 4")
    pairs = DiagonalPairs(f_list, prune_tol) if pairs is None else pairs
    out = None
    for t in t_grid(t_min, t_max, per_octave):
        Bt = np.abs(idft(pairs.apply(lambda xi: K.evaluate(t * xi))).values)
        out = Bt if out is None else np.maximum(out, Bt)
    return GridFunction(f_list[0].spec, out)


def maximal_l2_ratio(K: KernelHandle, f_list, t_min, t_max, per_octave=8, prune_tol=0.0) -> float:
    """``||max_t |B_t|||_2 / prod ||f_j||_2``."""
    M = maximal_apply(K, f_list, t_min, t_max, per_octave, prune_tol)
    return lp_norm(M, 2) / float(np.prod([lp_norm(f, 2) for f in f_list]))


def maximal_l2_decay_per_band(K: KernelHandle, H: Subspace, fam: LPFamily, j: int, f_seeds, R: float = 1.0, per_octave: int = 8) -> float:
    """Largest ``||sup_{t in [R, 2R]} |(F^j * K_t)|_H| ||_2 / ||F^j||_2`` over seeds.

    ``F^j`` is the band-``j`` piece of each seed (a function on ``R^n``);
    the restriction is taken to the diagonal or coordinate ``H``.
    """
    from .conv_ops import conv_restrict, restricted_lr_norm

    ts = t_grid(R, 2 * R, per_octave)
    best = 0.0
    for F in f_seeds:
        Fj = idft(lp_component(dft(F), fam, j))
        nF = lp_norm(Fj, 2)
        if nF == 0:
            continue
        sup = None
        for t in ts:
            g = np.abs(conv_restrict(Fj, dilate_spectrum(K, t), H).values)
            sup = g if sup is None else np.maximum(sup, g)
        val = restricted_lr_norm(GridFunction(GridSpec(H.k, F.spec.N, F.spec.L), sup), H, 2) / nF
        best = max(best, val)
    return best


# -- calculus lemma ------------------------------------------------------------------


def ftc_lemma_check(F, R: float = 1.0, samples: int = 4096, tol: float = 1e-6) -> VerificationReport:
    """``sup_{[R,2R]} |F|^2 <= |F(R)|^2 + 2 ||F||_2 ||F'||_2`` on ``[R, 2R]``.

    ``F`` is a callable (sampled on ``samples`` points) or an array of samples
    on a uniform grid of ``[R, 2R]``.  ``F'`` uses second-order differences and
    the integrals the trapezoid rule.
    """
    if callable(F):
        t = np.linspace(R, 2 * R, samples)
        v = np.asarray(F(t))
    else:
        v = np.asarray(F)
        t = np.linspace(R, 2 * R, v.size)
    if v.size < 1024:
        raise GridError(f"ftc_lemma_check needs at least 1024 samples, got {v.size}")
    dv = np.gradient(v, t, edge_order=2)
    i0 = np.trapezoid(np.abs(v) ** 2, t)
    i1 = np.trapezoid(np.abs(dv) ** 2, t)
    lhs = float(np.max(np.abs(v) ** 2))
    rhs = float(np.abs(v[0]) ** 2 + 2 * np.sqrt(i0 * i1))
    return VerificationReport("ftc_lemma", lhs, rhs, params={"R": R, "samples": int(v.size)}, tol=tol)


def random_trig_poly(seed: int, degree: int = 8, max_freq: float = 20.0):
    """Random complex trigonometric polynomial ``t -> sum_k c_k exp(i w_k t)``."""
    from .grid import make_rng

    rng = make_rng(seed)
    c = rng.standard_normal(degree) + 1j * rng.standard_normal(degree)
    w = rng.uniform(-max_freq, max_freq, degree)
    return lambda t: np.exp(1j * np.outer(np.asarray(t, dtype=float), w)) @ c
