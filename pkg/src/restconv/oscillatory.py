"""Bilinear oscillatory integral operators and their surface-transform bound.

``M(f, g)(x) = sum_{u,v} f(x-u) g(x-v) exp(2 pi i lam phi(u,v)) psi(u,v) h^{2d}``
on the periodic lattice. Phases are restricted to the family
``phi(u, v) = p(u) + q(v) + u^T C v`` with polynomial ``p, q``: every row of
the kernel is then a modulated copy of one base row, and the incremental phase
``delta_z phi`` splits into a ``u`` part and a ``v`` part.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import fft as sfft

from .errors import GridError, ResolutionGuardError
from .grid import GridFunction, GridSpec, random_field
from .reports import VerificationReport
from .scale_ops import DecayFit

DEFAULT_WIDTH = 1.0


# -- polynomials ------------------------------------------------------------


@dataclass(frozen=True)
class Poly:
    """Polynomial on ``R^d`` as a tuple of ``(coef, exponents)`` monomials."""

    d: int
    terms: tuple = ()

    def __post_init__(self):
        terms = tuple((float(c), tuple(int(e) for e in ex)) for c, ex in self.terms)
        for _, ex in terms:
            if len(ex) != self.d or min(ex, default=0) < 0:
                raise ValueError(f"monomial exponents {ex} do not match dimension {self.d}")
        object.__setattr__(self, "terms", terms)

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape[:-1])
        for c, ex in self.terms:
            out = out + c * np.prod(x ** np.asarray(ex), axis=-1)
        return out

    def _deriv(self, i: int) -> "Poly":
        terms = []
        for c, ex in self.terms:
            if ex[i] > 0:
                e = list(ex)
                e[i] -= 1
                terms.append((c * ex[i], tuple(e)))
        return Poly(self.d, tuple(terms))

    def gradient(self, x) -> np.ndarray:
        return np.stack([self._deriv(i)(x) for i in range(self.d)], axis=-1)

    def hessian(self, x) -> np.ndarray:
        rows = [np.stack([self._deriv(i)._deriv(j)(x) for j in range(self.d)], axis=-1) for i in range(self.d)]
        return np.stack(rows, axis=-2)

    def to_list(self) -> list:
        return [[c, list(ex)] for c, ex in self.terms]


# -- phases and amplitudes --------------------------------------------------


@dataclass(frozen=True)
class Phase:
    """``phi(u, v) = p(u) + q(v) + u^T C v`` on ``R^d x R^d``."""

    d: int
    p: Poly
    q: Poly
    C: np.ndarray
    label: str = "phase"

    def __post_init__(self):
        C = np.array(self.C, dtype=float).reshape(self.d, self.d)
        C.setflags(write=False)
        object.__setattr__(self, "C", C)
        if self.p.d != self.d or self.q.d != self.d:
            raise ValueError("polynomial dimension does not match phase dimension")

    def evaluate(self, u, v) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        return self.p(u) + self.q(v) + np.einsum("...i,ij,...j->...", u, self.C, v)

    __call__ = evaluate

    def gradient(self, u, v) -> np.ndarray:
        """``(grad_u phi, grad_v phi)`` stacked along the last axis (length ``2d``)."""
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        gu = self.p.gradient(u) + v @ self.C.T
        gv = self.q.gradient(v) + u @ self.C
        return np.concatenate([gu, gv], axis=-1)

    def hessian(self, u, v) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        Hu = self.p.hessian(u)
        Hv = self.q.hessian(v)
        Cb = np.broadcast_to(self.C, Hu.shape)
        top = np.concatenate([Hu, Cb], axis=-1)
        bot = np.concatenate([np.swapaxes(Cb, -1, -2), Hv], axis=-1)
        return np.concatenate([top, bot], axis=-2)

    def transpose(self) -> "Phase":
        """Phase with the roles of ``u`` and ``v`` exchanged."""
        return Phase(self.d, self.q, self.p, self.C.T, self.label + "^T")

    def sample_points(self, width: float = DEFAULT_WIDTH, per_axis: int = 9) -> tuple:
        """``(u, v)`` on a tensor grid covering the amplitude support, vertices included."""
        t = np.linspace(-width, width, per_axis)
        mesh = np.stack(np.meshgrid(*([t] * (2 * self.d)), indexing="ij"), axis=-1).reshape(-1, 2 * self.d)
        return mesh[:, : self.d], mesh[:, self.d :]

    def max_gradient(self, width: float = DEFAULT_WIDTH) -> float:
        u, v = self.sample_points(width, 17 if self.d == 1 else 9)
        return float(np.max(np.linalg.norm(self.gradient(u, v), axis=-1)))

    def fd_consistency(self, width: float = DEFAULT_WIDTH, eps: float = 1e-5) -> float:
        """Largest mismatch between analytic and central-difference derivatives."""
        u, v = self.sample_points(0.9 * width, 5)
        x = np.concatenate([u, v], axis=-1)
        D = 2 * self.d
        err = 0.0
        g = self.gradient(u, v)
        H = self.hessian(u, v)
        for i in range(D):
            e = np.zeros(D)
            e[i] = eps
            xp, xm = x + e, x - e
            fd = (self.evaluate(xp[:, : self.d], xp[:, self.d :]) - self.evaluate(xm[:, : self.d], xm[:, self.d :])) / (2 * eps)
            err = max(err, float(np.max(np.abs(fd - g[:, i]))))
            gp = self.gradient(xp[:, : self.d], xp[:, self.d :])
            gm = self.gradient(xm[:, : self.d], xm[:, self.d :])
            err = max(err, float(np.max(np.abs((gp - gm) / (2 * eps) - H[:, :, i]))))
        return err

    def hessian_degenerate(self, width: float = DEFAULT_WIDTH, tol: float = 1e-8) -> bool:
        """True if ``det`` of the ``2d x 2d`` Hessian nearly vanishes somewhere on the support."""
        u, v = self.sample_points(width, 9 if self.d == 1 else 5)
        det = np.linalg.det(self.hessian(u, v))
        return bool(np.min(np.abs(det)) < tol)

    def to_dict(self) -> dict:
        return {"label": self.label, "d": self.d, "p": self.p.to_list(), "q": self.q.to_list(), "C": self.C.tolist()}

    @classmethod
    def from_dict(cls, obj: dict) -> "Phase":
        d = int(obj["d"])
        C = np.asarray(obj.get("C", np.zeros((d, d))), dtype=float)
        return cls(d, Poly(d, tuple(obj.get("p", ()))), Poly(d, tuple(obj.get("q", ()))), C, obj.get("label", "polynomial"))


def _squares(d: int, signs=None) -> Poly:
    signs = [1.0] * d if signs is None else list(signs)
    return Poly(d, tuple((s, tuple(2 if j == i else 0 for j in range(d))) for i, s in enumerate(signs)))


def morse_phase(u_signs: Sequence[float], v_signs: Sequence[float]) -> Phase:
    """``sum_i s_i u_i^2 + sum_j t_j v_j^2``."""
    d = len(u_signs)
    if len(v_signs) != d:
        raise ValueError("sign lists must have equal length")
    return Phase(d, _squares(d, u_signs), _squares(d, v_signs), np.zeros((d, d)), "morse")


def make_phase(spec, d: int = 1) -> Phase:
    """Phase from a registry label, a JSON string, or a dict.

    Labels: ``dot`` (``u.v``), ``squares`` (``|u|^2 + |v|^2``),
    ``rank-deficient`` (``u_1 v_1``), ``zero``.
    """
    if isinstance(spec, Phase):
        return spec
    if isinstance(spec, dict):
        return Phase.from_dict(spec)
    s = str(spec).strip()
    if s.startswith("{"):
        obj = json.loads(s)
        obj.setdefault("d", d)
        return Phase.from_dict(obj)
    zero = Poly(d)
    if s == "dot":
        return Phase(d, zero, zero, np.eye(d), "dot")
    if s == "squares":
        return Phase(d, _squares(d), _squares(d), np.zeros((d, d)), "squares")
    if s == "rank-deficient":
        C = np.zeros((d, d))
        C[0, 0] = 1.0
        return Phase(d, zero, zero, C, "rank-deficient")
    if s == "zero":
        return Phase(d, zero, zero, np.zeros((d, d)), "zero")
    raise ValueError(f"unknown phase {spec!r}; use dot, squares, rank-deficient, zero or a JSON polynomial")


PHASE_LABELS = ("dot", "squares", "rank-deficient", "zero")


def _bump(s):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = np.abs(s) < 1
    out[inside] = np.exp(-1.0 / (1.0 - s[inside] ** 2))
    return out


_BUMP_MASS = None


def _bump_mass() -> float:
    global _BUMP_MASS
    if _BUMP_MASS is None:
        from scipy.integrate import quad

        _BUMP_MASS = quad(lambda t: float(_bump(t)), -1, 1, epsabs=0, epsrel=1e-12, limit=200)[0]
    return _BUMP_MASS


@dataclass(frozen=True)
class Amplitude:
    """Tensor bump ``psi(u,v) = prod_i b(u_i) prod_i b(v_i)`` of total mass 1.

    ``support_radius`` is the per-coordinate half-width: ``psi`` vanishes
    unless every coordinate of ``(u, v)`` lies in ``(-r, r)``.
    """

    support_radius: float = DEFAULT_WIDTH

    def __post_init__(self):
        if not self.support_radius > 0:
            raise ValueError("support_radius must be positive")

    def profile(self, s) -> np.ndarray:
        """One-dimensional factor ``b``, unit mass on ``R``."""
        r = self.support_radius
        return _bump(np.asarray(s, dtype=float) / r) / (r * _bump_mass())

    def factor(self, x) -> np.ndarray:
        """``prod_i b(x_i)`` over the last axis."""
        return np.prod(self.profile(x), axis=-1)

    def evaluate(self, u, v) -> np.ndarray:
        return self.factor(u) * self.factor(v)

    __call__ = evaluate


# -- incremental phase and resolution guard ---------------------------------


def delta_z_phi(phi: Phase, u, v, z) -> np.ndarray:
    """``phi(u, v) - phi(u - z, v - z)``."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    z = np.asarray(z, dtype=float)
    return phi.evaluate(u, v) - phi.evaluate(u - z, v - z)


def required_N(phi: Phase, amp: Amplitude, lam: float, L: float, n_min: int = 16) -> int:
    """Smallest power of two ``N`` with ``(L/N) lam max|grad phi| < 1/2``."""
    G = abs(lam) * phi.max_gradient(amp.support_radius)
    N = n_min
    while (L / N) * G >= 0.5:
        N *= 2
    return N


def oscillatory_grid(phi: Phase, amp: Amplitude, lam: float, L: float | None = None) -> GridSpec:
    """Lattice passing the resolution guard; period defaults to ``4 r`` so that ``z`` never wraps."""
    L = 4 * amp.support_radius if L is None else float(L)
    return GridSpec(phi.d, required_N(phi, amp, lam, L), L)


def check_guard(phi: Phase, amp: Amplitude, lam: float, spec: GridSpec) -> None:
    """Raise :class:`ResolutionGuardError` if the lattice under-resolves the phase."""
    if spec.n != phi.d:
        raise GridError(f"grid dimension {spec.n} does not match phase dimension {phi.d}")
    G = abs(lam) * phi.max_gradient(amp.support_radius)
    if spec.h * G >= 0.5:
        need = required_N(phi, amp, lam, spec.L)
        raise ResolutionGuardError(
            f"h*lam*max|grad phi| = {spec.h * G:.3g} >= 1/2 at N={spec.N}; need N >= {need} for lam={lam}",
            required_N=need,
        )


# -- operator --------------------------------------------------------------


def _support_indices(spec: GridSpec, r: float) -> np.ndarray:
    """Signed lattice offsets ``j`` with ``|j h| < r`` in each coordinate, shape ``(S^d, d)``."""
    J = int(np.ceil(r / spec.h)) - 1
    if 2 * J + 1 > spec.N:
        raise GridError(f"amplitude support of radius {r} does not fit in period {spec.L}")
    j1 = np.arange(-J, J + 1)
    return np.stack(np.meshgrid(*([j1] * spec.n), indexing="ij"), axis=-1).reshape(-1, spec.n)


def _gather(arr: np.ndarray, offs: np.ndarray, sign: int) -> np.ndarray:
    """Stack of ``arr[(x + sign * j) mod N]`` for each offset row ``j``; shape ``(c, N, ..., N)``."""
    N = arr.shape[0]
    d = arr.ndim
    x = np.arange(N)
    idx = [(x[None, :] + sign * offs[:, a : a + 1]) % N for a in range(d)]
    if d == 1:
        return arr[idx[0]]
    shaped = [ix.reshape((ix.shape[0],) + tuple(N if b == a else 1 for b in range(d))) for a, ix in enumerate(idx)]
    return arr[tuple(shaped)]


def _shift_rows(arr: np.ndarray, s0: int, step: int, n: int) -> np.ndarray:
    """View ``V[c, x] = arr[(x - s0 - c * step) mod N]`` for a 1-D array; needs ``|shift| < N``."""
    N = arr.shape[0]
    win = np.lib.stride_tricks.sliding_window_view(np.concatenate([arr, arr, arr]), N)
    r0 = N - s0
    if step == 0:
        return np.broadcast_to(win[r0], (n, N))
    stop = r0 - n * step
    return win[r0 : (stop if stop >= 0 else None) : -step]


def _skew_sum(Q: np.ndarray, j0: int) -> np.ndarray:
    """``out[y] = sum_c Q[c, (y + j0 + c) mod N]`` for a 2-D array of rows."""
    c, N = Q.shape
    P = np.ascontiguousarray(np.concatenate([Q, Q, Q], axis=1))
    it = P.itemsize
    V = np.lib.stride_tricks.as_strided(P[:, j0 % N :], shape=(c, N), strides=((3 * N + 1) * it, it), writeable=False)
    return V.sum(axis=0)


def _gather_rows(Q: np.ndarray, offs: np.ndarray) -> np.ndarray:
    """``out[c, y] = Q[c, (y + j_c) mod N]``."""
    c, N = Q.shape[0], Q.shape[1]
    d = Q.ndim - 1
    x = np.arange(N)
    idx = [(x[None, :] + offs[:, a : a + 1]) % N for a in range(d)]
    if d == 1:
        return np.take_along_axis(Q, idx[0], axis=1)
    ci = np.arange(c).reshape((c,) + (1,) * d)
    shaped = [ix.reshape((c,) + tuple(N if b == a else 1 for b in range(d))) for a, ix in enumerate(idx)]
    return Q[(ci, *shaped)]


class OscillatoryOperator:
    """Lattice realisation of ``M^lam_phi`` on a fixed grid.

    Row ``i`` of the kernel (offset ``u_i``) is
    ``a_i * B(v) * exp(2 pi i lam (C^T u_i) . v)`` with
    ``a_i = b(u_i) exp(2 pi i lam p(u_i))`` and ``B(v) = b(v) exp(2 pi i lam q(v))``.
    When ``lam L^2 C / N`` is integral the modulation is a cyclic shift of
    ``fft(B)``; otherwise rows are transformed directly.
    """

    def __init__(self, phi: Phase, amp: Amplitude, lam: float, spec: GridSpec, dtype=np.complex128, chunk: int | None = None):
        check_guard(phi, amp, lam, spec)
        self.phi, self.amp, self.lam, self.spec = phi, amp, float(lam), spec
        self.dtype = np.dtype(dtype)
        d, N, h = spec.n, spec.N, spec.h
        self.offs = _support_indices(spec, amp.support_radius)
        u = self.offs * h
        self.a = (amp.factor(u) * np.exp(2j * np.pi * self.lam * phi.p(u))).astype(self.dtype)
        grid = np.stack(np.meshgrid(*([spec.axis()] * d), indexing="ij"), axis=-1)
        self._v = grid
        base = amp.factor(grid) * np.exp(2j * np.pi * self.lam * phi.q(grid))
        self._base = base.astype(self.dtype)
        self._base_hat = sfft.fftn(self._base)
        sh = self.lam * spec.L**2 / N * (self.offs @ phi.C)
        self._shift = np.rint(sh).astype(np.int64)
        self._shift_ok = bool(np.allclose(sh, self._shift, atol=1e-9))
        self.chunk = chunk or max(1, (1 << 22) // N**d)
        # in 1-D the offsets are consecutive, so every gather is a strided view
        self._view1d = d == 1 and self._shift_ok and int(np.max(np.abs(self._shift))) < N
        self._step = int(self._shift[1, 0] - self._shift[0, 0]) if len(self._shift) > 1 else 0

    def _row_hats(self, sl: slice) -> np.ndarray:
        if self._view1d:
            idx = range(len(self.offs))[sl]
            return _shift_rows(self._base_hat, int(self._shift[idx.start, 0]), self._step, len(idx))
        if self._shift_ok:
            return _gather(self._base_hat, self._shift[sl], -1)
        u = self.offs[sl] * self.spec.h
        w = (u @ self.phi.C).reshape((len(u),) + (1,) * self.spec.n + (self.spec.n,))
        mod = np.exp(2j * np.pi * self.lam * np.sum(w * self._v[None], axis=-1))
        return sfft.fftn(self._base[None] * mod.astype(self.dtype), axes=tuple(range(1, self.spec.n + 1)))

    def _rows(self, g_hat: np.ndarray, sl: slice) -> np.ndarray:
        axes = tuple(range(1, self.spec.n + 1))
        return sfft.ifftn(self._row_hats(sl) * g_hat[None], axes=axes, overwrite_x=True)

    def apply(self, f: np.ndarray, g: np.ndarray) -> np.ndarray:
        """``M(f, g)`` on raw value arrays."""
        f = np.asarray(f, dtype=self.dtype)
        g_hat = sfft.fftn(np.asarray(g, dtype=self.dtype))
        out = np.zeros(self.spec.shape, dtype=self.dtype)
        for s in range(0, len(self.offs), self.chunk):
            sl = slice(s, s + self.chunk)
            R = self._rows(g_hat, sl)
            if self._view1d:
                idx = range(len(self.offs))[sl]
                R *= _shift_rows(f, int(self.offs[idx.start, 0]), 1, len(idx))
                out += self.a[sl] @ R
                continue
            a = self.a[sl].reshape((-1,) + (1,) * self.spec.n)
            out += np.sum(a * _gather(f, self.offs[sl], -1) * R, axis=0)
        return out * self.spec.h ** (2 * self.spec.n)

    def adjoint_f(self, m: np.ndarray, g: np.ndarray) -> np.ndarray:
        """Adjoint of ``f -> M(f, g)`` applied to ``m``."""
        m = np.asarray(m, dtype=self.dtype)
        g_hat = sfft.fftn(np.asarray(g, dtype=self.dtype))
        out = np.zeros(self.spec.shape, dtype=self.dtype)
        for s in range(0, len(self.offs), self.chunk):
            sl = slice(s, s + self.chunk)
            R = self._rows(g_hat, sl)
            a = self.a[sl].reshape((-1,) + (1,) * self.spec.n)
            Q = np.conj(a * R) * m[None]
            if self._view1d:
                out += _skew_sum(Q, int(self.offs[sl][0, 0]))
            else:
                out += np.sum(_gather_rows(Q, self.offs[sl]), axis=0)
        return out * self.spec.h ** (2 * self.spec.n)

    def norm(self, x: np.ndarray) -> float:
        return float(np.sqrt(self.spec.h**self.spec.n * np.sum(np.abs(x) ** 2)))

    def ratio(self, f: np.ndarray, g: np.ndarray) -> float:
        return self.norm(self.apply(f, g)) / (self.norm(f) * self.norm(g))


def m_lambda_apply(phi: Phase, amp: Amplitude, lam: float, f: GridFunction, g: GridFunction) -> GridFunction:
    """``M^lam_phi(f, g)`` by lattice quadrature over ``supp psi``."""
    if f.spec != g.spec:
        raise GridError("f and g live on different grids")
    op = OscillatoryOperator(phi, amp, lam, f.spec)
    return GridFunction(f.spec, op.apply(f.values, g.values))


# -- surface transform ------------------------------------------------------


def _half_factor(poly: Poly, C: np.ndarray, amp: Amplitude, lam: float, pts: np.ndarray, Z: np.ndarray, h: float) -> np.ndarray:
    """``h^d sum_u b(u) b(u-z) exp(-2 pi i lam (P(u) - P(u-z) + u^T C z))`` for each ``z``."""
    D = pts[None, :, :] - Z[:, None, :]
    w = amp.factor(pts)[None, :] * amp.factor(D)
    ph = poly(pts)[None, :] - poly(D) + Z @ (pts @ C).T
    return h ** pts.shape[1] * np.sum(w * np.exp(-2j * np.pi * lam * ph), axis=1)


def sigma_profile(phi: Phase, amp: Amplitude, lam: float, spec: GridSpec, chunk: int = 1 << 21) -> np.ndarray:
    """Lattice values of ``W(z) = h^{2d} sum_{u,v} psi(u,v) psi(u-z,v-z) exp(-2 pi i lam delta_z phi)``.

    Returned in FFT order on the full ``z`` torus.
    """
    check_guard(phi, amp, lam, spec)
    r = amp.support_radius
    if spec.L < 4 * r - 1e-12:
        raise GridError(f"period {spec.L} must be at least {4 * r} so that translates of the support do not wrap")
    d, N, h = spec.n, spec.N, spec.h
    pts = _support_indices(spec, r) * h
    zj = _support_indices(spec, 2 * r) if 4 * r < spec.L else np.stack(
        np.meshgrid(*([np.arange(-(N // 2), N // 2)] * d), indexing="ij"), axis=-1).reshape(-1, d)
    Zall = zj * h
    symmetric = phi.p == phi.q and np.array_equal(phi.C, phi.C.T)
    W = np.zeros(spec.shape, dtype=complex)
    step = max(1, chunk // max(1, len(pts)))
    for s in range(0, len(Zall), step):
        Z = Zall[s : s + step]
        A = _half_factor(phi.p, phi.C, amp, lam, pts, Z, h)
        B = A if symmetric else _half_factor(phi.q, phi.C.T, amp, lam, pts, Z, h)
        quad = np.einsum("ci,ij,cj->c", Z, phi.C, Z)
        idx = tuple((zj[s : s + step, a] % N) for a in range(d))
        W[idx] = np.exp(2j * np.pi * lam * quad) * A * B
    return W


def sigma_phi_hat_lattice(phi: Phase, amp: Amplitude, lam: float, spec: GridSpec) -> np.ndarray:
    """``sigma_hat(xi, lam)`` at every lattice frequency ``xi = k / L`` (FFT order)."""
    return spec.h**spec.n * np.fft.fftn(sigma_profile(phi, amp, lam, spec))


def sigma_phi_hat(phi: Phase, amp: Amplitude, xi, lam: float, spec: GridSpec | None = None) -> np.ndarray:
    """``int int int exp(-2 pi i (xi.z + lam delta_z phi)) psi(u,v) psi(u-z,v-z) du dv dz``.

    Parameters
    ----------
    xi : array_like, shape (d,) or (M, d)
        Arbitrary frequencies.
    spec : GridSpec, optional
        Quadrature lattice; defaults to :func:`oscillatory_grid`.
    """
    spec = oscillatory_grid(phi, amp, lam) if spec is None else spec
    W = sigma_profile(phi, amp, lam, spec)
    xi = np.atleast_2d(np.asarray(xi, dtype=float))
    zs = np.stack(np.meshgrid(*([spec.axis()] * spec.n), indexing="ij"), axis=-1).reshape(-1, spec.n)
    Wf = W.reshape(-1)
    keep = Wf != 0
    out = spec.h**spec.n * np.exp(-2j * np.pi * xi @ zs[keep].T) @ Wf[keep]
    return out if out.size > 1 else out[0]


def oscillatory_bound(phi: Phase, amp: Amplitude, lam: float, spec: GridSpec) -> float:
    """``sqrt(sup_xi |sigma_hat(xi, lam)|)`` over the lattice frequencies."""
    return float(np.sqrt(np.max(np.abs(sigma_phi_hat_lattice(phi, amp, lam, spec)))))


def verify_oscillatory_bound(phi: Phase, amp: Amplitude, lam: float, f: GridFunction, g: GridFunction, tol: float = 1e-6) -> VerificationReport:
    """``||M(f,g)||_2`` against ``sqrt(sup |sigma_hat|) ||f||_2 ||g||_2``."""
    op = OscillatoryOperator(phi, amp, lam, f.spec)
    lhs = op.norm(op.apply(f.values, g.values))
    bound = oscillatory_bound(phi, amp, lam, f.spec)
    rhs = bound * op.norm(f.values) * op.norm(g.values)
    return VerificationReport("oscillatory", lhs, rhs, {"phase": phi.label, "lambda": lam, "d": phi.d, "N": f.spec.N, "L": f.spec.L}, tol=tol, extra={"bound": bound})


# -- norm proxy and decay scan ----------------------------------------------


def operator_norm_proxy(phi: Phase, amp: Amplitude, lam: float, spec: GridSpec, seeds: int = 50, refinements: int = 20,
                        band: float | None = None, rtol: float = 1e-7, seed0: int = 0, fast: bool = True) -> dict:
    """Certified lower bound for the bilinear operator norm.

    Best Rayleigh ratio over ``seeds`` random band-limited pairs, then
    alternating power iteration in ``f`` and ``g`` from the best pair. With
    ``fast`` the search runs in single precision; the final ratio is always
    recomputed in double precision.
    """
    dt = np.complex64 if fast else np.complex128
    op = OscillatoryOperator(phi, amp, lam, spec, dtype=dt)
    opT = OscillatoryOperator(phi.transpose(), amp, lam, spec, dtype=dt)
    ratios = []
    best = (-1.0, None, None)
    for s in range(seeds):
        f = random_field(spec, seed0 + 2 * s, band).values
        g = random_field(spec, seed0 + 2 * s + 1, band).values
        r = op.ratio(f, g)
        ratios.append(r)
        if r > best[0]:
            best = (r, f, g)
    _, f, g = best
    f = f / op.norm(f)
    g = g / op.norm(g)
    history = []
    prev = None
    for _ in range(refinements):
        f = op.adjoint_f(op.apply(f, g), g)
        f = f / op.norm(f)
        g = opT.adjoint_f(opT.apply(g, f), f)
        g = g / op.norm(g)
        cur = op.ratio(f, g)
        history.append(cur)
        if prev is not None and abs(cur - prev) <= rtol * cur:
            break
        prev = cur
    final = OscillatoryOperator(phi, amp, lam, spec).ratio(f.astype(complex), g.astype(complex))
    return {"estimate": final, "random_max": float(np.max(ratios)),
            "random_ratios": ratios, "history": history, "f": f, "g": g}


def lambda_decay_scan(phi: Phase, amp: Amplitude | None = None, d: int | None = None, lambdas=(16, 32, 64, 128, 256, 512, 1024),
                      seeds: int = 50, refinements: int = 20, L: float | None = None, fast: bool = True) -> DecayFit:
    """Fit ``log2`` of the norm proxies against ``log2 lam``.

    The returned fit is for the lower-bound proxy. ``extra`` carries the fit of
    the surface-transform upper bound, the per-``lam`` bound ratios (lower over
    upper), and a ``degenerate`` flag from sampling the Hessian determinant.
    """
    phi = make_phase(phi, d or 1)
    amp = Amplitude() if amp is None else amp
    if d is not None and d != phi.d:
        raise ValueError(f"phase dimension {phi.d} does not match d={d}")
    degenerate = phi.hessian_degenerate(amp.support_radius)
    lam_list = [float(x) for x in lambdas]
    lower, upper, rand, grids = [], [], [], []
    for lam in lam_list:
        spec = oscillatory_grid(phi, amp, lam, L)
        prox = operator_norm_proxy(phi, amp, lam, spec, seeds=seeds, refinements=refinements, fast=fast)
        lower.append(prox["estimate"])
        rand.append(prox["random_max"])
        upper.append(oscillatory_bound(phi, amp, lam, spec))
        grids.append(spec.N)
    x = np.log2(lam_list)
    up = DecayFit.fit(x, upper)
    ratios = [lo / hi for lo, hi in zip(lower, upper)]
    return DecayFit.fit(x, lower, phase=phi.label, d=phi.d, lambdas=lam_list, N=grids, upper=up.to_dict(),
                        upper_slope=up.slope, random_max=rand, bound_ratios=ratios, degenerate=degenerate,
                        predicted_slope=-phi.d / 2)
