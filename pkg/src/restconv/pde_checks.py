"""Sharp trace and heat-restriction constants, wave restriction thresholds, wave products."""

from __future__ import annotations

import numpy as np
from scipy import integrate

from .conv_ops import conv_restrict, operator_norm_power, tt_star_multiplier
from .errors import DivergenceError, ExponentError, SubspaceError
from .grid import GridFunction, GridSpec, Spectrum, idft, lp_norm, refine_function, sobolev_norm
from .kernels import bessel_multiplier, heat_kernel, sphere_area, wave_multiplier, wave_propagate_3d
from .mixed_norm import lambda_norm
from .reports import VerificationReport, stability_verdict
from .subspace import Subspace, fiber_labels, make_subspace, restrict

STABLE_TOL = 0.02
DIVERGENT_GROWTH = 0.25
INDETERMINATE_BAND = 0.1


def _coordinate(H: Subspace) -> None:
    if H.kind != "coordinate":
        raise SubspaceError("this check is stated for coordinate subspaces")


# -- Sobolev trace ------------------------------------------------------------------


def trace_constant(s: float, n: int, k: int) -> float:
    """``sqrt(|S^{c-1}| int_0^inf (1+r^2)^{-s} r^{c-1} dr)`` with ``c = n - k``.

    Raises
    ------
    DivergenceError
        If ``s <= c / 2``, where the integral is infinite.
    """
    c = n - k
    if c < 1:
        raise SubspaceError(f"need k < n, got n={n}, k={k}")
    if s <= c / 2:
        raise DivergenceError(f"trace constant is infinite for s={s} <= (n-k)/2={c / 2}")
    val, _ = integrate.quad(lambda r: (1 + r * r) ** (-s) * r ** (c - 1), 0, np.inf, epsabs=0, epsrel=1e-13, limit=500)
    return float(np.sqrt(sphere_area(c) * val))


def trace_fiber_sum(s: float, n: int, k: int, L: float = 4.0, N: int | None = None, bases=None, chunk: int = 1 << 22) -> dict:
    """Lattice fiber sums ``(1/L)^c sum_{xi''} |G_hat(xi', xi'')|^2`` of the Bessel kernel.

    The fiber lattice is ``(Z/L)^c`` truncated to ``|xi''_i| < N/(2L)``; the
    bases ``xi'`` default to the origin and a few points along the first axis.
    Returns the sums per base and their maximum.
    """
    c = n - k
    if c < 1:
        raise SubspaceError(f"need k < n, got n={n}, k={k}")
    if N is None:
        N = 1 << 24 if c == 1 else (1 << 13 if c == 2 else 1 << 9)
    G = bessel_multiplier(s, n)
    if bases is None:
        bases = [np.zeros(k)] + [np.eye(k)[0] * j / L for j in ((1, 2, 4) if c == 1 else (1, 4))]
    bases = [np.asarray(b, dtype=float).reshape(k) for b in bases]
    ax = np.fft.fftfreq(N, d=L / N)
    sums = []
    for b in bases:
        tot = 0.0
        # iterate over the first fiber axis in slabs, the rest vectorised
        rest = c - 1
        slab = max(1, chunk // max(1, N**rest))
        tail = np.stack(np.meshgrid(*([ax] * rest), indexing="ij"), axis=-1).reshape(-1, rest) if rest else np.zeros((1, 0))
        for i in range(0, N, slab):
            a0 = ax[i : i + slab]
            pts = np.concatenate([np.repeat(a0, len(tail))[:, None], np.tile(tail, (len(a0), 1))], axis=1)
            xi = np.concatenate([np.broadcast_to(b, (len(pts), k)), pts], axis=1)
            tot += float(np.sum(np.abs(G.evaluate(xi)) ** 2))
        sums.append(tot / L**c)
    return {"bases": [b.tolist() for b in bases], "sums": sums, "max": max(sums), "argmax": int(np.argmax(sums)), "L": L, "N": N}


def trace_constant_lattice(s: float, n: int, k: int, **kw) -> float:
    """Square root of the largest lattice fiber sum; the multiplier route to the trace constant."""
    return float(np.sqrt(trace_fiber_sum(s, n, k, **kw)["max"]))


def trace_extremal(spec: GridSpec, H: Subspace, s: float) -> GridFunction:
    """``u_hat = (1 + |xi|^2)^{-s}`` on the fiber over ``xi' = 0``, zero elsewhere."""
    _coordinate(H)
    mask = fiber_labels(H, spec) == 0
    w = (1.0 + spec.freq_sq()) ** (-s)
    return idft(Spectrum(spec, np.where(mask, w, 0.0)))


def verify_trace(u: GridFunction, H: Subspace, s: float, tol: float = 1e-6, with_multiplier: bool = False) -> VerificationReport:
    """``||u|_H||_{L^2(H)} <= C_{s,H} ||u||_{L^2_s}``.

    With ``with_multiplier`` the report also carries the lattice route to the
    constant and its relative gap to the quadrature.
    """
    _coordinate(H)
    n, k = u.spec.n, H.k
    C = trace_constant(s, n, k)
    lhs = lp_norm(restrict(u, H), 2)
    rhs = C * sobolev_norm(u, s)
    extra = {"constant": C}
    if with_multiplier:
        lat = trace_constant_lattice(s, n, k)
        extra.update(lattice_constant=lat, constant_gap=abs(lat - C) / C)
    return VerificationReport("trace", lhs, rhs, {"s": s, "n": n, "k": k, "grid": u.spec.to_dict()}, tol=tol, extra=extra)


def trace_endpoint_growth(n: int, k: int, bands=(4, 8, 16, 32, 64), L: float = 8.0) -> dict:
    """Effective constant ``||u|_H|| / ||u||_{L^2_s}`` at ``s = (n-k)/2`` for growing bands.

    Uses the fiber-concentrated extremal shape; the ratio grows without bound.
    """
    s = (n - k) / 2
    H = make_subspace("coordinate", n, k)
    out = []
    for R in bands:
        N = int(2 * L * R)
        spec = GridSpec(n, N, L)
        u = trace_extremal(spec, H, s)
        out.append(lp_norm(restrict(u, H), 2) / sobolev_norm(u, s))
    return {"s": s, "bands": list(bands), "ratios": out, "growing": bool(np.all(np.diff(out) > 0))}


# -- heat semigroup ------------------------------------------------------------------


def heat_constant_stated(t: float, codim: int) -> float:
    """``(4 pi t)^{-c/4}``: the constant asserted for the heat restriction."""
    return float((4 * np.pi * t) ** (-codim / 4))


def heat_constant_sharp(t: float, codim: int) -> float:
    """``(8 pi t)^{-c/4}``: square root of ``int_{R^c} exp(-8 pi^2 t |xi|^2) d xi``."""
    return float((8 * np.pi * t) ** (-codim / 4))


def heat_grid(n: int, t: float) -> GridSpec:
    """Default-size grid whose period keeps the lattice error of ``|Phi_t_hat|^2`` below ``exp(-28)``."""
    L = 16.0
    while np.exp(-L * L / (8 * t)) > np.exp(-28):
        L *= 2
    return GridSpec.default(n, L)


def heat_operator_norm(n: int, k: int, t: float, spec: GridSpec | None = None, power: bool = False) -> dict:
    """Operator norm of ``F -> (F * Phi_t)|_H`` from the ``T T*`` multiplier maximum."""
    spec = GridSpec.default(n) if spec is None else spec
    H = make_subspace("coordinate", n, k)
    G = heat_kernel(t, n)
    mult = tt_star_multiplier(G, H, spec)
    norm = float(np.sqrt(np.max(mult.coeffs.real)))
    out = {"n": n, "k": k, "t": t, "norm": norm, "stated": heat_constant_stated(t, n - k), "sharp": heat_constant_sharp(t, n - k)}
    if power:
        out["power"] = operator_norm_power(G, H, spec)["estimate"]
    return out


def verify_heat_restriction(F: GridFunction, H: Subspace, t: float, tol: float = 1e-6, constant: str = "stated") -> VerificationReport:
    """``||u(., t)|_H||_{L^2(H)} <= C ||F||_2`` for ``u = F * Phi_t``.

    Parameters
    ----------
    constant : {"stated", "sharp"}
        ``"stated"`` uses ``(4 pi t)^{-c/4}``, ``"sharp"`` uses ``(8 pi t)^{-c/4}``.
    """
    _coordinate(H)
    c = H.codim
    C = {"stated": heat_constant_stated, "sharp": heat_constant_sharp}[constant](t, c)
    lhs = lp_norm(conv_restrict(F, heat_kernel(t, F.spec.n), H), 2)
    rhs = C * lp_norm(F, 2)
    return VerificationReport("heat", lhs, rhs, {"t": t, "n": F.spec.n, "k": H.k, "constant": constant}, tol=tol, extra={"C": C})


def heat_contraction_time(codim: int, constant: str = "sharp") -> float:
    """Smallest ``t`` with restriction constant ``<= 1``."""
    return 1 / (8 * np.pi) if constant == "sharp" else 1 / (4 * np.pi)


# -- wave restriction ------------------------------------------------------------------


def wave_integrable(s: float, n: int, k: int) -> bool:
    """``int (1 + |xi''|^2)^{2s-2} d xi'' < inf`` over ``R^{n-k}``, i.e. ``2s - 2 < -(n-k)``."""
    return bool(2 * s - 2 < -(n - k))


def wave_threshold(n: int, k: int) -> float:
    """``1 - (n-k)/2``."""
    return 1.0 - (n - k) / 2.0


def wave_lambda(s: float, n: int, k: int, t: float, spec: GridSpec) -> float:
    """``Lambda_{2,inf}`` norm of ``(1 + |xi|^2)^{s/2}`` times the wave multiplier."""
    H = make_subspace("coordinate", n, k)
    K = wave_multiplier(t, n).spectrum(spec).coeffs
    w = (1.0 + spec.freq_sq()) ** (s / 2)
    return lambda_norm(Spectrum(spec, w * K), H, r=2, p=np.inf)


def classify_refinement(values, stable_tol: float = STABLE_TOL, growth: float = DIVERGENT_GROWTH) -> str:
    """``"stable"`` if every step moves less than ``stable_tol``, ``"divergent"`` if the last step grows by more than ``growth``."""
    v = np.asarray(values, dtype=float)
    steps = v[1:] / v[:-1] - 1.0
    if np.all(np.abs(steps) < stable_tol):
        return "stable"
    if steps[-1] > growth:
        return "divergent"
    return "growing"


def wave_restriction_threshold(n: int, k: int, t: float, s_list, N_list=(32, 64, 128), L: float = 16.0) -> dict:
    """Refinement behaviour of the weighted wave ``Lambda`` norm for each ``s``.

    ``N`` doubles with the period fixed, so every step doubles the frequency
    band. Values of ``s`` within ``0.1`` of the threshold are reported as
    indeterminate.
    """
    if n != 3:
        raise SubspaceError("the wave propagator is available in R^3 only")
    thr = wave_threshold(n, k)
    rows = []
    for s in s_list:
        vals = [wave_lambda(s, n, k, t, GridSpec(n, N, L)) for N in N_list]
        steps = (np.asarray(vals[1:]) / np.asarray(vals[:-1]) - 1.0).tolist()
        verdict = classify_refinement(vals) if k < n else ("stable" if s < 1 else classify_refinement(vals))
        if k < n and abs(s - thr) < INDETERMINATE_BAND:
            verdict = "indeterminate"
        rows.append({"s": s, "values": vals, "steps": steps, "verdict": verdict,
                     "predicted": "stable" if (k == n or wave_integrable(s, n, k)) else "divergent"})
    return {"n": n, "k": k, "t": t, "threshold": thr if k < n else 1.0, "N": list(N_list), "L": L, "rows": rows}


# -- products of wave solutions ------------------------------------------------------


KLAINERMAN_VERTICES = ((0.5, 0.5), (0.5, 1 / 3), (0.6, 0.4))


def klainerman_region(x: float, y: float, eps: float = 1e-12) -> bool:
    """``(1/p, 1/q)`` in the nonclosed triangle of ``L^p x L^p -> L^q`` bounds.

    The edge ``x = 1/2`` and the edge ``y = 1 - x`` are included; the vertex
    ``(3/5, 2/5)`` and the open edge joining it to ``(1/2, 1/3)`` are not.
    """
    (ax, ay), (bx, by), (cx, cy) = KLAINERMAN_VERTICES

    def side(px, py, qx, qy):
        return (qx - px) * (y - py) - (qy - py) * (x - px)

    s1 = side(ax, ay, bx, by)
    s2 = side(bx, by, cx, cy)
    s3 = side(cx, cy, ax, ay)
    inside = (s1 <= eps and s2 <= eps and s3 <= eps) or (s1 >= -eps and s2 >= -eps and s3 >= -eps)
    if not inside:
        return False
    if abs(x - cx) < eps and abs(y - cy) < eps:
        return False
    on_bc = abs(s2) <= eps
    if on_bc and not (abs(x - bx) < eps and abs(y - by) < eps):
        return False
    return True


def verify_wave_product(f: GridFunction, g: GridFunction, t: float = 1.0, p: float = 2.0, refinements: int = 2, stable_tol: float = STABLE_TOL) -> VerificationReport:
    """Refinement-stable constants for the wave product bounds in ``R^3``.

    Tracks three ratios per refinement level: ``||uv||_{L^2_{1/2}} / (||f||_2 ||g||_2)``,
    ``||uv||_{L^3} / ||uv||_{L^2_{1/2}}`` and ``||uv||_{L^{p'}} / (||f||_p ||g||_p)``.
    The report passes when all three are stable within ``stable_tol``.
    """
    if f.spec.n != 3:
        raise SubspaceError("wave products are implemented in R^3")
    p = float(p)
    if p < 1:
        raise ExponentError(f"p must be >= 1, got {p}")
    pp = np.inf if p == 1 else p / (p - 1)
    improving = 5 / 3 < p <= 2
    sob, chain, lp = [], [], []
    ff, gg = f, g
    for lev in range(refinements + 1):
        if lev:
            ff, gg = refine_function(ff), refine_function(gg)
        u, v = wave_propagate_3d(ff, t), wave_propagate_3d(gg, t)
        uv = GridFunction(ff.spec, u.values * v.values)
        s_half = sobolev_norm(uv, 0.5)
        sob.append(s_half / (lp_norm(ff, 2) * lp_norm(gg, 2)))
        chain.append(lp_norm(uv, 3) / s_half)
        lp.append(lp_norm(uv, pp) / (lp_norm(ff, p) * lp_norm(gg, p)))
    verdicts = {name: stability_verdict(vals, stable_tol) for name, vals in (("sobolev", sob), ("chain", chain), ("improving", lp))}
    passed = all(v["stable"] for v in verdicts.values())
    return VerificationReport(
        "wave_product", sob[0], 1.0, {"t": t, "p": p, "improving_range": improving, "grid": f.spec.to_dict()},
        criterion="stability", tol=stable_tol, passed=passed,
        extra={"sobolev_ratios": sob, "chain_ratios": chain, "improving_ratios": lp, "verdicts": verdicts},
    )
