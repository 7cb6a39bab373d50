"""Mixed Fourier norms over fiber decompositions and spatial mixed norms.

``lambda_norm(F, H, r, p)`` is the outer ``L^p`` norm over bases ``xi`` of ``H*``
of the inner ``L^r`` norm of ``|F_hat|`` over the fiber above ``xi``, with all
integrals replaced by lattice Riemann sums.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ExponentError
from .grid import GridFunction, Spectrum, dft, weighted_lp
from .subspace import Subspace, fiber_reduce


def _exponent(x, name: str) -> float:
    if isinstance(x, str):
        x = np.inf if x.lower() in ("inf", "infinity", "oo") else float(x)
    x = float(x)
    if not (x >= 1):
        raise ExponentError(f"{name} must lie in [1, inf], got {x}")
    return x


@dataclass(frozen=True)
class MixedNormParams:
    """Inner exponent ``r`` (along fibers) and outer exponent ``p`` (over bases)."""

    r: float = 2.0
    p: float = np.inf

    def __post_init__(self):
        object.__setattr__(self, "r", _exponent(self.r, "inner exponent r"))
        object.__setattr__(self, "p", _exponent(self.p, "outer exponent p"))


def _as_spectrum(F) -> Spectrum:
    if isinstance(F, Spectrum):
        return F
    if isinstance(F, GridFunction):
        return dft(F)
    raise TypeError(f"expected GridFunction or Spectrum, got {type(F).__name__}")


def fiber_profile(F, H: Subspace, r: float = 2.0, convention: str = "surface") -> np.ndarray:
    """Inner fiber norms ``(w sum_fiber |F_hat|^r)^{1/r}`` as an array on ``H*``."""
    r = _exponent(r, "inner exponent r")
    S = _as_spectrum(F)
    spec = S.spec
    a = np.abs(S.coeffs)
    if np.isinf(r):
        return fiber_reduce(H, a, spec, how="max")
    w = H.inner_weight(spec.L, convention)
    if r == 2:
        return np.sqrt(w * fiber_reduce(H, a * a, spec))
    top = a.max()
    if top == 0:
        return np.zeros((spec.N,) * H.k)
    return top * (w * fiber_reduce(H, (a / top) ** r, spec)) ** (1.0 / r)


def lambda_norm(F, H: Subspace, params: MixedNormParams | None = None, *, r=None, p=None, convention: str = "surface") -> float:
    """Mixed norm of ``F`` with respect to ``H``.

    Parameters
    ----------
    F : GridFunction or Spectrum
        A spatial input is transformed first.
    H : Subspace
    params : MixedNormParams, optional
        Alternatively pass ``r`` and ``p`` directly (defaults ``r=2, p=inf``).
    convention : {"surface", "rho"}
        Weight convention for diagonal subspaces; ignored for coordinate planes.

    Returns
    -------
    float
    """
    if params is None:
        params = MixedNormParams(2.0 if r is None else r, np.inf if p is None else p)
    S = _as_spectrum(F)
    prof = fiber_profile(S, H, params.r, convention)
    return weighted_lp(prof, H.outer_weight(S.spec.L, convention), params.p)


def mixed_spatial_norm(F: GridFunction, H: Subspace, p, inner_q) -> float:
    """``L^p_u L^q_v`` norm of ``F`` in orthonormal coordinates ``u`` along ``H``, ``v`` across.

    For the diagonal the lattice sets ``{sum_j x^j = const}`` (mod the period)
    play the role of the slices ``u = const``.
    """
    p = _exponent(p, "outer exponent p")
    q = _exponent(inner_q, "inner exponent q")
    spec = F.spec
    a = np.abs(F.values)
    h = spec.h
    if H.kind == "coordinate":
        w_in, w_out = h**H.codim, h**H.k
    else:
        w_in = H.surface_factor * h**H.codim
        w_out = (h / np.sqrt(H.m)) ** H.d
    if np.isinf(q):
        prof = fiber_reduce(H, a, spec, how="max")
    elif q == 2:
        prof = np.sqrt(w_in * fiber_reduce(H, a * a, spec))
    else:
        top = a.max()
        prof = np.zeros((spec.N,) * H.k) if top == 0 else top * (w_in * fiber_reduce(H, (a / top) ** q, spec)) ** (1 / q)
    return weighted_lp(prof, w_out, p)
