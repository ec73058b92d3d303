"""Matrix-coefficient decay curves, rate fits and the order-2 bound check."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .directint import TensorModel, TensorVector, budget_orders, partial_budget
from .errors import AliasingError, DomainError, FitError
from .sl2model import IrrepParams, ModelVector, _check, geodesic_values

GEODESIC_WINDOW = (1.0, 6.0)
HOROCYCLE_WINDOW = (5.0, 200.0)
NOISE_FLOOR = 1e-10
EXTRAPOLATION_BUDGET = 0.05
MIN_FIT_SAMPLES = 10


@dataclass
class DecayCurve:
    times: np.ndarray
    magnitudes: np.ndarray
    flow: str
    values: Optional[np.ndarray] = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.magnitudes = np.asarray(self.magnitudes, dtype=float)
        if self.times.shape != self.magnitudes.shape:
            raise DomainError("times and magnitudes differ in length")
        if np.any(np.diff(self.times) <= 0):
            raise DomainError("times must be increasing")
        if np.any(~np.isfinite(self.magnitudes)) or np.any(self.magnitudes < 0):
            raise DomainError("magnitudes must be finite and nonnegative")

    def rows(self):
        return [{"time": float(t), "magnitude": float(m)} for t, m in zip(self.times, self.magnitudes)]


@dataclass
class RateFit:
    model: str
    exponent: float
    window: tuple
    residual: float
    samples: int
    intercept: float

    def to_dict(self):
        return {
            "model": self.model,
            "exponent": self.exponent,
            "window": list(self.window),
            "residual": self.residual,
            "samples": self.samples,
            "intercept": self.intercept,
        }


def _geodesic_coefficient(psi: ModelVector, xi: ModelVector, s: float, varpi):
    """``<pi(a_s) psi, xi>`` plus the fraction of the integrand that relied on
    extrapolation below ``lam_min``."""
    g = psi.grid
    if s > 0:
        moved = geodesic_values(xi.values, g, varpi, -s)
        integrand = g.weights * psi.values * np.conj(moved)
    else:
        moved = geodesic_values(psi.values, g, varpi, s)
        integrand = g.weights * moved * np.conj(xi.values)
    extrap = np.abs(g.nodes) < math.exp(2.0 * abs(s)) * g.half[0]
    tot = np.sum(np.abs(integrand))
    frac = float(np.sum(np.abs(integrand[extrap])) / tot) if tot > 0 else 0.0
    return complex(np.sum(integrand)), frac


def coeff_curve(psi: ModelVector, xi: ModelVector, flow: str, times: Sequence[float], irrep: IrrepParams,
                extrapolation_budget: float = EXTRAPOLATION_BUDGET) -> DecayCurve:
    """Samples of ``|<pi(g_t) psi, xi>|`` along the geodesic or horocycle flow."""
    _check(psi, irrep)
    _check(xi, irrep)
    ts = np.asarray(times, dtype=float)
    if flow == "horocycle":
        lam = psi.grid.nodes
        base = psi.grid.weights * psi.values * np.conj(xi.values)
        step = float(np.max(np.diff(lam)))
        limit = 1.0 / step
        vals = np.empty(ts.size, dtype=complex)
        for k, t in enumerate(ts):
            if abs(t) > limit:
                raise AliasingError(
                    f"horocycle time {t} under-resolved by grid step {step:.3g}",
                    last_reliable=float(ts[k - 1]) if k else None,
                )
            vals[k] = np.sum(base * np.exp(-1j * lam * t))
        return DecayCurve(ts, np.abs(vals), flow, vals)
    if flow != "geodesic":
        raise DomainError(f"unknown flow {flow!r}")
    vals = np.empty(ts.size, dtype=complex)
    for k, s in enumerate(ts):
        v, frac = _geodesic_coefficient(psi, xi, float(s), irrep.varpi)
        if frac > extrapolation_budget:
            raise AliasingError(
                f"s = {s}: {frac:.2%} of the integrand lies below lam_min",
                loss=frac,
                last_reliable=float(ts[k - 1]) if k else None,
            )
        vals[k] = v
    return DecayCurve(ts, np.abs(vals), flow, vals)


def fit_rate(curve: DecayCurve, window: Optional[tuple] = None, floor: float = NOISE_FLOOR,
             model: Optional[str] = None) -> RateFit:
    """Least-squares decay exponent.

    Geodesic curves fit ``log|c| ~ -exponent * 2s``; horocycle curves fit
    ``log|c| ~ -exponent * log(1 + t)``.
    """
    model = model or ("exponential" if curve.flow == "geodesic" else "polynomial")
    if window is None:
        window = GEODESIC_WINDOW if model == "exponential" else HOROCYCLE_WINDOW
    t0 = np.argmin(np.abs(curve.times))
    ref = curve.magnitudes[t0]
    sel = (curve.times >= window[0]) & (curve.times <= window[1]) & (curve.magnitudes > floor * ref)
    if sel.sum() < MIN_FIT_SAMPLES:
        raise FitError(f"only {int(sel.sum())} samples in the fit window (need {MIN_FIT_SAMPLES})")
    x = 2.0 * curve.times[sel] if model == "exponential" else np.log1p(curve.times[sel])
    y = np.log(curve.magnitudes[sel])
    slope, icpt = np.polyfit(x, y, 1)
    resid = float(np.sqrt(np.mean((y - (slope * x + icpt)) ** 2)))
    return RateFit(model, float(-slope), tuple(window), resid, int(sel.sum()), float(icpt))


# ---------------------------------------------------------------------------
# order-2 bound on tensor models


def tensor_geodesic_coefficient(psi: TensorVector, xi: TensorVector, s: Sequence[float]) -> complex:
    """``<(a_{s_1} x ... x a_{s_n}) psi, xi>`` with the stretching put on
    whichever side keeps arguments inside the grid."""
    model = psi.model
    tot = 0j
    for combo, a in psi.blocks.items():
        b = xi.blocks.get(combo)
        if b is None:
            continue
        irreps, grids, w = model.component(combo)
        for ax, (ir, g, sa) in enumerate(zip(irreps, grids, s)):
            if sa > 0:
                b = geodesic_values(b, g, ir.varpi, -sa, axis=ax)
            elif sa < 0:
                a = geodesic_values(a, g, ir.varpi, sa, axis=ax)
        prod = a * np.conj(b)
        for gw in [g.weights for g in grids]:
            prod = np.tensordot(gw, prod, axes=(0, 0))
        tot += w * complex(prod)
    return tot


def order2_bound_check(psi: TensorVector, xi: TensorVector, model: TensorModel, a_grid, eps: Optional[float] = None,
                       method: str = "auto") -> dict:
    """Ratio of ``|<pi(a) psi, xi>|`` to ``eta_eps(S, a) ||psi||_U ||xi||_XV``.

    Factor ``i`` is the SL(2) of root ``theta_i`` and ``a`` is given by its
    geodesic parameters ``s_i``, so ``theta_i(a) = exp(2 s_i)`` and
    ``eta = prod_i exp(-2 |s_i| (gamma_i - eps))``.  Partial norms use the
    even-rounded budget operators of :func:`fracmix.directint.partial_budget`.
    """
    eps = model.eps if eps is None else eps
    gam = model.gammas
    if not 0 < eps < min(gam):
        raise DomainError("need 0 < eps < min gamma")
    bu = partial_budget(psi, "U", method=method)
    bxv = partial_budget(xi, "XV", method=method)
    rows = []
    for a in a_grid:
        s = [float(x) for x in np.atleast_1d(a)]
        if len(s) != model.n:
            raise DomainError(f"each grid point needs {model.n} parameters")
        lhs = abs(tensor_geodesic_coefficient(psi, xi, s))
        log_eta = -sum(2.0 * abs(si) * (g - eps) for si, g in zip(s, gam))
        rhs = math.exp(log_eta) * bu * bxv
        rows.append({"s": s, "lhs": lhs, "eta": math.exp(log_eta), "rhs": rhs, "ratio": lhs / rhs})
    return {
        "rows": rows,
        "max_ratio": max(r["ratio"] for r in rows),
        "psi_budget_U": bu,
        "xi_budget_XV": bxv,
        "orders_U": budget_orders(model, "U"),
        "orders_XV": budget_orders(model, "XV"),
        "eps": eps,
    }
