"""Discretized Fourier model of irreducible unitary SL(2,R) representations.

Vectors are complex functions of a spectral variable ``lam`` with norm

    ||f||^2 = int |f(lam)|^2 |lam|^(-Re varpi) dlam,

and ``U`` acting by multiplication with ``-1j*lam``.  The normalizing constant
in front of the integral is taken to be 1.

Grids cluster geometrically toward ``lam = 0`` and become uniform (step
``max_step``) far out.  Concretely the nodes are uniform in the coordinate
``x = log|lam| + |lam|/L`` with step ``h = log(ratio)`` and ``L = max_step/h``,
so the trapezoidal rule in ``x`` is spectrally accurate for smooth integrands
and the inner geometric tail ``(0, lam_min)`` is closed analytically.

Flow conventions:

* geodesic ``a_s``:  ``(pi(a_s) f)(lam) = exp((1 - varpi) s) f(exp(2 s) lam)``
* horocycle ``u_t``: ``(pi(u_t) f)(lam) = exp(-1j lam t) f(lam)``

With these, ``|U|^r pi(a_s) = exp(-2 r s) pi(a_s) |U|^r``.  The geodesic flow is
generated by ``-X`` where ``X`` is the first-order operator returned by
:func:`apply_generator`.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Optional, Sequence

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import wrightomega

from .errors import AliasingError, ConfigurationError, DomainError, ResolutionError
from .profiles import PolyExp

SERIES = ("principal", "complementary", "discrete", "mock")
GENERATORS = ("X", "U", "V")


# ---------------------------------------------------------------------------
# irreducible representations


@dataclass(frozen=True)
class IrrepParams:
    series: str
    mu: float
    varpi: complex
    nu0: float
    n: Optional[int] = None

    @property
    def re_varpi(self) -> float:
        return float(np.real(self.varpi))

    @property
    def support(self) -> str:
        return "positive" if self.series in ("discrete", "mock") else "full"

    @property
    def optimal_rate(self) -> float:
        """Sharp geodesic decay exponent ``(1 - nu0)/2`` of this irrep."""
        return (1.0 - self.nu0) / 2.0

    def standard_profile(self, width=1.0) -> PolyExp:
        """Slowest-decaying smooth test profile for this irrep.

        Full-line series use a centered Gaussian (nonzero at 0).  Discrete
        series use ``lam**(n-1) exp(-lam/width)``, the lowest-weight vector;
        mock-discrete uses ``exp(-lam/width)``.
        """
        from .profiles import gaussian, laguerre_profile

        if self.series == "discrete":
            return laguerre_profile(self.n - 1, rate=1.0 / width)
        if self.series == "mock":
            return laguerre_profile(0, rate=1.0 / width)
        return gaussian(0.0, width)

    def to_dict(self):
        return {
            "series": self.series,
            "mu": self.mu,
            "varpi": [float(np.real(self.varpi)), float(np.imag(self.varpi))],
            "nu0": self.nu0,
            "n": self.n,
        }

    @classmethod
    def from_dict(cls, d):
        re, im = d["varpi"]
        return cls(d["series"], float(d["mu"]), complex(re, im), float(d["nu0"]), d.get("n"))


def make_irrep(series: str, param=None) -> IrrepParams:
    """Build irrep parameters.

    ``param`` is the Casimir value ``mu`` for principal/complementary/mock and
    the integer ``n >= 2`` for the discrete series (``mu = -n**2 + 2n``).
    """
    if series not in SERIES:
        raise DomainError(f"unknown series {series!r}; expected one of {SERIES}")
    if series == "discrete":
        if param is None or int(param) != param or int(param) < 2:
            raise DomainError("discrete series needs an integer n >= 2")
        n = int(param)
        mu = float(-n * n + 2 * n)
        return IrrepParams(series, mu, complex(n - 1), float(1 - n), n)
    if series == "mock":
        if param is not None and param != 1:
            raise DomainError("mock-discrete series sits at mu = 1")
        return IrrepParams(series, 1.0, 0j, 0.0)
    if param is None:
        raise DomainError(f"{series} series needs a Casimir value mu")
    mu = float(param)
    if series == "principal":
        if not mu > 1.0:
            raise DomainError(f"principal series needs mu > 1, got {mu}")
        return IrrepParams(series, mu, complex(0.0, math.sqrt(mu - 1.0)), 0.0)
    if not 0.0 < mu < 1.0:
        raise DomainError(f"complementary series needs 0 < mu < 1, got {mu}")
    vp = math.sqrt(1.0 - mu)
    return IrrepParams(series, mu, complex(vp), vp)


def irrep_from_varpi(varpi: float) -> IrrepParams:
    """Complementary irrep with real parameter ``varpi`` in (0, 1)."""
    return make_irrep("complementary", 1.0 - varpi * varpi)


# ---------------------------------------------------------------------------
# grids


@dataclass(frozen=True)
class GridConfig:
    lam_min: float = 1e-6
    lam_max: float = 1e3
    ratio: float = 1.05
    max_step: float = 0.05
    stencil_order: int = 6
    stencil_floor: float = 0.01

    def __post_init__(self):
        if not 0.0 < self.lam_min < self.lam_max:
            raise ConfigurationError("need 0 < lam_min < lam_max")
        if not self.ratio > 1.0:
            raise ConfigurationError("ratio must exceed 1")
        if not self.max_step > 0.0:
            raise ConfigurationError("max_step must be positive")
        if self.stencil_floor < 0.0:
            raise ConfigurationError("stencil_floor must be nonnegative")
        if self.stencil_order not in (2, 4, 6, 8):
            raise ConfigurationError("stencil_order must be 2, 4, 6 or 8")

    def refined(self) -> "GridConfig":
        """Doubled node density and halved inner cutoff."""
        return replace(
            self,
            lam_min=self.lam_min / 2.0,
            ratio=math.sqrt(self.ratio),
            max_step=self.max_step / 2.0,
        )

    def to_dict(self):
        return {
            "lam_min": self.lam_min,
            "lam_max": self.lam_max,
            "ratio": self.ratio,
            "max_step": self.max_step,
            "stencil_order": self.stencil_order,
            "stencil_floor": self.stencil_floor,
        }


class SpectralGrid:
    """Immutable node/weight set for one weight exponent and support."""

    def __init__(self, re_varpi: float, support: str = "full", config: GridConfig = GridConfig()):
        if support not in ("full", "positive"):
            raise ConfigurationError(f"bad support {support!r}")
        self.re_varpi = float(re_varpi)
        self.support = support
        self.config = config
        h = math.log(config.ratio)
        L = config.max_step / h
        x0 = math.log(config.lam_min) + config.lam_min / L
        x1 = math.log(config.lam_max) + config.lam_max / L
        nx = int(math.ceil((x1 - x0) / h)) + 1
        x = x0 + h * np.arange(nx)
        lam = L * np.real(wrightomega(x - math.log(L)))
        self.h = h
        self.L = L
        self.half = lam
        self.n_half = nx
        jac = lam * L / (lam + L)
        cell = h * jac
        cell[-1] *= 0.5
        dens = lam ** (-self.re_varpi)
        self.half_cell = cell
        self.half_weights = cell * dens
        a = 1.0 - self.re_varpi
        self.inner_closed = a > 0.0
        if self.inner_closed:
            # trapezoid continued over the geometric tail below lam_min
            self.half_weights = self.half_weights.copy()
            self.half_weights[0] = cell[0] * dens[0] / (1.0 - math.exp(-a * h))
        self.half_weights.setflags(write=False)
        self.half.setflags(write=False)

    @classmethod
    def for_irrep(cls, irrep: IrrepParams, config: GridConfig = GridConfig()) -> "SpectralGrid":
        return cls(irrep.re_varpi, irrep.support, config)

    def refined(self) -> "SpectralGrid":
        return SpectralGrid(self.re_varpi, self.support, self.config.refined())

    @property
    def full(self) -> bool:
        return self.support == "full"

    @cached_property
    def nodes(self) -> np.ndarray:
        if self.full:
            return np.concatenate([-self.half[::-1], self.half])
        return self.half.copy()

    @cached_property
    def weights(self) -> np.ndarray:
        if self.full:
            return np.concatenate([self.half_weights[::-1], self.half_weights])
        return self.half_weights.copy()

    @cached_property
    def cells(self) -> np.ndarray:
        """Plain ``dlam`` quadrature cells (no singular weight, no tail closure)."""
        if self.full:
            return np.concatenate([self.half_cell[::-1], self.half_cell])
        return self.half_cell.copy()

    @cached_property
    def u(self) -> np.ndarray:
        return np.log(self.half)

    @property
    def size(self) -> int:
        return self.nodes.size

    def matches(self, irrep: IrrepParams) -> bool:
        return self.support == irrep.support and abs(self.re_varpi - irrep.re_varpi) < 1e-12

    def describe(self):
        d = self.config.to_dict()
        d.update(support=self.support, re_varpi=self.re_varpi, nodes=int(self.size))
        return d

    # half-line views along an axis -------------------------------------------------
    def split(self, values, axis=0):
        """Return ``[(sign, half_values)]`` ordered by increasing ``|lam|``."""
        values = np.moveaxis(np.asarray(values), axis, 0)
        if self.full:
            n = self.n_half
            return [(-1.0, values[:n][::-1]), (1.0, values[n:])]
        return [(1.0, values)]

    def merge(self, halves, axis=0):
        if self.full:
            neg, pos = halves
            out = np.concatenate([neg[::-1], pos], axis=0)
        else:
            (out,) = halves
        return np.moveaxis(out, 0, axis)


def bcast(vec, ndim, axis):
    shape = [1] * ndim
    shape[axis] = -1
    return np.reshape(vec, shape)


# ---------------------------------------------------------------------------
# vectors


@dataclass(eq=False)
class ModelVector:
    grid: SpectralGrid
    values: np.ndarray
    profile: Optional[PolyExp] = None
    loss: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != (self.grid.size,):
            raise DomainError("values do not match the grid")

    @classmethod
    def from_profile(cls, grid: SpectralGrid, profile: PolyExp) -> "ModelVector":
        return cls(grid, profile(grid.nodes), profile)

    @classmethod
    def from_function(cls, grid: SpectralGrid, func) -> "ModelVector":
        return cls(grid, np.asarray(func(grid.nodes), dtype=complex))

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros(grid.size, dtype=complex))

    def with_values(self, values, profile=None, loss=None):
        return ModelVector(self.grid, values, profile, self.loss if loss is None else loss)

    def __add__(self, other):
        prof = self.profile + other.profile if (self.profile and other.profile) else None
        return ModelVector(self.grid, self.values + other.values, prof)

    def __sub__(self, other):
        return self + other * (-1.0)

    def __mul__(self, c):
        prof = self.profile * c if self.profile is not None else None
        return ModelVector(self.grid, self.values * c, prof, self.loss)

    __rmul__ = __mul__


def _check(f: ModelVector, irrep: IrrepParams):
    if not f.grid.matches(irrep):
        raise DomainError(
            f"grid (support={f.grid.support}, Re varpi={f.grid.re_varpi}) does not match "
            f"{irrep.series} irrep (support={irrep.support}, Re varpi={irrep.re_varpi})"
        )


def inner(f: ModelVector, g: ModelVector) -> complex:
    return complex(np.sum(f.grid.weights * f.values * np.conj(g.values)))


def weighted_norm(f: ModelVector, irrep: Optional[IrrepParams] = None) -> float:
    if irrep is not None:
        _check(f, irrep)
    return float(np.sqrt(np.sum(f.grid.weights * np.abs(f.values) ** 2)))


# ---------------------------------------------------------------------------
# flows


@dataclass(frozen=True)
class Geodesic:
    s: float


@dataclass(frozen=True)
class Horocycle:
    t: float


def resample_half(u, vals, u_new):
    """Cubic spline in ``log|lam|`` along axis 0.

    Below the innermost node the function is continued by the power law
    fitted to the first two nodes (exponent clipped at 0); beyond the outer
    node it is zero.
    """
    u_new = np.asarray(u_new, dtype=float)
    extra = (slice(None),) + (None,) * (vals.ndim - 1)
    out = np.zeros((u_new.size,) + vals.shape[1:], dtype=complex)
    inside = (u_new >= u[0]) & (u_new <= u[-1])
    if np.any(inside):
        out[inside] = CubicSpline(u, vals, axis=0)(u_new[inside])
    below = u_new < u[0]
    if np.any(below):
        v0, v1 = vals[0], vals[1]
        a0, a1 = np.abs(v0), np.abs(v1)
        with np.errstate(divide="ignore", invalid="ignore"):
            p = np.where((a0 > 0) & (a1 > 0), np.log(a1 / np.where(a0 > 0, a0, 1.0)) / (u[1] - u[0]), 0.0)
        p = np.clip(np.nan_to_num(p), 0.0, None)
        du = (u_new[below] - u[0])[extra]
        out[below] = v0[None] * np.exp(p[None] * du)
    return out


def geodesic_values(values, grid: SpectralGrid, varpi, s, axis=0):
    """``exp((1-varpi) s) f(exp(2s) lam)`` along ``axis`` of an array."""
    if s == 0.0:
        return np.array(values, dtype=complex)
    halves = []
    for _sign, hv in grid.split(values, axis):
        halves.append(resample_half(grid.u, hv, grid.u + 2.0 * s))
    out = grid.merge(halves, axis)
    return np.exp((1.0 - varpi) * s) * out


def geodesic_loss(f: ModelVector, s: float):
    """Fractions of ``||f||^2`` pushed past the outer and inner cutoffs."""
    g = f.grid
    w = g.weights * np.abs(f.values) ** 2
    tot = w.sum()
    if tot == 0.0:
        return 0.0, 0.0
    a = np.abs(g.nodes)
    outer = w[a > math.exp(2.0 * s) * g.half[-1]].sum() / tot if s < 0 else 0.0
    inner_ = w[a < math.exp(2.0 * s) * g.half[0]].sum() / tot if s > 0 else 0.0
    return float(outer), float(inner_)


def flow_apply(f: ModelVector, flow, irrep: IrrepParams, loss_budget: Optional[float] = 1e-8) -> ModelVector:
    _check(f, irrep)
    if isinstance(flow, Horocycle):
        prof = f.profile.modulate(flow.t) if f.profile is not None else None
        return f.with_values(np.exp(-1j * f.grid.nodes * flow.t) * f.values, prof)
    if not isinstance(flow, Geodesic):
        raise DomainError(f"unknown flow {flow!r}")
    outer, _ = geodesic_loss(f, flow.s)
    if loss_budget is not None and outer > loss_budget:
        raise AliasingError(
            f"geodesic s={flow.s} pushes {outer:.3g} of the norm past lam_max", loss=outer
        )
    vals = geodesic_values(f.values, f.grid, irrep.varpi, flow.s)
    return ModelVector(f.grid, vals, None, f.loss + outer)


def matrix_coefficient(f: ModelVector, g: ModelVector, flow, irrep: IrrepParams) -> complex:
    """``<pi(flow) f, g>``.

    For geodesic flows the resampling is put on whichever vector gets
    stretched outward (``<pi(a_s) f, g> = <f, pi(a_-s) g>`` for ``s > 0``) so the
    integrand never needs values beyond ``lam_max``.
    """
    _check(f, irrep)
    _check(g, irrep)
    if isinstance(flow, Geodesic) and flow.s > 0:
        vals = geodesic_values(g.values, g.grid, irrep.varpi, -flow.s)
        return complex(np.sum(f.grid.weights * f.values * np.conj(vals)))
    if isinstance(flow, Geodesic):
        vals = geodesic_values(f.values, f.grid, irrep.varpi, flow.s)
        return complex(np.sum(f.grid.weights * vals * np.conj(g.values)))
    return inner(flow_apply(f, flow, irrep), g)


# ---------------------------------------------------------------------------
# generators


def _fd_weights(offsets, deriv=1):
    offsets = np.asarray(offsets, dtype=float)
    m = offsets.size
    A = np.vander(offsets, m, increasing=True).T
    rhs = np.zeros(m)
    rhs[deriv] = math.factorial(deriv)
    return np.linalg.solve(A, rhs)


def _stencil_indices(x, points, floor):
    """For each node, ``points`` distinct node indices near equally spaced
    targets whose spacing is the local node spacing but at least ``floor``."""
    n = x.size
    sig = np.maximum(np.gradient(x), floor)
    t = x[:, None] + sig[:, None] * (np.arange(points) - points // 2)[None, :]
    t = t + np.maximum(x[0] - t[:, :1], 0.0)
    t = t - np.maximum(t[:, -1:] - x[-1], 0.0)
    right = np.clip(np.searchsorted(x, t), 0, n - 1)
    left = np.clip(right - 1, 0, n - 1)
    idx = np.where(np.abs(x[left] - t) < np.abs(x[right] - t), left, right)
    for k in range(1, points):
        idx[:, k] = np.maximum(idx[:, k], idx[:, k - 1] + 1)
    for k in range(points - 1, -1, -1):
        idx[:, k] = np.minimum(idx[:, k], n - points + k)
    for k in range(points - 2, -1, -1):
        idx[:, k] = np.minimum(idx[:, k], idx[:, k + 1] - 1)
    return idx


def _node_weights(x, deriv, points, floor=0.0):
    """Finite-difference weights on arbitrary increasing nodes ``x``.

    Returns ``(idx, w)`` so that the ``deriv``-th derivative at node ``i`` is
    ``sum_k w[i, k] * y[idx[i, k]]``.  Offsets are scaled before the
    Vandermonde solve to keep it well conditioned; ``floor`` bounds the
    stencil spacing from below, which limits round-off amplification where
    nodes cluster.
    """
    n = x.size
    if n < points + 2:
        raise ResolutionError(f"{n} nodes cannot carry a {points}-point stencil")
    idx = _stencil_indices(x, points, floor)
    off = x[idx] - x[:, None]
    scale = np.max(np.abs(off), axis=1, keepdims=True)
    z = off / scale
    A = z[:, None, :] ** np.arange(points)[None, :, None]
    rhs = np.zeros((n, points))
    rhs[:, deriv] = math.factorial(deriv)
    w = np.linalg.solve(A, rhs[..., None])[..., 0] / scale**deriv
    return idx, w


def diff_nodes(y, x, deriv=1, order=6, axis=0, cache=None, floor=0.0):
    """``deriv``-th derivative of samples ``y`` on increasing nodes ``x`` along ``axis``."""
    key = (deriv, order, x.size, floor)
    if cache is not None and key in cache:
        idx, w = cache[key]
    else:
        idx, w = _node_weights(x, deriv, order + deriv, floor)
        if cache is not None:
            cache[key] = (idx, w)
    y = np.moveaxis(np.asarray(y), axis, 0)
    out = np.einsum("nk,nk...->n...", w, y[idx])
    return np.moveaxis(out, 0, axis)


def lam_derivatives(values, grid: SpectralGrid, axis=0, order=None, deriv=1):
    """``d^deriv/dlam^deriv`` along ``axis``, each half-line differentiated
    separately so that no stencil straddles ``lam = 0``."""
    order = order or grid.config.stencil_order
    floor = grid.config.stencil_floor
    cache = grid.__dict__.setdefault("_fd_cache", {})
    halves = []
    for sign, hv in grid.split(values, axis):
        x = sign * grid.half
        if sign < 0:
            # nodes must increase along the stencil axis
            d = diff_nodes(np.flip(hv, 0), x[::-1], deriv, order, 0, cache.setdefault("neg", {}), floor)
            halves.append(np.flip(d, 0))
        else:
            halves.append(diff_nodes(hv, x, deriv, order, 0, cache.setdefault("pos", {}), floor))
    return grid.merge(halves, axis)


def log_derivative(values, grid: SpectralGrid, axis=0, order=None):
    """``lam d/dlam`` along ``axis``."""
    values = np.asarray(values, dtype=complex)
    return bcast(grid.nodes, values.ndim, axis) * lam_derivatives(values, grid, axis, order)


def generator_values(values, grid: SpectralGrid, gen: str, varpi, axis=0, order=None):
    """Stencil realization of the model operators along ``axis``.

    ``U = -1j lam``, ``X = (varpi - 1) - 2 lam d/dlam`` and
    ``V = 1j((varpi - 1) d/dlam - lam d^2/dlam^2)``.  Derivatives are taken
    directly in ``lam`` on the clustered nodes, which keeps the stencil error
    small next to the inner cutoff.
    """
    values = np.asarray(values, dtype=complex)
    lam = bcast(grid.nodes, values.ndim, axis)
    if gen == "U":
        return -1j * lam * values
    d1 = lam_derivatives(values, grid, axis, order)
    if gen == "X":
        return (varpi - 1.0) * values - 2.0 * lam * d1
    if gen == "V":
        d2 = lam_derivatives(values, grid, axis, order, deriv=2)
        return 1j * ((varpi - 1.0) * d1 - lam * d2)
    raise DomainError(f"unknown generator {gen!r}")


def apply_generator(f: ModelVector, gen: str, irrep: IrrepParams, method: str = "auto") -> ModelVector:
    """Apply ``X``, ``U`` or ``V`` in the Fourier model.

    ``method='exact'`` differentiates the attached closed-form profile,
    ``'stencil'`` uses finite differences on the grid; ``'auto'`` picks exact
    when a profile is present.
    """
    _check(f, irrep)
    if gen not in GENERATORS:
        raise DomainError(f"unknown generator {gen!r}")
    if gen == "U":
        prof = f.profile.apply_U() if f.profile is not None else None
        return f.with_values(-1j * f.grid.nodes * f.values, prof)
    use_exact = method == "exact" or (method == "auto" and f.profile is not None)
    if use_exact:
        if f.profile is None:
            raise ResolutionError("exact generator action needs a closed-form profile")
        prof = f.profile.apply(gen, irrep.varpi)
        return ModelVector(f.grid, prof(f.grid.nodes), prof)
    return ModelVector(f.grid, generator_values(f.values, f.grid, gen, irrep.varpi))


def words(generators: Sequence[str], order: int):
    for k in range(order + 1):
        yield from itertools.product(generators, repeat=k)


def sobolev_norm(
    f: ModelVector,
    generators: Sequence[str],
    order: int,
    irrep: IrrepParams,
    method: str = "auto",
    max_stencil_order: int = 4,
) -> float:
    """Square root of the sum of ``||w f||^2`` over all generator words ``w`` of
    length ``<= order``.  A subset of generators gives a partial norm."""
    _check(f, irrep)
    if order < 0:
        raise DomainError("order must be nonnegative")
    gens = tuple(generators)
    for g in gens:
        if g not in GENERATORS:
            raise DomainError(f"unknown generator {g!r}")
    exact = method == "exact" or (method == "auto" and f.profile is not None)
    if not exact and order > max_stencil_order and set(gens) - {"U"}:
        raise ResolutionError(
            f"order {order} exceeds the stencil capacity {max_stencil_order}; attach a profile"
        )
    total = 0.0
    level = [f]
    total += weighted_norm(f) ** 2
    for _ in range(order):
        nxt = []
        for v in level:
            for g in gens:
                nxt.append(apply_generator(v, g, irrep, "exact" if exact else "stencil"))
        level = nxt
        total += sum(weighted_norm(v) ** 2 for v in level)
    return float(math.sqrt(total))


def vector(irrep: IrrepParams, profile: Optional[PolyExp] = None, config: GridConfig = GridConfig()) -> ModelVector:
    """Sample ``profile`` (default: the irrep's standard profile) on a fresh grid."""
    grid = SpectralGrid.for_irrep(irrep, config)
    return ModelVector.from_profile(grid, profile if profile is not None else irrep.standard_profile())
