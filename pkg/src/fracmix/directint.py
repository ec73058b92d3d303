"""Finite direct integrals, tensor products of commuting SL(2) factors and the
multi-factor (Type II) fractional solver.

A :class:`DirectIntegralModel` is a finite weighted sum of irreducible
components.  A :class:`TensorModel` takes one such model per commuting factor;
a :class:`TensorVector` stores, for every tuple of component indices, an
``n``-dimensional array on the product of the component grids.

The Type II solver splits ``xi`` with spectral cutoffs and divides each piece
by ``prod_i |lam_i|**r_i``.  High-frequency pieces are bounded by the cutoff
alone; low-frequency pieces are finite exactly when ``r_i`` stays below the
spectral gap of factor ``i``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import (
    CapacityError,
    ConfigurationError,
    ConstructionError,
    DivergenceError,
    DomainError,
    PreconditionError,
    ResolutionError,
)
from .fracsolve import CutoffProfile, singularity_diagnostic
from .profiles import PolyExp, gaussian
from .sl2model import (
    GridConfig,
    IrrepParams,
    SpectralGrid,
    generator_values,
    geodesic_values,
)

TENSOR_GRID = GridConfig(lam_min=1e-6, lam_max=20.0, ratio=1.1, max_step=0.1)
MAX_PRODUCT_NODES = 8_000_000


# ---------------------------------------------------------------------------
# direct integrals


@dataclass(frozen=True)
class DirectIntegralModel:
    components: Tuple[Tuple[IrrepParams, float], ...]
    field_label: str = "R"

    def __post_init__(self):
        comps = tuple((ir, float(w)) for ir, w in self.components)
        object.__setattr__(self, "components", comps)
        if not comps:
            raise ConfigurationError("a direct integral needs at least one component")
        if any(not w > 0 for _, w in comps):
            raise ConfigurationError("component weights must be positive")
        if self.field_label not in ("R", "C"):
            raise ConfigurationError("field_label must be R or C")

    @property
    def irreps(self):
        return [ir for ir, _ in self.components]

    @property
    def weights(self):
        return [w for _, w in self.components]

    def to_dict(self):
        return {
            "field_label": self.field_label,
            "components": [{"irrep": ir.to_dict(), "weight": w} for ir, w in self.components],
            "gap": spectral_gap(self),
        }


def spectral_gap(model: DirectIntegralModel) -> float:
    """Minimum over components of the optimal decay exponent ``(1 - nu0)/2``
    (``n/2`` for discrete components)."""
    return float(min(ir.optimal_rate for ir in model.irreps))


def direct_norm(vectors, model: DirectIntegralModel) -> float:
    """Norm of a direct-integral vector given as one ModelVector per component."""
    from .sl2model import weighted_norm

    if len(vectors) != len(model.components):
        raise DomainError("need one vector per component")
    return math.sqrt(sum(w * weighted_norm(v, ir) ** 2 for v, (ir, w) in zip(vectors, model.components)))


# ---------------------------------------------------------------------------
# tensor models


@dataclass
class TensorModel:
    factors: List[DirectIntegralModel]
    eps: float = 0.1
    config: GridConfig = TENSOR_GRID

    def __post_init__(self):
        if not self.factors:
            raise ConfigurationError("a tensor model needs at least one factor")
        if not self.eps > 0:
            raise ConfigurationError("eps must be positive")
        self.grids = [
            [SpectralGrid.for_irrep(ir, self.config) for ir in fac.irreps] for fac in self.factors
        ]
        for combo in self.component_indices():
            size = int(np.prod([self.grids[i][c].size for i, c in enumerate(combo)]))
            if size > MAX_PRODUCT_NODES:
                raise CapacityError(
                    f"product grid with {size} nodes exceeds {MAX_PRODUCT_NODES}; coarsen the factor grids"
                )

    @property
    def n(self) -> int:
        return len(self.factors)

    @property
    def gammas(self):
        return [spectral_gap(f) for f in self.factors]

    @property
    def zetas(self):
        return [
            (1.0 + self.eps) if f.field_label == "C" else g + 2.0 + self.eps
            for f, g in zip(self.factors, self.gammas)
        ]

    def gap_registry(self):
        return [
            {"factor": i + 1, "field_label": f.field_label, "gamma": g, "zeta": z}
            for i, (f, g, z) in enumerate(zip(self.factors, self.gammas, self.zetas))
        ]

    def component_indices(self):
        return list(itertools.product(*[range(len(f.components)) for f in self.factors]))

    def component(self, combo):
        irreps = [self.factors[i].irreps[c] for i, c in enumerate(combo)]
        grids = [self.grids[i][c] for i, c in enumerate(combo)]
        weight = float(np.prod([self.factors[i].weights[c] for i, c in enumerate(combo)]))
        return irreps, grids, weight

    def refined(self) -> "TensorModel":
        return TensorModel(self.factors, self.eps, self.config.refined())

    def to_dict(self):
        return {
            "factors": [f.to_dict() for f in self.factors],
            "eps": self.eps,
            "grid": self.config.to_dict(),
            "gap_registry": self.gap_registry(),
        }


def _outer(vectors):
    out = vectors[0]
    for v in vectors[1:]:
        out = np.multiply.outer(out, v)
    return out


def _weighted_sum(abs2, weights):
    """``sum abs2 * (w_1 x w_2 x ...)`` by successive contractions."""
    out = abs2
    for w in weights:
        out = np.tensordot(w, out, axes=(0, 0))
    return float(out)


Term = Tuple[complex, Tuple[PolyExp, ...]]


@dataclass
class TensorVector:
    model: TensorModel
    blocks: Dict[tuple, np.ndarray]
    terms: Optional[Dict[tuple, List[Term]]] = None

    def norm(self) -> float:
        tot = 0.0
        for combo, arr in self.blocks.items():
            _, grids, w = self.model.component(combo)
            tot += w * _weighted_sum(np.abs(arr) ** 2, [g.weights for g in grids])
        return math.sqrt(tot)

    def map(self, fn) -> "TensorVector":
        """Apply ``fn(array, grids)`` blockwise (drops closed-form terms)."""
        out = {}
        for combo, arr in self.blocks.items():
            _, grids, _ = self.model.component(combo)
            out[combo] = fn(arr, grids)
        return TensorVector(self.model, out)

    def __add__(self, other):
        keys = set(self.blocks) | set(other.blocks)
        out = {}
        for k in keys:
            a = self.blocks.get(k)
            b = other.blocks.get(k)
            out[k] = a + b if (a is not None and b is not None) else (a if b is None else b).copy()
        return TensorVector(self.model, out)

    def __sub__(self, other):
        return self + other.scaled(-1.0)

    def scaled(self, c):
        terms = None
        if self.terms is not None:
            terms = {k: [(c * a, p) for a, p in v] for k, v in self.terms.items()}
        return TensorVector(self.model, {k: c * v for k, v in self.blocks.items()}, terms)

    def max_abs_diff(self, other) -> float:
        keys = set(self.blocks) | set(other.blocks)
        m = 0.0
        for k in keys:
            a = self.blocks.get(k, 0.0)
            b = other.blocks.get(k, 0.0)
            m = max(m, float(np.max(np.abs(np.asarray(a) - np.asarray(b)))))
        return m


Factor = Union[PolyExp, Callable, Dict[int, Union[PolyExp, Callable]], None]


def product_vector(model: TensorModel, factors: Sequence[Factor], amplitude: complex = 1.0) -> TensorVector:
    """``amplitude * v_1 x ... x v_n`` with ``v_i`` a PolyExp or array function.

    A dict entry selects components of that factor; absent components are 0.
    Closed-form terms are kept when every factor is a PolyExp, so Sobolev
    budgets can be evaluated exactly.
    """
    if len(factors) != model.n:
        raise DomainError(f"need {model.n} factor profiles")
    blocks, terms = {}, {}
    exact = True
    for combo in model.component_indices():
        profs = []
        for i, c in enumerate(combo):
            fi = factors[i]
            p = fi.get(c) if isinstance(fi, dict) else fi
            profs.append(p)
        if any(p is None for p in profs):
            continue
        _, grids, _ = model.component(combo)
        vals = [np.asarray(p(g.nodes), dtype=complex) for p, g in zip(profs, grids)]
        blocks[combo] = amplitude * _outer(vals)
        if all(isinstance(p, PolyExp) for p in profs):
            terms[combo] = [(amplitude, tuple(profs))]
        else:
            exact = False
    return TensorVector(model, blocks, terms if exact else None)


def combine(*pairs) -> TensorVector:
    """Linear combination ``sum c_k v_k`` keeping closed-form terms when possible."""
    out = None
    terms: Optional[dict] = {}
    for c, v in pairs:
        out = v.scaled(c) if out is None else out + v.scaled(c)
        if terms is not None and v.terms is not None:
            for k, lst in v.terms.items():
                terms.setdefault(k, []).extend((c * a, p) for a, p in lst)
        else:
            terms = None
    out.terms = terms
    return out


# ---------------------------------------------------------------------------
# partial Sobolev budgets


def _sigma_profile(p: PolyExp, varpi, k: int) -> PolyExp:
    for _ in range(k):
        p = p + (p.apply_X(varpi).apply_X(varpi) + p.apply_V(varpi).apply_V(varpi)) * (-1.0)
    return p


def _sigma_values(arr, grid, varpi, axis, k, order=None):
    for _ in range(k):
        xx = generator_values(generator_values(arr, grid, "X", varpi, axis, order), grid, "X", varpi, axis, order)
        vv = generator_values(generator_values(arr, grid, "V", varpi, axis, order), grid, "V", varpi, axis, order)
        arr = arr - xx - vv
    return arr


def budget_orders(model: TensorModel, directions: str = "XV"):
    """Per-factor exponents ``k_i`` of the budget operators.

    The Sobolev order of factor ``i`` (``zeta_i`` for ``XV``, ``gamma_i - eps``
    for ``U``) is rounded up to an even integer ``2 k_i``.
    """
    if directions == "XV":
        orders = model.zetas
    elif directions == "U":
        orders = [g - model.eps for g in model.gammas]
    else:
        raise DomainError("directions must be 'XV' or 'U'")
    return [int(math.ceil(o / 2.0 - 1e-12)) for o in orders]


def partial_budget(v: TensorVector, directions: str = "XV", orders: Optional[Sequence[int]] = None,
                   method: str = "auto") -> float:
    """``|| L_n^{k_n} ... L_1^{k_1} v ||`` with ``L_i = I - X_i^2 - V_i^2`` (``XV``)
    or ``L_i = I + lam_i^2`` (``U``)."""
    model = v.model
    ks = list(orders) if orders is not None else budget_orders(model, directions)
    if len(ks) != model.n:
        raise DomainError("one order per factor")
    if directions == "U":
        def fn(arr, grids):
            for ax, (g, k) in enumerate(zip(grids, ks)):
                mult = (1.0 + g.nodes**2) ** k
                shape = [1] * arr.ndim
                shape[ax] = -1
                arr = arr * mult.reshape(shape)
            return arr
        return v.map(fn).norm()
    exact = method == "exact" or (method == "auto" and v.terms is not None)
    if exact:
        if v.terms is None:
            raise ResolutionError("exact budgets need closed-form terms")
        blocks = {}
        for combo, lst in v.terms.items():
            irreps, grids, _ = model.component(combo)
            acc = 0
            for amp, profs in lst:
                vals = [_sigma_profile(p, ir.varpi, k)(g.nodes) for p, ir, g, k in zip(profs, irreps, grids, ks)]
                acc = acc + amp * _outer(vals)
            blocks[combo] = acc
        return TensorVector(model, blocks).norm()
    if max(ks) > 1:
        # Sigma is fourth order, so Sigma^2 would need eighth differences, which
        # round-off swamps on clustered grids
        raise ResolutionError("stencil budgets are limited to one power of Sigma per factor; use closed forms")

    def fn(arr, grids):
        for ax, (g, k) in enumerate(zip(grids, ks)):
            arr = _sigma_values(arr, g, _varpi_of(model, grids, ax), ax, k)
        return arr

    return v.map(fn).norm()


def _varpi_of(model, grids, ax):
    g = grids[ax]
    for fac_grids, fac in zip(model.grids, model.factors):
        for gg, ir in zip(fac_grids, fac.irreps):
            if gg is g:
                return ir.varpi
    raise DomainError("grid not found in model")


# ---------------------------------------------------------------------------
# Type II problems


@dataclass
class TypeIIProblem:
    exponents: Sequence[float]
    low_cutoff: CutoffProfile = CutoffProfile(1.0)
    inner_cutoff: CutoffProfile = CutoffProfile(0.5)

    def branches(self, model: TensorModel):
        """Distinct tuples ``(Lambda_1, ..., Lambda_n)``; real factors only allow ``U``."""
        choices = [("U",) if f.field_label == "R" else ("U", "iU") for f in model.factors]
        return list(itertools.product(*choices))


@dataclass
class BranchResult:
    branch: Tuple[str, ...]
    xi_part: TensorVector
    omega: Optional[TensorVector]
    norms: dict
    pieces: list
    verdict: str

    def row(self):
        return {
            "branch": "*".join(self.branch),
            "verdict": self.verdict,
            "xi_norm": self.norms["xi"],
            "omega_norm": self.norms["omega"],
            "pieces": len(self.pieces),
        }


def _axis_multiplier(arr, grids, fn_per_axis):
    out = arr
    for ax, g in enumerate(grids):
        m = fn_per_axis(ax, g)
        if m is None:
            continue
        shape = [1] * out.ndim
        shape[ax] = -1
        out = out * m.reshape(shape)
    return out


def _pieces_for(model: TensorModel, problem: TypeIIProblem, branch):
    """Yield ``(label, per-axis multiplier function)``.

    Real factor: low ``f`` / high ``1 - f``.  Complex factor on branch ``U``:
    high ``1 - f`` plus inner ``g f``; on branch ``iU``: middle ``(1 - g) f``.
    """
    f, g = problem.low_cutoff, problem.inner_cutoff
    per_axis = []
    for fac, lab in zip(model.factors, branch):
        if fac.field_label == "R":
            per_axis.append([("low", lambda x: f(x)), ("high", lambda x: 1.0 - f(x))])
        elif lab == "U":
            per_axis.append([("high", lambda x: 1.0 - f(x)), ("inner", lambda x: g(x) * f(x))])
        else:
            per_axis.append([("middle", lambda x: (1.0 - g(x)) * f(x))])
    for choice in itertools.product(*per_axis):
        yield tuple(c[0] for c in choice), [c[1] for c in choice]


def _solve_branches(xi: TensorVector, problem: TypeIIProblem, model: TensorModel) -> List[BranchResult]:
    r = [float(x) for x in problem.exponents]
    results = []
    for branch in problem.branches(model):
        part = None
        omega = None
        pieces = []
        worst = None
        for labels, mults in _pieces_for(model, problem, branch):
            def cut(arr, grids, mults=mults):
                return _axis_multiplier(arr, grids, lambda ax, g: mults[ax](g.nodes))

            def divide(arr, grids):
                return _axis_multiplier(arr, grids, lambda ax, g: np.abs(g.nodes) ** (-r[ax]))

            piece = xi.map(cut)
            sol = piece.map(divide)
            diags = []
            for ax in range(model.n):
                for combo, arr in sol.blocks.items():
                    _, grids, _ = model.component(combo)
                    others = _outer([gg.weights for j, gg in enumerate(grids) if j != ax]) if model.n > 1 else None
                    d = singularity_diagnostic(np.abs(arr) ** 2, grids[ax], axis=ax, other_weights=others)
                    diags.append((ax, combo, d))
            bad = [(ax, combo, d) for ax, combo, d in diags if not d["finite"]]
            pieces.append({
                "labels": labels,
                "xi_norm": piece.norm(),
                "omega_norm": sol.norm() if not bad else math.inf,
                "divergent_axes": sorted({ax + 1 for ax, _, _ in bad}),
                "divergence_exponent": max((d["divergence_exponent"] for _, _, d in bad), default=0.0),
            })
            if bad and worst is None:
                worst = bad[0]
            part = piece if part is None else part + piece
            omega = sol if omega is None else omega + sol
        verdict = "divergent" if worst is not None else "solvable"
        norms = {"xi": part.norm(), "omega": omega.norm() if worst is None else math.inf}
        if worst is not None:
            norms["divergent_factor"] = worst[0] + 1
            norms["divergence_exponent"] = worst[2]["divergence_exponent"]
        results.append(BranchResult(branch, part, omega if worst is None else None, norms, pieces, verdict))
    return results


def check_preconditions(problem: TypeIIProblem, model: TensorModel):
    if len(problem.exponents) != model.n:
        raise DomainError(f"need {model.n} exponents")
    for i, (r, g) in enumerate(zip(problem.exponents, model.gammas)):
        if r < 0:
            raise DomainError("exponents must be nonnegative")
        if r >= g:
            raise PreconditionError(f"factor {i + 1}: r = {r} is not below the spectral gap {g}", factor_index=i + 1)


def typeII_solve(xi: TensorVector, problem: TypeIIProblem, model: TensorModel) -> List[BranchResult]:
    """Decompose ``xi = sum_branches prod_i |Lambda_i|^{r_i} omega_branch``."""
    check_preconditions(problem, model)
    results = _solve_branches(xi, problem, model)
    for res in results:
        if res.verdict != "solvable":
            raise DivergenceError(
                f"branch {res.branch} diverges along factor {res.norms['divergent_factor']}",
                report=res,
                factor_index=res.norms["divergent_factor"],
            )
    return results


def reconstruct(results: List[BranchResult], problem: TypeIIProblem) -> TensorVector:
    r = list(problem.exponents)
    out = None
    for res in results:
        back = res.omega.map(
            lambda arr, grids: _axis_multiplier(arr, grids, lambda ax, g: np.abs(g.nodes) ** r[ax])
        )
        out = back if out is None else out + back
    return out


def complex_mapping_note(model: TensorModel) -> Optional[str]:
    if all(f.field_label == "R" for f in model.factors):
        return None
    return ("complex factors: branch U carries (1-P1) and P2 P1 pieces, branch iU carries (1-P2) P1; "
            "numerics run on the real surrogate grid")


def typeII_estimate_check(results: List[BranchResult], xi: TensorVector, model: TensorModel,
                          method: str = "auto") -> dict:
    """``R = max_branch ||omega_branch|| / ||Sigma_n^{k_n} ... Sigma_1^{k_1} xi||`` and the
    naive ratio ``||omega|| / ||xi||``."""
    budget = partial_budget(xi, "XV", method=method)
    xin = xi.norm()
    rows = []
    for res in results:
        rows.append({
            "branch": "*".join(res.branch),
            "omega_norm": res.norms["omega"],
            "ratio": res.norms["omega"] / budget,
            "naive_ratio": res.norms["omega"] / xin,
        })
    return {
        "R": max(r["ratio"] for r in rows),
        "naive": max(r["naive_ratio"] for r in rows),
        "budget": budget,
        "xi_norm": xin,
        "orders": budget_orders(model, "XV"),
        "rows": rows,
        "mapping": complex_mapping_note(model),
    }


def away_from_zero(center: float = 3.0, width: float = 1.0, cutoff: CutoffProfile = CutoffProfile(1.0)):
    """Gaussian bump with the low band removed, so it vanishes for ``|lam| <= cutoff.scale``."""
    g = gaussian(center, width)
    return lambda lam: (1.0 - cutoff(lam)) * g(lam)


@dataclass
class WitnessReport:
    factor_index: int
    exponents: List[float]
    component: int
    branches: List[BranchResult]

    @property
    def all_divergent(self) -> bool:
        return all(b.verdict == "divergent" for b in self.branches)

    def rows(self):
        return [
            {
                "branch": "*".join(b.branch),
                "verdict": b.verdict,
                "divergent_factor": b.norms.get("divergent_factor"),
                "divergence_exponent": b.norms.get("divergence_exponent", 0.0),
            }
            for b in self.branches
        ]


def sharpness_witness(model: TensorModel, factor_index: int, r_i: float,
                      other_exponents: Optional[Sequence[float]] = None) -> WitnessReport:
    """Build ``xi = v_1 x ... x v_n`` that defeats every branch at exponent ``r_i``.

    ``factor_index`` is 1-based.  ``v_i`` is the slowest-decaying standard
    profile in the component realizing the gap of factor ``i``; the other
    factors carry bumps vanishing near 0.  Other exponents default to half
    their gaps.
    """
    i = factor_index - 1
    if not 0 <= i < model.n:
        raise DomainError(f"factor index must be in 1..{model.n}")
    gam = model.gammas[i]
    if not r_i > gam:
        raise ConstructionError(f"r = {r_i} does not exceed the gap {gam}; not a witness regime")
    fac = model.factors[i]
    comp = min(range(len(fac.components)), key=lambda c: (fac.irreps[c].optimal_rate, c))
    if fac.irreps[comp].optimal_rate > gam + 1e-12:
        raise ConstructionError("no component realizes the gap")
    profs = []
    for j in range(model.n):
        if j == i:
            profs.append({comp: fac.irreps[comp].standard_profile()})
        else:
            profs.append(away_from_zero())
    xi = product_vector(model, profs)
    exps = list(other_exponents) if other_exponents is not None else [0.5 * g for g in model.gammas]
    exps[i] = r_i
    results = _solve_branches(xi, TypeIIProblem(exps), model)
    return WitnessReport(factor_index, exps, comp, results)
