"""Higher-order mixing bookkeeping: the two-block partition induction, its
verification, and the resulting bound kernels.

Points are split Cartan coordinates ``t_1, ..., t_n`` in ``R^m`` and each root
``beta`` of the strongly orthogonal system acts by a linear functional ``b``,
``beta(a^t) = exp(<b, t>)``.  All comparisons are made on these logarithms.

Indices in plans and reports are 1-based, matching the usual ``t_1 .. t_{k+1}``
labelling with ``t_{k+1}`` as the reference point.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import DegenerateGapError, DomainError, OrderingError
from .rootsys import CartanElement, RootSystem, weyl_positive


@dataclass
class GapConfiguration:
    """``t_vectors`` is ``n x m``; ``functionals`` is ``l x m`` (one row per root).

    When ``root_system`` is given the functionals must be roots of it in its
    ambient coordinates (``m = rs.dim``) and ``eta`` evaluates roots at the
    dominant Weyl representative.  Otherwise each root contributes
    ``max(beta(a), beta(a^-1))``.
    """

    t_vectors: np.ndarray
    functionals: np.ndarray
    gammas: Sequence[float]
    root_system: Optional[RootSystem] = None
    penalty: Optional[float] = None

    def __post_init__(self):
        self.t_vectors = np.atleast_2d(np.asarray(self.t_vectors, dtype=float))
        self.functionals = np.atleast_2d(np.asarray(self.functionals, dtype=float))
        self.gammas = tuple(float(g) for g in self.gammas)
        n, m = self.t_vectors.shape
        if self.functionals.shape[1] != m:
            raise DomainError("functionals and t_vectors disagree on the rank m")
        if len(self.gammas) != self.functionals.shape[0]:
            raise DomainError("one gap per root functional")
        if any(not g > 0 for g in self.gammas):
            raise DomainError("gaps must be positive")
        if self.root_system is not None and self.root_system.dim != m:
            raise DomainError("root-system coordinates must match the rank m")
        if self.penalty is not None and self.penalty < 0:
            raise DomainError("penalty exponent must be nonnegative")

    @property
    def n(self) -> int:
        return self.t_vectors.shape[0]

    @property
    def m(self) -> int:
        return self.t_vectors.shape[1]

    @property
    def l(self) -> int:  # noqa: E743
        return self.functionals.shape[0]

    def log_beta(self, i: int, t) -> float:
        """``log beta_i(a^t)`` for 0-based root index ``i``."""
        return float(self.functionals[i] @ np.asarray(t, dtype=float))

    def diff(self, i: int, j: int):
        """``t_i - t_j`` for 1-based point indices."""
        return self.t_vectors[i - 1] - self.t_vectors[j - 1]

    def log_eta(self, t, eps: float) -> float:
        """``log eta_eps(S, a^t)``."""
        if not 0 < eps < min(self.gammas):
            raise DomainError("need 0 < eps < min gamma")
        t = np.asarray(t, dtype=float)
        if self.root_system is not None:
            ap = weyl_positive(CartanElement(t), self.root_system)
            vals = [ap.log_value(tuple(int(c) for c in b)) for b in self.functionals]
        else:
            vals = [abs(float(b @ t)) for b in self.functionals]
        return -sum((g - eps) * v for g, v in zip(self.gammas, vals))

    def to_dict(self):
        return {
            "t_vectors": self.t_vectors.tolist(),
            "functionals": self.functionals.tolist(),
            "gammas": list(self.gammas),
            "root_system": None if self.root_system is None else self.root_system.name,
            "penalty": self.penalty,
        }


def max_gap_pair(config: GapConfiguration) -> Tuple[int, int]:
    """1-based ``(i, j)``, ``i < j``, maximizing ``||t_i - t_j||`` (first pair on ties)."""
    best, pair = -1.0, (1, 2)
    for i, j in itertools.combinations(range(1, config.n + 1), 2):
        d = float(np.linalg.norm(config.diff(i, j)))
        if d > best * (1 + 1e-12) + 1e-300:
            best, pair = d, (i, j)
    return pair


def reorder_for_partition(config: GapConfiguration) -> Tuple[GapConfiguration, List[int]]:
    """Relabel points so the maximal gap is between ``t_1`` and ``t_{k+1}``.

    Returns the reordered configuration and ``perm`` with
    ``new point p = old point perm[p-1]``.
    """
    i, j = max_gap_pair(config)
    rest = [p for p in range(1, config.n + 1) if p not in (i, j)]
    perm = [i] + rest + [j]
    t = config.t_vectors[[p - 1 for p in perm]]
    return GapConfiguration(t, config.functionals, config.gammas, config.root_system, config.penalty), perm


@dataclass(frozen=True)
class RootChoice:
    index: int          # 1-based root index i0
    orientation: int    # +1 or -1
    mode: str           # 'weyl' or 'folded'
    lhs: float          # log eta_{eps/2}(S, a^{t_1 - t_{k+1}}) / l
    rhs: float          # -(gamma - eps/2) * log beta(a^{orientation (t_{k+1} - t_1)})


def choose_root_index(config: GapConfiguration, eps: float, first: int = 1, last: Optional[int] = None) -> RootChoice:
    """Pick ``(i0, orientation)`` with
    ``eta_{eps/2}(S, a^{t_1 - t_{k+1}})^{1/l} >= beta_{i0}(a^{+-(t_{k+1} - t_1)})^{-(gamma_{i0} - eps/2)}``.

    The strongest valid root wins, ties going to the smaller index.  If the
    Weyl-positive ``eta`` admits no valid root the folded ``eta`` (where the
    pigeonhole always succeeds) is used instead.
    """
    return valid_root_choices(config, eps, first, last)[0]


def valid_root_choices(config: GapConfiguration, eps: float, first: int = 1,
                       last: Optional[int] = None) -> List[RootChoice]:
    """All valid ``(i0, orientation)`` pairs, strongest first."""
    last = config.n if last is None else last
    d = config.diff(last, first)
    if not np.any(d):
        raise DegenerateGapError("the reference points coincide")
    half = eps / 2.0
    contrib = []
    for i in range(config.l):
        v = config.log_beta(i, d)
        for sgn in (1, -1):
            contrib.append((-(config.gammas[i] - half) * sgn * v, i, sgn))
    modes = ["weyl", "folded"] if config.root_system is not None else ["folded"]
    for mode in modes:
        if mode == "weyl":
            lhs = config.log_eta(-d, half) / config.l
        else:
            lhs = -sum((g - half) * abs(config.log_beta(i, d)) for i, g in enumerate(config.gammas)) / config.l
        valid = [(rhs, i, sgn) for rhs, i, sgn in contrib if lhs >= rhs - 1e-12 * (1 + abs(rhs)) and rhs < 0]
        if valid:
            valid.sort(key=lambda x: (x[0], x[1], -x[2]))
            return [RootChoice(i + 1, sgn, mode, lhs, rhs) for rhs, i, sgn in valid]
    raise DegenerateGapError("no root separates t_1 from t_{k+1}")


@dataclass
class PartitionPlan:
    i0: int
    orientation: int
    k: int
    log_c: float
    j: int
    D1: List[int]
    D2: List[int]
    D11: List[int]
    D12: List[int]
    q1: int
    q2: int
    log_values: List[float] = field(default_factory=list)

    @property
    def c(self) -> float:
        return math.exp(self.log_c)

    def to_dict(self):
        return {
            "i0": self.i0,
            "orientation": self.orientation,
            "k": self.k,
            "c": self.c,
            "log_c": self.log_c,
            "j": self.j,
            "D1": self.D1,
            "D2": self.D2,
            "D11": self.D11,
            "D12": self.D12,
            "q1": self.q1,
            "q2": self.q2,
            "log_values": self.log_values,
        }


def _x(config: GapConfiguration, choice: RootChoice, i: int, ref: int) -> float:
    """``log beta_{i0}(a^{t_ref - t_i})`` with the chosen orientation."""
    return choice.orientation * config.log_beta(choice.index - 1, config.diff(ref, i))


def build_partition(config: GapConfiguration, choice: RootChoice, k: Optional[int] = None) -> PartitionPlan:
    """Steps T1-T8 of the two-block induction for points ``t_1 .. t_{k+1}``.

    Interval endpoints are compared on logarithms; a value equal to
    ``c^{j/k}`` goes to ``D11``.  Among admissible ``j`` the one that keeps
    point 1 in ``D12`` is preferred, then the smallest.
    """
    k = config.n - 1 if k is None else k
    if k < 1 or k + 1 > config.n:
        raise OrderingError("need 1 <= k <= n - 1")
    ref = k + 1
    d1 = np.linalg.norm(config.diff(1, ref))
    for a, b in itertools.combinations(range(1, k + 2), 2):
        if np.linalg.norm(config.diff(a, b)) > d1 * (1 + 1e-12):
            raise OrderingError("||t_1 - t_{k+1}|| is not the maximal gap; reorder first")
    x = [_x(config, choice, i, ref) for i in range(1, k + 1)]
    if not x[0] > 0:
        raise OrderingError("beta_i0(a^{t_{k+1} - t_1}) must exceed 1")
    D1 = [i for i in range(1, k + 1) if x[i - 1] > 0]
    D2 = [i for i in range(1, k + 1) if x[i - 1] <= 0]
    log_c = max(x[i - 1] for i in D1)
    cut = [log_c * jj / k for jj in range(k)] + [log_c]
    interior = [x[i - 1] for i in D1 if x[i - 1] < log_c]
    admissible = [jj for jj in range(k) if not any(cut[jj] < v < cut[jj + 1] for v in interior)]
    if not admissible:
        raise OrderingError("pigeonhole failed: every subinterval is occupied")
    keeps_one = [jj for jj in admissible if x[0] >= cut[jj + 1]]
    j = (keeps_one or admissible)[0]
    D11 = [i for i in D1 if x[i - 1] <= cut[j]]
    D12 = [i for i in D1 if x[i - 1] >= cut[j + 1] and i not in D11]
    q1 = max(D11, key=lambda i: (x[i - 1], -i)) if D11 else k + 1
    q2 = min(D12, key=lambda i: (x[i - 1], i))
    return PartitionPlan(choice.index, choice.orientation, k, log_c, j, D1, D2, D11, D12, q1, q2, x)


def plan_partition(config: GapConfiguration, eps: float):
    """Reorder, choose ``i0`` and build a plan, using the labelling freedom.

    The two endpoints of the maximal gap may be labelled either way round and
    any valid root may serve as ``i0``.  The first combination (strongest root,
    default labelling first) whose plan passes :func:`verify_partition` is
    returned together with the permutation; if none passes, the default plan is
    returned and its violations are left for the caller to report.
    """
    base, perm = reorder_for_partition(config)
    swapped_perm = [perm[-1]] + perm[1:-1] + [perm[0]]
    swapped = GapConfiguration(config.t_vectors[[p - 1 for p in swapped_perm]], config.functionals,
                               config.gammas, config.root_system, config.penalty)
    first = None
    for cfg, pm in ((base, perm), (swapped, swapped_perm)):
        for choice in valid_root_choices(cfg, eps):
            plan = build_partition(cfg, choice)
            ok, _ = verify_partition(plan, cfg)
            if first is None:
                first = (plan, cfg, pm)
            if ok:
                return plan, cfg, pm
    return first


def verify_partition(plan: PartitionPlan, config: GapConfiguration, k: Optional[int] = None,
                     tol: float = 1e-12) -> Tuple[bool, List[str]]:
    """Check every structural invariant and proof inequality of ``plan``."""
    k = plan.k if k is None else k
    bad = []
    full = set(range(1, k + 1))
    D1, D2, D11, D12 = map(set, (plan.D1, plan.D2, plan.D11, plan.D12))
    if D1 | D2 != full or D1 & D2:
        bad.append("D1, D2 do not partition {1..k}")
    if D11 | D12 != D1 or D11 & D12:
        bad.append("D11, D12 do not partition D1")
    if 1 not in D12:
        bad.append("1 is not in D12")
    choice = RootChoice(plan.i0, plan.orientation, "", 0.0, 0.0)
    x = {i: _x(config, choice, i, k + 1) for i in range(1, k + 2)}
    scale = tol * (1.0 + abs(plan.log_c))
    if any(x[i] <= 0 for i in D1) or any(x[i] > 0 for i in D2):
        bad.append("D1/D2 membership disagrees with the > 1 test")
    if D1 and abs(max(x[i] for i in D1) - plan.log_c) > scale:
        bad.append("c is not the maximum over D1")
    lo, hi = plan.log_c * plan.j / k, plan.log_c * (plan.j + 1) / k
    if any(lo + scale < x[i] < hi - scale for i in D1):
        bad.append("a D1 value lies inside (c^{j/k}, c^{(j+1)/k})")
    if any(x[i] > lo + scale for i in D11):
        bad.append("D11 value above c^{j/k}")
    if any(x[i] < hi - scale for i in D12):
        bad.append("D12 value below c^{(j+1)/k}")
    q1, q2 = plan.q1, plan.q2
    if D11:
        if q1 not in D11 or any(x[i] > x[q1] + scale for i in D11):
            bad.append("q1 is not the argmax over D11")
    elif q1 != k + 1:
        bad.append("q1 must be k+1 when D11 is empty")
    if q2 not in D12 or any(x[i] < x[q2] - scale for i in D12):
        bad.append("q2 is not the argmin over D12")
    # step (x): beta(a^{t_i - t_q1}) >= 1 on D11, D2 and k+1
    for i in sorted(D11 | D2 | {k + 1}):
        if x[q1] - x[i] < -scale:
            bad.append(f"step (x) fails at i = {i}")
    # step (y1): beta(a^{t_i - t_q2}) <= 1 on D12
    for i in sorted(D12):
        if x[q2] - x[i] > scale:
            bad.append(f"step (y1) fails at i = {i}")
    pivot = x[q2] - x[q1]
    if pivot < plan.log_c / k - scale:
        bad.append("pivot gap beta(a^{t_q1 - t_q2}) below c^{1/k}")
    return not bad, bad


def partition_tree(config: GapConfiguration, eps: float, indices: Optional[List[int]] = None, depth: int = 0):
    """Apply the partition recursively inside each block until blocks are singletons.

    Blocks are ``{q1-side} = D11 + D2 + {k+1}`` and ``{q2-side} = D12``.
    Returns a nested dict with the level count.
    """
    indices = list(range(1, config.n + 1)) if indices is None else indices
    if len(indices) == 1:
        return {"points": indices, "depth": depth, "children": []}
    sub = GapConfiguration(config.t_vectors[[i - 1 for i in indices]], config.functionals, config.gammas,
                           config.root_system)
    try:
        plan, sub, perm = plan_partition(sub, eps)
    except DegenerateGapError:
        # coincident points: peel one off
        return {"points": indices, "depth": depth,
                "children": [partition_tree(config, eps, indices[:1], depth + 1),
                             partition_tree(config, eps, indices[1:], depth + 1)]}
    k = plan.k
    left = sorted(set(plan.D11) | set(plan.D2) | {k + 1})
    right = sorted(plan.D12)
    to_orig = lambda block: [indices[perm[p - 1] - 1] for p in block]  # noqa: E731
    return {
        "points": indices,
        "depth": depth,
        "plan": plan.to_dict(),
        "children": [partition_tree(config, eps, to_orig(left), depth + 1),
                     partition_tree(config, eps, to_orig(right), depth + 1)],
    }


def tree_depth(tree) -> int:
    if not tree["children"]:
        return 0
    return 1 + max(tree_depth(c) for c in tree["children"])


# ---------------------------------------------------------------------------
# bounds


def pair_log_eta(config: GapConfiguration, eps: float):
    """``{(i, j): log eta_eps(S, a^{t_i - t_j})}`` over 1-based pairs ``i < j``."""
    return {(i, j): config.log_eta(config.diff(i, j), eps) for i, j in itertools.combinations(range(1, config.n + 1), 2)}


def higher_order_bound(n: int, config: GapConfiguration, eps: float, norm_product: float = 1.0) -> dict:
    """``max_{i != j} eta_eps(S, a^{t_i - t_j})^{1/((n-1)|S|)}`` times ``norm_product``.

    A polynomial penalty ``max_i (||t_i|| + 1)^d`` is reported separately.
    """
    if n < 2:
        raise DomainError("n must be at least 2")
    if n != config.n:
        raise DomainError("n does not match the configuration")
    etas = pair_log_eta(config, eps)
    pair, le = max(etas.items(), key=lambda kv: (kv[1], [-x for x in kv[0]]))
    expo = 1.0 / ((n - 1) * config.l)
    kernel = math.exp(le * expo)
    out = {"kernel": kernel, "exponent": expo, "pair": list(pair), "bound": kernel * norm_product}
    if config.penalty is not None:
        pen = max((float(np.linalg.norm(t)) + 1.0) ** config.penalty for t in config.t_vectors)
        out["penalty_factor"] = pen
        out["bound_with_penalty"] = kernel * norm_product * pen
    return out


def _case_tag(x21: float, x31: float) -> Tuple[str, bool]:
    """Case of the triple estimate by ``beta(t_2 - t_1)`` against ``beta(t_3 - t_1)``.

    Returns the tag and whether the printed form of the third condition holds.
    The printed third condition ``beta31^{1/2} <= beta21 <= beta32`` only holds at
    ``beta21 = beta31^{1/2}``; the window ``(beta31^{1/2}, beta31]`` it leaves
    uncovered is assigned to J3.
    """
    if x21 < 0:
        return "J1", True
    if x21 < 0.5 * x31:
        return "J2", True
    x32 = x31 - x21
    if x21 <= x32:
        return "J3", True
    if x21 <= x31:
        return "J3", False
    return "J4", True


def triple_bound(config: GapConfiguration, eps: float, split: bool = False) -> dict:
    """Three-point kernel ``eta^{1/(2|S|)}`` at the max-gap pair (or, with
    ``split=True``, at the pair of smallest ``eta``) plus the case tag."""
    if config.n != 3:
        raise DomainError("triple_bound needs exactly three points")
    etas = pair_log_eta(config, eps)
    if split:
        pair = min(etas, key=lambda p: (etas[p], p))
    else:
        pair = max_gap_pair(config)
    expo = 1.0 / (2 * config.l)
    value = math.exp(etas[pair] * expo)
    p1, p3 = pair
    p2 = ({1, 2, 3} - {p1, p3}).pop()
    perm = [p1, p2, p3]
    sub = GapConfiguration(config.t_vectors[[p - 1 for p in perm]], config.functionals, config.gammas,
                           config.root_system)
    tag, printed = "degenerate", False
    try:
        choice = choose_root_index(sub, eps)
        b = choice.index - 1
        x21 = choice.orientation * sub.log_beta(b, sub.diff(2, 1))
        x31 = choice.orientation * sub.log_beta(b, sub.diff(3, 1))
        tag, printed = _case_tag(x21, x31)
    except DegenerateGapError:
        choice = None
    return {
        "value": value,
        "exponent": expo,
        "pair": list(pair),
        "regime": "split" if split else "general",
        "case": tag,
        "case_as_printed": printed,
        "i0": None if choice is None else choice.index,
        "order": perm,
    }


def quad_obstruction_report(c_abs: float, f1_sq: float, C: float, eta: Callable[[int], float],
                            norms: float = 1.0, m_max: int = 100_000) -> dict:
    """Smallest ``m`` with ``|c| int f1^2 - C eta(m)^{1/2} norms > 0``.

    Past ``m*`` the lower bound on the four-point correlation contradicts any
    claimed uniform bound by the minimal-gap kernel.
    """
    if not c_abs > 0 or not f1_sq > 0:
        raise DomainError("|c| and int f1^2 must be positive")
    if C < 0 or norms < 0:
        raise DomainError("C and norms must be nonnegative")
    target = c_abs * f1_sq
    rows = []
    for m in range(m_max + 1):
        e = float(eta(m))
        if not 0 <= e:
            raise DomainError("eta must be nonnegative")
        lower = target - C * math.sqrt(e) * norms
        if m < 5 or m % max(1, m_max // 100) == 0:
            rows.append({"m": m, "eta": e, "lower_bound": lower})
        if lower > 0:
            rows.append({"m": m, "eta": e, "lower_bound": lower})
            return {"m_star": m, "status": "contradiction", "lower_bound": lower, "rows": rows,
                    "chain": f"|c| int f1^2 = {target:g} > C eta(m*)^(1/2) norms = {C * math.sqrt(e) * norms:g}"}
    return {"m_star": None, "status": "no contradiction in range", "rows": rows, "m_max": m_max}
