"""Root systems, strongly orthogonal systems and the decay exponents built on them.

Roots are exact integer vectors in the standard orthogonal basis of the ambient
space (``n+1`` coordinates for ``A_n``, 3 for ``G2``, ``n`` otherwise).  Cartan
elements are given by real log-coordinates in the same ambient space, so that
``theta(a) = exp(<theta, log_coords>)``.
"""

from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from .errors import CapacityError, ConfigurationError, DomainError

Root = Tuple[int, ...]

SOS_SEARCH_CAP = 24


def _unit(dim, i, c=1):
    v = [0] * dim
    v[i] = c
    return v


def _add(*vs):
    return tuple(int(sum(c)) for c in zip(*vs))


def _neg(v):
    return tuple(-c for c in v)


def _dot(u, v):
    return sum(a * b for a, b in zip(u, v))


@dataclass(frozen=True)
class RootSystem:
    family: str
    rank: int
    roots: Tuple[Root, ...]
    positive_roots: Tuple[Root, ...]
    simple_roots: Tuple[Root, ...]
    field_labels: Dict[Root, str] = field(default_factory=dict, compare=False)

    @property
    def dim(self) -> int:
        return len(self.simple_roots[0])

    @property
    def name(self) -> str:
        return "G2" if self.family == "G2" else f"{self.family}{self.rank}"

    def label(self, root: Root) -> str:
        return self.field_labels.get(tuple(root), "R")

    def simple_coefficients(self, root) -> Tuple[int, ...]:
        """Integer coordinates of ``root`` in the basis of simple roots."""
        S = np.array(self.simple_roots, dtype=float).T
        sol, *_ = np.linalg.lstsq(S, np.asarray(root, dtype=float), rcond=None)
        coef = tuple(int(c) for c in np.rint(sol))
        back = tuple(int(sum(c * s[k] for c, s in zip(coef, self.simple_roots))) for k in range(self.dim))
        if back != tuple(root):
            raise DomainError(f"{root} is not in the root lattice of {self.name}")
        return coef

    def is_root(self, v) -> bool:
        return tuple(v) in self.roots

    def reflect(self, alpha, v):
        """Weyl reflection ``s_alpha(v)`` (exact for integer input)."""
        num = 2 * _dot(v, alpha)
        den = _dot(alpha, alpha)
        if all(isinstance(c, (int, np.integer)) for c in v) and num % den == 0:
            k = num // den
            return tuple(int(a - k * b) for a, b in zip(v, alpha))
        k = num / den
        return tuple(float(a - k * b) for a, b in zip(v, alpha))

    def to_dict(self):
        return {
            "family": self.family,
            "rank": self.rank,
            "roots": [list(r) for r in self.roots],
            "positive_roots": [list(r) for r in self.positive_roots],
            "simple_roots": [list(r) for r in self.simple_roots],
            "field_labels": [self.label(r) for r in self.positive_roots],
        }

    @classmethod
    def from_dict(cls, d):
        pos = tuple(tuple(r) for r in d["positive_roots"])
        labels = {r: lab for r, lab in zip(pos, d.get("field_labels", ["R"] * len(pos)))}
        return cls(
            d["family"],
            int(d["rank"]),
            tuple(tuple(r) for r in d["roots"]),
            pos,
            tuple(tuple(r) for r in d["simple_roots"]),
            labels,
        )


def build_root_system(family: str, rank: int, complex_roots: Sequence[Root] = ()) -> RootSystem:
    """Standard root data for ``A_n`` (n>=1), ``B_n`` (n>=1), ``C_n`` (n>=1),
    ``D_n`` (n>=2) and ``G2`` (rank 2).

    ``complex_roots`` lists positive roots whose field label is ``C``.
    """
    family = str(family).upper()
    if family == "G":
        family = "G2"
    if not isinstance(rank, (int, np.integer)) or rank < 1:
        raise ConfigurationError("rank must be a positive integer")
    rank = int(rank)
    if family == "A":
        d = rank + 1
        pos = [_add(_unit(d, i), _unit(d, j, -1)) for i in range(d) for j in range(i + 1, d)]
        simple = [_add(_unit(d, i), _unit(d, i + 1, -1)) for i in range(rank)]
    elif family in ("B", "C", "D"):
        d = rank
        if family == "D" and rank < 2:
            raise ConfigurationError("D_n needs n >= 2")
        pos = []
        for i in range(d):
            for j in range(i + 1, d):
                pos.append(_add(_unit(d, i), _unit(d, j, -1)))
                pos.append(_add(_unit(d, i), _unit(d, j)))
        if family == "B":
            pos += [tuple(_unit(d, i)) for i in range(d)]
        elif family == "C":
            pos += [tuple(_unit(d, i, 2)) for i in range(d)]
        simple = [_add(_unit(d, i), _unit(d, i + 1, -1)) for i in range(rank - 1)]
        if family == "B":
            simple.append(tuple(_unit(d, d - 1)))
        elif family == "C":
            simple.append(tuple(_unit(d, d - 1, 2)))
        else:
            simple.append(_add(_unit(d, d - 2), _unit(d, d - 1)))
    elif family == "G2":
        if rank != 2:
            raise ConfigurationError("G2 has rank 2")
        a1, a2 = (1, -1, 0), (-2, 1, 1)
        pos = [_add(*([a1] * p + [a2] * q)) for p, q in ((1, 0), (0, 1), (1, 1), (2, 1), (3, 1), (3, 2))]
        simple = [a1, a2]
    else:
        raise ConfigurationError(f"unsupported family {family!r}; use A, B, C, D or G2")

    pos = sorted(set(tuple(p) for p in pos), reverse=True)
    roots = tuple(pos) + tuple(_neg(p) for p in pos)
    labels = {tuple(r): "C" for r in complex_roots}
    for r in labels:
        if r not in pos:
            raise DomainError(f"{r} is not a positive root")
    rs = RootSystem(family, rank, roots, tuple(pos), tuple(tuple(s) for s in simple), labels)
    for p in rs.positive_roots:
        if min(rs.simple_coefficients(p)) < 0:
            raise ConfigurationError(f"internal: {p} is not positive")
    return rs


def format_root(root) -> str:
    """Ambient-coordinate label such as ``e1-e4`` or ``2e1``."""
    parts = []
    for k, c in enumerate(root, start=1):
        c = int(c)
        if c == 0:
            continue
        mag = "" if abs(c) == 1 else str(abs(c))
        sign = "-" if c < 0 else ("+" if parts else "")
        parts.append(f"{sign}{mag}e{k}")
    return "".join(parts) or "0"


def classical_positive_count(family: str, rank: int) -> int:
    n = rank
    return {"A": n * (n + 1) // 2, "B": n * n, "C": n * n, "D": n * (n - 1), "G2": 6}[family.upper()]


# ---------------------------------------------------------------------------
# strongly orthogonal systems


@dataclass(frozen=True)
class StronglyOrthogonalSystem:
    members: Tuple[Root, ...]
    formal_sum_coeffs: Tuple[int, ...]
    maximal: bool
    system: Optional[RootSystem] = field(default=None, compare=False)
    incomparable: Tuple[Tuple[Root, ...], ...] = field(default=(), compare=False)

    def __len__(self):
        return len(self.members)

    def to_dict(self):
        d = {
            "members": [list(m) for m in self.members],
            "formal_sum_coeffs": list(self.formal_sum_coeffs),
            "maximal": self.maximal,
        }
        if self.system is not None:
            d["system"] = {"family": self.system.family, "rank": self.system.rank}
        if self.incomparable:
            d["incomparable"] = [[list(m) for m in c] for c in self.incomparable]
        return d


def _check_members(candidate, rs: RootSystem):
    out = []
    for r in candidate:
        r = tuple(int(c) for c in r)
        if r not in rs.positive_roots:
            raise DomainError(f"{r} is not a positive root of {rs.name}")
        out.append(r)
    return out


def _strongly_orthogonal_pair(a, b, rs: RootSystem) -> bool:
    return not rs.is_root(_add(a, b)) and not rs.is_root(_add(a, _neg(b)))


def is_strongly_orthogonal(candidate, rs: RootSystem) -> bool:
    members = _check_members(candidate, rs)
    return all(
        _strongly_orthogonal_pair(a, b, rs) for a, b in itertools.combinations(set(members), 2)
    )


def formal_sum_coefficients(members, rs: RootSystem) -> Tuple[int, ...]:
    total = [0] * rs.rank
    for m in members:
        for k, c in enumerate(rs.simple_coefficients(m)):
            total[k] += c
    return tuple(total)


def _dominates(u, v) -> bool:
    return all(a >= b for a, b in zip(u, v))


def find_maximal_sos(rs: RootSystem) -> StronglyOrthogonalSystem:
    """Strongly orthogonal system whose simple-root coefficients dominate all others.

    Only maximal cliques of the strong-orthogonality graph need comparing,
    because coefficients of positive roots are nonnegative.  Among dominating
    systems with equal sums the lexicographically largest member list wins.
    If no system dominates, the largest one is returned with ``maximal=False``
    and the incomparable competitors attached.
    """
    pos = rs.positive_roots
    if len(pos) > SOS_SEARCH_CAP:
        raise CapacityError(f"{rs.name} has {len(pos)} positive roots; search cap is {SOS_SEARCH_CAP}")
    g = nx.Graph()
    g.add_nodes_from(pos)
    g.add_edges_from((a, b) for a, b in itertools.combinations(pos, 2) if _strongly_orthogonal_pair(a, b, rs))
    cliques = [tuple(sorted(c, reverse=True)) for c in nx.find_cliques(g)]
    sums = {c: formal_sum_coefficients(c, rs) for c in cliques}
    dominating = [c for c in cliques if all(_dominates(sums[c], sums[o]) for o in cliques)]
    if dominating:
        best = max(dominating)
        return StronglyOrthogonalSystem(best, sums[best], True, rs)
    best = max(cliques, key=lambda c: (len(c), sum(sums[c]), c))
    rivals = tuple(sorted(c for c in cliques if not _dominates(sums[best], sums[c])))
    return StronglyOrthogonalSystem(best, sums[best], False, rs, rivals)


def make_sos(members, rs: RootSystem) -> StronglyOrthogonalSystem:
    """Wrap a user-chosen strongly orthogonal set (``maximal`` is not certified)."""
    members = tuple(_check_members(members, rs))
    if not is_strongly_orthogonal(members, rs):
        raise DomainError("members are not pairwise strongly orthogonal")
    return StronglyOrthogonalSystem(members, formal_sum_coefficients(members, rs), False, rs)


# ---------------------------------------------------------------------------
# Cartan elements and the Weyl group


@dataclass(frozen=True)
class CartanElement:
    log_coords: Tuple[float, ...]

    def __init__(self, log_coords):
        object.__setattr__(self, "log_coords", tuple(float(x) for x in log_coords))

    def log_value(self, root) -> float:
        return float(_dot(root, self.log_coords))

    def value(self, root) -> float:
        return math.exp(self.log_value(root))

    def inverse(self) -> "CartanElement":
        return CartanElement(tuple(-x for x in self.log_coords))

    def __mul__(self, other: "CartanElement") -> "CartanElement":
        return CartanElement(tuple(a + b for a, b in zip(self.log_coords, other.log_coords)))


def weyl_orbit(v, rs: RootSystem, digits: int = 12):
    """All images of ``v`` under the Weyl group, by closure under simple reflections."""
    start = tuple(v)
    key = lambda w: tuple(round(float(c), digits) for c in w)  # noqa: E731
    seen = {key(start): start}
    queue = deque([start])
    while queue:
        w = queue.popleft()
        for alpha in rs.simple_roots:
            u = rs.reflect(alpha, w)
            k = key(u)
            if k not in seen:
                seen[k] = u
                queue.append(u)
    return list(seen.values())


def is_dominant(a: CartanElement, rs: RootSystem, tol: float = 0.0) -> bool:
    return all(a.log_value(alpha) >= -tol for alpha in rs.simple_roots)


def weyl_positive(a: CartanElement, rs: RootSystem) -> CartanElement:
    """The Weyl-orbit element of ``a`` in the closed positive chamber."""
    x = tuple(a.log_coords)
    if len(x) != rs.dim:
        raise DomainError(f"log_coords must have length {rs.dim} for {rs.name}")
    scale = max(1.0, max(abs(c) for c in x))
    for _ in range(10 * len(rs.positive_roots) + 10):
        for alpha in rs.simple_roots:
            if _dot(alpha, x) < -1e-13 * scale:
                x = rs.reflect(alpha, x)
                break
        else:
            return CartanElement(x)
    raise DomainError("reflection descent did not terminate")  # unreachable for finite Weyl groups


# ---------------------------------------------------------------------------
# exponents


@dataclass(frozen=True)
class SpectralGapProfile:
    """Gaps ``gamma_theta`` aligned with the members of an SOS.

    ``regime`` optionally asserts the real-root constraint: ``'continuous'``
    (no discrete series, gamma <= 1/2) or ``'discrete'`` (half-integers).
    """

    gammas: Tuple[float, ...]
    field_labels: Tuple[str, ...] = ()
    regime: Optional[str] = None

    def __post_init__(self):
        labels = self.field_labels or ("R",) * len(self.gammas)
        object.__setattr__(self, "field_labels", tuple(labels))
        object.__setattr__(self, "gammas", tuple(float(g) for g in self.gammas))
        if len(self.field_labels) != len(self.gammas):
            raise DomainError("field_labels and gammas differ in length")
        for g, lab in zip(self.gammas, self.field_labels):
            if lab not in ("R", "C"):
                raise DomainError(f"field label must be R or C, got {lab!r}")
            if not g > 0:
                raise DomainError("spectral gaps must be positive")
            if lab == "C" and g > 1:
                raise DomainError("complex roots need 0 < gamma <= 1")
            if lab == "R" and self.regime == "continuous" and g > 0.5:
                raise DomainError("without discrete series gamma <= 1/2")
            if lab == "R" and self.regime == "discrete" and abs(2 * g - round(2 * g)) > 1e-12:
                raise DomainError("purely discrete gaps are half-integers")

    def to_dict(self):
        return {"gammas": list(self.gammas), "field_labels": list(self.field_labels), "regime": self.regime}


def _aligned(S, gaps):
    if len(S.members) != len(gaps.gammas):
        raise DomainError("gap profile does not match the SOS size")


def log_eta_epsilon(S: StronglyOrthogonalSystem, a: CartanElement, gaps: SpectralGapProfile, eps: float,
                    rs: Optional[RootSystem] = None) -> float:
    _aligned(S, gaps)
    if not gaps.gammas:
        return 0.0
    if not 0.0 < eps < min(gaps.gammas):
        raise DomainError(f"need 0 < eps < min gamma = {min(gaps.gammas)}")
    rs = rs or S.system
    if rs is None:
        raise DomainError("a root system is needed to find a+")
    ap = weyl_positive(a, rs)
    return -sum((g - eps) * ap.log_value(th) for th, g in zip(S.members, gaps.gammas))


def eta_epsilon(S, a, gaps, eps, rs=None) -> float:
    """``prod_theta theta(a+)**-(gamma_theta - eps)``."""
    return math.exp(log_eta_epsilon(S, a, gaps, eps, rs))


def zeta_theta(gamma: float, label: str, eps: float) -> float:
    return 1.0 + eps if label == "C" else gamma + 2.0 + eps


def regularity_exponents(S, gaps: SpectralGapProfile, eps: float):
    """``(zeta_eps(S), p_eps(S))``."""
    _aligned(S, gaps)
    if not eps > 0:
        raise DomainError("eps must be positive")
    zeta = sum(zeta_theta(g, lab, eps) for g, lab in zip(gaps.gammas, gaps.field_labels))
    p = sum(g - eps for g in gaps.gammas)
    return float(zeta), float(p)


def holder_gamma(s: float, s0: float) -> float:
    if not (s > 0 and s0 > 0):
        raise DomainError("s and s0 must be positive")
    return min(s / (4.0 * s0), 0.5)


def mixing_exponent(n: int, sos_size: int, eta: float) -> float:
    """``eta ** (1 / ((n-1) |S|))``."""
    if n < 2:
        raise DomainError("n must be at least 2")
    if sos_size < 1:
        raise DomainError("sos_size must be at least 1")
    if not 0.0 < eta <= 1.0:
        raise DomainError("eta must lie in (0, 1]")
    return float(eta ** (1.0 / ((n - 1) * sos_size)))
