import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fracmix.errors import CapacityError, ConfigurationError, DomainError
from fracmix.rootsys import (
    CartanElement,
    SpectralGapProfile,
    build_root_system,
    classical_positive_count,
    eta_epsilon,
    find_maximal_sos,
    format_root,
    holder_gamma,
    is_dominant,
    is_strongly_orthogonal,
    log_eta_epsilon,
    make_sos,
    mixing_exponent,
    regularity_exponents,
    weyl_orbit,
    weyl_positive,
    zeta_theta,
)


# ---------------------------------------------------------------------------
# independent oracle: roots by enumeration of +-e_i +- e_j, subsets by brute force


def oracle_roots(family, rank):
    dim = rank + 1 if family == "A" else rank
    e = np.eye(dim, dtype=int)
    roots = set()
    if family == "A":
        for i, j in itertools.permutations(range(dim), 2):
            roots.add(tuple(e[i] - e[j]))
    else:
        for i, j in itertools.combinations(range(dim), 2):
            for a, b in itertools.product((1, -1), repeat=2):
                roots.add(tuple(a * e[i] + b * e[j]))
        for i in range(dim):
            for a in (1, -1):
                if family == "B":
                    roots.add(tuple(a * e[i]))
                if family == "C":
                    roots.add(tuple(2 * a * e[i]))
    return roots


def oracle_simple(family, rank):
    dim = rank + 1 if family == "A" else rank
    e = np.eye(dim, dtype=int)
    simple = [e[i] - e[i + 1] for i in range(dim - 1)]
    if family == "B":
        simple.append(e[dim - 1])
    elif family == "C":
        simple.append(2 * e[dim - 1])
    elif family == "D":
        simple.append(e[dim - 2] + e[dim - 1])
    return np.array(simple, dtype=float)


def oracle_positive(family, rank):
    simple = oracle_simple(family, rank)
    out = []
    for r in oracle_roots(family, rank):
        c = np.linalg.lstsq(simple.T, np.array(r, dtype=float), rcond=None)[0]
        if np.all(c > -1e-9):
            out.append(r)
    return out


def oracle_coeffs(members, family, rank):
    simple = oracle_simple(family, rank)
    total = np.sum(np.array(members, dtype=float), axis=0)
    c = np.linalg.lstsq(simple.T, total, rcond=None)[0]
    return tuple(int(round(x)) for x in c)


def oracle_max_sos_coeffs(family, rank):
    roots = oracle_roots(family, rank)
    pos = oracle_positive(family, rank)

    def so(a, b):
        s = tuple(x + y for x, y in zip(a, b))
        d = tuple(x - y for x, y in zip(a, b))
        return s not in roots and d not in roots

    systems = []
    for size in range(1, len(pos) + 1):
        for sub in itertools.combinations(pos, size):
            if all(so(a, b) for a, b in itertools.combinations(sub, 2)):
                systems.append(oracle_coeffs(sub, family, rank))
    dominating = [c for c in systems if all(all(x >= y for x, y in zip(c, o)) for o in systems)]
    return set(dominating)


CASES = [("A", 1), ("A", 2), ("A", 3), ("B", 2), ("C", 2), ("D", 4)]


@pytest.mark.parametrize("family,rank", CASES)
def test_positive_roots_match_enumeration(family, rank):
    rs = build_root_system(family, rank)
    assert set(rs.positive_roots) == set(oracle_positive(family, rank))
    assert len(rs.positive_roots) == classical_positive_count(family, rank)


@pytest.mark.parametrize("family,rank", CASES)
def test_maximal_sos_matches_brute_force(family, rank):
    rs = build_root_system(family, rank)
    sos = find_maximal_sos(rs)
    assert sos.maximal
    assert is_strongly_orthogonal(sos.members, rs)
    expected = oracle_max_sos_coeffs(family, rank)
    assert len(expected) == 1
    assert tuple(sos.formal_sum_coeffs) in expected
    assert oracle_coeffs(sos.members, family, rank) == tuple(sos.formal_sum_coeffs)


def test_small_systems():
    assert len(build_root_system("A", 1).positive_roots) == 1
    b2 = build_root_system("B", 2)
    assert set(b2.positive_roots) == {(1, -1), (1, 1), (1, 0), (0, 1)}
    assert len(build_root_system("A", 3).positive_roots) == 6
    assert len(build_root_system("G", 2).positive_roots) == 6


def test_sos_examples():
    a1 = build_root_system("A", 1)
    assert find_maximal_sos(a1).members == a1.positive_roots
    b2 = find_maximal_sos(build_root_system("B", 2))
    assert {format_root(m) for m in b2.members} == {"e1-e2", "e1+e2"}
    a3 = build_root_system("A", 3)
    assert is_strongly_orthogonal([(1, -1, 0, 0), (0, 0, 1, -1)], a3)
    assert not is_strongly_orthogonal([(1, -1, 0, 0), (0, 1, -1, 0)], a3)
    # the outer pair dominates {e1-e2, e3-e4}: coefficients (1, 2, 1) against (1, 0, 1)
    best = find_maximal_sos(a3)
    assert {format_root(m) for m in best.members} == {"e1-e4", "e2-e3"}
    assert best.formal_sum_coeffs == (1, 2, 1)
    assert make_sos([(1, -1, 0, 0), (0, 0, 1, -1)], a3).formal_sum_coeffs == (1, 0, 1)


def test_root_errors():
    with pytest.raises(ConfigurationError):
        build_root_system("Q", 2)
    with pytest.raises(DomainError):
        is_strongly_orthogonal([(1, 1, 1, 1)], build_root_system("A", 3))
    with pytest.raises(CapacityError):
        find_maximal_sos(build_root_system("A", 7))


def test_format_root():
    assert format_root((1, 0, -1)) == "e1-e3"
    assert format_root((0, 2)) == "2e2"


# ---------------------------------------------------------------------------
# Weyl group


def test_weyl_positive_examples():
    a1 = build_root_system("A", 1)
    a = CartanElement((-0.5, 0.5))
    ap = weyl_positive(a, a1)
    assert ap.log_value(a1.positive_roots[0]) == pytest.approx(1.0)
    dom = CartanElement((2.0, 1.0))
    b2 = build_root_system("B", 2)
    assert weyl_positive(dom, b2).log_coords == dom.log_coords


def test_weyl_positive_b2_matches_orbit_enumeration():
    b2 = build_root_system("B", 2)
    x, y = 0.3, -1.7
    orbit = {(sx * p, sy * q) for p, q in ((x, y), (y, x)) for sx in (1, -1) for sy in (1, -1)}
    assert len(orbit) == 8
    assert {tuple(round(c, 12) for c in v) for v in weyl_orbit((x, y), b2)} == \
        {tuple(round(c, 12) for c in v) for v in orbit}
    dominant = [v for v in orbit if v[0] >= v[1] >= 0]
    ap = weyl_positive(CartanElement((x, y)), b2)
    assert ap.log_coords == pytest.approx(dominant[0])
    assert all(ap.value(al) >= 1 for al in b2.simple_roots)


@given(st.lists(st.floats(-3, 3), min_size=3, max_size=3), st.lists(st.integers(0, 8), max_size=6))
def test_eta_weyl_invariant_b3(coords, word):
    rs = build_root_system("B", 3)
    sos = find_maximal_sos(rs)
    gaps = SpectralGapProfile((0.5,) * len(sos))
    v = tuple(coords)
    for k in word:
        v = rs.reflect(rs.positive_roots[k], v)
    base = log_eta_epsilon(sos, CartanElement(coords), gaps, 0.1, rs)
    moved = log_eta_epsilon(sos, CartanElement(v), gaps, 0.1, rs)
    assert moved == pytest.approx(base, abs=1e-10)
    assert is_dominant(weyl_positive(CartanElement(v), rs), rs, tol=1e-10)


# ---------------------------------------------------------------------------
# exponent oracles (direct evaluation)


def test_eta_examples():
    a1 = build_root_system("A", 1)
    s1 = find_maximal_sos(a1)
    g = SpectralGapProfile((0.5,))
    assert eta_epsilon(s1, CartanElement((0.0, 0.0)), g, 0.1) == 1.0
    # theta(a+) = e^2
    assert eta_epsilon(s1, CartanElement((1.0, -1.0)), g, 0.1) == pytest.approx(math.exp(-0.8), rel=1e-15)
    b2 = build_root_system("B", 2)
    s2 = find_maximal_sos(b2)
    # e1 +- e2 both evaluate to e at log_coords (1, 0)
    val = eta_epsilon(s2, CartanElement((1.0, 0.0)), SpectralGapProfile((0.5, 0.5)), 0.1)
    assert val == pytest.approx(math.exp(-0.8), rel=1e-15)
    with pytest.raises(DomainError):
        eta_epsilon(s1, CartanElement((1.0, -1.0)), g, 0.6)


def test_regularity_exponents_examples():
    s1 = find_maximal_sos(build_root_system("A", 1))
    zeta, p = regularity_exponents(s1, SpectralGapProfile((0.5,)), 0.1)
    assert (zeta, p) == (pytest.approx(2.6, abs=1e-15), pytest.approx(0.4, abs=1e-15))
    assert zeta_theta(0.7, "C", 0.1) == pytest.approx(1.1, abs=1e-15)
    empty = make_sos([], build_root_system("A", 1))
    assert regularity_exponents(empty, SpectralGapProfile(()), 0.1) == (0.0, 0.0)


@given(st.lists(st.floats(0.11, 1.0), min_size=1, max_size=4), st.lists(st.booleans(), min_size=4, max_size=4))
def test_zeta_dominates_p(gammas, complex_flags):
    labels = tuple("C" if c else "R" for c, _ in zip(complex_flags, gammas))
    sos = make_sos([], build_root_system("A", 1))
    sos = type(sos)(tuple((i,) for i in range(len(gammas))), (0,), True)
    zeta, p = regularity_exponents(sos, SpectralGapProfile(tuple(gammas), labels), 0.1)
    oracle_zeta = sum(1.1 if lab == "C" else g + 2.1 for g, lab in zip(gammas, labels))
    assert zeta == pytest.approx(oracle_zeta, rel=1e-14)
    assert p == pytest.approx(sum(g - 0.1 for g in gammas), rel=1e-14, abs=1e-15)
    assert zeta >= p


def test_gap_profile_ranges():
    with pytest.raises(DomainError):
        SpectralGapProfile((1.2,), ("C",))
    with pytest.raises(DomainError):
        SpectralGapProfile((0.7,), regime="continuous")
    with pytest.raises(DomainError):
        SpectralGapProfile((0.7,), regime="discrete")
    SpectralGapProfile((1.5,), regime="discrete")


def test_holder_gamma():
    assert holder_gamma(4.0, 1.0) == 0.5
    assert holder_gamma(2.0, 2.0) == 0.25
    assert holder_gamma(0.1, 1.0) == pytest.approx(0.025, abs=1e-17)
    with pytest.raises(DomainError):
        holder_gamma(0.0, 1.0)


def test_mixing_exponent():
    assert mixing_exponent(2, 1, math.exp(-1)) == pytest.approx(math.exp(-1), rel=1e-15)
    assert mixing_exponent(3, 2, math.exp(-1)) == pytest.approx(math.exp(-0.25), rel=1e-15)
    assert mixing_exponent(7, 3, 1.0) == 1.0
    with pytest.raises(DomainError):
        mixing_exponent(1, 1, 0.5)


def test_serialization_roundtrip():
    rs = build_root_system("C", 3)
    back = type(rs).from_dict(rs.to_dict())
    assert back.positive_roots == rs.positive_roots
    d = find_maximal_sos(rs).to_dict()
    assert d["maximal"] and d["system"] == {"family": "C", "rank": 3}
