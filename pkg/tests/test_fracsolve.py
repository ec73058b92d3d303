import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, special

from fracmix.errors import AccuracyError, DomainError, RangeError
from fracmix.fracsolve import (
    CutoffProfile,
    TauberianConfig,
    classical_ratio_table,
    classical_solve,
    conjugation_scaling_check,
    cutoff_apply,
    frac_apply,
    frac_solve,
    gaussian_density,
    gaussian_tauberian_oracle,
    highpass_frac_solve,
    tauberian_check,
    tauberian_kernel,
    threshold_scan,
)
from fracmix.directint import away_from_zero
from fracmix.profiles import gaussian, laguerre_profile, monomial_gaussian
from fracmix.sl2model import (
    GridConfig,
    ModelVector,
    SpectralGrid,
    apply_generator,
    irrep_from_varpi,
    make_irrep,
    vector,
    weighted_norm,
)

HALF = irrep_from_varpi(0.5)
SCAN = 0.005 + 0.01 * np.arange(120)


def std(irrep=HALF):
    return vector(irrep)


def test_frac_apply_identity_and_domain():
    f = std()
    assert np.array_equal(frac_apply(f, 0.0).values, f.values)
    with pytest.raises(DomainError):
        frac_apply(f, -0.1)


@given(st.floats(0.0, 1.5), st.floats(0.0, 1.5))
def test_frac_apply_semigroup(r1, r2):
    f = std()
    a = frac_apply(frac_apply(f, r1), r2).values
    b = frac_apply(f, r1 + r2).values
    assert np.allclose(a, b, rtol=1e-12, atol=1e-14 * np.max(np.abs(b)))


def test_frac_solve_threshold_at_quarter():
    xi = std()
    ok = frac_solve(xi, 0.2, HALF)
    assert ok.solvable and math.isfinite(ok.solution_norm)
    bad = frac_solve(xi, 0.3, HALF)
    assert bad.verdict == "divergent" and bad.solution is None
    # density |omega|^2 |lam|^(1 - varpi) ~ |lam|^(1 - varpi - 2r) near 0
    assert bad.divergence_exponent == pytest.approx(2 * 0.3 + 0.5 - 1, abs=5e-3)
    assert bad.diagnostics["partial_norm_slope"] < 0


def test_frac_solve_away_from_zero():
    xi = ModelVector.from_function(SpectralGrid.for_irrep(HALF, GridConfig()), away_from_zero())
    for r in (0.5, 1.0, 2.0):
        rep = frac_solve(xi, r, HALF)
        assert rep.solvable
        assert rep.solution_norm <= weighted_norm(xi) * (1 + 1e-12)


def test_classical_solve_explicit_division():
    bump = gaussian(1.0, 1.0)
    xi = vector(HALF, bump.times_lam())
    rep = classical_solve(xi, HALF)
    assert rep.solvable
    assert np.allclose(rep.solution.values, 1j * bump(xi.grid.nodes), atol=1e-14)
    back = apply_generator(rep.solution, "U", HALF, "stencil")
    assert np.allclose(back.values, xi.values, atol=1e-14)


def test_classical_obstructed_where_fractional_succeeds():
    xi = std()
    assert classical_solve(xi, HALF).verdict == "obstructed"
    assert frac_solve(xi, 0.2, HALF).solvable


def test_classical_discrete_series():
    d2 = make_irrep("discrete", 2)
    # lam * exp(-lam) vanishes to order 1: the quotient has a log-divergent norm
    assert classical_solve(vector(d2, laguerre_profile(1)), d2).verdict == "obstructed"
    rep, rows = classical_ratio_table(vector(d2, laguerre_profile(2)), d2)
    assert rep.solvable
    assert [s for s, _ in rows] == [0, 1, 2, 3]
    ratios = [q for _, q in rows]
    assert all(0 < q < math.inf for q in ratios)
    assert ratios == sorted(ratios, reverse=True)


def test_cutoff_support_cases():
    prof = CutoffProfile(1.0)
    grid = SpectralGrid.for_irrep(HALF, GridConfig())
    low = ModelVector.from_function(grid, lambda x: np.where(np.abs(x) <= 1, np.cos(x), 0.0))
    high = ModelVector.from_function(grid, lambda x: np.where(np.abs(x) >= 2, 1 / (1 + x * x), 0.0))
    assert np.array_equal(cutoff_apply(low, prof).values, low.values)
    assert np.all(cutoff_apply(high, prof).values == 0)
    rep = highpass_frac_solve(low, 0.5, prof)
    assert rep.solution_norm == 0.0


@given(st.floats(0.05, 5.0), st.floats(0.2, 3.0))
def test_cutoff_complementarity(q, scale):
    prof = CutoffProfile(scale)
    f = std()
    rep = highpass_frac_solve(f, q, prof)
    back = frac_apply(rep.solution, q).values + cutoff_apply(f, prof).values
    assert np.max(np.abs(back - f.values)) < 1e-12
    assert rep.solution_norm <= scale ** (-q) * weighted_norm(f) * (1 + 1e-12)


def test_highpass_bound_q5():
    f = vector(HALF, gaussian(0.0, 5.0))
    rep = highpass_frac_solve(f, 5.0)
    assert rep.solution_norm <= 2 * weighted_norm(f)


def test_cutoff_profile_values():
    prof = CutoffProfile(1.0)
    x = np.array([0.0, 1.0, 1.5, 2.0, 3.0])
    assert np.allclose(prof(x), [1.0, 1.0, 0.5, 0.0, 0.0])


# ---------------------------------------------------------------------------
# Tauberian kernel


def test_kernel_closed_form():
    for r in (0.05, 0.25, 0.45):
        assert tauberian_kernel(r) == pytest.approx(special.gamma(1 - 2 * r) * math.sin(math.pi * r) / math.pi,
                                                    rel=1e-14)


def test_gaussian_oracle_against_quadrature():
    for r in (0.1, 0.3):
        lhs, dual = gaussian_tauberian_oracle(r)
        q_lhs = 2 * integrate.quad(lambda x: gaussian_density(x) * x ** (-2 * r), 0, np.inf)[0]
        q_dual = 2 * integrate.quad(lambda t: math.exp(-t * t / 2) * t ** (2 * r - 1), 0, np.inf)[0]
        assert lhs == pytest.approx(q_lhs, rel=1e-8)
        assert dual == pytest.approx(q_dual, rel=1e-8)
        assert lhs == pytest.approx(tauberian_kernel(r) * dual, rel=1e-12)


def test_tauberian_check_gaussian():
    rep = tauberian_check(gaussian_density, 0.3)
    assert rep.relative_error < 1e-4
    assert rep.lhs == pytest.approx(gaussian_tauberian_oracle(0.3)[0], rel=1e-10)


def test_tauberian_small_r():
    # as r -> 0 the left side tends to int tau = 1
    for r, tol in ((0.05, 0.1), (0.01, 0.02), (0.001, 0.002)):
        rep = tauberian_check(gaussian_density, r, tau_hat=lambda t: math.exp(-t * t / 2))
        assert abs(rep.lhs - 1.0) < tol and rep.relative_error < 1e-8


def test_tauberian_budget_and_domain():
    with pytest.raises(DomainError):
        tauberian_check(gaussian_density, 0.5)
    tight = TauberianConfig(t_split=0.5, t_max=1.0)
    with pytest.raises(AccuracyError) as exc:
        tauberian_check(gaussian_density, 0.3, tight, tau_hat=lambda t: math.exp(-t * t / 2))
    assert exc.value.achieved > tight.budget


# ---------------------------------------------------------------------------
# threshold scans and conjugation


@pytest.mark.parametrize("vp", [0.4, 0.6])
def test_threshold_scan_complementary(vp):
    ir = irrep_from_varpi(vp)
    scan = threshold_scan(std(ir), ir, SCAN)
    gamma = (1 - vp) / 2
    assert scan.lower < gamma < scan.upper
    assert scan.resolution <= 0.02 and scan.monotone


def test_threshold_scan_discrete():
    d2 = make_irrep("discrete", 2)
    scan = threshold_scan(std(d2), d2, SCAN)
    assert scan.lower < 1.0 < scan.upper


def test_threshold_scan_unbounded_and_range_errors():
    xi = ModelVector.from_function(SpectralGrid.for_irrep(HALF, GridConfig()), away_from_zero())
    scan = threshold_scan(xi, HALF, np.linspace(0.1, 2.0, 20))
    assert scan.status == "unbounded in range" and scan.upper is None
    with pytest.raises(RangeError):
        threshold_scan(std(), HALF, np.linspace(0.3, 0.5, 5))
    with pytest.raises(DomainError):
        threshold_scan(std(), HALF, [0.3, 0.2])


def test_conjugation_scaling():
    f = vector(HALF, monomial_gaussian(0, 1.0))
    assert conjugation_scaling_check(f, 0.0, 0.3, HALF) == 0.0
    assert conjugation_scaling_check(f, 1.0, 0.0, HALF) < 1e-15
    assert conjugation_scaling_check(vector(HALF, gaussian(1.5, 1.0)), 1.0, 0.3, HALF) < 1e-6
