"""Acceptance criteria 1-11, one PASS/FAIL line each."""

import itertools
import math
import time

import numpy as np
import pytest

from fracmix.cli import decay_grid, main
from fracmix.decay import coeff_curve, fit_rate, order2_bound_check
from fracmix.directint import (
    TENSOR_GRID,
    DirectIntegralModel,
    TensorModel,
    TypeIIProblem,
    product_vector,
    reconstruct,
    sharpness_witness,
    typeII_estimate_check,
    typeII_solve,
)
from fracmix.fracsolve import conjugation_scaling_check, gaussian_density, tauberian_check, threshold_scan
from fracmix.mixsched import GapConfiguration, higher_order_bound, plan_partition, verify_partition
from fracmix.profiles import gaussian
from fracmix.rootsys import (
    CartanElement,
    SpectralGapProfile,
    build_root_system,
    eta_epsilon,
    find_maximal_sos,
    holder_gamma,
    mixing_exponent,
    regularity_exponents,
)
from fracmix.selftest import random_configurations
from fracmix.sl2model import GridConfig, irrep_from_varpi, make_irrep, vector
from test_rootsys import oracle_coeffs, oracle_max_sos_coeffs

GEO_TIMES = np.linspace(0.0, 6.0, 121)


def geodesic_exponent(ir):
    v = vector(ir, None, decay_grid("geodesic"))
    return fit_rate(coeff_curve(v, v, "geodesic", GEO_TIMES, ir)).exponent


def tensor_model(n, config):
    half = irrep_from_varpi(0.5)
    return TensorModel([DirectIntegralModel(((half, 1.0),)) for _ in range(n)], eps=0.1, config=config)


def standard_vector(model):
    return product_vector(model, [f.irreps[0].standard_profile() for f in model.factors])


def test_criterion_01_complementary_geodesic_decay(report_line):
    details, ok = [], True
    for vp in (0.4, 0.5, 0.6):
        t0 = time.perf_counter()
        got = geodesic_exponent(irrep_from_varpi(vp))
        dt = time.perf_counter() - t0
        err = abs(got - (1 - vp) / 2) / ((1 - vp) / 2)
        ok &= err < 0.05 and dt < 10
        details.append(f"varpi={vp}: {got:.4f} ({err:.1%}, {dt:.2f}s)")
    report_line(1, ok, "; ".join(details))
    assert ok


def test_criterion_02_discrete_decay(report_line):
    t0 = time.perf_counter()
    got = geodesic_exponent(make_irrep("discrete", 2))
    dt = time.perf_counter() - t0
    ok = abs(got - 1.0) < 0.1 and dt < 10
    report_line(2, ok, f"n=2 exponent {got:.4f} against 1 ({dt:.2f}s)")
    assert ok


def test_criterion_03_horocycle_decay(report_line):
    ir = irrep_from_varpi(0.5)
    v = vector(ir, None, decay_grid("horocycle"))
    times = np.concatenate([[0.0], np.geomspace(1.0, 200.0, 199)])
    got = fit_rate(coeff_curve(v, v, "horocycle", times, ir)).exponent
    ok = abs(got - 0.5) / 0.5 < 0.1
    report_line(3, ok, f"log-log exponent {got:.4f} against 0.5 over [5, 200]")
    assert ok


def test_criterion_04_threshold_sharpness(report_line):
    rs = 0.005 + 0.01 * np.arange(120)
    details, ok = [], True
    for vp in (0.4, 0.6):
        ir = irrep_from_varpi(vp)
        scan = threshold_scan(vector(ir), ir, rs)
        gamma = (1 - vp) / 2
        ok &= scan.lower < gamma < scan.upper and scan.resolution <= 0.02 and scan.monotone
        details.append(f"varpi={vp}: [{scan.lower:.3f}, {scan.upper:.3f}] contains {gamma:.2f}")
    report_line(4, ok, "; ".join(details))
    assert ok


def test_criterion_05_tauberian_identity(report_line):
    errs = {r: tauberian_check(gaussian_density, r).relative_error for r in (0.1, 0.2, 0.3, 0.4)}
    ok = max(errs.values()) < 1e-4
    report_line(5, ok, "max relative error " + f"{max(errs.values()):.2e}")
    assert ok


def test_criterion_06_conjugation_scaling(report_line):
    ir = irrep_from_varpi(0.5)
    worst = []
    for cfg in (GridConfig(), GridConfig().refined()):
        f = vector(ir, gaussian(1.5, 1.0), cfg)
        worst.append(max(conjugation_scaling_check(f, s, r, ir) for r in (0.3, 0.7) for s in (0.5, 1.0, 2.0)))
    ok = worst[-1] < 1e-6
    report_line(6, ok, f"max deviation {worst[0]:.2e} -> {worst[-1]:.2e} after refinement")
    assert ok


def test_criterion_07_type_ii_two_factor(report_line):
    problem = TypeIIProblem([0.2, 0.2])
    ratios, ok = [], True
    for cfg in (TENSOR_GRID, TENSOR_GRID.refined()):
        model = tensor_model(2, cfg)
        xi = standard_vector(model)
        res = typeII_solve(xi, problem, model)
        ok &= all(r.verdict == "solvable" for r in res)
        ok &= reconstruct(res, problem).max_abs_diff(xi) < 1e-12
        ratios.append(typeII_estimate_check(res, xi, model)["R"])
    drift = abs(ratios[1] - ratios[0]) / ratios[0]
    witness = sharpness_witness(tensor_model(2, TENSOR_GRID), 1, 0.3).all_divergent
    ok &= drift < 0.2 and witness
    report_line(7, ok, f"R drift {drift:.1%} under refinement, witness divergent: {witness}")
    assert ok


def test_criterion_08_order2_bound_shape(report_line):
    details, ok = [], True
    for n in (1, 2):
        pts = list(itertools.product((0.0, 1.0, 2.0), repeat=n))
        maxima = []
        for cfg in (TENSOR_GRID, TENSOR_GRID.refined()):
            model = tensor_model(n, cfg)
            xi = standard_vector(model)
            maxima.append(order2_bound_check(xi, xi, model, pts)["max_ratio"])
        drift = abs(maxima[1] - maxima[0]) / maxima[0]
        ok &= all(math.isfinite(m) and m > 0 for m in maxima) and drift < 0.2
        details.append(f"{n} factor(s): max ratio {maxima[0]:.3e}, drift {drift:.2%}")
    report_line(8, ok, "; ".join(details))
    assert ok


def test_criterion_09_root_system_suite(report_line):
    ok = True
    for fam, rank in (("A", 1), ("A", 2), ("A", 3), ("B", 2), ("C", 2), ("D", 4)):
        sos = find_maximal_sos(build_root_system(fam, rank))
        ok &= oracle_coeffs(sos.members, fam, rank) in oracle_max_sos_coeffs(fam, rank)
    # hand-evaluated exponents
    s1 = find_maximal_sos(build_root_system("A", 1))
    g = SpectralGapProfile((0.5,))
    ok &= eta_epsilon(s1, CartanElement((1.0, -1.0)), g, 0.1) == pytest.approx(math.exp(-0.8), rel=1e-15)
    ok &= regularity_exponents(s1, g, 0.1) == (pytest.approx(2.6, abs=1e-15), pytest.approx(0.4, abs=1e-15))
    ok &= holder_gamma(2.0, 2.0) == 0.25 and holder_gamma(4.0, 1.0) == 0.5
    cfg = GapConfiguration([[0.0], [1.0], [2.0]], [[1.0]], [0.6])
    ok &= higher_order_bound(3, cfg, 0.1)["exponent"] == 0.5
    ok &= mixing_exponent(3, 2, math.exp(-1)) == pytest.approx(math.exp(-0.25), rel=1e-15)
    # zeta >= p over a sweep of valid profiles
    rng = np.random.default_rng(5)
    b3 = find_maximal_sos(build_root_system("B", 3))
    for _ in range(200):
        gam = rng.uniform(0.11, 1.0, 3)
        labels = tuple(rng.choice(["R", "C"], 3))
        zeta, p = regularity_exponents(b3, SpectralGapProfile(tuple(gam), labels), 0.1)
        ok &= zeta >= p
    report_line(9, ok, "A1 A2 A3 B2 C2 D4 match brute force; exponent oracles exact; zeta >= p on 200 profiles")
    assert ok


def test_criterion_10_partition_scheduler(report_line):
    t0 = time.perf_counter()
    cfgs = random_configurations(1000, seed=10)
    passed = sum(verify_partition(*plan_partition(c, 0.1)[:2])[0] for c in cfgs)
    dt = time.perf_counter() - t0
    ok = passed == 1000 and dt < 5.0
    report_line(10, ok, f"{passed}/1000 plans verified in {dt:.2f}s")
    assert ok


def test_criterion_11_selftest(report_line, tmp_path):
    t0 = time.perf_counter()
    code = main(["selftest", "--out", str(tmp_path)])
    dt = time.perf_counter() - t0
    ok = code == 0 and dt < 60
    report_line(11, ok, f"selftest exit {code} in {dt:.2f}s")
    assert ok
