"""Invariant suites run by ``fracmix selftest``.

Each suite returns ``(passed, detail)``; :func:`run_all` times them and
collects the results.
"""

import time

import numpy as np

from .fracsolve import CutoffProfile, conjugation_scaling_check, cutoff_apply, frac_apply, highpass_frac_solve
from .profiles import gaussian
from .sl2model import (
    Geodesic,
    GridConfig,
    Horocycle,
    ModelVector,
    SpectralGrid,
    flow_apply,
    irrep_from_varpi,
    make_irrep,
    matrix_coefficient,
    weighted_norm,
)

BUMP = gaussian(1.5, 1.0)


def _bump(irrep, config=GridConfig()):
    return ModelVector.from_profile(SpectralGrid.for_irrep(irrep, config), BUMP)


def flow_unitarity():
    worst = 0.0
    for ir in (irrep_from_varpi(0.5), make_irrep("principal", 2.0), make_irrep("discrete", 2)):
        f = ModelVector.from_profile(SpectralGrid.for_irrep(ir, GridConfig()), ir.standard_profile())
        n0 = weighted_norm(f)
        for s in (-1.0, 0.5, 2.0):
            worst = max(worst, abs(weighted_norm(flow_apply(f, Geodesic(s), ir)) / n0 - 1))
        for t in (0.7, 5.0):
            worst = max(worst, abs(weighted_norm(flow_apply(f, Horocycle(t), ir)) / n0 - 1))
    return worst < 1e-6, f"max relative norm change {worst:.2e}"


def group_laws():
    ir = irrep_from_varpi(0.4)
    f = _bump(ir)
    n0 = weighted_norm(f)
    worst = 0.0
    for s1, s2 in ((0.3, 0.4), (-0.5, 1.2), (1.0, -0.25)):
        a = flow_apply(flow_apply(f, Geodesic(s2), ir), Geodesic(s1), ir)
        b = flow_apply(f, Geodesic(s1 + s2), ir)
        worst = max(worst, weighted_norm(a - b) / n0)
    for t1, t2 in ((0.5, 1.5), (-2.0, 3.0)):
        a = flow_apply(flow_apply(f, Horocycle(t2), ir), Horocycle(t1), ir)
        b = flow_apply(f, Horocycle(t1 + t2), ir)
        worst = max(worst, weighted_norm(a - b) / n0)
    return worst < 1e-5, f"max relative composition defect {worst:.2e}"


def semigroup():
    ir = irrep_from_varpi(0.5)
    f = _bump(ir)
    worst = 0.0
    for r1, r2 in ((0.1, 0.2), (0.5, 1.5), (0.0, 0.7)):
        a = frac_apply(frac_apply(f, r1), r2).values
        b = frac_apply(f, r1 + r2).values
        worst = max(worst, float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300))))
    return worst < 1e-12, f"max relative defect {worst:.2e}"


def cutoff_complementarity():
    ir = irrep_from_varpi(0.5)
    f = _bump(ir)
    prof = CutoffProfile()
    worst = 0.0
    for q in (0.5, 1.0, 5.0):
        rep = highpass_frac_solve(f, q, prof)
        back = frac_apply(rep.solution, q).values + cutoff_apply(f, prof).values
        worst = max(worst, float(np.max(np.abs(back - f.values))))
        if rep.solution_norm > 2 * weighted_norm(f):
            return False, f"highpass bound violated at q={q}"
    contraction = weighted_norm(cutoff_apply(f, prof)) <= weighted_norm(f)
    return worst < 1e-12 and contraction, f"max reconstruction defect {worst:.2e}"


def refinement_cauchy():
    ir = irrep_from_varpi(0.5)
    cfg = GridConfig(lam_min=1e-6, lam_max=30.0, ratio=1.1, max_step=0.1)
    norms, coefs = [], []
    for _ in range(3):
        f = _bump(ir, cfg)
        norms.append(weighted_norm(f))
        coefs.append(abs(matrix_coefficient(f, f, Geodesic(1.0), ir)))
        cfg = cfg.refined()
    dn = [abs(norms[i + 1] - norms[i]) for i in range(2)]
    dc = [abs(coefs[i + 1] - coefs[i]) for i in range(2)]
    ok = dn[1] <= max(dn[0], 1e-12) and dc[1] <= max(dc[0], 1e-12) and dn[1] < 1e-6 and dc[1] < 1e-4
    return ok, f"norm steps {dn[0]:.1e},{dn[1]:.1e}; coefficient steps {dc[0]:.1e},{dc[1]:.1e}"


def conjugation():
    ir = irrep_from_varpi(0.5)
    f = _bump(ir)
    worst = max(conjugation_scaling_check(f, s, r, ir) for r in (0.3, 0.7) for s in (0.5, 1.0, 2.0))
    return worst < 1e-6, f"max nodewise deviation {worst:.2e}"


def root_systems():
    from .rootsys import build_root_system, find_maximal_sos, is_strongly_orthogonal

    for fam, rank in (("A", 1), ("A", 2), ("A", 3), ("B", 2), ("C", 2), ("D", 4)):
        rs = build_root_system(fam, rank)
        sos = find_maximal_sos(rs)
        if not (sos.maximal and is_strongly_orthogonal(sos.members, rs)):
            return False, f"{rs.name}: no certified maximal system"
    return True, "A1 A2 A3 B2 C2 D4 certified"


def partitions(trials=300, seed=7):
    from .mixsched import plan_partition, verify_partition

    cfgs = random_configurations(trials, seed)
    failed = 0
    for cfg in cfgs:
        plan, c2, _ = plan_partition(cfg, 0.1)
        ok, _ = verify_partition(plan, c2)
        failed += not ok
    return failed == 0, f"{trials - failed}/{trials} plans verified"


def random_configurations(count, seed, ranks=(1, 2, 3), sizes=range(3, 9), eps=0.1):
    """Deterministic random configurations on ``B_m`` with the maximal SOS as roots."""
    from .mixsched import GapConfiguration
    from .rootsys import build_root_system, find_maximal_sos

    rng = np.random.default_rng(seed)
    systems = {m: build_root_system("B", m) for m in ranks}
    soss = {m: find_maximal_sos(systems[m]) for m in ranks}
    out = []
    sizes = list(sizes)
    for _ in range(count):
        n = int(rng.choice(sizes))
        m = int(rng.choice(list(ranks)))
        members = np.array(soss[m].members, dtype=float)
        gam = rng.uniform(eps + 0.05, 0.5, len(members))
        t = rng.normal(size=(n, m)) * rng.uniform(0.1, 5.0)
        out.append(GapConfiguration(t, members, gam, systems[m]))
    return out


SUITES = {
    "flow_unitarity": flow_unitarity,
    "group_laws": group_laws,
    "frac_semigroup": semigroup,
    "cutoff_complementarity": cutoff_complementarity,
    "refinement_cauchy": refinement_cauchy,
    "conjugation_scaling": conjugation,
    "root_systems": root_systems,
    "partitions": partitions,
}


def run_all(names=None):
    rows = []
    for name, fn in SUITES.items():
        if names and name not in names:
            continue
        t0 = time.perf_counter()
        try:
            ok, detail = fn()
        except Exception as exc:  # a crashing suite is a failing suite
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        rows.append({"suite": name, "passed": bool(ok), "detail": detail, "seconds": time.perf_counter() - t0})
    return rows
