"""Acceptance suite: one PASS/FAIL line per criterion at the stated tolerances.

Run alone with ``pytest tests/test_acceptance.py -v -s`` or
``python tests/test_acceptance.py``; the collected lines are also repeated
in the pytest terminal summary.
"""

import math
import time

import numpy as np
import pytest

from fracscalar.config import RunConfig
from fracscalar.diagnostics import RecordPlan, admissible_s, lp_norm, stroock_varopoulos_sides, sv_gap, sv_tail
from fracscalar.drift import DriftSpec, check_screened_positivity, div_drift
from fracscalar.evolution import ModelParams, StepperConfig, run
from fracscalar.experiments import classify, execute
from fracscalar.grid import get_grid
from fracscalar.initial_data import periodized_gaussian, random_smooth
from fracscalar.monitors import alpha_smooth, check_bounds, mass_cap, max_principle_probe
from fracscalar.operators import hs_seminorm
from fracscalar.verify import identity_checks, verify_ops

pytestmark = pytest.mark.acceptance

LINES = []


def report(tag, ok, text, elapsed=None, info=False):
    status = "INFO" if info else ("PASS" if ok else "FAIL")
    line = f"{status} {tag}: {text}"
    if elapsed is not None:
        line += f" [{elapsed:.1f} s]"
    LINES.append(line)
    print(line)
    return ok


def test_c01_operator_exactness():
    t0 = time.perf_counter()
    entries = {e["name"]: e for e in identity_checks(n=64, samples=100)}
    el = time.perf_counter() - t0
    pw, div = entries["plane_wave_eigenvalues"], entries["div_R_equals_Lambda"]
    ok = pw["max_error"] <= 1e-12 and div["max_error"] <= 1e-10 and el < 10.0
    report("C1 operator exactness (n=64)", ok,
           f"plane waves max rel err {pw['max_error']:.2e} (tol 1e-12), "
           f"div R = Lambda on 100 fields {div['max_error']:.2e} (tol 1e-10), runtime < 10 s", el)
    assert ok


def test_c02_kernel_vs_multiplier():
    t0 = time.perf_counter()
    rep = verify_ops(n=32, alphas=(0.5, 1.0, 1.5), K=20)
    el = time.perf_counter() - t0
    hard = [q for q in rep["quadrature"] if q["hard"]]
    worst = max(q.get("rel_l2", math.inf) for q in hard)
    consts = {c["name"]: c for c in rep["constants"]}
    c12 = abs(consts["c_1_2"]["value"] - 1 / (2 * math.pi))
    r2 = abs(consts["r_2"]["value"] - math.pi**-1.5)
    ok = all(q["ok"] for q in hard) and worst <= 0.02 and c12 <= 1e-10 and r2 <= 1e-10 and el < 300
    report("C2 kernel vs multiplier (n=32, K=20)", ok,
           f"{len(hard)} quadratures (Lambda^a, a in 0.5/1/1.5; R_j single modes) worst rel L2 {worst:.4f} (tol 0.02); "
           f"|c_1,2 - 1/2pi| = {c12:.1e}, |r_2 - pi^-3/2| = {r2:.1e} (tol 1e-10)", el)
    lit = [q for q in rep["quadrature"] if not q["hard"]][0]
    report("C2 note", True, f"R_1 quadrature with r_2 = pi^-3/2 as the kernel constant: rel L2 {lit['rel_l2']:.3f} "
           "(normalization ratio 2/sqrt(pi); the kernel uses 1/2pi)", info=True)
    assert ok


def _logistic_error(scheme, dt, drift):
    p = ModelParams(alpha=1.0, chi=1.0, r=1.0, drift=drift)
    tr = run(np.full((16, 16), 2.0), p, StepperConfig(dt=dt, scheme=scheme), math.log(2.0), diag_every=10**6)
    exact = 4.0 / 3.0
    return float(np.max(np.abs(tr.state.u - exact))) / exact


def test_c03_logistic_oracle():
    t0 = time.perf_counter()
    rows = []
    ok = True
    for drift in (DriftSpec("ks_poisson"), DriftSpec("ks_screened", beta=1.0), DriftSpec("sqg")):
        e1, e1h = _logistic_error("imex1", 2e-3, drift), _logistic_error("imex1", 1e-3, drift)
        e2, e2h = _logistic_error("imex2", 2e-3, drift), _logistic_error("imex2", 1e-3, drift)
        o1, o2 = math.log2(e1 / e1h), math.log2(e2 / e2h)
        ok &= e1h <= 5e-4 and 0.9 <= o1 <= 1.1 and 1.8 <= o2 <= 2.2
        rows.append(f"{drift.variant}: IMEX1 err(1e-3) {e1h:.2e}, order {o1:.3f}; IMEX2 order {o2:.3f}")
    el = time.perf_counter() - t0
    ok &= el < 30
    report("C3 logistic oracle u0=2, r=1", ok,
           "; ".join(rows) + " (tol 5e-4; IMEX1 order in [0.9, 1.1]; IMEX2 in [1.8, 2.2])", el)
    assert ok


def test_c04_pure_decay():
    t0 = time.perf_counter()
    g = get_grid(32)
    X1, _ = g.mesh
    errs = {}
    for alpha in (0.5, 1.0, 1.5, 2.0):
        p = ModelParams(alpha=alpha, chi=0.0, r=0.0)
        tr = run(np.cos(X1), p, StepperConfig(dt=1e-2, scheme="imex1_exp"), 1.0, diag_every=10**6)
        errs[alpha] = float(np.max(np.abs(tr.state.u - math.exp(-1.0) * np.cos(X1))))
    el = time.perf_counter() - t0
    worst = max(errs.values())
    ok = worst <= 5e-4 and el < 30
    report("C4 pure decay u0=cos x1", ok,
           ", ".join(f"a={a:g}: {e:.1e}" for a, e in errs.items()) + " sup error (tol 5e-4)", el)
    assert ok


C5_R_ALPHA = {0.25: 1.75, 0.5: 1.5, 1.0: 1.25}


@pytest.fixture(scope="module")
def mass_cap_suite():
    """20 random data x r in {0.25, 0.5, 1} at n=128, T=5."""
    g = get_grid(128)
    masses = np.random.default_rng(20240501).uniform(1.0, 200.0, size=20)
    runs = []
    t0 = time.perf_counter()
    for i, mass in enumerate(masses):
        u0 = random_smooth(g, seed=100 + i, mass=float(mass), amplitude=1.5,
                           positivity="exp" if i % 2 == 0 else "shift")
        for r, alpha in C5_R_ALPHA.items():
            assert alpha > alpha_smooth(1.0, r)
            p = ModelParams(alpha=alpha, chi=1.0, r=r)
            tr = run(u0, p, StepperConfig(), 5.0, diag_every=20,
                     plan=RecordPlan.for_params(p, 128, with_wsp=False))
            runs.append((float(mass), p, tr))
    return runs, time.perf_counter() - t0


def test_c05_mass_cap(mass_cap_suite):
    runs, el = mass_cap_suite
    worst = -math.inf
    ok = True
    for mass, p, tr in runs:
        cap = mass_cap(tr.u0)
        sup = max(rec.mass for rec in tr.records)
        worst = max(worst, sup / cap - 1.0)
        ok &= tr.completed and sup <= cap * (1 + 1e-6)
        ok &= {m.monitor: m.status for m in check_bounds(tr, p, ["aee1"])}["aee1"] == "green"
    ok &= el < 600
    report("C5 mass cap (n=128, T=5)", ok,
           f"{len(runs)} runs (20 data, mass in [1, 200], r in 0.25/0.5/1), all completed; "
           f"worst sup ||u||_1 / N - 1 = {worst:.2e} (tol 1e-6)", el)
    assert ok


def test_c06_growth_bound(mass_cap_suite):
    runs, _ = mass_cap_suite
    t0 = time.perf_counter()
    worst = -math.inf
    worst_later = -math.inf
    nrec = 0
    ok = True
    for _, p, tr in runs:
        s = admissible_s(p.chi, p.r)
        q = s + 1.0
        base = lp_norm(tr.u0, q)
        for rec in tr.records:
            ratio = rec.lp(q) / (math.exp(p.r * rec.t) * base)
            worst = max(worst, ratio)
            if rec.t > 0:
                worst_later = max(worst_later, ratio)
            ok &= ratio <= 1 + 1e-3
            nrec += 1
        ok &= {m.monitor: m.status for m in check_bounds(tr, p, ["aee3"])}["aee3"] == "green"
    report("C6 L^{s+1} growth (s = r/(chi-r), or 3 at r >= chi)", ok,
           f"{nrec} records over {len(runs)} runs; worst ||u(t)||_(s+1) / (e^(rt) ||u0||_(s+1)) = {worst:.6f} "
           f"(tol 1 + 1e-3; {worst_later:.6f} over t > 0)", time.perf_counter() - t0)
    assert ok


def test_c07_stroock_varopoulos():
    t0 = time.perf_counter()
    g = get_grid(64)
    masses = np.random.default_rng(7).uniform(1.0, 200.0, size=100)
    eq = 0.0
    worst = -math.inf
    tail = 0.0
    ok = True
    for i in range(100):
        u = random_smooth(g, seed=300 + i, mass=float(masses[i]), amplitude=2.0,
                          positivity="exp" if i % 2 == 0 else "shift")
        for alpha in (0.5, 1.0, 1.5, 2.0):
            for s in (0.25, 0.5, 1.0, 2.0, 3.0):
                lhs, rhs = stroock_varopoulos_sides(u, alpha, s)
                if s == 1.0:
                    eq = max(eq, abs(lhs - rhs) / abs(rhs))
                    continue
                tl = sv_tail(u, alpha, s)
                tail = max(tail, tl)
                worst = max(worst, (lhs - rhs) / abs(rhs))
                ok &= sv_gap(lhs, rhs, tl) <= 0
    el = time.perf_counter() - t0
    ok &= eq <= 1e-10 and el < 120
    report("C7 Stroock-Varopoulos (100 fields x a in 0.5..2 x s in 0.25..3)", ok,
           f"max (lhs - rhs)/rhs = {worst:.1e} (<= 0 up to roundoff 1e-8); s=1 equality rel err {eq:.1e} (tol 1e-10); "
           f"max unresolved share {tail:.1e}", el)
    assert ok


def _nonneg_fields(n, count, seed):
    """Smooth, clipped, sparse and peaked non-negative fields, in rotation."""
    g = get_grid(n)
    rng = np.random.default_rng(seed)
    for i in range(count):
        kind = i % 4
        if kind == 0:
            yield random_smooth(g, seed=seed + i, mass=float(rng.uniform(1, 200)), amplitude=2.0)
        elif kind == 1:
            yield np.maximum(random_smooth(g, seed=seed + i, positivity="shift", shift=0.0) - 1.0, 0.0)
        elif kind == 2:
            yield rng.exponential(size=(n, n)) * (rng.random((n, n)) < 0.1)
        else:
            yield periodized_gaussian(g, 100.0, float(rng.uniform(0.08, 0.5)), tuple(rng.uniform(-3, 3, 2)))


def test_c08_screened_structure():
    t0 = time.perf_counter()
    min_v = math.inf
    margin = -math.inf
    for u in _nonneg_fields(64, 100, 800):
        for beta in (0.5, 1.0, 2.0):
            min_v = min(min_v, check_screened_positivity(u, beta).min_v)
            margin = max(margin, float(np.max(div_drift(u, DriftSpec("ks_screened", beta=beta)) - u)))
    ok = min_v >= -1e-8 and margin <= 1e-8
    report("C8 screened drift (100 fields incl. zeros and peaks, beta in 0.5/1/2)", ok,
           f"min v = {min_v:.3e} (>= -1e-8); max(div B - u) = {margin:.3e} (<= 1e-8)", time.perf_counter() - t0)
    assert ok


def test_c09_maximum_principle():
    t0 = time.perf_counter()
    wmp_worst = math.inf
    chain_worst = 0.0
    literal_fail = 0
    ok = True
    for i, u in enumerate(_nonneg_fields(32, 100, 900)):
        for j, p0 in enumerate((1.2, 4.0 / 3.0, 1.8)):
            alpha = (0.5, 1.0, 1.5, 2.0)[(i + j) % 4]
            rep = max_principle_probe(u, alpha, p0)
            ok &= rep.wmp_ok and rep.chain_ok
            wmp_worst = min(wmp_worst, rep.lam_at_max / max(hs_seminorm(u, alpha), 1e-300))
            chain_worst = max(chain_worst, rep.phi_holder / rep.bound)
            literal_fail += not rep.chain_ok_literal
    report("C9 maximum principle (100 fields x p0 in 1.2/4/3/1.8)", ok,
           f"all Lambda^a u(argmax) >= -1e-8 ||u||_(H^a) (min ratio {wmp_worst:.2e}); "
           f"worst Hoelder quotient / (2^((1-p0)/p0) ||u||_p0) = {chain_worst:.4f} (<= 1)",
           time.perf_counter() - t0)
    report("C9 note", True, f"plain two-point quotient |phi(x)-phi(y)|/|x-y|^delta exceeded the bound in "
           f"{literal_fail}/300 probes; the bound is proved for the rectangle increment", info=True)
    assert ok


def _regime_run(alpha, width, n=256, T=10.0):
    d = {
        "schema_version": 1, "n": n, "T": T,
        "params": {"alpha": alpha, "chi": 1.0, "r": 0.25},
        "initial_data": {"kind": "periodized_gaussian", "mass": 100, "width": width},
        "diag_every": 20, "stop_on_resolution_loss": True, "record_wsp": False,
        "monitors": ["aee1"],
    }
    out = execute(RunConfig.from_dict(d), write=False)
    return out, classify(out.trajectory)[1]


def test_c10_threshold_regime_map():
    t0 = time.perf_counter()
    assert alpha_smooth(1.0, 0.25) == pytest.approx(1.5)
    rows = []
    ok = True
    for alpha in (1.6, 1.8, 2.0):
        out, label = _regime_run(alpha, 1.0)
        aee1 = out.monitor("aee1").status
        ok &= label == "bounded" and aee1 == "green"
        rows.append(f"a={alpha:g}: {label}, aee1 {aee1}, sup|u| {out.trajectory.sup_linf:.1f}")
    el_main = time.perf_counter() - t0
    for alpha in (0.3, 0.5):
        out, label = _regime_run(alpha, 1.0)
        report(f"C10 report a={alpha:g}", True, f"{label} at t={out.trajectory.t:.3g} "
               f"(sup|u| {out.trajectory.sup_linf:.1f}, tail {out.trajectory.tail_max:.1e})", info=True)
    out, label = _regime_run(1.6, 0.5)
    report("C10 report a=1.6, width 0.5", True, f"{label} at t={out.trajectory.t:.3g} "
           f"(sup|u| {out.trajectory.sup_linf:.1f}); the sharper bump outruns n=256", info=True)
    el = time.perf_counter() - t0
    ok &= el < 3600
    report("C10 regime map (chi=1, r=0.25, mass 100 Gaussian width 1, n=256, T=10)", ok, "; ".join(rows), el_main)
    assert ok


def test_c11_spectral_and_eps_consistency():
    t0 = time.perf_counter()
    p = ModelParams(alpha=1.5, chi=1.0, r=0.5)
    cfg = StepperConfig(dt=1e-3)
    final = {}
    for n in (64, 128):
        u0 = random_smooth(get_grid(n), seed=7, mass=20.0, amplitude=1.0)
        final[n] = run(u0, p, cfg, 1.0, diag_every=10**6).state.u
    dl2 = abs(lp_norm(final[64], 2) - lp_norm(final[128], 2))
    u0 = random_smooth(get_grid(64), seed=7, mass=20.0, amplitude=1.0)
    errs = []
    for eps in (1e-2, 1e-3, 1e-4):
        pe = ModelParams(alpha=1.5, chi=1.0, r=0.5, eps_viscosity=eps)
        errs.append(float(np.max(np.abs(run(u0, pe, cfg, 1.0, diag_every=10**6).state.u - final[64]))))
    orders = [math.log10(errs[i] / errs[i + 1]) for i in range(2)]
    ok = dl2 < 1e-8 and all(0.9 <= o <= 1.1 for o in orders)
    report("C11 spectral and eps consistency (a=1.5, chi=1, r=0.5, T=1)", ok,
           f"|d ||u(T)||_2| 64->128 = {dl2:.1e} (tol 1e-8); eps errors "
           + ", ".join(f"{e:.2e}" for e in errs) + f", orders {orders[0]:.3f}, {orders[1]:.3f} (first order: [0.9, 1.1])",
           time.perf_counter() - t0)
    assert ok


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-s"]))
