"""Acceptance suite: one verdict line per criterion (see the terminal summary).

Run alone with ``pytest tests/test_acceptance.py -v`` or
``python3 tests/test_acceptance.py``.
"""

import sys

import numpy as np
import pytest

from tasekit import schemes, stability, tase
from tasekit.cli import main as cli_main
from tasekit.integrators import NewtonOptions, StepPlan, integrate
from tasekit.problems import error_report, fit_order, get_case

pytestmark = pytest.mark.acceptance


def _final(plan, system, case, n):
    return integrate(plan, system, 0.0, case.initial_state, case.t_final, n, keep="final")


# 1 ---------------------------------------------------------------------------

ALPHA_TABLE = {
    "ERK1": [0.50],
    "ERK2": [0.50, 1.50],
    "ERK3": [0.40, 1.20, 2.80],
    "ERK4": [0.36, 1.08, 2.51, 5.38],
}


def test_c01_alpha_table(verdict, capsys):
    rows = {name: vals for name, _, vals in stability.alpha_table()}
    assert cli_main(["alpha-table"]) == 0
    printed = capsys.readouterr().out
    cli_ok = all(" ".join(f"{v:.2f}" for v in vals) in " ".join(printed.split()) for vals in ALPHA_TABLE.values())
    got = [f"{v:.2f}" for n in ALPHA_TABLE for v in rows[n]]
    want = [f"{v:.2f}" for vals in ALPHA_TABLE.values() for v in vals]
    verdict("1 alpha_min table", got == want and cli_ok, f"{len(got)} values {'match' if got == want else got}")


# 2 ---------------------------------------------------------------------------

def test_c02_coefficient_identities(verdict):
    rng = np.random.default_rng(2)
    worst = 0.0
    identities = True
    for p in range(1, 5):
        b, g = tase.beta_coefficients(p), tase.gamma_coefficients(p)
        identities &= b.weighted_sum() == 1  # T(0) = 1
        identities &= sum(v / 2**k for k, v in enumerate(g.values)) == 2**p - 1  # fused operator vanishes at 0
        lam = rng.normal(size=1000) * 10 ** rng.uniform(-3, 3, 1000) + 1j * rng.normal(size=1000) * 10 ** rng.uniform(-3, 3, 1000)
        dt = 10 ** rng.uniform(-3, 1, 1000)
        alpha = rng.uniform(0.1, 8.0, 1000)
        z = lam * dt
        closed = np.array([sum(float(bk) / (2**k - a * zz) for k, bk in enumerate(b.values)) for zz, a in zip(z, alpha)])
        rec = np.array([complex(tase.recursive_preconditioner(zz, p, a)) for zz, a in zip(z, alpha)])
        worst = max(worst, float(np.max(np.abs(rec - closed) / np.maximum(1.0, np.abs(closed)))))
    ok = bool(identities) and worst <= 1e-12
    verdict("2 coefficient identities", ok, f"identities={'ok' if identities else 'broken'}, recursion gap {worst:.2e}")


# 3 ---------------------------------------------------------------------------

@pytest.mark.parametrize("s,p", [(s, p) for s in range(1, 5) for p in (1, 2)])
def test_c03_a_stability_certificate(verdict, s, p):
    scheme = f"ERK{s}"
    alpha = schemes.scheme_info(scheme).alpha_min(p)
    scan = stability.scan_region(scheme, p, alpha, "log-radial", 2001, r_range=(1e-8, 1e8))
    worst = scan.max_left_half()
    verdict(f"3 A-stability RK{s}+TASE{p}", worst <= 1 + 1e-10,
            f"max|sigma| over left half = {worst:.10f}, unstable cells {scan.unstable_cells()}")


@pytest.mark.parametrize("s,p", [(3, 3), (4, 3), (4, 4)])
def test_c03_imaginary_axis(verdict, s, p):
    scheme = f"ERK{s}"
    alpha = schemes.scheme_info(scheme).alpha_min(p)
    peak = stability.imag_axis_max(scheme, p, alpha, 1e10, 10**6)
    verdict(f"3 imag axis RK{s}+TASE{p}", peak <= 1.03, f"max|sigma(iy)| = {peak:.5f}")


# 4 ---------------------------------------------------------------------------

def test_c04_low_alpha_is_unstable(verdict):
    alpha = 0.25 * schemes.scheme_info("ERK4").alpha_min(4)
    scan = stability.scan_region("ERK4", 4, alpha, "log-radial", 401, r_range=(1e-4, 1e8))
    bad = scan.unstable_cells()
    verdict("4 alpha threshold", bad > 0, f"{bad} unstable left-half cells, max|sigma| {scan.max_left_half():.3g}")


# 5 ---------------------------------------------------------------------------

def test_c05_asymptotic_limit(verdict):
    worst = 0.0
    for p in range(1, 5):
        base = tase.alpha_min(p, 2.0)
        for alpha in (base, 2 * base, 10 * base):
            got = tase.scalar_tase(-1e12, tase.TaseConfig(p, alpha), 1.0)
            want = stability.asymptotic_limit(p, alpha)
            worst = max(worst, abs(got - want) / abs(want))
    verdict("5 asymptotic limit", worst <= 1e-3, f"largest relative gap {worst:.2e}")


# 6 ---------------------------------------------------------------------------

@pytest.mark.parametrize("s", [1, 2, 3, 4])
def test_c06_order_preservation(verdict, s):
    case = get_case("ode-linear", lam=-1.0, t_final=1.0)
    plan = StepPlan.create(f"ERK{s}", s)
    dts = [0.2, 0.1, 0.05, 0.025]
    errs = [case.errors(_final(plan, case.system, case, round(1.0 / dt)).final).linf_rel for dt in dts]
    slope = fit_order(errs, dts).slope
    verdict(f"6 order RK{s}+TASE{s}", abs(slope - s) <= 0.15, f"observed {slope:.3f}, expected {s} +/- 0.15")


# 7 ---------------------------------------------------------------------------

def test_c07_scenario_one(verdict):
    case = get_case("diffusion-periodic")
    plan = case.recommended_plan()
    n0 = round(case.t_final / 0.25)
    ratio = case.t_final / n0 / case.dt_stability
    counts = [n0, 2 * n0, 4 * n0, 8 * n0]
    reps = [case.errors(_final(plan, case.system, case, n).final) for n in counts]
    slope = fit_order([r.linf_rel for r in reps], [case.t_final / n for n in counts]).slope
    ok = not reps[0].diverged and reps[0].linf_rel <= 5e-2 and abs(slope - 2) <= 0.25 and abs(ratio - 6.08e3) < 10
    verdict("7 scenario 1", ok, f"dt/dt_stab={ratio:.4g}, Linf={reps[0].linf_rel:.3e}, order {slope:.3f}")


# 8 ---------------------------------------------------------------------------

@pytest.mark.parametrize("beta", [0.0, 0.25, 1.0, 4.0])
def test_c08_power_law(verdict, beta):
    case = get_case("power-law", beta=beta)
    plan = case.recommended_plan()
    ref = case.explicit_reference(ratio=0.25)
    n0 = case.steps_for_ratio(9.56)
    counts = [n0 * 2**k for k in range(4)]
    trs = [_final(plan, case.system, case, n) for n in counts]
    errs = [error_report(tr.final, ref, case.weights, tr.diverged).linf_rel for tr in trs]
    slope = fit_order(errs, [case.t_final / n for n in counts]).slope
    ratio = case.t_final / n0 / case.dt_stability
    ok = not trs[0].diverged and errs[0] <= 5e-2 and abs(slope - 4) <= 0.3
    verdict(f"8 power law beta={beta:g}", ok, f"dt/dt_stab={ratio:.3f}, Linf={errs[0]:.2e}, order {slope:.3f}")


# 9 ---------------------------------------------------------------------------

def test_c09_stiff_ode_bounded(verdict):
    case = get_case("ode-stiff")
    tr = integrate(case.recommended_plan(), case.system, 0.0, case.initial_state, case.t_final, 10)
    vals = np.array(tr.states).ravel()
    ok = not tr.diverged and bool(np.all((vals > 0) & (vals <= 1)))
    verdict("9 stiff ODE bounded", ok, f"10 steps, states in [{vals.min():.4f}, {vals.max():.4f}]")


def test_c09_stiff_ode_order(verdict):
    case = get_case("ode-stiff")
    plan = case.recommended_plan()
    counts = [10, 20, 40, 80]
    errs = [case.errors(_final(plan, case.system, case, n).final).linf_rel for n in counts]
    slope = fit_order(errs, [case.t_final / n for n in counts]).slope
    verdict("9 stiff ODE order", abs(slope - 2) <= 0.25, f"observed {slope:.3f} over 10..80 steps, expected 2 +/- 0.25")


# 10 --------------------------------------------------------------------------

def test_c10_polar(verdict):
    case = get_case("polar")
    n = case.steps_for_ratio(50.0, key="theta")
    plain = integrate(StepPlan("ERK2"), case.system, 0.0, case.initial_state, case.t_final, n, keep="final")
    blown = max(plain.diagnostics.max_norms)
    tr = _final(case.recommended_plan(), case.system, case, n)
    err = case.errors(tr.final, diverged=tr.diverged).linf_rel
    ok = blown > 1e3 and not tr.diverged and err <= 5e-2
    verdict("10 polar", ok, f"{n} steps, plain max norm {blown:.3g}, TASE2 on theta Linf={err:.3e}")


# 11 --------------------------------------------------------------------------

def test_c11_boundary_source(verdict):
    case = get_case("diffusion-dirichlet")
    good_plan = case.recommended_plan()
    bad_plan = StepPlan.create("ERK2", 2, mode="tase-split")
    wrong = case.variants["wrong"]
    n0 = case.steps_for_ratio(61.0)
    counts = [n0 * 2**k for k in range(4)]
    good = [case.errors(_final(good_plan, case.system, case, n).final).linf_rel for n in counts]
    bad0 = case.errors(_final(bad_plan, wrong, case, n0).final).linf_rel
    good_order = fit_order(good, [case.t_final / n for n in counts]).slope
    # the inconsistent variant reaches its asymptotic range only below dt_stab
    short = get_case("diffusion-dirichlet", t_final=0.5)
    fine = [short.steps_for_ratio(r) for r in (0.125, 0.0625, 0.03125, 0.015625)]
    bad = [short.errors(_final(bad_plan, short.variants["wrong"], short, n).final).linf_rel for n in fine]
    bad_order = fit_order(bad, [short.t_final / n for n in fine]).slope
    ok = bad0 >= 10 * good[0] and abs(good_order - 2) <= 0.25 and abs(bad_order - 2) <= 0.25
    verdict("11 boundary source", ok,
            f"Linf correct {good[0]:.2e} vs wrong {bad0:.2e} ({bad0 / good[0]:.0f}x); "
            f"orders {good_order:.2f} / {bad_order:.2f}")


# 12 --------------------------------------------------------------------------

def test_c12_splitting(verdict):
    eq = get_case("adr-equal")
    split = _final(eq.recommended_plan(mode="tase-split"), eq.system, eq, eq.default_steps).final
    comb = _final(eq.recommended_plan(), eq.system, eq, eq.default_steps).final
    gap = float(np.abs(split - comb).max() / np.abs(comb).max())
    inc = get_case("adr-incompatible")
    e_split = inc.errors(_final(inc.recommended_plan(mode="tase-split"), inc.system, inc,
                                inc.default_steps).final).linf_rel
    e_comb = inc.errors(_final(inc.recommended_plan(), inc.system, inc, inc.default_steps).final).linf_rel
    ok = gap <= 1e-3 and e_split >= 10 * e_comb
    verdict("12 splitting", ok, f"equal BC gap {gap:.2e}; incompatible split {e_split:.2e} vs combined {e_comb:.2e}")


# 13 --------------------------------------------------------------------------

def _per_step(plan, case, n, repeats=3):
    return min(_final(plan, case.system, case, n).time_per_step() for _ in range(repeats))


def test_c13_cost_ordering(verdict):
    lin = get_case("diffusion-periodic")
    ratios = []
    for k in range(1, 5):
        t_tase = _per_step(StepPlan.create(f"ERK{k}", k, precompute=True), lin, 200)
        t_sdirk = _per_step(StepPlan(f"SDIRK{k}", precompute=True), lin, 200)
        ratios.append(t_tase / t_sdirk)
    nl = get_case("power-law", beta=4.0)
    t_tase = _per_step(nl.recommended_plan(), nl, nl.default_steps)
    newton = StepPlan("SDIRK4", newton=NewtonOptions(jacobian="fd"))
    t_newton = _per_step(newton, nl, nl.default_steps)
    nl_ratio = t_tase / t_newton
    ok = max(ratios) <= 2.0 and nl_ratio <= 0.2
    verdict("13 cost ordering", ok,
            "linear TASE/SDIRK " + ", ".join(f"k={k}:{r:.2f}" for k, r in enumerate(ratios, 1))
            + f"; nonlinear TASE/Newton {nl_ratio:.3f}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v", "-p", "no:cacheprovider"]))
