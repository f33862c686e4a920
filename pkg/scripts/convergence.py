"""Error versus dt/dt_stability for the benchmark cases (one CSV per case).

    python3 scripts/convergence.py --out results/convergence
"""

import argparse
import csv
from dataclasses import dataclass, field
from pathlib import Path

from tasekit.integrators import StepPlan, integrate
from tasekit.problems import error_report, fit_order, get_case


@dataclass(frozen=True)
class Study:
    case: str
    params: dict = field(default_factory=dict)
    ratios: tuple[float, ...] = ()
    mode: str | None = None
    variant: str | None = None


STUDIES = (
    Study("diffusion-periodic", ratios=(6079.27, 3039.6, 1519.8, 759.9)),
    Study("diffusion-steady", ratios=(8.06, 4.03, 2.02, 1.01, 0.5)),
    Study("diffusion-quasi-steady", ratios=(75.0, 37.5, 18.75, 9.4, 4.7)),
    Study("diffusion-dirichlet", ratios=(60.8, 30.4, 15.2, 7.6)),
    Study("diffusion-dirichlet", ratios=(60.8, 30.4, 15.2, 7.6), variant="wrong", mode="tase-split"),
    Study("adr-equal", ratios=(5e5, 2.5e5, 1.25e5, 6.25e4), mode="tase-split"),
    Study("adr-equal", ratios=(5e5, 2.5e5, 1.25e5, 6.25e4), mode="tase-combined"),
    Study("adr-incompatible", ratios=(5e5, 2.5e5, 1.25e5, 6.25e4), mode="tase-split"),
    Study("adr-incompatible", ratios=(5e5, 2.5e5, 1.25e5, 6.25e4), mode="tase-combined"),
    *(Study("power-law", {"beta": b}, ratios=(9.56, 4.78, 2.39, 1.2)) for b in (0.0, 0.25, 1.0, 4.0)),
    Study("ode-stiff", ratios=(1e4, 1e3, 1e2, 1e1)),
    Study("polar", ratios=(64.8, 32.4, 16.2, 8.1)),
)


def run_study(st: Study, out: Path) -> Path:
    case = get_case(st.case, **st.params)
    system = case.variants[st.variant] if st.variant else case.system
    if st.variant:
        rec = case.recommended
        plan = StepPlan.create(rec["scheme"], rec["p"], mode="tase-split")
    else:
        plan = case.recommended_plan(**({"mode": st.mode} if st.mode else {}))
    target = case.solution(case.t_final) if case.has_solution else case.explicit_reference()
    tag = "_".join([st.case, *(f"{k}{v:g}" for k, v in st.params.items()), st.mode or "", st.variant or ""])
    path = out / f"{tag.strip('_').replace('__', '_')}.csv"
    rows = []
    for r in st.ratios:
        n = case.steps_for_ratio(r)
        tr = integrate(plan, system, 0.0, case.initial_state, case.t_final, n, keep="final")
        rep = error_report(tr.final, target, case.weights, tr.diverged)
        rows.append((case.t_final / n, case.t_final / n / case.dt_stability, n, rep.l2_rel, rep.linf_rel, rep.diverged))
    with open(path, "w", newline="") as fh:
        fh.write(f"# case={case.name} scheme={plan.scheme} mode={plan.mode} alpha={plan.tase.alpha!r}\n")
        w = csv.writer(fh)
        w.writerow(["dt", "dt_ratio", "n_steps", "l2_rel", "linf_rel", "diverged"])
        for row in rows:
            w.writerow([f"{v:.17g}" if isinstance(v, float) else v for v in row])
        slope = fit_order([r[4] for r in rows], [r[0] for r in rows]).slope
        fh.write(f"# observed_order_linf={slope:.17g}\n")
    print(f"{path.name}: Linf at largest dt {rows[0][4]:.3e}, order {slope:.2f}")
    return path


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path("results/convergence"))
    ap.add_argument("--only", help="run only studies of this case")
    a = ap.parse_args()
    a.out.mkdir(parents=True, exist_ok=True)
    for st in STUDIES:
        if a.only is None or st.case == a.only:
            run_study(st, a.out)
