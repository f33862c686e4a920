"""Per-step wall time of RK+TASE against SDIRK baselines.

Times exclude the one-off factorization setup and take the best of
several repeats. Only the ratios are meaningful across machines.

    python3 scripts/cost_table.py --out results/cost.csv
"""

import argparse
import csv
from dataclasses import dataclass
from pathlib import Path

from tasekit.integrators import NewtonOptions, StepPlan, integrate
from tasekit.problems import get_case


@dataclass(frozen=True)
class CostStudy:
    out: Path = Path("results/cost.csv")
    linear_steps: int = 200
    repeats: int = 3


def per_step(plan, case, n, repeats):
    return min(
        integrate(plan, case.system, 0.0, case.initial_state, case.t_final, n, keep="final").time_per_step()
        for _ in range(repeats)
    )


def run(cfg: CostStudy) -> list[tuple]:
    rows = []
    lin = get_case("diffusion-periodic")
    for k in range(1, 5):
        for precompute in (True, False):
            a = per_step(StepPlan.create(f"ERK{k}", k, precompute=precompute), lin, cfg.linear_steps, cfg.repeats)
            b = per_step(StepPlan(f"SDIRK{k}", precompute=precompute), lin, cfg.linear_steps, cfg.repeats)
            storage = "inverse" if precompute else "lu"
            rows.append(("diffusion-periodic", k, storage, f"ERK{k}+TASE{k}", a, f"SDIRK{k}", b, a / b))
    nl = get_case("power-law", beta=4.0)
    tase_t = per_step(nl.recommended_plan(), nl, nl.default_steps, cfg.repeats)
    for jac in ("fd", "auto"):
        b = per_step(StepPlan("SDIRK4", newton=NewtonOptions(jacobian=jac)), nl, nl.default_steps, cfg.repeats)
        rows.append(("power-law", 4, f"newton-{jac}", "ERK4+TASE4", tase_t, "SDIRK4", b, tase_t / b))
    cfg.out.parent.mkdir(parents=True, exist_ok=True)
    with open(cfg.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["case", "order", "storage", "method", "sec_per_step", "baseline", "baseline_sec_per_step", "ratio"])
        w.writerows(rows)
    for r in rows:
        print(f"{r[0]:<20} k={r[1]} {r[2]:<12} {r[3]:<12} {r[4]:.2e}  {r[5]:<7} {r[6]:.2e}  ratio {r[7]:.3f}")
    return rows


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=CostStudy.out)
    ap.add_argument("--repeats", type=int, default=CostStudy.repeats)
    a = ap.parse_args()
    run(CostStudy(out=a.out, repeats=a.repeats))
