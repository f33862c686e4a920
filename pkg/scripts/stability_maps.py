"""Stability maps for every RK_s + TASE_p pairing, plus imaginary-axis maxima.

    python3 scripts/stability_maps.py --out results/stability --grid 401
"""

import argparse
import csv
from dataclasses import dataclass
from pathlib import Path

from tasekit import schemes, stability


@dataclass(frozen=True)
class MapStudy:
    out: Path = Path("results/stability")
    grid: int = 401
    r_max: float = 1e8
    alpha_factors: tuple[float, ...] = (0.25, 1.0, 2.0)
    imag_samples: int = 10**6


def run(cfg: MapStudy) -> Path:
    cfg.out.mkdir(parents=True, exist_ok=True)
    summary = cfg.out / "summary.csv"
    with open(summary, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["scheme", "p", "alpha_factor", "alpha", "max_left_half", "unstable_cells", "imag_max"])
        for s in range(1, 5):
            scheme = f"ERK{s}"
            info = schemes.scheme_info(scheme)
            for p in range(1, 5):
                for fac in cfg.alpha_factors:
                    alpha = fac * info.alpha_min(p)
                    scan = stability.scan_region(scheme, p, alpha, "log-radial", cfg.grid, r_range=(1e-8, cfg.r_max))
                    scan.to_csv(cfg.out / f"{scheme}_p{p}_x{fac:g}.csv")
                    peak = stability.imag_axis_max(scheme, p, alpha, 1e10, cfg.imag_samples)
                    w.writerow([scheme, p, fac, f"{alpha:.17g}", f"{scan.max_left_half():.17g}",
                                scan.unstable_cells(), f"{peak:.17g}"])
                    print(f"{scheme} p={p} x{fac:g}: max {scan.max_left_half():.4f} "
                          f"unstable {scan.unstable_cells()} imag {peak:.4f}")
    return summary


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=MapStudy.out)
    ap.add_argument("--grid", type=int, default=MapStudy.grid)
    ap.add_argument("--imag-samples", type=int, default=MapStudy.imag_samples)
    a = ap.parse_args()
    print("wrote", run(MapStudy(out=a.out, grid=a.grid, imag_samples=a.imag_samples)))
