#!/usr/bin/env python3
"""Threshold sample count N* as a function of the size ratio kappa.

For each seed, sweeps a list of kappa values (aperture width over coherence
length at the object plane), searches the realization schedule for the first
checkpoint where the global error reaches tau, and writes one CSV per seed
plus a median summary.  Medians over a handful of seeds are the right unit
for trend statements; single-seed N* values are noisy.
"""

import argparse
from pathlib import Path

import numpy as np

from ghostsim import ExperimentConfig, run_kappa_sweep
from ghostsim.cli import write_kappa_csv, write_manifest

# Aperture width per unit kappa for the default geometry:
# wavelength * d1 / slit_width = 0.532um * 60mm / 105um.
KAPPA_UNIT = 3.04e-4


def geometric_schedule(start: int, cap: int, ratio: float = 1.25) -> tuple[int, ...]:
    out = []
    n = start
    while n < cap:
        out.append(n)
        n = round(n * ratio)
    return tuple(out)


def parse_args(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", type=Path, default=Path("out-kappa"))
    parser.add_argument("--kappas", default="8,10,12,14,16")
    parser.add_argument("--seeds", type=int, default=5)
    parser.add_argument("--tau", type=float, default=0.07)
    parser.add_argument("--budget", type=int, default=530_000, help="schedule cap")
    return parser.parse_args(argv)


def main(argv=None) -> int:
    args = parse_args(argv)
    kappas = tuple(float(v) for v in args.kappas.split(","))
    schedule = geometric_schedule(2000, args.budget)
    out = args.out_dir
    out.mkdir(parents=True, exist_ok=True)

    outputs = []
    stars = {k: [] for k in kappas}
    config = None
    for seed in range(args.seeds):
        # The wide apertures need a source window larger than the default
        # 2.05 mm; 512 points at 10 um pitch holds kappa up to ~16.
        config = ExperimentConfig(
            source_points=512,
            source_pitch=10e-6,
            phi_list=tuple(k * KAPPA_UNIT for k in kappas),
            seed=seed,
            schedule=schedule,
            tau=args.tau,
        )
        points = run_kappa_sweep(config)
        path = out / f"kappa_seed{seed}.csv"
        write_kappa_csv(path, points)
        outputs.append(path)
        for k, point in zip(kappas, points):
            stars[k].append(point.search.n_star if point.search.reached else None)
        print(
            f"seed {seed}: "
            + " ".join(
                f"k={k:g}:{p.search.n_star if p.search.reached else 'not-reached'}"
                for k, p in zip(kappas, points)
            )
        )

    lines = ["kappa,n_star_median,reached_runs"]
    for k in kappas:
        reached = [s for s in stars[k] if s is not None]
        med = int(np.median(reached)) if reached else ""
        lines.append(f"{k!r},{med},{len(reached)}/{args.seeds}")
    median_path = out / "kappa_median.csv"
    median_path.write_text("\n".join(lines) + "\n")
    outputs.append(median_path)

    write_manifest(out / "manifest.json", "scripts/kappa_sweep_run", config, outputs)
    print(f"wrote {len(outputs)} files to {out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
