#!/usr/bin/env python3
"""Error-vs-N study on the default two-slit geometry.

Runs the correlation reconstruction over a doubling realization schedule for
several seeds, then writes per-seed convergence curves, the final normalized
patterns, and a median curve across seeds.  All outputs are plain CSV so the
figures can be drawn by any external plotting tool.
"""

import argparse
from pathlib import Path

import numpy as np

from ghostsim import ExperimentConfig, run_converge
from ghostsim.cli import write_curve_csv, write_manifest, write_pattern_csv


def parse_args(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", type=Path, default=Path("out-convergence"))
    parser.add_argument("--seeds", type=int, default=3, help="number of seeds to average")
    parser.add_argument("--phi", type=float, default=1.72e-3, help="source aperture width (m)")
    parser.add_argument(
        "--schedule",
        default="1000,2000,4000,8000,16000,32000,64000,128000",
        help="comma-separated checkpoint counts",
    )
    return parser.parse_args(argv)


def main(argv=None) -> int:
    args = parse_args(argv)
    schedule = tuple(int(v) for v in args.schedule.split(","))
    out = args.out_dir
    out.mkdir(parents=True, exist_ok=True)

    outputs = []
    curves = []
    config = None
    for seed in range(args.seeds):
        config = ExperimentConfig(phi=args.phi, seed=seed, schedule=schedule)
        result = run_converge(config)
        curves.append([p.eps_global for p in result.curve])

        curve_path = out / f"curve_seed{seed}.csv"
        write_curve_csv(curve_path, result.curve)
        n_final, snapshot = result.snapshots[-1]
        pattern_path = out / f"pattern_seed{seed}_N{n_final}.csv"
        write_pattern_csv(pattern_path, snapshot, result.reference)
        outputs += [curve_path, pattern_path]
        print(f"seed {seed}: eps_global " + " ".join(f"{e:.4f}" for e in curves[-1]))

    median = np.median(np.array(curves), axis=0)
    lines = ["n,eps_global_median"]
    for n, eps in zip(schedule, median):
        lines.append(f"{n},{float(eps)!r}")
    median_path = out / "curve_median.csv"
    median_path.write_text("\n".join(lines) + "\n")
    outputs.append(median_path)

    write_manifest(out / "manifest.json", "scripts/convergence_run", config, outputs)
    print(f"median eps_global: " + " ".join(f"{e:.4f}" for e in median))
    print(f"wrote {len(outputs)} files to {out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
