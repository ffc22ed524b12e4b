#!/usr/bin/env python3
"""Speckle grain survey: coherence maps for a shrinking source aperture.

For each aperture diameter, renders one instantaneous intensity snapshot and
the modulus-squared coherence factor accumulated over N realizations, then
measures the coherence-peak FWHM along both axes and compares it to the
far-field estimate lambda * z / phi.  Grids the snapshots and maps to CSV.
"""

import argparse
from pathlib import Path

from ghostsim import ExperimentConfig, run_speckle
from ghostsim.cli import write_grid_csv, write_manifest, write_speckle_csv


def parse_args(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", type=Path, default=Path("out-speckle"))
    parser.add_argument("--n", type=int, default=20_000, help="realizations per aperture")
    parser.add_argument(
        "--phi-list",
        default="2.5e-3,1.25e-3,0.625e-3,0.3125e-3",
        help="comma-separated aperture diameters (m), largest first",
    )
    parser.add_argument("--points", type=int, default=256, help="detector points per axis")
    parser.add_argument("--pitch", type=float, default=80e-6, help="detector pitch (m)")
    parser.add_argument("--seed", type=int, default=0)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    args = parse_args(argv)
    config = ExperimentConfig(
        speckle_points=args.points,
        speckle_pitch=args.pitch,
        speckle_phi_list=tuple(float(v) for v in args.phi_list.split(",")),
        speckle_n=args.n,
        seed=args.seed,
    )
    out = args.out_dir
    out.mkdir(parents=True, exist_ok=True)

    points = run_speckle(config)
    outputs = []
    for p in points:
        tag = f"phi{p.phi * 1e3:g}mm"
        snap_path = out / f"snapshot_{tag}.csv"
        coh_path = out / f"coherence_{tag}.csv"
        write_grid_csv(snap_path, p.snapshot)
        write_grid_csv(coh_path, p.coherence)
        outputs += [snap_path, coh_path]
        print(
            f"phi={p.phi * 1e3:6.3f} mm  l_c={p.l_c * 1e6:6.2f} um  "
            f"fwhm=({p.fwhm_axis0 * 1e6:6.2f}, {p.fwhm_axis1 * 1e6:6.2f}) um  "
            f"fwhm/l_c=({p.fwhm_axis0 / p.l_c:.3f}, {p.fwhm_axis1 / p.l_c:.3f})"
        )

    table_path = out / "speckle.csv"
    write_speckle_csv(table_path, points)
    outputs.append(table_path)
    write_manifest(out / "manifest.json", "scripts/speckle_survey", config, outputs)
    print(f"wrote {len(outputs)} files to {out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
