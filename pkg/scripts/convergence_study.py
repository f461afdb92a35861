#!/usr/bin/env python3
"""Watch the fitted decay exponent settle as the discretization refines.

Runs the spectrum pipeline at a range of refinement levels and prints a
level-by-level table of atom counts, fitted slopes, and slope deltas, so
you can see the exponent stabilize toward the predicted value.  Artifacts
land under ``results/convergence`` unless ``--out`` says otherwise.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

REPO = Path(__file__).resolve().parents[1]

from fracspectra.experiment import load_config, run_convergence
from fracspectra.spectral_report import theoretical_exponent


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument(
        "--config",
        default=str(REPO / "configs" / "cantor_p2.json"),
        help="experiment config supplying measure and analysis parameters",
    )
    parser.add_argument(
        "--levels",
        default="7,8,9,10,11",
        help="comma-separated ascending refinement levels",
    )
    parser.add_argument(
        "--out",
        default=str(REPO / "results" / "convergence"),
        help="artifact directory",
    )
    args = parser.parse_args()

    config = load_config(args.config)
    levels = [int(part) for part in args.levels.split(",") if part.strip()]
    rows, paths = run_convergence(config, levels, args.out)

    predicted = theoretical_exponent(
        config.fractal.ambient_dim,
        _dimension(config),
        config.analysis.s,
        config.analysis.p,
    )
    print(f"predicted exponent: {predicted:.5f}")
    print(f"{'level':>5} {'atoms':>7} {'slope':>10} {'delta':>10}")
    for row in rows:
        delta = "" if row["delta_slope"] is None else f"{row['delta_slope']:+.5f}"
        print(f"{row['level']:>5} {row['n_atoms']:>7} {row['slope']:>10.5f} {delta:>10}")
    print(f"written: {paths['convergence_csv']}")
    return 0


def _dimension(config) -> float:
    from fracspectra.fractal_measure import build_cantor_like

    ifs = build_cantor_like(
        config.fractal.ambient_dim,
        config.fractal.n_maps,
        config.fractal.ratio,
        [list(t) for t in config.fractal.translations],
    )
    return ifs.dimension


if __name__ == "__main__":
    sys.exit(main())
