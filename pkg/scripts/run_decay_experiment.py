#!/usr/bin/env python3
"""Reproduce the headline decay experiment end to end.

Runs the bundled level-11 configuration through the spectrum, trace
s-number, and audit pipelines, writing stamped artifacts under
``results/`` (override with ``--out``).  Exits nonzero if any verdict
fails, mirroring the ``fracspectra`` CLI contract.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

REPO = Path(__file__).resolve().parents[1]

from fracspectra.cli import main as cli_main


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument(
        "--config",
        default=str(REPO / "configs" / "cantor_p2.json"),
        help="experiment config (default: the bundled level-11 run)",
    )
    parser.add_argument(
        "--out",
        default=str(REPO / "results" / "cantor_p2"),
        help="artifact directory",
    )
    args = parser.parse_args()

    worst = 0
    for command in ("spectrum", "trace-snumbers", "audits"):
        code = cli_main(
            [command, "--config", args.config, "--out", args.out]
        )
        worst = max(worst, code)
    return worst


if __name__ == "__main__":
    sys.exit(main())
