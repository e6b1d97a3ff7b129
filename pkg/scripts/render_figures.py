#!/usr/bin/env python3
"""Render the five standard figures from a pipeline output directory.

Usage: render_figures.py <pipeline_out_dir> [<figure_dir>]
Requires the pnflow-figures package (figures/ in this repository).
"""

import json
import sys
import tempfile
from pathlib import Path

from pnflow_figures.cli import main as figures_main


def spec(kind, inputs, output, s):
    body = {"kind": kind, "inputs": [str(p) for p in inputs],
            "output": str(output), "s": s, "t": 1.0}
    path = Path(tempfile.mkdtemp()) / f"{kind}.json"
    path.write_text(json.dumps(body))
    return path


if __name__ == "__main__":
    run_dir = Path(sys.argv[1])
    fig_dir = Path(sys.argv[2]) if len(sys.argv) > 2 else run_dir / "figures"
    manifest = json.loads((run_dir / "manifest.json").read_text())
    s = float(manifest["config"]["s"])
    plan = [
        ("trajectories", run_dir / "trajectory.csv"),
        ("selfsimilar_collapse", run_dir / "trajectory.csv"),
        ("tail_loglog", run_dir / "layer.csv"),
        ("psi_decay", run_dir / "diagnostics.csv"),
    ]
    rc = 0
    for kind, csv in plan:
        if not csv.exists():
            print(f"skipping {kind}: {csv} not found")
            continue
        rc |= figures_main(["render", "--spec",
                            str(spec(kind, [csv], fig_dir / f"{kind}.png", s))])
    sys.exit(rc)
