#!/usr/bin/env python3
"""Full desk-scale experiment: layer -> beta -> PDE run -> tracking -> rates.

Equivalent to `pnflow pipeline --config <generated config>`; kept as a
script so the parameters are easy to edit in one place.
"""

import json
import sys
import tempfile
from pathlib import Path

from pnflow.cli import main

CONFIG = {
    "s": 0.5,
    "N": 2,
    "potential": {"kind": "cosine"},
    "grid": {"half_width": 400.0, "n": 2**14},
    "t0": 1.0,
    "t1": 1000.0,
    "dt": 0.003,
    "scheme": "imex_spectral",
    "n_snapshots": 33,
    "h0": [-0.25, 0.25],
    "layer_tol": 1e-10,
}


if __name__ == "__main__":
    out = sys.argv[1] if len(sys.argv) > 1 else "out/main_experiment"
    cfg_path = Path(tempfile.mkdtemp()) / "pipeline.json"
    cfg_path.write_text(json.dumps(CONFIG, indent=2))
    sys.exit(main(["--out-dir", out, "pipeline", "--config", str(cfg_path)]))
