#!/usr/bin/env python3
"""Layer solutions and tail fits across the fractional order."""

import sys

from pnflow.grid import Grid
from pnflow.layer import compute_layer, tail_fit
from pnflow.potential import cosine_potential


if __name__ == "__main__":
    orders = [float(v) for v in sys.argv[1:]] or [0.25, 0.35, 0.5, 0.65, 0.75]
    pot = cosine_potential()
    grid = Grid(400.0, 2**14)
    print("s, gamma, wp_exponent, wpp_exponent, c1_fit, c1_theory")
    for s in orders:
        lay = compute_layer(s, pot, grid, method="newton", tol=1e-9)
        rep = tail_fit(lay)
        print(f"{s}, {lay.gamma:.6f}, {rep.wp.exponent:.4f}, "
              f"{rep.wpp.exponent:.4f}, {rep.leading.coefficient:.6f}, "
              f"{rep.c1_theory:.6f}")
