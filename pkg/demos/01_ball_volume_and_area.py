"""Volumes and areas of ball-shaped sublevel sets vs their closed forms.

Walks the radial corpus fields, estimates V(t) by grid counting and by
Monte Carlo, estimates A(t) from an extracted fiber mesh, and prints each
against the exact ball formulas.  Run as:

    python3 demos/01_ball_volume_and_area.py
"""

import numpy as np

from sublevel_kit import (
    area,
    get_field,
    volume_grid,
    volume_mc,
)


def main():
    levels = [0.5, 1.0, 1.5]
    for fid in ("euclidean_norm:2", "euclidean_norm:3", "squared_norm:2",
                "quartic_norm:2"):
        field, oracle = get_field(fid)
        print(f"\n== {fid} (sublevel sets are balls) ==")
        print(f"{'t':>5} {'V grid':>10} {'V mc':>10} {'V exact':>10} "
              f"{'A mesh':>10} {'A exact':>10}")
        for t in levels:
            vg, eg = volume_grid(field, t, resolution=192)
            vm, em = volume_mc(field, t, samples=200_000, seed=1)
            a_est = area(field, t, resolution=192)
            print(f"{t:5.2f} {vg:10.5f} {vm:10.5f} {oracle.volume(t):10.5f} "
                  f"{a_est.value:10.5f} {oracle.area(t):10.5f}")
        t = 1.0
        vg, eg = volume_grid(field, t, resolution=192)
        print(f"   grid error bar at t=1: +-{eg:.2e} "
              f"(true gap {abs(vg - oracle.volume(t)):.2e})")


if __name__ == "__main__":
    main()
