"""Floor-plane accuracy of the depth stage under increasing clutter."""
import argparse

import numpy as np

from fishnav.floor_detection import detect_floor
from fishnav.synthetic.render import render_depth, true_planes
from fishnav.synthetic.suites import clutter_scene


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--frames", type=int, default=20)
    ap.add_argument("--fractions", type=float, nargs="+", default=[0.1, 0.3, 0.5])
    ap.add_argument("--noise", type=float, default=0.005, help="depth noise sigma (m)")
    args = ap.parse_args()
    print(f"{'clutter':>7} {'ok(0.5deg,1cm)':>15} {'angle max':>10} {'offset max(mm)':>15}")
    for frac in args.fractions:
        ok, angs, offs = 0, [], []
        for seed in range(args.frames):
            scene = clutter_scene(seed, fraction=frac, noise=args.noise)
            _, _, cloud, _ = render_depth(scene)
            _, plane = true_planes(scene)
            fm = detect_floor(cloud, seed=seed)
            ang = np.degrees(np.arccos(np.clip(fm.plane.normal @ plane.normal, -1.0, 1.0)))
            off = abs(fm.plane.offset - plane.offset)
            ok += ang <= 0.5 and off <= 0.01
            angs.append(ang)
            offs.append(off * 1000)
        print(f"{frac:>7.2f} {ok:>9}/{args.frames:<5} {max(angs):>10.3f} {max(offs):>15.2f}")


if __name__ == "__main__":
    main()
