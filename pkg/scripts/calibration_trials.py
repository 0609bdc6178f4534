"""Extrinsic recovery over repeated noisy synthetic trials."""
import argparse

import numpy as np

from fishnav.calibration import calibrate, synthetic_correspondences
from fishnav.geometry import geodesic_distance
from fishnav.synthetic.scene import default_extrinsic


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=100)
    ap.add_argument("--lines", type=int, default=50)
    ap.add_argument("--noise-deg", type=float, nargs="+", default=[0.0, 0.25, 0.5, 1.0])
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    T = default_extrinsic()
    print(f"{'noise(deg)':>10} {'rot mean':>9} {'rot max':>9} {'trans mean(m)':>14} {'trans max(m)':>13}")
    for k, noise in enumerate(args.noise_deg):
        rng = np.random.default_rng([args.seed, k])
        rot, trans = [], []
        for _ in range(args.trials):
            c = synthetic_correspondences(T.rotation, T.translation, args.lines, rng, noise)
            est = calibrate(c).transform
            rot.append(np.rad2deg(geodesic_distance(est.rotation, T.rotation)))
            trans.append(np.linalg.norm(est.translation - T.translation))
        print(f"{noise:>10.2f} {np.mean(rot):>9.4f} {np.max(rot):>9.4f} {np.mean(trans):>14.4f} {np.max(trans):>13.4f}")


if __name__ == "__main__":
    main()
