"""Run the floor, corridor and door suites through the pipeline and print the tables."""
import argparse
import sys
from pathlib import Path

from fishnav.cli import main as cli

SCENES = Path(__file__).resolve().parent.parent / "scenes"


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--suites", nargs="+", default=["floor_suite", "corridor", "door_suite"])
    args = ap.parse_args()
    status = 0
    for name in args.suites:
        print(f"== {name}")
        status = max(status, cli(["sequence", str(SCENES / f"{name}.manifest.json"), "--seed", str(args.seed),
                                  "--workers", str(args.workers), "--out", str(Path(args.out) / name)]))
    return status


if __name__ == "__main__":
    sys.exit(main())
