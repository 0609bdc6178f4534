"""Write the harness scenes and their manifests to scenes/."""
import argparse
from pathlib import Path

from fishnav import io
from fishnav.synthetic.scene import save_scene
from fishnav.synthetic.suites import corridor_scene, door_suite, floor_suite


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "scenes"))
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    suites = {"floor_suite": floor_suite(), "corridor": [corridor_scene()], "door_suite": door_suite()}
    for name, scenes in suites.items():
        for sc in scenes:
            save_scene(sc, out / f"{sc.name}.json")
        io.write_json(out / f"{name}.manifest.json",
                      {"frames": [{"id": sc.name, "scene": f"{sc.name}.json"} for sc in scenes]})
        print(f"{name}: {len(scenes)} scenes")


if __name__ == "__main__":
    main()
