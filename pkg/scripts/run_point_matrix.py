"""Train and evaluate every (toy dataset, noise level, family) preset.

    python scripts/run_point_matrix.py --steps 5000 --root runs/points

Writes one run directory per preset plus a combined markdown report.
"""
import argparse
from pathlib import Path

from ganbench import cli
from ganbench.pointgen import NOISE_LEVELS, POINT_KINDS

FAMILIES = ("mlp_gan", "mlp_wgan_gp")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=5000, help="generator updates per run")
    ap.add_argument("--root", default="runs/points")
    ap.add_argument("--kinds", nargs="*", default=list(POINT_KINDS))
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    root = Path(args.root)
    runs = []
    for kind in args.kinds:
        for level in NOISE_LEVELS:
            for fam in FAMILIES:
                name = f"{kind}-{level}-{fam}"
                out = root / name
                rc = cli.main(["train", "--preset", name, "--steps", str(args.steps), "--seed", str(args.seed),
                               "--set", "train.early_stop=false", "--out", str(out), "--force"])
                if rc != 0:
                    print(f"{name}: train exited {rc}")
                    continue
                cli.main(["eval", "--run", str(out)])
                runs.append(str(out))
    if runs:
        cli.main(["report", *runs, "--out", str(root / "report.md")])


if __name__ == "__main__":
    main()
