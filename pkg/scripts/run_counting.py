"""Train an image GAN on each square dataset and tabulate detected object counts.

    python scripts/run_counting.py --family dcgan --steps 10000
"""
import argparse
from pathlib import Path

from ganbench import cli

DATASETS = ("squares_1_4", "squares_3_4", "squares_1_16")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--family", default="dcgan", choices=["dcgan", "conv_wgan_gp"])
    ap.add_argument("--steps", type=int, default=10_000)
    ap.add_argument("--samples", type=int, default=1000)
    ap.add_argument("--root", default="runs/counting")
    ap.add_argument("--datasets", nargs="*", default=list(DATASETS))
    args = ap.parse_args()

    root = Path(args.root)
    runs = []
    for ds in args.datasets:
        out = root / f"{ds}-{args.family}"
        rc = cli.main(["train", "--preset", f"{ds}-{args.family}", "--steps", str(args.steps),
                       "--set", "train.early_stop=false", "--out", str(out), "--force"])
        if rc != 0:
            print(f"{ds}: train exited {rc}")
            continue
        cli.main(["eval", "--run", str(out), "--n", str(args.samples)])
        runs.append(str(out))
    if runs:
        cli.main(["report", *runs, "--out", str(root / "report.md")])


if __name__ == "__main__":
    main()
