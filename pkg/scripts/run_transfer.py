"""Train on one square per image, then fine-tune the same weights on three squares.

    python scripts/run_transfer.py --source-steps 10000 --transfer-steps 5000

The report shows the count histogram before and after the switch.
"""
import argparse
from pathlib import Path

from ganbench import cli


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--family", default="dcgan", choices=["dcgan", "conv_wgan_gp"])
    ap.add_argument("--source-steps", type=int, default=10_000)
    ap.add_argument("--transfer-steps", type=int, default=5000)
    ap.add_argument("--samples", type=int, default=1000)
    ap.add_argument("--root", default="runs/transfer")
    args = ap.parse_args()

    root = Path(args.root)
    src = root / "source-squares_1_4"
    dst = root / "transfer-squares_3_4"
    common = ["--set", "train.early_stop=false", "--force"]
    if cli.main(["train", "--preset", f"squares_1_4-{args.family}", "--steps", str(args.source_steps),
                 "--out", str(src), *common]) != 0:
        raise SystemExit("source training failed")
    cli.main(["eval", "--run", str(src), "--n", str(args.samples)])
    if cli.main(["transfer", "--preset", f"squares_3_4-{args.family}", "--source", str(src),
                 "--steps", str(args.transfer_steps), "--out", str(dst), *common]) != 0:
        raise SystemExit("transfer failed")
    cli.main(["eval", "--run", str(dst), "--n", str(args.samples)])
    cli.main(["report", str(src), str(dst), "--out", str(root / "report.md")])


if __name__ == "__main__":
    main()
