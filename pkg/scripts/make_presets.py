"""Write the bundled experiment presets into src/ganbench/presets/.

The matrix covers every point kind x noise level x MLP family and every image
dataset x conv family, plus short smoke configs for quick checks.
"""

import json
from pathlib import Path

from ganbench.pointgen import NOISE_LEVELS, POINT_KINDS
from ganbench.scenegen import IMAGE_DATASETS

OUT = Path(__file__).resolve().parents[1] / "src" / "ganbench" / "presets"


def write(name, cfg):
    cfg = {"name": name, **cfg}
    (OUT / f"{name}.json").write_text(json.dumps(cfg, indent=2) + "\n")


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for old in OUT.glob("*.json"):
        old.unlink()
    for kind in POINT_KINDS:
        for label, noise in NOISE_LEVELS.items():
            write(f"data-{kind}-{label}", {"dataset": {"kind": kind, "n": 5000, "noise": noise, "seed": 0}})
            for family in ("mlp_gan", "mlp_wgan_gp"):
                write(f"{kind}-{label}-{family}", {
                    "dataset": {"kind": kind, "n": 5000, "noise": noise, "seed": 0},
                    "model": {"family": family},
                    "train": {"max_steps": 150000},
                })
    for ds in IMAGE_DATASETS:
        write(f"data-{ds}", {"dataset": {"kind": ds, "n": 5000, "seed": 0}})
        for family in ("dcgan", "conv_wgan_gp"):
            write(f"{ds}-{family}", {
                "dataset": {"kind": ds, "n": 5000, "seed": 0},
                "model": {"family": family},
                "train": {"max_steps": 150000},
            })
    write("smoke-blobs", {
        "dataset": {"kind": "blobs", "n": 5000, "seed": 7},
        "model": {"family": "mlp_wgan_gp"},
        "train": {"max_steps": 500, "early_stop": False, "checkpoint_every": 250, "sample_every": 250},
    })
    write("smoke-circles", {
        "dataset": {"kind": "circles", "n": 5000, "noise": 0.05, "seed": 0},
        "model": {"family": "mlp_gan"},
        "train": {"max_steps": 500, "early_stop": False},
    })
    write("smoke-squares_1_4", {
        "dataset": {"kind": "squares_1_4", "n": 1000, "seed": 0},
        "model": {"family": "dcgan"},
        "train": {"max_steps": 200, "early_stop": False},
        "eval": {"n_samples": 256},
    })
    write("smoke-squares_3_4", {
        "dataset": {"kind": "squares_3_4", "n": 1000, "seed": 0},
        "model": {"family": "dcgan"},
        "train": {"max_steps": 200, "early_stop": False},
        "eval": {"n_samples": 256},
    })
    write("desk-squares_3_4-dcgan", {
        "dataset": {"kind": "squares_3_4", "n": 5000, "seed": 0},
        "model": {"family": "dcgan"},
        "train": {"max_steps": 10000, "early_stop": False},
        "eval": {"n_samples": 1000},
    })


if __name__ == "__main__":
    main()
