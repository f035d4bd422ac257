"""Track blob mode coverage of mlp_wgan_gp over a long run, every 2500 generator steps.

    python scripts/blobs_budget_sweep.py --steps 20000 --seed 0
"""
import argparse
import glob

import numpy as np

from ganbench import evaluator as ev
from ganbench.config import DatasetConfig, build_dataset, training_array
from ganbench.gancore import ModelSpec
from ganbench.trainer import DirectorySink, TrainSpec, train


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=20_000)
    ap.add_argument("--every", type=int, default=2500)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="runs/blobs-sweep")
    args = ap.parse_args()

    data = build_dataset(DatasetConfig("blobs", 5000, 0.0, seed=0))
    arr, tf = training_array(data)
    centers = np.asarray(data.params["centers"])
    sink = DirectorySink(args.out, tf, snapshot_n=2000, snapshot_seed=args.seed)
    ts = TrainSpec.for_family("mlp_wgan_gp", max_steps=args.steps, seed=args.seed, early_stop=False,
                              sample_every=args.every, checkpoint_every=0)
    train(ModelSpec("mlp_wgan_gp", (2,)), ts, arr, [sink])
    for f in sorted(glob.glob(f"{args.out}/samples/*.npy")):
        cov = ev.mode_coverage(np.load(f), centers, 3.0)
        print(f"{f.rsplit('/', 1)[-1]}: covered {cov.n_covered}/3 mass {np.round(cov.mass, 3).tolist()}")


if __name__ == "__main__":
    main()
