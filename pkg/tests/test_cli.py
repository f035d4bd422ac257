import json
from pathlib import Path

import pytest

from ganbench import cli
from ganbench.config import ExperimentConfig, apply_overrides, list_presets, load_config_dict

SMALL_MLP = ["--set", "dataset.n=256", "--set", "model.hidden=[16,16,16]", "--set", "train.batch_size=32"]
SMALL_CONV = ["--set", "dataset.n=64", "--set", "model.gen_channels=[8,8,8]",
              "--set", "model.critic_channels=[4,4,4,4]", "--set", "train.batch_size=16",
              "--set", "eval.n_samples=32"]


def _only_dir(root):
    dirs = [p for p in Path(root).iterdir() if p.is_dir()]
    assert len(dirs) == 1
    return dirs[0]


def test_presets_all_load():
    names = list_presets()
    assert len(names) >= 50
    for n in names:
        cfg = ExperimentConfig.from_dict(load_config_dict(preset=n))
        cfg.validate()


def test_overrides():
    d = apply_overrides({"train": {}}, ["train.max_steps=5", "model.hidden=[1,2,3]", "name=x"])
    assert d == {"train": {"max_steps": 5}, "model": {"hidden": [1, 2, 3]}, "name": "x"}


def test_gen_data_deterministic(out_root, capsys):
    args = ["gen-data", "--preset", "data-squares_3_4", "--set", "dataset.n=50"]
    assert cli.main(args + ["--root", str(out_root / "a")]) == 0
    assert cli.main(args + ["--root", str(out_root / "b")]) == 0
    ma = json.loads((_only_dir(out_root / "a" / "datasets") / "manifest.json").read_text())
    mb = json.loads((_only_dir(out_root / "b" / "datasets") / "manifest.json").read_text())
    assert ma == mb and ma["count"] == 3
    assert "rejections total=" in capsys.readouterr().out


def test_gen_data_points(out_root):
    assert cli.main(["gen-data", "--preset", "data-circles-moderate"]) == 0
    d = _only_dir(out_root / "datasets")
    side = json.loads((d / "data.json").read_text())
    assert side["kind"] == "circles" and side["noise"] == 0.05 and side["normalization"]


def test_gen_data_infeasible(out_root):
    args = ["gen-data", "--preset", "data-squares_3_4", "--set", "dataset.params.count=50"]
    assert cli.main(args) == cli.EXIT_INFEASIBLE


def test_invalid_pairing_exits_before_compute(out_root):
    args = ["train", "--preset", "blobs-minimal-mlp_gan", "--set", "model.family=dcgan"]
    assert cli.main(args) == cli.EXIT_CONFIG
    assert not (out_root / "runs").exists() or not any((out_root / "runs").iterdir())


def test_missing_checkpoint(out_root, tmp_path):
    assert cli.main(["train", "--preset", "smoke-blobs", "--resume", str(tmp_path / "nope.pt")]) == cli.EXIT_MISSING
    assert cli.main(["eval", "--run", str(tmp_path / "nope")]) == cli.EXIT_MISSING


def test_train_eval_report_points(out_root, capsys):
    assert cli.main(["train", "--preset", "smoke-blobs", "--steps", "20", *SMALL_MLP]) == 0
    run = _only_dir(out_root / "runs")
    man = json.loads((run / "manifest.json").read_text())
    assert man["generator_updates"] == 20 and man["critic_updates"] == 100
    assert man["step_semantics"] and man["dataset"]["sha256"]
    assert (run / "history.csv").exists() and (run / "samples.png").exists()
    assert cli.main(["eval", "--run", str(run), "--n", "200"]) == 0
    rep = json.loads((run / "eval" / "report.json").read_text())
    assert set(rep["coverage"]) >= {"covered", "spurious", "n_covered"}
    assert cli.main(["report", str(run)]) == 0
    assert "modes covered" in capsys.readouterr().out


def test_resume(out_root):
    base = ["train", "--preset", "smoke-blobs", *SMALL_MLP, "--set", "train.checkpoint_every=5"]
    assert cli.main(base + ["--steps", "10"]) == 0
    run = _only_dir(out_root / "runs")
    ck = run / "checkpoints" / "step_0000005.pt"
    assert cli.main(base + ["--steps", "10", "--resume", str(ck), "--out", str(out_root / "resumed")]) == 0
    man = json.loads((out_root / "resumed" / "manifest.json").read_text())
    assert man["generator_updates"] == 5 and man["final_step"] == 10
    assert man["resumed_from"]["step"] == 5


def test_resume_spec_mismatch(out_root):
    base = ["train", "--preset", "smoke-blobs", *SMALL_MLP]
    assert cli.main(base + ["--steps", "1"]) == 0
    run = _only_dir(out_root / "runs")
    args = ["train", "--preset", "smoke-blobs", "--steps", "2", "--resume", str(run), "--out", str(out_root / "x")]
    assert cli.main(args) == cli.EXIT_INCOMPATIBLE


def test_out_dir_not_overwritten(out_root):
    args = ["train", "--preset", "smoke-blobs", "--steps", "1", *SMALL_MLP, "--out", str(out_root / "r")]
    assert cli.main(args) == 0
    assert cli.main(args) == cli.EXIT_CONFIG
    assert cli.main(args + ["--force"]) == 0


def test_transfer_zero_steps_and_incompatible(out_root):
    assert cli.main(["train", "--preset", "smoke-squares_1_4", "--steps", "2", *SMALL_CONV,
                     "--out", str(out_root / "src")]) == 0
    src_man = json.loads((out_root / "src" / "manifest.json").read_text())
    assert cli.main(["transfer", "--preset", "smoke-squares_3_4", "--source", str(out_root / "src"),
                     "--steps", "0", *SMALL_CONV, "--out", str(out_root / "t")]) == 0
    man = json.loads((out_root / "t" / "manifest.json").read_text())
    assert man["transfer"]["params_hash"] == src_man["final_params_hash"] == man["final_params_hash"]
    assert man["tags"]["transfer"] is True and man["transfer"]["step"] == 2

    assert cli.main(["transfer", "--preset", "smoke-blobs", "--source", str(out_root / "src"),
                     "--out", str(out_root / "bad")]) == cli.EXIT_INCOMPATIBLE


def test_eval_dataset_identity(out_root):
    assert cli.main(["gen-data", "--preset", "data-squares_3_4", "--set", "dataset.n=40"]) == 0
    d = _only_dir(out_root / "datasets")
    assert cli.main(["eval", "--dataset", str(d)]) == 0
    rep = json.loads((d / "eval" / "report.json").read_text())
    assert rep["counts"]["histogram"] == {"3": 40}
    assert rep["provenance"]["reference_count_range"] == [0, 5]
    assert (d / "eval" / "grid.png").exists() and (d / "eval" / "counts.png").exists()


def test_eval_requires_one_source(out_root):
    assert cli.main(["eval"]) == cli.EXIT_CONFIG
