"""Command-line entry point: ``ganbench {gen-data,train,eval,transfer,report}``.

Exit codes: 0 success, 2 configuration error, 3 infeasible scene, 4 numeric
failure, 5 missing input file, 6 incompatible checkpoint.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import logging
import os
import shutil
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import (
    ConfigError,
    ExperimentConfig,
    apply_overrides,
    build_dataset,
    list_presets,
    load_config_dict,
    training_array,
)
from .errors import (
    IncompatibleCheckpointError,
    InfeasibleSceneError,
    InvalidArgumentError,
    InvalidSpecError,
    NumericalError,
)
from .evaluator import EvalReport, evaluate_images, evaluate_points
from .gancore import load_checkpoint, params_hash
from .pointgen import AffineTransform, PointDataset
from .scenegen import ImageDataset, dataset_object_count
from .storage import (
    MANIFEST_FILE,
    SIDECAR_FILE,
    array_hash,
    load_images,
    load_points,
    save_images,
    save_points,
)
from .trainer import DirectorySink, TrainSpec, snapshot_samples, train, transfer_finetune

logger = logging.getLogger("ganbench")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_NUMERIC = 4
EXIT_MISSING = 5
EXIT_INCOMPATIBLE = 6

OUT_ENV = "GANBENCH_OUT"
# count range reported from visual inspection of squares_3_4 samples; a comparison annotation only
REFERENCE_COUNT_RANGE = {"squares_3_4": [0, 5]}


def output_root(args) -> Path:
    return Path(getattr(args, "root", None) or os.environ.get(OUT_ENV, "runs"))


def _dump(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=str) + "\n")


def _load_cfg(args) -> ExperimentConfig:
    d = load_config_dict(args.config, args.preset)
    overrides = list(args.set or [])
    if getattr(args, "steps", None) is not None:
        overrides.append(f"train.max_steps={args.steps}")
    if getattr(args, "seed", None) is not None:
        overrides.append(f"train.seed={args.seed}")
    if getattr(args, "deterministic", False):
        overrides.append("train.deterministic=true")
    return ExperimentConfig.from_dict(apply_overrides(d, overrides))


def _fresh_dir(args, cfg: ExperimentConfig, kind: str) -> Path:
    """A new run directory; never reuses an existing one unless ``--force``."""
    if args.out:
        d = Path(args.out)
    else:
        base = Path(cfg.output_dir) if cfg.output_dir else output_root(args) / kind
        stem = f"{cfg.name}-{cfg.config_hash()[:8]}"
        if args.force:
            d = base / stem
        else:
            d = base / f"{stem}-{_dt.datetime.now().strftime('%Y%m%dT%H%M%S%f')}"
    if d.exists() and any(d.iterdir()):
        if not args.force:
            raise ConfigError(f"{d} already exists; pass --force to overwrite")
        shutil.rmtree(d)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _latest_checkpoint(run_dir: Path) -> Path:
    ckpts = sorted((run_dir / "checkpoints").glob("step_*.pt"))
    if not ckpts:
        raise FileNotFoundError(f"no checkpoints under {run_dir}")
    return ckpts[-1]


def _resolve_checkpoint(path: str) -> tuple[Path, Path | None]:
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"checkpoint or run directory not found: {p}")
    if p.is_dir():
        return _latest_checkpoint(p), p
    run = p.parent.parent if p.parent.name == "checkpoints" else None
    return p, run


# gen-data

def cmd_gen_data(args) -> int:
    cfg = _load_cfg(args)
    ds_cfg = cfg.dataset
    if args.out:
        out = Path(args.out)
    else:
        out = output_root(args) / "datasets" / f"{ds_cfg.kind}-{cfg.config_hash()[:8]}"
    if (out / MANIFEST_FILE).exists() and not args.force:
        print(f"dataset already present at {out} (use --force to regenerate)")
        return EXIT_OK
    data = build_dataset(ds_cfg)
    if isinstance(data, PointDataset):
        _, tf = training_array(data)
        save_points(data, out, tf)
        manifest = {
            "kind": data.kind, "n": data.n, "d": data.d, "noise": data.noise, "seed": data.seed,
            "sha256": array_hash(data.points), "generator_version": __version__,
        }
        summary = f"{data.kind}: n={data.n} d={data.d} noise={data.noise} seed={data.seed}"
    else:
        save_images(data, out, png_preview=args.png)
        manifest = json.loads((out / MANIFEST_FILE).read_text())
        rej = data.rejection_stats()
        summary = (f"{data.name}: n={data.n} count={dataset_object_count(data.name)} "
                   f"rejections total={rej['total']} mean={rej['mean']:.3f} max={rej['max']}")
    manifest["config_hash"] = cfg.config_hash()
    _dump(out / MANIFEST_FILE, manifest)
    print(summary)
    print(f"wrote {out}")
    return EXIT_OK


# train / transfer

def _emit_final_samples(run_dir: Path, generator, tf, cfg: ExperimentConfig, data) -> None:
    from . import plots

    samples = snapshot_samples(generator, 64 if not cfg.dataset.is_points else 1000, cfg.eval.seed, tf)
    if cfg.dataset.is_points:
        plots.scatter(data.points, samples, run_dir / "samples.png", cfg.name)
    else:
        plots.sample_grid(samples, run_dir / "samples.png", cfg.name)


def _run_training(args, cfg, spec, ts, run_dir, init=None, resume=False, tags=None, extra_manifest=None):
    data = build_dataset(cfg.dataset)
    arr, tf = training_array(data)
    _dump(run_dir / "config.json", cfg.to_dict())
    manifest = {
        "config_hash": cfg.config_hash(),
        "name": cfg.name,
        "dataset": {"kind": cfg.dataset.kind, "n": cfg.dataset.n, "seed": cfg.dataset.seed,
                    "noise": cfg.dataset.noise, "sha256": array_hash(arr)},
        "model_spec": spec.to_dict(),
        "train_spec": ts.to_dict(),
        "seeds": {"dataset": cfg.dataset.seed, "train": ts.seed, "eval": cfg.eval.seed},
        "step_semantics": "max_steps counts generator updates",
        "normalization": tf.to_dict() if tf is not None else None,
        "generator_version": __version__,
        "created": _dt.datetime.now().isoformat(timespec="seconds"),
    }
    manifest.update(extra_manifest or {})
    sink = DirectorySink(run_dir, tf, snapshot_n=64, snapshot_seed=cfg.eval.seed,
                         extra={"config_hash": cfg.config_hash()})
    try:
        if tags and tags.get("transfer"):
            result = transfer_finetune(init, arr, ts, [sink], tags=tags)
        else:
            result = train(spec, ts, arr, [sink], init=init, resume=resume, tags=tags)
    except NumericalError as exc:
        manifest.update(stop_reason="numeric_failure", error=str(exc), last_checkpoint=exc.last_checkpoint)
        _dump(run_dir / MANIFEST_FILE, manifest)
        raise
    result.history.to_csv(run_dir / "history.csv")
    manifest.update(
        stop_reason=result.history.stop_reason,
        final_step=result.step,
        generator_updates=result.history.count("generator"),
        critic_updates=result.history.count("critic"),
        checkpoints=[str(Path(p).relative_to(run_dir)) for p in sink.checkpoints],
        final_params_hash=params_hash(result.generator, result.critic),
        tags=result.history.tags,
    )
    _dump(run_dir / MANIFEST_FILE, manifest)
    _emit_final_samples(run_dir, result.generator, tf, cfg, data)
    print(f"{cfg.name}: {manifest['generator_updates']} generator / {manifest['critic_updates']} critic updates, "
          f"stop={manifest['stop_reason']}, step={result.step}")
    print(f"wrote {run_dir}")
    return result


def cmd_train(args) -> int:
    cfg = _load_cfg(args)
    if not cfg.model:
        raise ConfigError("config has no model block")
    spec = cfg.model_spec()
    ts = cfg.train_spec()
    init = None
    extra = {}
    if args.resume:
        ckpt_path, _ = _resolve_checkpoint(args.resume)
        init = load_checkpoint(ckpt_path)
        if init.spec.spec_hash() != spec.spec_hash():
            raise IncompatibleCheckpointError(f"{ckpt_path} was built from a different model spec")
        extra["resumed_from"] = {"checkpoint": str(ckpt_path), "step": init.step,
                                 "params_hash": params_hash(*init.build())}
    run_dir = _fresh_dir(args, cfg, "runs")
    _run_training(args, cfg, spec, ts, run_dir, init=init, resume=init is not None, extra_manifest=extra)
    return EXIT_OK


def cmd_transfer(args) -> int:
    cfg = _load_cfg(args)
    ckpt_path, source_run = _resolve_checkpoint(args.source)
    ckpt = load_checkpoint(ckpt_path)
    if ckpt.spec.data_shape != cfg.dataset.data_shape:
        raise IncompatibleCheckpointError(
            f"source model emits {ckpt.spec.data_shape}, target dataset {cfg.dataset.kind} has {cfg.dataset.data_shape}"
        )
    if cfg.model and cfg.model.get("family") != ckpt.spec.family:
        raise ConfigError(f"config family {cfg.model.get('family')!r} differs from source {ckpt.spec.family!r}")
    cfg.model = {k: v for k, v in ckpt.spec.to_dict().items() if k != "data_shape"}
    ts = TrainSpec.for_family(ckpt.spec.family, **cfg.train)
    source = {
        "checkpoint": str(ckpt_path),
        "run": str(source_run) if source_run else None,
        "step": ckpt.step,
        "params_hash": params_hash(*ckpt.build()),
    }
    run_dir = _fresh_dir(args, cfg, "runs")
    _run_training(args, cfg, ckpt.spec, ts, run_dir, init=ckpt,
                  tags={"transfer": True, "source": source["checkpoint"]}, extra_manifest={"transfer": source})
    return EXIT_OK


# eval

def _eval_run(args, run_dir: Path) -> tuple[EvalReport, np.ndarray, np.ndarray | None, Path]:
    cfg_path = run_dir / "config.json"
    if not cfg_path.exists():
        raise FileNotFoundError(f"{run_dir} is not a run directory (no config.json)")
    cfg = ExperimentConfig.from_dict(json.loads(cfg_path.read_text()))
    manifest = json.loads((run_dir / MANIFEST_FILE).read_text())
    ckpt_path = Path(args.checkpoint) if args.checkpoint else _latest_checkpoint(run_dir)
    ckpt = load_checkpoint(ckpt_path)
    g, _ = ckpt.build()
    tf = AffineTransform.from_dict(manifest["normalization"]) if manifest.get("normalization") else None
    n = args.n if args.n is not None else cfg.eval.n_samples
    seed = args.seed if args.seed is not None else cfg.eval.seed
    samples = snapshot_samples(g, n, seed, tf)
    prov = {"run": str(run_dir), "checkpoint": str(ckpt_path), "step": ckpt.step, "latent_seed": seed,
            "config_hash": cfg.config_hash()}
    data = build_dataset(cfg.dataset)
    if cfg.dataset.is_points:
        report = evaluate_points(samples, data.kind, data.params, data.noise, cfg.eval.radius,
                                 cfg.eval.ring_tol, cfg.eval.m_ref, prov)
        real = data.points
    else:
        report = evaluate_images(samples, dataset_object_count(cfg.dataset.kind), cfg.eval.tau,
                                 cfg.eval.min_area, prov, kind=cfg.dataset.kind)
        real = None
    return report, samples, real, run_dir / "eval"


def _eval_dataset(args, ds_dir: Path):
    if not (ds_dir / SIDECAR_FILE).exists():
        raise FileNotFoundError(f"no dataset at {ds_dir}")
    meta = json.loads((ds_dir / SIDECAR_FILE).read_text())
    prov = {"dataset": str(ds_dir), "generator": "identity"}
    if meta["type"] == "points":
        ds, _ = load_points(ds_dir)
        n = min(args.n or ds.n, ds.n)
        samples = ds.points[:n]
        report = evaluate_points(samples, ds.kind, ds.params, ds.noise, provenance=prov)
        return report, samples, ds.points, ds_dir / "eval"
    ds = load_images(ds_dir)
    n = min(args.n or ds.n, ds.n)
    samples = ds.images[:n]
    report = evaluate_images(samples, dataset_object_count(ds.name), provenance=prov, kind=ds.name)
    return report, samples, None, ds_dir / "eval"


def cmd_eval(args) -> int:
    from . import plots

    if bool(args.run) == bool(args.dataset):
        raise ConfigError("give exactly one of --run or --dataset")
    if args.run:
        report, samples, real, out = _eval_run(args, Path(args.run))
    else:
        report, samples, real, out = _eval_dataset(args, Path(args.dataset))
    out = Path(args.out) if args.out else out
    out.mkdir(parents=True, exist_ok=True)
    if report.counts is not None and report.kind in REFERENCE_COUNT_RANGE:
        report.provenance["reference_count_range"] = REFERENCE_COUNT_RANGE[report.kind]
    report.save(out / "report.json")
    if samples.ndim == 4:
        plots.sample_grid(samples, out / "grid.png", report.kind)
        plots.count_bar(report.counts.histogram, out / "counts.png", f"{report.kind}: detected objects")
    else:
        plots.scatter(real if real is not None else samples, samples, out / "scatter.png", report.kind)
    print(json.dumps(report.to_dict(), indent=2, sort_keys=True, default=str))
    print(f"wrote {out / 'report.json'}")
    return EXIT_OK


# report

def _read_report(run: Path) -> dict:
    for candidate in (run / "eval" / "report.json", run / "report.json"):
        if candidate.exists():
            return json.loads(candidate.read_text())
    raise FileNotFoundError(f"no eval report under {run}; run `ganbench eval --run {run}` first")


def _hist_str(h: dict) -> str:
    return " ".join(f"{k}:{v}" for k, v in sorted(h.items(), key=lambda kv: int(kv[0])))


def cmd_report(args) -> int:
    lines = ["# ganbench report", ""]
    for run_str in args.runs:
        run = Path(run_str)
        rep = _read_report(run)
        lines.append(f"## {run.name} ({rep['kind']}, n={rep['n_samples']})")
        if "counts" in rep:
            c = rep["counts"]
            lines.append(f"- count histogram: {_hist_str(c['histogram'])}")
            lines.append(f"- exact-count rate (target {c['target_count']}): {c['exact_count_rate']}")
            lines.append(f"- axis-aligned rate: {c['axis_aligned_rate']}; labels: {c['label_tally']}")
            lines.append(f"- mean component area: {c['mean_component_area']}; mean bbox edge: {c['mean_bbox_edge']}")
            ref = rep.get("provenance", {}).get("reference_count_range")
            if ref:
                lines.append(f"- reference (visual inspection): {ref[0]}-{ref[1]} objects per image")
        if "coverage" in rep:
            cov = rep["coverage"]
            lines.append(f"- modes covered: {cov['n_covered']}/{len(cov['covered'])}; spurious: {cov['spurious']:.4f}")
        if "rings" in rep:
            r = rep["rings"]
            lines.append(f"- rings: inner {r['inner']:.3f} outer {r['outer']:.3f} neither {r['neither']:.3f} "
                         f"between {r['between_rings']:.3f}")
        if "manifold" in rep:
            m = rep["manifold"]
            lines.append(f"- manifold distance: mean {m['mean']:.4f} p95 {m['p95']:.4f} "
                         f"(reference spacing {m['discretization']:.4f})")
        manifest_path = run / MANIFEST_FILE
        if manifest_path.exists():
            manifest = json.loads(manifest_path.read_text())
            source = manifest.get("transfer", {}).get("run")
            if source:
                try:
                    src = _read_report(Path(source))
                except FileNotFoundError:
                    src = None
                if src and "counts" in src and "counts" in rep:
                    lines.append(f"- transfer source {Path(source).name}: "
                                 f"{_hist_str(src['counts']['histogram'])} -> {_hist_str(rep['counts']['histogram'])}")
        lines.append("")
    text = "\n".join(lines)
    if args.out:
        Path(args.out).write_text(text)
        print(f"wrote {args.out}")
    else:
        print(text)
    return EXIT_OK


def _add_config_args(p):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--config", help="experiment config JSON file")
    g.add_argument("--preset", help=f"bundled preset name ({len(list_presets())} available)")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="dotted config override, repeatable")
    p.add_argument("--out", help="output directory")
    p.add_argument("--root", help=f"output root (default ${OUT_ENV} or ./runs)")
    p.add_argument("--force", action="store_true", help="overwrite an existing output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ganbench", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate a dataset with sidecar and manifest")
    _add_config_args(p)
    p.add_argument("--png", type=int, default=0, help="export the first N images as PNG")
    p.set_defaults(func=cmd_gen_data)

    for name, func, hlp in (("train", cmd_train, "train a model"),
                            ("transfer", cmd_transfer, "fine-tune a trained model on a new dataset")):
        p = sub.add_parser(name, help=hlp)
        _add_config_args(p)
        p.add_argument("--steps", type=int, help="generator-update budget (train.max_steps)")
        p.add_argument("--seed", type=int, help="training seed")
        p.add_argument("--deterministic", action="store_true", help="force deterministic torch kernels")
        if name == "train":
            p.add_argument("--resume", help="checkpoint file or run directory to resume from")
        else:
            p.add_argument("--source", required=True, help="source run directory or checkpoint file")
        p.set_defaults(func=func)

    p = sub.add_parser("eval", help="evaluate a run or a dataset")
    p.add_argument("--run", help="run directory")
    p.add_argument("--dataset", help="dataset directory (identity generator)")
    p.add_argument("--checkpoint", help="checkpoint inside the run (default: latest)")
    p.add_argument("--n", type=int, help="number of samples")
    p.add_argument("--seed", type=int, help="latent seed")
    p.add_argument("--out", help="output directory (default: <run>/eval)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("report", help="summarize eval reports of one or more runs")
    p.add_argument("runs", nargs="+")
    p.add_argument("--out", help="write markdown here instead of stdout")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except InfeasibleSceneError as exc:
        print(f"error: infeasible scene: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except NumericalError as exc:
        print(f"error: numeric failure: {exc} (last checkpoint: {exc.last_checkpoint})", file=sys.stderr)
        return EXIT_NUMERIC
    except IncompatibleCheckpointError as exc:
        print(f"error: incompatible checkpoint: {exc}", file=sys.stderr)
        return EXIT_INCOMPATIBLE
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except (ConfigError, InvalidSpecError, InvalidArgumentError) as exc:
        print(f"error: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
