"""Experiment configuration: one declarative JSON file per run, with dotted overrides."""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import InvalidSpecError
from .gancore import MLP_FAMILIES, ModelSpec
from .pointgen import KIND_DIM, POINT_KINDS, AffineTransform, PointDataset, generate_points, normalize_points
from .scenegen import IMAGE_DATASETS, ImageDataset, gen_image_dataset
from .trainer import TrainSpec


class ConfigError(InvalidSpecError):
    pass


@dataclass
class DatasetConfig:
    kind: str
    n: int = 5000
    noise: float = 0.0
    seed: int = 0
    params: dict = field(default_factory=dict)

    @property
    def is_points(self) -> bool:
        return self.kind in POINT_KINDS

    @property
    def data_shape(self) -> tuple[int, ...]:
        if self.is_points:
            return (KIND_DIM[self.kind],)
        return (28, 28, 3 if self.kind == "ct2" else 1)


@dataclass
class EvalConfig:
    n_samples: int = 1000
    seed: int = 0
    tau: float = 0.0
    min_area: int = 4
    m_ref: int = 100_000
    radius: float | None = None
    ring_tol: float | None = None


@dataclass
class ExperimentConfig:
    name: str
    dataset: DatasetConfig
    model: dict = field(default_factory=dict)
    train: dict = field(default_factory=dict)
    eval: EvalConfig = field(default_factory=EvalConfig)
    output_dir: str | None = None

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        try:
            cfg = cls(
                name=d.get("name", "experiment"),
                dataset=DatasetConfig(**d["dataset"]),
                model=dict(d.get("model", {})),
                train=dict(d.get("train", {})),
                eval=EvalConfig(**d.get("eval", {})),
                output_dir=d.get("output_dir"),
            )
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"malformed config: {exc}") from exc
        cfg.validate()
        return cfg

    def to_dict(self) -> dict:
        return asdict(self)

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, default=str)
        return hashlib.sha256(blob.encode()).hexdigest()

    def validate(self) -> None:
        ds = self.dataset
        if ds.kind not in POINT_KINDS + IMAGE_DATASETS:
            raise ConfigError(f"unknown dataset kind {ds.kind!r}")
        if ds.n < 1:
            raise ConfigError("dataset.n must be >= 1")
        if self.model:
            family = self.model.get("family")
            if family is None:
                raise ConfigError("model block needs a family")
            if ds.is_points != (family in MLP_FAMILIES):
                raise ConfigError(f"model family {family!r} cannot be trained on dataset kind {ds.kind!r}")
            self.model_spec()
            self.train_spec()

    def model_spec(self) -> ModelSpec:
        try:
            return ModelSpec(data_shape=self.dataset.data_shape, **self.model)
        except TypeError as exc:
            raise ConfigError(f"bad model block: {exc}") from exc

    def train_spec(self) -> TrainSpec:
        try:
            return TrainSpec.for_family(self.model["family"], **self.train)
        except TypeError as exc:
            raise ConfigError(f"bad train block: {exc}") from exc


def _coerce(value: str):
    try:
        return json.loads(value)
    except json.JSONDecodeError:
        return value


def apply_overrides(d: dict, overrides: list[str]) -> dict:
    """Apply ``a.b.c=value`` overrides; values parse as JSON where possible."""
    d = copy.deepcopy(d)
    for item in overrides or []:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, value = item.split("=", 1)
        node = d
        parts = key.split(".")
        for p in parts[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override {key!r} descends into a non-mapping")
        node[parts[-1]] = _coerce(value)
    return d


def list_presets() -> list[str]:
    root = resources.files("ganbench") / "presets"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def load_config_dict(path: str | None = None, preset: str | None = None) -> dict:
    if (path is None) == (preset is None):
        raise ConfigError("give exactly one of --config or --preset")
    if preset is not None:
        res = resources.files("ganbench") / "presets" / f"{preset}.json"
        if not res.is_file():
            raise ConfigError(f"unknown preset {preset!r}; available: {', '.join(list_presets())}")
        return json.loads(res.read_text())
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"config file not found: {p}")
    try:
        return json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{p}: invalid JSON: {exc}") from exc


def build_dataset(ds: DatasetConfig) -> PointDataset | ImageDataset:
    if ds.is_points:
        return generate_points(ds.kind, ds.n, ds.noise, ds.seed, **ds.params)
    return gen_image_dataset(ds.kind, ds.n, ds.seed, **ds.params)


def training_array(data: PointDataset | ImageDataset) -> tuple[np.ndarray, AffineTransform | None]:
    """Data in generator range, plus the transform back to original coordinates."""
    if isinstance(data, PointDataset):
        norm, tf = normalize_points(data)
        return norm.points.astype(np.float32), tf
    return data.images, None
