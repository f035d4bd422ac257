"""Low-dimensional point distributions: blobs, circles, S-curve, Swiss roll.

The closed forms below are the normative definitions of each distribution;
they follow the usual scikit-learn parameterizations but are written out so
the draws are fixed by (kind, params, seed) alone.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import InvalidArgumentError
from .rng import make_rng

POINT_KINDS = ("blobs", "circles", "s_curve", "swiss_roll")
KIND_DIM = {"blobs": 2, "circles": 2, "s_curve": 3, "swiss_roll": 3}

# minimal / moderate / extra
NOISE_LEVELS = {"minimal": 0.0, "moderate": 0.05, "extra": 0.15}

DEFAULT_BLOB_CENTERS = ((-6.0, 0.0), (6.0, 0.0), (0.0, 8.0))
DEFAULT_CIRCLES_FACTOR = 0.5

S_CURVE_T_RANGE = (-1.5 * np.pi, 1.5 * np.pi)
S_CURVE_U_RANGE = (0.0, 2.0)
SWISS_ROLL_T_RANGE = (1.5 * np.pi, 4.5 * np.pi)
SWISS_ROLL_H_RANGE = (0.0, 21.0)


@dataclass
class BlobSpec:
    centers: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        self.centers = np.atleast_2d(np.asarray(self.centers, dtype=np.float64))
        k = self.centers.shape[0]
        self.std = np.broadcast_to(np.asarray(self.std, dtype=np.float64), (k,)).copy()
        if k < 1 or self.centers.shape[1] != 2:
            raise InvalidArgumentError("blob centers must be a K x 2 matrix with K >= 1")
        if np.any(self.std < 0) or not np.all(np.isfinite(self.std)):
            raise InvalidArgumentError("blob std must be finite and non-negative")
        diffs = self.centers[:, None, :] - self.centers[None, :, :]
        same = np.all(diffs == 0, axis=-1)
        if np.any(same[~np.eye(k, dtype=bool)]):
            raise InvalidArgumentError("blob centers must be pairwise distinct")

    @classmethod
    def default(cls, std: float = 1.0) -> "BlobSpec":
        return cls(np.array(DEFAULT_BLOB_CENTERS), std)

    @property
    def k(self) -> int:
        return self.centers.shape[0]


@dataclass
class PointDataset:
    points: np.ndarray
    kind: str
    noise: float
    seed: int
    params: dict[str, Any] = field(default_factory=dict)
    metadata: dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]


@dataclass
class AffineTransform:
    """Per-axis map ``y = (x - center) * scale``; degenerate axes map to 0."""

    center: np.ndarray
    scale: np.ndarray
    degenerate: np.ndarray

    def forward(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x, dtype=np.float64) - self.center) * self.scale

    def inverse(self, y: np.ndarray) -> np.ndarray:
        y = np.asarray(y, dtype=np.float64)
        safe = np.where(self.degenerate, 1.0, self.scale)
        x = y / safe + self.center
        return np.where(self.degenerate, self.center, x)

    def to_dict(self) -> dict:
        return {
            "center": self.center.tolist(),
            "scale": self.scale.tolist(),
            "degenerate": self.degenerate.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AffineTransform":
        return cls(
            np.asarray(d["center"], dtype=np.float64),
            np.asarray(d["scale"], dtype=np.float64),
            np.asarray(d["degenerate"], dtype=bool),
        )


def _check_n(n: int) -> None:
    if int(n) != n or n < 1:
        raise InvalidArgumentError(f"n must be a positive integer, got {n}")


def _check_noise(noise: float) -> None:
    if not np.isfinite(noise) or noise < 0:
        raise InvalidArgumentError(f"noise must be finite and >= 0, got {noise}")


# closed forms, shared by the generators and the evaluator

def circle_point(angle, radius) -> np.ndarray:
    angle = np.asarray(angle, dtype=np.float64)
    radius = np.asarray(radius, dtype=np.float64)
    return np.stack([radius * np.cos(angle), radius * np.sin(angle)], axis=-1)


def s_curve_point(t, u) -> np.ndarray:
    t = np.asarray(t, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    return np.stack([np.sin(t), u, np.sign(t) * (np.cos(t) - 1.0)], axis=-1)


def swiss_roll_point(t, h) -> np.ndarray:
    t = np.asarray(t, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)
    return np.stack([t * np.cos(t), h, t * np.sin(t)], axis=-1)


def swiss_roll_t(u) -> np.ndarray:
    return 1.5 * np.pi * (1.0 + 2.0 * np.asarray(u, dtype=np.float64))


def gen_blobs(n: int, spec: BlobSpec | None = None, seed: int = 0, noise: float = 0.0) -> PointDataset:
    """Isotropic Gaussian clusters with uniformly chosen cluster index.

    ``noise`` adds a further isotropic Gaussian on top of the per-cluster std,
    so the blob family carries the same noise knob as the other kinds.
    """
    _check_n(n)
    _check_noise(noise)
    spec = spec or BlobSpec.default()
    rng = make_rng(seed, "blobs")
    labels = rng.integers(0, spec.k, size=n)
    eps = rng.standard_normal((n, 2))
    extra = rng.standard_normal((n, 2))
    points = spec.centers[labels] + spec.std[labels, None] * eps + noise * extra
    return PointDataset(
        points=points,
        kind="blobs",
        noise=float(noise),
        seed=seed,
        params={"centers": spec.centers.tolist(), "std": spec.std.tolist()},
        metadata={"label": labels},
    )


def gen_circles(n: int, factor: float = DEFAULT_CIRCLES_FACTOR, noise: float = 0.0, seed: int = 0) -> PointDataset:
    """Two concentric rings; ``n // 2`` points on the unit ring, the rest on ``factor``."""
    _check_n(n)
    _check_noise(noise)
    if not 0.0 < factor < 1.0:
        raise InvalidArgumentError(f"factor must lie in (0, 1), got {factor}")
    rng = make_rng(seed, "circles")
    n_out = n // 2
    ring = rng.permutation(np.r_[np.zeros(n_out, dtype=np.int64), np.ones(n - n_out, dtype=np.int64)])
    angle = rng.uniform(0.0, 2.0 * np.pi, size=n)
    eps = rng.standard_normal((n, 2))
    radius = np.where(ring == 0, 1.0, factor)
    points = circle_point(angle, radius) + noise * eps
    return PointDataset(
        points=points,
        kind="circles",
        noise=float(noise),
        seed=seed,
        params={"factor": float(factor)},
        metadata={"ring": ring, "angle": angle},
    )


def gen_s_curve(n: int, noise: float = 0.0, seed: int = 0) -> PointDataset:
    _check_n(n)
    _check_noise(noise)
    rng = make_rng(seed, "s_curve")
    t = rng.uniform(*S_CURVE_T_RANGE, size=n)
    u = rng.uniform(*S_CURVE_U_RANGE, size=n)
    eps = rng.standard_normal((n, 3))
    points = s_curve_point(t, u) + noise * eps
    return PointDataset(points, "s_curve", float(noise), seed, {}, {"t": t, "u": u})


def gen_swiss_roll(n: int, noise: float = 0.0, seed: int = 0) -> PointDataset:
    _check_n(n)
    _check_noise(noise)
    rng = make_rng(seed, "swiss_roll")
    t = swiss_roll_t(rng.uniform(0.0, 1.0, size=n))
    h = rng.uniform(*SWISS_ROLL_H_RANGE, size=n)
    eps = rng.standard_normal((n, 3))
    points = swiss_roll_point(t, h) + noise * eps
    return PointDataset(points, "swiss_roll", float(noise), seed, {}, {"t": t, "h": h})


def generate_points(kind: str, n: int = 5000, noise: float = 0.0, seed: int = 0, **params) -> PointDataset:
    """Dispatch on ``kind``; extra keyword params go to the kind's generator."""
    if kind == "blobs":
        spec = None
        if "centers" in params or "std" in params:
            spec = BlobSpec(params.get("centers", DEFAULT_BLOB_CENTERS), params.get("std", 1.0))
        return gen_blobs(n, spec, seed, noise=noise)
    if kind == "circles":
        return gen_circles(n, params.get("factor", DEFAULT_CIRCLES_FACTOR), noise, seed)
    if kind == "s_curve":
        return gen_s_curve(n, noise, seed)
    if kind == "swiss_roll":
        return gen_swiss_roll(n, noise, seed)
    raise InvalidArgumentError(f"unknown point kind {kind!r}; expected one of {POINT_KINDS}")


def noiseless_points(ds: PointDataset) -> np.ndarray:
    """Re-evaluate the retained metadata through the closed form at zero noise."""
    meta = ds.metadata
    if ds.kind == "blobs":
        return np.asarray(ds.params["centers"])[meta["label"]]
    if ds.kind == "circles":
        radius = np.where(meta["ring"] == 0, 1.0, ds.params["factor"])
        return circle_point(meta["angle"], radius)
    if ds.kind == "s_curve":
        return s_curve_point(meta["t"], meta["u"])
    if ds.kind == "swiss_roll":
        return swiss_roll_point(meta["t"], meta["h"])
    raise InvalidArgumentError(f"unknown point kind {ds.kind!r}")


def fit_normalization(points: np.ndarray, half_width: float = 0.95) -> AffineTransform:
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[0] == 0:
        raise InvalidArgumentError("cannot normalize an empty dataset")
    lo, hi = points.min(axis=0), points.max(axis=0)
    span = hi - lo
    degenerate = span <= 0
    scale = np.where(degenerate, 0.0, 2.0 * half_width / np.where(degenerate, 1.0, span))
    return AffineTransform(center=(lo + hi) / 2.0, scale=scale, degenerate=degenerate)


def normalize_points(ds: PointDataset) -> tuple[PointDataset, AffineTransform]:
    """Map each axis affinely onto [-0.95, 0.95] and return the transform."""
    tf = fit_normalization(ds.points)
    out = PointDataset(
        points=tf.forward(ds.points),
        kind=ds.kind,
        noise=ds.noise,
        seed=ds.seed,
        params=dict(ds.params),
        metadata=dict(ds.metadata),
    )
    return out, tf
