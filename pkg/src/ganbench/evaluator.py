"""Geometric capability metrics: object counting on images, coverage and manifold fidelity on points.

The image detector is a fixed pipeline (threshold -> connected components ->
area filter -> shape heuristics).  Its thresholds are calibrated on clean
renders and then frozen, so every model is measured by the same detector.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from .errors import InvalidArgumentError
from .pointgen import (
    S_CURVE_T_RANGE,
    S_CURVE_U_RANGE,
    SWISS_ROLL_H_RANGE,
    SWISS_ROLL_T_RANGE,
    circle_point,
    s_curve_point,
    swiss_roll_point,
)

SHAPE_LABELS = ("square", "circle", "triangle", "blob_other")
COUNT_METRIC_NOTE = (
    "exact-count rate and count histogram are this harness's own operationalization of counting, "
    "not an established metric"
)


@dataclass
class ShapeThresholds:
    aspect_tol: float = 0.1
    square_fill: float = 0.95
    circle_fill: tuple[float, float] = (0.55, 0.85)
    triangle_fill: tuple[float, float] = (0.40, 0.65)
    symmetry_iou: float = 0.9


DEFAULT_THRESHOLDS = ShapeThresholds()


@dataclass
class Component:
    area: int
    bbox: tuple[int, int, int, int]  # row0, col0, row1, col1 (inclusive)
    pixels: np.ndarray  # K x 2 (row, col)

    @property
    def height(self) -> int:
        return self.bbox[2] - self.bbox[0] + 1

    @property
    def width(self) -> int:
        return self.bbox[3] - self.bbox[1] + 1

    def local_mask(self) -> np.ndarray:
        m = np.zeros((self.height, self.width), dtype=bool)
        m[self.pixels[:, 0] - self.bbox[0], self.pixels[:, 1] - self.bbox[1]] = True
        return m


@dataclass
class ComponentInfo:
    area: int
    bbox: tuple[int, int, int, int]
    fill_ratio: float
    aspect_ratio: float
    label: str
    axis_aligned: bool


@dataclass
class CountResult:
    count: int
    components: list[ComponentInfo] = field(default_factory=list)

    @property
    def labels(self) -> list[str]:
        return [c.label for c in self.components]


def binarize(image: np.ndarray, tau: float = 0.0) -> np.ndarray:
    """Foreground where any channel is >= ``tau``."""
    a = np.asarray(image)
    if a.ndim == 3:
        a = a.max(axis=-1)
    return a >= tau


def _structure(connectivity: int) -> np.ndarray:
    if connectivity == 8:
        return np.ones((3, 3), dtype=bool)
    if connectivity == 4:
        return ndimage.generate_binary_structure(2, 1)
    raise InvalidArgumentError("connectivity must be 4 or 8")


def connected_components(mask: np.ndarray, connectivity: int = 8) -> list[Component]:
    """Label ``mask``; components come out in raster order of their first pixel."""
    labels, n = ndimage.label(np.asarray(mask, dtype=bool), structure=_structure(connectivity))
    if n == 0:
        return []
    comps = []
    for idx, sl in enumerate(ndimage.find_objects(labels), start=1):
        rows, cols = np.nonzero(labels[sl] == idx)
        pixels = np.stack([rows + sl[0].start, cols + sl[1].start], axis=1)
        bbox = (sl[0].start, sl[1].start, sl[0].stop - 1, sl[1].stop - 1)
        comps.append(Component(len(pixels), bbox, pixels))
    return comps


def _iou(a: np.ndarray, b: np.ndarray) -> float:
    if a.shape != b.shape:
        return 0.0
    union = np.logical_or(a, b).sum()
    return float(np.logical_and(a, b).sum() / union) if union else 0.0


def classify_component(comp: Component, th: ShapeThresholds = DEFAULT_THRESHOLDS) -> ComponentInfo:
    h, w = comp.height, comp.width
    fill = comp.area / float(h * w)
    aspect = w / float(h)
    square_box = abs(aspect - 1.0) <= th.aspect_tol
    mask = comp.local_mask()
    rot90_sym = square_box and _iou(mask, np.rot90(mask)) >= th.symmetry_iou
    rot180_sym = _iou(mask, np.rot90(mask, 2)) >= th.symmetry_iou

    if square_box and fill >= th.square_fill:
        label = "square"
    elif rot90_sym and th.circle_fill[0] <= fill <= th.circle_fill[1]:
        label = "circle"
    elif not rot180_sym and th.triangle_fill[0] <= fill <= th.triangle_fill[1]:
        label = "triangle"
    else:
        label = "blob_other"
    return ComponentInfo(
        area=comp.area,
        bbox=tuple(int(v) for v in comp.bbox),
        fill_ratio=fill,
        aspect_ratio=aspect,
        label=label,
        axis_aligned=bool(square_box and fill >= th.square_fill),
    )


def count_objects(image: np.ndarray, tau: float = 0.0, min_area: int = 4, connectivity: int = 8,
                  thresholds: ShapeThresholds = DEFAULT_THRESHOLDS) -> CountResult:
    comps = [c for c in connected_components(binarize(image, tau), connectivity) if c.area >= min_area]
    infos = [classify_component(c, thresholds) for c in comps]
    return CountResult(len(infos), infos)


@dataclass
class CountHistogram:
    n: int
    histogram: dict[int, int]
    target_count: int | None
    exact_count_rate: float | None
    label_tally: dict[str, int]
    axis_aligned_rate: float | None
    mean_component_area: float | None
    mean_bbox_edge: float | None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["histogram"] = {str(k): v for k, v in sorted(self.histogram.items())}
        return d


def summarize_counts(results: list[CountResult], target_count: int | None = None) -> CountHistogram:
    hist = Counter(r.count for r in results)
    comps = [c for r in results for c in r.components]
    tally = Counter(c.label for c in comps)
    n = len(results)
    return CountHistogram(
        n=n,
        histogram=dict(sorted(hist.items())),
        target_count=target_count,
        exact_count_rate=(hist.get(target_count, 0) / n) if (n and target_count is not None) else None,
        label_tally={k: tally.get(k, 0) for k in SHAPE_LABELS},
        axis_aligned_rate=(sum(c.axis_aligned for c in comps) / len(comps)) if comps else None,
        mean_component_area=float(np.mean([c.area for c in comps])) if comps else None,
        mean_bbox_edge=float(np.mean([(c.bbox[2] - c.bbox[0] + c.bbox[3] - c.bbox[1] + 2) / 2 for c in comps]))
        if comps else None,
    )


def count_histogram(sampler: Callable[[int, int], np.ndarray], n: int, seed: int = 0, tau: float = 0.0,
                    min_area: int = 4, target_count: int | None = None, connectivity: int = 8) -> CountHistogram:
    """Count objects over ``n`` images drawn as ``sampler(n, seed)`` (NHWC, [-1, 1])."""
    if n == 0:
        return summarize_counts([], target_count)
    images = np.asarray(sampler(n, seed))
    results = [count_objects(img, tau, min_area, connectivity) for img in images]
    return summarize_counts(results, target_count)


@dataclass
class ModeCoverage:
    covered: np.ndarray  # bool per mode
    mass: np.ndarray  # fraction of samples within radius of each mode
    spurious: float

    @property
    def n_covered(self) -> int:
        return int(self.covered.sum())

    def to_dict(self) -> dict:
        return {"covered": self.covered.astype(int).tolist(), "mass": self.mass.tolist(),
                "spurious": self.spurious, "n_covered": self.n_covered}


def mode_coverage(samples: np.ndarray, centers: np.ndarray, radius: float, coverage_min: float = 0.01) -> ModeCoverage:
    samples = np.asarray(samples, dtype=np.float64)
    centers = np.asarray(centers, dtype=np.float64)
    if samples.shape[0] == 0:
        raise InvalidArgumentError("mode_coverage needs at least one sample")
    dist = np.linalg.norm(samples[:, None, :] - centers[None, :, :], axis=-1)
    near = dist <= radius
    mass = near.mean(axis=0)
    spurious = float((~near.any(axis=1)).mean())
    return ModeCoverage(mass >= coverage_min, mass, spurious)


def ring_membership(samples: np.ndarray, radii: tuple[float, float], tol: float) -> tuple[float, float, float]:
    """Fractions of samples within ``tol`` of the inner ring, the outer ring, or neither."""
    samples = np.asarray(samples, dtype=np.float64)
    if samples.shape[0] == 0:
        raise InvalidArgumentError("ring_membership needs at least one sample")
    r_in, r_out = radii
    r = np.linalg.norm(samples, axis=1)
    d_in = np.abs(r - r_in)
    d_out = np.abs(r - r_out)
    inner = (d_in <= tol) & (d_in <= d_out)
    outer = (d_out <= tol) & ~inner
    n = len(r)
    fi, fo = inner.sum() / n, outer.sum() / n
    return float(fi), float(fo), float(1.0 - fi - fo)


def _arc_length_grid(speed, lo, hi, m, fine=200_000):
    """``m`` parameter values spaced evenly in arc length over [lo, hi]."""
    t = np.linspace(lo, hi, fine)
    s = np.concatenate([[0.0], np.cumsum(0.5 * (speed(t[1:]) + speed(t[:-1])) * np.diff(t))])
    return np.interp(np.linspace(0.0, s[-1], m), s, t), s[-1]


def manifold_reference(kind: str, params: dict | None = None, m_ref: int = 100_000) -> np.ndarray:
    """Dense noiseless points on the manifold of ``kind``, spaced near-uniformly."""
    params = params or {}
    if kind == "circles":
        factor = params.get("factor", 0.5)
        n_out = int(round(m_ref / (1 + factor)))
        a_out = np.linspace(0, 2 * np.pi, n_out, endpoint=False)
        a_in = np.linspace(0, 2 * np.pi, m_ref - n_out, endpoint=False)
        return np.concatenate([circle_point(a_out, 1.0), circle_point(a_in, factor)])
    if kind == "blobs":
        return np.asarray(params["centers"], dtype=np.float64)
    if kind == "s_curve":
        length_t = S_CURVE_T_RANGE[1] - S_CURVE_T_RANGE[0]  # unit speed in t
        length_u = S_CURVE_U_RANGE[1] - S_CURVE_U_RANGE[0]
        nt = max(2, int(round(np.sqrt(m_ref * length_t / length_u))))
        nu = max(2, m_ref // nt)
        t = np.linspace(*S_CURVE_T_RANGE, nt)
        u = np.linspace(*S_CURVE_U_RANGE, nu)
        tt, uu = np.meshgrid(t, u, indexing="ij")
        return s_curve_point(tt.ravel(), uu.ravel())
    if kind == "swiss_roll":
        length_h = SWISS_ROLL_H_RANGE[1] - SWISS_ROLL_H_RANGE[0]
        _, length_t = _arc_length_grid(lambda t: np.sqrt(1 + t * t), *SWISS_ROLL_T_RANGE, 2)
        nt = max(2, int(round(np.sqrt(m_ref * length_t / length_h))))
        nh = max(2, m_ref // nt)
        t, _ = _arc_length_grid(lambda t: np.sqrt(1 + t * t), *SWISS_ROLL_T_RANGE, nt)
        h = np.linspace(*SWISS_ROLL_H_RANGE, nh)
        tt, hh = np.meshgrid(t, h, indexing="ij")
        return swiss_roll_point(tt.ravel(), hh.ravel())
    raise InvalidArgumentError(f"no manifold reference for kind {kind!r}")


def reference_spacing(ref: np.ndarray) -> float:
    """Largest nearest-neighbour distance inside the reference set."""
    d, _ = cKDTree(ref).query(ref, k=2)
    return float(d[:, 1].max())


@dataclass
class ManifoldStats:
    mean: float
    p95: float
    max: float
    discretization: float
    m_ref: int

    def to_dict(self) -> dict:
        return asdict(self)


def manifold_distance(samples: np.ndarray, kind: str, params: dict | None = None,
                      m_ref: int = 100_000) -> ManifoldStats:
    """Nearest-reference distance of each sample to the noiseless manifold."""
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim != 2 or samples.shape[0] == 0:
        raise InvalidArgumentError("manifold_distance needs a non-empty N x d sample matrix")
    ref = manifold_reference(kind, params, m_ref)
    d, _ = cKDTree(ref).query(samples, k=1)
    return ManifoldStats(float(d.mean()), float(np.percentile(d, 95)), float(d.max()),
                         reference_spacing(ref), len(ref))


@dataclass
class EvalReport:
    kind: str
    n_samples: int
    provenance: dict = field(default_factory=dict)
    counts: CountHistogram | None = None
    coverage: ModeCoverage | None = None
    rings: dict | None = None
    manifold: ManifoldStats | None = None
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "n_samples": self.n_samples, "provenance": self.provenance, "notes": self.notes}
        if self.counts is not None:
            d["counts"] = self.counts.to_dict()
        if self.coverage is not None:
            d["coverage"] = self.coverage.to_dict()
        if self.rings is not None:
            d["rings"] = self.rings
        if self.manifold is not None:
            d["manifold"] = self.manifold.to_dict()
        return d

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")


def evaluate_points(samples: np.ndarray, kind: str, params: dict, noise: float = 0.0,
                    radius: float | None = None, ring_tol: float | None = None,
                    m_ref: int = 100_000, provenance: dict | None = None) -> EvalReport:
    """All point metrics that apply to ``kind``, in original coordinates."""
    report = EvalReport(kind, int(len(samples)), dict(provenance or {}))
    if kind == "blobs":
        std = float(np.max(params.get("std", [1.0])))
        r = radius if radius is not None else 3.0 * float(np.hypot(std, noise))
        report.coverage = mode_coverage(samples, np.asarray(params["centers"]), r)
        report.provenance["coverage_radius"] = r
    elif kind == "circles":
        factor = params.get("factor", 0.5)
        tol = ring_tol if ring_tol is not None else max(3.0 * noise, 0.05)
        inner, outer, neither = ring_membership(samples, (factor, 1.0), tol)
        r = np.linalg.norm(np.asarray(samples, dtype=np.float64), axis=1)
        between = float(np.mean((r > factor + tol) & (r < 1.0 - tol)))
        report.rings = {"inner": inner, "outer": outer, "neither": neither, "between_rings": between, "tol": tol}
    if kind in ("circles", "s_curve", "swiss_roll"):
        report.manifold = manifold_distance(samples, kind, params, m_ref)
    return report


def evaluate_images(images: np.ndarray, target_count: int | None, tau: float = 0.0, min_area: int = 4,
                    provenance: dict | None = None, kind: str = "images") -> EvalReport:
    results = [count_objects(img, tau, min_area) for img in images]
    report = EvalReport(kind, len(results), dict(provenance or {}))
    report.counts = summarize_counts(results, target_count)
    report.notes.append(COUNT_METRIC_NOTE)
    return report
