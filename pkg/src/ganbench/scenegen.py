"""Annotated polygon-scene images: Squares 1-4, Squares 3-4, Squares 1-16 and CT2.

Coordinates are integer pixels with ``x`` the column and ``y`` the row.  A
square anchored at ``(x, y)`` with edge ``e`` covers columns ``x..x+e-1`` and
rows ``y..y+e-1``.  Circles and triangles are rasterized by testing pixel
centres, which sit at integer coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InfeasibleSceneError, InvalidAnnotationError, InvalidArgumentError
from .rng import make_rng

IMAGE_DIM = (28, 28)
MAX_ATTEMPTS = 1_000_000

# name -> (object count, square edge); ct2 handled separately
SQUARE_DATASETS = {
    "squares_1_4": (1, 4),
    "squares_3_4": (3, 4),
    "squares_1_16": (1, 16),
}
IMAGE_DATASETS = (*SQUARE_DATASETS, "ct2")

CT2_PALETTE = (
    (1.0, 0.0, 0.0),
    (0.0, 1.0, 0.0),
    (0.0, 0.0, 1.0),
    (1.0, 1.0, 0.0),
    (1.0, 0.0, 1.0),
    (0.0, 1.0, 1.0),
)
CT2_CIRCLE_RADIUS = 4
CT2_TRIANGLE_RADIUS = 5
WHITE = (1.0, 1.0, 1.0)


@dataclass(frozen=True)
class ShapeInstance:
    kind: str  # square | circle | triangle
    anchor: tuple[int, int]
    size: int
    color: tuple[float, float, float] = WHITE

    def to_dict(self) -> dict:
        return {"kind": self.kind, "anchor": list(self.anchor), "size": self.size, "color": list(self.color)}

    @classmethod
    def from_dict(cls, d: dict) -> "ShapeInstance":
        return cls(d["kind"], tuple(int(v) for v in d["anchor"]), int(d["size"]), tuple(float(c) for c in d["color"]))


@dataclass
class SceneAnnotation:
    shapes: list[ShapeInstance]
    image_dim: tuple[int, int] = IMAGE_DIM
    channels: int = 1
    rejections: int = 0

    def to_dict(self) -> dict:
        return {"shapes": [s.to_dict() for s in self.shapes], "rejections": self.rejections}


@dataclass
class ImageDataset:
    images: np.ndarray  # N x H x W x C, values in [-1, 1]
    annotations: list[SceneAnnotation]
    name: str
    seed: int = 0
    params: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.images.shape[0]

    def rejection_stats(self) -> dict:
        r = np.array([a.rejections for a in self.annotations], dtype=np.int64)
        if r.size == 0:
            return {"total": 0, "mean": 0.0, "max": 0}
        return {"total": int(r.sum()), "mean": float(r.mean()), "max": int(r.max())}


def rects_overlap(a, b) -> bool:
    """True iff two squares ``(x, y, edge)`` share at least one pixel."""
    ax, ay, ae = a
    bx, by, be = b
    return ax <= bx + be - 1 and bx <= ax + ae - 1 and ay <= by + be - 1 and by <= ay + ae - 1


def rects_too_close(a, b, gap: int = 1) -> bool:
    """True iff the squares overlap or come within ``gap`` pixels (diagonals included)."""
    ax, ay, ae = a
    return rects_overlap((ax - gap, ay - gap, ae + 2 * gap), b)


def _draw_anchor_coords(rng, count, hi, anchor_mode, sigma):
    """``count`` integer coords in [0, hi] for one axis."""
    if anchor_mode == "uniform":
        return rng.integers(0, hi + 1, size=count)
    if anchor_mode == "gaussian":
        out = np.empty(count, dtype=np.int64)
        for i in range(count):
            while True:
                v = int(np.rint(rng.normal(hi / 2.0, sigma)))
                if 0 <= v <= hi:
                    out[i] = v
                    break
        return out
    raise InvalidArgumentError(f"unknown anchor mode {anchor_mode!r}")


def sample_square_scene(
    count: int,
    edge: int,
    dim: tuple[int, int] = IMAGE_DIM,
    rng: np.random.Generator | None = None,
    anchor_mode: str = "uniform",
    sigma: float = 6.0,
    max_attempts: int = MAX_ATTEMPTS,
    min_gap: int = 1,
) -> SceneAnnotation:
    """Rejection-sample ``count`` non-overlapping squares.

    Each attempt draws all ``count`` anchors; any pairwise collision discards
    the whole configuration.  With ``min_gap=1`` squares may not touch either,
    not even at a corner, so every square stays its own 8-connected component.
    ``anchor_mode='gaussian'`` draws anchors from a rounded Gaussian around the
    middle of the anchor range, truncated to it.
    """
    h, w = dim
    if count < 1 or edge < 1:
        raise InvalidArgumentError("count and edge must be >= 1")
    if min_gap < 0:
        raise InvalidArgumentError("min_gap must be >= 0")
    if edge > h or edge > w or count * edge * edge >= h * w:
        raise InfeasibleSceneError(
            f"cannot fit {count} squares of edge {edge} in a {h}x{w} image"
        )
    rng = rng if rng is not None else make_rng(0)
    for attempt in range(max_attempts):
        xs = _draw_anchor_coords(rng, count, w - edge, anchor_mode, sigma)
        ys = _draw_anchor_coords(rng, count, h - edge, anchor_mode, sigma)
        rects = [(int(x), int(y), edge) for x, y in zip(xs, ys)]
        ok = all(
            not rects_too_close(rects[i], rects[j], min_gap)
            for i in range(count)
            for j in range(i + 1, count)
        )
        if ok:
            shapes = [ShapeInstance("square", (x, y), edge) for x, y, _ in rects]
            return SceneAnnotation(shapes, (h, w), 1, rejections=attempt)
    raise InfeasibleSceneError(f"no non-overlapping configuration after {max_attempts} attempts")


def triangle_vertices(anchor, size) -> np.ndarray:
    """Upright equilateral triangle with centroid ``anchor`` and circumradius ``size``."""
    cx, cy = anchor
    angles = np.deg2rad([-90.0, 30.0, 150.0])
    return np.stack([cx + size * np.cos(angles), cy + size * np.sin(angles)], axis=1)


def shape_mask(shape: ShapeInstance, dim: tuple[int, int]) -> np.ndarray:
    h, w = dim
    yy, xx = np.mgrid[0:h, 0:w]
    x, y = shape.anchor
    s = shape.size
    if shape.kind == "square":
        return (xx >= x) & (xx <= x + s - 1) & (yy >= y) & (yy <= y + s - 1)
    if shape.kind == "circle":
        return (xx - x) ** 2 + (yy - y) ** 2 <= s * s
    if shape.kind == "triangle":
        v = triangle_vertices(shape.anchor, s)
        inside = np.ones((h, w), dtype=bool)
        # vertices run clockwise on screen (y down); keep the interior side of each edge
        for i in range(3):
            (x0, y0), (x1, y1) = v[i], v[(i + 1) % 3]
            cross = (x1 - x0) * (yy - y0) - (y1 - y0) * (xx - x0)
            inside &= cross >= -1e-9
        return inside
    raise InvalidAnnotationError(f"unknown shape kind {shape.kind!r}")


def _check_bounds(shape: ShapeInstance, dim: tuple[int, int]) -> None:
    h, w = dim
    x, y = shape.anchor
    s = shape.size
    if s < 1:
        raise InvalidAnnotationError(f"shape size must be positive: {shape}")
    if shape.kind == "square":
        lo = (x, y)
        hi = (x + s - 1, y + s - 1)
    elif shape.kind == "circle":
        lo = (x - s, y - s)
        hi = (x + s, y + s)
    elif shape.kind == "triangle":
        v = triangle_vertices(shape.anchor, s)
        lo = tuple(v.min(axis=0))
        hi = tuple(v.max(axis=0))
    else:
        raise InvalidAnnotationError(f"unknown shape kind {shape.kind!r}")
    if lo[0] < 0 or lo[1] < 0 or hi[0] > w - 1 or hi[1] > h - 1:
        raise InvalidAnnotationError(f"shape out of bounds: {shape}")


def render_scene(ann: SceneAnnotation) -> np.ndarray:
    """Render to an H x W x C float32 image: background -1, shapes painted in order."""
    h, w = ann.image_dim
    img = np.full((h, w, ann.channels), -1.0, dtype=np.float32)
    for shape in ann.shapes:
        _check_bounds(shape, ann.image_dim)
        mask = shape_mask(shape, ann.image_dim)
        color = 2.0 * np.asarray(shape.color, dtype=np.float32) - 1.0
        if ann.channels == 1:
            color = color[:1]
        img[mask] = color
    return img


def sample_ct2_scene(
    rng: np.random.Generator,
    dim: tuple[int, int] = IMAGE_DIM,
    circle_radius: int = CT2_CIRCLE_RADIUS,
    triangle_radius: int = CT2_TRIANGLE_RADIUS,
    palette=CT2_PALETTE,
) -> SceneAnnotation:
    """Two circles and two triangles, uniformly placed; overlaps are allowed."""
    h, w = dim
    shapes = []
    for kind, r in (("circle", circle_radius), ("circle", circle_radius),
                    ("triangle", triangle_radius), ("triangle", triangle_radius)):
        x = int(rng.integers(r, w - r))
        y = int(rng.integers(r, h - r))
        color = tuple(palette[int(rng.integers(0, len(palette)))])
        shapes.append(ShapeInstance(kind, (x, y), r, color))
    order = rng.permutation(len(shapes))
    return SceneAnnotation([shapes[i] for i in order], dim, 3, 0)


def dataset_object_count(name: str) -> int:
    if name in SQUARE_DATASETS:
        return SQUARE_DATASETS[name][0]
    if name == "ct2":
        return 4
    raise InvalidArgumentError(f"unknown image dataset {name!r}; expected one of {IMAGE_DATASETS}")


def gen_image_dataset(
    name: str,
    n: int = 5000,
    seed: int = 0,
    anchor_mode: str = "uniform",
    sigma: float = 6.0,
    count: int | None = None,
    edge: int | None = None,
    dim: tuple[int, int] = IMAGE_DIM,
    min_gap: int = 1,
) -> ImageDataset:
    """Sample and render ``n`` scenes; image ``i`` uses its own derived stream.

    ``count``/``edge`` override the named square dataset's defaults.
    """
    if name not in IMAGE_DATASETS:
        raise InvalidArgumentError(f"unknown image dataset {name!r}; expected one of {IMAGE_DATASETS}")
    if n < 0:
        raise InvalidArgumentError("n must be >= 0")
    params: dict = {"dim": list(dim)}
    if name == "ct2":
        def sample(rng):
            return sample_ct2_scene(rng, dim)
        channels = 3
    else:
        dc, de = SQUARE_DATASETS[name]
        count = dc if count is None else count
        edge = de if edge is None else edge
        params.update(count=count, edge=edge, anchor_mode=anchor_mode, sigma=sigma, min_gap=min_gap)

        def sample(rng):
            return sample_square_scene(count, edge, dim, rng, anchor_mode, sigma, min_gap=min_gap)
        channels = 1

    images = np.empty((n, dim[0], dim[1], channels), dtype=np.float32)
    annotations = []
    for i in range(n):
        ann = sample(make_rng(seed, name, i))
        images[i] = render_scene(ann)
        annotations.append(ann)
    return ImageDataset(images, annotations, name, seed, params)
