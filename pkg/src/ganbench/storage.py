"""On-disk dataset formats.

A dataset is a raw little-endian float32 row-major blob (``data.bin``) next
to a JSON sidecar (``data.json``) describing its shape and provenance.  Image
datasets also get a ``manifest.json`` with rejection statistics.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from . import __version__
from .pointgen import AffineTransform, PointDataset
from .scenegen import ImageDataset, SceneAnnotation, ShapeInstance

DATA_FILE = "data.bin"
SIDECAR_FILE = "data.json"
MANIFEST_FILE = "manifest.json"


def array_hash(a: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(a, dtype="<f4").tobytes()).hexdigest()


def file_hash(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _write_blob(path: Path, a: np.ndarray) -> None:
    path.write_bytes(np.ascontiguousarray(a, dtype="<f4").tobytes())


def _read_blob(path: Path, shape) -> np.ndarray:
    return np.frombuffer(path.read_bytes(), dtype="<f4").reshape(shape).copy()


def _dump_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def save_points(ds: PointDataset, directory: str | Path, transform: AffineTransform | None = None) -> Path:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    _write_blob(d / DATA_FILE, ds.points)
    sidecar = {
        "type": "points",
        "kind": ds.kind,
        "n": ds.n,
        "d": ds.d,
        "noise": ds.noise,
        "seed": ds.seed,
        "params": ds.params,
        "normalization": transform.to_dict() if transform is not None else None,
        "metadata": {k: np.asarray(v).tolist() for k, v in ds.metadata.items()},
        "sha256": array_hash(ds.points),
        "generator_version": __version__,
    }
    _dump_json(d / SIDECAR_FILE, sidecar)
    return d


def load_points(directory: str | Path) -> tuple[PointDataset, AffineTransform | None]:
    d = Path(directory)
    meta = json.loads((d / SIDECAR_FILE).read_text())
    if meta.get("type") != "points":
        raise ValueError(f"{d} does not hold a point dataset")
    points = _read_blob(d / DATA_FILE, (meta["n"], meta["d"])).astype(np.float64)
    ds = PointDataset(
        points=points,
        kind=meta["kind"],
        noise=meta["noise"],
        seed=meta["seed"],
        params=meta["params"],
        metadata={k: np.asarray(v) for k, v in meta["metadata"].items()},
    )
    tf = AffineTransform.from_dict(meta["normalization"]) if meta.get("normalization") else None
    return ds, tf


def save_images(ds: ImageDataset, directory: str | Path, png_preview: int = 0) -> Path:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    _write_blob(d / DATA_FILE, ds.images)
    n, h, w, c = ds.images.shape
    sidecar = {
        "type": "images",
        "name": ds.name,
        "shape": [n, h, w, c],
        "seed": ds.seed,
        "params": ds.params,
        "scenes": [a.to_dict() for a in ds.annotations],
    }
    _dump_json(d / SIDECAR_FILE, sidecar)
    counts = sorted({len(a.shapes) for a in ds.annotations})
    manifest = {
        "name": ds.name,
        "n": n,
        "count": counts[0] if len(counts) == 1 else counts,
        "seed": ds.seed,
        "params": ds.params,
        "rejections": ds.rejection_stats(),
        "sha256": array_hash(ds.images),
        "generator_version": __version__,
    }
    _dump_json(d / MANIFEST_FILE, manifest)
    if png_preview:
        png_dir = d / "png"
        png_dir.mkdir(exist_ok=True)
        for i in range(min(png_preview, n)):
            save_png(ds.images[i], png_dir / f"{i:05d}.png")
    return d


def load_images(directory: str | Path) -> ImageDataset:
    d = Path(directory)
    meta = json.loads((d / SIDECAR_FILE).read_text())
    if meta.get("type") != "images":
        raise ValueError(f"{d} does not hold an image dataset")
    n, h, w, c = meta["shape"]
    images = _read_blob(d / DATA_FILE, (n, h, w, c))
    anns = [
        SceneAnnotation([ShapeInstance.from_dict(s) for s in scene["shapes"]], (h, w), c, scene.get("rejections", 0))
        for scene in meta["scenes"]
    ]
    return ImageDataset(images, anns, meta["name"], meta["seed"], meta["params"])


def to_uint8(image: np.ndarray) -> np.ndarray:
    """[-1, 1] float image -> uint8, dropping a singleton channel axis."""
    a = np.clip((np.asarray(image, dtype=np.float64) + 1.0) * 127.5, 0, 255).round().astype(np.uint8)
    if a.ndim == 3 and a.shape[-1] == 1:
        a = a[..., 0]
    return a


def save_png(image: np.ndarray, path: str | Path, upscale: int = 4) -> None:
    from PIL import Image

    im = Image.fromarray(to_uint8(image))
    if upscale > 1:
        im = im.resize((im.width * upscale, im.height * upscale), Image.NEAREST)
    im.save(path)
