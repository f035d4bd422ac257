import json

import numpy as np
from PIL import Image

from ganbench import pointgen as pg
from ganbench import scenegen as sg
from ganbench import storage


def test_points_round_trip(tmp_path):
    ds = pg.gen_swiss_roll(300, 0.05, seed=1)
    _, tf = pg.normalize_points(ds)
    storage.save_points(ds, tmp_path / "p", tf)
    back, tf2 = storage.load_points(tmp_path / "p")
    np.testing.assert_allclose(back.points, ds.points, rtol=1e-6, atol=1e-5)
    assert back.kind == "swiss_roll" and back.seed == 1 and back.noise == 0.05
    np.testing.assert_array_equal(back.metadata["t"], ds.metadata["t"])
    np.testing.assert_allclose(tf2.scale, tf.scale)


def test_blob_is_little_endian_float32(tmp_path):
    ds = pg.gen_blobs(10, seed=0)
    storage.save_points(ds, tmp_path)
    raw = (tmp_path / storage.DATA_FILE).read_bytes()
    assert len(raw) == 10 * 2 * 4
    np.testing.assert_allclose(np.frombuffer(raw, "<f4").reshape(10, 2), ds.points, rtol=1e-6)


def test_images_round_trip_and_manifest(tmp_path):
    ds = sg.gen_image_dataset("squares_3_4", 30, seed=2)
    storage.save_images(ds, tmp_path / "i", png_preview=2)
    back = storage.load_images(tmp_path / "i")
    assert back.images.tobytes() == ds.images.astype(np.float32).tobytes()
    assert [a.to_dict() for a in back.annotations] == [a.to_dict() for a in ds.annotations]
    man = json.loads((tmp_path / "i" / storage.MANIFEST_FILE).read_text())
    assert man["count"] == 3 and man["n"] == 30
    assert man["sha256"] == storage.array_hash(ds.images)
    png = Image.open(tmp_path / "i" / "png" / "00000.png")
    assert png.size == (112, 112)


def test_to_uint8():
    img = np.array([[[-1.0], [0.0], [1.0]]])
    assert storage.to_uint8(img).tolist() == [[0, 128, 255]]


def test_array_hash_sensitive():
    a = np.zeros(5)
    b = a.copy()
    b[2] = 1e-12
    assert storage.array_hash(a) != storage.array_hash(b)
