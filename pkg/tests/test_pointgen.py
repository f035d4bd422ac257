import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ganbench import pointgen as pg
from ganbench.errors import InvalidArgumentError

# Monte Carlo oracle (oracles.radial_fraction_mc, 2e6 draws): share of points within
# 3 * 0.05 of their ring at noise 0.05, for radius 1.0 and 0.5.
RADIAL_FRACTION_R1 = 0.99728
RADIAL_FRACTION_R05 = 0.99733


def test_blobs_zero_std_degenerate():
    ds = pg.gen_blobs(3, pg.BlobSpec([[0.0, 0.0]], 0.0), seed=1)
    np.testing.assert_array_equal(ds.points, np.zeros((3, 2)))


def test_blobs_cluster_counts_binomial():
    ds = pg.gen_blobs(5000, seed=7)
    assert ds.points.shape == (5000, 2)
    counts = np.bincount(ds.metadata["label"], minlength=3)
    sigma = math.sqrt(5000 * (1 / 3) * (2 / 3))
    assert np.all(np.abs(counts - 5000 / 3) <= 3 * sigma), counts


def test_blobs_default_size():
    assert pg.gen_blobs(5000).n == 5000


@pytest.mark.parametrize("bad", [0, -3])
def test_blobs_rejects_bad_n(bad):
    with pytest.raises(InvalidArgumentError):
        pg.gen_blobs(bad)


def test_blobspec_validation():
    with pytest.raises(InvalidArgumentError):
        pg.BlobSpec([[0, 0]], -1.0)
    with pytest.raises(InvalidArgumentError):
        pg.BlobSpec([[0, 0], [0, 0]], 1.0)


def test_circles_noiseless_radii():
    ds = pg.gen_circles(1001, 0.3, 0.0, seed=2)
    r = np.linalg.norm(ds.points, axis=1)
    on_ring = np.isclose(r, 1.0, rtol=0, atol=1e-12) | np.isclose(r, 0.3, rtol=0, atol=1e-12)
    assert on_ring.all()
    assert (ds.metadata["ring"] == 0).sum() == 500


def test_circles_four_points():
    ds = pg.gen_circles(4, 0.5, 0.0, seed=11)
    r = np.sort(np.linalg.norm(ds.points, axis=1))
    np.testing.assert_allclose(r, [0.5, 0.5, 1.0, 1.0], atol=1e-12)


def test_circles_noise_band_matches_oracle():
    ds = pg.gen_circles(5000, 0.5, 0.05, seed=3)
    target = np.where(ds.metadata["ring"] == 0, 1.0, 0.5)
    frac = np.mean(np.abs(np.linalg.norm(ds.points, axis=1) - target) <= 0.15)
    assert frac >= 0.99
    p = (RADIAL_FRACTION_R1 + RADIAL_FRACTION_R05) / 2
    assert abs(frac - p) <= 3 * math.sqrt(p * (1 - p) / 5000) + 1e-3


@pytest.mark.parametrize("factor", [0.0, 1.0, 1.5, -0.2])
def test_circles_factor_range(factor):
    with pytest.raises(InvalidArgumentError):
        pg.gen_circles(10, factor)


def test_s_curve_closed_form():
    np.testing.assert_allclose(pg.s_curve_point(0.0, 0.0), [0, 0, 0], atol=0)
    np.testing.assert_allclose(pg.s_curve_point(np.pi / 2, 1.0), [1, 1, -1], atol=1e-15)


def test_swiss_roll_closed_form():
    t = pg.swiss_roll_t(0.0)
    np.testing.assert_allclose(pg.swiss_roll_point(t, 0.0), [0.0, 0.0, -1.5 * np.pi], atol=1e-14)


def test_swiss_roll_noiseless_radius():
    ds = pg.gen_swiss_roll(2000, 0.0, seed=5)
    x, z = ds.points[:, 0], ds.points[:, 2]
    t = ds.metadata["t"]
    assert np.max(np.abs(x * x + z * z - t * t) / (t * t)) < 1e-9


def test_swiss_roll_noise_mean_distance():
    from ganbench.evaluator import manifold_distance

    ds = pg.gen_swiss_roll(5000, 0.5, seed=9)
    stats = manifold_distance(ds.points, "swiss_roll", m_ref=100_000)
    assert stats.mean <= 3 * 0.5 * math.sqrt(3)


@pytest.mark.parametrize("kind", pg.POINT_KINDS)
def test_noiseless_membership_and_label_consistency(kind):
    params = {"std": 0.0} if kind == "blobs" else {}
    ds = pg.generate_points(kind, 3000, 0.0, seed=4, **params)
    assert ds.points.shape == (3000, pg.KIND_DIM[kind])
    assert np.all(np.isfinite(ds.points))
    ref = pg.noiseless_points(ds)
    scale = np.maximum(np.linalg.norm(ref, axis=1), 1.0)
    assert np.max(np.linalg.norm(ds.points - ref, axis=1) / scale) <= 1e-9


@pytest.mark.parametrize("kind", pg.POINT_KINDS)
@pytest.mark.parametrize("level", list(pg.NOISE_LEVELS))
def test_three_noise_variants(kind, level):
    ds = pg.generate_points(kind, 50, pg.NOISE_LEVELS[level], seed=0)
    assert ds.noise == pg.NOISE_LEVELS[level]


@given(kind=st.sampled_from(pg.POINT_KINDS), seed=st.integers(0, 2**32 - 1),
       noise=st.sampled_from([0.0, 0.05, 0.15]))
def test_determinism(kind, seed, noise):
    a = pg.generate_points(kind, 64, noise, seed)
    b = pg.generate_points(kind, 64, noise, seed)
    assert a.points.tobytes() == b.points.tobytes()


def test_different_seeds_differ():
    a = pg.gen_s_curve(10, 0.0, seed=1)
    b = pg.gen_s_curve(10, 0.0, seed=2)
    assert not np.array_equal(a.points, b.points)


def test_normalize_two_points():
    ds = pg.PointDataset(np.array([[-1.0, -1.0], [1.0, 1.0]]), "blobs", 0.0, 0)
    out, tf = pg.normalize_points(ds)
    np.testing.assert_allclose(out.points, [[-0.95, -0.95], [0.95, 0.95]], atol=1e-15)


def test_normalize_degenerate():
    ds = pg.PointDataset(np.tile([[2.0, -3.0]], (5, 1)), "blobs", 0.0, 0)
    out, tf = pg.normalize_points(ds)
    np.testing.assert_array_equal(out.points, np.zeros((5, 2)))
    assert tf.degenerate.all()
    np.testing.assert_array_equal(tf.inverse(out.points), ds.points)


def test_normalize_empty():
    with pytest.raises(InvalidArgumentError):
        pg.fit_normalization(np.zeros((0, 2)))


@given(kind=st.sampled_from(pg.POINT_KINDS), seed=st.integers(0, 1000))
def test_normalize_round_trip(kind, seed):
    ds = pg.generate_points(kind, 200, 0.1, seed)
    out, tf = pg.normalize_points(ds)
    assert np.all(np.abs(out.points) <= 0.95 + 1e-12)
    np.testing.assert_allclose(tf.inverse(out.points), ds.points, rtol=0, atol=1e-12)
