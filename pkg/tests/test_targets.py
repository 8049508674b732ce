import math

import numpy as np
import pytest

from mmdreg.targets import (SampleSpec, TargetError, bananas, gaussian_init, load_csv, neals_cross, ring_start,
                            sample, save_csv, three_rings, two_lines)


def test_three_rings_partition():
    pts = three_rings(9, seed=4)
    centers = np.array([[-2.5, 0], [0, 0], [2.5, 0]])
    owner = np.argmin(np.linalg.norm(pts[:, None] - centers[None], axis=2), axis=1)
    assert np.bincount(owner, minlength=3).tolist() == [3, 3, 3]


def test_three_rings_on_circles():
    pts = three_rings(300, seed=1, radius=0.8)
    for k, c in enumerate(((-2.5, 0), (0, 0), (2.5, 0))):
        r = np.linalg.norm(pts[100 * k: 100 * (k + 1)] - c, axis=1)
        np.testing.assert_allclose(r, 0.8, atol=1e-9)


@pytest.mark.parametrize("gen", [three_rings, neals_cross, bananas, two_lines, gaussian_init])
def test_same_seed_same_points(gen):
    a, b = gen(50, seed=7), gen(50, seed=7)
    assert a.tobytes() == b.tobytes()
    assert gen(50, seed=8).tobytes() != a.tobytes()
    assert a.shape == (50, 2)


def test_neals_cross_mean():
    n = 40000
    pts = neals_cross(n, seed=2)
    upright = pts[: n // 4, 1]
    se = math.sqrt(2.0 / upright.size)
    assert abs(upright.mean() - 7.5) <= 3 * se


def test_gaussian_init_defaults():
    pts = gaussian_init(5000, seed=3)
    np.testing.assert_allclose(pts.mean(axis=0), ring_start(), atol=5e-3)
    assert ring_start() == (1.5, 0.0)
    np.testing.assert_allclose(pts.var(axis=0), 2e-3, rtol=0.1)


def test_csv_roundtrip(tmp_path, rng):
    pts = rng.normal(size=(12, 2)) * 1e3
    path = tmp_path / "pts.csv"
    save_csv(path, pts)
    assert load_csv(path).tobytes() == pts.tobytes()
    assert sample(SampleSpec("csv", 12, params={"path": str(path)})).tobytes() == pts.tobytes()
    with pytest.raises(TargetError):
        sample(SampleSpec("csv", 5, params={"path": str(path)}))


def test_csv_errors(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("x0,x1\n1,2\n3,oops\n")
    with pytest.raises(TargetError):
        load_csv(bad)
    empty = tmp_path / "empty.csv"
    empty.write_text("# nothing\n")
    with pytest.raises(TargetError):
        load_csv(empty)


def test_sample_dispatch_and_errors():
    assert sample(SampleSpec("two_lines", 10, seed=(1, 2))).shape == (10, 2)
    with pytest.raises(TargetError):
        sample(SampleSpec("spiral", 10))
    with pytest.raises(TargetError):
        sample(SampleSpec("three_rings", 0))
    with pytest.raises(TargetError):
        gaussian_init(3, var=-1.0)
