import math

import numpy as np
import pytest

import pcinit


def test_cloud_and_neighbors():
    pts = pcinit.uniform_cloud(3, 200, seed=4)
    assert pts.shape == (200, 3)
    assert np.all((pts >= 0) & (pts <= 1))
    np.testing.assert_array_equal(pts, pcinit.uniform_cloud(3, 200, seed=4))

    nb = pcinit.radius_neighbors(pts, pts, 0.2)
    d2 = ((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1)
    for i, row in enumerate(nb):
        assert list(row) == list(np.flatnonzero(d2[i] <= 0.04))


def test_density_single_point():
    p = pcinit.estimate_density(np.array([[0.5, 0.5]]), 0.3)
    assert p[0] == pytest.approx((2 * math.pi * 0.09) ** -1)


def test_estimators_and_variances():
    assert pcinit.estimate("sum", [0.5, 0.25]) == 0.75
    assert pcinit.estimate("avg", [0.5, 0.25]) == 0.375
    assert pcinit.estimate("mc", [1.0, 1.0], [0.5, 0.5]) == 2.0
    assert pcinit.he_variance(9, 64) == pytest.approx(2 / 576)
    assert pcinit.standard_variance(16, 128) == 2 / 2048
    with pytest.raises(ValueError):
        pcinit.estimate("mc", [1.0], [0.0])


def test_config_errors_name_the_field():
    with pytest.raises(pcinit.ConfigError, match="stack.radius"):
        pcinit.normalize_config({"stack": {"radius": -1}})
    full = pcinit.normalize_config({})
    assert full["stack"]["depth"] == 25


def test_run_is_deterministic(tmp_path):
    cfg = {
        "seed": 2,
        "stack": {"depth": 3, "channels": 2, "radius": 0.3},
        "cloud": {"dim": 2, "n": 80},
        "init": {"sample_count": 2},
        "evaluation": {"clouds": 2},
    }
    a = pcinit.run({**cfg, "output_dir": str(tmp_path / "a")})
    b = pcinit.run({**cfg, "output_dir": str(tmp_path / "b")})
    assert [o["sha256"] for o in a["outputs"]] == [o["sha256"] for o in b["outputs"]]
    rows = (tmp_path / "a" / "variance.csv").read_text().splitlines()
    assert rows[0] == "layer,variance,n" and len(rows) == 4


def test_discrete_reduction():
    assert pcinit.discrete_equivalence_error(8, 8, 3, 1) <= 1e-12
