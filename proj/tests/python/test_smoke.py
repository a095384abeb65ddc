import math
import os
from pathlib import Path

import numpy as np
import pytest

import unimodal

DATA_DIR = Path(os.environ.get("UNIMODAL_DATA_DIR", Path(__file__).resolve().parents[2] / "data"))


def test_geometry():
    assert unimodal.is_unimodal([0.2, 0.5, 0.3])
    assert not unimodal.is_unimodal([0.5, 0.2, 0.3])
    assert not unimodal.is_unimodal([0.2, 0.5, 0.3], mode=1)
    assert unimodal.modes([0.25, 0.25, 0.25, 0.25]) == [1, 2, 3, 4]
    us, ns = unimodal.unimodal_fraction(4)
    assert us == pytest.approx(1 / 3) and ns == pytest.approx(2 / 3)
    est, se = unimodal.estimate_unimodal_fraction_mc(3, 20000, seed=1)
    assert abs(est - 2 / 3) < 4 * se


def test_transport():
    p, q = [0.5, 0.5, 0.0], [0.0, 0.5, 0.5]
    assert unimodal.wasserstein_distance(p, q) == pytest.approx(1.0, abs=1e-9)
    assert unimodal.wasserstein_distance_cdf(p, q) == pytest.approx(1.0, abs=1e-12)
    proj, dist, plan = unimodal.project_unimodal([0.2, 0.5, 0.3], 2)
    assert proj == [0.2, 0.5, 0.3] and dist == 0.0
    proj, dist, plan = unimodal.project_unimodal([0.5, 0.1, 0.4], 2)
    assert unimodal.is_unimodal(proj, mode=2)
    assert isinstance(plan, np.ndarray) and plan.shape == (3, 3)
    assert dist == pytest.approx(float((plan * np.abs(np.subtract.outer(range(3), range(3)))).sum()))


def test_heads_and_losses():
    assert unimodal.is_unimodal(unimodal.unimodal_net_head([1.0, -2.0, 0.5, 3.0]))
    assert unimodal.is_unimodal(unimodal.binomial_head(0.3, 5))
    assert unimodal.is_unimodal(unimodal.poisson_head(1.2, 6, tau=0.5))
    cumulative, dist, label = unimodal.ordinal_encoding_head([2.0, -1.0])
    assert label == 2 and sum(dist) == pytest.approx(1.0)
    p = [2 / 6, 3 / 6, 0, 1 / 6]
    assert unimodal.u_term(0.0, 4, p) == pytest.approx(3 / 6, abs=1e-12)
    assert unimodal.uu_term(0.0, 4, p) == pytest.approx(8 / 6, abs=1e-12)
    assert unimodal.ce_loss(2, [0.25, 0.5, 0.25]) == pytest.approx(math.log(2))
    wu = unimodal.wu_loss(2, [0.2, 0.5, 0.3], 1.0, "kldiv")
    assert wu["total"] == wu["ce"] and wu["penalty"] <= 1e-10
    assert "wu-kldiv" in unimodal.registered_losses()
    err, margin = unimodal.check_loss_gradient("co2", 4, 0)
    assert err < 1e-4


def test_errors_map_to_python():
    with pytest.raises(ValueError):
        unimodal.is_unimodal([0.7, 0.7])
    with pytest.raises(ValueError):
        unimodal.discretize_target([1.0, 2.0], 1)


def test_data_and_experiment():
    labels, edges = unimodal.discretize_target([float(v) for v in range(1, 101)], 10)
    assert np.bincount(labels).tolist()[1:] == [10] * 10 and len(edges) == 11
    folds = unimodal.stratified_kfold([1] * 30 + [2] * 15 + [3] * 5, 5, 0)
    assert sorted(i for f in folds for i in f) == list(range(50))
    ds = unimodal.load_dataset("balance-scale", str(DATA_DIR))
    assert ds["numeric"].shape == (625, 4) and ds["k"] == 3
    res = unimodal.cross_validate("balance-scale", "dummy", str(DATA_DIR))
    assert len(res["runs"]) == 4 and res["mean"]["unimodality"] == 100.0
    res = unimodal.cross_validate("balance-scale", "un", str(DATA_DIR), epochs=5)
    assert all(r["unimodality"] == 100.0 for r in res["runs"])
    with pytest.raises(RuntimeError, match="dataset file missing"):
        unimodal.load_dataset("car", str(DATA_DIR))
