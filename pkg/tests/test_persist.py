import json

import numpy as np
import pytest

from lncdis import cnn, gbdt, persist
from lncdis.errors import DataError


def _ensemble():
    rng = np.random.default_rng(0)
    X = rng.random((60, 5))
    y = (X[:, 0] > 0.4).astype(float)
    return gbdt.train(X, y, gbdt.GbdtConfig(num_trees=6, max_depth=3)), X


def test_network_round_trip(tmp_path):
    spec = cnn.NetworkSpec((2, 30), conv_kernel=(2, 6), hidden_units=5, pool_mode="mean")
    params = cnn.init_params(spec, 9)
    persist.save_network(params, tmp_path / "n.json")
    back = persist.load_network(tmp_path / "n.json")
    assert back.spec == spec and back.seed == 9
    for name in cnn.PARAM_NAMES:
        np.testing.assert_array_equal(back[name], params[name])


def test_ensemble_round_trip(tmp_path):
    ens, X = _ensemble()
    persist.save_ensemble(ens, tmp_path / "g.json")
    back = persist.load_ensemble(tmp_path / "g.json")
    assert back.config == ens.config and back.loss_trace == ens.loss_trace
    np.testing.assert_array_equal(gbdt.predict_proba(back, X), gbdt.predict_proba(ens, X))
    persist.save_ensemble(back, tmp_path / "g2.json")
    assert (tmp_path / "g.json").read_bytes() == (tmp_path / "g2.json").read_bytes()


def test_trees_are_preorder(tmp_path):
    ens, _ = _ensemble()
    obj = persist.ensemble_to_dict(ens)
    first = obj["trees"][0]
    assert len(first) == sum(1 for _ in ens.trees[0].preorder())
    assert ("f" in first[0]) == (not ens.trees[0].is_leaf)


def test_header_checks(tmp_path):
    ens, _ = _ensemble()
    obj = persist.ensemble_to_dict(ens)
    with pytest.raises(DataError, match="expected a cnn"):
        persist.network_from_dict(obj)
    with pytest.raises(DataError, match="version"):
        persist.ensemble_from_dict({**obj, "version": 99})
    with pytest.raises(DataError, match="not a model"):
        persist.ensemble_from_dict({**obj, "format": "other"})
    bad = tmp_path / "bad.json"
    bad.write_text("{", encoding="utf-8")
    with pytest.raises(DataError):
        persist.load_ensemble(bad)
    obj["trees"][0] = obj["trees"][0] + [{"w": 0.0}]
    with pytest.raises(DataError, match="trailing"):
        persist.ensemble_from_dict(json.loads(json.dumps(obj)))
