import numpy as np
import pytest

from conftest import fast_config, make_matrix
from lncdis import evaluation as ev
from lncdis.config import SeedTree
from lncdis.errors import DataError


def test_negatives_basic():
    ld = make_matrix((np.random.default_rng(0).random((8, 9)) < 0.3).astype(float))
    assert ev.sample_negatives(ld, 0, 1) == []
    excl = {(0, 0), (1, 1), (2, 2)}
    a = ev.sample_negatives(ld, 20, 3, exclude=excl)
    assert a == ev.sample_negatives(ld, 20, 3, exclude=excl)
    assert len(set(a)) == 20 and a == sorted(a)
    assert all(ld.values[i, j] == 0 and (i, j) not in excl for i, j in a)


def test_negatives_exhausted():
    ld = make_matrix([[1, 0], [1, 1]])
    assert ev.sample_negatives(ld, 1, 0) == [(0, 1)]
    with pytest.raises(DataError):
        ev.sample_negatives(ld, 2, 0)


def test_kfold_sizes_and_partition():
    pos = [(i, i) for i in range(11)]
    folds = ev.kfold_split(pos, 5, 9)
    assert sorted(len(f.held_out) for f in folds) == [2, 2, 2, 2, 3]
    assert [len(f.held_out) for f in folds] == [3, 2, 2, 2, 2]
    union = set().union(*(f.held_out for f in folds))
    assert union == set(pos)
    assert sum(len(f.held_out) for f in folds) == 11
    assert [len(f.held_out) for f in ev.kfold_split(pos[:10], 5, 0)] == [2] * 5
    with pytest.raises(DataError):
        ev.kfold_split(pos[:3], 5, 0)


def test_rank_candidates():
    ld = make_matrix([[1, 0], [0, 0], [0, 1], [0, 0]], prefix=("l", "d"))
    scores = np.array([[np.nan, 0.2], [0.7, 0.9], [0.7, np.nan], [0.1, 0.9]])
    out = ev.rank_candidates(ld, scores, "d0", top_k=10)
    assert out == [("l1", 0.7), ("l2", 0.7), ("l3", 0.1)]
    assert ev.rank_candidates(ld, scores, "d1", top_k=1) == [("l1", 0.9)]
    with pytest.raises(DataError):
        ev.rank_candidates(ld, scores, "nope")


@pytest.fixture(scope="module")
def cv_run(small_inputs):
    cfg = fast_config()
    return cfg, ev.run_cv_pipeline(small_inputs, cfg)


def test_cv_leak_free(small_inputs, cv_run):
    cfg, res = cv_run
    folds = ev.make_folds(small_inputs, cfg)
    total = small_inputs.ld.n_positives()
    assert len(res.folds) == cfg.folds
    for mask, trace in zip(folds, res.traces):
        held = mask.held_out
        assert trace.masked_ld.n_positives() == total - len(held)
        assert all(trace.masked_ld.values[i, j] == 0 for i, j in held)
        train = set(trace.train.pairs)
        test = set(trace.test.pairs)
        assert not train & test
        assert held <= test
        assert set(trace.train_negatives) <= train
        assert not held & train


def test_cv_mean_is_fold_average(cv_run):
    _, res = cv_run
    for field in res.mean.FIELDS:
        assert getattr(res.mean, field) == pytest.approx(np.mean([getattr(r, field) for r in res.folds]), abs=1e-12)
    for r in res.folds:
        assert all(0 <= v <= 1 for v in r.values())
        assert r.roc_points[0] == (0.0, 0.0) and r.roc_points[-1] == (1.0, 1.0)


def test_cv_deterministic(small_inputs, cv_run):
    cfg, res = cv_run
    again = ev.run_cv_pipeline(small_inputs, cfg)
    assert [r.values() for r in again.folds] == [r.values() for r in res.folds]


def test_leaky_variant_uses_full_ld(small_inputs):
    cfg = fast_config("cv.leaky_similarities = true")
    seeds = SeedTree(cfg.master_seed)
    ctx = ev.Context.build(small_inputs, cfg)
    mask = ev.make_folds(small_inputs, cfg)[0]
    fold = ev.prepare_fold(small_inputs, ctx, mask, cfg, seeds)
    # features come from the full LD, but masking and sampling are unchanged
    assert fold.trace.masked_ld.n_positives() == small_inputs.ld.n_positives() - len(mask.held_out)


def test_sweep_shares_folds(small_inputs):
    cfg = fast_config()
    prepared = ev.prepare_folds(small_inputs, cfg)
    rows = ev.sweep_gbdt(small_inputs, cfg, [(10, 4), (20, 4)], prepared=prepared)
    assert [(r.num_trees, r.max_depth) for r in rows] == [(10, 4), (20, 4)]
    cv = ev.run_cv_pipeline(small_inputs, cfg)
    assert rows[1].mean_auc == pytest.approx(cv.mean.auc, abs=1e-12)
    with pytest.raises(ValueError):
        ev.sweep_gbdt(small_inputs, cfg, [], prepared=prepared)


def test_fit_full_and_score_matrix(small_inputs):
    cfg = fast_config()
    model, feats = ev.fit_full(small_inputs, cfg)
    scores = ev.score_matrix(model, feats, small_inputs.ld)
    known = small_inputs.ld.values == 1
    assert np.all(np.isnan(scores[known]))
    assert np.all((scores[~known] > 0) & (scores[~known] < 1))
    top = ev.rank_candidates(small_inputs.ld, scores, small_inputs.ld.cols.names[0], 5)
    assert len(top) <= 5
    assert [s for _, s in top] == sorted((s for _, s in top), reverse=True)
