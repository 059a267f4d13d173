"""Negative sampling, fold construction and the cross-validated pipeline.

Every structure derived from lncRNA-disease labels (GIP kernels, functional
similarity, the completed association matrix) is rebuilt from the
fold-masked matrix, so held-out positives never reach training.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from . import cnn, gbdt
from .completion import CompletedMatrix, EmbeddingBuilder, fuse_associations, geometric_complement
from .config import PipelineConfig, SeedTree
from .data import AssociationMatrix, DiseaseDag, EntityCatalog, FoldMask, apply_mask, normalize_name
from .errors import DataError
from .metrics import MetricsReport, evaluate, mean_report
from .similarity import (
    SimilarityMatrix,
    disease_semantic_similarity,
    fuse_max,
    gip_kernel,
    lncrna_functional_similarity,
)

log = logging.getLogger(__name__)

Pair = tuple[int, int]


@dataclass(frozen=True)
class LabeledPairSet:
    pairs: tuple[Pair, ...]
    labels: np.ndarray
    provenance: str

    def __post_init__(self):
        if len(set(self.pairs)) != len(self.pairs):
            raise ValueError("duplicate pairs in labeled set")
        if len(self.labels) != len(self.pairs):
            raise ValueError("labels and pairs differ in length")


def sample_negatives(ld: AssociationMatrix, count: int, seed: int, exclude: Iterable[Pair] = ()) -> list[Pair]:
    """Uniform draw without replacement from the zero entries of ``ld`` not in ``exclude``.

    The result is sorted row-major.
    """
    if count < 0:
        raise ValueError("count must be non-negative")
    zero = ld.values == 0
    for r, c in exclude:
        if 0 <= r < zero.shape[0] and 0 <= c < zero.shape[1]:
            zero[r, c] = False
    candidates = np.flatnonzero(zero)
    if count > len(candidates):
        raise DataError(f"requested {count} negatives but only {len(candidates)} zero entries are available")
    if count == 0:
        return []
    rng = np.random.default_rng(seed)
    picked = np.sort(rng.choice(candidates, size=count, replace=False))
    rows, cols = np.unravel_index(picked, zero.shape)
    return list(zip(rows.tolist(), cols.tolist()))


def kfold_split(positives: Sequence[Pair], k: int, seed: int) -> list[FoldMask]:
    """Shuffle then cut into k folds; the first ``len % k`` folds hold one extra pair."""
    if k < 2:
        raise ValueError("k must be at least 2")
    if len(positives) < k:
        raise DataError(f"{len(positives)} positives cannot fill {k} folds")
    order = np.random.default_rng(seed).permutation(len(positives))
    return [
        FoldMask(frozenset(positives[i] for i in chunk.tolist()), fold_id)
        for fold_id, chunk in enumerate(np.array_split(order, k))
    ]


@dataclass
class Inputs:
    """LD, MD, LM and the DAG aligned onto the LD lncRNA/disease catalogs."""

    ld: AssociationMatrix
    md: AssociationMatrix
    lm: AssociationMatrix
    dag: DiseaseDag

    @classmethod
    def align(cls, ld, md, lm, dag) -> "Inputs":
        seen: dict[str, str] = {}
        for name in (*lm.cols.names, *md.rows.names):
            seen.setdefault(normalize_name(name), name)
        mirs = EntityCatalog("miRNA", seen.values())
        md = md.reindex(mirs, ld.cols)
        lm = lm.reindex(ld.rows, mirs)
        return cls(ld, md, lm, dag)


@dataclass
class Context:
    """Label-independent structures computed once per run."""

    semantic: SimilarityMatrix
    lmd: CompletedMatrix

    @classmethod
    def build(cls, inputs: Inputs, cfg: PipelineConfig) -> "Context":
        semantic = disease_semantic_similarity(inputs.dag, inputs.ld.cols, cfg.delta)
        return cls(semantic, geometric_complement(inputs.lm, inputs.md))


@dataclass
class Features:
    gip_l: SimilarityMatrix
    gip_d: SimilarityMatrix
    lfs: SimilarityMatrix
    fused_l: SimilarityMatrix
    fused_d: SimilarityMatrix
    ld_new: CompletedMatrix
    builder: EmbeddingBuilder


def label_features(ld: AssociationMatrix, ctx: Context, cfg: PipelineConfig) -> Features:
    """All LD-derived similarities, the completed matrix and an embedding builder."""
    gip_l = gip_kernel(ld, "rows", cfg.gip_l())
    gip_d = gip_kernel(ld, "cols", cfg.gip_d())
    lfs = lncrna_functional_similarity(ld, ctx.semantic)
    fused_l = fuse_max(lfs, gip_l)
    fused_d = fuse_max(ctx.semantic, gip_d)
    ld_new = fuse_associations(ld, ctx.lmd)
    return Features(gip_l, gip_d, lfs, fused_l, fused_d, ld_new, EmbeddingBuilder(ld_new, fused_l, fused_d))


@dataclass
class FoldTrace:
    """What one fold trained and tested on, kept for leak audits."""

    fold_id: int
    masked_ld: AssociationMatrix
    train: LabeledPairSet
    train_negatives: tuple[Pair, ...]
    test: LabeledPairSet
    cnn_loss: list[float] = field(default_factory=list)


@dataclass
class FoldData:
    trace: FoldTrace
    train_features: np.ndarray
    train_labels: np.ndarray
    test_features: np.ndarray
    test_labels: np.ndarray
    gbdt_seed: int


@dataclass
class CvResult:
    folds: list[MetricsReport]
    mean: MetricsReport
    traces: list[FoldTrace]
    scores: list[np.ndarray]


@dataclass
class FittedModel:
    network: cnn.NetworkParams
    ensemble: gbdt.BoostedEnsemble


def fit_model(
    builder: EmbeddingBuilder, pairs: Sequence[Pair], labels: np.ndarray, cfg: PipelineConfig, seeds: SeedTree, fold_id: int
) -> tuple[FittedModel, np.ndarray, list[float]]:
    spec = cfg.network_spec(builder.width)
    x = builder.batch(pairs)
    result = cnn.train(
        spec,
        cfg.train,
        x,
        labels,
        init_seed=seeds.seed(fold_id, "cnn-init"),
        batch_seed=seeds.seed(fold_id, "cnn-batches"),
    )
    feats = cnn.extract_features(result.params, x)
    gcfg = _gbdt_config(cfg.gbdt, seeds.seed(fold_id, "gbdt"))
    ens = gbdt.train(feats, labels, gcfg)
    return FittedModel(result.params, ens), feats, result.loss_trace


def _gbdt_config(base: gbdt.GbdtConfig, seed: int) -> gbdt.GbdtConfig:
    return replace(base, seed=seed)


def score_pairs(model: FittedModel, builder: EmbeddingBuilder, pairs: Sequence[Pair], chunk: int = 4096) -> np.ndarray:
    out = []
    for start in range(0, len(pairs), chunk):
        x = builder.batch(pairs[start : start + chunk])
        out.append(gbdt.predict_proba(model.ensemble, cnn.extract_features(model.network, x)))
    return np.concatenate(out) if out else np.zeros(0)


def prepare_fold(inputs: Inputs, ctx: Context, mask: FoldMask, cfg: PipelineConfig, seeds: SeedTree) -> FoldData:
    f = mask.fold_id
    ld = inputs.ld
    masked = apply_mask(ld, mask)
    train_pos = masked.positives()
    train_neg = sample_negatives(masked, len(train_pos), seeds.seed(f, "negatives"), exclude=mask.held_out)
    train_pairs = train_pos + train_neg
    train_labels = np.r_[np.ones(len(train_pos)), np.zeros(len(train_neg))]

    test_pos = sorted(mask.held_out)
    test_neg = sample_negatives(ld, len(test_pos), seeds.seed(f, "test-negatives"), exclude=train_neg)
    test_pairs = test_pos + test_neg
    test_labels = np.r_[np.ones(len(test_pos)), np.zeros(len(test_neg))]
    if cfg.shuffle_labels:
        rng = np.random.default_rng(seeds.seed(f, "label-shuffle"))
        train_labels = rng.permutation(train_labels)
        test_labels = rng.permutation(test_labels)

    feats = label_features(ld if cfg.leaky_similarities else masked, ctx, cfg)
    spec = cfg.network_spec(feats.builder.width)
    x_train = feats.builder.batch(train_pairs)
    result = cnn.train(
        spec,
        cfg.train,
        x_train,
        train_labels,
        init_seed=seeds.seed(f, "cnn-init"),
        batch_seed=seeds.seed(f, "cnn-batches"),
    )
    train_features = cnn.extract_features(result.params, x_train)
    test_features = cnn.extract_features(result.params, feats.builder.batch(test_pairs))
    trace = FoldTrace(
        f,
        masked,
        LabeledPairSet(tuple(train_pairs), train_labels, f"fold{f}"),
        tuple(train_neg),
        LabeledPairSet(tuple(test_pairs), test_labels, f"fold{f}"),
        result.loss_trace,
    )
    return FoldData(trace, train_features, train_labels, test_features, test_labels, seeds.seed(f, "gbdt"))


def score_fold(fold: FoldData, gbdt_cfg: gbdt.GbdtConfig, threshold: float) -> tuple[MetricsReport, np.ndarray]:
    y = fold.test_labels
    if y.min() == y.max():
        raise DataError(f"fold {fold.trace.fold_id} has a single-class test set")
    ens = gbdt.train(fold.train_features, fold.train_labels, _gbdt_config(gbdt_cfg, fold.gbdt_seed))
    scores = gbdt.predict_proba(ens, fold.test_features)
    return evaluate(scores, y, threshold), scores


def make_folds(inputs: Inputs, cfg: PipelineConfig) -> list[FoldMask]:
    return kfold_split(inputs.ld.positives(), cfg.folds, SeedTree(cfg.master_seed).seed(-1, "folds"))


def prepare_folds(inputs: Inputs, cfg: PipelineConfig, folds: list[FoldMask] | None = None) -> list[FoldData]:
    seeds = SeedTree(cfg.master_seed)
    folds = make_folds(inputs, cfg) if folds is None else folds
    ctx = Context.build(inputs, cfg)
    prepared = []
    for mask in folds:
        log.info("fold %d: %d held-out positives", mask.fold_id, len(mask))
        prepared.append(prepare_fold(inputs, ctx, mask, cfg, seeds))
    return prepared


def run_cv_pipeline(inputs: Inputs, cfg: PipelineConfig, folds: list[FoldMask] | None = None) -> CvResult:
    prepared = prepare_folds(inputs, cfg, folds)
    reports, scores = [], []
    for fold in prepared:
        report, s = score_fold(fold, cfg.gbdt, cfg.threshold)
        log.info("fold %d: auc=%.4f aupr=%.4f", fold.trace.fold_id, report.auc, report.aupr)
        reports.append(report)
        scores.append(s)
    return CvResult(reports, mean_report(reports), [f.trace for f in prepared], scores)


@dataclass
class SweepRow:
    num_trees: int
    max_depth: int
    mean_auc: float
    fold_aucs: list[float]


def sweep_gbdt(
    inputs: Inputs, cfg: PipelineConfig, grid: Sequence[tuple[int, int]], prepared: list[FoldData] | None = None
) -> list[SweepRow]:
    """Mean CV AUC for each (num_trees, max_depth) on one shared set of folds and CNN features."""
    if not grid:
        raise ValueError("empty parameter grid")
    prepared = prepare_folds(inputs, cfg) if prepared is None else prepared
    rows = []
    for num_trees, max_depth in grid:
        gcfg = replace(cfg.gbdt, num_trees=int(num_trees), max_depth=int(max_depth))
        aucs = [score_fold(f, gcfg, cfg.threshold)[0].auc for f in prepared]
        rows.append(SweepRow(int(num_trees), int(max_depth), float(np.mean(aucs)), aucs))
    return rows


def fit_full(inputs: Inputs, cfg: PipelineConfig) -> tuple[FittedModel, Features]:
    """Train on every known positive plus an equal number of sampled negatives."""
    seeds = SeedTree(cfg.master_seed)
    ctx = Context.build(inputs, cfg)
    feats = label_features(inputs.ld, ctx, cfg)
    pos = inputs.ld.positives()
    neg = sample_negatives(inputs.ld, len(pos), seeds.seed(-1, "negatives"))
    labels = np.r_[np.ones(len(pos)), np.zeros(len(neg))]
    model, _, _ = fit_model(feats.builder, pos + neg, labels, cfg, seeds, -1)
    return model, feats


def score_matrix(model: FittedModel, feats: Features, ld: AssociationMatrix) -> np.ndarray:
    """Scores for every unobserved pair; known positives are NaN."""
    out = np.full(ld.shape, np.nan)
    rows, cols = np.nonzero(ld.values == 0)
    pairs = list(zip(rows.tolist(), cols.tolist()))
    out[rows, cols] = score_pairs(model, feats.builder, pairs)
    return out


def rank_candidates(ld: AssociationMatrix, scores: np.ndarray, disease: str, top_k: int = 10) -> list[tuple[str, float]]:
    """Top lncRNAs for one disease among pairs not already known; ties keep catalog order."""
    if top_k < 1:
        raise ValueError("top_k must be at least 1")
    j = ld.cols.position(disease)
    candidates = np.flatnonzero(ld.values[:, j] == 0)
    col = np.asarray(scores, dtype=np.float64)[candidates, j]
    order = np.lexsort((candidates, -col))[:top_k]
    return [(ld.rows.names[candidates[k]], float(col[k])) for k in order]
