"""Inferring lncRNA-disease scores through the miRNA layer and assembling pair embeddings."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .data import AssociationMatrix, EntityCatalog
from .errors import DataError
from .similarity import SimilarityMatrix


@dataclass(frozen=True)
class CompletedMatrix:
    rows: EntityCatalog
    cols: EntityCatalog
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.shape != (len(self.rows), len(self.cols)):
            raise DataError("completed matrix shape does not match catalogs")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)


def geometric_complement(lm: AssociationMatrix, md: AssociationMatrix) -> CompletedMatrix:
    """Shared-miRNA count of each (lncRNA, disease) pair over the sum of their miRNA degrees.

    Pairs whose lncRNA and disease both have no miRNA links score 0.
    """
    if not lm.cols.same_as(md.rows):
        raise DataError("LM columns and MD rows must share one miRNA catalog")
    shared = lm.values @ md.values
    denom = lm.values.sum(axis=1)[:, None] + md.values.sum(axis=0)[None, :]
    out = np.divide(shared, denom, out=np.zeros_like(shared), where=denom > 0)
    return CompletedMatrix(lm.rows, md.cols, out)


def fuse_associations(ld: AssociationMatrix, lmd: CompletedMatrix) -> CompletedMatrix:
    if ld.shape != lmd.values.shape or not (ld.rows.same_as(lmd.rows) and ld.cols.same_as(lmd.cols)):
        raise DataError("LD and inferred matrix disagree on shape or catalogs")
    return CompletedMatrix(ld.rows, ld.cols, np.maximum(ld.values, lmd.values))


@dataclass(frozen=True)
class PairEmbedding:
    matrix: np.ndarray
    lnc_index: int
    dis_index: int


class EmbeddingBuilder:
    """Builds 2 x (n_disease + n_lncRNA) embeddings on demand.

    Row 0 is the lncRNA's completed association row followed by its fused
    similarity row; row 1 is the disease's completed association column
    followed by its fused similarity column.
    """

    def __init__(self, ld_new: CompletedMatrix, lfs: SimilarityMatrix, ds: SimilarityMatrix):
        if not (lfs.catalog.same_as(ld_new.rows) and ds.catalog.same_as(ld_new.cols)):
            raise DataError("similarity catalogs do not match the association matrix")
        self.lnc_rows = np.hstack([ld_new.values, lfs.values])
        self.dis_rows = np.hstack([ld_new.values.T, ds.values.T])
        self.n_lnc, self.n_dis = ld_new.values.shape

    @property
    def width(self) -> int:
        return self.n_lnc + self.n_dis

    def pair(self, i: int, j: int) -> PairEmbedding:
        self._check(i, j)
        return PairEmbedding(np.vstack([self.lnc_rows[i], self.dis_rows[j]]), i, j)

    def batch(self, pairs: Sequence[tuple[int, int]]) -> np.ndarray:
        """Stack embeddings for ``pairs`` into a (len(pairs), 2, F) array."""
        if len(pairs) == 0:
            return np.zeros((0, 2, self.width))
        idx = np.asarray(pairs, dtype=int).reshape(-1, 2)
        bad = (idx[:, 0] < 0) | (idx[:, 0] >= self.n_lnc) | (idx[:, 1] < 0) | (idx[:, 1] >= self.n_dis)
        if bad.any():
            i, j = idx[np.argmax(bad)]
            raise IndexError(f"pair ({i}, {j}) out of range")
        return np.stack([self.lnc_rows[idx[:, 0]], self.dis_rows[idx[:, 1]]], axis=1)

    def _check(self, i: int, j: int) -> None:
        if not (0 <= i < self.n_lnc and 0 <= j < self.n_dis):
            raise IndexError(f"pair ({i}, {j}) out of range")


def build_pair_embedding(
    i: int, j: int, ld_new: CompletedMatrix, lfs: SimilarityMatrix, ds: SimilarityMatrix
) -> PairEmbedding:
    return EmbeddingBuilder(ld_new, lfs, ds).pair(i, j)
