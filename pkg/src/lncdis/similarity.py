"""Similarity kernels over lncRNAs and diseases, and their max-fusion."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import AssociationMatrix, DiseaseDag, EntityCatalog, normalize_name
from .errors import DataError


@dataclass(frozen=True)
class SimilarityMatrix:
    catalog: EntityCatalog
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        n = len(self.catalog)
        if values.shape != (n, n):
            raise DataError(f"similarity shape {values.shape} does not match catalog size {n}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return len(self.catalog)


@dataclass(frozen=True)
class GipConfig:
    gamma_prime: float = 1.0

    def __post_init__(self):
        if not self.gamma_prime > 0:
            raise ValueError("gamma_prime must be positive")


def semantic_contribution(dag: DiseaseDag, d: int, delta: float = 0.5) -> dict[int, float]:
    """Contribution of every ancestor term (and ``d`` itself) to disease ``d``.

    A term's value is the best decayed value among its children that also
    lie above ``d``; the traversal walks ancestors children-first so each
    value is final before it is pushed to the parents.
    """
    if not 0 <= d < len(dag):
        raise IndexError(f"disease index {d} out of range")
    if not 0 < delta <= 1:
        raise ValueError("delta must lie in (0, 1]")
    position = _order_position(dag)
    ancestors = sorted(dag.ancestors(d), key=position.__getitem__)
    contrib = {n: 0.0 for n in ancestors}
    contrib[d] = 1.0
    for node in ancestors:
        value = delta * contrib[node]
        for parent in dag.parents[node]:
            if value > contrib[parent]:
                contrib[parent] = value
    return contrib


def _order_position(dag: DiseaseDag) -> list[int]:
    pos = [0] * len(dag)
    for i, node in enumerate(dag.order):
        pos[node] = i
    return pos


def semantic_value(contrib: dict[int, float]) -> float:
    return float(sum(contrib[k] for k in sorted(contrib)))


def contribution_matrix(dag: DiseaseDag, catalog: EntityCatalog, delta: float = 0.5):
    """Dense (diseases x DAG terms) contribution table; rows of unmapped diseases are zero."""
    table = np.zeros((len(catalog), len(dag)))
    mapped = np.zeros(len(catalog), dtype=bool)
    for i, name in enumerate(catalog.names):
        node = dag.nodes.index.get(normalize_name(name))
        if node is None:
            continue
        mapped[i] = True
        for term, value in semantic_contribution(dag, node, delta).items():
            table[i, term] = value
    return table, mapped


def disease_semantic_similarity(
    dag: DiseaseDag, catalog: EntityCatalog, delta: float = 0.5
) -> SimilarityMatrix:
    table, mapped = contribution_matrix(dag, catalog, delta)
    present = (table > 0).astype(np.float64)
    shared = table @ present.T
    numer = shared + shared.T
    dv = table.sum(axis=1)
    denom = dv[:, None] + dv[None, :]
    with np.errstate(invalid="ignore", divide="ignore"):
        ds = np.where(denom > 0, numer / np.where(denom > 0, denom, 1.0), 0.0)
    ds[~mapped, :] = 0.0
    ds[:, ~mapped] = 0.0
    ds = 0.5 * (ds + ds.T)
    np.fill_diagonal(ds, 1.0)
    return SimilarityMatrix(catalog, np.clip(ds, 0.0, 1.0))


def lncrna_functional_similarity(ld: AssociationMatrix, ds: SimilarityMatrix) -> SimilarityMatrix:
    """Best-match average of disease similarities between two lncRNAs' disease sets."""
    if not ld.cols.same_as(ds.catalog):
        raise DataError("LD columns and disease similarity catalog differ")
    y = ld.values
    n_l = y.shape[0]
    degree = y.sum(axis=1)
    # best[i, d] = max similarity of disease d to any disease of lncRNA i
    best = np.zeros((n_l, y.shape[1]))
    for i in range(n_l):
        diseases = np.flatnonzero(y[i])
        if diseases.size:
            best[i] = ds.values[diseases].max(axis=0)
    cross = y @ best.T  # cross[j, i] = sum over diseases of j of S(d, D(l_i))
    total = degree[:, None] + degree[None, :]
    with np.errstate(invalid="ignore", divide="ignore"):
        lfs = np.where(total > 0, (cross + cross.T) / np.where(total > 0, total, 1.0), 0.0)
    empty = degree == 0
    lfs[empty, :] = 0.0
    lfs[:, empty] = 0.0
    np.fill_diagonal(lfs, 1.0)
    return SimilarityMatrix(ld.rows, np.clip(lfs, 0.0, 1.0))


def gip_kernel(y: AssociationMatrix, axis: str = "rows", cfg: GipConfig = GipConfig()) -> SimilarityMatrix:
    if axis == "rows":
        profiles, catalog = y.values, y.rows
    elif axis == "cols":
        profiles, catalog = y.values.T, y.cols
    else:
        raise ValueError("axis must be 'rows' or 'cols'")
    if profiles.size == 0:
        raise DataError("empty association matrix")
    sq = (profiles * profiles).sum(axis=1)
    mean_sq = sq.sum() / len(sq)
    gamma = cfg.gamma_prime / mean_sq if mean_sq > 0 else 1.0
    dist = sq[:, None] + sq[None, :] - 2.0 * (profiles @ profiles.T)
    dist = np.maximum(0.5 * (dist + dist.T), 0.0)
    np.fill_diagonal(dist, 0.0)
    return SimilarityMatrix(catalog, np.exp(-gamma * dist))


def fuse_max(a: SimilarityMatrix, b: SimilarityMatrix) -> SimilarityMatrix:
    if not a.catalog.same_as(b.catalog):
        raise DataError("cannot fuse similarities over different catalogs")
    return SimilarityMatrix(a.catalog, np.maximum(a.values, b.values))


def write_matrix_csv(path, names, values, col_names=None) -> None:
    col_names = names if col_names is None else col_names
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(["", *(_csv_field(n) for n in col_names)]) + "\n")
        for name, row in zip(names, values):
            fh.write(",".join([_csv_field(name), *(f"{v:.12g}" for v in row)]) + "\n")


def _csv_field(text: str) -> str:
    if any(ch in text for ch in ',"\n'):
        return '"' + text.replace('"', '""') + '"'
    return text
