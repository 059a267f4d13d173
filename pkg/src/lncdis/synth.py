"""Planted-block synthetic data for end-to-end checks.

Entities of each kind are split into contiguous blocks. lncRNA-disease,
miRNA-disease and lncRNA-miRNA links are drawn with probability ``density``
inside matching blocks, then a ``noise`` fraction of those links is moved
to random cells outside the blocks. Disease terms hang under one ontology group per
block; a ``noise`` fraction of diseases is attached to a random group, and
``dag_missing`` of them are left out of the ontology.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import AssociationMatrix, DiseaseDag, EntityCatalog, write_association_tsv, write_dag_tsv

# Frozen parameters of the acceptance dataset.
ACCEPTANCE = dict(n_lnc=60, n_dis=80, n_mir=40, blocks=4, noise=0.05, density=0.8, dag_missing=0.05, seed=42)


@dataclass(frozen=True)
class SyntheticData:
    ld: AssociationMatrix
    md: AssociationMatrix
    lm: AssociationMatrix
    dag: DiseaseDag

    def write(self, out_dir) -> dict[str, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {name: out / f"{name}.tsv" for name in ("ld", "md", "ml", "dag")}
        write_association_tsv(self.ld, paths["ld"])
        write_association_tsv(self.md, paths["md"])
        write_association_tsv(self.lm, paths["ml"])
        write_dag_tsv(self.dag, paths["dag"])
        return paths


def _block_of(n: int, blocks: int) -> np.ndarray:
    return np.arange(n) * blocks // n


def _planted(rng, rows, cols, density, noise):
    same = rows[:, None] == cols[None, :]
    values = same & (rng.random(same.shape) < density)
    # relocate a `noise` fraction of the planted links to random off-block cells
    planted = np.flatnonzero(values)
    n_moved = int(round(noise * len(planted)))
    off_block = np.flatnonzero(~same)
    if n_moved:
        values.flat[rng.choice(planted, n_moved, replace=False)] = False
        values.flat[rng.choice(off_block, n_moved, replace=False)] = True
    return values.astype(np.float64)


def generate(
    n_lnc: int = 60,
    n_dis: int = 80,
    n_mir: int = 40,
    blocks: int = 4,
    noise: float = 0.05,
    density: float = 0.8,
    dag_missing: float = 0.05,
    seed: int = 42,
) -> SyntheticData:
    rng = np.random.default_rng(seed)
    lnc_b, dis_b, mir_b = _block_of(n_lnc, blocks), _block_of(n_dis, blocks), _block_of(n_mir, blocks)
    lncs = EntityCatalog("lncRNA", [f"lnc{i:03d}" for i in range(n_lnc)])
    dis = EntityCatalog("disease", [f"dis{i:03d}" for i in range(n_dis)])
    mirs = EntityCatalog("miRNA", [f"mir{i:03d}" for i in range(n_mir)])

    ld = _planted(rng, lnc_b, dis_b, density, noise)
    md = _planted(rng, mir_b, dis_b, density, noise)
    lm = _planted(rng, lnc_b, mir_b, density, noise)
    # every entity keeps at least one link so the files define the full universes
    for mat, row_b, col_b in ((ld, lnc_b, dis_b), (md, mir_b, dis_b), (lm, lnc_b, mir_b)):
        for i in np.flatnonzero(mat.sum(axis=1) == 0):
            mat[i, rng.choice(np.flatnonzero(col_b == row_b[i]))] = 1.0
        for j in np.flatnonzero(mat.sum(axis=0) == 0):
            mat[rng.choice(np.flatnonzero(row_b == col_b[j])), j] = 1.0

    terms = ["root"] + [f"group{b}" for b in range(blocks)]
    edges = [(terms.index(f"group{b}"), 0) for b in range(blocks)]
    sub = {}
    for b in range(blocks):
        for s in range(2):
            sub[b, s] = len(terms)
            terms.append(f"group{b}_sub{s}")
            edges.append((sub[b, s], b + 1))
    for j in range(n_dis):
        if rng.random() < dag_missing:
            continue
        group = int(rng.integers(blocks)) if rng.random() < noise else int(dis_b[j])
        node = len(terms)
        terms.append(dis.names[j])
        first = int(rng.integers(2))
        edges.append((node, sub[group, first]))
        if rng.random() < 0.2:
            edges.append((node, sub[group, 1 - first]))
    dag = DiseaseDag.from_edges(terms, edges)

    return SyntheticData(
        AssociationMatrix(lncs, dis, ld),
        AssociationMatrix(mirs, dis, md),
        AssociationMatrix(lncs, mirs, lm),
        dag,
    )
