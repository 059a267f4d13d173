"""Entity catalogs, association matrices, the disease DAG and fold masks."""

from __future__ import annotations

from dataclasses import dataclass, field
from graphlib import CycleError, TopologicalSorter
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .errors import DataError

KINDS = ("lncRNA", "disease", "miRNA")


def normalize_name(name: str) -> str:
    return name.strip().casefold()


@dataclass(frozen=True)
class EntityCatalog:
    """Ordered, unique set of entity names of one kind.

    Lookup is by trimmed, case-folded name; ``names`` keeps the spelling
    seen first.
    """

    kind: str
    names: tuple[str, ...]
    index: dict[str, int] = field(repr=False, compare=False)

    def __init__(self, kind: str, names: Iterable[str]):
        if kind not in KINDS:
            raise ValueError(f"unknown entity kind {kind!r}")
        cleaned: list[str] = []
        index: dict[str, int] = {}
        for raw in names:
            name = raw.strip()
            key = normalize_name(name)
            if not key:
                raise DataError(f"empty {kind} name")
            if key in index:
                raise DataError(f"duplicate {kind} name {name!r}")
            index[key] = len(cleaned)
            cleaned.append(name)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "names", tuple(cleaned))
        object.__setattr__(self, "index", index)

    def __len__(self) -> int:
        return len(self.names)

    def __contains__(self, name: str) -> bool:
        return normalize_name(name) in self.index

    def position(self, name: str) -> int:
        try:
            return self.index[normalize_name(name)]
        except KeyError:
            raise DataError(f"unknown {self.kind} {name!r}") from None

    def same_as(self, other: "EntityCatalog") -> bool:
        return self.kind == other.kind and [normalize_name(n) for n in self.names] == [
            normalize_name(n) for n in other.names
        ]


@dataclass(frozen=True)
class AssociationMatrix:
    """Binary incidence matrix between two catalogs."""

    rows: EntityCatalog
    cols: EntityCatalog
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.shape != (len(self.rows), len(self.cols)):
            raise DataError(
                f"matrix shape {values.shape} does not match catalogs "
                f"({len(self.rows)}, {len(self.cols)})"
            )
        if not np.all((values == 0) | (values == 1)):
            raise DataError("association matrix entries must be 0 or 1")
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def positives(self) -> list[tuple[int, int]]:
        rows, cols = np.nonzero(self.values)
        return list(zip(rows.tolist(), cols.tolist()))

    def n_positives(self) -> int:
        return int(self.values.sum())

    def transpose(self) -> "AssociationMatrix":
        return AssociationMatrix(self.cols, self.rows, self.values.T)

    def with_values(self, values: np.ndarray) -> "AssociationMatrix":
        return AssociationMatrix(self.rows, self.cols, values)

    def reindex(self, rows: EntityCatalog, cols: EntityCatalog) -> "AssociationMatrix":
        """Project onto other catalogs; pairs with names outside them are dropped."""
        if rows.kind != self.rows.kind or cols.kind != self.cols.kind:
            raise DataError(
                f"cannot reindex {self.rows.kind}x{self.cols.kind} onto "
                f"{rows.kind}x{cols.kind}"
            )
        out = np.zeros((len(rows), len(cols)))
        row_map = np.array([rows.index.get(normalize_name(n), -1) for n in self.rows.names], dtype=int)
        col_map = np.array([cols.index.get(normalize_name(n), -1) for n in self.cols.names], dtype=int)
        r, c = np.nonzero(self.values)
        keep = (row_map[r] >= 0) & (col_map[c] >= 0)
        out[row_map[r[keep]], col_map[c[keep]]] = 1.0
        return AssociationMatrix(rows, cols, out)


@dataclass(frozen=True)
class DiseaseDag:
    """Disease ontology as child -> parents links.

    ``order`` lists node indices with every child before its parents.
    """

    nodes: EntityCatalog
    parents: tuple[frozenset[int], ...]
    order: tuple[int, ...] = field(repr=False)

    @classmethod
    def from_edges(cls, names: Iterable[str], edges: Iterable[tuple[int, int]]) -> "DiseaseDag":
        nodes = EntityCatalog("disease", names)
        parents: list[set[int]] = [set() for _ in range(len(nodes))]
        for child, parent in edges:
            if child == parent:
                raise DataError(f"self-loop on disease term {nodes.names[child]!r}")
            parents[child].add(parent)
        # TopologicalSorter emits a node after its predecessors; children come first
        # when parents are declared as successors.
        sorter: TopologicalSorter = TopologicalSorter()
        for child in range(len(nodes)):
            sorter.add(child)
            for parent in parents[child]:
                sorter.add(parent, child)
        try:
            order = tuple(sorter.static_order())
        except CycleError as exc:
            cycle = exc.args[1]
            raise DataError(f"disease DAG has a cycle through {nodes.names[cycle[0]]!r}") from None
        return cls(nodes, tuple(frozenset(p) for p in parents), order)

    def __len__(self) -> int:
        return len(self.nodes)

    def children(self) -> list[list[int]]:
        kids: list[list[int]] = [[] for _ in range(len(self))]
        for child, ps in enumerate(self.parents):
            for p in ps:
                kids[p].append(child)
        return kids

    def ancestors(self, node: int) -> set[int]:
        """Node itself plus every term reachable through parent links."""
        seen = {node}
        stack = [node]
        while stack:
            for p in self.parents[stack.pop()]:
                if p not in seen:
                    seen.add(p)
                    stack.append(p)
        return seen


@dataclass(frozen=True)
class FoldMask:
    held_out: frozenset[tuple[int, int]]
    fold_id: int

    def __len__(self) -> int:
        return len(self.held_out)


def _data_lines(path: Path) -> Iterator[tuple[int, list[str]]]:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror or exc}") from exc
    except UnicodeDecodeError as exc:
        raise DataError(f"{path} is not valid UTF-8") from exc
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) < 2 or not fields[0].strip() or not fields[1].strip():
            raise DataError(f"{path}:{lineno}: expected two tab-separated names")
        yield lineno, [f.strip() for f in fields]


def _first_seen(names: Iterable[str]) -> list[str]:
    seen: dict[str, str] = {}
    for name in names:
        seen.setdefault(normalize_name(name), name)
    return list(seen.values())


def load_associations(path, row_kind: str, col_kind: str) -> AssociationMatrix:
    path = Path(path)
    pairs = [(f[0], f[1]) for _, f in _data_lines(path)]
    if not pairs:
        raise DataError(f"{path}: no associations")
    rows = EntityCatalog(row_kind, _first_seen(r for r, _ in pairs))
    cols = EntityCatalog(col_kind, _first_seen(c for _, c in pairs))
    values = np.zeros((len(rows), len(cols)))
    for r, c in pairs:
        values[rows.position(r), cols.position(c)] = 1.0
    return AssociationMatrix(rows, cols, values)


def load_dag(path) -> DiseaseDag:
    path = Path(path)
    edges = [(f[0], f[1]) for _, f in _data_lines(path)]
    if not edges:
        raise DataError(f"{path}: no DAG edges")
    names = _first_seen(n for edge in edges for n in edge)
    lookup = {normalize_name(n): i for i, n in enumerate(names)}
    return DiseaseDag.from_edges(
        names, [(lookup[normalize_name(c)], lookup[normalize_name(p)]) for c, p in edges]
    )


def apply_mask(ld: AssociationMatrix, mask: FoldMask) -> AssociationMatrix:
    values = np.array(ld.values)
    n_rows, n_cols = values.shape
    for r, c in mask.held_out:
        if not (0 <= r < n_rows and 0 <= c < n_cols):
            raise DataError(f"masked pair ({r}, {c}) is out of range")
        if values[r, c] != 1:
            raise DataError(f"masked pair ({r}, {c}) is not a known association")
        values[r, c] = 0.0
    return ld.with_values(values)


def write_association_tsv(matrix: AssociationMatrix, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r, c in matrix.positives():
            fh.write(f"{matrix.rows.names[r]}\t{matrix.cols.names[c]}\n")


def write_dag_tsv(dag: DiseaseDag, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for child, ps in enumerate(dag.parents):
            for p in sorted(ps):
                fh.write(f"{dag.nodes.names[child]}\t{dag.nodes.names[p]}\n")
