"""Undirected enterprise graph built by k-NN over cosine similarity of
industry/region profiles."""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError, ShapeError
from .numcore import as_matrix

# rows per similarity block; bounds memory at BLOCK x n doubles
BLOCK = 512


@dataclass(frozen=True, eq=False)
class EnterpriseGraph:
    node_count: int
    edges: np.ndarray  # (m, 2) int, each row (u, v) with u < v, sorted
    neighbors: tuple[np.ndarray, ...]

    @classmethod
    def from_edges(cls, node_count: int, pairs) -> "EnterpriseGraph":
        """Build from any iterable of (u, v) pairs; duplicates and orientation are normalized."""
        arr = np.asarray(list(pairs), dtype=np.int64).reshape(-1, 2)
        if arr.size and (arr.min() < 0 or arr.max() >= node_count):
            raise ShapeError(f"edge endpoint out of range for {node_count} nodes")
        if (arr[:, 0] == arr[:, 1]).any():
            raise ShapeError("self-edges are not allowed")
        arr = np.sort(arr, axis=1)
        arr = np.unique(arr, axis=0) if arr.size else arr.reshape(0, 2)
        nbrs: list[list[int]] = [[] for _ in range(node_count)]
        for u, v in arr:
            nbrs[u].append(int(v))
            nbrs[v].append(int(u))
        return cls(node_count, arr, tuple(np.array(sorted(x), dtype=np.int64) for x in nbrs))

    @property
    def edge_set(self) -> set[tuple[int, int]]:
        return {(int(u), int(v)) for u, v in self.edges}

    def degrees(self) -> np.ndarray:
        return np.array([len(x) for x in self.neighbors], dtype=np.int64)

    @cached_property
    def adjacency(self) -> sp.csr_matrix:
        """Symmetric 0/1 adjacency in CSR form, no diagonal."""
        n = self.node_count
        if len(self.edges) == 0:
            return sp.csr_matrix((n, n))
        u, v = self.edges[:, 0], self.edges[:, 1]
        rows = np.concatenate([u, v])
        cols = np.concatenate([v, u])
        a = sp.csr_matrix((np.ones(rows.size), (rows, cols)), shape=(n, n))
        a.sort_indices()
        return a

    def permuted(self, perm) -> "EnterpriseGraph":
        """Relabel so that new node i is old node perm[i]."""
        perm = np.asarray(perm)
        inv = np.empty_like(perm)
        inv[perm] = np.arange(perm.size)
        return EnterpriseGraph.from_edges(self.node_count, inv[self.edges])

    def write_edge_csv(self, path) -> None:
        with open(Path(path), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["src", "dst"])
            w.writerows(self.edges.tolist())


def cosine_similarity(profiles: np.ndarray, rows: slice | None = None) -> np.ndarray:
    """Cosine similarity of ``profiles[rows]`` against all profiles; zero-norm rows give 0.

    Products are accumulated one column at a time, so every entry is the same
    sequence of operations and identical profiles score identically wherever
    they sit. A BLAS product may round equal dot products differently by
    position, which would break the lower-index tie rule.
    """
    norms = np.sqrt(np.einsum("ij,ij->i", profiles, profiles))
    unit = np.divide(profiles, norms[:, None], out=np.zeros_like(profiles), where=norms[:, None] > 0)
    block = unit if rows is None else unit[rows]
    sim = np.zeros((block.shape[0], unit.shape[0]))
    for j in range(unit.shape[1]):
        sim += np.multiply.outer(block[:, j], unit[:, j])
    return sim


def build_knn_graph(profiles, k: int = 5) -> EnterpriseGraph:
    """Link each node to its ``k`` most similar other nodes, then symmetrize by union.

    Ties in similarity go to the lower node index.
    """
    x = as_matrix(profiles)
    n = x.shape[0]
    if n < 2:
        raise ConfigError(f"need at least 2 nodes to build a graph, got {n}")
    if k < 1 or k >= n:
        raise ConfigError(f"k must satisfy 1 <= k < n (n={n}), got k={k}")
    if not np.any(x):
        warnings.warn("all profiles are zero; graph has no edges", RuntimeWarning, stacklevel=2)
        return EnterpriseGraph.from_edges(n, [])

    pairs = []
    for start in range(0, n, BLOCK):
        stop = min(start + BLOCK, n)
        sim = cosine_similarity(x, slice(start, stop))
        local = np.arange(stop - start)
        sim[local, local + start] = -np.inf
        # stable sort on -sim keeps lower index first among equal similarities
        top = np.argsort(-sim, axis=1, kind="stable")[:, :k]
        src = np.repeat(np.arange(start, stop), k)
        pairs.append(np.column_stack([src, top.ravel()]))
    return EnterpriseGraph.from_edges(n, np.vstack(pairs))


class DegreeStats(NamedTuple):
    min: int
    max: int
    mean: float


def degree_stats(g: EnterpriseGraph) -> DegreeStats:
    if g.node_count == 0 or len(g.edges) == 0:
        return DegreeStats(0, 0, 0.0)
    deg = g.degrees()
    return DegreeStats(int(deg.min()), int(deg.max()), float(deg.mean()))
