"""Undirected weighted vertex graph in CSR form, as consumed by the engine."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .network import CONCEPTS, PAIRS, concept_of


class GraphFormatError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class EngineGraph:
    """Vertices sorted by id; each vertex's neighbors sorted by id.

    ``rev[e]`` is the slot of the mirror edge: if slot ``e`` of ``u`` points at
    ``v``, then slot ``rev[e]`` of ``v`` points back at ``u``.
    """

    ids: np.ndarray
    concepts: np.ndarray
    indptr: np.ndarray
    indices: np.ndarray
    weights: np.ndarray
    rev: np.ndarray

    @property
    def num_vertices(self):
        return len(self.ids)

    @property
    def num_slots(self):
        return len(self.indices)

    @property
    def num_edges(self):
        return len(self.indices) // 2

    def index(self, vid):
        i = int(np.searchsorted(self.ids, vid))
        if i >= len(self.ids) or self.ids[i] != vid:
            raise KeyError(f"unknown vertex id {vid}")
        return i

    def neighbors(self, vid):
        i = self.index(vid)
        lo, hi = self.indptr[i], self.indptr[i + 1]
        return [(int(self.ids[j]), float(w)) for j, w in zip(self.indices[lo:hi], self.weights[lo:hi])]

    def degree(self):
        return np.diff(self.indptr)

    def same_as(self, other):
        return (
            np.array_equal(self.ids, other.ids)
            and np.array_equal(self.concepts, other.concepts)
            and np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.indices, other.indices)
            and np.array_equal(self.weights, other.weights)
        )

    __eq__ = same_as
    __hash__ = None

    @classmethod
    def from_edges(cls, ids, concepts, src, dst, weight):
        """Build from undirected edges listed once each (``src != dst``)."""
        ids = np.asarray(ids, dtype=np.int64)
        order = np.argsort(ids, kind="stable")
        ids = ids[order]
        concepts = np.asarray(concepts, dtype=np.int8)[order]
        if len(ids) and np.any(ids[1:] == ids[:-1]):
            dup = ids[1:][ids[1:] == ids[:-1]][0]
            raise GraphFormatError(f"duplicate vertex id {dup}")
        src = np.asarray(src, dtype=np.int64)
        dst = np.asarray(dst, dtype=np.int64)
        weight = np.asarray(weight, dtype=float)
        n = len(ids)
        if len(src) == 0:
            z = np.zeros(0, dtype=np.int64)
            return cls(ids, concepts, np.zeros(n + 1, dtype=np.int64), z, np.zeros(0), z.copy())
        si = np.searchsorted(ids, src)
        di = np.searchsorted(ids, dst)
        for name, arr, idx in (("source", src, si), ("neighbor", dst, di)):
            bad = (idx >= n) | (ids[np.minimum(idx, n - 1)] != arr)
            if np.any(bad):
                raise GraphFormatError(f"dangling {name} id {arr[np.flatnonzero(bad)[0]]}")
        if np.any(si == di):
            raise GraphFormatError("self loops are not allowed")
        if np.any(weight <= 0):
            raise GraphFormatError("edge weights must be positive")
        rows = np.concatenate([si, di])
        cols = np.concatenate([di, si])
        w = np.concatenate([weight, weight])
        key = rows * n + cols
        order = np.argsort(key, kind="stable")
        key = key[order]
        if np.any(key[1:] == key[:-1]):
            k = key[1:][key[1:] == key[:-1]][0]
            raise GraphFormatError(f"duplicate edge {ids[k // n]}-{ids[k % n]}")
        rows, cols, w = rows[order], cols[order], w[order]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows, minlength=n), out=indptr[1:])
        rev = np.searchsorted(key, cols * n + rows).astype(np.int64)
        return cls(ids, concepts, indptr, cols.astype(np.int64), w, rev)

    @classmethod
    def from_adjacency(cls, vertices, adjacency):
        """``vertices``: iterable of (id, concept); ``adjacency``: id -> [(nbr, w)].

        Every entry must have a mirror entry with an identical weight.
        """
        vertices = list(vertices)
        ids = [v for v, _ in vertices]
        concepts = [int(c) for _, c in vertices]
        known = set(ids)
        seen = {}
        for u, lst in adjacency.items():
            if u not in known:
                raise GraphFormatError(f"adjacency for unknown vertex {u}")
            for v, w in lst:
                if v not in known:
                    raise GraphFormatError(f"vertex {u} references unknown neighbor {v}")
                if (u, v) in seen:
                    raise GraphFormatError(f"duplicate edge {u}-{v}")
                seen[(u, v)] = float(w)
        src, dst, wts = [], [], []
        for (u, v), w in seen.items():
            m = seen.get((v, u))
            if m is None:
                raise GraphFormatError(f"edge {u}-{v} has no mirror entry")
            if m != w:
                raise GraphFormatError(f"edge {u}-{v} weight {w!r} != mirror weight {m!r}")
            if u < v:
                src.append(u)
                dst.append(v)
                wts.append(w)
        return cls.from_edges(ids, concepts, src, dst, wts)

    @classmethod
    def from_network(cls, net):
        """Vertices for every registered entity, edges for every nonzero normalized weight."""
        ids, concepts = [], []
        for c in CONCEPTS:
            n = net.sizes[c]
            ids.append(3 * np.arange(n, dtype=np.int64) + int(c))
            concepts.append(np.full(n, int(c), dtype=np.int8))
        src, dst, w = [], [], []
        for c in CONCEPTS:
            upper = sp.triu(sp.csr_matrix(net.S[c]), 1).tocoo()
            keep = upper.data > 0
            src.append(3 * upper.row[keep].astype(np.int64) + int(c))
            dst.append(3 * upper.col[keep].astype(np.int64) + int(c))
            w.append(upper.data[keep])
        for c1, c2 in PAIRS:
            m = sp.coo_matrix(net.Sx[(c1, c2)])
            keep = m.data > 0
            src.append(3 * m.row[keep].astype(np.int64) + int(c1))
            dst.append(3 * m.col[keep].astype(np.int64) + int(c2))
            w.append(m.data[keep])
        return cls.from_edges(
            np.concatenate(ids), np.concatenate(concepts),
            np.concatenate(src), np.concatenate(dst), np.concatenate(w),
        )

    def vertex_concept(self, vid):
        return concept_of(vid)


def schedule_order(ids):
    """Seed order: all drugs by ascending id, then diseases, then targets."""
    ids = np.asarray(ids, dtype=np.int64)
    conc = (ids - 1) % 3
    order = np.lexsort((ids, conc))
    return ids[order]

