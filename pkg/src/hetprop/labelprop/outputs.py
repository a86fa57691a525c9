"""Symmetrized interaction matrices and ranked candidate lists."""
from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from ..network import CONCEPTS, Concept, concept_of, index_of, to_dense
from .driver import IncompleteResultsError

# all six blocks in output order, each (row concept, col concept) with row <= col
BLOCKS = (
    (Concept.DRUG, Concept.DRUG),
    (Concept.DRUG, Concept.DISEASE),
    (Concept.DRUG, Concept.TARGET),
    (Concept.DISEASE, Concept.DISEASE),
    (Concept.DISEASE, Concept.TARGET),
    (Concept.TARGET, Concept.TARGET),
)


def block_name(c1, c2):
    return f"{Concept(c1).label}_{Concept(c2).label}"


@dataclass(eq=False)
class PredictionSet:
    names: dict          # concept -> entity names (registry order)
    matrices: dict       # (c1, c2) with c1 <= c2 -> scores
    known: dict          # (c1, c2) -> bool mask of input interactions (hetero blocks)

    def block(self, c1, c2):
        c1, c2 = Concept(c1), Concept(c2)
        if c1 <= c2:
            return self.matrices[(c1, c2)]
        return self.matrices[(c2, c1)].T

    def known_block(self, c1, c2):
        c1, c2 = Concept(c1), Concept(c2)
        if c1 == c2:
            return np.zeros((len(self.names[c1]), len(self.names[c2])), dtype=bool)
        if c1 < c2:
            return self.known[(c1, c2)]
        return self.known[(c2, c1)].T

    def score(self, u, v):
        cu, cv = concept_of(u), concept_of(v)
        return float(self.block(cu, cv)[index_of(u), index_of(v)])


def symmetrize_outputs(raw, names, known=None):
    """M_{c1,c2}(u, v) = (f_{seed=u}(v) + f_{seed=v}(u)) / 2 for all six blocks.

    Every vertex of the registries must have been a seed in ``raw``.
    """
    names = {Concept(c): tuple(names[c]) for c in CONCEPTS}
    done = set(int(s) for s in raw.seeds_done)
    for c in CONCEPTS:
        for x in range(len(names[c])):
            vid = 3 * x + int(c)
            if vid not in done:
                raise IncompleteResultsError(f"no results for seed {vid} ({names[c][x]})")
    sizes = {c: len(names[c]) for c in CONCEPTS}
    mats = {(c1, c2): symmetrize_block(raw, c1, c2, sizes) for c1, c2 in BLOCKS}
    kn = {}
    for c1, c2 in BLOCKS:
        if c1 != c2:
            if known is not None and (c1, c2) in known:
                kn[(c1, c2)] = to_dense(known[(c1, c2)]) != 0
            else:
                kn[(c1, c2)] = np.zeros((sizes[c1], sizes[c2]), dtype=bool)
    return PredictionSet(names, mats, kn)


def raw_block(raw, seed_concept, vertex_concept, sizes):
    """Labels f_{seed=u}(v) for u in ``seed_concept``, v in ``vertex_concept``."""
    a, b = Concept(seed_concept), Concept(vertex_concept)
    out = np.zeros((sizes[a], sizes[b]))
    if len(raw.seed):
        m = ((raw.seed - 1) % 3 + 1 == int(a)) & ((raw.vertex - 1) % 3 + 1 == int(b))
        out[(raw.seed[m] - 1) // 3, (raw.vertex[m] - 1) // 3] = raw.value[m]
    return out


def symmetrize_block(raw, c1, c2, sizes):
    """(f_{seed=u}(v) + f_{seed=v}(u)) / 2 for u in ``c1``, v in ``c2``."""
    return 0.5 * (raw_block(raw, c1, c2, sizes) + raw_block(raw, c2, c1, sizes).T)


def known_from_network(net):
    return {(c1, c2): to_dense(net.relation[(c1, c2)]) != 0 for c1, c2 in net.relation}


@dataclass(frozen=True)
class Candidate:
    vertex: int
    name: str
    score: float
    known: bool


def rank_candidates(pred, entity, target_concept, k=None, exclude_self=True):
    """Top-``k`` entities of ``target_concept`` for ``entity`` (a vertex id).

    Descending score, ties by ascending vertex id. ``known`` marks pairs that
    were interactions in the input.
    """
    entity = int(entity)
    if entity < 1:
        raise KeyError(f"unknown entity {entity}")
    c = concept_of(entity)
    x = index_of(entity)
    if x >= len(pred.names[c]):
        raise KeyError(f"unknown entity {entity}")
    tc = Concept.parse(target_concept)
    scores = pred.block(c, tc)[x]
    known = pred.known_block(c, tc)[x]
    cand = np.arange(len(scores))
    if exclude_self and tc == c:
        cand = cand[cand != x]
    # ascending index == ascending vertex id within one concept
    order = cand[np.lexsort((cand, -scores[cand]))]
    if k is not None:
        order = order[:k]
    return [
        Candidate(3 * int(j) + int(tc), pred.names[tc][j], float(scores[j]), bool(known[j]))
        for j in order
    ]


def write_predictions(pred, directory):
    """Six TSV matrices named by concept pair, e.g. ``drug_target.tsv``."""
    os.makedirs(directory, exist_ok=True)
    paths = {}
    for c1, c2 in BLOCKS:
        p = os.path.join(directory, f"{block_name(c1, c2)}.tsv")
        m = pred.matrices[(c1, c2)]
        with open(p, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\t" + "\t".join(pred.names[c2]) + "\n")
            for name, row in zip(pred.names[c1], m):
                fh.write(name + "\t" + "\t".join("%.17g" % v for v in row) + "\n")
        paths[(c1, c2)] = p
    return paths


def read_predictions(directory, known=None):
    mats, names = {}, {}
    for c1, c2 in BLOCKS:
        p = os.path.join(directory, f"{block_name(c1, c2)}.tsv")
        m = _read_tsv(p)
        mats[(c1, c2)] = m[2]
        names[c1], names[c2] = m[0], m[1]
    kn = known or {}
    sizes = {c: len(names[c]) for c in CONCEPTS}
    full = {}
    for c1, c2 in BLOCKS:
        if c1 != c2:
            full[(c1, c2)] = kn.get((c1, c2), np.zeros((sizes[c1], sizes[c2]), dtype=bool))
    return PredictionSet(names, mats, full)


def _read_tsv(path):
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    cols = tuple(lines[0].split("\t")[1:])
    rows, vals = [], []
    for line in lines[1:]:
        cells = line.split("\t")
        rows.append(cells[0])
        vals.append([float(v) for v in cells[1:]])
    return tuple(rows), cols, np.array(vals, dtype=float).reshape(len(rows), len(cols))
