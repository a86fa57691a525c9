"""Preprocessing: parse the six input matrices, align per-concept registries,
assemble the network and (de)serialize the engine input graph.

Matrix files are tab separated; the first row holds column names and the
first column row names (the top-left cell is ignored).
"""
from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .graph import EngineGraph, GraphFormatError
from .network import (
    CONCEPTS,
    DEFAULT_COUPLING,
    PAIRS,
    Concept,
    HeterogeneousNetwork,
    ValidationError,
    check_proximity,
    check_relation,
    concept_of,
    index_of,
    to_dense,
)

SIMILARITY = "similarity"
ASSOCIATION = "association"

# role -> (kind, row concept, col concept)
ROLES = {
    "drug": (SIMILARITY, Concept.DRUG, Concept.DRUG),
    "disease": (SIMILARITY, Concept.DISEASE, Concept.DISEASE),
    "target": (SIMILARITY, Concept.TARGET, Concept.TARGET),
    "drug_disease": (ASSOCIATION, Concept.DRUG, Concept.DISEASE),
    "drug_target": (ASSOCIATION, Concept.DRUG, Concept.TARGET),
    "disease_target": (ASSOCIATION, Concept.DISEASE, Concept.TARGET),
}


class ParseError(ValueError):
    def __init__(self, path, line, message):
        super().__init__(f"{path}:{line}: {message}")
        self.path = path
        self.line = line


@dataclass(frozen=True, eq=False)
class NamedMatrix:
    row_names: tuple
    col_names: tuple
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (len(self.row_names), len(self.col_names)):
            raise ValidationError(
                f"values are {self.values.shape} but names give "
                f"{len(self.row_names)}x{len(self.col_names)}"
            )
        for axis, names in (("row", self.row_names), ("column", self.col_names)):
            if len(set(names)) != len(names):
                raise ValidationError(f"duplicate {axis} names")


def parse_matrix(path, kind):
    if kind not in (SIMILARITY, ASSOCIATION):
        raise ValueError(f"unknown matrix kind {kind!r}")
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    while lines and not lines[-1].strip():
        lines.pop()
    if not lines:
        raise ParseError(path, 1, "empty file")
    header = lines[0].split("\t")
    col_names = tuple(h.strip() for h in header[1:])
    if not col_names:
        raise ParseError(path, 1, "header has no column names")
    row_names, rows = [], []
    for lineno, line in enumerate(lines[1:], start=2):
        cells = line.split("\t")
        if len(cells) != len(col_names) + 1:
            raise ParseError(path, lineno, f"expected {len(col_names) + 1} fields, got {len(cells)}")
        try:
            rows.append([float(x) for x in cells[1:]])
        except ValueError as exc:
            raise ParseError(path, lineno, str(exc)) from None
        row_names.append(cells[0].strip())
    values = np.array(rows, dtype=float).reshape(len(rows), len(col_names))
    m = NamedMatrix(tuple(row_names), col_names, values)
    where = os.path.basename(str(path))
    if kind == SIMILARITY:
        if m.row_names != m.col_names:
            raise ValidationError(f"{where}: similarity matrix row and column names differ")
        check_proximity(values, where)
    else:
        check_relation(values, where)
    return m


def write_matrix(path, row_names, col_names, values):
    values = to_dense(values)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\t" + "\t".join(col_names) + "\n")
        for name, row in zip(row_names, values):
            fh.write(name + "\t" + "\t".join(_fmt(x) for x in row) + "\n")


def _fmt(x):
    return "%.17g" % x if x != int(x) else str(int(x))


def homogenize_dimensions(name_lists):
    """Registry for one concept: sorted union of the names on every axis that mentions it."""
    seen = set()
    for names in name_lists:
        seen.update(names)
    return tuple(sorted(seen))


def align(matrix, row_registry, col_registry):
    """Expand ``matrix`` onto the registries; absent entities get zero rows/columns."""
    rpos = {n: i for i, n in enumerate(row_registry)}
    cpos = {n: i for i, n in enumerate(col_registry)}
    ri = np.array([rpos[n] for n in matrix.row_names], dtype=np.int64)
    ci = np.array([cpos[n] for n in matrix.col_names], dtype=np.int64)
    out = np.zeros((len(row_registry), len(col_registry)))
    if len(ri) and len(ci):
        out[np.ix_(ri, ci)] = matrix.values
    return out


def registries(six):
    axes = {c: [] for c in CONCEPTS}
    for role, m in six.items():
        _, rc, cc = ROLES[role]
        axes[rc].append(m.row_names)
        axes[cc].append(m.col_names)
    return {c: homogenize_dimensions(axes[c]) for c in CONCEPTS}


def assemble_network(six, coupling=DEFAULT_COUPLING):
    """Six NamedMatrices keyed by role (see ``ROLES``) -> normalized network."""
    missing = set(ROLES) - set(six)
    if missing:
        raise ValidationError(f"missing matrices: {sorted(missing)}")
    reg = registries(six)
    prox, rel = {}, {}
    for role, (kind, rc, cc) in ROLES.items():
        dense = align(six[role], reg[rc], reg[cc])
        if kind == SIMILARITY:
            prox[rc] = dense
        else:
            rel[(rc, cc)] = dense
    return HeterogeneousNetwork.build(reg, prox, rel, coupling)


def load_six(paths):
    """``paths``: role -> file path."""
    return {role: parse_matrix(paths[role], ROLES[role][0]) for role in ROLES}


def default_paths(directory):
    return {role: os.path.join(directory, f"{role}.tsv") for role in ROLES}


def write_six(net, directory):
    os.makedirs(directory, exist_ok=True)
    for role, (kind, rc, cc) in ROLES.items():
        m = net.proximity[rc] if kind == SIMILARITY else net.relation[(rc, cc)]
        write_matrix(os.path.join(directory, f"{role}.tsv"), net.names[rc], net.names[cc], m)
    return default_paths(directory)


def save_network(net, path):
    """Raw matrices and registries as one ``.npz`` archive."""
    arrays = {"coupling": np.array(net.coupling)}
    for c in CONCEPTS:
        arrays[f"names_{c.label}"] = np.array(net.names[c], dtype=object)
        arrays[f"P_{c.label}"] = to_dense(net.proximity[c])
    for c1, c2 in PAIRS:
        arrays[f"R_{c1.label}_{c2.label}"] = to_dense(net.relation[(c1, c2)])
    np.savez_compressed(path, **arrays)


def load_network(path):
    z = np.load(path, allow_pickle=True)
    names = {c: tuple(z[f"names_{c.label}"].tolist()) for c in CONCEPTS}
    prox = {c: z[f"P_{c.label}"] for c in CONCEPTS}
    rel = {(c1, c2): z[f"R_{c1.label}_{c2.label}"] for c1, c2 in PAIRS}
    return HeterogeneousNetwork.build(names, prox, rel, float(z["coupling"]))


# -- engine input ------------------------------------------------------------


def write_engine_input(graph_or_net, path):
    """One line per vertex: ``id<TAB>concept<TAB>nbr,weight nbr,weight ...``."""
    g = graph_or_net if isinstance(graph_or_net, EngineGraph) else EngineGraph.from_network(graph_or_net)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for i, vid in enumerate(g.ids):
            lo, hi = g.indptr[i], g.indptr[i + 1]
            pairs = " ".join(
                f"{g.ids[j]},{w:.17g}" for j, w in zip(g.indices[lo:hi], g.weights[lo:hi])
            )
            fh.write(f"{vid}\t{g.concepts[i]}\t{pairs}\n")
    return g


def read_engine_input(path):
    vertices, adjacency = [], {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            cells = line.split("\t")
            if len(cells) != 3:
                raise GraphFormatError(f"{path}:{lineno}: expected 3 tab-separated fields")
            try:
                vid, conc = int(cells[0]), int(cells[1])
            except ValueError:
                raise GraphFormatError(f"{path}:{lineno}: malformed id or concept") from None
            if vid in adjacency:
                raise GraphFormatError(f"{path}:{lineno}: duplicate vertex id {vid}")
            if vid < 1 or int(concept_of(vid)) != conc:
                raise GraphFormatError(f"{path}:{lineno}: id {vid} does not belong to concept {conc}")
            nbrs = []
            for tok in cells[2].split():
                try:
                    a, b = tok.split(",")
                    nbrs.append((int(a), float(b)))
                except ValueError:
                    raise GraphFormatError(f"{path}:{lineno}: bad neighbor entry {tok!r}") from None
            vertices.append((vid, conc))
            adjacency[vid] = nbrs
    return EngineGraph.from_adjacency(vertices, adjacency)


def write_registry(names, path):
    """Sidecar ``id<TAB>concept<TAB>name`` lines, ordered by id."""
    rows = []
    for c in CONCEPTS:
        for x, name in enumerate(names[c]):
            rows.append((3 * x + int(c), int(c), name))
    rows.sort()
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for vid, c, name in rows:
            fh.write(f"{vid}\t{c}\t{name}\n")


def read_registry(path):
    found = {c: {} for c in CONCEPTS}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            try:
                vid, c, name = line.split("\t")
                vid, c = int(vid), Concept(int(c))
            except ValueError:
                raise ParseError(path, lineno, "expected id, concept, name") from None
            found[c][index_of(vid)] = name
    names = {}
    for c in CONCEPTS:
        idx = found[c]
        if sorted(idx) != list(range(len(idx))):
            raise ParseError(path, 0, f"{c.label} ids are not contiguous")
        names[c] = tuple(idx[i] for i in range(len(idx)))
    return names


def relation_from_graph(graph, c1, c2, sizes):
    """Binary relation block recovered from heterogeneous edges of ``graph``."""
    c1, c2 = Concept(c1), Concept(c2)
    src = np.repeat(graph.ids, np.diff(graph.indptr))
    dst = graph.ids[graph.indices]
    keep = ((src - 1) % 3 + 1 == int(c1)) & ((dst - 1) % 3 + 1 == int(c2))
    m = sp.coo_matrix(
        (np.ones(int(keep.sum())), ((src[keep] - 1) // 3, (dst[keep] - 1) // 3)),
        shape=(sizes[c1], sizes[c2]),
    )
    return np.asarray(m.toarray() > 0)
