"""Three-concept heterogeneous network: vertex ids, normalization, validation.

Drugs, diseases and targets each form a homogeneous similarity subnetwork;
binary association matrices connect them pairwise. Vertex ids interleave the
concepts: the x-th entity of a concept gets id ``3x + concept``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

DENSE_LIMIT = 64
SPECTRAL_TOL = 1e-9
# Each concept couples to two others; halving every relation block bounds the
# summed cross-concept operator by 1 so both propagation schemes contract.
DEFAULT_COUPLING = 0.5


class Concept(enum.IntEnum):
    DRUG = 1
    DISEASE = 2
    TARGET = 3

    @property
    def label(self):
        return self.name.lower()

    @classmethod
    def parse(cls, value):
        if isinstance(value, Concept):
            return value
        if isinstance(value, str):
            try:
                return cls[value.strip().upper()]
            except KeyError:
                pass
            if value.strip().isdigit():
                return cls(int(value))
            raise ValueError(f"unknown concept {value!r}")
        return cls(int(value))


CONCEPTS = (Concept.DRUG, Concept.DISEASE, Concept.TARGET)
PAIRS = (
    (Concept.DRUG, Concept.DISEASE),
    (Concept.DRUG, Concept.TARGET),
    (Concept.DISEASE, Concept.TARGET),
)


class ValidationError(ValueError):
    """Input matrix violates a structural rule."""


def vertex_id(concept, index):
    """Vertex id of the ``index``-th entity (zero-based) of ``concept``."""
    if index < 0:
        raise ValueError(f"index must be non-negative, got {index}")
    return 3 * int(index) + int(Concept(concept))


def concept_of(vid):
    if vid < 1:
        raise ValueError(f"vertex ids start at 1, got {vid}")
    return Concept((int(vid) - 1) % 3 + 1)


def index_of(vid):
    if vid < 1:
        raise ValueError(f"vertex ids start at 1, got {vid}")
    return (int(vid) - 1) // 3


def pair_key(c1, c2):
    """Canonical (row, col) ordering of a concept pair and whether it flipped."""
    c1, c2 = Concept(c1), Concept(c2)
    if c1 == c2:
        raise ValueError("a relation needs two distinct concepts")
    return ((c1, c2), False) if c1 < c2 else ((c2, c1), True)


def as_storage(m):
    """Dense below DENSE_LIMIT in both dimensions, CSR otherwise."""
    if sp.issparse(m):
        if m.shape[0] < DENSE_LIMIT and m.shape[1] < DENSE_LIMIT:
            return np.asarray(m.toarray(), dtype=float)
        return sp.csr_matrix(m, dtype=float)
    m = np.asarray(m, dtype=float)
    if m.ndim != 2:
        raise ValidationError(f"expected a 2-D matrix, got shape {m.shape}")
    if m.shape[0] < DENSE_LIMIT and m.shape[1] < DENSE_LIMIT:
        return m
    return sp.csr_matrix(m)


def to_dense(m):
    return np.asarray(m.toarray(), dtype=float) if sp.issparse(m) else np.asarray(m, dtype=float)


def _coo(m):
    c = sp.coo_matrix(m)
    return c.row, c.col, c.data


def _inv_sqrt(deg):
    out = np.zeros_like(deg, dtype=float)
    nz = deg > 0
    out[nz] = 1.0 / np.sqrt(deg[nz])
    return out


def check_proximity(P, name="proximity"):
    """Raise ValidationError naming the first non-square/negative/asymmetric entry."""
    if P.shape[0] != P.shape[1]:
        raise ValidationError(f"{name}: matrix is {P.shape[0]}x{P.shape[1]}, expected square")
    rows, cols, vals = _coo(P)
    if not np.all(np.isfinite(vals)):
        k = int(np.flatnonzero(~np.isfinite(vals))[0])
        raise ValidationError(f"{name}[{rows[k]},{cols[k]}] is not finite")
    if np.any(vals < 0):
        k = int(np.flatnonzero(vals < 0)[0])
        raise ValidationError(f"{name}[{rows[k]},{cols[k]}] = {vals[k]!r} is negative")
    diff = abs(sp.csr_matrix(P) - sp.csr_matrix(P).T)
    if diff.nnz:
        d = sp.coo_matrix(diff)
        scale = abs(sp.csr_matrix(P)).max() if sp.csr_matrix(P).nnz else 1.0
        bad = d.data > 1e-12 + 1e-9 * scale
        if np.any(bad):
            k = int(np.flatnonzero(bad)[0])
            i, j = int(d.row[k]), int(d.col[k])
            raise ValidationError(
                f"{name}[{i},{j}] != {name}[{j},{i}]: matrix is not symmetric"
            )


def check_relation(R, name="relation"):
    rows, cols, vals = _coo(R)
    bad = (vals != 0) & (vals != 1)
    if np.any(bad):
        k = int(np.flatnonzero(bad)[0])
        raise ValidationError(f"{name}[{rows[k]},{cols[k]}] = {vals[k]!r} is not binary")


def normalize_homogeneous(P):
    """Symmetric degree normalization ``D^-1/2 P D^-1/2``.

    The diagonal is dropped first (a self-loop would feed the vertex's own
    label back a second time). Zero-degree rows and columns stay zero.
    """
    check_proximity(P)
    A = sp.csr_matrix(P, dtype=float)
    A.setdiag(0.0)
    A.eliminate_zeros()
    d = _inv_sqrt(np.asarray(A.sum(axis=1)).ravel())
    S = sp.diags(d) @ A @ sp.diags(d)
    # exact symmetry regardless of rounding in the two-sided product
    S = (S + S.T) * 0.5
    return as_storage(S)


def normalize_heterogeneous(R):
    """Bipartite normalization ``Dr^-1/2 R Dc^-1/2`` with row/column degrees."""
    check_relation(R)
    A = sp.csr_matrix(R, dtype=float)
    A.eliminate_zeros()
    dr = _inv_sqrt(np.asarray(A.sum(axis=1)).ravel())
    dc = _inv_sqrt(np.asarray(A.sum(axis=0)).ravel())
    return as_storage(sp.diags(dr) @ A @ sp.diags(dc))


def spectral_radius_sym(S):
    """Largest |eigenvalue| of a symmetric matrix."""
    n = S.shape[0]
    if n == 0:
        return 0.0
    if not sp.issparse(S) or n <= 400:
        w = np.linalg.eigvalsh(to_dense(S))
        return float(np.max(np.abs(w)))
    vals = spla.eigsh(sp.csr_matrix(S), k=1, which="LM", return_eigenvectors=False)
    return float(np.max(np.abs(vals)))


def largest_singular(S):
    if min(S.shape) == 0:
        return 0.0
    if not sp.issparse(S) or max(S.shape) <= 400:
        return float(np.linalg.norm(to_dense(S), 2))
    vals = spla.svds(sp.csr_matrix(S), k=1, return_singular_vectors=False)
    return float(np.max(vals))


@dataclass(frozen=True)
class Violation:
    matrix: str
    rule: str
    index: tuple | None = None
    detail: str = ""

    def __str__(self):
        where = f"{self.matrix}{list(self.index) if self.index is not None else ''}"
        return f"{where}: {self.rule}" + (f" ({self.detail})" if self.detail else "")


@dataclass(frozen=True, eq=False)
class HeterogeneousNetwork:
    """Entity registries plus raw and normalized matrices.

    ``S[c]`` is the normalized similarity matrix of concept ``c`` and
    ``Sx[(c1, c2)]`` (with ``c1 < c2``) the normalized relation matrix scaled
    by ``coupling``. The raw inputs are kept so that masked copies can be
    re-normalized.
    """

    names: dict
    proximity: dict
    relation: dict
    S: dict
    Sx: dict
    coupling: float = DEFAULT_COUPLING
    meta: dict = field(default_factory=dict)

    @classmethod
    def build(cls, names, proximity, relation, coupling=DEFAULT_COUPLING, meta=None):
        names = {Concept(c): tuple(str(n) for n in names[c]) for c in CONCEPTS}
        if not 0 < coupling <= 1:
            raise ValidationError(f"coupling must lie in (0, 1], got {coupling}")
        P, S = {}, {}
        for c in CONCEPTS:
            m = proximity[c]
            check_proximity(m, f"P[{c.label}]")
            A = sp.csr_matrix(m, dtype=float)
            A.setdiag(0.0)
            A.eliminate_zeros()
            P[c] = as_storage(A)
            S[c] = normalize_homogeneous(P[c])
        R, Sx = {}, {}
        for c1, c2 in PAIRS:
            m = relation[(c1, c2)]
            check_relation(m, f"R[{c1.label},{c2.label}]")
            R[(c1, c2)] = as_storage(m)
            Sx[(c1, c2)] = as_storage(sp.csr_matrix(normalize_heterogeneous(m)) * coupling)
        net = cls(names, P, R, S, Sx, float(coupling), dict(meta or {}))
        report = validate_network(net)
        if report:
            raise ValidationError("; ".join(str(v) for v in report))
        return net

    @property
    def sizes(self):
        return {c: len(self.names[c]) for c in CONCEPTS}

    @property
    def num_vertices(self):
        return sum(self.sizes.values())

    def hetero(self, c1, c2):
        """Normalized (coupled) relation block oriented as ``c1`` rows, ``c2`` cols."""
        key, flipped = pair_key(c1, c2)
        m = self.Sx[key]
        return m.T if flipped else m

    def raw_relation(self, c1, c2):
        key, flipped = pair_key(c1, c2)
        m = self.relation[key]
        return m.T if flipped else m

    def with_relation(self, c1, c2, R):
        """Copy with relation ``(c1, c2)`` replaced and everything re-normalized."""
        key, flipped = pair_key(c1, c2)
        rel = dict(self.relation)
        rel[key] = R.T if flipped else R
        return HeterogeneousNetwork.build(self.names, self.proximity, rel, self.coupling, self.meta)

    def lookup(self, concept, name):
        concept = Concept(concept)
        try:
            return self.names[concept].index(name)
        except ValueError:
            raise KeyError(f"no {concept.label} named {name!r}") from None

    def num_edges(self):
        homo = sum(sp.triu(sp.csr_matrix(self.S[c]), 1).nnz for c in CONCEPTS)
        het = sum(sp.csr_matrix(self.Sx[p]).nnz for p in PAIRS)
        return homo + het


def _first_asym(S):
    A = sp.csr_matrix(S)
    d = sp.coo_matrix(abs(A - A.T))
    bad = d.data > 1e-12
    if not np.any(bad):
        return None
    k = int(np.flatnonzero(bad)[0])
    return int(d.row[k]), int(d.col[k])


def validate_network(net):
    """List every violated invariant of ``net``; empty when well formed."""
    out = []
    for c in CONCEPTS:
        n = len(net.names.get(c, ()))
        mismatched = []
        if net.S[c].shape != (n, n):
            mismatched.append(f"S[{c.label}] is {net.S[c].shape[0]}x{net.S[c].shape[1]}")
        for c1, c2 in PAIRS:
            m = net.Sx[(c1, c2)]
            if c == c1 and m.shape[0] != n:
                mismatched.append(f"Sx[{c1.label},{c2.label}] has {m.shape[0]} rows")
            if c == c2 and m.shape[1] != n:
                mismatched.append(f"Sx[{c1.label},{c2.label}] has {m.shape[1]} columns")
        if mismatched:
            out.append(
                Violation(
                    f"registry[{c.label}]",
                    "dimension mismatch",
                    None,
                    f"{n} names but " + ", ".join(mismatched),
                )
            )
        names = net.names.get(c, ())
        if len(set(names)) != len(names):
            out.append(Violation(f"registry[{c.label}]", "duplicate entity names"))
    for c in CONCEPTS:
        S = net.S[c]
        label = f"S[{c.label}]"
        if S.shape[0] != S.shape[1]:
            continue
        _, _, vals = _coo(S)
        if np.any(vals < 0):
            r, cc, v = _coo(S)
            k = int(np.flatnonzero(v < 0)[0])
            out.append(Violation(label, "negative entry", (int(r[k]), int(cc[k]))))
        asym = _first_asym(S)
        if asym is not None:
            out.append(Violation(label, "symmetry", asym, "S is not symmetric"))
            continue
        diag = sp.csr_matrix(S).diagonal()
        if np.any(diag != 0):
            k = int(np.flatnonzero(diag)[0])
            out.append(Violation(label, "nonzero diagonal", (k, k)))
        rho = spectral_radius_sym(S)
        if rho > 1 + SPECTRAL_TOL:
            out.append(Violation(label, "spectral radius > 1", None, f"{rho:.12g}"))
    for c1, c2 in PAIRS:
        m = net.Sx[(c1, c2)]
        label = f"Sx[{c1.label},{c2.label}]"
        r, cc, vals = _coo(m)
        if np.any(vals < 0):
            k = int(np.flatnonzero(vals < 0)[0])
            out.append(Violation(label, "negative entry", (int(r[k]), int(cc[k]))))
        sv = largest_singular(m)
        if sv > 1 + SPECTRAL_TOL:
            out.append(Violation(label, "largest singular value > 1", None, f"{sv:.12g}"))
    return out
