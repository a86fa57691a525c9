"""Synthetic three-concept networks, optionally with planted communities."""
from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .network import CONCEPTS, PAIRS, DEFAULT_COUPLING, HeterogeneousNetwork

BLOCK_BOOST = 5.0
PREFIX = {1: "dr", 2: "di", 3: "tg"}


@dataclass(frozen=True)
class GenSpec:
    n1: int
    n2: int
    n3: int
    homo_density: float = 0.1
    hetero_density: float = 0.1
    blocks: int = 0
    rng_seed: int = 0

    def __post_init__(self):
        for n in (self.n1, self.n2, self.n3):
            if n < 1:
                raise ValueError("entity counts must be at least 1")
        for d in (self.homo_density, self.hetero_density):
            if not 0 <= d <= 1:
                raise ValueError("densities must lie in [0, 1]")
        if self.blocks < 0:
            raise ValueError("blocks must be non-negative")

    @property
    def sizes(self):
        return {CONCEPTS[0]: self.n1, CONCEPTS[1]: self.n2, CONCEPTS[2]: self.n3}


def entity_names(concept, n):
    width = max(4, len(str(n - 1)))
    return tuple(f"{PREFIX[int(concept)]}{i:0{width}d}" for i in range(n))


def _density(base, la, lb, blocks):
    """Pairwise edge probability; within-block pairs get the boost."""
    if blocks == 0:
        return np.full((len(la), len(lb)), base)
    same = la[:, None] == lb[None, :]
    return np.where(same, min(1.0, BLOCK_BOOST * base), base)


def generate(spec, coupling=DEFAULT_COUPLING):
    """Random network; ``meta['blocks']`` holds each entity's community label."""
    rng = np.random.default_rng(spec.rng_seed)
    sizes = spec.sizes
    labels = {}
    for c in CONCEPTS:
        if spec.blocks:
            labels[c] = rng.permutation(np.arange(sizes[c]) % spec.blocks)
        else:
            labels[c] = np.zeros(sizes[c], dtype=np.int64)
    prox = {}
    for c in CONCEPTS:
        n = sizes[c]
        p = _density(spec.homo_density, labels[c], labels[c], spec.blocks)
        keep = np.triu(rng.random((n, n)) < p, 1)
        w = np.where(keep, 1.0 - rng.random((n, n)), 0.0)   # uniform on (0, 1]
        prox[c] = w + w.T
    rel = {}
    for c1, c2 in PAIRS:
        p = _density(spec.hetero_density, labels[c1], labels[c2], spec.blocks)
        rel[(c1, c2)] = (rng.random((sizes[c1], sizes[c2])) < p).astype(float)
    names = {c: entity_names(c, sizes[c]) for c in CONCEPTS}
    meta = {"spec": spec, "blocks": labels}
    return HeterogeneousNetwork.build(names, prox, rel, coupling, meta)


def expected_edges(spec):
    """Expected homogeneous and heterogeneous undirected edge counts (no blocks)."""
    s = spec.sizes
    homo = sum(spec.homo_density * s[c] * (s[c] - 1) / 2 for c in CONCEPTS)
    het = sum(spec.hetero_density * s[a] * s[b] for a, b in PAIRS)
    return homo, het


def size_for_edges(edges, density=0.05):
    """Per-concept entity count giving roughly ``edges`` undirected edges at ``density``."""
    # 3 * d * n^2 / 2 homogeneous + 3 * d * n^2 heterogeneous
    return max(2, int(np.ceil(np.sqrt(edges / (4.5 * density)))))


def write_network(net, directory):
    from .ingest import write_six

    os.makedirs(directory, exist_ok=True)
    return write_six(net, directory)
