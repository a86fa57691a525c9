"""Sequential matrix-form label propagation, used as ground truth for the engine.

Labels live in three per-concept vectors f_1, f_2, f_3. Updates are
synchronous: every right-hand side reads the previous iterate, which is the
timing a superstep barrier produces.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .network import CONCEPTS, Concept, to_dense

DEFAULT_CAP = 10_000_000


@dataclass
class LabelState:
    f: dict           # concept -> label vector
    y: dict           # concept -> one-hot seed indicator
    iterations: int = 0
    converged: bool = True

    def stacked(self):
        return np.concatenate([self.f[c] for c in CONCEPTS])


def _blocks(net):
    S = {c: to_dense(net.S[c]) for c in CONCEPTS}
    H = {}
    for i in CONCEPTS:
        for j in CONCEPTS:
            if i != j:
                H[(i, j)] = to_dense(net.hetero(i, j))
    return S, H


def seed_vector(net, seed):
    """One-hot y for a seed given as (concept, index)."""
    c, x = Concept(seed[0]), int(seed[1])
    y = {k: np.zeros(net.sizes[k]) for k in CONCEPTS}
    y[c][x] = 1.0
    return y


def heterlp_step(f, S, H, alpha, order=CONCEPTS):
    """y_i = b f_i + a sum_j S_ij f_j ; f_i = b y_i + a S_i f_i (all from previous f)."""
    b = 1.0 - alpha
    out = {}
    for i in order:
        yi = b * f[i]
        for j in CONCEPTS:
            if j != i:
                yi = yi + alpha * (H[(i, j)] @ f[j])
        out[i] = b * yi + alpha * (S[i] @ f[i])
    return out


def _max_delta(a, b):
    m = 0.0
    for c in CONCEPTS:
        if len(a[c]):
            m = max(m, float(np.max(np.abs(a[c] - b[c]))))
    return m


def heterlp_run(net, alpha, sigma, seed, cap=DEFAULT_CAP, residuals=None):
    """Iterate from f = y until no entry moves by ``sigma`` or more."""
    S, H = _blocks(net)
    y = seed_vector(net, seed)
    f = {c: y[c].copy() for c in CONCEPTS}
    it = 0
    while it < cap:
        nf = heterlp_step(f, S, H, alpha)
        it += 1
        d = _max_delta(nf, f)
        if residuals is not None:
            residuals.append(d)
        f = nf
        if d < sigma:
            return LabelState(f, y, it, True)
    return LabelState(f, y, it, False)


def minprop_run(net, alpha, sigma, seed, cap=DEFAULT_CAP):
    """Nested scheme: y' from the fixed seed term and cross-concept labels, then an
    inner homogeneous diffusion to per-entry convergence; repeat until the
    outer labels stop moving.
    """
    S, H = _blocks(net)
    b = 1.0 - alpha
    y = seed_vector(net, seed)
    f = {c: np.zeros(net.sizes[c]) for c in CONCEPTS}
    it = 0
    while True:
        yp = {}
        for i in CONCEPTS:
            acc = b * y[i]
            for j in CONCEPTS:
                if j != i:
                    acc = acc + alpha * (H[(i, j)] @ f[j])
            yp[i] = acc
        ft = {c: yp[c].copy() for c in CONCEPTS}
        while True:
            nt = {c: b * yp[c] + alpha * (S[c] @ ft[c]) for c in CONCEPTS}
            it += 1
            d = _max_delta(nt, ft)
            ft = nt
            if d < sigma:
                break
            if it >= cap:
                return LabelState(ft, y, it, False)
        d = _max_delta(ft, f)
        f = ft
        if d < sigma:
            return LabelState(f, y, it, True)


def stacked_operators(net):
    """Block-diagonal homogeneous operator and the full cross-concept operator,
    both in concept-major vertex order."""
    S, H = _blocks(net)
    off = np.cumsum([0] + [net.sizes[c] for c in CONCEPTS])
    n = off[-1]
    Sf = np.zeros((n, n))
    Hf = np.zeros((n, n))
    for a, ci in enumerate(CONCEPTS):
        Sf[off[a]:off[a + 1], off[a]:off[a + 1]] = S[ci]
        for b, cj in enumerate(CONCEPTS):
            if ci != cj:
                Hf[off[a]:off[a + 1], off[b]:off[b + 1]] = H[(ci, cj)]
    return Sf, Hf


def _batched_heterlp(Sf, Hf, alpha, sigma, cap):
    n = Sf.shape[0]
    b = 1.0 - alpha
    F = np.eye(n)
    live = np.arange(n)
    ok = True
    it = 0
    while len(live):
        if it >= cap:
            ok = False
            break
        Fl = F[:, live]
        Y = b * Fl + alpha * (Hf @ Fl)
        Fn = b * Y + alpha * (Sf @ Fl)
        done = np.max(np.abs(Fn - Fl), axis=0) < sigma
        F[:, live] = Fn
        live = live[~done]
        it += 1
    return F.T, ok


def _batched_minprop(Sf, Hf, alpha, sigma, cap):
    n = Sf.shape[0]
    b = 1.0 - alpha
    Yseed = np.eye(n)
    F = np.zeros((n, n))
    YP = b * Yseed                 # first outer pass: all labels are zero
    FT = YP.copy()
    live = np.arange(n)
    ok = True
    it = 0
    while len(live):
        if it >= cap:
            ok = False
            break
        NT = b * YP[:, live] + alpha * (Sf @ FT[:, live])
        inner_done = np.max(np.abs(NT - FT[:, live]), axis=0) < sigma
        FT[:, live] = NT
        it += 1
        cols = live[inner_done]
        if len(cols):
            outer_done = np.max(np.abs(FT[:, cols] - F[:, cols]), axis=0) < sigma
            F[:, cols] = FT[:, cols]
            again = cols[~outer_done]
            if len(again):
                YP[:, again] = b * Yseed[:, again] + alpha * (Hf @ F[:, again])
                FT[:, again] = YP[:, again]
            live = np.setdiff1d(live, cols[outer_done], assume_unique=True)
    return F.T, ok


def all_seeds(net, algo, alpha, sigma, cap=DEFAULT_CAP):
    """Row k: labels of every vertex for the k-th seed; both axes in concept-major order.

    All seeds advance together as matrix columns; a column freezes as soon as
    its own stopping rule fires, so each row equals the single-seed run.
    Returns (matrix, all-converged flag).
    """
    Sf, Hf = stacked_operators(net)
    if algo in ("dhlp2", 2):
        return _batched_heterlp(Sf, Hf, alpha, sigma, cap)
    return _batched_minprop(Sf, Hf, alpha, sigma, cap)


def symmetrized(net, labels):
    """Mutual-label mean (M + M^T) / 2 on the stacked seed-by-vertex matrix."""
    return 0.5 * (labels + labels.T)
