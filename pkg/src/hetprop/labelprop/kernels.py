"""Per-partition superstep kernels for the two label propagation programs.

Two interchangeable implementations share one state layout:

* ``partition_step`` walks the partition vertex by vertex and is compiled with
  numba (``nogil`` so worker threads overlap);
* ``partition_step_numpy`` does the same superstep with whole-partition array
  operations.

Both sum neighbor contributions in CSR slot order, so they agree bit for bit.

State layout (``N`` vertices, ``E`` directed slots):

``fl``      float64 (6, N): F, F_OLD, FT_CUR, FT_LAST, Y_PRIM, RES
``fl8``     int8 (4, N):    Y, IS_END, HALTED, REC
``tok``     int8 (2, N):    TOKEN inbox, double buffered by superstep parity
``mval``    float64 (2, E): LABEL payload written into the receiver's slot
``mflag``   int8 (2, E):    0 no message, 1 LABEL, 2 LABEL with end flag
``nf``      float64 (E):    last label received on each slot
``nf_end``  int8 (E):       end flag of that label
"""
import numpy as np

from .._accel import njit

F, F_OLD, FT_CUR, FT_LAST, Y_PRIM, RES = range(6)
Y, IS_END, HALTED, REC = range(4)

# superstep stages, identical for every vertex within one superstep
HANDOFF, ITERATE, PHASE_A, PHASE_B, COMMIT, DONE = 1, 2, 3, 4, 5, 6

DHLP1, DHLP2 = 1, 2


def next_stage(algo, stage, converged):
    if stage == HANDOFF:
        return ITERATE if algo == DHLP2 else PHASE_A
    if stage == ITERATE:
        return DONE if converged else ITERATE
    if stage == PHASE_A:
        return PHASE_B
    if stage == PHASE_B:
        return COMMIT if converged else PHASE_B
    if stage == COMMIT:
        return DONE if converged else PHASE_B
    if stage == DONE:
        return HANDOFF
    raise ValueError(f"unknown stage {stage}")


def allocate_state(num_vertices, num_slots):
    return (
        np.zeros((6, num_vertices)),
        np.zeros((4, num_vertices), dtype=np.int8),
        np.zeros((2, num_vertices), dtype=np.int8),
        np.zeros((2, num_slots)),
        np.zeros((2, num_slots), dtype=np.int8),
        np.zeros(num_slots),
        np.zeros(num_slots, dtype=np.int8),
    )


# -- compiled per-vertex pieces -----------------------------------------------


@njit(nogil=True, cache=True)
def reset_vertex(i, indptr, fl, fl8, nf, nf_end):
    for r in range(5):
        fl[r, i] = 0.0
    fl8[IS_END, i] = 0
    for e in range(indptr[i], indptr[i + 1]):
        nf[e] = 0.0
        nf_end[e] = 0


@njit(nogil=True, cache=True)
def early_checking(i, stage, cur, algo, indptr, fl, fl8, tok, mval, mflag, nf, nf_end):
    """Consume messages; returns 1 when propagation is suppressed this superstep.

    Records every incoming label (and its end flag) in the slot cache, grants
    the seed role on TOKEN, and resets the vertex at a seed handoff.
    """
    for e in range(indptr[i], indptr[i + 1]):
        k = mflag[cur, e]
        if k != 0:
            nf[e] = mval[cur, e]
            nf_end[e] = 1 if k == 2 else 0
            mflag[cur, e] = 0
    if stage == HANDOFF:
        reset_vertex(i, indptr, fl, fl8, nf, nf_end)
        if tok[cur, i] != 0:
            tok[cur, i] = 0
            fl8[Y, i] = 1
            if algo == DHLP2:
                fl[F, i] = 1.0
                fl[F_OLD, i] = 1.0
        return 1
    if stage == DONE:
        return 1
    return 0


@njit(nogil=True, cache=True)
def neighbor_sums(i, indptr, weights, het, nf):
    hs = 0.0
    ms = 0.0
    for e in range(indptr[i], indptr[i + 1]):
        if het[e]:
            hs += weights[e] * nf[e]
        else:
            ms += weights[e] * nf[e]
    return hs, ms


@njit(nogil=True, cache=True)
def dhlp2_compute(i, alpha, sigma, indptr, weights, het, fl, fl8, nf):
    beta = 1.0 - alpha
    hs, ms = neighbor_sums(i, indptr, weights, het, nf)
    yp = beta * fl[F, i] + alpha * hs
    f = beta * yp + alpha * ms
    end = abs(f - fl[F_OLD, i]) < sigma
    fl[Y_PRIM, i] = yp
    fl[F, i] = f
    fl[F_OLD, i] = f
    fl8[IS_END, i] = 1 if end else 0
    return end


@njit(nogil=True, cache=True)
def dhlp1_compute(i, stage, alpha, sigma, indptr, weights, het, fl, fl8, nf):
    """One DHLP-1 superstep; returns (converged, label to propagate)."""
    beta = 1.0 - alpha
    hs, ms = neighbor_sums(i, indptr, weights, het, nf)
    ok = True
    if stage == PHASE_B:
        fl[FT_LAST, i] = fl[FT_CUR, i]
        ft = beta * fl[Y_PRIM, i] + alpha * ms
        fl[FT_CUR, i] = ft
        ok = abs(ft - fl[FT_LAST, i]) < sigma
        return ok, ft
    if stage == COMMIT:
        f = fl[FT_CUR, i]
        ok = abs(f - fl[F_OLD, i]) < sigma
        fl[F, i] = f
        fl[F_OLD, i] = f
        fl8[IS_END, i] = 1 if ok else 0
    # phase A (also entered right after a commit): refresh y' from the
    # heterogeneous neighbours and restart the inner loop from it
    yp = beta * fl8[Y, i] + alpha * hs
    fl[Y_PRIM, i] = yp
    fl[FT_CUR, i] = yp
    return ok, yp


@njit(nogil=True, cache=True)
def propagate_message(i, value, end, nxt, indptr, rev, mval, mflag):
    """One LABEL per adjacent vertex, written into the receiver's mirror slot."""
    k = 2 if end else 1
    for e in range(indptr[i], indptr[i + 1]):
        r = rev[e]
        mval[nxt, r] = value
        mflag[nxt, r] = k
    return indptr[i + 1] - indptr[i]


@njit(nogil=True, cache=True)
def finish_seed(i, indptr, fl, fl8, nf, nf_end):
    if fl[F, i] > 0.0:
        fl[RES, i] = fl[F, i]
        fl8[REC, i] = 1
    reset_vertex(i, indptr, fl, fl8, nf, nf_end)


@njit(nogil=True, cache=True)
def partition_step(verts, stage, cur, algo, alpha, sigma,
                   indptr, weights, rev, het, ids, next_seed,
                   fl, fl8, tok, mval, mflag, nf, nf_end):
    """Run one superstep over ``verts``.

    Returns (sent, awake, converged, holders, token holder id, computed).
    """
    nxt = 1 - cur
    sent = 0
    awake = 0
    conv = True
    holders = 0
    token = -1
    computed = 0
    for i in verts:
        active = fl8[HALTED, i] == 0 or tok[cur, i] != 0
        if not active:
            for e in range(indptr[i], indptr[i + 1]):
                if mflag[cur, e] != 0:
                    active = True
                    break
        if not active:
            continue
        computed += 1
        flag = early_checking(i, stage, cur, algo, indptr, fl, fl8, tok, mval, mflag, nf, nf_end)
        holder = fl8[Y, i] != 0
        if holder:
            holders += 1
            if ids[i] > token:
                token = ids[i]
        if stage == DONE:
            finish_seed(i, indptr, fl, fl8, nf, nf_end)
            if holder:
                fl8[Y, i] = 0
                holder = False
                j = next_seed[i]
                if j >= 0:
                    tok[nxt, j] = 1
                    sent += 1
        elif flag == 1:
            # the new seed announces its starting label
            if holder and algo == DHLP2:
                sent += propagate_message(i, fl[F, i], False, nxt, indptr, rev, mval, mflag)
        elif algo == DHLP2:
            end = dhlp2_compute(i, alpha, sigma, indptr, weights, het, fl, fl8, nf)
            conv = conv and end
            sent += propagate_message(i, fl[F, i], end, nxt, indptr, rev, mval, mflag)
        else:
            ok, val = dhlp1_compute(i, stage, alpha, sigma, indptr, weights, het, fl, fl8, nf)
            conv = conv and ok
            sent += propagate_message(i, val, fl8[IS_END, i] != 0, nxt, indptr, rev, mval, mflag)
        fl8[HALTED, i] = 0 if holder else 1
        if holder:
            awake += 1
    return sent, awake, conv, holders, token, computed


# -- numpy implementation -----------------------------------------------------


class PartitionLayout:
    """Flattened slot ranges of one partition for the array kernel."""

    def __init__(self, verts, indptr):
        self.verts = np.asarray(verts, dtype=np.int64)
        deg = indptr[self.verts + 1] - indptr[self.verts]
        self.seg = np.repeat(np.arange(len(self.verts)), deg)
        starts = np.repeat(indptr[self.verts], deg)
        offs = np.arange(len(self.seg)) - np.repeat(np.cumsum(deg) - deg, deg)
        self.slots = (starts + offs).astype(np.int64)
        self.deg = deg


def partition_step_numpy(lay, stage, cur, algo, alpha, sigma,
                         indptr, weights, rev, het, ids, next_seed,
                         fl, fl8, tok, mval, mflag, nf, nf_end):
    nxt = 1 - cur
    beta = 1.0 - alpha
    verts, seg, slots = lay.verts, lay.seg, lay.slots
    nv = len(verts)
    if nv == 0:
        return 0, 0, True, 0, -1, 0
    k = mflag[cur, slots]
    has_msg = np.bincount(seg[k != 0], minlength=nv) > 0
    active = (fl8[HALTED, verts] == 0) | (tok[cur, verts] != 0) | has_msg
    computed = int(active.sum())
    if computed == 0:
        return 0, 0, True, 0, -1, 0
    got = k != 0
    nf[slots[got]] = mval[cur, slots[got]]
    nf_end[slots[got]] = k[got] == 2
    mflag[cur, slots] = 0

    act = verts[active]
    act_slots_mask = active[seg]
    sent = 0
    conv = True

    def reset(idx, smask):
        fl[:5, idx] = 0.0
        fl8[IS_END, idx] = 0
        s = slots[smask]
        nf[s] = 0.0
        nf_end[s] = 0

    def send(idx_local_mask, values, endflags):
        m = idx_local_mask[seg]
        s = slots[m]
        r = rev[s]
        mval[nxt, r] = values[seg[m]]
        mflag[nxt, r] = np.where(endflags[seg[m]], 2, 1)
        return int(m.sum())

    holder_mask = active & (fl8[Y, verts] != 0)
    if stage == HANDOFF:
        reset(act, act_slots_mask)
        got_tok = active & (tok[cur, verts] != 0)
        t = verts[got_tok]
        tok[cur, t] = 0
        fl8[Y, t] = 1
        if algo == DHLP2:
            fl[F, t] = 1.0
            fl[F_OLD, t] = 1.0
        holder_mask = active & (fl8[Y, verts] != 0)
        if algo == DHLP2 and holder_mask.any():
            full = fl[F, verts]
            sent += send(holder_mask, full, np.zeros(nv, dtype=bool))
    holders = int(holder_mask.sum())
    token = int(ids[verts[holder_mask]].max()) if holders else -1

    if stage == DONE:
        pos = active & (fl[F, verts] > 0.0)
        p = verts[pos]
        fl[RES, p] = fl[F, p]
        fl8[REC, p] = 1
        reset(act, act_slots_mask)
        for h in verts[holder_mask]:
            fl8[Y, h] = 0
            j = next_seed[h]
            if j >= 0:
                tok[nxt, j] = 1
                sent += 1
        holder_mask = np.zeros(nv, dtype=bool)
    elif stage != HANDOFF:
        contrib = weights[slots] * nf[slots]
        hetm = het[slots] != 0
        hs = np.bincount(seg, weights=np.where(hetm, contrib, 0.0), minlength=nv)
        ms = np.bincount(seg, weights=np.where(hetm, 0.0, contrib), minlength=nv)
        if algo == DHLP2:
            yp = beta * fl[F, verts] + alpha * hs
            f = beta * yp + alpha * ms
            end = np.abs(f - fl[F_OLD, verts]) < sigma
            fl[Y_PRIM, act] = yp[active]
            fl[F, act] = f[active]
            fl[F_OLD, act] = f[active]
            fl8[IS_END, act] = end[active]
            conv = bool(end[active].all())
            sent += send(active, f, end)
        elif stage == PHASE_B:
            last = fl[FT_CUR, verts]
            ft = beta * fl[Y_PRIM, verts] + alpha * ms
            fl[FT_LAST, act] = last[active]
            fl[FT_CUR, act] = ft[active]
            conv = bool((np.abs(ft - last) < sigma)[active].all())
            sent += send(active, ft, fl8[IS_END, verts] != 0)
        else:
            if stage == COMMIT:
                f = fl[FT_CUR, verts]
                ok = np.abs(f - fl[F_OLD, verts]) < sigma
                fl[F, act] = f[active]
                fl[F_OLD, act] = f[active]
                fl8[IS_END, act] = ok[active]
                conv = bool(ok[active].all())
            yp = beta * fl8[Y, verts] + alpha * hs
            fl[Y_PRIM, act] = yp[active]
            fl[FT_CUR, act] = yp[active]
            sent += send(active, yp, fl8[IS_END, verts] != 0)
    fl8[HALTED, act] = 1
    fl8[HALTED, verts[holder_mask]] = 0
    return sent, int(holder_mask.sum()), conv, holders, token, computed
