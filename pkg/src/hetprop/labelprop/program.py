"""DHLP-1 / DHLP-2 as engine programs with the token-passing seed protocol."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .._accel import resolve_backend
from ..bsp.engine import PartitionOutput, PartitionProgram
from . import kernels as K


class ProtocolError(RuntimeError):
    pass


@dataclass(frozen=True)
class AlgoParams:
    alpha: float = 0.5
    sigma: float = 0.5

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")


ALGORITHMS = {"dhlp1": K.DHLP1, "dhlp2": K.DHLP2}


def algo_code(algo):
    if algo in (K.DHLP1, K.DHLP2):
        return algo
    try:
        return ALGORITHMS[str(algo).lower()]
    except KeyError:
        raise ValueError(f"unknown algorithm {algo!r}; expected dhlp1 or dhlp2") from None


class DHLPProgram(PartitionProgram):
    """One engine run that visits every seed of ``schedule`` in turn.

    Global stage control uses the aggregators of the previous superstep:
    ``stage`` (max) and ``converged`` (logical and over every computing
    vertex). ``holders`` counts vertices with y = 1 and ``token`` names the
    current seed.
    """

    aggregators = {"stage": "max", "converged": "and", "holders": "sum", "token": "max"}

    def __init__(self, algo, params, schedule, backend=None):
        self.algo = algo_code(algo)
        self.params = params
        self.schedule = np.asarray(schedule, dtype=np.int64)
        self.backend = resolve_backend(backend)

    def setup(self, graph, partitions, config):
        g = graph
        self.graph = g
        self.indptr = g.indptr
        self.weights = g.weights
        self.rev = g.rev
        src_conc = np.repeat(g.concepts, np.diff(g.indptr))
        self.het = (src_conc != g.concepts[g.indices]).astype(np.int8)
        (self.fl, self.fl8, self.tok, self.mval, self.mflag,
         self.nf, self.nf_end) = K.allocate_state(g.num_vertices, g.num_slots)
        self.next_seed = np.full(g.num_vertices, -1, dtype=np.int64)
        sched_idx = np.array([g.index(int(v)) for v in self.schedule], dtype=np.int64)
        if len(sched_idx) > 1:
            self.next_seed[sched_idx[:-1]] = sched_idx[1:]
        self.cur = 0
        self.parts = [np.asarray(p, dtype=np.int64) for p in partitions]
        if self.backend == "numpy":
            self.layouts = [K.PartitionLayout(p, g.indptr) for p in self.parts]
        if len(sched_idx):
            self.tok[0, sched_idx[0]] = 1
        else:
            self.fl8[K.HALTED, :] = 1
        self._static = (self.algo, float(self.params.alpha), float(self.params.sigma),
                        self.indptr, self.weights, self.rev, self.het, g.ids, self.next_seed,
                        self.fl, self.fl8, self.tok, self.mval, self.mflag, self.nf, self.nf_end)
        # results as COO triples, appended at every seed completion
        self.res_seed, self.res_vertex, self.res_value = [], [], []
        self.seeds_done = []
        self.seed_steps = []
        self._seed_started = 0
        self.current_seed = int(self.schedule[0]) if len(self.schedule) else -1

    def _stage_for(self, superstep, aggregated):
        if superstep == 0:
            return K.HANDOFF
        return K.next_stage(self.algo, int(aggregated["stage"]), bool(aggregated["converged"]))

    def compute_partition(self, p, superstep, aggregated):
        stage = self._stage_for(superstep, aggregated)
        if self.backend == "numba":
            out = K.partition_step(self.parts[p], stage, self.cur, *self._static)
        else:
            out = K.partition_step_numpy(self.layouts[p], stage, self.cur, *self._static)
        sent, awake, conv, holders, token, computed = out
        agg = {"converged": bool(conv), "holders": int(holders), "token": int(token)}
        if computed:
            agg["stage"] = stage
        return PartitionOutput(int(sent), int(awake), agg, int(computed))

    def barrier(self, superstep, aggregated):
        if aggregated["holders"] > 1:
            raise ProtocolError(
                f"{aggregated['holders']} vertices hold the seed token in superstep {superstep}"
            )
        stage = int(aggregated["stage"]) if aggregated["stage"] != -np.inf else None
        if aggregated["token"] >= 0:
            self.current_seed = int(aggregated["token"])
        if stage == K.HANDOFF:
            self._seed_started = superstep
        elif stage == K.DONE:
            rec = np.flatnonzero(self.fl8[K.REC])
            self.res_seed.append(np.full(len(rec), self.current_seed, dtype=np.int64))
            self.res_vertex.append(self.graph.ids[rec])
            self.res_value.append(self.fl[K.RES, rec].copy())
            self.fl8[K.REC, rec] = 0
            self.fl[K.RES, rec] = 0.0
            self.seeds_done.append(self.current_seed)
            self.seed_steps.append(superstep - self._seed_started + 1)
        self.cur = 1 - self.cur

    def values(self):
        if self.res_seed:
            seed = np.concatenate(self.res_seed)
            vert = np.concatenate(self.res_vertex)
            val = np.concatenate(self.res_value)
        else:
            seed = np.zeros(0, dtype=np.int64)
            vert = np.zeros(0, dtype=np.int64)
            val = np.zeros(0)
        return seed, vert, val
