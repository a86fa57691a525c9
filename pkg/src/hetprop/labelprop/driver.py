"""Run a label propagation program over all (or selected) seeds."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..bsp.engine import Engine, EngineConfig
from ..graph import EngineGraph, schedule_order
from .program import AlgoParams, DHLPProgram, algo_code


class IncompleteResultsError(RuntimeError):
    pass


@dataclass
class RawResults:
    """Converged labels per seed as COO triples (only values > 0 are kept)."""

    seed: np.ndarray
    vertex: np.ndarray
    value: np.ndarray
    schedule: np.ndarray
    seeds_done: list
    converged: bool
    supersteps: int
    wall_time: float
    seed_supersteps: list = field(default_factory=list)
    offending_seed: int | None = None
    aggregator_history: list = field(default_factory=list)

    def for_seed(self, seed):
        m = self.seed == seed
        return dict(zip(self.vertex[m].tolist(), self.value[m].tolist()))

    def by_vertex(self):
        """vertex id -> {seed id: value}."""
        out = {}
        for s, v, x in zip(self.seed.tolist(), self.vertex.tolist(), self.value.tolist()):
            out.setdefault(v, {})[s] = x
        return out

    def dense(self, ids):
        """Matrix with rows indexed by seed, columns by vertex, both in ``ids`` order."""
        ids = np.asarray(ids, dtype=np.int64)
        pos = {int(v): i for i, v in enumerate(ids)}
        out = np.zeros((len(ids), len(ids)))
        for s, v, x in zip(self.seed.tolist(), self.vertex.tolist(), self.value.tolist()):
            if s in pos and v in pos:
                out[pos[s], pos[v]] = x
        return out


def run_all_seeds(net, algo="dhlp2", params=None, config=None, seeds=None,
                  backend=None, keep_history=False):
    """Propagate from every seed in schedule order inside one engine run.

    ``net`` is a HeterogeneousNetwork or an EngineGraph. ``seeds`` restricts
    the schedule to a subset of vertex ids (order is still the schedule order).
    """
    params = params or AlgoParams()
    config = config or EngineConfig()
    graph = net if isinstance(net, EngineGraph) else EngineGraph.from_network(net)
    schedule = schedule_order(graph.ids)
    if seeds is not None:
        wanted = np.asarray(sorted(set(int(s) for s in seeds)), dtype=np.int64)
        missing = np.setdiff1d(wanted, graph.ids)
        if len(missing):
            raise KeyError(f"unknown seed vertex {int(missing[0])}")
        schedule = schedule[np.isin(schedule, wanted)]
    program = DHLPProgram(algo_code(algo), params, schedule, backend)
    result = Engine(config).run(graph, program)
    seed, vert, val = result.values
    offending = None
    if not result.converged:
        offending = program.current_seed
    return RawResults(
        seed=seed, vertex=vert, value=val, schedule=schedule,
        seeds_done=list(program.seeds_done), converged=result.converged,
        supersteps=result.supersteps, wall_time=result.wall_time,
        seed_supersteps=list(program.seed_steps), offending_seed=offending,
        aggregator_history=result.aggregator_history if keep_history else [],
    )


def write_raw(raw, ids, path):
    """One line per vertex: ``id<TAB>seed:value seed:value ...`` (values > 0)."""
    per = raw.by_vertex()
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for vid in np.sort(np.asarray(ids, dtype=np.int64)).tolist():
            pairs = sorted(per.get(vid, {}).items())
            fh.write(f"{vid}\t" + " ".join(f"{s}:{x:.17g}" for s, x in pairs if x > 0) + "\n")


def read_raw(path):
    """Returns (vertex ids, seed, vertex, value) arrays."""
    ids, s_, v_, x_ = [], [], [], []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            head, _, rest = line.partition("\t")
            vid = int(head)
            ids.append(vid)
            for tok in rest.split():
                s, x = tok.split(":")
                s_.append(int(s))
                v_.append(vid)
                x_.append(float(x))
    return (np.array(ids, dtype=np.int64), np.array(s_, dtype=np.int64),
            np.array(v_, dtype=np.int64), np.array(x_))

