"""Single-process Pregel-style superstep runtime.

Vertices are split into partitions (``id mod k``); partitions run on a pool
of worker lanes, vertices inside a partition run sequentially. A superstep
ends at a barrier where messages and aggregator contributions become
visible. The run stops when no vertex is awake and no message is in flight,
or at the superstep cap.

Programs come in two flavours:

* ``VertexProgram``: per-vertex ``compute(vertex, messages, ctx)`` written in
  plain Python. The engine owns mailboxes and halt flags.
* ``PartitionProgram``: owns its own vertex state and message buffers and
  processes a whole partition per call. Used by the compiled label
  propagation kernels, where per-vertex Python calls would dominate.
"""
from __future__ import annotations

import concurrent.futures as cf
import math
import time
from dataclasses import dataclass, field

import numpy as np


class ConfigurationError(ValueError):
    pass


class EngineError(RuntimeError):
    """A compute hook raised; carries the vertex id and superstep."""

    def __init__(self, message, vertex=None, superstep=None):
        super().__init__(message)
        self.vertex = vertex
        self.superstep = superstep


# -- aggregators --------------------------------------------------------------

_REDUCERS = {
    "sum": (0, lambda a, b: a + b),
    "and": (True, lambda a, b: bool(a) and bool(b)),
    "min": (math.inf, min),
    "max": (-math.inf, max),
}


def reducer_identity(kind):
    try:
        return _REDUCERS[kind][0]
    except KeyError:
        raise ConfigurationError(f"unsupported reducer {kind!r}") from None


class AggregatorRegistry:
    """Named aggregators, each bound to one of sum / and / min / max."""

    def __init__(self, spec=None):
        self._kinds = {}
        for name, kind in (spec or {}).items():
            self.register(name, kind)

    def register(self, name, kind):
        reducer_identity(kind)
        self._kinds[name] = kind

    def __contains__(self, name):
        return name in self._kinds

    def names(self):
        return list(self._kinds)

    def kind(self, name):
        try:
            return self._kinds[name]
        except KeyError:
            raise ConfigurationError(f"aggregator {name!r} is not registered") from None

    def identities(self):
        return {n: reducer_identity(k) for n, k in self._kinds.items()}

    def reduce(self, name, contributions):
        kind = self.kind(name)
        ident, op = _REDUCERS[kind]
        acc = ident
        for c in contributions:
            acc = op(acc, c)
        return acc

    def merge(self, parts):
        """Reduce a sequence of per-partition ``{name: value}`` dicts."""
        kinds = self._kinds
        out = {n: _REDUCERS[k][0] for n, k in kinds.items()}
        for p in parts:
            for name, value in p.items():
                kind = kinds.get(name)
                if kind is None:
                    raise ConfigurationError(f"aggregator {name!r} is not registered")
                out[name] = _REDUCERS[kind][1](out[name], value)
        return out


def reduce_aggregator(registry, name, contributions):
    return registry.reduce(name, contributions)


# -- configuration ------------------------------------------------------------


@dataclass(frozen=True)
class EngineConfig:
    partitions: int | None = None
    parallelism: int = 1
    deterministic: bool = True
    max_supersteps: int = 1_000_000
    aggregators: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.partitions is None:
            object.__setattr__(self, "partitions", self.parallelism)
        if self.parallelism < 1:
            raise ConfigurationError("parallelism must be at least 1")
        if self.partitions < self.parallelism:
            raise ConfigurationError(
                f"partitions ({self.partitions}) must be >= parallelism ({self.parallelism})"
            )
        if self.max_supersteps < 1:
            raise ConfigurationError("max_supersteps must be at least 1")


def partition_vertices(ids, k):
    """Indices (into ``ids``) of each partition; vertex ``v`` lands in ``v mod k``."""
    if k < 1:
        raise ConfigurationError("need at least one partition")
    ids = np.asarray(ids, dtype=np.int64)
    part = ids % k
    order = np.argsort(part, kind="stable")
    bounds = np.searchsorted(part[order], np.arange(k + 1))
    return [order[bounds[p]:bounds[p + 1]] for p in range(k)]


# -- program interfaces -------------------------------------------------------


@dataclass
class PartitionOutput:
    sent: int = 0
    awake: int = 0
    aggregates: dict = field(default_factory=dict)
    computed: int = 0


class PartitionProgram:
    """Interface for programs that own their vertex state.

    ``setup`` runs once before superstep 0. ``compute_partition`` runs once
    per partition per superstep and may only touch state of vertices in that
    partition plus the next-superstep message buffers. ``barrier`` runs on the
    driver thread after every superstep.
    """

    aggregators: dict = {}

    def setup(self, graph, partitions, config):
        raise NotImplementedError

    def compute_partition(self, p, superstep, aggregated):
        raise NotImplementedError

    def barrier(self, superstep, aggregated):
        pass

    def values(self):
        return None


@dataclass(frozen=True, order=True)
class Message:
    sender: int
    kind: int
    payload: object = field(compare=False)


class Vertex:
    __slots__ = ("id", "concept", "value", "_nbrs", "_wts", "_ids")

    def __init__(self, vid, concept, value, nbrs, wts, ids):
        self.id = vid
        self.concept = concept
        self.value = value
        self._nbrs = nbrs
        self._wts = wts
        self._ids = ids

    @property
    def neighbors(self):
        return [(int(self._ids[j]), float(w)) for j, w in zip(self._nbrs, self._wts)]

    @property
    def degree(self):
        return len(self._nbrs)


class SuperstepContext:
    """What a vertex can see and do during one superstep."""

    def __init__(self, superstep, aggregated, registry, outbox, contributions):
        self.superstep = superstep
        self._aggregated = aggregated
        self._registry = registry
        self._outbox = outbox
        self._contrib = contributions
        self._vertex = None
        self._halt = False

    def send(self, dst, payload, kind=0):
        self._outbox.append((int(dst), Message(self._vertex.id, kind, payload)))

    def send_to_neighbors(self, payload, kind=0):
        for vid, _ in self._vertex.neighbors:
            self.send(vid, payload, kind)

    def vote_to_halt(self):
        self._halt = True

    def aggregate(self, name, value):
        kind = self._registry.kind(name)
        op = _REDUCERS[kind][1]
        self._contrib[name] = op(self._contrib.get(name, reducer_identity(kind)), value)

    def aggregated(self, name):
        self._registry.kind(name)
        return self._aggregated[name]


class VertexProgram:
    """Override ``compute``; optionally ``initial_value`` and ``combine``."""

    aggregators: dict = {}
    combine = None

    def initial_value(self, vid, concept):
        return None

    def compute(self, vertex, messages, ctx):
        raise NotImplementedError


class _VertexAdapter(PartitionProgram):
    """Runs a ``VertexProgram`` through the partition interface."""

    def __init__(self, program):
        self.program = program
        self.aggregators = dict(getattr(program, "aggregators", {}) or {})

    def setup(self, graph, partitions, config):
        self.graph = graph
        self.partitions = partitions
        self.deterministic = config.deterministic
        self.registry = AggregatorRegistry(self.aggregators)
        g = graph
        self.vertices = [
            Vertex(
                int(g.ids[i]), int(g.concepts[i]),
                self.program.initial_value(int(g.ids[i]), int(g.concepts[i])),
                g.indices[g.indptr[i]:g.indptr[i + 1]], g.weights[g.indptr[i]:g.indptr[i + 1]], g.ids,
            )
            for i in range(g.num_vertices)
        ]
        self.halted = np.zeros(g.num_vertices, dtype=bool)
        self.inbox = {}
        self.outboxes = [[] for _ in partitions]
        self.invocations = np.zeros(g.num_vertices, dtype=np.int64)

    def compute_partition(self, p, superstep, aggregated):
        out = self.outboxes[p]
        contrib = {}
        ctx = SuperstepContext(superstep, aggregated, self.registry, out, contrib)
        awake = computed = 0
        for i in self.partitions[p]:
            msgs = self.inbox.get(int(i), ())
            if self.halted[i] and not msgs:
                continue
            v = self.vertices[i]
            ctx._vertex, ctx._halt = v, False
            try:
                self.program.compute(v, list(msgs), ctx)
            except Exception as exc:
                raise EngineError(
                    f"compute failed at vertex {v.id} in superstep {superstep}: {exc!r}",
                    vertex=v.id, superstep=superstep,
                ) from exc
            self.invocations[i] += 1
            computed += 1
            self.halted[i] = ctx._halt
            awake += not ctx._halt
        return PartitionOutput(sent=len(out), awake=awake, aggregates=contrib, computed=computed)

    def barrier(self, superstep, aggregated):
        inbox = {}
        index = self.graph.index
        for out in self.outboxes:
            for dst, msg in out:
                try:
                    i = index(dst)
                except KeyError:
                    raise EngineError(
                        f"vertex {msg.sender} sent a message to unknown vertex {dst} "
                        f"in superstep {superstep}", vertex=msg.sender, superstep=superstep,
                    ) from None
                inbox.setdefault(i, []).append(msg)
            out.clear()
        if self.deterministic:
            for lst in inbox.values():
                lst.sort(key=lambda m: (m.sender, m.kind))
        comb = self.program.combine
        if comb is not None:
            for i, lst in inbox.items():
                merged = {}
                for m in lst:
                    if m.kind in merged:
                        prev = merged[m.kind]
                        merged[m.kind] = Message(min(prev.sender, m.sender), m.kind, comb(prev.payload, m.payload))
                    else:
                        merged[m.kind] = m
                inbox[i] = sorted(merged.values()) if self.deterministic else list(merged.values())
        self.inbox = inbox

    def values(self):
        return {v.id: v.value for v in self.vertices}


# -- driver -------------------------------------------------------------------


@dataclass
class RunResult:
    supersteps: int
    converged: bool
    aggregator_history: list
    wall_time: float
    values: object = None
    computed: int = 0


class Engine:
    """Runs one program at a time; not safe for concurrent ``run`` calls."""

    def __init__(self, config=None):
        self.config = config or EngineConfig()

    def run(self, graph, program):
        cfg = self.config
        if isinstance(program, VertexProgram):
            program = _VertexAdapter(program)
        spec = dict(cfg.aggregators)
        spec.update(getattr(program, "aggregators", {}) or {})
        registry = AggregatorRegistry(spec)
        parts = partition_vertices(graph.ids, cfg.partitions)
        program.setup(graph, parts, cfg)

        aggregated = registry.identities()
        history = []
        converged = False
        computed = 0
        pool = cf.ThreadPoolExecutor(cfg.parallelism) if cfg.parallelism > 1 else None
        t0 = time.perf_counter()
        step = 0
        try:
            while step < cfg.max_supersteps:
                outs = self._superstep(program, pool, len(parts), step, aggregated)
                aggregated = registry.merge([o.aggregates for o in outs])
                history.append(aggregated)
                program.barrier(step, aggregated)
                step += 1
                sent = awake = 0
                for o in outs:
                    sent += o.sent
                    awake += o.awake
                    computed += o.computed
                if sent == 0 and awake == 0:
                    converged = True
                    break
        finally:
            if pool is not None:
                pool.shutdown(wait=True)
        wall = time.perf_counter() - t0
        return RunResult(step, converged, history, wall, program.values(), computed)

    def _superstep(self, program, pool, k, step, aggregated):
        if pool is None:
            return [program.compute_partition(p, step, aggregated) for p in range(k)]
        futs = [pool.submit(program.compute_partition, p, step, aggregated) for p in range(k)]
        if self.config.deterministic:
            # fixed partition order for the reduction
            return [f.result() for f in futs]
        return [f.result() for f in cf.as_completed(futs)]


def run(graph, program, config=None):
    return Engine(config).run(graph, program)
