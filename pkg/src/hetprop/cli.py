"""Command-line driver: ingest, run, eval, topk, experiment, generate, bench.

Exit codes: 0 ok, 2 invalid input, 3 I/O failure, 4 propagation hit the
superstep cap.
"""
from __future__ import annotations

import argparse
import os
import sys
import time

import numpy as np

from . import ingest
from ._accel import HAVE_NUMBA, default_backend
from .bsp.engine import ConfigurationError, EngineConfig
from .evaluation import (
    cross_validate,
    deleted_interaction_experiment,
    new_drug_experiment,
    write_removal_tsv,
)
from .graph import EngineGraph, GraphFormatError
from .labelprop import (
    AlgoParams,
    rank_candidates,
    read_predictions,
    run_all_seeds,
    symmetrize_outputs,
    write_predictions,
    write_raw,
)
from .netgen import GenSpec, generate, size_for_edges, write_network
from .network import CONCEPTS, PAIRS, Concept, ValidationError

EXIT_OK, EXIT_INVALID, EXIT_IO, EXIT_NONCONVERGED = 0, 2, 3, 4

GRAPH_FILE = "graph.tsv"
REGISTRY_FILE = "registry.tsv"
NETWORK_FILE = "network.npz"
REPORT_FILE = "validation.tsv"


class CommandError(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def _err(msg):
    print(f"error: {msg}", file=sys.stderr)


# -- shared argument groups -----------------------------------------------------


def _engine_args(p):
    p.add_argument("--algo", choices=["dhlp1", "dhlp2"], default="dhlp2")
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--sigma", type=float, default=0.5)
    p.add_argument("--partitions", type=int, default=None)
    p.add_argument("--parallelism", type=int, default=1)
    p.add_argument("--deterministic", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--max-supersteps", type=int, default=1_000_000)
    p.add_argument("--backend", choices=["numba", "numpy"], default=None)


def _config(a):
    return EngineConfig(partitions=a.partitions, parallelism=a.parallelism,
                        deterministic=a.deterministic, max_supersteps=a.max_supersteps)


def _params(a):
    return AlgoParams(a.alpha, a.sigma)


# -- commands ------------------------------------------------------------------------


def cmd_ingest(a):
    paths = ingest.default_paths(a.input_dir) if a.input_dir else {}
    for role in ingest.ROLES:
        v = getattr(a, role)
        if v:
            paths[role] = v
    missing = [r for r in ingest.ROLES if r not in paths]
    if missing:
        raise CommandError(EXIT_IO, f"no path given for: {', '.join(missing)}")
    for role, p in paths.items():
        if not os.path.isfile(p):
            raise CommandError(EXIT_IO, f"{role} matrix not found: {p}")
    os.makedirs(a.out, exist_ok=True)
    report_path = os.path.join(a.out, REPORT_FILE)
    try:
        six = ingest.load_six(paths)
        net = ingest.assemble_network(six)
    except (ValidationError, ingest.ParseError) as exc:
        with open(report_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("status\tdetail\n")
            fh.write(f"invalid\t{exc}\n")
        raise CommandError(EXIT_INVALID, str(exc)) from None
    g = ingest.write_engine_input(net, os.path.join(a.out, GRAPH_FILE))
    ingest.write_registry(net.names, os.path.join(a.out, REGISTRY_FILE))
    ingest.save_network(net, os.path.join(a.out, NETWORK_FILE))
    with open(report_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("status\tdetail\n")
        fh.write("ok\t" + ", ".join(f"{c.label}={net.sizes[c]}" for c in CONCEPTS)
                 + f", vertices={g.num_vertices}, edges={g.num_edges}\n")
    print(f"ingested {g.num_vertices} vertices, {g.num_edges} edges -> {a.out}")
    return EXIT_OK


def _load_ingested(d):
    gpath = os.path.join(d, GRAPH_FILE)
    rpath = os.path.join(d, REGISTRY_FILE)
    for p in (gpath, rpath):
        if not os.path.isfile(p):
            raise CommandError(EXIT_IO, f"missing ingest artifact {p}")
    try:
        graph = ingest.read_engine_input(gpath)
        names = ingest.read_registry(rpath)
    except (GraphFormatError, ingest.ParseError) as exc:
        raise CommandError(EXIT_INVALID, str(exc)) from None
    return graph, names


def _known(graph, names):
    sizes = {c: len(names[c]) for c in CONCEPTS}
    return {(c1, c2): ingest.relation_from_graph(graph, c1, c2, sizes) for c1, c2 in PAIRS}


def cmd_run(a):
    graph, names = _load_ingested(a.input)
    os.makedirs(a.out, exist_ok=True)
    t0 = time.perf_counter()
    raw = run_all_seeds(graph, a.algo, _params(a), _config(a), backend=a.backend)
    wall = time.perf_counter() - t0
    write_raw(raw, graph.ids, os.path.join(a.out, "raw.tsv"))
    with open(os.path.join(a.out, "summary.tsv"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write("algorithm\talpha\tsigma\tpartitions\tparallelism\tdeterministic\tbackend\t"
                 "vertices\tedges\tsupersteps\twall_time\tconverged\toffending_seed\n")
        cfg = _config(a)
        fh.write(f"{a.algo}\t{a.alpha}\t{a.sigma}\t{cfg.partitions}\t{cfg.parallelism}\t"
                 f"{int(cfg.deterministic)}\t{a.backend or default_backend()}\t"
                 f"{graph.num_vertices}\t{graph.num_edges}\t{raw.supersteps}\t{wall:.6f}\t"
                 f"{int(raw.converged)}\t{raw.offending_seed if raw.offending_seed else ''}\n")
    with open(os.path.join(a.out, "seeds.tsv"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write("seed\tsupersteps\n")
        for s, n in zip(raw.seeds_done, raw.seed_supersteps):
            fh.write(f"{s}\t{n}\n")
    if not raw.converged:
        raise CommandError(
            EXIT_NONCONVERGED,
            f"superstep cap {a.max_supersteps} reached while propagating seed {raw.offending_seed}",
        )
    pred = symmetrize_outputs(raw, names, _known(graph, names))
    write_predictions(pred, os.path.join(a.out, "predictions"))
    print(f"{raw.supersteps} supersteps, {wall:.3f}s -> {a.out}")
    return EXIT_OK


def cmd_eval(a):
    path = os.path.join(a.input, NETWORK_FILE)
    if not os.path.isfile(path):
        raise CommandError(EXIT_IO, f"missing ingest artifact {path}")
    net = ingest.load_network(path)
    rels = None
    if a.relation:
        rels = [tuple(Concept.parse(x) for x in r.split("_", 1)) for r in a.relation]
    rep = cross_validate(net, a.algo, _params(a), a.k, a.seed, rels, _config(a), a.backend)
    os.makedirs(os.path.dirname(os.path.abspath(a.out)), exist_ok=True)
    rep.to_tsv(a.out)
    for rel in rep.relations():
        m = rep.mean(rel)
        print(f"{rel[0].label}-{rel[1].label}\tAUC {m['auc']:.4f}\tAUPR {m['aupr']:.4f}\t"
              f"BestAcc {m['best_acc']:.4f}")
    return EXIT_OK


def _entity_id(names, key, concept=None):
    if key.isdigit():
        return int(key)
    for c in ([Concept.parse(concept)] if concept else CONCEPTS):
        if key in names[c]:
            return 3 * names[c].index(key) + int(c)
    raise CommandError(EXIT_INVALID, f"unknown entity {key!r}")


def cmd_topk(a):
    graph, names = _load_ingested(a.input)
    pdir = os.path.join(a.run, "predictions")
    if not os.path.isdir(pdir):
        raise CommandError(EXIT_IO, f"missing run output {pdir}")
    pred = read_predictions(pdir, _known(graph, names))
    vid = _entity_id(names, a.entity, a.entity_concept)
    try:
        rows = rank_candidates(pred, vid, a.concept, a.k)
    except KeyError as exc:
        raise CommandError(EXIT_INVALID, str(exc)) from None
    out = open(a.out, "w", encoding="utf-8", newline="\n") if a.out else sys.stdout
    try:
        out.write("rank\tcandidate\tscore\tknown\n")
        for r, c in enumerate(rows, start=1):
            out.write(f"{r}\t{c.name}\t{c.score:.6g}\t{int(c.known)}\n")
    finally:
        if a.out:
            out.close()
    return EXIT_OK


def cmd_experiment(a):
    path = os.path.join(a.input, NETWORK_FILE)
    if not os.path.isfile(path):
        raise CommandError(EXIT_IO, f"missing ingest artifact {path}")
    net = ingest.load_network(path)
    results = []
    for algo in a.algos:
        try:
            if a.partner:
                res = deleted_interaction_experiment(net, algo, _params(a), a.entity, a.partner,
                                                     _config(a), a.backend, top=a.top)
            else:
                res = new_drug_experiment(net, algo, _params(a), a.entity, _config(a), a.backend,
                                          top=a.top)
        except (KeyError, ValueError) as exc:
            raise CommandError(EXIT_INVALID, str(exc)) from None
        results.append((algo, res))
        print(f"{algo}: " + ", ".join(f"{k} rank {v}" for k, v in res.ranks.items()))
    write_removal_tsv(results, a.out)
    return EXIT_OK


def cmd_generate(a):
    spec = GenSpec(a.n1, a.n2, a.n3, a.homo_density, a.hetero_density, a.blocks, a.seed)
    net = generate(spec)
    write_network(net, a.out)
    print(f"wrote six matrices ({net.num_vertices} entities, {net.num_edges()} edges) -> {a.out}")
    return EXIT_OK


def bench_cell(graph, algo, params, parallelism, backend, supersteps, deterministic, repeats=1):
    """Best-of-``repeats`` wall time of a run capped at ``supersteps``."""
    cfg = EngineConfig(parallelism=parallelism, deterministic=deterministic,
                       max_supersteps=supersteps)
    best = np.inf
    for _ in range(repeats):
        raw = run_all_seeds(graph, algo, params, cfg, backend=backend)
        best = min(best, raw.wall_time)
    return best, raw.supersteps


def cmd_bench(a):
    rows = []
    backends = a.backends or (["numba", "numpy"] if HAVE_NUMBA else ["numpy"])
    for edges in a.edges:
        n = size_for_edges(edges, a.density)
        net = generate(GenSpec(n, n, n, a.density, a.density, 0, a.seed))
        graph = EngineGraph.from_network(net)
        for backend in backends:
            # compile / warm caches outside the timed cells
            bench_cell(graph, a.algo, _params(a), 1, backend, 2, True)
            base = None
            for par in a.parallelism:
                wall, steps = bench_cell(graph, a.algo, _params(a), par, backend, a.supersteps,
                                         a.deterministic, a.repeats)
                if par == a.parallelism[0]:
                    base = wall
                rows.append((graph.num_edges, graph.num_vertices, backend, par, steps, wall,
                             base / wall))
                print(f"edges={graph.num_edges} backend={backend} parallelism={par} "
                      f"wall={wall:.4f}s speedup={base / wall:.2f}")
    out = open(a.out, "w", encoding="utf-8", newline="\n") if a.out else sys.stdout
    try:
        out.write("edges\tvertices\tbackend\tparallelism\tsupersteps\twall_time\tspeedup\n")
        for r in rows:
            out.write(f"{r[0]}\t{r[1]}\t{r[2]}\t{r[3]}\t{r[4]}\t{r[5]:.6f}\t{r[6]:.3f}\n")
    finally:
        if a.out:
            out.close()
    return EXIT_OK


# -- parser --------------------------------------------------------------------------


def build_parser():
    ap = argparse.ArgumentParser(prog="hetprop", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse six matrices and write engine input")
    p.add_argument("--input-dir", help="directory holding <role>.tsv for all six roles")
    for role in ingest.ROLES:
        p.add_argument(f"--{role.replace('_', '-')}", dest=role, help=f"{role} matrix TSV")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_ingest)

    p = sub.add_parser("run", help="propagate from every seed")
    p.add_argument("--input", required=True, help="ingest output directory")
    _engine_args(p)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("eval", help="k-fold cross-validation")
    p.add_argument("--input", required=True)
    _engine_args(p)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--relation", action="append",
                   help="e.g. drug_target (repeatable; default all three)")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("topk", help="ranked candidates for one entity")
    p.add_argument("--input", required=True, help="ingest output directory")
    p.add_argument("--run", required=True, help="run output directory")
    p.add_argument("--entity", required=True, help="entity name or vertex id")
    p.add_argument("--entity-concept", default=None)
    p.add_argument("--concept", required=True, help="concept of the candidates")
    p.add_argument("--k", type=int, default=20)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_topk)

    p = sub.add_parser("experiment", help="deleted-interaction / new-drug experiment")
    p.add_argument("--input", required=True)
    _engine_args(p)
    p.add_argument("--algos", nargs="+", default=["dhlp1", "dhlp2"])
    p.add_argument("--entity", required=True, help="drug name")
    p.add_argument("--partner", default=None, help="target name; omit to remove all")
    p.add_argument("--top", type=int, default=20)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_experiment)

    p = sub.add_parser("generate", help="write a synthetic six-matrix network")
    for n in ("n1", "n2", "n3"):
        p.add_argument(f"--{n}", type=int, default=20)
    p.add_argument("--homo-density", type=float, default=0.1)
    p.add_argument("--hetero-density", type=float, default=0.1)
    p.add_argument("--blocks", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_generate)

    p = sub.add_parser("bench", help="wall time over network size x parallelism")
    p.add_argument("--algo", choices=["dhlp1", "dhlp2"], default="dhlp2")
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--sigma", type=float, default=1e-6)
    p.add_argument("--deterministic", action=argparse.BooleanOptionalAction, default=False)
    p.add_argument("--edges", type=int, nargs="+", default=[100_000])
    p.add_argument("--density", type=float, default=0.05)
    p.add_argument("--parallelism", dest="parallelism", type=int, nargs="+", default=[1, 4])
    p.add_argument("--backends", nargs="+", choices=["numba", "numpy"], default=None)
    p.add_argument("--supersteps", type=int, default=20, help="superstep cap per cell")
    p.add_argument("--repeats", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_bench)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except CommandError as exc:
        _err(str(exc))
        return exc.code
    except (ValidationError, ConfigurationError, GraphFormatError, ValueError) as exc:
        _err(str(exc))
        return EXIT_INVALID
    except OSError as exc:
        _err(str(exc))
        return EXIT_IO


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
