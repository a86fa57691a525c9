"""Wall time of the numba and numpy kernels over network size and parallelism.

    python benchmarks/bench_backends.py --edges 10000 100000 1000000 --parallelism 1 2 4

Prints a TSV table; each cell is the best of ``--repeats`` runs capped at
``--supersteps`` supersteps, after one untimed warm-up per backend.
"""
import argparse
import os
import sys

from hetprop._accel import HAVE_NUMBA
from hetprop.cli import bench_cell
from hetprop.graph import EngineGraph
from hetprop.labelprop.program import AlgoParams
from hetprop.netgen import GenSpec, generate, size_for_edges


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--edges", type=int, nargs="+", default=[10_000, 100_000, 1_000_000])
    ap.add_argument("--density", type=float, default=0.05)
    ap.add_argument("--parallelism", type=int, nargs="+", default=[1, 2, 4])
    ap.add_argument("--algo", choices=["dhlp1", "dhlp2"], default="dhlp2")
    ap.add_argument("--supersteps", type=int, default=30)
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    a = ap.parse_args(argv)

    backends = ["numba", "numpy"] if HAVE_NUMBA else ["numpy"]
    params = AlgoParams(0.5, 1e-6)
    print(f"# cpus={os.cpu_count()}")
    print("edges\tbackend\tparallelism\tsupersteps\twall_time\tus_per_superstep\tvs_numpy")
    for edges in a.edges:
        n = size_for_edges(edges, a.density)
        graph = EngineGraph.from_network(generate(GenSpec(n, n, n, a.density, a.density, 0, a.seed)))
        for par in a.parallelism:
            cells = {}
            for backend in backends:
                bench_cell(graph, a.algo, params, 1, backend, 2, True)
                cells[backend] = bench_cell(graph, a.algo, params, par, backend, a.supersteps,
                                            False, a.repeats)
            for backend, (wall, steps) in cells.items():
                rel = cells["numpy"][0] / wall
                print(f"{graph.num_edges}\t{backend}\t{par}\t{steps}\t{wall:.4f}\t"
                      f"{1e6 * wall / steps:.1f}\t{rel:.2f}", flush=True)
    return 0


if __name__ == "__main__":
    sys.exit(main())
