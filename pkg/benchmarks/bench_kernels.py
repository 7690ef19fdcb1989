"""Compare the compiled and numpy chain-graph kernels on Heisenberg saddle grids.

    python benchmarks/bench_kernels.py --repeat 3
"""

import argparse
import time

import numpy as np

from lieflow import _core_py
from lieflow.graph import _radius_step2, grid, normalize_window
from lieflow.scenarios import get_scenario

try:
    from lieflow import _core
except ImportError:  # extension not built
    _core = None


def best_of(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def case(spacing, eps, repeat):
    sc = get_scenario("heis-saddle")
    spec = sc.flow()
    win = normalize_window(sc.window, 3)
    coords, shape = grid(win, spacing)
    images = coords @ spec.coord_flow(sc.tau).T
    radius = _radius_step2(spec, images, eps)
    c = spec.chart.alg.structure_constants
    args = (images, c, win[:, 0], spacing, np.array(shape, dtype=np.int64), radius, eps)
    row = {"nodes": len(coords)}
    backends = [("python", _core_py)] + ([("cython", _core)] if _core is not None else [])
    results = {}
    for name, mod in backends:
        t_edges, (indptr, indices) = best_of(lambda: mod.edges_step2(*args), repeat)
        t_scc, labels = best_of(lambda: mod.tarjan_scc(indptr, indices), repeat)
        row[f"{name}_edges"] = t_edges
        row[f"{name}_scc"] = t_scc
        row["edges"] = int(indptr[-1])
        results[name] = (indptr, indices, len(np.unique(labels)))
    if len(results) == 2:
        a, b = results["python"], results["cython"]
        row["identical"] = bool(np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1]) and a[2] == b[2])
    return row


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--spacings", default="0.2,0.1,0.05")
    ap.add_argument("--eps", type=float, default=0.2)
    args = ap.parse_args()
    print(f"{'spacing':>8} {'nodes':>8} {'edges':>9} {'py edges':>9} {'cy edges':>9} {'py scc':>9} {'cy scc':>9} {'speedup':>8} identical")
    for h in (float(s) for s in args.spacings.split(",")):
        r = case(h, max(args.eps, h), args.repeat)
        cy_e = r.get("cython_edges", float("nan"))
        cy_s = r.get("cython_scc", float("nan"))
        speed = (r["python_edges"] + r["python_scc"]) / (cy_e + cy_s) if _core is not None else float("nan")
        print(
            f"{h:8.3f} {r['nodes']:8d} {r['edges']:9d} {r['python_edges']:9.4f} {cy_e:9.4f} "
            f"{r['python_scc']:9.4f} {cy_s:9.4f} {speed:8.1f} {r.get('identical', '-')}"
        )


if __name__ == "__main__":
    main()
