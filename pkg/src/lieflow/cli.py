"""Command line interface: ``lieflow <command> ...``.

Exit status is 0 on PASS (or plain success), 2 on FAIL and 1 on errors.
"""

from __future__ import annotations

import argparse
import sys
import warnings

import numpy as np

from . import __version__
from .algebra import is_derivation
from .chains import validate_chain
from .graph import build_chain_graph, extract_chain, find_cycle, recurrent_estimate
from .grading import bracket_grading_defect, decompose_algebra
from .io import atomic_write, csv_block, csv_text, dumps_json, load_algebra, load_matrix, parse_window
from .jordan import classify, jordan_additive
from .quotient import homo_witness, intertwining_residual, lift_chain, project_chain, quotient_map
from .scenarios import SCHEMA, catalog, get_scenario, load_scenario_file, restriction_check, run_scenario, sweep

EXIT_PASS, EXIT_ERROR, EXIT_FAIL = 0, 1, 2


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.replace(";", ",").split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma separated numbers, got {text!r}") from exc


def _emit(text: str, out: str | None) -> None:
    if out:
        atomic_write(out, text)
    else:
        sys.stdout.write(text)


def _scenario(args):
    extra = load_scenario_file(args.config) if getattr(args, "config", None) else None
    return get_scenario(args.scenario, extra)


def _overrides(args) -> dict:
    return {"eps": args.eps, "tau": args.tau, "spacing": args.spacing, "window": args.window}


def node_table(graph, rec) -> str:
    d = graph.coords.shape[1]
    header = ["node", *[f"x{k}" for k in range(d)], "interior", "cyclic", "recurrent", "component", "central_distance"]
    rows = []
    for i in range(graph.n_nodes):
        rows.append(
            [
                i,
                *[float(v) for v in graph.coords[i]],
                int(graph.interior_mask[i]),
                int(rec.cyclic[i]),
                int(rec.recurrent[i]),
                int(rec.labels[i]),
                float(rec.central_distance[i]),
            ]
        )
    return csv_text(header, rows)


def cmd_catalog(args) -> int:
    pool = catalog()
    if args.config:
        pool.update(load_scenario_file(args.config))
    width = max(len(n) for n in pool)
    for name, sc in pool.items():
        print(f"{name:<{width}}  {sc.chart:<15}  {sc.flow_mode:<10}  {sc.class_hint:<21}  expected: {sc.expected_recurrent}")
    return EXIT_PASS


def cmd_run(args) -> int:
    sc = _scenario(args)
    rep = run_scenario(sc, seed=args.seed, **_overrides(args))
    data = rep.to_dict(timing=args.timing)
    if args.restriction:
        data["restriction"] = restriction_check(sc, **_overrides(args))
        if data["restriction"]["status"] != "PASS":
            data["verdict"]["status"] = "FAIL"
    _emit(dumps_json(data), args.out)
    if args.csv:
        atomic_write(args.csv, node_table(rep.graph, rep.recurrence))
    if args.out:
        print(f"{sc.name}: {data['verdict']['status']}")
    return EXIT_PASS if data["verdict"]["status"] == "PASS" else EXIT_FAIL


def cmd_sweep(args) -> int:
    sc = _scenario(args)
    res = sweep(sc, args.eps, seed=args.seed, tau=args.tau, spacing=args.spacing, window=args.window)
    _emit(dumps_json(res.to_dict(timing=args.timing)), args.out)
    if args.out:
        print(f"{sc.name}: {res.status}")
    return EXIT_PASS if res.status == "PASS" else EXIT_FAIL


def cmd_chain_graph(args) -> int:
    sc = _scenario(args).with_overrides(**_overrides(args))
    spec = sc.flow()
    graph = build_chain_graph(spec, sc.window, sc.spacing, sc.eps, sc.tau)
    rec = recurrent_estimate(graph)
    data = {
        "schema": SCHEMA,
        "scenario": sc.name,
        "parameters": {"eps": sc.eps, "tau": sc.tau, "spacing": sc.spacing, "window": sc.window.tolist()},
        "node_count": graph.n_nodes,
        "edge_count": graph.n_edges,
        "interior_count": int(np.sum(graph.interior_mask)),
        "recurrent_coordinates": graph.coords[rec.recurrent_nodes].tolist(),
        "component_sizes": sorted((len(c) for c in rec.components), reverse=True),
        "central_distance": rec.central_distance.tolist(),
    }
    _emit(dumps_json(data), args.out)
    if args.csv:
        atomic_write(args.csv, node_table(graph, rec))
    return EXIT_PASS


def cmd_decompose(args) -> int:
    d = load_matrix(args.matrix)
    if d.shape[0] != d.shape[1]:
        raise ValueError(f"matrix must be square, got {d.shape}")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        jd = jordan_additive(d, args.tol)
        kind = classify(d)
    parts = [f"# classification\n{kind}\n"]
    eig = [[v.real, v.imag, m] for v, m in jd.spectral.eigenvalues]
    parts.append("# eigenvalues\n" + csv_text(["re", "im", "multiplicity"], eig))
    for name, m in jd.parts().items():
        parts.append(csv_block(name, m))
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    _emit("\n".join(parts), args.out)
    return EXIT_PASS


def cmd_grade(args) -> int:
    alg = load_algebra(args.algebra)
    d = load_matrix(args.matrix)
    ok, defect = is_derivation(alg, d)
    if not ok:
        raise ValueError(f"matrix is not a derivation of the algebra (Leibniz defect {defect:.3g})")
    tri = decompose_algebra(alg, jordan_additive(d))
    parts = ["# layers\nlambda,dim\n" + "".join(f"{float(layer.lam)!r},{layer.dim}\n" for layer in tri.layers)]
    for layer in tri.layers:
        parts.append(csv_block(f"layer {float(layer.lam)!r} basis (rows)", layer.basis.T))
    for name in ("plus", "zero", "minus"):
        b = tri.subspace(name)
        parts.append(csv_block(f"{name} basis (rows)", b.T) if b.shape[1] else f"# {name} basis (rows)\n")
    parts.append(f"# grading defect\n{float(bracket_grading_defect(alg, list(tri.layers)))!r}\n")
    _emit("\n".join(parts), args.out)
    return EXIT_PASS


def cmd_quotient(args) -> int:
    sc = _scenario(args)
    spec = sc.flow()
    qm = quotient_map(spec, args.ideal)
    rng = np.random.default_rng(args.seed)
    inter = intertwining_residual(qm, samples=args.samples, seed=args.seed)
    graph = build_chain_graph(spec, sc.window, sc.spacing, sc.eps, sc.tau)
    rec = recurrent_estimate(graph)
    projected_ok = lifted_ok = 0
    worst_off = 0.0
    tried = 0
    nodes = rec.recurrent_nodes
    for x in rng.permutation(nodes)[: args.samples]:
        path = find_cycle(graph, int(x))
        if path is None:
            continue
        tried += 1
        chain = extract_chain(graph, path)
        pc = project_chain(qm, chain)
        projected_ok += validate_chain(qm.flow, pc, sc.eps, sc.tau).valid
        lift = lift_chain(qm, pc, args.u_radius)
        lifted_ok += validate_chain(spec, lift.chain, args.u_radius, sc.tau).valid
        worst_off = max(worst_off, float(qm.off_h(lift.h)))
    witness = homo_witness(qm, args.u_radius, samples=args.samples, seed=args.seed)
    ok = inter < 1e-9 and projected_ok == tried and lifted_ok == tried and worst_off < 1e-6 and witness > 0
    data = {
        "schema": SCHEMA,
        "scenario": sc.name,
        "ideal": [int(i) for i in args.ideal],
        "induced_derivation": qm.induced_D.tolist(),
        "quotient_flow_type": classify(qm.induced_D),
        "intertwining_residual": inter,
        "engine_chains": tried,
        "projected_valid": int(projected_ok),
        "lifted_valid": int(lifted_ok),
        "max_off_ideal_correction": worst_off,
        "u_radius": args.u_radius,
        "homo_witness_eps": witness,
        "status": "PASS" if ok else "FAIL",
    }
    _emit(dumps_json(data), args.out)
    return EXIT_PASS if ok else EXIT_FAIL


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with status 1 so that 2 always means a FAIL verdict."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="lieflow", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"lieflow {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def scenario_args(sp, with_eps=True):
        sp.add_argument("scenario")
        sp.add_argument("--config", help="extra scenario file (sectioned key/value)")
        if with_eps:
            sp.add_argument("--eps", type=float)
        sp.add_argument("--tau", type=float)
        sp.add_argument("--spacing", type=float)
        sp.add_argument("--window", help="'lo hi' or 'lo hi; lo hi; ...' or a half-width")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", help="write the JSON report here (atomically) instead of stdout")

    c = sub.add_parser("catalog", help="list scenarios")
    c.add_argument("action", choices=["list"])
    c.add_argument("--config")
    c.set_defaults(func=cmd_catalog)

    r = sub.add_parser("run", help="run one scenario")
    scenario_args(r)
    r.add_argument("--csv", help="write the per-node table here")
    r.add_argument("--timing", action="store_true", help="include wall-clock and backend (breaks byte-identity)")
    r.add_argument("--restriction", action="store_true", help="also run the restriction check on the central subgroup")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="run a scenario for several eps")
    scenario_args(s, with_eps=False)
    s.add_argument("--eps", type=_float_list, required=True, help="comma separated, e.g. 0.2,0.1,0.05")
    s.add_argument("--timing", action="store_true")
    s.set_defaults(func=cmd_sweep)

    g = sub.add_parser("chain-graph", help="build a chain graph and report recurrence")
    scenario_args(g)
    g.add_argument("--csv", help="write the per-node table here")
    g.set_defaults(func=cmd_chain_graph)

    d = sub.add_parser("decompose", help="Jordan decomposition of a matrix")
    d.add_argument("--matrix", required=True)
    d.add_argument("--tol", type=float, default=None)
    d.add_argument("--out")
    d.set_defaults(func=cmd_decompose)

    gr = sub.add_parser("grade", help="eigen-layers and the unstable/central/stable splitting")
    gr.add_argument("--algebra", required=True)
    gr.add_argument("--matrix", required=True)
    gr.add_argument("--out")
    gr.set_defaults(func=cmd_grade)

    q = sub.add_parser("quotient", help="quotient by an ideal: induced flow, projected and lifted chains")
    q.add_argument("scenario")
    q.add_argument("--ideal", type=lambda t: [int(x) for x in t.replace(",", " ").split()], required=True, help="basis indices, e.g. 2 or 0,2")
    q.add_argument("--config")
    q.add_argument("--u-radius", type=float, default=0.3)
    q.add_argument("--samples", type=int, default=100)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--out")
    q.set_defaults(func=cmd_quotient)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if getattr(args, "window", None) is not None:
            parse_window(args.window)  # fail early on syntax
        return int(args.func(args))
    except Exception as exc:  # reported, not raised: exit status 1
        print(f"lieflow: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
