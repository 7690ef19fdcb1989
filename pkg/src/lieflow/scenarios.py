"""Scenario catalog, experiment runs, sweeps and verdicts."""

from __future__ import annotations

import configparser
import time
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .algebra import LieAlgebra, restrict
from .grading import algebra_decomposability_report, bracket_grading_defect
from .graph import (
    ChainGraph,
    RecurrenceReport,
    build_chain_graph,
    mutual_reachability_fraction,
    recurrent_estimate,
)
from .groups import FlowSpec, make_chart
from .io import FormatError, load_algebra, parse_algebra, parse_matrix, parse_vector, parse_window

EXPECTATIONS = ("central subgroup", "all")
SCHEMA = "lieflow.report/1"


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Scenario:
    name: str
    algebra: LieAlgebra
    algebra_file: str
    chart: str
    flow_mode: str
    generator: np.ndarray
    window: np.ndarray
    spacing: float
    eps: float
    tau: float
    class_hint: str
    expected_recurrent: str
    group: str | None = None
    min_fraction: float = 0.95
    g0_connected: bool = True
    description: str = ""

    def flow(self) -> FlowSpec:
        chart = make_chart(self.chart, self.algebra, self.group)
        return FlowSpec(chart, self.flow_mode, self.generator)

    def with_overrides(self, **kw) -> "Scenario":
        kw = {k: v for k, v in kw.items() if v is not None}
        if "window" in kw:
            w = kw["window"]
            kw["window"] = parse_window(w, self.algebra.dim) if isinstance(w, str) else np.asarray(w, dtype=float)
        return replace(self, **kw)

    def parameters(self) -> dict:
        return {
            "eps": self.eps,
            "tau": self.tau,
            "spacing": self.spacing,
            "window": self.window.tolist(),
            "chart": self.chart,
            "group": self.group,
            "flow_mode": self.flow_mode,
            "generator": self.generator.tolist(),
            "class_hint": self.class_hint,
            "expected_recurrent": self.expected_recurrent,
            "min_fraction": self.min_fraction,
        }


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "yes", "true", "on"):
        return True
    if t in ("0", "no", "false", "off"):
        return False
    raise FormatError(f"not a boolean: {text!r}")


def _resolve_algebra(ref: str, base: Path | None) -> LieAlgebra:
    candidates = []
    if base is not None:
        candidates.append(base / ref)
    candidates.append(Path(ref))
    for c in candidates:
        if c.is_file():
            return load_algebra(c)
    data = resources.files("lieflow") / "data" / ref
    if data.is_file():
        return parse_algebra(data.read_text(), Path(ref).stem)
    raise ScenarioError(f"algebra file {ref!r} not found")


def scenario_from_section(name: str, sec, base: Path | None = None) -> Scenario:
    try:
        alg = _resolve_algebra(sec["algebra"], base)
        mode = sec["flow_mode"].strip()
        if mode == "derivation":
            gen = parse_matrix(sec["D"])
        elif mode == "inner":
            gen = parse_vector(sec["X"])
        else:
            raise ScenarioError(f"{name}: unknown flow_mode {mode!r}")
        expected = sec.get("expected_recurrent", "central subgroup").strip()
        if expected not in EXPECTATIONS:
            raise ScenarioError(f"{name}: expected_recurrent must be one of {EXPECTATIONS}")
        sc = Scenario(
            name=name,
            algebra=alg,
            algebra_file=sec["algebra"],
            chart=sec["chart"].strip(),
            flow_mode=mode,
            generator=gen,
            window=parse_window(sec["window"], alg.dim),
            spacing=float(sec["spacing"]),
            eps=float(sec["eps"]),
            tau=float(sec["tau"]),
            class_hint=sec.get("class_hint", "general").strip(),
            expected_recurrent=expected,
            group=sec.get("group", None),
            min_fraction=float(sec.get("min_fraction", "0.95")),
            g0_connected=_bool(sec.get("g0_connected", "yes")),
            description=sec.get("description", ""),
        )
        sc.flow()  # validates chart, derivation, generator shape
    except KeyError as exc:
        raise ScenarioError(f"scenario {name!r} is missing key {exc.args[0]!r}") from exc
    except ValueError as exc:
        if isinstance(exc, ScenarioError):
            raise
        raise ScenarioError(f"scenario {name!r}: {exc}") from exc
    return sc


def load_scenarios(text: str, base: Path | None = None) -> dict[str, Scenario]:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    cp.optionxform = str  # keep 'D' and 'X' as written
    cp.read_string(text)
    return {name: scenario_from_section(name, cp[name], base) for name in cp.sections()}


def load_scenario_file(path) -> dict[str, Scenario]:
    p = Path(path)
    return load_scenarios(p.read_text(), p.parent)


_CATALOG: dict[str, Scenario] | None = None


def catalog() -> dict[str, Scenario]:
    global _CATALOG
    if _CATALOG is None:
        text = (resources.files("lieflow") / "data" / "catalog.ini").read_text()
        _CATALOG = load_scenarios(text)
    return dict(_CATALOG)


def get_scenario(name: str, extra: dict[str, Scenario] | None = None) -> Scenario:
    pool = dict(catalog())
    if extra:
        pool.update(extra)
    if name not in pool:
        raise ScenarioError(f"unknown scenario {name!r}; known: {', '.join(pool)}")
    return pool[name]


# ---------------------------------------------------------------------------
# Runs


@dataclass(eq=False)
class ExperimentReport:
    scenario: Scenario
    graph: ChainGraph
    recurrence: RecurrenceReport
    fraction: float
    invariance_fraction: float
    status: str
    checks: dict
    seed: int
    wall_clock: float = 0.0
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.status == "PASS"

    def to_dict(self, timing: bool = False, coordinates: bool = True) -> dict:
        sc = self.scenario
        spec = self.graph.spec
        tri = spec.tri
        rec = self.recurrence
        rn = rec.recurrent_nodes
        cd = rec.central_distance
        out = {
            "schema": SCHEMA,
            "scenario": sc.name,
            "description": sc.description,
            "parameters": {**sc.parameters(), "seed": self.seed},
            "decomposition": {
                "flow_type": spec.flow_type,
                "dims": {"plus": tri.dims[0], "zero": tri.dims[1], "minus": tri.dims[2]},
                "decomposability": algebra_decomposability_report(sc.algebra, tri, sc.class_hint).verdict,
                "g0_connected": sc.g0_connected,
            },
            "graph": {
                "node_count": self.graph.n_nodes,
                "edge_count": self.graph.n_edges,
                "interior_count": int(np.sum(self.graph.interior_mask)),
                "shape": list(self.graph.shape),
            },
            "recurrence": {
                "recurrent_count": int(len(rn)),
                "component_sizes": sorted((len(c) for c in rec.components), reverse=True),
                "max_central_distance": float(np.max(cd[rn])) if len(rn) else 0.0,
                "mutual_reachability_fraction": self.fraction,
                "invariance_fraction": self.invariance_fraction,
            },
            "verdict": {"expected": sc.expected_recurrent, "status": self.status, "checks": self.checks},
        }
        if coordinates:
            out["recurrence"]["recurrent_coordinates"] = self.graph.coords[rn].tolist()
        if self.extra:
            out["extra"] = self.extra
        if timing:
            out["timing"] = {"wall_clock_seconds": self.wall_clock, "backend": self.graph.backend}
        return out


def invariance_fraction(graph: ChainGraph, rec: RecurrenceReport, seed: int, samples: int = 200, t_max: float | None = None) -> float:
    """Share of sampled recurrent nodes ``x`` whose ``phi_t(x)`` (small ``t``) is nearest to a cyclic node."""
    rn = rec.recurrent_nodes
    if len(rn) == 0:
        return 1.0
    rng = np.random.default_rng(seed)
    t_max = graph.tau if t_max is None else t_max
    picks = rng.choice(rn, size=min(samples, len(rn) * 4), replace=True)
    ts = rng.uniform(-t_max, t_max, size=len(picks))
    hits = 0
    for i, t in zip(picks, ts):
        y = graph.coords[i] @ graph.spec.coord_flow(t).T
        hits += bool(rec.cyclic[graph.node_index(y)])
    return hits / len(picks)


def verdict(sc: Scenario, graph: ChainGraph, rec: RecurrenceReport, fraction: float) -> tuple[str, dict]:
    if sc.expected_recurrent == "central subgroup":
        rn = rec.recurrent_nodes
        cd = rec.central_distance
        bound = 2 * sc.eps
        near = np.nonzero(graph.interior_mask & (cd <= sc.spacing / 2 + 1e-12))[0]
        missing = near[~rec.recurrent[near]]
        checks = {
            "recurrent_within_bound": bool(np.all(cd[rn] <= bound + 1e-12)),
            "bound": bound,
            "central_nodes": int(len(near)),
            "central_nodes_recurrent": bool(len(missing) == 0),
            "central_nodes_missing": int(len(missing)),
        }
        ok = checks["recurrent_within_bound"] and checks["central_nodes_recurrent"] and len(near) > 0
    else:
        checks = {"fraction": fraction, "min_fraction": sc.min_fraction, "interior_nodes": int(np.sum(graph.interior_mask))}
        ok = fraction >= sc.min_fraction and checks["interior_nodes"] > 0
    return ("PASS" if ok else "FAIL"), checks


def run_scenario(scenario: Scenario | str, seed: int = 0, **overrides) -> ExperimentReport:
    sc = get_scenario(scenario) if isinstance(scenario, str) else scenario
    sc = sc.with_overrides(**overrides)
    start = time.perf_counter()
    try:
        spec = sc.flow()
        graph = build_chain_graph(spec, sc.window, sc.spacing, sc.eps, sc.tau)
        rec = recurrent_estimate(graph)
        frac = mutual_reachability_fraction(graph, rec)
        inv = invariance_fraction(graph, rec, seed)
        status, checks = verdict(sc, graph, rec, frac)
    except Exception as exc:
        raise ScenarioError(f"scenario {sc.name!r}: {exc}") from exc
    return ExperimentReport(sc, graph, rec, frac, inv, status, checks, seed, time.perf_counter() - start)


@dataclass(eq=False)
class SweepResult:
    reports: list
    monotone: bool

    @property
    def status(self) -> str:
        return "PASS" if self.monotone and all(r.passed for r in self.reports) else "FAIL"

    def to_dict(self, timing: bool = False) -> dict:
        return {
            "schema": SCHEMA,
            "sweep": [r.to_dict(timing, coordinates=False) for r in self.reports],
            "recurrent_counts": [int(len(r.recurrence.recurrent_nodes)) for r in self.reports],
            "monotone": self.monotone,
            "status": self.status,
        }


def nested_recurrence(small: RecurrenceReport, big: RecurrenceReport, mask: np.ndarray) -> bool:
    """Whether the cyclic set at the smaller eps is inside the one at the larger eps on ``mask``."""
    return bool(np.all(~(small.cyclic & mask) | big.cyclic))


def sweep(scenario: Scenario | str, eps_list, seed: int = 0, **overrides) -> SweepResult:
    eps_sorted = sorted((float(e) for e in eps_list), reverse=True)
    if not eps_sorted or min(eps_sorted) <= 0:
        raise ScenarioError("eps values must be positive")
    reports = [run_scenario(scenario, seed=seed, eps=e, **overrides) for e in eps_sorted]
    mono = True
    for big, small in zip(reports, reports[1:]):
        mask = big.graph.interior_mask & small.graph.interior_mask
        mono &= nested_recurrence(small.recurrence, big.recurrence, np.ones_like(mask))
        mono &= bool(np.all(~(small.recurrence.recurrent & mask) | big.recurrence.recurrent))
    return SweepResult(reports, mono)


def restriction_check(scenario: Scenario | str, **overrides) -> dict:
    """Rerun on the central subgroup alone and compare with the ambient trace on it.

    The restricted run uses the subalgebra ``g0`` with the induced derivation,
    a cube of the smallest ambient half-width, and the same eps, tau and
    spacing.  Both sets are compared within one grid cell (Chebyshev distance
    in ambient coordinates) over the region interior to both runs.
    """
    sc = get_scenario(scenario) if isinstance(scenario, str) else scenario
    sc = sc.with_overrides(**overrides)
    spec = sc.flow()
    if spec.chart.kind == "matrix-embedded":
        raise ScenarioError("restriction check needs an exponential chart")
    z = spec.tri.zero
    if z.shape[1] == 0:
        raise ScenarioError("central subalgebra is trivial")
    amb = run_scenario(sc)
    sub = restrict(sc.algebra, z, name=f"{sc.algebra.name}_0")
    kind = "abelian" if not np.any(sub.structure_constants) else "nilpotent-exp"
    d0 = z.T @ spec.D @ z
    spec0 = FlowSpec(make_chart(kind, sub), "derivation", d0)
    half = float(np.min(np.abs(sc.window)))
    g0 = build_chain_graph(spec0, half, sc.spacing, sc.eps, sc.tau)
    r0 = recurrent_estimate(g0)
    lifted = g0.coords @ z.T
    ag = amb.graph
    inside_amb = ag.interior_mask
    trace = np.nonzero(amb.recurrence.recurrent & (amb.recurrence.central_distance <= sc.spacing / 2 + 1e-12))[0]
    amb_lo, amb_hi = ag.window[:, 0] + sc.eps, ag.window[:, 1] - sc.eps
    common0 = g0.interior_mask & np.all((lifted >= amb_lo - 1e-12) & (lifted <= amb_hi + 1e-12), axis=1)
    rec0 = np.nonzero(r0.recurrent & common0)[0]
    tol = sc.spacing * (1 + 1e-9)

    def covered(points, targets):
        if len(points) == 0:
            return True
        if len(targets) == 0:
            return False
        d = np.max(np.abs(points[:, None, :] - targets[None, :, :]), axis=2)
        return bool(np.all(np.min(d, axis=1) <= tol))

    sub_lo = -half + sc.eps
    sub_hi = half - sc.eps
    tr_coords = ag.coords[trace]
    tr_in = tr_coords[np.all((tr_coords @ z >= sub_lo - 1e-12) & (tr_coords @ z <= sub_hi + 1e-12), axis=1) & inside_amb[trace]]
    all_rec = bool(np.all(r0.recurrent[g0.interior_mask]))
    a_to_b = covered(lifted[rec0], ag.coords[trace])
    b_to_a = covered(tr_in, lifted[rec0])
    return {
        "restricted_all_recurrent": all_rec,
        "restricted_nodes": g0.n_nodes,
        "restricted_recurrent": int(np.sum(r0.recurrent)),
        "ambient_trace_nodes": int(len(trace)),
        "restricted_covered_by_trace": a_to_b,
        "trace_covered_by_restricted": b_to_a,
        "status": "PASS" if all_rec and a_to_b and b_to_a else "FAIL",
    }


def grading_summary(sc: Scenario) -> dict:
    spec = sc.flow()
    tri = spec.tri
    return {
        "grading_defect": bracket_grading_defect(sc.algebra, list(tri.layers)),
        "dims": tri.dims,
        "flow_type": spec.flow_type,
    }

