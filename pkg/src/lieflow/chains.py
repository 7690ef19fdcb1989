"""(eps, tau)-chains of a flow and the transformations that carry chains to chains."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .groups import FlowSpec, flow_apply, flow_apply_times
from .jordan import classify
from .linalg import OutOfWindowError


class ChainError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Chain:
    """Points ``x_0 .. x_n`` (stacked along axis 0) and jump times ``tau_0 .. tau_{n-1}``."""

    points: np.ndarray
    times: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        ts = np.array(self.times, dtype=float).reshape(-1)
        if len(pts) < 2:
            raise ChainError("a chain needs at least one jump")
        if len(ts) != len(pts) - 1:
            raise ChainError(f"{len(pts)} points need {len(pts) - 1} times, got {len(ts)}")
        if np.any(ts <= 0):
            raise ChainError("jump times must be positive")
        pts.setflags(write=False)
        ts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "times", ts)

    @property
    def n(self) -> int:
        return len(self.times)

    @property
    def total_time(self) -> float:
        return float(np.sum(self.times))

    @property
    def start(self) -> np.ndarray:
        return self.points[0]

    @property
    def end(self) -> np.ndarray:
        return self.points[-1]

    def prefix_times(self) -> np.ndarray:
        """``T_i = tau_0 + ... + tau_{i-1}`` for ``i = 0 .. n``."""
        return np.concatenate([[0.0], np.cumsum(self.times)])


class ChainCheck(NamedTuple):
    valid: bool
    max_residual: float
    reason: str = ""


def jump_residuals(spec: FlowSpec, chain: Chain) -> np.ndarray:
    """``||log(x_{i+1}^-1 phi_{tau_i}(x_i))||`` per jump; raises OutOfWindowError for matrix charts."""
    images = flow_apply_times(spec, chain.times, chain.points[:-1])
    return np.asarray(spec.chart.distance(chain.points[1:], images), dtype=float).reshape(-1)


def validate_chain(spec: FlowSpec, chain: Chain, eps: float, tau: float) -> ChainCheck:
    try:
        res = jump_residuals(spec, chain)
    except OutOfWindowError as exc:
        return ChainCheck(False, math.inf, f"out of chart window: {exc}")
    worst = float(np.max(res))
    short = np.nonzero(chain.times < tau * (1 - 1e-12))[0]
    if short.size:
        return ChainCheck(False, worst, f"jump {int(short[0])} has time {chain.times[short[0]]:g} < tau = {tau:g}")
    bad = np.nonzero(res >= eps)[0]
    if bad.size:
        return ChainCheck(False, worst, f"jump {int(bad[0])} residual {res[bad[0]]:.6g} >= eps = {eps:g}")
    return ChainCheck(True, worst, "")


def orbit_chain(spec: FlowSpec, x: np.ndarray, times) -> Chain:
    """The exact orbit segment through ``x`` with the given jump times (zero residuals)."""
    times = np.asarray(times, dtype=float).reshape(-1)
    pts = [np.asarray(x, dtype=float)]
    for t in times:
        pts.append(flow_apply(spec, t, pts[-1]))
    return Chain(np.array(pts), times)


def concatenate(a: Chain, b: Chain, atol: float = 1e-12) -> Chain:
    if np.max(np.abs(a.end - b.start)) > atol:
        raise ChainError("end of the first chain differs from the start of the second")
    return Chain(np.concatenate([a.points, b.points[1:]]), np.concatenate([a.times, b.times]))


def translate_chain(spec: FlowSpec, chain: Chain, g: np.ndarray) -> tuple[Chain, Chain]:
    """Left translates of a chain from ``x`` to ``y``.

    Returns ``(xi_L, xi_R)`` with ``xi_L`` from ``g x`` to ``phi_T(g) y`` (points
    ``phi_{T_i}(g) x_i``) and ``xi_R`` from ``phi_{-T}(g) x`` to ``g y`` (points
    ``phi_{T_i - T}(g) x_i``); both keep every jump residual.
    """
    chart = spec.chart
    g = np.asarray(g, dtype=float)
    pref = chain.prefix_times()
    total = pref[-1]
    gs = np.broadcast_to(g, chain.points.shape)
    left = chart.mul(flow_apply_times(spec, pref, gs), chain.points)
    right = chart.mul(flow_apply_times(spec, pref - total, gs), chain.points)
    return Chain(left, chain.times), Chain(right, chain.times)


def normalize_times(spec: FlowSpec, chain: Chain, tau: float) -> Chain:
    """Split each jump longer than ``2 tau`` into orbit pieces with times in ``[tau, 2 tau]``.

    The inserted waypoints are exact orbit points, so every new jump has
    residual zero except the last piece of each original jump.
    """
    if np.any(chain.times < tau * (1 - 1e-12)):
        raise ChainError("chain has a jump time below tau")
    pts = [chain.points[0]]
    times = []
    for i, t in enumerate(chain.times):
        k = max(1, math.ceil(t / (2 * tau) - 1e-12))
        piece = t / k
        x = chain.points[i]
        for _ in range(k - 1):
            x = flow_apply(spec, piece, x)
            pts.append(x)
            times.append(piece)
        pts.append(chain.points[i + 1])
        times.append(piece)
    return Chain(np.array(pts), np.array(times))


def distortion(spec: FlowSpec, t_lo: float, t_hi: float, extra=(), samples: int = 65) -> float:
    """Largest operator norm of ``e^{tD}`` over sampled ``t`` in ``[t_lo, t_hi]`` (plus ``extra`` times)."""
    ts = np.concatenate([np.linspace(t_lo, t_hi, samples), np.asarray(list(extra), dtype=float)])
    return max(float(np.linalg.norm(spec.coord_flow(t), 2)) for t in ts)


class ReversedChain(NamedTuple):
    chain: Chain
    eps_prime: float
    spec: FlowSpec


def reverse_chain(spec: FlowSpec, chain: Chain, eps: float, tau: float) -> ReversedChain:
    """Reverse a chain valid at ``(eps, tau)`` into a chain of the reverse flow.

    The output is valid at ``(eps', tau)`` where ``eps'`` is ``eps`` times the
    largest distortion of ``e^{tD}`` for ``t`` in ``[-2 tau, 0]``.
    """
    norm = normalize_times(spec, chain, tau)
    rev = Chain(norm.points[::-1], norm.times[::-1])
    grow = distortion(spec, -2 * tau, 0.0, extra=-norm.times)
    return ReversedChain(rev, eps * grow * (1 + 1e-9), spec.reversed())


def elliptic_compose_chain(spec_phi: FlowSpec, spec_psi: FlowSpec, chain: Chain, seed: int = 0) -> tuple[Chain, FlowSpec]:
    """Carry a chain of ``phi`` to a chain of ``phi o psi`` for an elliptic ``psi`` commuting with ``phi``.

    The new points are ``psi_{T_i}(x_i)``.  Returns the chain and the composed flow.
    """
    kind = classify(spec_psi.D)
    if kind != "elliptic" and np.any(spec_psi.D):
        raise ChainError(f"psi must be elliptic, got {kind}")
    rng = np.random.default_rng(seed)
    chart = spec_phi.chart
    for _ in range(8):
        g = chart.exp(0.5 * rng.normal(size=chart.dim))
        t, s = rng.uniform(-1, 1, size=2)
        lhs = flow_apply(spec_phi, t, flow_apply(spec_psi, s, g))
        rhs = flow_apply(spec_psi, s, flow_apply(spec_phi, t, g))
        if float(chart.distance(lhs, rhs)) > 1e-9:
            raise ChainError("flows do not commute")
    pts = flow_apply_times(spec_psi, chain.prefix_times(), chain.points)
    return Chain(pts, chain.times), spec_phi.compose(spec_psi)


def random_chain(
    spec: FlowSpec,
    x0: np.ndarray,
    n: int,
    eps: float,
    tau: float,
    rng: np.random.Generator,
    tau_max: float | None = None,
) -> Chain:
    """A random chain valid at ``(eps, tau)``: ``x_{i+1} = phi_{tau_i}(x_i) exp(-w_i)`` with ``||w_i|| < eps``."""
    chart = spec.chart
    tau_max = 2 * tau if tau_max is None else tau_max
    times = rng.uniform(tau, tau_max, size=n)
    pts = [np.asarray(x0, dtype=float)]
    for t in times:
        w = rng.normal(size=chart.dim)
        w *= 0.999 * eps * rng.random() ** (1 / chart.dim) / np.linalg.norm(w)
        pts.append(chart.mul(flow_apply(spec, t, pts[-1]), chart.exp(-w)))
    return Chain(np.array(pts), times)
