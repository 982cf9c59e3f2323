"""Dynamic tunneling optimization engine.

A run alternates two phases: a descent phase (plain gradient descent or
FISTA) that relaxes into a stable point, and a tunneling phase that
follows the flow

    x <- x - eta * [pole_factor(D(x, x_stable)) + penalty_weight
                    * relu(f(x) - f_stable)] * grad f(x)

until it finds a point with cost strictly below the stable value. The
distance D is pluggable: Euclidean on parameters reproduces the
conventional method; the Hilbert-Schmidt distance on ansatz states
removes the extrinsic parameter degeneracy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Optional, Protocol

import numpy as np
from scipy.optimize import brentq

from .exceptions import NumericError
from . import sim

# Floor applied to every distance before exponentiation; keeps the pole
# finite in double precision.
DISTANCE_FLOOR = 1e-12
# Cap on -2*lambda*log(d) so d**(-2*lambda) never overflows to inf.
_LOG_CAP = 690.0

CLAMP_MODES = ("none", "cap_2_pow_lambda", "distance_floor")


class CostOracle(Protocol):
    """Pure cost function: evaluate(x) -> (value, gradient, token).

    The token is an opaque handle consumed only by the paired
    DistanceMeasure (the ansatz state for quantum oracles, the parameter
    vector itself for scalar ones).
    """

    dimension: int

    def evaluate(self, x: np.ndarray): ...


class DistanceMeasure(Protocol):
    upper_bound: Optional[float]
    on_parameters: bool  # True: compares parameter vectors; False: state tokens

    def distance(self, a, b) -> float: ...


class EuclideanDistance:
    """Parameter-space distance |x - x_stable|; unbounded."""

    upper_bound = None
    on_parameters = True

    def distance(self, a, b) -> float:
        return float(np.linalg.norm(np.asarray(a) - np.asarray(b)))


class HilbertSchmidtDistance:
    """State distance sqrt(2 - 2 |<psi|phi>|^2); bounded by sqrt(2)."""

    upper_bound = math.sqrt(2.0)
    on_parameters = False

    def distance(self, a: sim.StateVector, b: sim.StateVector) -> float:
        return sim.hs_distance(a, b)


@dataclass
class TunnelConfig:
    """Hyperparameters for one descent/tunnel run."""

    penalty_weight: float = 1.125
    exponent_multiplier: float = 1.5
    learning_rate: float = 0.01
    grad_tol: float = 1e-4  # scaled by sqrt(dimension) at use
    escape_margin: Optional[float] = None  # default 1e-6 * max(1, |f_stable|)
    max_descent_iters: int = 2000
    max_tunnel_iters: int = 2000
    max_tunnels: int = 6
    clamp: str = "none"
    clamp_eps: float = 1e-3
    perturb_radius: float = 1e-3
    seed: int = 0
    max_total_iters: Optional[int] = None

    def __post_init__(self):
        if self.clamp not in CLAMP_MODES:
            raise ValueError(f"clamp must be one of {CLAMP_MODES}, got {self.clamp!r}")
        for name in ("learning_rate", "grad_tol", "perturb_radius", "clamp_eps"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.penalty_weight < 0 or self.exponent_multiplier <= 0:
            raise ValueError("penalty_weight must be >= 0, exponent_multiplier > 0")

    def effective_grad_tol(self, dimension: int) -> float:
        return self.grad_tol * math.sqrt(dimension)

    def effective_escape_margin(self, f_stable: float) -> float:
        if self.escape_margin is not None:
            return self.escape_margin
        return 1e-6 * max(1.0, abs(f_stable))


@dataclass
class StablePoint:
    """A descent endpoint: position, cost, state token, pole exponent."""

    x: np.ndarray
    value: float
    token: Any
    pole_exponent: float
    descent_iters: int
    grad_norm: float
    converged: bool


@dataclass
class DescentTrace:
    """Per-iteration record of a descent phase: cost values, positions,
    and gradient norms (positions feed the pole-exponent fit)."""

    values: list = field(default_factory=list)
    positions: list = field(default_factory=list)
    grad_norms: list = field(default_factory=list)

    def record(self, x: np.ndarray, value: float, grad_norm: float) -> None:
        self.values.append(value)
        self.positions.append(x.copy())
        self.grad_norms.append(grad_norm)


@dataclass
class FlowResult:
    """Outcome of one tunneling phase."""

    escaped: bool
    x: Optional[np.ndarray]
    trace: list  # (value, distance) per iteration


@dataclass
class TunnelRun:
    """Full record of one alternating descent/tunnel trajectory."""

    stable_points: list
    trace: list  # (phase, value, distance_to_stable or nan)
    best: StablePoint
    termination: str  # tunnel_exhausted | max_tunnels_reached | iteration_budget
    n_tunnels: int
    total_iterations: int


def _check_finite(value: float, grad: np.ndarray, phase: str, iteration: int) -> None:
    if not (np.isfinite(value) and np.all(np.isfinite(grad))):
        raise NumericError(
            f"non-finite cost or gradient at {phase} iteration {iteration}",
            phase=phase,
            iteration=iteration,
        )


def gradient_descent(
    oracle: CostOracle,
    x0: np.ndarray,
    cfg: TunnelConfig,
    dist: Optional[DistanceMeasure] = None,
):
    """Plain Euler descent until the gradient norm drops below tolerance.

    Returns (StablePoint, DescentTrace); the stable point's pole exponent
    is fitted from the last two pre-convergence iterates.
    """
    dist = dist or EuclideanDistance()
    tol = cfg.effective_grad_tol(oracle.dimension)
    x = np.array(x0, dtype=float)
    trace = DescentTrace()
    it = 0
    while True:
        value, grad, token = oracle.evaluate(x)
        _check_finite(value, grad, "descent", it)
        gnorm = float(np.linalg.norm(grad))
        trace.record(x, value, gnorm)
        if gnorm < tol or it >= cfg.max_descent_iters:
            converged = gnorm < tol
            break
        x = x - cfg.learning_rate * grad
        it += 1
    sp = StablePoint(
        x=x, value=value, token=token, pole_exponent=0.0,
        descent_iters=it, grad_norm=gnorm, converged=converged,
    )
    sp.pole_exponent = estimate_pole_exponent(
        trace, sp, dist, cfg.exponent_multiplier, oracle=oracle
    )
    return sp, trace


def fista_descent(
    oracle: CostOracle,
    x0: np.ndarray,
    cfg: TunnelConfig,
    dist: Optional[DistanceMeasure] = None,
):
    """Nesterov-accelerated descent with momentum restart on cost increase.

    Same stopping rule as gradient_descent, applied at the lookahead
    point where the gradient is evaluated.
    """
    dist = dist or EuclideanDistance()
    tol = cfg.effective_grad_tol(oracle.dimension)
    x_prev = np.array(x0, dtype=float)
    y = x_prev.copy()
    t = 1.0
    f_prev = math.inf
    trace = DescentTrace()
    it = 0
    while True:
        value, grad, token = oracle.evaluate(y)
        _check_finite(value, grad, "descent", it)
        gnorm = float(np.linalg.norm(grad))
        trace.record(y, value, gnorm)
        if gnorm < tol or it >= cfg.max_descent_iters:
            converged = gnorm < tol
            break
        if value > f_prev:
            t = 1.0  # restart momentum
        x_new = y - cfg.learning_rate * grad
        t_new = (1.0 + math.sqrt(1.0 + 4.0 * t * t)) / 2.0
        y = x_new + ((t - 1.0) / t_new) * (x_new - x_prev)
        x_prev = x_new
        t = t_new
        f_prev = value
        it += 1
    sp = StablePoint(
        x=y, value=value, token=token, pole_exponent=0.0,
        descent_iters=it, grad_norm=gnorm, converged=converged,
    )
    sp.pole_exponent = estimate_pole_exponent(
        trace, sp, dist, cfg.exponent_multiplier, oracle=oracle
    )
    return sp, trace


def estimate_pole_exponent(
    trace: DescentTrace,
    stable: StablePoint,
    dist: DistanceMeasure,
    multiplier: float = 1.5,
    exponent_floor: float = 0.5,
    oracle: Optional[CostOracle] = None,
    span: float = 10.0,
) -> float:
    """Fit the local power law |grad f| ~ d^p near the stable point and
    return multiplier * max(p, floor).

    The fit uses three iterates spanning the top `span` of distances in
    the final monotone approach to the stable point (iterates whose step
    overshoots past the minimizer are excluded). Because descent stops at
    a gradient tolerance, the endpoint sits a residual offset c away from
    the true minimizer, which flattens a naive log-log slope; the three
    points determine both p and c by requiring the two offset-shifted
    secant slopes to agree. d is measured with the paired distance (so
    state distance for the quantum flow), re-evaluating the oracle at the
    selected iterates when needed to recover their state tokens.
    Degenerate fits fall back to multiplier * 1.
    """
    n = len(trace.positions)
    if n < 3:
        return multiplier * 1.0
    x_end = stable.x
    d_param = [float(np.linalg.norm(p - x_end)) for p in trace.positions]
    # Final segment over which the distance to the endpoint decreases
    # monotonically (the in-basin approach) ...
    start = n - 2
    while start > 0 and d_param[start - 1] > d_param[start] > 0.0:
        start -= 1
    # ... skipping iterates whose step swallows most of the remaining
    # distance (overshoot across the minimizer).
    while start < n - 3 and d_param[start] - d_param[start + 1] > 0.5 * d_param[start]:
        start += 1
    d_hi = d_param[start]
    if d_hi <= 0.0:
        return multiplier * 1.0
    k_a = start
    k_c = k_a
    for j in range(start + 1, n - 1):
        if d_param[j] >= d_hi / span and d_param[j] > 0.0:
            k_c = j
    if k_c - k_a < 2:
        k_c = min(k_a + 2, n - 2)
    if d_param[k_c] <= 0.0:
        return multiplier * 1.0
    target = math.sqrt(d_param[k_a] * d_param[k_c])
    k_b = min(range(k_a, k_c + 1), key=lambda j: abs(d_param[j] - target))
    if k_b in (k_a, k_c):
        k_b = (k_a + k_c) // 2
    if getattr(dist, "on_parameters", True) or oracle is None:
        pairs = [(trace.positions[k], x_end) for k in (k_a, k_b, k_c)]
    else:
        pairs = [(oracle.evaluate(trace.positions[k])[2], stable.token)
                 for k in (k_a, k_b, k_c)]
    da, db, dc = (dist.distance(a, b) for a, b in pairs)
    ga, gb, gc = (trace.grad_norms[k] for k in (k_a, k_b, k_c))
    if min(da, db, dc, ga, gb, gc) <= 0.0 or len({da, db, dc}) < 3 \
            or ga == gb or gb == gc:
        return multiplier * 1.0

    def slope_mismatch(c: float) -> float:
        return (math.log(ga / gb) / math.log((da + c) / (db + c))
                - math.log(gb / gc) / math.log((db + c) / (dc + c)))

    c = 0.0
    try:
        if slope_mismatch(0.0) * slope_mismatch(100.0 * da) < 0.0:
            c = brentq(slope_mismatch, 0.0, 100.0 * da)
    except (ValueError, ZeroDivisionError):
        c = 0.0
    p = math.log(ga / gc) / math.log((da + c) / (dc + c))
    if not math.isfinite(p):
        return multiplier * 1.0
    return multiplier * max(p, exponent_floor)


def pole_factor(d: float, lam: float, clamp: str = "none", eps: float = 1e-3) -> float:
    """The 1/d^(2*lambda) flow coefficient, with the selected clamping."""
    if clamp == "distance_floor":
        d = max(d, eps)
    d = max(d, DISTANCE_FLOOR)
    value = math.exp(min(-2.0 * lam * math.log(d), _LOG_CAP))
    if clamp == "cap_2_pow_lambda":
        value = min(value, 2.0**lam)
    return value


def penalty_factor(value: float, f_stable: float, penalty_weight: float) -> float:
    """Rectified penalty k * max(f - f_stable, 0)."""
    return penalty_weight * max(value - f_stable, 0.0)


def energy_function(oracle: CostOracle, x: np.ndarray, stable: StablePoint,
                    penalty_weight: float) -> float:
    """Diagnostic energy combining the cost pole at the stable point with
    the integrated rectified penalty (closed form k/2 * relu(df)^2)."""
    value, _, _ = oracle.evaluate(np.asarray(x, dtype=float))
    d = float(np.linalg.norm(np.asarray(x, dtype=float) - stable.x))
    if d == 0.0:
        raise ZeroDivisionError("energy function has a pole at the stable point")
    df = value - stable.value
    return df * pole_factor(d, stable.pole_exponent, "none") + \
        0.5 * penalty_weight * max(df, 0.0) ** 2


def _random_unit(rng: np.random.Generator, dim: int) -> np.ndarray:
    v = rng.standard_normal(dim)
    norm = np.linalg.norm(v)
    while norm == 0.0:
        v = rng.standard_normal(dim)
        norm = np.linalg.norm(v)
    return v / norm


def tunnel_flow(
    oracle: CostOracle,
    dist: DistanceMeasure,
    stable: StablePoint,
    cfg: TunnelConfig,
    rng: np.random.Generator,
) -> FlowResult:
    """One tunneling phase: Euler steps of the pole/penalty-weighted flow
    from a random kick off the stable point.

    Succeeds at the first iterate whose cost drops below the stable value
    by the escape margin; otherwise exhausts the iteration budget.
    """
    margin = cfg.effective_escape_margin(stable.value)
    x = stable.x + cfg.perturb_radius * _random_unit(rng, oracle.dimension)
    trace = []
    for it in range(cfg.max_tunnel_iters):
        value, grad, token = oracle.evaluate(x)
        _check_finite(value, grad, "tunnel", it)
        if dist.on_parameters:
            d = dist.distance(x, stable.x)
        else:
            d = dist.distance(token, stable.token)
        trace.append((value, d))
        if value < stable.value - margin:
            return FlowResult(escaped=True, x=x, trace=trace)
        coeff = pole_factor(d, stable.pole_exponent, cfg.clamp, cfg.clamp_eps) + \
            penalty_factor(value, stable.value, cfg.penalty_weight)
        x = x - cfg.learning_rate * coeff * grad
        if not np.all(np.isfinite(x)):
            raise NumericError(
                f"non-finite iterate in tunnel step {it}", phase="tunnel", iteration=it
            )
    return FlowResult(escaped=False, x=None, trace=trace)


def dynamic_tunneling(
    oracle: CostOracle,
    dist: DistanceMeasure,
    x0: np.ndarray,
    cfg: TunnelConfig,
    descent: str = "plain",
    rng: Optional[np.random.Generator] = None,
) -> TunnelRun:
    """Alternate descent and tunneling until no lower valley is found,
    the tunnel budget is spent, or the total iteration budget runs out."""
    if descent not in ("plain", "fista"):
        raise ValueError(f"descent must be 'plain' or 'fista', got {descent!r}")
    descend = gradient_descent if descent == "plain" else fista_descent
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    x = np.array(x0, dtype=float)
    stable_points: list[StablePoint] = []
    trace: list = []
    n_tunnels = 0
    total = 0
    while True:
        sp, dtrace = descend(oracle, x, cfg, dist)
        stable_points.append(sp)
        trace.extend(("descent", v, math.nan) for v in dtrace.values)
        total += len(dtrace.values)
        if cfg.max_total_iters is not None and total >= cfg.max_total_iters:
            termination = "iteration_budget"
            break
        if n_tunnels >= cfg.max_tunnels:
            termination = "max_tunnels_reached"
            break
        flow = tunnel_flow(oracle, dist, sp, cfg, rng)
        n_tunnels += 1
        trace.extend(("tunnel", v, d) for v, d in flow.trace)
        total += len(flow.trace)
        if not flow.escaped:
            termination = "tunnel_exhausted"
            break
        if cfg.max_total_iters is not None and total >= cfg.max_total_iters:
            termination = "iteration_budget"
            break
        x = flow.x
    best = min(stable_points, key=lambda s: s.value)
    return TunnelRun(
        stable_points=stable_points,
        trace=trace,
        best=best,
        termination=termination,
        n_tunnels=n_tunnels,
        total_iterations=total,
    )


def same_state(a: StablePoint, b: StablePoint, dist: DistanceMeasure,
               tol: float) -> bool:
    """Whether two stable points carry the same state under the measure."""
    return dist.distance(a.token, b.token) < tol
