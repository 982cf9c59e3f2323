"""Experiment layer: scalar demo cost, VQE ensembles, revisit statistics,
and CSV serialization of histogram/profile records."""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict, fields, replace
from typing import NamedTuple, Optional

import numpy as np

from .exceptions import ConfigError
from . import models, sim
from .tunneling import (
    EuclideanDistance,
    HilbertSchmidtDistance,
    TunnelConfig,
    dynamic_tunneling,
    same_state,
)

TWO_PI = 2.0 * math.pi


def toy_cost(x: float):
    """Periodic 1D demo landscape (period 4) with three unequal valleys.

    Starting descent at x = 2.2 lands in the shallowest valley, so a full
    tunneling run visits all three minima in decreasing order before
    settling at the global one near x = 0.64 (value -1.76640...).

    Returns (value, derivative)."""
    v = (
        math.cos(math.pi / 2 * (x + 0.5))
        - 0.5 * math.cos(2 * math.pi * (x - 1.5))
        - math.sin(math.pi * (x - 0.5))
        + 1.5 * math.sin(math.pi / 2 * (x - 1.0))
    )
    g = (
        -math.pi / 2 * math.sin(math.pi / 2 * (x + 0.5))
        + math.pi * math.sin(2 * math.pi * (x - 1.5))
        - math.pi * math.cos(math.pi * (x - 0.5))
        + 0.75 * math.pi * math.cos(math.pi / 2 * (x - 1.0))
    )
    return v, g


class ToyOracle:
    """1D scalar oracle; the token is the parameter itself."""

    dimension = 1

    def evaluate(self, x: np.ndarray):
        v, g = toy_cost(float(x[0]))
        return v, np.array([g]), np.array(x, dtype=float)


class VQECostOracle:
    """Quantum cost oracle <psi(x)|H|psi(x)> with adjoint gradients.

    The token is the simulated ansatz state, so it can feed the
    state-distance tunneling flow."""

    def __init__(self, circuit: sim.Circuit, observable: sim.PauliSum):
        if circuit.n_qubits != observable.n_qubits:
            raise ConfigError("circuit and observable qubit counts differ")
        self.circuit = circuit
        self.observable = observable
        self.dimension = circuit.n_params

    def evaluate(self, x: np.ndarray):
        return sim.cost_and_gradient_state(self.circuit, x, self.observable)


METHODS = ("descent_only", "tunnel_conventional", "tunnel_modified")
DESCENTS = ("plain", "fista")
PROBLEMS = ("toy", "chain", "grid")


@dataclass
class ExperimentConfig:
    """Declarative description of one benchmark ensemble."""

    problem: str = "chain"
    n: Optional[int] = None            # chain sites
    rows: Optional[int] = None         # grid shape
    cols: Optional[int] = None
    J: float = 1.0
    B: float = 5.0
    ansatz_blocks: Optional[int] = None  # default 2 for quantum problems
    method: str = "tunnel_modified"
    descent: str = "plain"
    penalty_weight: float = 1.125
    exponent_multiplier: float = 1.5
    learning_rate: float = 0.01
    grad_tol: float = 1e-4
    escape_margin: Optional[float] = None
    max_descent_iters: int = 2000
    max_tunnel_iters: int = 2000
    max_tunnels: int = 6
    clamp: Optional[str] = None        # None = per-method default
    clamp_eps: float = 1e-3
    perturb_radius: float = 1e-3
    max_total_iters: Optional[int] = None
    n_samples: int = 100
    init_lo: float = 0.0
    init_hi: float = TWO_PI
    seed: int = 0

    def __post_init__(self):
        if self.problem not in PROBLEMS:
            raise ConfigError(f"problem must be one of {PROBLEMS}, got {self.problem!r}")
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.descent not in DESCENTS:
            raise ConfigError(f"descent must be one of {DESCENTS}")
        if self.n_samples < 1:
            raise ConfigError("n_samples must be >= 1")
        if self.init_hi <= self.init_lo:
            raise ConfigError("init_hi must exceed init_lo")
        if self.problem == "toy":
            if self.ansatz_blocks is not None:
                raise ConfigError("ansatz_blocks does not apply to the toy problem")
            if self.method == "tunnel_modified":
                raise ConfigError("the toy problem has no quantum state distance")
        elif self.problem == "chain":
            if self.n is None or self.n < 2:
                raise ConfigError("chain problems need n >= 2")
        else:
            if self.rows is None or self.cols is None:
                raise ConfigError("grid problems need rows and cols")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def effective_clamp(self) -> str:
        if self.clamp is not None:
            return self.clamp
        # The parameter-distance flow follows the capped recipe; the
        # state-distance flow keeps the bare pole (its distance is
        # bounded anyway).
        return "cap_2_pow_lambda" if self.method == "tunnel_conventional" else "none"

    def tunnel_config(self, seed: int) -> TunnelConfig:
        max_tunnels = 0 if self.method == "descent_only" else self.max_tunnels
        return TunnelConfig(
            penalty_weight=self.penalty_weight,
            exponent_multiplier=self.exponent_multiplier,
            learning_rate=self.learning_rate,
            grad_tol=self.grad_tol,
            escape_margin=self.escape_margin,
            max_descent_iters=self.max_descent_iters,
            max_tunnel_iters=self.max_tunnel_iters,
            max_tunnels=max_tunnels,
            clamp=self.effective_clamp(),
            clamp_eps=self.clamp_eps,
            perturb_radius=self.perturb_radius,
            seed=seed,
            max_total_iters=self.max_total_iters,
        )

    def build_oracle(self):
        if self.problem == "toy":
            return ToyOracle()
        blocks = self.ansatz_blocks if self.ansatz_blocks is not None else 2
        if self.problem == "chain":
            ham = models.tfim_chain(models.ChainSpec(self.n, self.J, self.B))
            circuit = models.ansatz_chain(self.n, blocks)
        else:
            ham = models.tfim_grid(models.GridSpec(self.rows, self.cols, self.J, self.B))
            circuit = models.ansatz_grid(self.rows, self.cols, blocks)
        return VQECostOracle(circuit, ham)

    def distance_measure(self):
        if self.method == "tunnel_modified":
            return HilbertSchmidtDistance()
        return EuclideanDistance()


class HistogramRecord(NamedTuple):
    sample_id: int
    seed: int
    final_best_f: float
    n_tunnels_used: int
    termination: str
    wall_iterations: int


class ProfileRecord(NamedTuple):
    sample_id: int
    global_iteration: int
    phase: str
    f: float
    distance_to_stable: float


@dataclass
class RunSummary:
    """Compact per-sample result: stable points with their state tokens,
    plus the flattened iteration trace."""

    sample_id: int
    seed: int
    stable: list  # (value, x, token)
    termination: str
    n_tunnels: int
    total_iterations: int
    trace: Optional[list]  # (phase, f, distance) or None if dropped


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    histogram: list
    profiles: list
    runs: list


def sample_seed(master_seed: int, sample_id: int) -> int:
    """Counter-based per-sample seed, independent of n_samples."""
    return int(np.random.SeedSequence([master_seed, sample_id]).generate_state(1)[0])


def _run_sample(config: ExperimentConfig, sample_id: int, keep_profiles: bool) -> RunSummary:
    seed = sample_seed(config.seed, sample_id)
    rng = np.random.default_rng(seed)
    oracle = config.build_oracle()
    x0 = rng.uniform(config.init_lo, config.init_hi, oracle.dimension)
    run = dynamic_tunneling(
        oracle,
        config.distance_measure(),
        x0,
        config.tunnel_config(seed),
        descent=config.descent,
        rng=rng,
    )
    return RunSummary(
        sample_id=sample_id,
        seed=seed,
        stable=[(sp.value, sp.x, sp.token) for sp in run.stable_points],
        termination=run.termination,
        n_tunnels=run.n_tunnels,
        total_iterations=run.total_iterations,
        trace=run.trace if keep_profiles else None,
    )


def run_experiment(
    config: ExperimentConfig,
    keep_profiles: bool = True,
    workers: int = 1,
) -> ExperimentResult:
    """Run the configured ensemble; deterministic given the config.

    Samples are independent (per-sample counter-based seeds), so they may
    run on a worker pool; results are merged by sample_id."""
    ids = list(range(config.n_samples))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(_run_sample, [config] * len(ids), ids,
                                 [keep_profiles] * len(ids), chunksize=1))
    else:
        runs = [_run_sample(config, i, keep_profiles) for i in ids]
    runs.sort(key=lambda r: r.sample_id)

    histogram = [
        HistogramRecord(
            sample_id=r.sample_id,
            seed=r.seed,
            final_best_f=min(v for v, _, _ in r.stable),
            n_tunnels_used=r.n_tunnels,
            termination=r.termination,
            wall_iterations=r.total_iterations,
        )
        for r in runs
    ]
    profiles = []
    if keep_profiles:
        for r in runs:
            profiles.extend(
                ProfileRecord(r.sample_id, i, phase, f, d)
                for i, (phase, f, d) in enumerate(r.trace)
            )
    return ExperimentResult(config=config, histogram=histogram, profiles=profiles, runs=runs)


def revisit_statistics(runs, dist=None, tol: float = 1e-3):
    """(n_revisits, n_tunnel_starts) over an ensemble.

    A revisit is a pair of consecutive stable points within ``tol`` of
    each other under ``dist`` (Hilbert-Schmidt by default)."""
    dist = dist or HilbertSchmidtDistance()
    n_revisits = 0
    n_starts = 0
    for run in runs:
        n_starts += run.n_tunnels
        tokens = [tok for _, _, tok in run.stable]
        for a, b in zip(tokens, tokens[1:]):
            if dist.distance(a, b) < tol:
                n_revisits += 1
    return n_revisits, n_starts


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def _write_csv(records, path, header) -> None:
    if not records:
        raise ConfigError("refusing to write an empty record set")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for rec in records:
            writer.writerow([_fmt(v) for v in rec])


def write_histogram(records, path) -> None:
    """CSV of per-sample outcomes, sorted by sample_id."""
    records = sorted(records, key=lambda r: r.sample_id)
    _write_csv(
        records, path,
        ["sample_id", "seed", "final_best_f", "n_tunnels_used", "termination",
         "wall_iterations"],
    )


def write_profile(records, path) -> None:
    """CSV of per-iteration cost/distance traces, sorted by sample and step."""
    records = sorted(records, key=lambda r: (r.sample_id, r.global_iteration))
    _write_csv(
        records, path,
        ["sample_id", "global_iteration", "phase", "f", "distance_to_stable"],
    )


def preset(name: str) -> ExperimentConfig:
    """Named experiment configurations at desk scale."""
    presets = {
        # 1D paramagnetic phase, plain descent.
        "paramagnetic_1d": ExperimentConfig(
            problem="chain", n=10, J=1.0, B=5.0, ansatz_blocks=10,
            method="tunnel_modified", descent="plain", penalty_weight=1.125,
            n_samples=100, seed=7,
        ),
        # 1D antiferromagnetic phase: flat landscape, so FISTA and a
        # heavier penalty.
        "antiferromagnetic_1d": ExperimentConfig(
            problem="chain", n=10, J=1.0, B=0.5, method="tunnel_modified",
            descent="fista", penalty_weight=16.0, n_samples=100, seed=7,
        ),
        # 2D 3x4 lattice.
        "grid_2d": ExperimentConfig(
            problem="grid", rows=3, cols=4, J=1.0, B=5.0,
            method="tunnel_modified", descent="fista", penalty_weight=0.35,
            n_samples=50, seed=7,
        ),
    }
    if name not in presets:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(presets)}")
    return presets[name]
