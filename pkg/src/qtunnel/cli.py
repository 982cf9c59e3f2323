"""Command-line interface.

Subcommands:
  toy       run the 1D demo landscape and write its iteration profile
  vqe       run an ensemble experiment from a JSON config or a preset
  exact     print the exact ground energy of a chain or grid model
  gradcheck cross-check adjoint, parameter-shift, and finite-difference
            gradients

Exit codes: 0 success, 1 configuration error, 2 numeric error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace

import numpy as np

from .exceptions import ConfigError, NumericError, QTunnelError
from . import bench, models, sim
from .tunneling import EuclideanDistance, TunnelConfig, dynamic_tunneling


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qtunnel", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    toy = sub.add_parser("toy", help="run the 1D demo landscape")
    toy.add_argument("--x0", type=float, default=2.2)
    toy.add_argument("--learning-rate", type=float, default=0.005)
    toy.add_argument("--penalty-weight", type=float, default=50.0)
    toy.add_argument("--seed", type=int, default=0)
    toy.add_argument("--clamp-eps", type=float, default=0.15,
                     help="distance floor for the pole factor")
    toy.add_argument("--out", default="toy_profile.csv")

    vqe = sub.add_parser("vqe", help="run an ensemble experiment")
    group = vqe.add_mutually_exclusive_group(required=True)
    group.add_argument("--config", help="path to a flat JSON config")
    group.add_argument("--preset", help="named builtin configuration")
    vqe.add_argument("--out-dir", default=".")
    vqe.add_argument("--samples", type=int, help="override n_samples")
    vqe.add_argument("--seed", type=int, help="override master seed")
    vqe.add_argument("--workers", type=int, default=1)

    exact = sub.add_parser("exact", help="exact ground energy of a model")
    mgroup = exact.add_mutually_exclusive_group(required=True)
    mgroup.add_argument("--chain", type=int, metavar="N")
    mgroup.add_argument("--grid", metavar="RxC")
    exact.add_argument("--J", type=float, default=1.0)
    exact.add_argument("--B", type=float, default=5.0)

    sub.add_parser("gradcheck", help="gradient consistency suite")
    return parser


def _cmd_toy(args) -> int:
    cfg = TunnelConfig(
        penalty_weight=args.penalty_weight,
        learning_rate=args.learning_rate,
        clamp="distance_floor",
        clamp_eps=args.clamp_eps,
        seed=args.seed,
    )
    oracle = bench.ToyOracle()
    run = dynamic_tunneling(
        oracle, EuclideanDistance(), np.array([args.x0]), cfg, descent="plain"
    )
    print(f"stable points from x0={args.x0}:")
    for i, sp in enumerate(run.stable_points):
        print(f"  {i + 1}: x={sp.x[0]: .6f}  f={sp.value: .9f}  "
              f"(descent iters {sp.descent_iters})")
    print(f"termination: {run.termination}")
    print(f"best: f={run.best.value:.9f} at x={run.best.x[0]:.6f}")
    records = [
        bench.ProfileRecord(0, i, phase, f, d)
        for i, (phase, f, d) in enumerate(run.trace)
    ]
    bench.write_profile(records, args.out)
    print(f"profile written to {args.out}")
    return 0


def _cmd_vqe(args) -> int:
    if args.preset:
        config = bench.preset(args.preset)
    else:
        with open(args.config) as fh:
            config = bench.ExperimentConfig.from_dict(json.load(fh))
    overrides = {}
    if args.samples is not None:
        overrides["n_samples"] = args.samples
    if args.seed is not None:
        overrides["seed"] = args.seed
    if overrides:
        config = replace(config, **overrides)
    result = bench.run_experiment(config, workers=args.workers)
    os.makedirs(args.out_dir, exist_ok=True)
    hist_path = os.path.join(args.out_dir, "histogram.csv")
    prof_path = os.path.join(args.out_dir, "profile.csv")
    bench.write_histogram(result.histogram, hist_path)
    bench.write_profile(result.profiles, prof_path)
    finals = np.array([r.final_best_f for r in result.histogram])
    print(f"{config.method} on {config.problem}: {config.n_samples} samples")
    print(f"final best f: min={finals.min():.6f}  median={np.median(finals):.6f}  "
          f"max={finals.max():.6f}")
    print(f"wrote {hist_path} and {prof_path}")
    return 0


def _cmd_exact(args) -> int:
    if args.chain is not None:
        ham = models.tfim_chain(models.ChainSpec(args.chain, args.J, args.B))
    else:
        try:
            rows, cols = (int(v) for v in args.grid.lower().split("x"))
        except ValueError:
            raise ConfigError(f"--grid expects RxC (e.g. 3x4), got {args.grid!r}")
        ham = models.tfim_grid(models.GridSpec(rows, cols, args.J, args.B))
    print(f"{models.exact_ground_energy(ham):.6f}")
    return 0


def _cmd_gradcheck() -> int:
    rng = np.random.default_rng(2024)
    circuits = [
        ("chain-5", models.ansatz_chain(5, 2), models.tfim_chain(models.ChainSpec(5))),
        ("grid-2x4", models.ansatz_grid(2, 4, 2),
         models.tfim_grid(models.GridSpec(2, 4))),
    ]
    worst = 0.0
    for name, circuit, ham in circuits:
        for _ in range(20):
            params = rng.uniform(0.0, 2.0 * np.pi, circuit.n_params)
            _, adj = sim.cost_and_gradient(circuit, params, ham)
            shift = sim.parameter_shift_gradient(circuit, params, ham)
            fd = _finite_difference(circuit, params, ham)
            dev = max(
                np.abs(adj - shift).max(),
                np.abs(adj - fd).max(),
                np.abs(shift - fd).max(),
            )
            worst = max(worst, dev)
        print(f"{name}: max deviation so far {worst:.3e}")
    print(f"max pairwise gradient deviation: {worst:.3e}")
    if worst >= 1e-6:
        raise NumericError(f"gradient methods disagree by {worst:.3e}")
    return 0


def _finite_difference(circuit, params, ham, h: float = 1e-5) -> np.ndarray:
    grad = np.empty(circuit.n_params)
    for i in range(circuit.n_params):
        up = params.copy()
        up[i] += h
        down = params.copy()
        down[i] -= h
        grad[i] = (
            sim.expectation(sim.run_circuit(circuit, up), ham)
            - sim.expectation(sim.run_circuit(circuit, down), ham)
        ) / (2 * h)
    return grad


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "toy":
            return _cmd_toy(args)
        if args.command == "vqe":
            return _cmd_vqe(args)
        if args.command == "exact":
            return _cmd_exact(args)
        return _cmd_gradcheck()
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, QTunnelError, ValueError, OSError,
            json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
