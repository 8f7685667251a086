"""Command-line front end.

Subcommands orchestrate the planner, sketches, simulator and experiment
procedures, emitting JSON lines so long grids stream and plots can be
built downstream. Fixed seed plus fixed flags give byte-identical output.

Exit codes: 0 success, 2 configuration error, 3 I/O error, 4 check-mode
failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .errors import ConfigError
from .experiments import (DETECTION_METHODS, FLOOD_METHODS,
                          detection_experiment, error_quantiles,
                          flood_experiment, throughput_probe, zipf_keys)
from .planner import (DeploymentParams, error_bound, min_tau_hh,
                      optimal_batch)
from .sketch import MementoSketch
from .traces import FloodSpec, gen_zipf_trace, inject_flood, load_trace, \
    save_trace


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--window", type=int, default=100_000)
    parser.add_argument("--eps-a", default="0.01",
                        help="algorithmic error; comma list for grids")
    parser.add_argument("--eps-s", type=float, default=0.02)
    parser.add_argument("--delta", type=float, default=0.05)
    parser.add_argument("--theta", type=float, default=0.01)
    parser.add_argument("--tau", default="auto",
                        help="sampling probability, 'auto', or comma list")
    parser.add_argument("--dim", type=int, choices=(1, 2), default=1)
    parser.add_argument("--budget", type=float, default=1.0)
    parser.add_argument("--overhead", type=float, default=64.0)
    parser.add_argument("--sample-bytes", type=float, default=None,
                        help="bytes per reported sample (default 4*dim)")
    parser.add_argument("--points", type=int, default=10)
    parser.add_argument("--batch", default="auto",
                        help="batch size or 'auto' for the planner optimum")
    parser.add_argument("--seed", type=int, default=None,
                        help="falls back to MEMENTO_SEED, then 0")
    parser.add_argument("--trace", default=None,
                        help="CSV trace path; omit to generate")
    parser.add_argument("--out", default=None,
                        help="output path (default stdout)")
    parser.add_argument("--packets", type=int, default=300_000)
    parser.add_argument("--flows", type=int, default=10_000)
    parser.add_argument("--alpha", type=float, default=1.0)


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    return int(os.environ.get("MEMENTO_SEED", "0"))


def _emit(rows, args) -> None:
    text = "\n".join(json.dumps(r, sort_keys=True) for r in rows)
    if args.out:
        with open(args.out, "w", encoding="ascii") as handle:
            handle.write(text + "\n")
    else:
        print(text)


def _load_keys(args):
    if args.trace:
        return [r.key for r in load_trace(args.trace)]
    return gen_zipf_trace(args.packets, args.flows, args.alpha,
                          _seed(args), dim=args.dim)


def _sample_bytes(args) -> float:
    return args.sample_bytes if args.sample_bytes is not None \
        else 4.0 * args.dim


def _deploy_params(args) -> DeploymentParams:
    return DeploymentParams(
        points=args.points, overhead_bytes=args.overhead,
        sample_bytes=_sample_bytes(args), budget=args.budget,
        window=args.window, hier_size=5 if args.dim == 1 else 25,
        delta_s=args.delta)


def cmd_plan(args) -> int:
    params = _deploy_params(args)
    rows = []
    b = 1
    while b <= 4096:
        rows.append({"kind": "curve", **error_bound(b, params).as_dict()})
        b *= 2
    if args.batch == "auto":
        best = optimal_batch(params)
    else:
        best = error_bound(int(args.batch), params)
    rows.append({"kind": "optimal", **best.as_dict()})
    _emit(rows, args)
    return 0


def _tau_grid(args):
    if args.tau == "auto":
        return [min_tau_hh(args.window, args.eps_s, args.delta)]
    return [float(t) for t in str(args.tau).split(",")]


def _eps_grid(args):
    return [float(e) for e in str(args.eps_a).split(",")]


def cmd_accuracy(args) -> int:
    keys = _load_keys(args)
    rows = []
    for eps_a in _eps_grid(args):
        for tau in _tau_grid(args):
            sketch = MementoSketch(args.window, eps_a, tau=tau,
                                   seed=_seed(args))
            stats = error_quantiles(sketch, keys, args.window)
            rows.append({"tau": tau, "eps_a": eps_a,
                         "counters": sketch.k, **stats})
    _emit(rows, args)
    return 0


def cmd_bench(args) -> int:
    keys = _load_keys(args)
    rows = []
    for eps_a in _eps_grid(args):
        for tau in _tau_grid(args):
            rate = throughput_probe(keys, args.window, eps_a, tau,
                                    seed=_seed(args))
            rows.append({"tau": tau, "eps_a": eps_a,
                         "updates_per_sec": round(rate)})
    _emit(rows, args)
    return 0


def cmd_detect(args) -> int:
    ratios = [float(r) for r in args.ratios.split(",")]
    seeds = [_seed(args) + i for i in range(args.phases)]
    rows = []
    for ratio in ratios:
        row = {"rate_ratio": ratio}
        for method in DETECTION_METHODS:
            row[method] = detection_experiment(
                ratio, method, args.theta, args.window, seeds)
        rows.append(row)
    _emit(rows, args)
    return 0


def cmd_flood(args) -> int:
    keys = _load_keys(args)
    spec = FloodSpec(start_range=(0, min(10 ** 6, len(keys) // 3)),
                     seed=_seed(args))
    flood = inject_flood(keys, spec)
    results = flood_experiment(
        flood, window=args.window, theta=args.theta, budget=args.budget,
        points=args.points, overhead=args.overhead,
        sample_bytes=_sample_bytes(args), seed=_seed(args),
        methods=FLOOD_METHODS)
    _emit([res.as_dict() for res in results.values()], args)
    return 0


def cmd_gen(args) -> int:
    if not args.out:
        raise ConfigError("gen requires --out")
    keys = gen_zipf_trace(args.packets, args.flows, args.alpha,
                          _seed(args), dim=args.dim)
    flags = None
    if args.flood:
        flood = inject_flood(keys, FloodSpec(
            start_range=(0, min(10 ** 6, len(keys) // 3)),
            seed=_seed(args)))
        keys, flags = flood.keys, flood.flood_flags
    save_trace(args.out, keys, flags)
    return 0


def cmd_check(args) -> int:
    """Fast in-process spot checks of the planner and detection models."""
    failures = []
    params = DeploymentParams(points=10, overhead_bytes=64, sample_bytes=4,
                              budget=1.0, window=10 ** 6, hier_size=5,
                              delta_s=1e-4)
    best = optimal_batch(params)
    if not (35 <= best.batch_size <= 55
            and 11_500 <= best.total_error <= 14_500):
        failures.append(f"planner optimum off: {best.as_dict()}")
    half = detection_experiment(2.0, "window", 0.01, 10_000,
                                seeds=range(10))
    if abs(half - 0.5) > 0.02:
        failures.append(f"window detection at ratio 2 gave {half}")
    for line in failures:
        print(f"CHECK FAIL: {line}", file=sys.stderr)
    print(json.dumps({"checks_passed": not failures}))
    return 4 if failures else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="memento",
        description="sliding-window heavy hitter toolkit")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in (("plan", cmd_plan), ("accuracy", cmd_accuracy),
                     ("bench", cmd_bench), ("detect", cmd_detect),
                     ("flood", cmd_flood), ("gen", cmd_gen),
                     ("check", cmd_check)):
        p = sub.add_parser(name)
        _add_common(p)
        if name == "detect":
            p.add_argument("--ratios", default="1.1,1.5,2,3,5")
            p.add_argument("--phases", type=int, default=50)
        if name == "gen":
            p.add_argument("--flood", action="store_true")
        p.set_defaults(fn=fn)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
