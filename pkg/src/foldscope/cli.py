"""Command line front end.

Subcommands map one-to-one onto the library: sample walks a segment and
dumps the pattern path, chi reports folding values for one segment, global
aggregates over a labeled dataset, train fits a small classifier (optionally
with the folding penalty), depth-sweep repeats training across depths, and
forward evaluates raw network outputs (handy for checking exported models).

Exit codes: 0 ok, 1 usage/validation errors, 2 I/O errors, 3 diverged
training.  Outputs are byte-stable for identical inputs and seeds.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import replace

import numpy as np

from .folding import fold_report
from .globalfold import global_phi, load_dataset_csv, save_dataset_csv, write_pair_csv
from .network import ModelFormatError, forward, load_model, save_model
from .sampler import DEFAULT_DELTA_INIT, DEFAULT_DELTA_MIN, sample_adaptive
from .training import (
    TrainingDivergedError,
    make_dataset,
    read_key_values,
    train,
    train_config_from_mapping,
)

THREADS_ENV = "FOLDSCOPE_THREADS"


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; this tool reserves 2 for I/O problems
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def parse_point(text: str, dim: int) -> np.ndarray:
    parts = [p.strip() for p in text.split(",")]
    try:
        values = [float(p) for p in parts]
    except ValueError:
        raise ValueError(f"point {text!r} is not a comma-separated list of numbers")
    if len(values) != dim:
        raise ValueError(f"point {text!r} has {len(values)} coordinates, expected {dim}")
    return np.asarray(values, dtype=np.float64)


def canonical_json(doc) -> str:
    return json.dumps(doc, indent=2) + "\n"


def _write_text(text: str, path) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def _thread_cap():
    raw = os.environ.get(THREADS_ENV)
    if raw is None or raw == "":
        return None
    try:
        workers = int(raw)
    except ValueError:
        raise ValueError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    if workers < 1:
        raise ValueError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return workers


def _load_endpoints(args, net):
    x1 = parse_point(getattr(args, "from"), net.input_dim)
    x2 = parse_point(args.to, net.input_dim)
    return x1, x2


def cmd_sample(args) -> int:
    net = load_model(args.model)
    x1, x2 = _load_endpoints(args, net)
    path = sample_adaptive(net, x1, x2, args.dinit, args.dmin)
    _write_text(canonical_json(path.to_json_dict()), args.out)
    return 0


def cmd_chi(args) -> int:
    net = load_model(args.model)
    x1, x2 = _load_endpoints(args, net)
    path = sample_adaptive(net, x1, x2, args.dinit, args.dmin)
    report = fold_report(path)
    if args.format == "json":
        _write_text(canonical_json(report.to_json_dict()), args.out)
    else:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        stats = report.stats
        writer.writerow(
            ["r1", "r2", "chi", "chi_reversed", "n_patterns", "flat",
             "total_steps", "halvings", "jumps_accepted_at_dmin"]
        )
        writer.writerow(
            [report.r1, report.r2, repr(float(report.chi)), repr(float(report.chi_reversed)),
             report.n_patterns, int(report.flat),
             stats.total_steps, stats.halvings, stats.jumps_accepted_at_dmin]
        )
        _write_text(buf.getvalue(), args.out)
    return 0


def cmd_global(args) -> int:
    net = load_model(args.model)
    data = load_dataset_csv(args.data)
    report = global_phi(
        net,
        data,
        budget_per_pair=args.budget,
        seed=args.seed,
        delta_init=args.dinit,
        delta_min=args.dmin,
        max_workers=_thread_cap(),
    )
    _write_text(canonical_json(report.to_json_dict()), args.out)
    if args.out is not None:
        base, _ = os.path.splitext(args.out)
        with open(base + ".csv", "w", newline="") as fh:
            write_pair_csv(report, fh)
    return 0


def cmd_train(args) -> int:
    kv = read_key_values(args.config)
    config = train_config_from_mapping(kv, extra_keys=frozenset({"eval_budget"}))
    eval_budget = int(kv.get("eval_budget", "50"))
    if eval_budget < 1:
        raise ValueError("eval_budget must be at least 1")
    net, history = train(config)
    save_model(net, args.out_model)
    with open(args.out_history, "w", newline="") as fh:
        history.to_csv(fh)
    spec = config.dataset
    data = make_dataset(spec.task, spec.n, spec.noise, config.seed)
    if args.out_data:
        save_dataset_csv(data, args.out_data)
    report = global_phi(net, data, eval_budget, config.seed, max_workers=_thread_cap())
    print(f"final_accuracy={history.accuracy[-1]:.6f} final_phi={float(report.phi):.6f}")
    return 0


def cmd_depth_sweep(args) -> int:
    kv = read_key_values(args.config)
    config = train_config_from_mapping(kv, extra_keys=frozenset({"eval_budget"}))
    eval_budget = int(kv.get("eval_budget", "50"))
    try:
        depths = [int(d) for d in args.depths.split(",")]
    except ValueError:
        raise ValueError(f"--depths must be comma-separated integers, got {args.depths!r}")
    if not depths or any(d < 0 for d in depths):
        raise ValueError("--depths entries must be non-negative")
    widths = config.layer_widths
    hidden = widths[1] if len(widths) > 2 else 8  # config's first hidden width, or 8
    rows = []
    for depth in depths:
        layer_widths = [widths[0]] + [hidden] * depth + [widths[-1]]
        cfg = replace(config, layer_widths=layer_widths)
        net, history = train(cfg)
        spec = cfg.dataset
        data = make_dataset(spec.task, spec.n, spec.noise, cfg.seed)
        report = global_phi(net, data, eval_budget, cfg.seed, max_workers=_thread_cap())
        rows.append((depth, history.accuracy[-1], float(report.phi)))
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["depth", "accuracy", "phi"])
    for depth, accuracy, phi in rows:
        writer.writerow([depth, repr(accuracy), repr(phi)])
    _write_text(buf.getvalue(), args.out)
    return 0


def cmd_forward(args) -> int:
    net = load_model(args.model)
    if args.points is not None:
        chunks = [c for c in args.points.split(";") if c.strip()]
    else:
        with open(args.points_file, "r") as fh:
            chunks = [line.strip() for line in fh if line.strip()]
    if not chunks:
        raise ValueError("no input points given")
    outputs = []
    for chunk in chunks:
        x = parse_point(chunk, net.input_dim)
        _, out = forward(net, x)
        outputs.append([float(v) for v in out])
    _write_text(canonical_json({"outputs": outputs}), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="foldscope", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add_walk_flags(p):
        p.add_argument("--model", required=True, help="model JSON path")
        p.add_argument("--from", required=True, metavar="X",
                       help="start point, comma-separated (use --from=-1,0.5 for negatives)")
        p.add_argument("--to", required=True, metavar="X", help="end point, comma-separated")
        p.add_argument("--dinit", type=float, default=DEFAULT_DELTA_INIT,
                       help="initial parameter step (default %(default)s)")
        p.add_argument("--dmin", type=float, default=DEFAULT_DELTA_MIN,
                       help="smallest step before accepting a jump (default %(default)s)")
        p.add_argument("--out", help="output path (default stdout)")

    p = sub.add_parser("sample", help="walk a segment and dump the pattern path")
    add_walk_flags(p)
    p.set_defaults(handler=cmd_sample)

    p = sub.add_parser("chi", help="folding values of one segment")
    add_walk_flags(p)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.set_defaults(handler=cmd_chi)

    p = sub.add_parser("global", help="dataset-level folding report")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True, help="dataset CSV (x_0,...,label)")
    p.add_argument("--budget", type=int, default=200, help="pairs per class pair (default %(default)s)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dinit", type=float, default=DEFAULT_DELTA_INIT)
    p.add_argument("--dmin", type=float, default=DEFAULT_DELTA_MIN)
    p.add_argument("--out", help="report JSON path; a .csv companion table is written next to it")
    p.set_defaults(handler=cmd_global)

    p = sub.add_parser("train", help="train a classifier from a key=value config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out-model", required=True)
    p.add_argument("--out-history", required=True)
    p.add_argument("--out-data", help="also dump the generated dataset CSV")
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("depth-sweep", help="train at several depths, tabulate accuracy and phi")
    p.add_argument("--config", required=True, help="base config; widths give input/hidden/output sizes")
    p.add_argument("--depths", required=True, help="comma-separated hidden layer counts")
    p.add_argument("--out", help="CSV path (default stdout)")
    p.set_defaults(handler=cmd_depth_sweep)

    p = sub.add_parser("forward", help="evaluate network outputs at given points")
    p.add_argument("--model", required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--points", help="semicolon-separated points, e.g. '0.1,0.2;0.3,-0.4'")
    group.add_argument("--points-file", help="file with one comma-separated point per line")
    p.add_argument("--out", help="output path (default stdout)")
    p.set_defaults(handler=cmd_forward)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse --help exits 0, usage errors exit 1
        return int(exc.code or 0)
    try:
        return args.handler(args)
    except TrainingDivergedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ModelFormatError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
