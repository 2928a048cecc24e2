"""Command-line entry point: ``kinseg {segment,evaluate,optimize,simulate,synth}``.

Exit codes: 0 success, 1 usage error, 2 I/O error, 3 numeric/domain error.
Option values resolve as command-line flag, then ``--config`` JSON file,
then built-in default.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .dsmc import RngStream, Snapshot, simulate
from .errors import NetpbmError
from .masks import PipelineConfig, segment, single_linkage_labels
from .metrics import METRIC_NAMES, MetricKind, all_metrics, loss
from .netpbm import read_image, read_mask, render_particles, write_pgm, write_ppm
from .particles import DiffusionKind, ModelParams, ParticleSystem
from .records import dumps, result_summary, write_json, write_trace_csv
from .search import DEFAULT_ITERATIONS, SearchSpace, optimize
from .synthetic import circle_image, square_image, uniform_particles

log = logging.getLogger("kinseg")

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_DOMAIN = 0, 1, 2, 3
DIFFUSIONS = [k.value for k in DiffusionKind]

MODEL_DEFAULTS = dict(delta1=0.3, delta2=0.1, sigma2=0.05, diffusion="d1", T=300.0, dt=0.01)
PIPELINE_DEFAULTS = dict(r_merge=None, threshold=0.5, min_fg=10, min_bg=10, connectivity=8)

DEFAULTS = {
    "segment": dict(MODEL_DEFAULTS, **PIPELINE_DEFAULTS, truth=None, seed=None, tau=1.0, beta=1.0,
                    out_multilevel=None, out_mask=None, snapshot_every=0, snapshot_dir=None),
    "evaluate": dict(metric="dice", tau=1.0, beta=1.0),
    "optimize": dict(PIPELINE_DEFAULTS, metric="dice", tau=1.0, beta=1.0, iters=DEFAULT_ITERATIONS,
                     seed=None, trace_out=None, result_out=None, out_mask=None, timings=False,
                     diffusion="d1", T=300.0, dt=0.01,
                     delta1_min=None, delta1_max=0.7, delta2_min=0.05, delta2_max=0.3,
                     sigma2_min=float(np.exp(-5.0)), sigma2_max=1.0),
    "simulate": dict(n=10000, init="uniform", delta1=0.2, delta2=1.0, sigma2=0.0, diffusion="const",
                     T=100.0, dt=0.01, seed=None, snapshot_every=0, out_dir=None, r_merge=None),
    "synth": dict(shape="square", size=64, seed=0, out_image=None, out_truth=None),
}

REQUIRED = {
    "segment": ("input",),
    "evaluate": ("pred", "truth"),
    "optimize": ("input", "truth"),
    "simulate": (),
    "synth": ("out_image", "out_truth"),
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _model_flags(p, diffusion_default_note="d1"):
    p.add_argument("--delta1", type=float, help="spatial interaction radius")
    p.add_argument("--delta2", type=float, help="feature interaction radius")
    p.add_argument("--sigma2", type=float, help="noise strength")
    _dynamics_flags(p, diffusion_default_note)


def _dynamics_flags(p, diffusion_default_note="d1"):
    p.add_argument("--diffusion", choices=DIFFUSIONS, help=f"diffusion function (default {diffusion_default_note})")
    p.add_argument("--T", type=float, help="final time")
    p.add_argument("--dt", type=float, help="time step")


def _pipeline_flags(p):
    p.add_argument("--r-merge", type=float, help="cluster merge radius (default delta1/2)")
    p.add_argument("--threshold", type=float, help="multi-level threshold (default 0.5)")
    p.add_argument("--min-fg", type=int, help="smallest foreground component kept (default 10)")
    p.add_argument("--min-bg", type=int, help="smallest background component kept (default 10)")
    p.add_argument("--connectivity", type=int, choices=(4, 8), help="pixel connectivity (default 8)")


def _metric_flags(p, with_metric=True):
    if with_metric:
        p.add_argument("--metric", choices=METRIC_NAMES, help="metric (default dice)")
    p.add_argument("--tau", type=float, help="surface-dice tolerance in pixels (default 1)")
    p.add_argument("--beta", type=float, help="F-beta weight (default 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="kinseg", description="Kinetic particle segmentation of gray images.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, help):
        p = sub.add_parser(name, help=help)
        p.add_argument("--config", type=Path, help="JSON file of option values")
        return p

    p = add("segment", "segment one image")
    p.add_argument("--input", type=Path, help="input graymap")
    p.add_argument("--truth", type=Path, help="ground-truth mask; prints metrics when given")
    _model_flags(p)
    _pipeline_flags(p)
    _metric_flags(p, with_metric=False)
    p.add_argument("--seed", type=int)
    p.add_argument("--out-multilevel", type=Path, help="multi-level mask (16-bit PGM)")
    p.add_argument("--out-mask", type=Path, help="binary mask (PGM)")
    p.add_argument("--snapshot-every", type=int, help="steps between particle frames")
    p.add_argument("--snapshot-dir", type=Path, help="directory for particle frames")

    p = add("evaluate", "score a predicted mask")
    p.add_argument("--pred", type=Path)
    p.add_argument("--truth", type=Path)
    _metric_flags(p)

    p = add("optimize", "random search over delta1, delta2, sigma2")
    p.add_argument("--input", type=Path)
    p.add_argument("--truth", type=Path)
    _metric_flags(p)
    p.add_argument("--iters", type=int, help=f"number of trials (default {DEFAULT_ITERATIONS})")
    p.add_argument("--seed", type=int)
    p.add_argument("--trace-out", type=Path, help="CSV trace, one row per trial")
    p.add_argument("--result-out", type=Path, help="JSON summary")
    p.add_argument("--out-mask", type=Path, help="mask of the best trial (PGM)")
    p.add_argument("--timings", action="store_true", default=None, help="fill the seconds column")
    for name in ("delta1", "delta2", "sigma2"):
        p.add_argument(f"--{name}-min", type=float, help=f"lower prior bound for {name}")
        p.add_argument(f"--{name}-max", type=float, help=f"upper prior bound for {name}")
    _dynamics_flags(p)
    _pipeline_flags(p)

    p = add("simulate", "evolve uniformly scattered particles")
    p.add_argument("--n", type=int, help="number of particles")
    p.add_argument("--init", choices=("uniform",))
    _model_flags(p, "const")
    p.add_argument("--seed", type=int)
    p.add_argument("--snapshot-every", type=int)
    p.add_argument("--out-dir", type=Path, help="directory for frames and stats.csv")
    p.add_argument("--r-merge", type=float, help="cluster radius for counting (default delta1/2)")

    p = add("synth", "write a synthetic test image and its mask")
    p.add_argument("--shape", choices=("square", "circle"))
    p.add_argument("--size", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out-image", type=Path)
    p.add_argument("--out-truth", type=Path)
    return parser


def _subparser(parser, command):
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[command]
    raise KeyError(command)


def resolve(parser, args) -> argparse.Namespace:
    """Merge flags, the config file and defaults into one namespace."""
    command = args.command
    sub = _subparser(parser, command)
    actions = {a.dest: a for a in sub._actions if a.dest not in ("help", "config")}
    config = {}
    if args.config is not None:
        try:
            raw = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise UsageError(f"config {args.config}: {exc}") from None
        if not isinstance(raw, dict):
            raise UsageError("config file must hold a JSON object")
        for key, value in raw.items():
            dest = key.replace("-", "_")
            if dest not in actions:
                raise UsageError(f"unknown config key {key!r} for {command}")
            config[dest] = _coerce(actions[dest], value, key)
    merged = dict(DEFAULTS[command])
    merged.update(config)
    for dest in actions:
        value = getattr(args, dest, None)
        if value is not None:
            merged[dest] = value
        merged.setdefault(dest, None)
    for dest in REQUIRED[command]:
        if merged.get(dest) is None:
            raise UsageError(f"{command}: --{dest.replace('_', '-')} is required")
    merged["command"] = command
    merged["verbose"] = args.verbose
    return argparse.Namespace(**merged)


def _coerce(action, value, key):
    if value is None:
        return None
    if isinstance(action, argparse._StoreTrueAction):
        if not isinstance(value, bool):
            raise UsageError(f"config key {key!r} must be true or false")
        return value
    try:
        value = action.type(value) if action.type is not None else value
    except (TypeError, ValueError):
        raise UsageError(f"config key {key!r}: bad value {value!r}") from None
    if action.choices is not None and value not in action.choices:
        raise UsageError(f"config key {key!r}: {value!r} not in {list(action.choices)}")
    return value


def _seed(ns) -> int:
    if ns.seed is None:
        ns.seed = int(np.random.SeedSequence().entropy % 2**63)
        print(f"seed: {ns.seed}", file=sys.stderr)
    return ns.seed


def _params(ns, delta1=None, delta2=None, sigma2=None) -> ModelParams:
    return ModelParams(
        ns.delta1 if delta1 is None else delta1,
        ns.delta2 if delta2 is None else delta2,
        ns.sigma2 if sigma2 is None else sigma2,
        DiffusionKind.parse(ns.diffusion),
        ns.dt,
        ns.T,
    )


def _pipeline(ns) -> PipelineConfig:
    return PipelineConfig(ns.r_merge, ns.threshold, ns.min_fg, ns.min_bg, ns.connectivity)


def _frame_writer(directory: Path, features=None):
    directory.mkdir(parents=True, exist_ok=True)

    def write(snap: Snapshot):
        write_ppm(render_particles(snap.positions, features), directory / f"frame_{snap.step:07d}.ppm")

    return write


def cmd_segment(ns) -> int:
    image = read_image(ns.input)
    truth = read_mask(ns.truth) if ns.truth is not None else None
    params = _params(ns)
    config = _pipeline(ns)
    rng = RngStream(_seed(ns))
    callback = None
    if ns.snapshot_dir is not None and ns.snapshot_every > 0:
        callback = _frame_writer(Path(ns.snapshot_dir), np.asarray(image, dtype=np.float64).ravel())
    seg = segment(image, params, rng, config, ns.snapshot_every, callback)
    if ns.out_multilevel is not None:
        write_pgm(seg.multilevel, ns.out_multilevel, maxval=65535)
    if ns.out_mask is not None:
        write_pgm(seg.mask, ns.out_mask)
    out = {"seed": ns.seed, "clusters": seg.clusters.n_clusters, "foreground": int(seg.mask.sum())}
    if truth is not None:
        out["metrics"] = all_metrics(seg.mask, truth, ns.tau, ns.beta)
    print(dumps(out))
    return EXIT_OK


def cmd_evaluate(ns) -> int:
    metric = MetricKind(ns.metric, ns.tau, ns.beta)
    value = metric(read_mask(ns.pred), read_mask(ns.truth))
    print(dumps({"metric": metric.name, "value": value, "loss": loss(value)}))
    return EXIT_OK


def cmd_optimize(ns) -> int:
    image = read_image(ns.input)
    truth = read_mask(ns.truth)
    metric = MetricKind(ns.metric, ns.tau, ns.beta)
    space = SearchSpace(ns.delta1_min, ns.delta1_max, ns.delta2_min, ns.delta2_max, ns.sigma2_min, ns.sigma2_max)
    config = _pipeline(ns)
    seed = _seed(ns)

    def progress(trial):
        log.info("trial %d: loss %.6f (delta1=%.4g delta2=%.4g sigma2=%.4g)",
                 trial.index, trial.loss, trial.delta1, trial.delta2, trial.sigma2)

    result = optimize(image, truth, metric, ns.iters, seed, space=space, diffusion=DiffusionKind.parse(ns.diffusion),
                      epsilon=ns.dt, horizon=ns.T, config=config, progress=progress)
    if ns.trace_out is not None:
        write_trace_csv(result, ns.trace_out, timings=bool(ns.timings))
    model = {"diffusion": DiffusionKind.parse(ns.diffusion).value, "T": ns.T, "dt": ns.dt}
    pipeline = {"r_merge": ns.r_merge, "threshold": ns.threshold, "min_fg": ns.min_fg,
                "min_bg": ns.min_bg, "connectivity": ns.connectivity}
    summary = result_summary(result, metric, model, pipeline)
    if ns.result_out is not None:
        write_json(summary, ns.result_out)
    if ns.out_mask is not None:
        b = result.best
        seg = segment(image, _params(ns, b.delta1, b.delta2, b.sigma2), RngStream.derived(seed, b.index), config)
        write_pgm(seg.mask, ns.out_mask)
    print(dumps(summary))
    return EXIT_OK


def cmd_simulate(ns) -> int:
    if ns.n < 2:
        raise ValueError("--n must be at least 2")
    params = _params(ns)
    seed = _seed(ns)
    positions, features = uniform_particles(ns.n, seed)
    origins = np.column_stack((np.zeros(ns.n, dtype=np.int64), np.arange(ns.n)))
    system = ParticleSystem(positions, features, origins, ns.n, 1)
    r = ns.r_merge if ns.r_merge is not None else params.delta1 / 2.0
    rows = []
    frames = _frame_writer(Path(ns.out_dir)) if ns.out_dir is not None else None

    def record(snap: Snapshot):
        labels = single_linkage_labels(snap.positions, r)
        rows.append((snap.step, snap.time, snap.mean[0], snap.mean[1], snap.energy, int(labels.max()) + 1))
        if frames is not None:
            frames(snap)

    simulate(system, params, RngStream.derived(seed, 1), ns.snapshot_every, store_positions=False, callback=record)
    if ns.out_dir is not None:
        with open(Path(ns.out_dir) / "stats.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("step", "time", "mean_x", "mean_y", "energy", "clusters"))
            for step, t, mx, my, e, k in rows:
                w.writerow((step, repr(t), repr(mx), repr(my), repr(e), k))
    last = rows[-1]
    print(dumps({"seed": seed, "steps": last[0], "mean": [last[2], last[3]], "energy": last[4], "clusters": last[5]}))
    return EXIT_OK


def cmd_synth(ns) -> int:
    make = square_image if ns.shape == "square" else circle_image
    img, truth = make(size=ns.size, seed=ns.seed)
    write_pgm(img, ns.out_image)
    write_pgm(truth, ns.out_truth)
    return EXIT_OK


COMMANDS = {
    "segment": cmd_segment,
    "evaluate": cmd_evaluate,
    "optimize": cmd_optimize,
    "simulate": cmd_simulate,
    "synth": cmd_synth,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        ns = resolve(parser, args)
        return COMMANDS[ns.command](ns)
    except UsageError as exc:
        print(f"kinseg: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, NetpbmError) as exc:
        print(f"kinseg: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, ArithmeticError) as exc:
        print(f"kinseg: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
