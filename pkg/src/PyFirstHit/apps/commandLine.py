# -*- coding: UTF-8 -*-
"""
@Project    : PyFirstHit
@File       : commandLine.py
@Description: 命令行入口：模拟、桥、轨迹池、h 变换采样、数据生成、训练、模型采样、评估、命中时间报告与收敛实验。
@Version    : v0.1.1
@Dependencies:
    - argparse
    - numpy
    - loguru
@Changelog  :
    - v0.1.0: Subcommands simulate, bridge, pool, hsample, train, sample, eval, hitreport, converge.
    - v0.1.1: generate subcommand, lat,lon data files, hitreport scatter and Cauchy scale fit.
Usage:
    firsthit simulate --scheme sphere:d=2 --n 10 --dt 1e-3 --max-steps 1000000 --seed 1 --out t.csv
    firsthit eval --metric tv --a x.csv --b x.csv --bins 36
    firsthit generate --law vmf --components "kappa=5,mu=1,0,w=0.5;kappa=5,mu=-1,0,w=0.5" --n 1000 --out d.csv
"""
import argparse
import os
import sys
from typing import Optional, Sequence

import numpy as np
from loguru import logger

from .configsHandler import ConfigsHandler
from .debugHelper import TimeTracker
from .logsRecorder import LogsRecorder, SetConsoleLevel
from ..core.bridgeSampler import build_pool, draw_bridges, load_pool, save_pool, simulate_bridges
from ..core.hSampler import parse_ratio, sample_h_transform
from ..core.hitSchemes import parse_scheme
from ..core.sdeCore import (DRAW_CHANNEL, BaselineDrift, RngStream, SampleBatch, SimConfig, simulate_batch,
                            simulate_exits)
from ..datasets.generators import (bernoulli_product, categorical_product, ingest_latlon_csv, parse_components,
                                   tiny_sbm, vmf_mixture)
from ..evaluation.convergence import CONVERGENCE_HEADER, convergence_experiment, parse_projection
from ..evaluation.hitReport import REPORT_HEADER, ReportRow, cauchy_scale_report, hitting_time_report, summary_rows
from ..evaluation.metrics import (analytic_cdf, analytic_histogram, default_binning, histogram, ks_statistic,
                                  parse_binning, tv_distance, w1_1d)
from ..evaluation.svgPlotter import render_histogram_svg, render_scatter_svg, save_svg
from ..learning import driftNet
from ..learning.trainer import TrainConfig, sample_model, train, write_training_log
from ..utils.constants import DEFAULT_CONFIG
from ..utils.csvHandler import CsvHandler
from ..utils.descriptors import ParseVector
from ..utils.exceptions import ConfigurationError, FirstHitError, PreconditionError, ValidationError

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2


class _Parser(argparse.ArgumentParser):
    """argparse parser whose usage errors surface as ValidationError (exit code 1)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise ValidationError(message)


def _resolve_seed(seed: Optional[int], config_seed: int) -> int:
    if seed is not None:
        return seed
    env = os.environ.get(DEFAULT_CONFIG["seed_env"])
    if env:
        try:
            return int(env)
        except ValueError as err:
            raise ConfigurationError(f"{DEFAULT_CONFIG['seed_env']}={env!r} is not an integer") from err
    return config_seed


def _load_config(args) -> ConfigsHandler:
    configs = ConfigsHandler(getattr(args, "config", None) or "")
    logger.debug(f"configuration: {configs.as_dict()}")
    return configs


def _sim_config(args, configs: ConfigsHandler) -> SimConfig:
    section = configs.simulation
    return SimConfig.from_namespace(
        section,
        dt=getattr(args, "dt", None),
        sigma=getattr(args, "sigma", None),
        max_steps=getattr(args, "max_steps", None),
        seed=_resolve_seed(getattr(args, "seed", None), int(section.seed)),
        drift_clamp=getattr(args, "drift_clamp", None),
        nonhit_policy=getattr(args, "nonhit_policy", None),
        workers=args.workers,
    )


def _vector(text: Optional[str]) -> Optional[np.ndarray]:
    return None if text is None else ParseVector(text)


def read_data(path: str) -> SampleBatch:
    """A samples file, or a `lat,lon` file in degrees mapped onto the 2-sphere."""
    _, header, _ = CsvHandler().read_csv(path)
    if [h.lower() for h in header[:2]] == ["lat", "lon"]:
        return ingest_latlon_csv(path)
    return CsvHandler().read_samples(path)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_simulate(args) -> None:
    scheme = parse_scheme(args.scheme)
    cfg = _sim_config(args, _load_config(args))
    z0 = scheme.z0_array if args.z0 is None else _vector(args.z0)
    handler = CsvHandler()
    if args.exits:
        handler.write_samples(args.out, simulate_exits(scheme, BaselineDrift(scheme), z0, cfg, args.n))
    else:
        trajectories = simulate_batch(scheme, BaselineDrift(scheme), z0, cfg, args.n)
        handler.write_trajectories(args.out, trajectories, f"simulate scheme={scheme.descriptor()} seed={cfg.seed}")
    print(f"wrote {args.n} runs to {args.out}")


def cmd_bridge(args) -> None:
    scheme = parse_scheme(args.scheme)
    cfg = _sim_config(args, _load_config(args))
    target = _vector(args.target)
    targets = np.repeat(target[None, :], args.n, axis=0)
    if args.pool:
        pool = load_pool(args.pool, scheme)
        trajectories = draw_bridges(pool, targets, RngStream(cfg.seed, 0, DRAW_CHANNEL).generator())
    else:
        trajectories = simulate_bridges(scheme, targets, cfg, list(range(args.n))).trajectories
    comment = f"bridge scheme={scheme.descriptor()} seed={cfg.seed}"
    CsvHandler().write_trajectories(args.out, trajectories, comment)
    print(f"wrote {args.n} bridges to {args.out}")


def cmd_pool(args) -> None:
    scheme = parse_scheme(args.scheme)
    cfg = _sim_config(args, _load_config(args))
    pool = build_pool(scheme, cfg, args.n)
    save_pool(pool, args.out)
    print(f"wrote pool of {len(pool)} trajectories to {args.out} (attrition {pool.attrition:.3f})")


def cmd_hsample(args) -> None:
    scheme = parse_scheme(args.scheme)
    configs = _load_config(args)
    cfg = _sim_config(args, configs)
    m = args.m if args.m is not None else int(configs.h_sampler.particles)
    batch = sample_h_transform(scheme, parse_ratio(args.ratio, scheme), cfg, m, args.n)
    CsvHandler().write_samples(args.out, batch)
    print(f"wrote {len(batch)} samples to {args.out}")


def generate_data(args) -> SampleBatch:
    """Draw the toy data set requested by a `generate` command line."""
    seed = _resolve_seed(args.seed, int(DEFAULT_CONFIG["simulation"]["seed"]))
    if args.law == "latlon":
        if not args.input:
            raise PreconditionError("generate --law latlon needs --in")
        return ingest_latlon_csv(args.input)
    if args.law == "vmf":
        if not args.components:
            raise PreconditionError("generate --law vmf needs --components")
        components = parse_components(args.components)
        return vmf_mixture(len(components[0].mean), components, args.n, seed)
    if args.law == "sbm":
        return tiny_sbm(args.nodes, args.p_in, args.p_out, args.n, seed)
    if not args.p:
        raise PreconditionError(f"generate --law {args.law} needs --p")
    p = ParseVector(args.p)
    if args.law == "bernoulli":
        return bernoulli_product(p, args.n, seed)
    return categorical_product(p, args.m, args.n, seed)


def cmd_generate(args) -> None:
    batch = generate_data(args)
    CsvHandler().write_samples(args.out, batch, with_tau=False)
    print(f"wrote {len(batch)} samples to {args.out}")


def cmd_train(args) -> None:
    configs = _load_config(args)
    sim = _sim_config(args, configs)
    cfg = TrainConfig.from_namespace(configs.configs, scheme=args.scheme, sim=sim, epochs=args.epochs)
    data = read_data(args.data)
    net, log = train(data, cfg)
    driftNet.save(net, args.out)
    log_path = args.log or f"{args.out}.log.csv"
    write_training_log(log_path, log)
    print(f"wrote model to {args.out}, training log to {log_path}")


def cmd_sample(args) -> None:
    net = driftNet.load(args.model)
    scheme = parse_scheme(args.scheme or net.scheme_descriptor)
    cfg = _sim_config(args, _load_config(args))
    batch = sample_model(net, scheme, cfg, args.n)
    CsvHandler().write_samples(args.out, batch)
    print(f"wrote {len(batch)} samples to {args.out}")


def _projected(points: np.ndarray, projection: Optional[str]) -> np.ndarray:
    if projection is None:
        projection = "angle" if points.shape[1] == 2 else "coord:1"
    return parse_projection(projection)(points)


def evaluate_metric(args) -> ReportRow:
    """Compute the metric requested by an `eval` command line."""
    a = read_data(args.a)
    b = read_data(args.b) if args.b else None
    if (b is None) == (args.analytic is None):
        raise PreconditionError("eval needs exactly one of --b and --analytic")
    if len(a) == 0 or (b is not None and len(b) == 0):
        raise PreconditionError("eval needs non-empty samples")
    n = len(a)
    if args.metric == "tv":
        if args.bins is None or args.bins.isdigit():
            binning = default_binning(a.points, int(args.bins) if args.bins else None)
        else:
            binning = parse_binning(args.bins)
        hist_a = histogram(a, binning)
        other = histogram(b, binning) if b is not None else analytic_histogram(args.analytic, binning)
        return ReportRow("tv", tv_distance(hist_a, other), n, binning.bins, binning.descriptor())
    xs = _projected(a.points, args.projection)
    if args.metric == "ks":
        ys = _projected(b.points, args.projection) if b is not None else analytic_cdf(args.analytic)
        return ReportRow("ks", ks_statistic(xs, ys), n, 0, args.analytic or args.b)
    if b is None:
        raise PreconditionError("w1 needs a second sample (--b)")
    return ReportRow("w1", w1_1d(xs, _projected(b.points, args.projection)), n, 0, args.b)


def cmd_eval(args) -> None:
    row = evaluate_metric(args)
    print(repr(row.value))
    if args.out:
        CsvHandler().write_table(args.out, REPORT_HEADER, [row.as_row()])


def cmd_hitreport(args) -> None:
    batch = CsvHandler().read_samples(args.input)
    hist, summary = hitting_time_report(batch, args.bins, args.horizon)
    notes = [f"median {summary['median']:.4g}", f"p95 {summary['p95']:.4g}",
             f"truncated {summary['truncation_rate']:.2%}"]
    save_svg(args.out, render_histogram_svg(hist, title="Hitting times", xlabel="tau", notes=notes))
    rows = summary_rows(summary, args.bins)
    if args.scatter:
        save_svg(args.scatter, render_scatter_svg(batch.points, title="Exit points"))
    if args.cauchy_gap is not None:
        center = np.zeros(batch.dim - 1) if args.cauchy_center is None else ParseVector(args.cauchy_center)
        _, adopted, cauchy_rows = cauchy_scale_report(batch.points, center, args.cauchy_gap)
        rows.extend(cauchy_rows)
        print(f"cauchy scale {adopted:.6g}")
    if args.csv:
        CsvHandler().write_table(args.csv, REPORT_HEADER, [r.as_row() for r in rows])
    print(f"wrote {args.out}")


def cmd_converge(args) -> None:
    scheme = parse_scheme(args.scheme)
    cfg = _sim_config(args, _load_config(args))
    deltas = [float(v) for v in args.deltas.split(",") if v.strip()]
    result = convergence_experiment(scheme, BaselineDrift(scheme), parse_projection(args.projection), deltas,
                                    args.ref, args.n, cfg, args.horizon, _vector(args.z0))
    CsvHandler().write_table(args.out, CONVERGENCE_HEADER, result.rows())
    print(f"slope {result.slope:.4f}")


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _add_sim_flags(parser: argparse.ArgumentParser, scheme: bool = True) -> None:
    if scheme:
        parser.add_argument("--scheme", required=True, help="scheme descriptor, e.g. sphere:d=2")
    parser.add_argument("--config", help="configuration file (yaml, json, toml or key=value)")
    parser.add_argument("--dt", help="step size or schedule (const:, linear:, piecewise:)")
    parser.add_argument("--sigma", help="noise level or schedule")
    parser.add_argument("--max-steps", dest="max_steps", type=int)
    parser.add_argument("--seed", type=int, help=f"master seed, defaults to ${DEFAULT_CONFIG['seed_env']}")
    parser.add_argument("--drift-clamp", dest="drift_clamp", type=float)
    parser.add_argument("--nonhit-policy", dest="nonhit_policy", choices=("discard", "project"))


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="firsthit", description="First hitting diffusion models")
    parser.add_argument("--log-dir", dest="log_dir", help="also write a rotating log file here")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    parser.add_argument("--workers", type=int, default=None, help="simulation threads")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="baseline trajectories")
    _add_sim_flags(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--z0", help="start point, comma separated")
    p.add_argument("--exits", action="store_true", help="write exit samples instead of trajectories")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("bridge", help="bridges conditioned to exit at a target")
    _add_sim_flags(p)
    p.add_argument("--target", required=True, help="exit point, comma separated")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--pool", help="draw pooled bridges from this pool file")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bridge)

    p = sub.add_parser("pool", help="pre-simulated trajectories for pooled bridges")
    _add_sim_flags(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_pool)

    p = sub.add_parser("hsample", help="sampling by the estimated h-transform")
    _add_sim_flags(p)
    p.add_argument("--ratio", required=True, help="density ratio descriptor, e.g. vmf:kappa=5,mu=1,0")
    p.add_argument("--m", type=int, help="particles per drift evaluation")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_hsample)

    p = sub.add_parser("generate", help="toy data sets and lat,lon ingestion")
    p.add_argument("--law", choices=("vmf", "bernoulli", "sbm", "categorical", "latlon"), required=True)
    p.add_argument("--components", help="vMF mixture, e.g. kappa=5,mu=1,0,w=0.5;kappa=5,mu=-1,0,w=0.5")
    p.add_argument("--p", help="Bernoulli probabilities or one categorical simplex, comma separated")
    p.add_argument("--m", type=int, default=1, help="categorical slots")
    p.add_argument("--nodes", type=int, default=6, help="stochastic block model nodes")
    p.add_argument("--p-in", dest="p_in", type=float, default=0.8)
    p.add_argument("--p-out", dest="p_out", type=float, default=0.1)
    p.add_argument("--in", dest="input", help="lat,lon CSV in degrees")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--seed", type=int, help=f"defaults to ${DEFAULT_CONFIG['seed_env']}")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("train", help="fit a drift network to data")
    _add_sim_flags(p, scheme=False)
    p.add_argument("--scheme", help="overrides the configuration's scheme")
    p.add_argument("--data", required=True)
    p.add_argument("--epochs", type=int)
    p.add_argument("--out", required=True, help="model file")
    p.add_argument("--log", help="training log CSV, defaults to <out>.log.csv")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sample", help="sample from a trained model")
    _add_sim_flags(p, scheme=False)
    p.add_argument("--model", required=True)
    p.add_argument("--scheme", help="defaults to the model's scheme")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("eval", help="compare samples")
    p.add_argument("--metric", choices=("tv", "ks", "w1"), required=True)
    p.add_argument("--a", required=True)
    p.add_argument("--b")
    p.add_argument("--analytic", help="reference law descriptor")
    p.add_argument("--bins", help="bin count or binning descriptor, e.g. sphere2:16x32")
    p.add_argument("--projection", help="angle or coord:<i> for ks and w1")
    p.add_argument("--out", help="report CSV")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("hitreport", help="hitting time histogram as SVG")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True, help="SVG file")
    p.add_argument("--bins", type=int, default=DEFAULT_CONFIG["evaluation"]["time_bins"])
    p.add_argument("--horizon", type=float)
    p.add_argument("--csv", help="also write the summary report CSV")
    p.add_argument("--scatter", help="also draw the exit points as an SVG scatter")
    p.add_argument("--cauchy-gap", dest="cauchy_gap", type=float,
                   help="fit the Cauchy scale of half-space exits for this gap ymax - y0")
    p.add_argument("--cauchy-center", dest="cauchy_center", help="data coordinates of the start, origin by default")
    p.set_defaults(func=cmd_hitreport)

    p = sub.add_parser("converge", help="discretization convergence experiment")
    _add_sim_flags(p)
    p.add_argument("--deltas", required=True, help="comma separated step sizes")
    p.add_argument("--ref", type=float, required=True, help="reference step size")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--horizon", type=float, default=10.0)
    p.add_argument("--projection", default="angle")
    p.add_argument("--z0", help="start point, comma separated")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_converge)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    recorder = None
    tracker = TimeTracker()
    try:
        args = build_parser().parse_args(argv)
        SetConsoleLevel(args.verbose)
        if args.log_dir:
            recorder = LogsRecorder(args.log_dir, "firsthit")
        if args.workers is not None and args.workers < 1:
            raise ConfigurationError("--workers must be positive")
        with tracker.TimeCodeBlock(args.command):
            args.func(args)
        tracker.LogTimeReport(args.command)
        return EXIT_OK
    except ValidationError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_VALIDATION
    except (FirstHitError, OSError) as err:
        logger.opt(exception=err).debug("command failed")
        print(f"error: {err}", file=sys.stderr)
        return EXIT_RUNTIME
    finally:
        if recorder is not None:
            recorder.close()


if __name__ == "__main__":
    sys.exit(main())
