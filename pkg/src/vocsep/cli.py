"""Batch command line interface.

Subcommands: separate, estimate-f0, evaluate, grid-search. Progress and
stage timings go to stderr; results go only to the requested output
files. Exit codes: 0 success, 2 invalid input, 3 partial corpus failure
(some clips or grid cells failed but the sweep finished).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import pipeline
from .audio import read_wav, write_wav
from .pipeline import (
    DumpOptions,
    GridAxis,
    GridSearchSpec,
    PipelineConfig,
    report_failures,
)
from .tracking import write_f0_csv

EXIT_OK = 0
EXIT_INVALID_INPUT = 2
EXIT_PARTIAL_FAILURE = 3

logger = logging.getLogger("vocsep")


def _add_config_args(parser):
    parser.add_argument("--config", help="JSON file of PipelineConfig field overrides")
    parser.add_argument("--lambda-sep", type=float, dest="lambda_sep")
    parser.add_argument("--lambda-f0", type=float, dest="lambda_f0")
    parser.add_argument("--gamma", type=float)
    parser.add_argument("--n-partials", type=int, dest="n_partials")
    parser.add_argument("--w", type=float, help="harmonic mask lobe width in Hz")
    parser.add_argument("--alpha", type=float, help="enhancement exponent")
    parser.add_argument("--mask-mode", choices=["soft", "binary"], dest="mask_mode")


def _config_from_args(args, sample_rate: int) -> PipelineConfig:
    cfg = PipelineConfig.for_sample_rate(sample_rate)
    if args.config:
        cfg = PipelineConfig.from_json(args.config, sample_rate=sample_rate)
    overrides = {
        name: getattr(args, name)
        for name in (
            "lambda_sep", "lambda_f0", "gamma", "n_partials", "w", "alpha", "mask_mode"
        )
        if getattr(args, name, None) is not None
    }
    return cfg.with_overrides(overrides)


def _dump_options(args) -> DumpOptions | None:
    masks_dir = getattr(args, "dump_masks", None)
    saliency = getattr(args, "dump_saliency", None)
    trace = getattr(args, "dump_rpca_trace", None)
    if masks_dir or saliency or trace:
        return DumpOptions(
            masks_dir=masks_dir, saliency_path=saliency, rpca_trace_path=trace
        )
    return None


def _cmd_separate(args) -> int:
    signal = read_wav(args.input, mixdown=args.mixdown)
    cfg = _config_from_args(args, signal.sample_rate)
    result, contour = pipeline.run(signal, cfg, dump=_dump_options(args))
    write_wav(args.vocal, result.vocal)
    write_wav(args.accomp, result.accompaniment)
    if args.f0_csv:
        write_f0_csv(contour, args.f0_csv)
    logger.info("wrote %s and %s", args.vocal, args.accomp)
    return EXIT_OK


def _cmd_estimate_f0(args) -> int:
    signal = read_wav(args.input, mixdown=args.mixdown)
    cfg = _config_from_args(args, signal.sample_rate)
    contour = pipeline.estimate_f0(signal, cfg, dump=_dump_options(args))
    write_f0_csv(contour, args.out)
    logger.info("wrote %s", args.out)
    return EXIT_OK


def _corpus_config(args) -> PipelineConfig:
    if args.config:
        return PipelineConfig.from_json(args.config, sample_rate=args.sample_rate)
    return PipelineConfig.for_sample_rate(args.sample_rate)


def _cmd_evaluate(args) -> int:
    entries = pipeline.load_corpus(args.corpus)
    cfg = _corpus_config(args)
    snr_list = [float(s) for s in args.snr.split(",")] if args.snr else None
    report = pipeline.evaluate(
        entries,
        cfg,
        snr_list=snr_list,
        tolerance_cents=args.tolerance_cents,
        workers=args.workers,
    )
    if args.csv:
        pipeline.write_report_csv(report, args.out)
    else:
        with open(args.out, "w") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
    failed = report_failures(report)
    if failed:
        logger.warning("%d clip evaluations failed", failed)
        return EXIT_PARTIAL_FAILURE
    logger.info("wrote %s", args.out)
    return EXIT_OK


def _parse_axis(text: str) -> GridAxis:
    parts = text.split(":")
    if len(parts) != 4:
        raise ValueError(
            "axis must be name:start:stop:step, got %r" % (text,)
        )
    return GridAxis(
        name=parts[0], start=float(parts[1]), stop=float(parts[2]), step=float(parts[3])
    )


def _cmd_grid_search(args) -> int:
    entries = pipeline.load_corpus(args.corpus)
    cfg = _corpus_config(args)
    spec = GridSearchSpec(
        axes=tuple(_parse_axis(a) for a in args.axis),
        objective=args.objective,
        use_ground_truth_f0=args.ground_truth_f0,
    )
    cells = pipeline.grid_search(
        entries, spec, cfg, tolerance_cents=args.tolerance_cents, workers=args.workers
    )
    pipeline.write_grid_csv(cells, spec, args.out)
    failed_cells = sum(1 for c in cells if c["value"] is None or c["n_failed"])
    if failed_cells:
        logger.warning("%d grid cells had failures", failed_cells)
        return EXIT_PARTIAL_FAILURE
    logger.info("wrote %s", args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vocsep",
        description="Separate singing voice from accompaniment and estimate vocal F0.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("separate", help="split a mixture WAV into vocal/accompaniment")
    p.add_argument("input", help="mixture WAV (mono; see --mixdown)")
    p.add_argument("--vocal", required=True, help="output WAV for the vocal estimate")
    p.add_argument("--accomp", required=True, help="output WAV for the accompaniment")
    p.add_argument("--f0-csv", dest="f0_csv", help="also write the tracked F0 contour")
    p.add_argument("--mixdown", action="store_true", help="average multichannel input")
    p.add_argument("--dump-masks", dest="dump_masks", help="directory for mask dumps")
    p.add_argument("--dump-saliency", dest="dump_saliency", help="saliency CSV path")
    p.add_argument("--dump-rpca-trace", dest="dump_rpca_trace", help="solver trace CSV")
    _add_config_args(p)
    p.set_defaults(func=_cmd_separate)

    p = sub.add_parser("estimate-f0", help="write the vocal F0 contour of a mixture")
    p.add_argument("input")
    p.add_argument("--out", required=True, help="output CSV (time_seconds,f0_hz)")
    p.add_argument("--mixdown", action="store_true")
    p.add_argument("--dump-saliency", dest="dump_saliency")
    p.add_argument("--dump-rpca-trace", dest="dump_rpca_trace")
    p.add_argument("--dump-masks", dest="dump_masks")
    _add_config_args(p)
    p.set_defaults(func=_cmd_estimate_f0)

    p = sub.add_parser("evaluate", help="score a corpus manifest")
    p.add_argument("--corpus", required=True, help="manifest JSON")
    p.add_argument("--out", required=True, help="report path")
    p.add_argument("--csv", action="store_true", help="write CSV instead of JSON")
    p.add_argument("--snr", help="comma-separated SNRs in dB to remix at, e.g. -5,0,5")
    p.add_argument("--workers", type=int, default=1, help="parallel clip workers")
    p.add_argument("--tolerance-cents", type=float, default=50.0, dest="tolerance_cents")
    p.add_argument("--sample-rate", type=int, default=16000, dest="sample_rate",
                   help="corpus sample rate, selects default geometry")
    p.add_argument("--config")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("grid-search", help="sweep config fields over a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True, help="grid CSV path")
    p.add_argument("--axis", action="append", required=True,
                   help="name:start:stop:step (repeatable); name 'lambda' sets both weights")
    p.add_argument("--objective", choices=["gnsdr", "rpa"], default="gnsdr")
    p.add_argument("--ground-truth-f0", action="store_true", dest="ground_truth_f0",
                   help="build harmonic masks from the truth contours")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--tolerance-cents", type=float, default=50.0, dest="tolerance_cents")
    p.add_argument("--sample-rate", type=int, default=16000, dest="sample_rate")
    p.add_argument("--config")
    p.set_defaults(func=_cmd_grid_search)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        logger.error("%s", exc)
        return EXIT_INVALID_INPUT


if __name__ == "__main__":
    sys.exit(main())
