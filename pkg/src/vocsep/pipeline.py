"""End-to-end separation and F0 estimation pipeline.

Stages: STFT -> low-rank/sparse split -> binary mask -> A-weighted
log-frequency vocal spectrogram -> subharmonic summation + comb
enhancement -> contour tracking -> harmonic mask -> soft mask ->
mask integration -> masked resynthesis. When the separation and
F0-stage sparsity weights are equal the matrix decomposition runs once
and is shared by both stages.

Also hosts corpus evaluation (with optional SNR remixing from the
references) and grid search over pipeline parameters.
"""

from __future__ import annotations

import concurrent.futures
import csv
import dataclasses
import itertools
import json
import logging
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import rpca
from .audio import AudioSignal, read_wav
from .masks import (
    HarmonicMaskConfig,
    SeparationResult,
    binary_mask,
    harmonic_mask,
    integrate_binary,
    integrate_soft,
    mask_to_csv,
    mask_to_pgm,
    separate,
    wiener_mask,
)
from .metrics import (
    SeparationScore,
    decompose_estimate,
    gnsdr,
    nsdr,
    raw_pitch_accuracy,
    sdr_sir_sar,
    voiced_region_mask,
)
from .saliency import ShsConfig, combine, f0_enhancement, saliency_to_csv, shs
from .spectrogram import (
    LogFrequencyGrid,
    MagnitudeSpectrogram,
    apply_a_weighting,
    magnitude,
    stft,
    to_log_frequency,
)
from .tracking import (
    F0Contour,
    TrackerConfig,
    read_f0_csv,
    viterbi,
)

logger = logging.getLogger(__name__)

__all__ = [
    "PipelineConfig",
    "GridAxis",
    "GridSearchSpec",
    "DumpOptions",
    "CorpusEntry",
    "run",
    "estimate_f0",
    "evaluate",
    "grid_search",
    "load_corpus",
    "align_contour",
    "write_grid_csv",
    "write_report_csv",
]

_DEFAULT_TRANSITION_SCALE = float(np.sqrt(150.0**2 / 2.0))


@dataclass(frozen=True)
class PipelineConfig:
    """All pipeline tunables. Defaults are the 16 kHz settings; use
    for_sample_rate() to pick the right geometry for a signal.

    lambda_sep and lambda_f0 weight the sparse term for the separation
    and F0-estimation decompositions; gamma sets the binary mask
    threshold; n_partials, w and alpha control the harmonic mask width,
    partial count, and enhancement exponent.
    """

    window_size: int = 2048
    hop_size: int = 160
    lambda_sep: float = 0.8
    lambda_f0: float = 0.8
    gamma: float = 1.0
    n_partials: int = 10
    w: float = 50.0
    alpha: float = 0.6
    f0_min_hz: float = 80.0
    f0_max_hz: float = 720.0
    h_low_hz: float = 30.0
    cents_per_bin: float = 10.0
    mask_mode: str = "soft"
    shs_decay: float = 0.86
    tukey_shape: float = 0.5
    transition_scale_cents: float = _DEFAULT_TRANSITION_SCALE
    saliency_floor: float = 1e-12
    rpca_tolerance: float = 1e-7
    rpca_max_iterations: int = 1000

    def __post_init__(self):
        if self.mask_mode not in ("soft", "binary"):
            raise ValueError("mask_mode must be 'soft' or 'binary'")
        if self.lambda_sep <= 0 or self.lambda_f0 <= 0:
            raise ValueError("lambda weights must be positive")

    @classmethod
    def for_sample_rate(cls, sample_rate: int, **overrides) -> "PipelineConfig":
        """Geometry and defaults keyed by sample rate: 2048/160 with 10
        partials and 50 Hz lobes up to 32 kHz, 4096/441 with 20 partials
        and 70 Hz lobes above."""
        if sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        if sample_rate <= 32000:
            base = dict(window_size=2048, hop_size=160, n_partials=10, w=50.0)
        else:
            base = dict(window_size=4096, hop_size=441, n_partials=20, w=70.0)
        base.update(overrides)
        return cls(**base)

    def with_overrides(self, overrides: dict) -> "PipelineConfig":
        """Replace fields from a {field_name: value} mapping; unknown
        names are an error."""
        known = {f.name for f in dataclasses.fields(self)}
        unknown = set(overrides) - known
        if unknown:
            raise ValueError("unknown config fields: %s" % (sorted(unknown),))
        return dataclasses.replace(self, **overrides)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_json(cls, path, sample_rate: int | None = None) -> "PipelineConfig":
        """Load overrides from a JSON object whose keys mirror the
        PipelineConfig field names."""
        with open(path) as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise ValueError("config JSON must be an object of field overrides")
        base = cls.for_sample_rate(sample_rate) if sample_rate else cls()
        return base.with_overrides(data)


@dataclass(frozen=True)
class DumpOptions:
    """Debug artifact paths; any subset may be set."""

    masks_dir: str | None = None
    saliency_path: str | None = None
    rpca_trace_path: str | None = None


def _rpca_config(cfg: PipelineConfig, lam: float) -> rpca.RpcaConfig:
    return rpca.RpcaConfig(
        lam=lam,
        tolerance=cfg.rpca_tolerance,
        max_iterations=cfg.rpca_max_iterations,
    )


def _tracker_config(cfg: PipelineConfig) -> TrackerConfig:
    return TrackerConfig(
        f0_min_hz=cfg.f0_min_hz,
        f0_max_hz=cfg.f0_max_hz,
        transition_scale_cents=cfg.transition_scale_cents,
        saliency_floor=cfg.saliency_floor,
    )


def _estimate_contour(mag, decomposition, cfg: PipelineConfig, dump=None):
    """Track the vocal F0 from a mixture magnitude spectrogram and its
    low-rank/sparse split. Frames whose binary-masked vocal spectrogram
    is identically zero come back unvoiced."""
    mask_b = binary_mask(decomposition, cfg.gamma)
    vocal_mag = MagnitudeSpectrogram(
        values=mask_b.values * mag.values,
        window_size=mag.window_size,
        hop_size=mag.hop_size,
        sample_rate=mag.sample_rate,
    )
    grid = LogFrequencyGrid.for_nyquist(
        mag.nyquist_hz, h_low_hz=cfg.h_low_hz, cents_per_bin=cfg.cents_per_bin
    )
    logspec = to_log_frequency(apply_a_weighting(vocal_mag), grid)
    summation = shs(logspec, ShsConfig(n_partials=cfg.n_partials, decay=cfg.shs_decay))
    enhancement = f0_enhancement(mask_b, grid, mag.nyquist_hz, mag.hop_seconds)
    saliency = combine(summation, enhancement, cfg.alpha)
    contour = viterbi(saliency, _tracker_config(cfg))

    if dump is not None and dump.saliency_path:
        saliency_to_csv(saliency, dump.saliency_path)
    if dump is not None and dump.masks_dir:
        Path(dump.masks_dir).mkdir(parents=True, exist_ok=True)
        mask_to_pgm(mask_b, str(Path(dump.masks_dir) / "binary_rpca.pgm"))

    sounding = vocal_mag.values.max(axis=1) > 0
    if not sounding.all():
        f0 = np.where(sounding, contour.f0_hz, 0.0)
        contour = F0Contour(
            f0_hz=f0,
            f0_cents=np.where(sounding, contour.f0_cents, 0.0),
            voiced=sounding,
            hop_seconds=contour.hop_seconds,
        )
    return contour


def estimate_f0(signal: AudioSignal, cfg: PipelineConfig, dump: DumpOptions | None = None) -> F0Contour:
    """Estimate the vocal F0 contour of a mixture."""
    t0 = time.perf_counter()
    spec = stft(signal, cfg.window_size, cfg.hop_size)
    mag = magnitude(spec)
    logger.info("stft: %d frames x %d bins (%.2fs)", mag.n_frames, mag.n_bins,
                time.perf_counter() - t0)
    t0 = time.perf_counter()
    decomposition = rpca.decompose(mag.values, _rpca_config(cfg, cfg.lambda_f0))
    _log_rpca("rpca[f0]", decomposition, t0)
    if dump is not None and dump.rpca_trace_path:
        rpca.trace_to_csv(decomposition, dump.rpca_trace_path)
    t0 = time.perf_counter()
    contour = _estimate_contour(mag, decomposition, cfg, dump)
    logger.info("f0 tracking done (%.2fs)", time.perf_counter() - t0)
    return contour


def _log_rpca(stage, result, t0):
    logger.info(
        "%s: %d iterations, residual %.2e%s (%.2fs)",
        stage, result.iterations, result.final_residual,
        "" if result.converged else " [not converged]",
        time.perf_counter() - t0,
    )


def run(
    signal: AudioSignal,
    cfg: PipelineConfig | None = None,
    ground_truth_f0: F0Contour | None = None,
    dump: DumpOptions | None = None,
    _force_two_pass: bool = False,
):
    """Separate a mixture and estimate its vocal F0.

    Parameters
    ----------
    signal : AudioSignal
        Mono mixture.
    cfg : PipelineConfig, optional
        Defaults to the geometry for the signal's sample rate.
    ground_truth_f0 : F0Contour, optional
        Skip F0 estimation and build the harmonic mask from this
        contour instead (align it with align_contour first).
    dump : DumpOptions, optional
        Debug artifact paths.

    Returns
    -------
    (SeparationResult, F0Contour)
    """
    if cfg is None:
        cfg = PipelineConfig.for_sample_rate(signal.sample_rate)
    t_start = time.perf_counter()
    spec = stft(signal, cfg.window_size, cfg.hop_size)
    mag = magnitude(spec)
    logger.info("stft: %d frames x %d bins", mag.n_frames, mag.n_bins)

    decomposition_f0 = None
    if ground_truth_f0 is None:
        t0 = time.perf_counter()
        decomposition_f0 = rpca.decompose(mag.values, _rpca_config(cfg, cfg.lambda_f0))
        _log_rpca("rpca[f0]", decomposition_f0, t0)
        if dump is not None and dump.rpca_trace_path:
            rpca.trace_to_csv(decomposition_f0, dump.rpca_trace_path)
        contour = _estimate_contour(mag, decomposition_f0, cfg, dump)
    else:
        if ground_truth_f0.n_frames != mag.n_frames:
            raise ValueError(
                "ground-truth contour has %d frames, expected %d; align it "
                "with align_contour()" % (ground_truth_f0.n_frames, mag.n_frames)
            )
        contour = ground_truth_f0

    if (
        decomposition_f0 is not None
        and cfg.lambda_sep == cfg.lambda_f0
        and not _force_two_pass
    ):
        decomposition_sep = decomposition_f0  # identical problem, reuse
    else:
        t0 = time.perf_counter()
        decomposition_sep = rpca.decompose(mag.values, _rpca_config(cfg, cfg.lambda_sep))
        _log_rpca("rpca[sep]", decomposition_sep, t0)

    soft = wiener_mask(decomposition_sep)
    harmonic = harmonic_mask(
        contour,
        mag,
        HarmonicMaskConfig(
            n_partials=cfg.n_partials, width_hz=cfg.w, tukey_shape=cfg.tukey_shape
        ),
    )
    integrated = integrate_soft(soft, harmonic)
    if cfg.mask_mode == "binary":
        integrated = integrate_binary(integrated)
    if dump is not None and dump.masks_dir:
        out = Path(dump.masks_dir)
        out.mkdir(parents=True, exist_ok=True)
        mask_to_pgm(soft, str(out / "wiener.pgm"))
        mask_to_pgm(harmonic, str(out / "harmonic.pgm"))
        mask_to_csv(integrated, str(out / "integrated.csv"))

    result = separate(spec, integrated)
    logger.info("pipeline done (%.2fs total)", time.perf_counter() - t_start)
    return result, contour


def align_contour(contour: F0Contour, n_frames: int, hop_seconds: float) -> F0Contour:
    """Resample a contour onto n_frames ticks hop_seconds apart by
    nearest frame (for feeding external ground truth into run())."""
    times = np.arange(n_frames) * hop_seconds
    idx = np.minimum(
        np.rint(times / contour.hop_seconds).astype(np.intp), contour.n_frames - 1
    )
    return F0Contour(
        f0_hz=contour.f0_hz[idx],
        f0_cents=contour.f0_cents[idx],
        voiced=contour.voiced[idx],
        hop_seconds=hop_seconds,
    )


# ---------------------------------------------------------------------------
# corpus evaluation


@dataclass(frozen=True)
class CorpusEntry:
    """One manifest row; paths to the mixture, references, and truth."""

    clip_id: str
    mixture_path: str
    vocal_path: str
    accomp_path: str
    f0_path: str


def load_corpus(manifest_path) -> list:
    """Read a corpus manifest: a JSON list of {id, mixture_path,
    vocal_path, accomp_path, f0_path} objects."""
    with open(manifest_path) as fh:
        data = json.load(fh)
    if not isinstance(data, list) or not data:
        raise ValueError("manifest must be a non-empty JSON list")
    entries = []
    for row in data:
        try:
            entries.append(
                CorpusEntry(
                    clip_id=str(row["id"]),
                    mixture_path=row["mixture_path"],
                    vocal_path=row["vocal_path"],
                    accomp_path=row["accomp_path"],
                    f0_path=row["f0_path"],
                )
            )
        except (KeyError, TypeError) as exc:
            raise ValueError("bad manifest row %r: %s" % (row, exc)) from exc
    return entries


def _score_clip(
    entry: CorpusEntry,
    cfg: PipelineConfig,
    snr_db: float | None,
    tolerance_cents: float,
    use_ground_truth_f0: bool,
) -> dict:
    """Evaluate one clip; returns a per-clip report dict."""
    ref_vocal = read_wav(entry.vocal_path)
    ref_accomp = read_wav(entry.accomp_path)
    truth = read_f0_csv(entry.f0_path)
    if ref_vocal.sample_rate != ref_accomp.sample_rate:
        raise ValueError("reference sample rates differ for %s" % entry.clip_id)
    if snr_db is None:
        mixture = read_wav(entry.mixture_path)
    else:
        # remix from the references, targeting the SNR over voiced samples
        voiced_v = voiced_region_mask(ref_vocal, truth)
        voiced_a = voiced_region_mask(ref_accomp, truth)
        v_energy = float(voiced_v.samples @ voiced_v.samples)
        a_energy = float(voiced_a.samples @ voiced_a.samples)
        if v_energy == 0 or a_energy == 0:
            raise ValueError("cannot remix %s: silent voiced region" % entry.clip_id)
        gain = float(np.sqrt(v_energy / (a_energy * 10.0 ** (snr_db / 10.0))))
        ref_accomp = AudioSignal(ref_accomp.samples * gain, ref_accomp.sample_rate)
        mixture = AudioSignal(
            ref_vocal.samples + ref_accomp.samples, ref_vocal.sample_rate
        )
    if mixture.sample_rate != ref_vocal.sample_rate:
        raise ValueError("mixture sample rate differs for %s" % entry.clip_id)
    n = min(mixture.samples.size, ref_vocal.samples.size, ref_accomp.samples.size)
    mixture = AudioSignal(mixture.samples[:n], mixture.sample_rate)
    ref_vocal = AudioSignal(ref_vocal.samples[:n], ref_vocal.sample_rate)
    ref_accomp = AudioSignal(ref_accomp.samples[:n], ref_accomp.sample_rate)

    gt = None
    if use_ground_truth_f0:
        n_frames = 1 + n // cfg.hop_size
        gt = align_contour(truth, n_frames, cfg.hop_size / mixture.sample_rate)
    separation, contour = run(mixture, cfg, ground_truth_f0=gt)

    gated = {
        "est_vocal": voiced_region_mask(separation.vocal, truth),
        "est_accomp": voiced_region_mask(separation.accompaniment, truth),
        "ref_vocal": voiced_region_mask(ref_vocal, truth),
        "ref_accomp": voiced_region_mask(ref_accomp, truth),
        "mixture": voiced_region_mask(mixture, truth),
    }

    def _score(est, ref, other):
        parts = decompose_estimate(gated[est], gated[ref], gated[other])
        sdr, sir, sar = sdr_sir_sar(parts)
        improvement = nsdr(gated[est], gated[ref], gated["mixture"])
        return SeparationScore(sdr=sdr, sir=sir, sar=sar, nsdr=improvement)

    vocal_score = _score("est_vocal", "ref_vocal", "ref_accomp")
    accomp_score = _score("est_accomp", "ref_accomp", "ref_vocal")
    rpa = raw_pitch_accuracy(contour, truth, tolerance_cents)
    return {
        "id": entry.clip_id,
        "length_seconds": n / mixture.sample_rate,
        "vocal": dataclasses.asdict(vocal_score),
        "accompaniment": dataclasses.asdict(accomp_score),
        "raw_pitch_accuracy": rpa,
    }


def _score_clip_safe(args):
    entry, cfg, snr_db, tolerance_cents, use_gt = args
    try:
        return _score_clip(entry, cfg, snr_db, tolerance_cents, use_gt)
    except Exception as exc:  # per-clip failures must not sink the corpus
        logger.warning("clip %s failed: %s", entry.clip_id, exc)
        return {"id": entry.clip_id, "error": "%s: %s" % (type(exc).__name__, exc)}


def _aggregate(clips: list) -> dict:
    scored = [c for c in clips if "error" not in c]
    section = {
        "clips": clips,
        "n_clips": len(clips),
        "n_failed": len(clips) - len(scored),
    }
    if scored:
        lengths = [c["length_seconds"] for c in scored]
        for source in ("vocal", "accompaniment"):
            pairs = lambda key: [
                (c[source][key], l) for c, l in zip(scored, lengths)
            ]
            section[source] = {
                "gnsdr": gnsdr(pairs("nsdr")),
                "gsir": gnsdr(pairs("sir")),
                "gsar": gnsdr(pairs("sar")),
            }
        section["raw_pitch_accuracy_mean"] = float(
            np.mean([c["raw_pitch_accuracy"] for c in scored])
        )
        section["total_seconds"] = float(sum(lengths))
    return section


def evaluate(
    entries: list,
    cfg: PipelineConfig,
    snr_list: list | None = None,
    tolerance_cents: float = 50.0,
    workers: int = 1,
    use_ground_truth_f0: bool = False,
) -> dict:
    """Score a corpus: per-clip SDR/SIR/SAR/NSDR for both sources, raw
    pitch accuracy, and length-weighted global aggregates.

    With snr_list, the mixtures are remixed from the references at each
    SNR (dB, measured over voiced samples) and the report contains one
    section per SNR; otherwise the manifest mixtures are scored
    directly. Clip failures are recorded per clip, never fatal.
    """
    if not entries:
        raise ValueError("empty corpus")
    snrs = list(snr_list) if snr_list is not None else [None]

    def _run_section(snr_db):
        jobs = [(e, cfg, snr_db, tolerance_cents, use_ground_truth_f0) for e in entries]
        if workers > 1:
            with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
                clips = list(pool.map(_score_clip_safe, jobs))
        else:
            clips = [_score_clip_safe(job) for job in jobs]
        return _aggregate(clips)

    if snr_list is None:
        report = _run_section(None)
    else:
        report = {
            "sections": [
                {"snr_db": snr_db, **_run_section(snr_db)} for snr_db in snrs
            ]
        }
    report["config"] = cfg.to_dict()
    return report


def report_failures(report: dict) -> int:
    """Total failed clips across a report's sections."""
    if "sections" in report:
        return sum(s.get("n_failed", 0) for s in report["sections"])
    return report.get("n_failed", 0)


# ---------------------------------------------------------------------------
# grid search


@dataclass(frozen=True)
class GridAxis:
    """Inclusive swept range for one config field.

    name may be any numeric PipelineConfig field, or "lambda" to sweep
    lambda_sep and lambda_f0 together.
    """

    name: str
    start: float
    stop: float
    step: float

    def __post_init__(self):
        if self.step <= 0:
            raise ValueError("step must be positive")
        if self.stop < self.start:
            raise ValueError("stop must be >= start")

    def values(self) -> list:
        count = int(round((self.stop - self.start) / self.step)) + 1
        return [round(self.start + k * self.step, 10) for k in range(count)]


@dataclass(frozen=True)
class GridSearchSpec:
    """Axes to sweep and the objective to record ("gnsdr" on the vocal
    estimate, or "rpa")."""

    axes: tuple
    objective: str = "gnsdr"
    use_ground_truth_f0: bool = False

    def __post_init__(self):
        if not self.axes:
            raise ValueError("grid search needs at least one axis")
        if self.objective not in ("gnsdr", "rpa"):
            raise ValueError("objective must be 'gnsdr' or 'rpa'")
        object.__setattr__(self, "axes", tuple(self.axes))


def _apply_axes(cfg: PipelineConfig, names, values) -> PipelineConfig:
    overrides = {}
    for name, value in zip(names, values):
        if name == "lambda":
            overrides["lambda_sep"] = value
            overrides["lambda_f0"] = value
        elif name == "n_partials":
            overrides[name] = int(value)
        else:
            overrides[name] = value
    return cfg.with_overrides(overrides)


def grid_search(
    entries: list,
    spec: GridSearchSpec,
    cfg: PipelineConfig,
    tolerance_cents: float = 50.0,
    workers: int = 1,
) -> list:
    """Sweep the axes' cartesian product, scoring the corpus per cell.

    Returns one dict per cell: axis values, the objective value (None
    if every clip failed), and the per-cell failure count. A failing
    cell never aborts the sweep.
    """
    names = [axis.name for axis in spec.axes]
    cells = []
    combos = list(itertools.product(*(axis.values() for axis in spec.axes)))
    logger.info("grid search: %d cells over axes %s", len(combos), names)
    for combo in combos:
        cell = dict(zip(names, combo))
        try:
            cell_cfg = _apply_axes(cfg, names, combo)
            report = evaluate(
                entries,
                cell_cfg,
                tolerance_cents=tolerance_cents,
                workers=workers,
                use_ground_truth_f0=spec.use_ground_truth_f0,
            )
            if spec.objective == "gnsdr":
                value = report.get("vocal", {}).get("gnsdr")
            else:
                value = report.get("raw_pitch_accuracy_mean")
            cell["value"] = value
            cell["n_failed"] = report.get("n_failed", 0)
        except Exception as exc:  # record and continue the sweep
            logger.warning("grid cell %s failed: %s", cell, exc)
            cell["value"] = None
            cell["n_failed"] = len(entries)
            cell["error"] = "%s: %s" % (type(exc).__name__, exc)
        cells.append(cell)
    return cells


def write_grid_csv(cells: list, spec: GridSearchSpec, path) -> None:
    """Write grid cells as CSV, best objective first (failures last)."""
    names = [axis.name for axis in spec.axes]
    ordered = sorted(
        cells,
        key=lambda c: (c["value"] is None, -(c["value"] if c["value"] is not None else 0)),
    )
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(names + [spec.objective, "n_failed", "error"])
        for cell in ordered:
            writer.writerow(
                [cell[n] for n in names]
                + [
                    "" if cell["value"] is None else "%.6f" % cell["value"],
                    cell["n_failed"],
                    cell.get("error", ""),
                ]
            )


def write_report_csv(report: dict, path) -> None:
    """Flatten a report's per-clip scores into CSV rows."""
    sections = report.get("sections") or [report]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "snr_db", "id", "length_seconds",
                "vocal_sdr", "vocal_sir", "vocal_sar", "vocal_nsdr",
                "accomp_sdr", "accomp_sir", "accomp_sar", "accomp_nsdr",
                "raw_pitch_accuracy", "error",
            ]
        )
        for section in sections:
            snr = section.get("snr_db", "")
            for clip in section.get("clips", []):
                if "error" in clip:
                    writer.writerow([snr, clip["id"]] + [""] * 10 + [clip["error"]])
                    continue
                v, a = clip["vocal"], clip["accompaniment"]
                writer.writerow(
                    [
                        snr, clip["id"], "%.3f" % clip["length_seconds"],
                        "%.4f" % v["sdr"], "%.4f" % v["sir"], "%.4f" % v["sar"], "%.4f" % v["nsdr"],
                        "%.4f" % a["sdr"], "%.4f" % a["sir"], "%.4f" % a["sar"], "%.4f" % a["nsdr"],
                        "%.6f" % clip["raw_pitch_accuracy"], "",
                    ]
                )
