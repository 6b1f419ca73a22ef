"""Time-frequency masks and masked resynthesis.

Three mask families: soft (Wiener-style ratio of the sparse RPCA part
to sparse+low-rank), binary (sparse magnitude exceeding gamma times the
low-rank magnitude), and harmonic (Tukey lobes around each partial of a
tracked F0 contour). Masks integrate by elementwise product; a masked
spectrogram resynthesizes with the mixture phases.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .audio import AudioSignal
from .rpca import RpcaResult
from .spectrogram import ComplexSpectrogram, MagnitudeSpectrogram, istft
from .tracking import F0Contour

__all__ = [
    "TimeFrequencyMask",
    "HarmonicMaskConfig",
    "SeparationResult",
    "wiener_mask",
    "binary_mask",
    "harmonic_mask",
    "integrate_soft",
    "integrate_binary",
    "separate",
    "mask_to_pgm",
    "mask_to_csv",
]


@dataclass(frozen=True)
class TimeFrequencyMask:
    """(frames, bins) mask with values in [0, 1]; kind 'binary' masks
    contain only 0 and 1."""

    values: np.ndarray
    kind: str = "soft"

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2 or values.size == 0:
            raise ValueError("mask must be a non-empty 2-d array")
        if self.kind not in ("soft", "binary"):
            raise ValueError("kind must be 'soft' or 'binary', got %r" % (self.kind,))
        if not np.all(np.isfinite(values)):
            raise ValueError("mask values must be finite")
        if values.min() < 0 or values.max() > 1:
            raise ValueError("mask values must lie in [0, 1]")
        if self.kind == "binary" and np.any((values != 0) & (values != 1)):
            raise ValueError("binary mask may contain only 0 and 1")
        object.__setattr__(self, "values", values)

    @property
    def n_frames(self) -> int:
        return self.values.shape[0]

    @property
    def n_bins(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class HarmonicMaskConfig:
    """Harmonic comb geometry: n_partials lobes of width_hz Hz, tapered
    by a Tukey window with the given shape parameter."""

    n_partials: int = 10
    width_hz: float = 50.0
    tukey_shape: float = 0.5

    def __post_init__(self):
        if self.n_partials < 1:
            raise ValueError("n_partials must be >= 1")
        if self.width_hz <= 0:
            raise ValueError("width_hz must be positive")
        if not 0 <= self.tukey_shape <= 1:
            raise ValueError("tukey_shape must lie in [0, 1]")


@dataclass(frozen=True)
class SeparationResult:
    """Separated vocal/accompaniment signals with their magnitude
    spectrograms. vocal_spec + accomp_spec equals the mixture magnitude."""

    vocal: AudioSignal
    accompaniment: AudioSignal
    vocal_spec: MagnitudeSpectrogram
    accomp_spec: MagnitudeSpectrogram


def wiener_mask(result: RpcaResult) -> TimeFrequencyMask:
    """Soft mask |X_S| / (|X_S| + |X_L|), with 0/0 mapped to 0."""
    s = np.abs(result.sparse)
    total = s + np.abs(result.low_rank)
    values = np.divide(s, total, out=np.zeros_like(s), where=total > 0)
    # guard against rounding pushing the ratio epsilon above 1
    return TimeFrequencyMask(values=np.minimum(values, 1.0), kind="soft")


def binary_mask(result: RpcaResult, gamma: float = 1.0) -> TimeFrequencyMask:
    """Binary mask keeping cells where |X_S| > gamma * |X_L|."""
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    values = (np.abs(result.sparse) > gamma * np.abs(result.low_rank)).astype(np.float64)
    return TimeFrequencyMask(values=values, kind="binary")


def _tukey_taper(positions: np.ndarray, shape: float) -> np.ndarray:
    """Tukey (tapered cosine) window evaluated at positions in [0, 1]."""
    out = np.ones_like(positions)
    if shape <= 0:
        return out
    edge = shape / 2.0
    left = positions < edge
    right = positions > 1.0 - edge
    out[left] = 0.5 * (1.0 + np.cos(np.pi * (2.0 * positions[left] / shape - 1.0)))
    out[right] = 0.5 * (
        1.0 + np.cos(np.pi * (2.0 * (1.0 - positions[right]) / shape - 1.0))
    )
    return out


def harmonic_mask(
    contour: F0Contour, mag: MagnitudeSpectrogram, cfg: HarmonicMaskConfig
) -> TimeFrequencyMask:
    """Soft mask with a Tukey lobe over each F0 partial.

    For voiced frame t and partial n = 1..n_partials, bins whose center
    frequency falls inside [n*f0 - width/2, n*f0 + width/2] get the
    Tukey taper value at their position in that interval; overlapping
    lobes combine by elementwise max. Partials above Nyquist are
    skipped; unvoiced frames stay all-zero. A voiced f0 at or beyond
    Nyquist (or <= 0) is an error.
    """
    if contour.n_frames != mag.n_frames:
        raise ValueError(
            "contour has %d frames but spectrogram has %d"
            % (contour.n_frames, mag.n_frames)
        )
    bin_hz = mag.bin_hz
    nyquist = mag.nyquist_hz
    voiced_f0 = contour.f0_hz[contour.voiced]
    if voiced_f0.size and (voiced_f0.min() <= 0 or voiced_f0.max() >= nyquist):
        raise ValueError("voiced f0 values must lie strictly between 0 and Nyquist")

    values = np.zeros((contour.n_frames, bin_hz.size))
    half = cfg.width_hz / 2.0
    for t in np.flatnonzero(contour.voiced):
        f0 = contour.f0_hz[t]
        row = values[t]
        for n in range(1, cfg.n_partials + 1):
            center = n * f0
            if center > nyquist:
                break
            lo = np.searchsorted(bin_hz, center - half, side="left")
            hi = np.searchsorted(bin_hz, center + half, side="right")
            if hi <= lo:
                continue
            positions = (bin_hz[lo:hi] - (center - half)) / cfg.width_hz
            row[lo:hi] = np.maximum(row[lo:hi], _tukey_taper(positions, cfg.tukey_shape))
    return TimeFrequencyMask(values=values, kind="soft")


def integrate_soft(a: TimeFrequencyMask, b: TimeFrequencyMask) -> TimeFrequencyMask:
    """Elementwise product of two masks."""
    if a.values.shape != b.values.shape:
        raise ValueError(
            "mask shapes differ: %s vs %s" % (a.values.shape, b.values.shape)
        )
    return TimeFrequencyMask(values=a.values * b.values, kind="soft")


def integrate_binary(mask: TimeFrequencyMask) -> TimeFrequencyMask:
    """Binarize a mask at the 0.5 level (strictly greater passes)."""
    return TimeFrequencyMask(values=(mask.values > 0.5).astype(np.float64), kind="binary")


def separate(spec: ComplexSpectrogram, mask: TimeFrequencyMask) -> SeparationResult:
    """Split a mixture STFT into vocal and accompaniment signals.

    The vocal magnitude is mask * |X|; the accompaniment magnitude is
    the remainder |X| - vocal. Both resynthesize with the mixture
    phases.
    """
    if mask.values.shape != spec.values.shape:
        raise ValueError(
            "mask shape %s does not match spectrogram %s"
            % (mask.values.shape, spec.values.shape)
        )
    mixture_mag = np.abs(spec.values)
    vocal_mag = mask.values * mixture_mag
    accomp_mag = mixture_mag - vocal_mag
    # re-deriving the vocal part from the rounded remainder makes
    # vocal + accomp == mixture bitwise (one of the two subtractions is
    # always exact by Sterbenz); shifts the vocal by at most one ulp
    vocal_mag = mixture_mag - accomp_mag
    phase = np.exp(1j * np.angle(spec.values))

    def _resynth(mag_values):
        return istft(
            ComplexSpectrogram(
                values=mag_values * phase,
                window_size=spec.window_size,
                hop_size=spec.hop_size,
                sample_rate=spec.sample_rate,
                n_samples=spec.n_samples,
            )
        )

    geometry = dict(
        window_size=spec.window_size,
        hop_size=spec.hop_size,
        sample_rate=spec.sample_rate,
    )
    return SeparationResult(
        vocal=_resynth(vocal_mag),
        accompaniment=_resynth(accomp_mag),
        vocal_spec=MagnitudeSpectrogram(values=vocal_mag, **geometry),
        accomp_spec=MagnitudeSpectrogram(values=accomp_mag, **geometry),
    )


def mask_to_pgm(mask: TimeFrequencyMask, path) -> None:
    """Write a mask as an ASCII PGM image (bins across, frames down)."""
    gray = np.rint(mask.values * 255).astype(int)
    with open(path, "w") as fh:
        fh.write("P2\n%d %d\n255\n" % (mask.n_bins, mask.n_frames))
        for row in gray:
            fh.write(" ".join(str(v) for v in row))
            fh.write("\n")


def mask_to_csv(mask: TimeFrequencyMask, path) -> None:
    """Write a mask as CSV, one frame per row."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in mask.values:
            writer.writerow(["%.8g" % v for v in row])
