"""Pitch saliency: subharmonic summation and comb-structure enhancement.

Subharmonic summation folds each harmonic's energy down to its
fundamental on the log-frequency axis by shifted, geometrically decayed
sums. The enhancement term measures how comb-like each frame of the
binary vocal mask is: the magnitude DFT of the mask row peaks at lags
matching the harmonic spacing, and sampling it at lag floor(h_top/h_c)
scores grid bin c. Raising the enhancement to an exponent alpha and
multiplying into the summation sharpens true-F0 peaks.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass

import numpy as np

from .masks import TimeFrequencyMask
from .spectrogram import LogFrequencyGrid, LogSpectrogram

logger = logging.getLogger(__name__)

__all__ = ["SaliencySpectrogram", "ShsConfig", "shs", "f0_enhancement", "combine", "saliency_to_csv"]


@dataclass(frozen=True)
class SaliencySpectrogram:
    """Nonnegative (frames, grid bins) saliency values."""

    values: np.ndarray
    grid: LogFrequencyGrid
    hop_seconds: float

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2 or values.shape[1] != self.grid.n_bins:
            raise ValueError(
                "values must have shape (frames, grid.n_bins), got %s" % (values.shape,)
            )
        if values.size and not np.all(np.isfinite(values)):
            raise ValueError("saliency values must be finite")
        if values.size and values.min() < 0:
            raise ValueError("saliency values must be nonnegative")
        object.__setattr__(self, "values", values)

    @property
    def n_frames(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class ShsConfig:
    """Subharmonic summation: n_partials terms weighted decay**(n-1)."""

    n_partials: int = 10
    decay: float = 0.86

    def __post_init__(self):
        if self.n_partials < 1:
            raise ValueError("n_partials must be >= 1")
        if not 0 < self.decay <= 1:
            raise ValueError("decay must lie in (0, 1]")


def shs(logspec: LogSpectrogram, cfg: ShsConfig = ShsConfig()) -> SaliencySpectrogram:
    """Subharmonic summation over a log-frequency dB spectrogram.

    Input dB values are clamped below at 0 before summing, so silence
    (at the -200 dB floor) contributes nothing. The n-th partial of bin
    c sits floor(1200*log2(n)/cents_per_bin) bins above c; shifts past
    the top of the grid are dropped.
    """
    clamped = np.maximum(logspec.values, 0.0)
    n_bins = clamped.shape[1]
    out = np.zeros_like(clamped)
    for n in range(1, cfg.n_partials + 1):
        shift = int(np.floor(1200.0 * np.log2(n) / logspec.grid.cents_per_bin))
        if shift >= n_bins:
            break
        out[:, : n_bins - shift] += cfg.decay ** (n - 1) * clamped[:, shift:]
    return SaliencySpectrogram(
        values=out, grid=logspec.grid, hop_seconds=logspec.hop_seconds
    )


def f0_enhancement(
    mask: TimeFrequencyMask,
    grid: LogFrequencyGrid,
    h_top_hz: float,
    hop_seconds: float,
) -> SaliencySpectrogram:
    """Comb-structure saliency from a binary vocal mask.

    Each frame's mask row (length F) is DFT'd; grid bin c with center
    h_c samples the magnitude at lag k = floor(h_top / h_c). Lags past
    F-1 (possible when the grid reaches far below h_top/F) clamp to F-1
    with a logged diagnostic.
    """
    if mask.kind != "binary":
        raise ValueError("f0_enhancement requires a binary mask, got %r" % (mask.kind,))
    if h_top_hz <= 0:
        raise ValueError("h_top_hz must be positive")
    if hop_seconds <= 0:
        raise ValueError("hop_seconds must be positive")
    spectra = np.abs(np.fft.fft(mask.values, axis=1))
    n_bins = mask.n_bins
    lags = np.floor(h_top_hz / grid.centers_hz).astype(np.intp)
    clamped = int(np.count_nonzero(lags > n_bins - 1))
    if clamped:
        logger.warning(
            "f0_enhancement: %d grid bins map past DFT lag %d and were clamped",
            clamped, n_bins - 1,
        )
        lags = np.minimum(lags, n_bins - 1)
    return SaliencySpectrogram(
        values=spectra[:, lags], grid=grid, hop_seconds=hop_seconds
    )


def combine(
    summation: SaliencySpectrogram, enhancement: SaliencySpectrogram, alpha: float
) -> SaliencySpectrogram:
    """Blend: summation * enhancement**alpha (with 0**0 == 1, so
    alpha = 0 returns the summation untouched)."""
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    if summation.values.shape != enhancement.values.shape:
        raise ValueError(
            "saliency shapes differ: %s vs %s"
            % (summation.values.shape, enhancement.values.shape)
        )
    if summation.grid != enhancement.grid:
        raise ValueError("saliency grids differ")
    values = summation.values * np.power(enhancement.values, alpha)
    return SaliencySpectrogram(
        values=values, grid=summation.grid, hop_seconds=summation.hop_seconds
    )


def saliency_to_csv(s: SaliencySpectrogram, path) -> None:
    """Write saliency values as CSV, one frame per row."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["%.6f" % hz for hz in s.grid.centers_hz])
        for row in s.values:
            writer.writerow(["%.8g" % v for v in row])
