"""Time-frequency analysis: STFT/ISTFT, A-weighting, log-frequency axis.

The STFT uses a periodic Hann window and centered frames (reflect
padding of half a window on both ends), so frame t is centered on
sample t*hop_size. The inverse applies weighted overlap-add with the
same window and divides by the accumulated squared window, which makes
istft(stft(x)) exact to rounding error for any hop <= window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.signal import get_window

from .audio import AudioSignal

__all__ = [
    "ComplexSpectrogram",
    "MagnitudeSpectrogram",
    "LogFrequencyGrid",
    "LogSpectrogram",
    "stft",
    "istft",
    "magnitude",
    "a_weight_at",
    "apply_a_weighting",
    "to_log_frequency",
]

# Amplitude floor applied before dB conversion: 20*log10(1e-10) = -200 dB.
DB_FLOOR_AMPLITUDE = 1e-10
DB_FLOOR = -200.0


def _validate_geometry(window_size: int, hop_size: int) -> None:
    if window_size < 64 or (window_size & (window_size - 1)) != 0:
        raise ValueError(
            "window_size must be a power of two >= 64, got %r" % (window_size,)
        )
    if not 0 < hop_size <= window_size:
        raise ValueError(
            "hop_size must satisfy 0 < hop_size <= window_size, got %r" % (hop_size,)
        )


@dataclass(frozen=True)
class ComplexSpectrogram:
    """STFT of a signal, frames on the first axis.

    values has shape (frames, window_size // 2 + 1). n_samples records
    the analyzed signal length so istft can trim the centered padding.
    """

    values: np.ndarray
    window_size: int
    hop_size: int
    sample_rate: int
    n_samples: int

    def __post_init__(self):
        _validate_geometry(self.window_size, self.hop_size)
        values = np.asarray(self.values)
        if values.ndim != 2 or values.shape[1] != self.window_size // 2 + 1:
            raise ValueError(
                "values must have shape (frames, window_size//2+1), got %s"
                % (values.shape,)
            )
        object.__setattr__(self, "values", values)

    @property
    def n_frames(self) -> int:
        return self.values.shape[0]

    @property
    def n_bins(self) -> int:
        return self.values.shape[1]

    @property
    def hop_seconds(self) -> float:
        return self.hop_size / self.sample_rate

    @property
    def bin_hz(self) -> np.ndarray:
        """Center frequency of each bin in Hz."""
        return np.arange(self.n_bins) * (self.sample_rate / self.window_size)


@dataclass(frozen=True)
class MagnitudeSpectrogram:
    """Nonnegative magnitudes with the geometry of the source STFT."""

    values: np.ndarray
    window_size: int
    hop_size: int
    sample_rate: int

    def __post_init__(self):
        _validate_geometry(self.window_size, self.hop_size)
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2 or values.shape[1] != self.window_size // 2 + 1:
            raise ValueError(
                "values must have shape (frames, window_size//2+1), got %s"
                % (values.shape,)
            )
        if values.size and values.min() < 0:
            raise ValueError("magnitudes must be nonnegative")
        object.__setattr__(self, "values", values)

    @property
    def n_frames(self) -> int:
        return self.values.shape[0]

    @property
    def n_bins(self) -> int:
        return self.values.shape[1]

    @property
    def hop_seconds(self) -> float:
        return self.hop_size / self.sample_rate

    @property
    def bin_hz(self) -> np.ndarray:
        return np.arange(self.n_bins) * (self.sample_rate / self.window_size)

    @property
    def nyquist_hz(self) -> float:
        return self.sample_rate / 2.0


@dataclass(frozen=True)
class LogFrequencyGrid:
    """Log-spaced frequency axis: bin c (1-based) is centered on
    h_low * 2**((c - 1) * cents_per_bin / 1200).
    """

    h_low_hz: float = 30.0
    cents_per_bin: float = 10.0
    n_bins: int = 0

    def __post_init__(self):
        if self.h_low_hz <= 0:
            raise ValueError("h_low_hz must be positive")
        if self.cents_per_bin <= 0:
            raise ValueError("cents_per_bin must be positive")
        if self.n_bins < 1:
            raise ValueError("n_bins must be >= 1")

    @classmethod
    def for_nyquist(
        cls, nyquist_hz: float, h_low_hz: float = 30.0, cents_per_bin: float = 10.0
    ) -> "LogFrequencyGrid":
        """Largest grid whose top bin center stays at or below nyquist_hz."""
        if nyquist_hz <= h_low_hz:
            raise ValueError(
                "nyquist_hz (%r) must exceed h_low_hz (%r)" % (nyquist_hz, h_low_hz)
            )
        n = int(math.floor(1200.0 * math.log2(nyquist_hz / h_low_hz) / cents_per_bin)) + 1
        return cls(h_low_hz=h_low_hz, cents_per_bin=cents_per_bin, n_bins=n)

    @property
    def centers_hz(self) -> np.ndarray:
        """Center frequencies, index 0 holding bin number 1."""
        c = np.arange(self.n_bins, dtype=np.float64)
        return self.h_low_hz * 2.0 ** (c * self.cents_per_bin / 1200.0)

    def bin_number(self, hz: float) -> int:
        """1-based bin number containing frequency hz.

        Computed as floor(1200*log2(hz/h_low)/cents_per_bin + 1).
        Queries below h_low_hz are rejected.
        """
        if hz < self.h_low_hz:
            raise ValueError(
                "frequency %r Hz is below the grid origin %r Hz" % (hz, self.h_low_hz)
            )
        return int(
            math.floor(1200.0 * math.log2(hz / self.h_low_hz) / self.cents_per_bin + 1.0)
        )

    def cents_of_bin(self, bin_number: int) -> float:
        """Cents above h_low of a 1-based bin number."""
        return (bin_number - 1) * self.cents_per_bin


@dataclass(frozen=True)
class LogSpectrogram:
    """dB magnitudes resampled onto a LogFrequencyGrid, (frames, grid bins)."""

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
            raise ValueError("log spectrogram values must be finite")
        object.__setattr__(self, "values", values)

    @property
    def n_frames(self) -> int:
        return self.values.shape[0]


def stft(
    signal: AudioSignal, window_size: int, hop_size: int
) -> ComplexSpectrogram:
    """Short-time Fourier transform with centered Hann frames.

    Parameters
    ----------
    signal : AudioSignal
    window_size : int
        Power of two, >= 64. The signal must be at least one window long.
    hop_size : int
        Frame advance in samples, 0 < hop_size <= window_size.

    Returns
    -------
    ComplexSpectrogram
        1 + len(signal)//hop_size frames of window_size//2 + 1 bins.
    """
    _validate_geometry(window_size, hop_size)
    x = signal.samples
    if x.size < window_size:
        raise ValueError(
            "signal of %d samples is shorter than one %d-sample window"
            % (x.size, window_size)
        )
    pad = window_size // 2
    padded = np.pad(x, pad, mode="reflect")
    n_frames = 1 + x.size // hop_size
    window = get_window("hann", window_size, fftbins=True)
    frames = np.empty((n_frames, window_size), dtype=np.float64)
    for t in range(n_frames):
        start = t * hop_size
        frames[t] = padded[start : start + window_size]
    values = np.fft.rfft(frames * window, axis=1)
    return ComplexSpectrogram(
        values=values,
        window_size=window_size,
        hop_size=hop_size,
        sample_rate=signal.sample_rate,
        n_samples=x.size,
    )


def istft(spec: ComplexSpectrogram) -> AudioSignal:
    """Invert a ComplexSpectrogram by weighted overlap-add.

    Uses the analysis Hann window for synthesis and normalizes by the
    accumulated squared window, then trims the centered padding.
    """
    window_size = spec.window_size
    hop = spec.hop_size
    pad = window_size // 2
    n_padded = pad + spec.n_samples + pad
    window = get_window("hann", window_size, fftbins=True)
    frames = np.fft.irfft(spec.values, n=window_size, axis=1)
    total = max(n_padded, (spec.n_frames - 1) * hop + window_size)
    acc = np.zeros(total)
    wsum = np.zeros(total)
    for t in range(spec.n_frames):
        start = t * hop
        acc[start : start + window_size] += frames[t] * window
        wsum[start : start + window_size] += window * window
    out = acc[pad : pad + spec.n_samples]
    norm = wsum[pad : pad + spec.n_samples]
    if norm.min() <= 0:
        raise ValueError(
            "overlap-add window sum vanished; hop %d too large for window %d"
            % (hop, window_size)
        )
    out = out / norm
    return AudioSignal(samples=out, sample_rate=spec.sample_rate)


def magnitude(spec: ComplexSpectrogram) -> MagnitudeSpectrogram:
    """Elementwise complex magnitude of an STFT."""
    return MagnitudeSpectrogram(
        values=np.abs(spec.values),
        window_size=spec.window_size,
        hop_size=spec.hop_size,
        sample_rate=spec.sample_rate,
    )


def a_weight_at(freq_hz) -> np.ndarray:
    """A-weighting response on a linear amplitude scale.

    R(h) = 12200^2 h^4 / ((h^2+20.6^2)(h^2+12200^2))
           / sqrt((h^2+107.7^2)(h^2+737.9^2))

    Zero at DC, ~0.794 at 1 kHz, peaking a little above unity near 2.5 kHz.
    """
    h = np.asarray(freq_hz, dtype=np.float64)
    if np.any(h < 0):
        raise ValueError("frequencies must be nonnegative")
    h2 = h * h
    num = (12200.0**2) * h2 * h2
    den = (h2 + 20.6**2) * (h2 + 12200.0**2)
    den2 = np.sqrt((h2 + 107.7**2) * (h2 + 737.9**2))
    return num / (den * den2)


def apply_a_weighting(mag: MagnitudeSpectrogram) -> MagnitudeSpectrogram:
    """Scale each frequency bin by the A-weighting response at its center."""
    weights = a_weight_at(mag.bin_hz)
    return MagnitudeSpectrogram(
        values=mag.values * weights[np.newaxis, :],
        window_size=mag.window_size,
        hop_size=mag.hop_size,
        sample_rate=mag.sample_rate,
    )


def to_log_frequency(
    mag: MagnitudeSpectrogram, grid: LogFrequencyGrid
) -> LogSpectrogram:
    """Resample a magnitude spectrogram onto a log-frequency grid in dB.

    Magnitudes are floored at 1e-10 (-200 dB), converted to dB, and
    interpolated across frequency with a natural cubic spline evaluated
    at the grid centers. The grid must not extend past Nyquist.
    """
    centers = grid.centers_hz
    if centers[-1] > mag.nyquist_hz * (1 + 1e-12):
        raise ValueError(
            "grid extends to %.2f Hz, beyond Nyquist %.2f Hz"
            % (centers[-1], mag.nyquist_hz)
        )
    db = 20.0 * np.log10(np.maximum(mag.values, DB_FLOOR_AMPLITUDE))
    spline = CubicSpline(mag.bin_hz, db, axis=1, bc_type="natural")
    values = np.maximum(spline(centers), DB_FLOOR)
    return LogSpectrogram(values=values, grid=grid, hop_seconds=mag.hop_seconds)
