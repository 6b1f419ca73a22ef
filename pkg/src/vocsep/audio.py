"""Mono audio container and WAV file I/O.

Only the two WAV sample formats that actually occur in the supported
corpora are accepted: 16-bit integer PCM and 32-bit IEEE float.
Everything is normalized to float64 in [-1, 1] on ingestion.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.io import wavfile

__all__ = ["AudioSignal", "read_wav", "write_wav"]

PCM16_SCALE = 32768.0


@dataclass(frozen=True)
class AudioSignal:
    """A mono audio signal.

    Attributes
    ----------
    samples : np.ndarray
        1-d float64 array of sample values.
    sample_rate : int
        Sampling rate in Hz.
    """

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValueError(
                "AudioSignal requires a 1-d sample array, got shape %s"
                % (samples.shape,)
            )
        if samples.size == 0:
            raise ValueError("AudioSignal requires at least one sample")
        if not np.all(np.isfinite(samples)):
            raise ValueError("AudioSignal samples must be finite")
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive, got %r" % (self.sample_rate,))
        object.__setattr__(self, "samples", samples)

    @property
    def duration_seconds(self) -> float:
        return self.samples.size / self.sample_rate


def read_wav(path, mixdown: bool = False) -> AudioSignal:
    """Read a WAV file into an AudioSignal.

    Parameters
    ----------
    path : str or Path
        File to read. Must be 16-bit PCM or 32-bit float.
    mixdown : bool
        If True, average the channels of a multichannel file down to
        mono. If False (default), a multichannel file is an error.

    Returns
    -------
    AudioSignal
    """
    sample_rate, data = wavfile.read(path)
    if data.dtype == np.int16:
        samples = data.astype(np.float64) / PCM16_SCALE
    elif data.dtype == np.float32:
        samples = data.astype(np.float64)
    else:
        raise ValueError(
            "unsupported WAV sample format %s in %s; expected int16 PCM or "
            "float32" % (data.dtype, path)
        )
    if samples.ndim == 2:
        if samples.shape[1] == 1:
            samples = samples[:, 0]
        elif mixdown:
            samples = samples.mean(axis=1)
        else:
            raise ValueError(
                "%s has %d channels; pass mixdown=True (CLI: --mixdown) to "
                "average them" % (path, samples.shape[1])
            )
    elif samples.ndim != 1:
        raise ValueError("unsupported WAV layout with shape %s" % (samples.shape,))
    return AudioSignal(samples=samples, sample_rate=int(sample_rate))


def write_wav(path, signal: AudioSignal) -> None:
    """Write an AudioSignal to a 32-bit float WAV file."""
    wavfile.write(path, signal.sample_rate, signal.samples.astype(np.float32))
