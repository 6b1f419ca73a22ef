"""Vocal F0 contour selection over a saliency spectrogram.

The tracker maximizes the summed log of per-frame normalized saliency
plus Laplacian log transition weights on the cents distance between
consecutive bins. Among score-equal paths it returns the one with the
lexicographically smallest bin sequence (ties break toward the lower
bin, earliest frame first), computed with a backward max pass and a
forward greedy pass. Voicing detection is out of scope: every frame of
a tracked contour is voiced.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:  # import would be circular at runtime (saliency -> masks -> here)
    from .saliency import SaliencySpectrogram

__all__ = [
    "F0Contour",
    "TrackerConfig",
    "transition_cost",
    "viterbi",
    "contour_accuracy_prep",
    "write_f0_csv",
    "read_f0_csv",
    "CENTS_REFERENCE_HZ",
    "ALIGNMENT_TICK_SECONDS",
]

# Reference for the informational f0_cents field; comparisons between
# contours always go through f0_hz.
CENTS_REFERENCE_HZ = 30.0

# Contours are compared on a common 10 ms clock.
ALIGNMENT_TICK_SECONDS = 0.01


@dataclass(frozen=True)
class F0Contour:
    """Per-frame fundamental frequency estimates.

    f0_hz is strictly positive at voiced frames and exactly 0 at
    unvoiced ones. f0_cents mirrors f0_hz in cents above
    CENTS_REFERENCE_HZ (0 where unvoiced).
    """

    f0_hz: np.ndarray
    f0_cents: np.ndarray
    voiced: np.ndarray
    hop_seconds: float

    def __post_init__(self):
        f0 = np.asarray(self.f0_hz, dtype=np.float64)
        cents = np.asarray(self.f0_cents, dtype=np.float64)
        voiced = np.asarray(self.voiced, dtype=bool)
        if not (f0.ndim == cents.ndim == voiced.ndim == 1):
            raise ValueError("contour arrays must be 1-d")
        if not (f0.size == cents.size == voiced.size):
            raise ValueError("contour arrays must have equal length")
        if f0.size == 0:
            raise ValueError("contour must have at least one frame")
        if self.hop_seconds <= 0:
            raise ValueError("hop_seconds must be positive")
        if np.any(f0[voiced] <= 0):
            raise ValueError("voiced frames require f0_hz > 0")
        if np.any(f0[~voiced] != 0):
            raise ValueError("unvoiced frames require f0_hz == 0")
        if not np.all(np.isfinite(f0)):
            raise ValueError("f0_hz must be finite")
        object.__setattr__(self, "f0_hz", f0)
        object.__setattr__(self, "f0_cents", cents)
        object.__setattr__(self, "voiced", voiced)

    @property
    def n_frames(self) -> int:
        return self.f0_hz.size

    @property
    def duration_seconds(self) -> float:
        return self.n_frames * self.hop_seconds

    @property
    def times_seconds(self) -> np.ndarray:
        return np.arange(self.n_frames) * self.hop_seconds


def cents_above_reference(f0_hz) -> np.ndarray:
    """Cents above CENTS_REFERENCE_HZ, 0 where f0 is 0 (unvoiced)."""
    f0 = np.asarray(f0_hz, dtype=np.float64)
    out = np.zeros_like(f0)
    pos = f0 > 0
    out[pos] = 1200.0 * np.log2(f0[pos] / CENTS_REFERENCE_HZ)
    return out


def voiced_contour(f0_hz, hop_seconds: float) -> F0Contour:
    """Build a contour from f0 values where 0 marks unvoiced frames."""
    f0 = np.asarray(f0_hz, dtype=np.float64)
    return F0Contour(
        f0_hz=f0,
        f0_cents=cents_above_reference(f0),
        voiced=f0 > 0,
        hop_seconds=hop_seconds,
    )


@dataclass(frozen=True)
class TrackerConfig:
    """Search range and transition model for the contour tracker.

    transition_scale_cents is the Laplacian scale b in
    G(d) = exp(-|d|/b) / (2b); the default makes the standard deviation
    of the frame-to-frame pitch move 150 cents.
    """

    f0_min_hz: float = 80.0
    f0_max_hz: float = 720.0
    transition_scale_cents: float = math.sqrt(150.0**2 / 2.0)
    saliency_floor: float = 1e-12

    def __post_init__(self):
        if not 0 < self.f0_min_hz < self.f0_max_hz:
            raise ValueError("need 0 < f0_min_hz < f0_max_hz")
        if self.transition_scale_cents <= 0:
            raise ValueError("transition_scale_cents must be positive")
        if self.saliency_floor <= 0:
            raise ValueError("saliency_floor must be positive")


def transition_cost(delta_cents, scale_cents: float) -> np.ndarray:
    """Laplacian transition weight G(d) = exp(-|d|/b) / (2b)."""
    if scale_cents <= 0:
        raise ValueError("scale_cents must be positive")
    d = np.abs(np.asarray(delta_cents, dtype=np.float64))
    return np.exp(-d / scale_cents) / (2.0 * scale_cents)


def _emissions(values, floor):
    shifted = values + floor
    return np.log(shifted) - np.log(shifted.sum(axis=1, keepdims=True))


def viterbi(s: SaliencySpectrogram, cfg: TrackerConfig = TrackerConfig()) -> F0Contour:
    """Pick the best contour through a saliency spectrogram.

    Only grid bins whose center lies in [f0_min_hz, f0_max_hz] are
    candidates. Per-frame emissions are log((S+floor)/sum(S+floor)) with
    the sum over the candidate bins, so scaling the saliency by any
    positive constant leaves the path unchanged apart from the floor.

    Returns
    -------
    F0Contour
        One voiced estimate per frame.
    """
    centers = s.grid.centers_hz
    candidates = np.flatnonzero(
        (centers >= cfg.f0_min_hz) & (centers <= cfg.f0_max_hz)
    )
    if candidates.size == 0:
        raise ValueError(
            "no grid bins between %g and %g Hz" % (cfg.f0_min_hz, cfg.f0_max_hz)
        )
    lo = int(candidates[0])
    n_bins = int(candidates[-1]) - lo + 1
    em = _emissions(s.values[:, lo : lo + n_bins], cfg.saliency_floor)
    n_frames = em.shape[0]

    offsets = np.arange(n_bins, dtype=np.float64)
    dist_cents = np.abs(offsets[:, None] - offsets[None, :]) * s.grid.cents_per_bin
    b = cfg.transition_scale_cents
    log_g = -math.log(2.0 * b) - dist_cents / b

    # best[t, j]: best achievable score over frames t..T-1 starting at j
    best = np.empty_like(em)
    best[-1] = em[-1]
    for t in range(n_frames - 2, -1, -1):
        best[t] = em[t] + np.max(log_g + best[t + 1][None, :], axis=1)

    path = np.empty(n_frames, dtype=np.intp)
    path[0] = np.argmax(best[0])
    for t in range(1, n_frames):
        path[t] = np.argmax(log_g[path[t - 1]] + best[t])

    bins = path + lo
    f0 = centers[bins]
    return F0Contour(
        f0_hz=f0,
        f0_cents=cents_above_reference(f0),
        voiced=np.ones(n_frames, dtype=bool),
        hop_seconds=s.hop_seconds,
    )


def contour_accuracy_prep(estimate: F0Contour, truth: F0Contour):
    """Align two contours on a 10 ms clock by nearest frame.

    One tick per ground-truth frame interval; ticks whose nearest truth
    frame is unvoiced are dropped.

    Returns
    -------
    (est_hz, truth_hz) : np.ndarray pair
        Matched f0 values at the voiced ticks.
    """
    n_ticks = max(int(round(truth.duration_seconds / ALIGNMENT_TICK_SECONDS)), 1)
    times = np.arange(n_ticks) * ALIGNMENT_TICK_SECONDS

    def nearest(contour):
        idx = np.rint(times / contour.hop_seconds).astype(np.intp)
        return np.minimum(idx, contour.n_frames - 1)

    truth_idx = nearest(truth)
    est_idx = nearest(estimate)
    keep = truth.voiced[truth_idx]
    return estimate.f0_hz[est_idx[keep]], truth.f0_hz[truth_idx[keep]]


def write_f0_csv(contour: F0Contour, path) -> None:
    """Write a contour as ``time_seconds,f0_hz`` rows (0 = unvoiced)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time_seconds", "f0_hz"])
        for t, f0 in zip(contour.times_seconds, contour.f0_hz):
            writer.writerow(["%.6f" % t, "%.6f" % f0])


def read_f0_csv(path) -> F0Contour:
    """Read a ``time_seconds,f0_hz`` file; 0 (or negative) f0 = unvoiced.

    The frame hop is inferred from the median time step; single-row
    files fall back to the 10 ms alignment tick.
    """
    times = []
    f0s = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or not row[0].strip():
                continue
            try:
                t = float(row[0])
            except ValueError:
                continue  # header
            if len(row) < 2:
                raise ValueError("%s: expected time_seconds,f0_hz rows" % (path,))
            times.append(t)
            f0s.append(float(row[1]))
    if not times:
        raise ValueError("%s contains no contour rows" % (path,))
    times = np.asarray(times)
    f0 = np.maximum(np.asarray(f0s), 0.0)
    if times.size > 1:
        hop = float(np.median(np.diff(times)))
        if hop <= 0:
            raise ValueError("%s: time column must be increasing" % (path,))
    else:
        hop = ALIGNMENT_TICK_SECONDS
    return voiced_contour(f0, hop)
