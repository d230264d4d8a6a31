"""Dual-threshold pseudo-labeling and sliding-window majority smoothing.

A frame is pseudo-labeled only when the model is confident: spoof above
``1 - margin``, live below ``margin``, everything in between discarded.
Stored labels are then smoothed by a hard majority vote over a centered
window of the entries actually present in the buffer: discarded and
evicted frames leave holes and simply do not vote, so the denominator is
the number of stored entries in the window, not the nominal window width.
Smoothing always recomputes from the raw stored labels, never from its own
prior output, so repeated passes cannot drift.
"""

from __future__ import annotations

import numpy as np

from .config import PseudoLabel


def assign_pseudo_label(y: float, margin: float) -> PseudoLabel:
    """Three-way confidence rule.

    Spoof if y > 1 - margin, live if y < margin, discard otherwise.
    At margin = 0.5 the band is empty and the rule degenerates to the
    single-threshold form "spoof iff y strictly exceeds 0.5", so an exact
    tie at 0.5 resolves to live.
    """
    if y > 1.0 - margin:
        return PseudoLabel.SPOOF
    if y < margin:
        return PseudoLabel.LIVE
    if margin == 0.5:
        return PseudoLabel.LIVE
    return PseudoLabel.DISCARD


def smooth_labels(frame_indices, labels, window: int) -> np.ndarray:
    """Majority-vote each stored label over the window
    [t - window/2, t + window/2] of stored neighbours.

    ``frame_indices`` must be strictly increasing; ``labels`` are the raw
    0/1 stored labels. Returns the smoothed 0/1 labels: spoof (1) iff the
    mean of stored labels in the window strictly exceeds 0.5, so an exact
    tie resolves to live. Windows truncate at the buffer edges; entries
    missing from storage contribute nothing to either side of the mean.
    """
    idx = np.asarray(frame_indices, dtype=np.float64)
    lab = np.asarray(labels, dtype=np.float64)
    if idx.shape != lab.shape:
        raise ValueError("frame_indices and labels disagree in length")
    if idx.size == 0:
        return np.zeros(0, dtype=np.int64)
    if np.any(np.diff(idx) <= 0):
        raise ValueError("frame indices must be strictly increasing")

    half = window / 2.0
    lo = np.searchsorted(idx, idx - half, side="left")
    hi = np.searchsorted(idx, idx + half, side="right")
    csum = np.concatenate(([0.0], np.cumsum(lab)))
    mean = (csum[hi] - csum[lo]) / (hi - lo)
    return np.where(mean > 0.5, 1, 0).astype(np.int64)
