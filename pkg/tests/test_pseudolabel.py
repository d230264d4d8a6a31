"""Dual-threshold labeling truth table and majority-smoothing oracle.

The smoothing oracle is a naive O(n*W) recount over the stored entries in
each centered window, written independently of the production path.
"""

import numpy as np
import pytest

from oap.config import PseudoLabel
from oap.pseudolabel import assign_pseudo_label, smooth_labels


def brute_force_smooth(frame_indices, labels, window):
    """Naive windowed majority recount: for each stored entry, average the
    stored 0/1 labels with frame index in [t - W/2, t + W/2]; spoof iff
    strictly above one half. One explicit membership test per entry, no
    shared prefix sums with the production path."""
    idx = np.asarray(frame_indices, dtype=float)
    lab = np.asarray(labels, dtype=float)
    out = []
    half = window / 2.0
    for t in idx:
        in_window = (idx >= t - half) & (idx <= t + half)
        out.append(1 if lab[in_window].mean() > 0.5 else 0)
    return np.array(out)


class TestAssign:
    def test_confident_spoof(self):
        assert assign_pseudo_label(0.995, 0.01) == PseudoLabel.SPOOF

    def test_uncertain_discarded(self):
        assert assign_pseudo_label(0.5, 0.01) == PseudoLabel.DISCARD

    def test_confident_live(self):
        assert assign_pseudo_label(0.004, 0.01) == PseudoLabel.LIVE

    def test_degenerate_margin_admits_everything(self):
        """margin = 0.5 collapses to single-threshold labeling: no discard
        band, ties at exactly 0.5 resolve to live."""
        assert assign_pseudo_label(0.7, 0.5) == PseudoLabel.SPOOF
        assert assign_pseudo_label(0.3, 0.5) == PseudoLabel.LIVE
        assert assign_pseudo_label(0.5, 0.5) == PseudoLabel.LIVE

    def test_monotone_in_y(self):
        """Raising y never moves the label from spoof toward live."""
        order = {PseudoLabel.LIVE: 0, PseudoLabel.DISCARD: 1, PseudoLabel.SPOOF: 2}
        for margin in (0.01, 0.1, 0.3, 0.5):
            ys = np.linspace(0.001, 0.999, 500)
            ranks = [order[assign_pseudo_label(y, margin)] for y in ys]
            assert all(a <= b for a, b in zip(ranks, ranks[1:]))

    def test_discard_band_width(self):
        """The discard band is (margin, 1 - margin): width 1 - 2*margin,
        empty exactly when margin = 0.5."""
        for margin in (0.01, 0.05, 0.1, 0.2):
            lo, hi = margin, 1.0 - margin
            assert hi - lo == pytest.approx(1.0 - 2.0 * margin)
            mid = (lo + hi) / 2.0
            assert assign_pseudo_label(mid, margin) == PseudoLabel.DISCARD
        ys = np.linspace(0.001, 0.999, 999)
        assert all(assign_pseudo_label(y, 0.5) != PseudoLabel.DISCARD for y in ys)


class TestSmoothing:
    def test_unanimous_window_unchanged(self):
        idx = np.arange(31)
        labels = np.ones(31, dtype=int)
        np.testing.assert_array_equal(smooth_labels(idx, labels, 30), labels)

    def test_idempotent_on_unanimous(self):
        idx = np.arange(40)
        labels = np.zeros(40, dtype=int)
        once = smooth_labels(idx, labels, 30)
        twice = smooth_labels(idx, once, 30)
        np.testing.assert_array_equal(once, twice)

    def test_majority_sixteen_vs_fifteen(self):
        """Center entry of a 31-frame window with 16 spoof votes flips to
        spoof, verified against the brute-force recount."""
        idx = np.arange(31)
        labels = np.array([1, 0] * 15 + [1])  # 16 spoof, 15 live, interleaved
        expected = brute_force_smooth(idx, labels, 30)
        got = smooth_labels(idx, labels, 30)
        np.testing.assert_array_equal(got, expected)
        assert got[15] == 1

    def test_gapped_entries_vote_over_stored_only(self):
        """Holes from discarded/evicted frames shrink the denominator."""
        idx = np.array([10, 12, 14])
        labels = np.array([1, 1, 0])
        got = smooth_labels(idx, labels, 30)
        np.testing.assert_array_equal(got, [1, 1, 1])  # mean 2/3 everywhere

    def test_exact_tie_resolves_live(self):
        idx = np.arange(30)
        labels = np.array([1] * 15 + [0] * 15)
        got = smooth_labels(idx, labels, 60)  # every window covers all 30
        np.testing.assert_array_equal(got, np.zeros(30, dtype=int))

    def test_window_zero_is_identity(self):
        idx = np.array([3, 7, 9])
        labels = np.array([1, 0, 1])
        np.testing.assert_array_equal(smooth_labels(idx, labels, 0), labels)

    def test_matches_brute_force_on_random_gapped_sequences(self):
        """1,000 random sequences with random gaps, lengths <= 300."""
        rng = np.random.default_rng(77)
        for _ in range(1000):
            n = int(rng.integers(1, 301))
            gaps = rng.integers(1, 5, size=n)
            idx = np.cumsum(gaps)
            labels = rng.integers(0, 2, size=n)
            window = int(rng.integers(0, 25)) * 2
            np.testing.assert_array_equal(
                smooth_labels(idx, labels, window),
                brute_force_smooth(idx, labels, window),
            )

    def test_rejects_non_increasing_indices(self):
        with pytest.raises(ValueError, match="increasing"):
            smooth_labels([3, 3], [0, 1], 10)
