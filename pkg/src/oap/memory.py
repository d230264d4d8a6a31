"""The two sample stores behind online fine-tuning.

OnlineBuffer is the evolving, time-windowed store of pseudo-labeled
features from the current stream; ReplayStore is a frozen, stratified
subset of the pre-training data that regularizes fine-tuning against
forgetting. ``sample_batch`` mixes them: each batch slot independently
picks a source (online with probability ``online_prob``), then a class
uniformly among the classes present in that source, then an entry
uniformly within the class, with replacement. An empty source redirects
its slots to the other store, which keeps fine-tuning alive during cold
start when the online buffer is still empty.
"""

from __future__ import annotations

import hashlib
from pathlib import Path

import numpy as np

from .config import ClassLabel, PseudoLabel
from .errors import DataError
from .pseudolabel import smooth_labels


class OnlineBuffer:
    """Ordered store of (feature, raw pseudo-label, smoothed working label,
    frame_index, wall time). Single writer; discard labels never enter;
    frame indices strictly increase."""

    def __init__(self) -> None:
        self._features: list[np.ndarray] = []
        self._raw_labels: list[int] = []
        self._working_labels: list[int] = []
        self._frame_indices: list[int] = []
        self._times: list[float] = []

    def __len__(self) -> int:
        return len(self._features)

    @property
    def frame_indices(self) -> np.ndarray:
        return np.asarray(self._frame_indices, dtype=np.int64)

    @property
    def raw_labels(self) -> np.ndarray:
        return np.asarray(self._raw_labels, dtype=np.int64)

    @property
    def working_labels(self) -> np.ndarray:
        return np.asarray(self._working_labels, dtype=np.int64)

    @property
    def times(self) -> np.ndarray:
        return np.asarray(self._times, dtype=np.float64)

    def features_matrix(self) -> np.ndarray:
        if not self._features:
            return np.zeros((0, 0))
        return np.stack(self._features)

    def insert(self, feature, pseudo_label: PseudoLabel, frame_index: int, time: float) -> None:
        """Append an accepted entry. The working label starts equal to the
        raw label until the next smoothing pass."""
        if pseudo_label == PseudoLabel.DISCARD:
            raise DataError("discard labels are never inserted into the online buffer")
        if self._frame_indices and frame_index <= self._frame_indices[-1]:
            raise DataError(
                f"out-of-order insert: frame {frame_index} after {self._frame_indices[-1]}"
            )
        self._features.append(np.asarray(feature, dtype=np.float64).copy())
        self._raw_labels.append(int(pseudo_label))
        self._working_labels.append(int(pseudo_label))
        self._frame_indices.append(int(frame_index))
        self._times.append(float(time))

    def evict_old(self, now: float, horizon: float) -> None:
        """Keep exactly the entries with (now - entry.time) < horizon;
        survivors keep their order. The comparison absorbs float round-off
        in the age subtraction (a few ulp), so an entry whose exact age
        equals the horizon is reliably evicted."""
        cutoff = horizon - horizon * 1e-12
        keep = [i for i, t in enumerate(self._times) if now - t < cutoff]
        if len(keep) == len(self._times):
            return
        self._features = [self._features[i] for i in keep]
        self._raw_labels = [self._raw_labels[i] for i in keep]
        self._working_labels = [self._working_labels[i] for i in keep]
        self._frame_indices = [self._frame_indices[i] for i in keep]
        self._times = [self._times[i] for i in keep]

    def refresh_working_labels(self, window: int) -> None:
        """Recompute all working labels from the raw stored labels via
        majority smoothing. Raw labels are left untouched so smoothing
        never compounds on its own output."""
        if not self._features:
            return
        smoothed = smooth_labels(self._frame_indices, self._raw_labels, window)
        self._working_labels = [int(v) for v in smoothed]


class ReplayStore:
    """Immutable labeled feature store. Arrays are write-protected after
    construction; ``fingerprint()`` hashes content for bit-identity
    checks across a run."""

    def __init__(self, features, labels) -> None:
        features = np.array(features, dtype=np.float64)
        labels = np.array(labels, dtype=np.int64).ravel()
        if features.ndim != 2:
            raise DataError("replay features must be a 2-d array")
        if features.shape[0] != labels.shape[0]:
            raise DataError("replay features and labels disagree in length")
        if features.size and not np.isfinite(features).all():
            raise DataError("non-finite value in replay features")
        if labels.size and not np.isin(labels, (0, 1)).all():
            raise DataError("replay labels must be 0 or 1")
        features.setflags(write=False)
        labels.setflags(write=False)
        self._features = features
        self._labels = labels
        self._class_indices = tuple(
            np.flatnonzero(labels == c) for c in (ClassLabel.LIVE, ClassLabel.SPOOF)
        )

    def __len__(self) -> int:
        return self._features.shape[0]

    @property
    def d(self) -> int:
        return self._features.shape[1]

    @property
    def features(self) -> np.ndarray:
        return self._features

    @property
    def labels(self) -> np.ndarray:
        return self._labels

    def class_indices(self, label: int) -> np.ndarray:
        return self._class_indices[int(label)]

    def fingerprint(self) -> str:
        digest = hashlib.sha256()
        digest.update(np.ascontiguousarray(self._features).tobytes())
        digest.update(np.ascontiguousarray(self._labels).tobytes())
        return digest.hexdigest()

    def save(self, path: str | Path, frame_rate: float = 30.0) -> None:
        from . import simstream

        n = len(self)
        simstream.save_feature_file(
            path,
            self._features,
            frame_indices=np.arange(1, n + 1),
            times=np.arange(n, dtype=np.float64) / frame_rate,
            labels=self._labels,
            frame_rate=frame_rate,
        )

    @classmethod
    def load(cls, path: str | Path) -> "ReplayStore":
        from . import simstream

        data = simstream.load_feature_file(path)
        if data.labels is None:
            raise DataError(f"{path}: replay store file must carry labels")
        return cls(data.features, data.labels)


def subsample_pretraining(features, labels, target_size: int, rng) -> ReplayStore:
    """Uniform subset without replacement, stratified so both classes are
    represented whenever the source has them and target_size >= 2. Class
    counts are allocated proportionally to the source composition."""
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64).ravel()
    n = features.shape[0]
    if target_size > n:
        raise DataError(f"cannot subsample {target_size} from {n} entries")
    if target_size == 0:
        return ReplayStore(np.zeros((0, features.shape[1])), np.zeros(0, dtype=np.int64))

    live_idx = np.flatnonzero(labels == ClassLabel.LIVE)
    spoof_idx = np.flatnonzero(labels == ClassLabel.SPOOF)
    if len(live_idx) == 0 or len(spoof_idx) == 0:
        chosen = rng.choice(n, size=target_size, replace=False)
    else:
        n_live = int(round(target_size * len(live_idx) / n))
        if target_size >= 2:
            n_live = min(max(n_live, 1), target_size - 1)
        n_live = min(n_live, len(live_idx))
        n_spoof = min(target_size - n_live, len(spoof_idx))
        n_live = target_size - n_spoof
        chosen = np.concatenate(
            [
                rng.choice(live_idx, size=n_live, replace=False),
                rng.choice(spoof_idx, size=n_spoof, replace=False),
            ]
        )
        rng.shuffle(chosen)
    return ReplayStore(features[chosen], labels[chosen])


def sample_batch(
    online: OnlineBuffer,
    replay: ReplayStore,
    batch_size: int,
    online_prob: float,
    rng,
) -> tuple[np.ndarray, np.ndarray]:
    """Draw a fine-tuning batch. Returns (features (B, d), labels (B,)).

    Online entries carry their smoothed working label; replay entries
    their frozen ground-truth label. Sampling is with replacement and
    never mutates either store.
    """
    n_online, n_replay = len(online), len(replay)
    if n_online == 0 and n_replay == 0:
        raise DataError("cannot sample a batch: both stores are empty")

    use_online = rng.random(batch_size) < online_prob
    if n_online == 0:
        use_online[:] = False
    if n_replay == 0:
        use_online[:] = True
    class_u = rng.random(batch_size)
    entry_u = rng.random(batch_size)

    online_feats = online.features_matrix()
    online_labels = online.working_labels
    online_buckets = [np.flatnonzero(online_labels == c) for c in (0, 1)]
    online_present = [b for b in online_buckets if len(b)]
    replay_present = [
        replay.class_indices(c) for c in (0, 1) if len(replay.class_indices(c))
    ]

    d = online_feats.shape[1] if n_online else replay.d
    feats = np.empty((batch_size, d))
    labels = np.empty(batch_size, dtype=np.int64)
    for i in range(batch_size):
        buckets = online_present if use_online[i] else replay_present
        bucket = buckets[int(class_u[i] * len(buckets))]
        j = bucket[int(entry_u[i] * len(bucket))]
        if use_online[i]:
            feats[i] = online_feats[j]
            labels[i] = online_labels[j]
        else:
            feats[i] = replay.features[j]
            labels[i] = replay.labels[j]
    return feats, labels
