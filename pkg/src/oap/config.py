"""Run-level value types: class labels, pseudo-labels, and the
hyper-parameter ledger with its validation rules and flat-file syntax.

All types here are plain values, safe to copy and share between threads.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path

from .errors import ConfigError


class ClassLabel(IntEnum):
    """Ground-truth class of a frame. The numeric coding is fixed:
    live = 0, spoof = 1."""

    LIVE = 0
    SPOOF = 1


class PseudoLabel(IntEnum):
    """Self-assigned training label. DISCARD marks frames whose prediction
    falls inside the uncertainty band; they are never stored or trained on."""

    LIVE = 0
    SPOOF = 1
    DISCARD = -1


@dataclass(frozen=True)
class HyperParams:
    """The full hyper-parameter ledger of the adaptation engine.

    margin:
        Half-width of the confident region. Confident-spoof threshold is
        ``1 - margin`` and confident-live threshold is ``margin``, so the
        two thresholds sit symmetrically around 0.5 and never cross.
        ``margin = 0.5`` degenerates into single-threshold labeling with
        no discard band.
    window:
        Sliding-window length in frames for majority label smoothing.
    eviction_horizon:
        Online samples older than this many seconds are dropped.
    frame_rate:
        Nominal stream rate in frames/second (drives the buffer bound:
        at 30 fps with a 4 s horizon the online buffer holds at most 120
        entries).
    finetune_freq:
        Expected fine-tune invocations per incoming frame, in (0, 1].
        Fractional values fire via an accumulator, e.g. 0.01 fires once
        every 100 frames.
    iterations_per_call:
        Gradient iterations per fine-tune invocation.
    online_prob:
        Probability that a batch slot draws from the online buffer rather
        than the replay store.
    batch_size:
        Mini-batch size for online fine-tuning.
    learning_rate:
        Adam step size for online fine-tuning.
    weight_decay:
        Decoupled weight decay used during online fine-tuning (0 disables;
        the pre-training schedule carries its own value).
    replay_size:
        Number of pre-training samples kept frozen for replay.
    eval_threshold:
        Fixed decision threshold: a frame is called spoof iff y strictly
        exceeds it.
    seed:
        Master seed; every stochastic component derives a tagged sub-stream
        from it.
    """

    margin: float = 0.01
    window: int = 30
    eviction_horizon: float = 4.0
    frame_rate: float = 30.0
    finetune_freq: float = 1.0
    iterations_per_call: int = 1
    online_prob: float = 0.9
    batch_size: int = 16
    learning_rate: float = 1e-6
    weight_decay: float = 0.0
    replay_size: int = 1000
    eval_threshold: float = 0.5
    seed: int = 0

    @property
    def accept_spoof_threshold(self) -> float:
        """Probability above which a frame is pseudo-labeled spoof."""
        return 1.0 - self.margin

    @property
    def accept_live_threshold(self) -> float:
        """Probability below which a frame is pseudo-labeled live."""
        return self.margin

    def replace(self, **changes) -> "HyperParams":
        return dataclasses.replace(self, **changes)


_RANGE_CHECKS = (
    ("margin", lambda p: 0.0 < p.margin <= 0.5, "want 0 < margin <= 0.5"),
    ("window", lambda p: p.window >= 1, "want window >= 1"),
    ("eviction_horizon", lambda p: p.eviction_horizon > 0.0, "want eviction_horizon > 0"),
    ("frame_rate", lambda p: p.frame_rate > 0.0, "want frame_rate > 0"),
    ("finetune_freq", lambda p: 0.0 < p.finetune_freq <= 1.0, "want 0 < finetune_freq <= 1"),
    ("iterations_per_call", lambda p: p.iterations_per_call >= 1, "want iterations_per_call >= 1"),
    ("online_prob", lambda p: 0.0 <= p.online_prob <= 1.0, "want 0 <= online_prob <= 1"),
    ("batch_size", lambda p: p.batch_size >= 1, "want batch_size >= 1"),
    ("learning_rate", lambda p: p.learning_rate > 0.0, "want learning_rate > 0"),
    ("weight_decay", lambda p: p.weight_decay >= 0.0, "want weight_decay >= 0"),
    ("replay_size", lambda p: p.replay_size >= 0, "want replay_size >= 0"),
    ("eval_threshold", lambda p: 0.0 < p.eval_threshold < 1.0, "want 0 < eval_threshold < 1"),
    ("seed", lambda p: 0 <= p.seed < 2**64, "want a 64-bit unsigned integer"),
)


def validate(params: HyperParams) -> HyperParams:
    """Check every range invariant; return the params unchanged when all
    hold, else raise ConfigError naming the first violated field."""
    for name, check, hint in _RANGE_CHECKS:
        if not check(params):
            raise ConfigError(f"{name} out of range: {getattr(params, name)!r} ({hint})")
    return params


# ---------------------------------------------------------------------------
# Flat key = value config files
# ---------------------------------------------------------------------------

_INT_FIELDS = {"window", "iterations_per_call", "batch_size", "replay_size", "seed"}


def parse_kv_file(path: str | Path) -> dict[str, str]:
    """Parse a flat config file: one ``key = value`` per line, ``#`` starts
    a comment, blank lines ignored. Returns raw string values."""
    mapping: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        mapping[key.strip()] = value.strip()
    return mapping


def hyperparams_from_mapping(
    mapping: dict[str, str], base: HyperParams | None = None
) -> HyperParams:
    """Overlay recognized keys from a flat mapping onto ``base``; unknown
    keys are left for other consumers of the same file."""
    params = base if base is not None else HyperParams()
    field_names = {f.name for f in dataclasses.fields(HyperParams)}
    changes = {}
    for key, raw in mapping.items():
        if key not in field_names:
            continue
        try:
            changes[key] = int(raw) if key in _INT_FIELDS else float(raw)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {raw!r}") from exc
    return params.replace(**changes) if changes else params


def apply_overrides(mapping: dict[str, str], overrides: list[str]) -> dict[str, str]:
    """Apply ``key=value`` override strings (CLI --set flags) on top of a
    raw config mapping."""
    merged = dict(mapping)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override must look like key=value, got {item!r}")
        key, value = item.split("=", 1)
        merged[key.strip()] = value.strip()
    return merged
