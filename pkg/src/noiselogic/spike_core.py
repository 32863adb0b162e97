"""Clocked stochastic spike trains.

A spike train is a fixed-length 0/1 sequence over discrete clock slots. Trains
are drawn from counter-based (Philox) streams keyed by ``(seed, stream_label)``
so any train can be regenerated independently of every other one.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "ClockConfig",
    "SpikeTrain",
    "OrthogonalSet",
    "Superposition",
    "LengthMismatchError",
    "InfeasibleSetError",
    "rng_stream",
    "generate_random_train",
    "generate_orthogonal_set",
    "superpose",
    "xor_fold",
    "coincidence_count",
    "dump_trains_text",
    "load_trains_text",
    "dump_trains_json",
    "load_trains_json",
]

# Namespaces keep the streams of different consumers disjoint for one seed.
NS_TRAIN = 0
NS_ORTHOGONAL = 1
NS_CHANNEL = 2
NS_MONTE_CARLO = 3
NS_SCENARIO = 4

MAX_SEED = 2**64 - 1


class LengthMismatchError(ValueError):
    """Raised when trains that must share one clock have different lengths."""


class InfeasibleSetError(ValueError):
    """Raised when k orthogonal trains at rate p cannot exist (k * p > 1)."""


def rng_stream(seed: int, *labels: int) -> np.random.Generator:
    """Return an independent Philox generator for ``(seed, *labels)``."""
    if not 0 <= seed <= MAX_SEED:
        raise ValueError(f"seed must fit in 64 bits, got {seed}")
    ss = np.random.SeedSequence(seed, spawn_key=tuple(int(x) for x in labels))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class ClockConfig:
    n_steps: int
    spike_prob: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise ValueError(f"n_steps must be a positive integer, got {self.n_steps}")
        if not 0.0 <= self.spike_prob <= 1.0:
            raise ValueError(f"spike_prob must lie in [0, 1], got {self.spike_prob}")
        if int(self.seed) != self.seed or not 0 <= self.seed <= MAX_SEED:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")


class SpikeTrain:
    """Immutable binary sequence; ``slots[t] == 1`` means a spike in slot t."""

    __slots__ = ("_slots",)

    def __init__(self, slots: Iterable[int] | np.ndarray):
        arr = np.array(slots, dtype=np.uint8).ravel()
        if arr.size and arr.max() > 1:
            raise ValueError("spike train slots must be 0 or 1")
        arr.setflags(write=False)
        self._slots = arr

    @classmethod
    def from_string(cls, text: str) -> SpikeTrain:
        text = text.strip()
        if not text or set(text) - {"0", "1"}:
            raise ValueError(f"not a 0/1 spike string: {text!r}")
        return cls(np.frombuffer(text.encode("ascii"), dtype=np.uint8) - ord("0"))

    @classmethod
    def zeros(cls, n_steps: int) -> SpikeTrain:
        return cls(np.zeros(n_steps, dtype=np.uint8))

    @property
    def slots(self) -> np.ndarray:
        return self._slots

    def spike_count(self) -> int:
        return int(self._slots.sum(dtype=np.int64))

    def rate(self) -> float:
        return self.spike_count() / len(self)

    def to_string(self) -> str:
        return (self._slots + ord("0")).tobytes().decode("ascii")

    def __len__(self) -> int:
        return self._slots.size

    def __getitem__(self, t):
        if isinstance(t, slice):
            return SpikeTrain(self._slots[t])
        return int(self._slots[t])

    def __iter__(self):
        return (int(v) for v in self._slots)

    def __eq__(self, other):
        if not isinstance(other, SpikeTrain):
            return NotImplemented
        return np.array_equal(self._slots, other._slots)

    def __hash__(self):
        return hash(self._slots.tobytes())

    def __repr__(self):
        s = self.to_string()
        if len(s) > 40:
            s = s[:37] + "..."
        return f"SpikeTrain({s!r}, n={len(self)})"


@dataclass(frozen=True)
class OrthogonalSet:
    trains: tuple[SpikeTrain, ...]
    clock: ClockConfig

    def __post_init__(self):
        if len(self.trains) * self.clock.spike_prob > 1.0 + 1e-12:
            raise InfeasibleSetError(
                f"{len(self.trains)} trains at p={self.clock.spike_prob} exceed one spike per slot"
            )
        _check_lengths(self.trains, self.clock.n_steps)
        if self.trains:
            stacked = np.stack([t.slots for t in self.trains])
            if stacked.sum(axis=0).max() > 1:
                raise ValueError("trains are not pairwise orthogonal")

    def __len__(self):
        return len(self.trains)

    def __getitem__(self, j: int) -> SpikeTrain:
        return self.trains[j]


@dataclass(frozen=True)
class Superposition:
    signal: SpikeTrain
    member_ids: frozenset  # ground truth, used by tests and reports only


def _check_lengths(trains: Sequence[SpikeTrain], n_steps: int | None = None) -> int:
    lengths = {len(t) for t in trains}
    if n_steps is not None:
        lengths.add(n_steps)
    if len(lengths) > 1:
        raise LengthMismatchError(f"trains do not share one clock: lengths {sorted(lengths)}")
    return lengths.pop() if lengths else 0


def generate_random_train(clock: ClockConfig, stream_label: int) -> SpikeTrain:
    """Draw an i.i.d. Bernoulli(spike_prob) train from stream ``(seed, stream_label)``.

    >>> generate_random_train(ClockConfig(5, 1.0), 0).to_string()
    '11111'
    """
    rng = rng_stream(clock.seed, NS_TRAIN, stream_label)
    return SpikeTrain(rng.random(clock.n_steps) < clock.spike_prob)


def generate_orthogonal_set(clock: ClockConfig, k: int, stream_label: int = 0) -> OrthogonalSet:
    """Draw k mutually exclusive trains, each with marginal rate spike_prob.

    Every slot gets one categorical draw: train j with probability p for each
    j, or no train with probability 1 - k*p.
    """
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    p = clock.spike_prob
    if k * p > 1.0 + 1e-12:
        raise InfeasibleSetError(f"k * p = {k * p:g} > 1; cannot build {k} orthogonal trains")
    rng = rng_stream(clock.seed, NS_ORTHOGONAL, stream_label)
    u = rng.random(clock.n_steps)
    # slot belongs to train j iff j*p <= u < (j+1)*p
    owner = np.floor(u / p).astype(np.int64) if p > 0 else np.full(clock.n_steps, k)
    trains = tuple(SpikeTrain(owner == j) for j in range(k))
    return OrthogonalSet(trains, clock)


def superpose(members) -> Superposition:
    """Slot-wise OR of ``(id, train)`` pairs (a mapping is accepted too)."""
    if isinstance(members, Mapping):
        members = list(members.items())
    members = list(members)
    if not members:
        raise ValueError("superposition needs at least one member")
    ids = [m[0] for m in members]
    trains = [m[1] for m in members]
    _check_lengths(trains)
    signal = reduce(np.bitwise_or, (t.slots for t in trains))
    return Superposition(SpikeTrain(signal), frozenset(ids))


def xor_fold(trains: Sequence[SpikeTrain]) -> SpikeTrain:
    """Slot-wise parity of all trains."""
    trains = list(trains)
    if not trains:
        raise ValueError("xor_fold needs at least one train")
    _check_lengths(trains)
    return SpikeTrain(reduce(np.bitwise_xor, (t.slots for t in trains)))


def coincidence_count(a: SpikeTrain, b: SpikeTrain) -> int:
    _check_lengths([a, b])
    return int(np.count_nonzero(a.slots & b.slots))


# -- serialization ----------------------------------------------------------

def dump_trains_text(trains: Sequence[SpikeTrain], clock: ClockConfig) -> str:
    _check_lengths(trains, clock.n_steps)
    lines = [f"n_steps={clock.n_steps} p={clock.spike_prob!r} seed={clock.seed}"]
    lines += [t.to_string() for t in trains]
    return "\n".join(lines) + "\n"


def load_trains_text(text: str) -> tuple[ClockConfig, list[SpikeTrain]]:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty train file")
    try:
        fields = dict(item.split("=", 1) for item in lines[0].split())
        clock = ClockConfig(int(fields["n_steps"]), float(fields["p"]), int(fields["seed"]))
    except (KeyError, ValueError) as exc:
        raise ValueError(f"bad header line {lines[0]!r}") from exc
    trains = [SpikeTrain.from_string(ln) for ln in lines[1:]]
    _check_lengths(trains, clock.n_steps)
    return clock, trains


def dump_trains_json(trains: Sequence[SpikeTrain], clock: ClockConfig) -> str:
    _check_lengths(trains, clock.n_steps)
    doc = {
        "n_steps": clock.n_steps,
        "p": clock.spike_prob,
        "seed": clock.seed,
        "trains": [t.to_string() for t in trains],
    }
    return json.dumps(doc) + "\n"


def load_trains_json(text: str) -> tuple[ClockConfig, list[SpikeTrain]]:
    doc = json.loads(text)
    clock = ClockConfig(int(doc["n_steps"]), float(doc["p"]), int(doc["seed"]))
    trains = [SpikeTrain.from_string(s) for s in doc["trains"]]
    _check_lengths(trains, clock.n_steps)
    return clock, trains
