"""Two-party string verification over hyperspace (XOR-folded) spike signals.

Alice and Bob share a bank of 2N reference trains, one per (bit position,
bit value). Each party XOR-folds the N trains its string selects; Alice sends
her signal through a spike-deleting channel and Bob compares it slot by slot
with his own. Unequal strings survive M comparisons with probability
``per_step_agreement_probability(p, d) ** M``, which is 2**-M at p = 1/2 no
matter how long the strings are.
"""
from __future__ import annotations

import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from statistics import NormalDist
from typing import Iterable, Sequence

import numpy as np

from .neural_gates import build_xor_fold, run_circuit
from .spike_core import (
    NS_CHANNEL,
    NS_MONTE_CARLO,
    ClockConfig,
    LengthMismatchError,
    SpikeTrain,
    generate_random_train,
    rng_stream,
    xor_fold,
)

# Trials per Monte Carlo block. Each block draws from its own stream, so
# results do not depend on how blocks are spread over workers.
BLOCK_TRIALS = 8192


class Verdict(str, enum.Enum):
    ACCEPT = "Accept"
    REJECT = "Reject"

    def __str__(self):
        return self.value


class BitString(tuple):
    """Immutable 0/1 tuple."""

    def __new__(cls, bits: Iterable[int] | str):
        if isinstance(bits, str):
            bits = bits.strip()
            if set(bits) - {"0", "1"}:
                raise ValueError(f"not a bit string: {bits!r}")
            bits = [int(c) for c in bits]
        bits = tuple(int(b) for b in bits)
        if not bits:
            raise ValueError("bit string must have length >= 1")
        if any(b not in (0, 1) for b in bits):
            raise ValueError("bits must be 0 or 1")
        return super().__new__(cls, bits)

    def __str__(self):
        return "".join(map(str, self))

    def hamming(self, other: BitString) -> int:
        if len(self) != len(other):
            raise LengthMismatchError(f"strings of length {len(self)} and {len(other)}")
        return sum(x != y for x, y in zip(self, other))


@dataclass(frozen=True)
class ReferenceBank:
    clock: ClockConfig
    trains: tuple[tuple[SpikeTrain, SpikeTrain], ...]  # trains[i][v]

    @property
    def N(self) -> int:
        return len(self.trains)

    def train(self, position: int, value: int) -> SpikeTrain:
        return self.trains[position][value]

    def all_trains(self) -> list[SpikeTrain]:
        return [t for pair in self.trains for t in pair]


@dataclass(frozen=True)
class ChannelModel:
    loss_prob: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.loss_prob <= 1.0:
            raise ValueError(f"loss_prob must lie in [0, 1], got {self.loss_prob}")


@dataclass(frozen=True)
class HyperspaceSignal:
    signal: SpikeTrain
    owner: str


@dataclass(frozen=True)
class VerificationResult:
    verdict: Verdict
    horizon: int  # M, the number of slots needed to accept
    steps_compared: int
    first_mismatch_step: int | None
    analytic_false_accept_bound: float

    def to_dict(self) -> dict:
        return {
            "verdict": str(self.verdict),
            "horizon": self.horizon,
            "steps_compared": self.steps_compared,
            "first_mismatch_step": self.first_mismatch_step,
            "analytic_false_accept_bound": self.analytic_false_accept_bound,
        }


def make_reference_bank(N: int, clock: ClockConfig) -> ReferenceBank:
    """2N independent trains; train (i, v) uses stream label 2*i + v."""
    if int(N) != N or N < 1:
        raise ValueError(f"N must be a positive integer, got {N}")
    trains = tuple(
        (generate_random_train(clock, 2 * i), generate_random_train(clock, 2 * i + 1)) for i in range(N)
    )
    return ReferenceBank(clock, trains)


def hyperspace_signal(bank: ReferenceBank, s: BitString, engine: str = "direct", owner: str = "Alice") -> HyperspaceSignal:
    s = BitString(s)
    if len(s) != bank.N:
        raise LengthMismatchError(f"string length {len(s)} does not match bank N={bank.N}")
    selected = [bank.train(i, v) for i, v in enumerate(s)]
    if engine == "direct":
        sig = xor_fold(selected)
    elif engine == "neural_circuit":
        circuit = build_xor_fold(bank.N)
        sig = run_circuit(circuit, dict(zip(circuit.inputs, selected)))
    else:
        raise ValueError(f"unknown engine {engine!r}")
    return HyperspaceSignal(sig, owner)


def transmit(sig: HyperspaceSignal, ch: ChannelModel, stream_label: int, seed: int = 0) -> HyperspaceSignal:
    """Delete each spike independently with probability ``ch.loss_prob``."""
    if ch.loss_prob == 0.0:
        return sig
    rng = rng_stream(seed, NS_CHANNEL, stream_label)
    kept = rng.random(len(sig.signal)) >= ch.loss_prob
    return HyperspaceSignal(SpikeTrain(sig.signal.slots & kept), sig.owner)


def verify(
    a: BitString,
    b: BitString,
    bank: ReferenceBank,
    M: int,
    ch: ChannelModel = ChannelModel(),
    stream_label: int = 0,
    engine: str = "direct",
) -> VerificationResult:
    """Alice holds ``a``, Bob holds ``b``; Bob rejects at the first of M slots that disagree."""
    a, b = BitString(a), BitString(b)
    if len(a) != len(b):
        raise LengthMismatchError(f"strings of length {len(a)} and {len(b)}")
    if int(M) != M or not 1 <= M <= bank.clock.n_steps:
        raise ValueError(f"M must lie in 1..{bank.clock.n_steps}, got {M}")
    alice = hyperspace_signal(bank, a, engine, "Alice")
    bob = hyperspace_signal(bank, b, engine, "Bob")
    received = transmit(alice, ch, stream_label, bank.clock.seed)
    mismatch = np.flatnonzero(received.signal.slots[:M] != bob.signal.slots[:M])
    bound = error_bound(M, bank.clock.spike_prob, 1)
    if mismatch.size:
        t = int(mismatch[0])
        return VerificationResult(Verdict.REJECT, M, t + 1, t, bound)
    return VerificationResult(Verdict.ACCEPT, M, M, None, bound)


# -- closed forms -----------------------------------------------------------

def _check_prob(x, name="p"):
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"{name} must be a probability in [0, 1], got {x}")


def _check_int(n, name, lo):
    if int(n) != n or n < lo:
        raise ValueError(f"{name} must be an integer >= {lo}, got {n}")


def per_step_agreement_probability(p: float, d: int) -> float:
    """P(both hyperspace signals agree in one slot) when the strings differ in d bits."""
    _check_prob(p)
    _check_int(d, "d", 0)
    return (1.0 + (1.0 - 4.0 * p * (1.0 - p)) ** d) / 2.0


def error_bound(M: int, p: float, d: int = 1) -> float:
    """False-accept probability after M slots for strings at Hamming distance d >= 1."""
    _check_int(M, "M", 1)
    _check_int(d, "d", 1)
    return per_step_agreement_probability(p, d) ** M


def _odd_parity(p: float, k: int) -> float:
    # P(XOR of k independent Bernoulli(p) bits is 1)
    return (1.0 - (1.0 - 2.0 * p) ** k) / 2.0


def acceptance_probability(N: int, M: int, p: float, d: int, loss: float = 0.0) -> float:
    """Exact acceptance probability including channel loss.

    Alice's slot is C ^ A and Bob's is C ^ B, where C folds the N - d shared
    trains and A, B fold each party's d private trains. A slot agrees when both
    are silent, both spike and the spike survives, or Alice's lone spike is lost.
    """
    _check_int(N, "N", 1)
    _check_int(M, "M", 1)
    _check_int(d, "d", 0)
    if d > N:
        raise ValueError(f"d={d} exceeds N={N}")
    _check_prob(p)
    _check_prob(loss, "loss")
    c, s = _odd_parity(p, N - d), _odd_parity(p, d)
    both_spike = c * (1 - s) ** 2 + (1 - c) * s * s
    both_silent = (1 - c) * (1 - s) ** 2 + c * s * s
    alice_only = s * (1 - s)
    agree = both_silent + (1 - loss) * both_spike + loss * alice_only
    return agree**M


# -- Monte Carlo ------------------------------------------------------------

@dataclass(frozen=True)
class MonteCarloEstimate:
    N: int
    M: int
    p: float
    d: int
    loss: float
    trials: int
    accepts: int
    seed: int
    confidence: float = 0.99

    @property
    def rate(self) -> float:
        return self.accepts / self.trials

    @property
    def stderr(self) -> float:
        r = self.rate
        return math.sqrt(r * (1 - r) / self.trials)

    @property
    def ci(self) -> tuple[float, float]:
        """Wilson score interval at ``confidence``."""
        z = NormalDist().inv_cdf(0.5 + self.confidence / 2)
        n, r = self.trials, self.rate
        centre = (r + z * z / (2 * n)) / (1 + z * z / n)
        half = z * math.sqrt(r * (1 - r) / n + z * z / (4 * n * n)) / (1 + z * z / n)
        return max(0.0, centre - half), min(1.0, centre + half)

    @property
    def analytic(self) -> float:
        return acceptance_probability(self.N, self.M, self.p, self.d, self.loss)

    def row(self) -> dict:
        lo, hi = self.ci
        return {
            "N": self.N, "M": self.M, "p": self.p, "d": self.d, "loss": self.loss,
            "trials": self.trials, "accepts": self.accepts, "rate": self.rate,
            "stderr": self.stderr, "ci_low": lo, "ci_high": hi, "analytic": self.analytic,
        }


SWEEP_FIELDS = ("N", "M", "p", "d", "loss", "trials", "accepts", "rate", "stderr", "ci_low", "ci_high", "analytic")


@dataclass
class TrialBlock:
    """Raw draws for a block of protocol instances (exposed for cross-checking)."""

    bank: np.ndarray  # (B, N, 2, M) bool
    a: np.ndarray  # (B, N) int
    b: np.ndarray  # (B, N) int
    kept: np.ndarray  # (B, M) bool, False where the channel deletes a spike


def draw_block(rng: np.random.Generator, size: int, N: int, M: int, p: float, d: int, loss: float) -> TrialBlock:
    bank = rng.random((size, N, 2, M)) < p
    a = rng.integers(0, 2, size=(size, N))
    # d distinct positions per trial, uniformly: the d smallest of N uniforms
    order = np.argsort(rng.random((size, N)), axis=1)
    flip = np.zeros((size, N), dtype=np.int64)
    np.put_along_axis(flip, order[:, :d], 1, axis=1)
    b = a ^ flip
    kept = rng.random((size, M)) >= loss if loss > 0 else np.ones((size, M), dtype=bool)
    return TrialBlock(bank, a, b, kept)


def evaluate_block(block: TrialBlock) -> np.ndarray:
    """First mismatch slot per trial, or -1 where every slot agreed."""
    sel_a = np.take_along_axis(block.bank, block.a[:, :, None, None], axis=2)[:, :, 0, :]
    sel_b = np.take_along_axis(block.bank, block.b[:, :, None, None], axis=2)[:, :, 0, :]
    alice = np.bitwise_xor.reduce(sel_a, axis=1) & block.kept
    bob = np.bitwise_xor.reduce(sel_b, axis=1)
    diff = alice != bob
    return np.where(diff.any(axis=1), np.argmax(diff, axis=1), -1)


def _run_blocks(args) -> tuple[int, np.ndarray]:
    N, M, p, d, loss, trials, seed, block_ids = args
    accepts = 0
    first = np.zeros(M, dtype=np.int64)
    for k in block_ids:
        size = min(BLOCK_TRIALS, trials - k * BLOCK_TRIALS)
        rng = rng_stream(seed, NS_MONTE_CARLO, k)
        steps = evaluate_block(draw_block(rng, size, N, M, p, d, loss))
        accepts += int(np.count_nonzero(steps < 0))
        first += np.bincount(steps[steps >= 0], minlength=M)
    return accepts, first


def simulate(N: int, M: int, p: float, d: int, trials: int, seed: int, loss: float = 0.0, workers: int = 1):
    """Run ``trials`` protocol instances; returns (accepts, histogram of first-mismatch slots)."""
    _check_int(N, "N", 1)
    _check_int(M, "M", 1)
    _check_int(d, "d", 0)
    _check_int(trials, "trials", 1)
    _check_int(workers, "workers", 1)
    if d > N:
        raise ValueError(f"d={d} exceeds N={N}")
    _check_prob(p)
    _check_prob(loss, "loss")
    n_blocks = -(-trials // BLOCK_TRIALS)
    chunks = [list(range(w, n_blocks, workers)) for w in range(min(workers, n_blocks))]
    jobs = [(N, M, p, d, loss, trials, seed, ids) for ids in chunks]
    if len(jobs) == 1:
        results = [_run_blocks(jobs[0])]
    else:
        with ProcessPoolExecutor(len(jobs)) as pool:
            results = list(pool.map(_run_blocks, jobs))
    accepts = sum(r[0] for r in results)
    hist = sum((r[1] for r in results), np.zeros(M, dtype=np.int64))
    return accepts, hist


def monte_carlo_false_accept(
    N: int, M: int, p: float, d: int, trials: int, seed: int, loss: float = 0.0, workers: int = 1
) -> MonteCarloEstimate:
    """Acceptance rate of fresh protocol instances at Hamming distance exactly d.

    For d >= 1 this estimates the false-accept probability; with d = 0 and
    loss > 0 one minus the rate is the false-reject probability.
    """
    accepts, _ = simulate(N, M, p, d, trials, seed, loss, workers)
    return MonteCarloEstimate(N, M, float(p), d, float(loss), trials, accepts, seed)


def sweep(
    Ns: Sequence[int], Ms: Sequence[int], ps: Sequence[float], ds: Sequence[int], losses: Sequence[float],
    trials: int, seed: int, workers: int = 1,
) -> list[MonteCarloEstimate]:
    """Grid of estimates; grid point g uses seed stream ``(seed, g)`` so rows are independent."""
    out = []
    grid = [(N, M, p, d, l) for N in Ns for M in Ms for p in ps for d in ds for l in losses]
    for g, (N, M, p, d, l) in enumerate(grid):
        sub_seed = int(np.random.SeedSequence(seed, spawn_key=(g,)).generate_state(1, np.uint64)[0])
        est = monte_carlo_false_accept(N, M, p, d, trials, sub_seed, l, workers)
        out.append(MonteCarloEstimate(N, M, float(p), d, float(l), trials, est.accepts, seed))
    return out
