"""Coincidence-detection readout of components inside a superposition."""
from __future__ import annotations

import csv
import enum
import io
import json
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .spike_core import (
    ClockConfig,
    LengthMismatchError,
    Superposition,
    SpikeTrain,
    generate_orthogonal_set,
    superpose,
)


class Verdict(str, enum.Enum):
    PRESENT = "Present"
    ABSENT = "Absent"
    UNDECIDED = "Undecided"

    def __str__(self):
        return self.value


class DetectorMode(str, enum.Enum):
    EXACT_ORTHOGONAL = "exact_orthogonal"
    INDEPENDENT = "independent"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class DetectorConfig:
    max_window: int
    mode: DetectorMode = DetectorMode.EXACT_ORTHOGONAL

    def __post_init__(self):
        if int(self.max_window) != self.max_window or self.max_window < 1:
            raise ValueError(f"max_window must be a positive integer, got {self.max_window}")
        object.__setattr__(self, "mode", DetectorMode(self.mode))


@dataclass(frozen=True)
class DetectionOutcome:
    verdict: Verdict
    decision_step: int | None
    evidence_count: int


def detect_component(reference: SpikeTrain, sup: Superposition, cfg: DetectorConfig) -> DetectionOutcome:
    """Decide whether ``reference`` is a component of ``sup``.

    In ``exact_orthogonal`` mode the first reference spike settles the
    question: it is covered by the superposition iff the reference is a member.
    In ``independent`` mode the first uncovered reference spike proves absence;
    if all reference spikes in the window are covered the verdict is Present,
    reached at the window's last slot, with ``evidence_count`` covered spikes.
    """
    if len(reference) != len(sup.signal):
        raise LengthMismatchError(
            f"reference has {len(reference)} slots, superposition has {len(sup.signal)}"
        )
    if cfg.max_window > len(reference):
        raise ValueError(f"max_window {cfg.max_window} exceeds train length {len(reference)}")
    verdicts, steps, evidence = detect_batch(
        reference.slots[None, : cfg.max_window], sup.signal.slots[None, : cfg.max_window], cfg.mode
    )
    verdict = _CODES[int(verdicts[0])]
    step = int(steps[0]) if verdict is not Verdict.UNDECIDED else None
    return DetectionOutcome(verdict, step, int(evidence[0]))


_CODES = (Verdict.UNDECIDED, Verdict.PRESENT, Verdict.ABSENT)


def detect_batch(references: np.ndarray, signals: np.ndarray, mode) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Row-wise detection over ``(trials, window)`` arrays.

    Returns ``(codes, decision_steps, evidence_counts)`` where codes are
    0 = Undecided, 1 = Present, 2 = Absent; decision_step is -1 when Undecided.
    """
    mode = DetectorMode(mode)
    ref = np.asarray(references, dtype=bool)
    sig = np.asarray(signals, dtype=bool)
    if ref.shape != sig.shape or ref.ndim != 2:
        raise LengthMismatchError(f"shape mismatch {ref.shape} vs {sig.shape}")
    trials, window = ref.shape
    rows = np.arange(trials)
    has_spike = ref.any(axis=1)
    codes = np.zeros(trials, dtype=np.int8)
    steps = np.full(trials, -1, dtype=np.int64)
    evidence = np.zeros(trials, dtype=np.int64)

    if mode is DetectorMode.EXACT_ORTHOGONAL:
        first = np.argmax(ref, axis=1)
        covered = sig[rows, first]
        codes[has_spike] = np.where(covered[has_spike], 1, 2)
        steps[has_spike] = first[has_spike]
        evidence[has_spike] = 1
        return codes, steps, evidence

    uncovered = ref & ~sig
    absent = uncovered.any(axis=1)
    first_bad = np.argmax(uncovered, axis=1)
    # spikes examined up to and including the decisive one
    seen = np.cumsum(ref, axis=1)
    codes[absent] = 2
    steps[absent] = first_bad[absent]
    evidence[absent] = seen[rows, first_bad][absent]
    present = has_spike & ~absent
    codes[present] = 1
    steps[present] = window - 1
    evidence[present] = seen[present, -1]
    return codes, steps, evidence


def undecided_probability(p: float, T: int) -> float:
    """Chance that a rate-p reference stays silent for T slots: (1 - p)**T."""
    _check_prob(p, "p")
    _check_positive(T, "T")
    return (1.0 - p) ** T


def false_positive_probability(q: float, k: int) -> float:
    """Chance that k reference spikes are all covered by a rate-q background."""
    _check_prob(q, "q")
    _check_positive(k, "k")
    return q**k


def _check_prob(x, name):
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"{name} must be a probability in [0, 1], got {x}")


def _check_positive(n, name):
    if int(n) != n or n < 1:
        raise ValueError(f"{name} must be a positive integer, got {n}")


# -- superposition demo -----------------------------------------------------

@dataclass(frozen=True)
class DemoRow:
    component_id: int
    superposition: str
    verdict: Verdict
    decision_step: int | None
    evidence_count: int
    member: bool

    @property
    def correct(self) -> bool:
        if self.verdict is Verdict.UNDECIDED:
            return True
        return (self.verdict is Verdict.PRESENT) == self.member


REPORT_FIELDS = ("component_id", "superposition", "verdict", "decision_step", "evidence_count")


@dataclass(frozen=True)
class DemoReport:
    rows: tuple[DemoRow, ...]

    def errors(self) -> int:
        return sum(not r.correct for r in self.rows)

    def records(self) -> list[dict]:
        out = []
        for r in self.rows:
            rec = {f: getattr(r, f) for f in REPORT_FIELDS}
            rec["verdict"] = str(r.verdict)
            out.append(rec)
        return out

    def to_csv(self, header: Iterable[str] = ()) -> str:
        buf = io.StringIO()
        for line in header:
            buf.write(f"# {line}\n")
        w = csv.DictWriter(buf, fieldnames=REPORT_FIELDS, lineterminator="\n")
        w.writeheader()
        for rec in self.records():
            w.writerow({k: "" if v is None else v for k, v in rec.items()})
        return buf.getvalue()

    def to_json(self, params: dict | None = None) -> str:
        doc = {"params": params or {}, "rows": self.records()}
        return json.dumps(doc, indent=2) + "\n"


def run_figure2_demo(
    k_components: int,
    memberships_a: Iterable[int],
    memberships_b: Iterable[int],
    clock: ClockConfig,
    cfg: DetectorConfig,
    stream_label: int = 0,
) -> DemoReport:
    """Build k orthogonal trains, superpose two subsets, and probe every component in both."""
    memberships = {"A": frozenset(memberships_a), "B": frozenset(memberships_b)}
    for name, ids in memberships.items():
        bad = sorted(i for i in ids if not 0 <= i < k_components)
        if bad:
            raise ValueError(f"superposition {name} references unknown components {bad}")
    ortho = generate_orthogonal_set(clock, k_components, stream_label)
    sups = {}
    for name, ids in memberships.items():
        if ids:
            sups[name] = superpose((j, ortho[j]) for j in sorted(ids))
        else:
            sups[name] = Superposition(SpikeTrain.zeros(clock.n_steps), frozenset())
    rows = []
    for j in range(k_components):
        for name, sup in sups.items():
            out = detect_component(ortho[j], sup, cfg)
            rows.append(DemoRow(j, name, out.verdict, out.decision_step, out.evidence_count, j in sup.member_ids))
    return DemoReport(tuple(rows))
