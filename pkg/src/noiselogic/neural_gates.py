"""Threshold neurons with excitatory/inhibitory inputs, and XOR circuits built from them.

A neuron fires in a slot iff at least ``threshold`` of its excitatory inputs
are active and none of its inhibitory inputs is. Circuits are evaluated
combinationally: every slot independently, neurons in topological order.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .spike_core import LengthMismatchError, SpikeTrain


class CircuitError(ValueError):
    """Malformed circuit: dangling reference, cycle, or bad threshold."""


class UnresolvedReferenceError(KeyError):
    pass


@dataclass(frozen=True)
class NeuronSpec:
    id: str
    excitatory: tuple[str, ...]
    inhibitory: tuple[str, ...] = ()
    threshold: int = 1

    def __post_init__(self):
        object.__setattr__(self, "excitatory", tuple(self.excitatory))
        object.__setattr__(self, "inhibitory", tuple(self.inhibitory))
        if not self.excitatory:
            raise CircuitError(f"neuron {self.id!r} needs at least one excitatory input")
        if int(self.threshold) != self.threshold or not 1 <= self.threshold <= len(self.excitatory):
            raise CircuitError(
                f"neuron {self.id!r}: threshold {self.threshold} outside 1..{len(self.excitatory)}"
            )


@dataclass(frozen=True)
class Circuit:
    inputs: tuple[str, ...]
    neurons: tuple[NeuronSpec, ...]
    output: str
    # number of 2-input XOR blocks, when built by the XOR constructors
    xor_blocks: int | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(self.inputs))
        object.__setattr__(self, "neurons", tuple(self.neurons))
        known = set()
        for port in self.inputs:
            if port in known:
                raise CircuitError(f"duplicate port {port!r}")
            known.add(port)
        for n in self.neurons:
            if n.id in known:
                raise CircuitError(f"duplicate signal id {n.id!r}")
            for ref in n.excitatory + n.inhibitory:
                if ref not in known:
                    # also catches cycles: a reference must point backwards
                    raise CircuitError(f"neuron {n.id!r} references {ref!r} before it is defined")
            known.add(n.id)
        if self.output not in known:
            raise CircuitError(f"output {self.output!r} is not a port or neuron")

    def depth(self) -> int:
        """Longest port-to-output path, counted in neurons."""
        level = {p: 0 for p in self.inputs}
        for n in self.neurons:
            level[n.id] = 1 + max(level[r] for r in n.excitatory + n.inhibitory)
        return level[self.output]

    def to_dict(self) -> dict:
        return {
            "inputs": list(self.inputs),
            "neurons": [
                {
                    "id": n.id,
                    "excitatory": list(n.excitatory),
                    "inhibitory": list(n.inhibitory),
                    "threshold": n.threshold,
                }
                for n in self.neurons
            ],
            "output": self.output,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, doc: Mapping) -> Circuit:
        neurons = [
            NeuronSpec(n["id"], n["excitatory"], n.get("inhibitory", []), n.get("threshold", 1))
            for n in doc["neurons"]
        ]
        return cls(doc["inputs"], neurons, doc["output"])

    @classmethod
    def from_json(cls, text: str) -> Circuit:
        return cls.from_dict(json.loads(text))


def step_neuron(spec: NeuronSpec, active: Mapping[str, int]) -> int:
    try:
        excited = sum(1 for ref in spec.excitatory if active[ref])
        inhibited = any(active[ref] for ref in spec.inhibitory)
    except KeyError as exc:
        raise UnresolvedReferenceError(f"neuron {spec.id!r}: no value for {exc.args[0]!r}") from None
    return int(excited >= spec.threshold and not inhibited)


def _xor_block(prefix: str, x: str, y: str) -> list[NeuronSpec]:
    # two cross-inhibiting AND-NOT units feeding an OR unit
    return [
        NeuronSpec(f"{prefix}n1", (x,), (y,), 1),
        NeuronSpec(f"{prefix}n2", (y,), (x,), 1),
        NeuronSpec(f"{prefix}out", (f"{prefix}n1", f"{prefix}n2"), (), 1),
    ]


def build_xor_pair() -> Circuit:
    return Circuit(("x", "y"), _xor_block("", "x", "y"), "out", xor_blocks=1)


def build_xor_fold(n_inputs: int) -> Circuit:
    """N-way parity over ports ``x0..x{N-1}`` as a balanced tree of XOR blocks.

    Each level pairs adjacent signals left to right; an odd leftover is carried
    up unchanged. Uses N-1 blocks and ceil(log2 N) block levels.
    """
    if int(n_inputs) != n_inputs or n_inputs < 1:
        raise ValueError(f"n_inputs must be a positive integer, got {n_inputs}")
    ports = tuple(f"x{i}" for i in range(n_inputs))
    level = list(ports)
    neurons: list[NeuronSpec] = []
    blocks = 0
    while len(level) > 1:
        nxt = []
        for i in range(0, len(level) - 1, 2):
            block = _xor_block(f"b{blocks}_", level[i], level[i + 1])
            neurons += block
            nxt.append(block[-1].id)
            blocks += 1
        if len(level) % 2:
            nxt.append(level[-1])
        level = nxt
    return Circuit(ports, neurons, level[0], xor_blocks=blocks)


def run_circuit(circuit: Circuit, inputs: Mapping[str, SpikeTrain]) -> SpikeTrain:
    """Evaluate the circuit slot by slot with zero propagation delay."""
    missing = [p for p in circuit.inputs if p not in inputs]
    if missing:
        raise UnresolvedReferenceError(f"unbound ports: {missing}")
    lengths = {len(inputs[p]) for p in circuit.inputs}
    if len(lengths) != 1:
        raise LengthMismatchError(f"input trains have lengths {sorted(lengths)}")
    values = {p: inputs[p].slots.astype(bool) for p in circuit.inputs}
    return SpikeTrain(_evaluate(circuit, values))


def run_circuit_array(circuit: Circuit, inputs: Sequence[np.ndarray]) -> np.ndarray:
    """Evaluate on raw arrays given in port order; any trailing shape is allowed."""
    if len(inputs) != len(circuit.inputs):
        raise UnresolvedReferenceError(f"expected {len(circuit.inputs)} inputs, got {len(inputs)}")
    values = {p: np.asarray(a, dtype=bool) for p, a in zip(circuit.inputs, inputs)}
    return _evaluate(circuit, values)


def _evaluate(circuit: Circuit, values: dict) -> np.ndarray:
    for n in circuit.neurons:
        excited = sum(values[r].astype(np.int32) for r in n.excitatory)
        fired = excited >= n.threshold
        for r in n.inhibitory:
            fired = fired & ~values[r]
        values[n.id] = fired
    return values[circuit.output].astype(np.uint8)


def xor_block_depth(circuit: Circuit) -> int:
    """Depth in XOR blocks for circuits from the XOR constructors (2 neurons per block)."""
    return math.ceil(circuit.depth() / 2)
