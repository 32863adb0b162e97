import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from noiselogic.neural_gates import (
    Circuit,
    CircuitError,
    NeuronSpec,
    UnresolvedReferenceError,
    build_xor_fold,
    build_xor_pair,
    run_circuit,
    run_circuit_array,
    step_neuron,
    xor_block_depth,
)
from noiselogic.spike_core import ClockConfig, LengthMismatchError, SpikeTrain, generate_random_train, xor_fold

T = SpikeTrain.from_string
AND_NOT = NeuronSpec("n", ("x",), ("y",), 1)


@pytest.mark.parametrize("x,y,fired", [(0, 0, 0), (1, 0, 1), (0, 1, 0), (1, 1, 0)])
def test_and_not_truth_table(x, y, fired):
    assert step_neuron(AND_NOT, {"x": x, "y": y}) == fired


def test_or_at_threshold_one():
    spec = NeuronSpec("n", ("a", "b"), (), 1)
    assert step_neuron(spec, {"a": 0, "b": 1}) == 1
    assert step_neuron(spec, {"a": 0, "b": 0}) == 0


def test_threshold_two_needs_coincidence():
    spec = NeuronSpec("n", ("a", "b"), (), 2)
    assert [step_neuron(spec, {"a": a, "b": b}) for a, b in itertools.product((0, 1), repeat=2)] == [0, 0, 0, 1]


def test_unresolved_reference():
    with pytest.raises(UnresolvedReferenceError):
        step_neuron(AND_NOT, {"x": 1})


@pytest.mark.parametrize("exc,inh,theta", [((), (), 1), (("a",), (), 0), (("a",), (), 2)])
def test_neuron_spec_invariants(exc, inh, theta):
    with pytest.raises(CircuitError):
        NeuronSpec("n", exc, inh, theta)


def test_circuit_rejects_forward_reference():
    with pytest.raises(CircuitError):
        Circuit(("x",), [NeuronSpec("a", ("b",)), NeuronSpec("b", ("x",))], "a")
    with pytest.raises(CircuitError):
        Circuit(("x",), [NeuronSpec("a", ("x",))], "missing")


def test_xor_pair_truth_table():
    c = build_xor_pair()
    assert [run_circuit(c, {"x": T(str(x)), "y": T(str(y))}).to_string() for x, y in itertools.product("01", repeat=2)] \
        == ["0", "1", "1", "0"]


def test_xor_pair_slotwise():
    out = run_circuit(build_xor_pair(), {"x": T("0101"), "y": T("0011")})
    assert out.to_string() == "0110"


def test_xor_pair_equal_inputs_cancel():
    x = generate_random_train(ClockConfig(500, 0.5, 3), 0)
    assert run_circuit(build_xor_pair(), {"x": x, "y": x}).spike_count() == 0


def test_xor_pair_matches_xor_fold_on_random_trains():
    clock = ClockConfig(2000, 0.5, 12)
    x, y = generate_random_train(clock, 0), generate_random_train(clock, 1)
    assert run_circuit(build_xor_pair(), {"x": x, "y": y}) == xor_fold([x, y])


def test_fold_of_one_is_wire():
    c = build_xor_fold(1)
    assert c.neurons == () and c.output == "x0"
    assert run_circuit(c, {"x0": T("1001")}).to_string() == "1001"


def test_fold_three_examples():
    c = build_xor_fold(3)
    assert run_circuit_array(c, [[1], [1], [0]])[0] == 0
    assert run_circuit_array(c, [[1], [0], [0]])[0] == 1


@pytest.mark.parametrize("n", range(1, 7))
def test_fold_exhaustive_parity(n):
    c = build_xor_fold(n)
    combos = list(itertools.product((0, 1), repeat=n))
    out = run_circuit_array(c, [[combo[i] for combo in combos] for i in range(n)])
    assert list(out) == [sum(combo) % 2 for combo in combos]


@pytest.mark.parametrize("n", range(1, 20))
def test_fold_structure(n):
    c = build_xor_fold(n)
    assert c.xor_blocks == n - 1
    assert len(c.neurons) == 3 * (n - 1)
    assert xor_block_depth(c) == math.ceil(math.log2(n))


def test_fold_four_on_random_trains():
    clock = ClockConfig(10**4, 0.5, 5)
    trains = [generate_random_train(clock, i) for i in range(4)]
    c = build_xor_fold(4)
    assert run_circuit(c, dict(zip(c.inputs, trains))) == xor_fold(trains)


@pytest.mark.parametrize("n", [1, 2, 5])
def test_no_spontaneous_activity(n):
    c = build_xor_fold(n)
    assert run_circuit(c, {p: SpikeTrain.zeros(64) for p in c.inputs}).spike_count() == 0


@settings(max_examples=25)
@given(n=st.integers(1, 6), seed=st.integers(0, 2**32), data=st.data())
def test_slot_permutation_commutes(n, seed, data):
    c = build_xor_fold(n)
    clock = ClockConfig(32, 0.5, seed)
    trains = [generate_random_train(clock, i) for i in range(n)]
    perm = np.array(data.draw(st.permutations(range(32))))
    out = run_circuit(c, dict(zip(c.inputs, trains)))
    permuted = run_circuit(c, {p: SpikeTrain(t.slots[perm]) for p, t in zip(c.inputs, trains)})
    assert permuted == SpikeTrain(out.slots[perm])


def test_run_circuit_errors():
    c = build_xor_pair()
    with pytest.raises(UnresolvedReferenceError):
        run_circuit(c, {"x": T("01")})
    with pytest.raises(LengthMismatchError):
        run_circuit(c, {"x": T("01"), "y": T("011")})


def test_json_roundtrip():
    c = build_xor_fold(5)
    back = Circuit.from_json(c.to_json())
    assert back == c
    doc = c.to_dict()
    assert set(doc) == {"inputs", "neurons", "output"}
    assert set(doc["neurons"][0]) == {"id", "excitatory", "inhibitory", "threshold"}
