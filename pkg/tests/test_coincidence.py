import itertools

import numpy as np
import pytest
from hypothesis import given
import hypothesis.strategies as st

from noiselogic.coincidence import (
    DetectorConfig,
    Verdict,
    detect_batch,
    detect_component,
    false_positive_probability,
    run_figure2_demo,
    undecided_probability,
)
from noiselogic.spike_core import (
    ClockConfig,
    LengthMismatchError,
    SpikeTrain,
    Superposition,
    generate_orthogonal_set,
    generate_random_train,
    superpose,
)
from oracles import all_covered_by_enumeration, binomial_sigma, scan_detect

T = SpikeTrain.from_string


def sup_of(text):
    return Superposition(T(text), frozenset())


# -- detect_component -------------------------------------------------------

def test_exact_member_is_present_at_first_spike():
    ortho = generate_orthogonal_set(ClockConfig(200, 0.2, 4), 3)
    sup = superpose([(0, ortho[0]), (1, ortho[1])])
    out = detect_component(ortho[1], sup, DetectorConfig(200))
    assert out.verdict is Verdict.PRESENT
    assert out.decision_step == int(np.argmax(ortho[1].slots))


def test_exact_non_member_is_absent_at_first_spike():
    ortho = generate_orthogonal_set(ClockConfig(200, 0.2, 4), 3)
    sup = superpose([(0, ortho[0]), (1, ortho[1])])
    out = detect_component(ortho[2], sup, DetectorConfig(200))
    assert out.verdict is Verdict.ABSENT
    assert out.decision_step == int(np.argmax(ortho[2].slots))


def test_independent_all_covered():
    out = detect_component(T("1010"), sup_of("1111"), DetectorConfig(4, "independent"))
    assert out.verdict is Verdict.PRESENT
    assert out.evidence_count == 2


def test_independent_uncovered_spike_proves_absence():
    out = detect_component(T("1011"), sup_of("1101"), DetectorConfig(4, "independent"))
    assert (out.verdict, out.decision_step, out.evidence_count) == (Verdict.ABSENT, 2, 2)


def test_silent_reference_is_undecided():
    out = detect_component(T("0000"), sup_of("1111"), DetectorConfig(4))
    assert out.verdict is Verdict.UNDECIDED and out.decision_step is None


def test_window_limits_scan():
    out = detect_component(T("00010"), sup_of("00010"), DetectorConfig(3))
    assert out.verdict is Verdict.UNDECIDED


def test_detect_errors():
    with pytest.raises(LengthMismatchError):
        detect_component(T("01"), sup_of("011"), DetectorConfig(2))
    with pytest.raises(ValueError):
        detect_component(T("01"), sup_of("01"), DetectorConfig(3))
    with pytest.raises(ValueError):
        DetectorConfig(0)


@pytest.mark.parametrize("mode", ["exact_orthogonal", "independent"])
def test_batch_matches_slot_scan_exhaustively(mode):
    w = 5
    patterns = np.array(list(itertools.product((0, 1), repeat=w)), dtype=np.uint8)
    refs = np.repeat(patterns, len(patterns), axis=0)
    sigs = np.tile(patterns, (len(patterns), 1))
    codes, steps, evidence = detect_batch(refs, sigs, mode)
    names = {0: "Undecided", 1: "Present", 2: "Absent"}
    for r, s, c, t, e in zip(refs, sigs, codes, steps, evidence):
        verdict, step, ev = scan_detect(list(r), list(s), mode)
        assert names[int(c)] == verdict
        assert (None if t < 0 else int(t)) == step
        assert int(e) == ev
    # the scalar entry point agrees on a sample
    for r, s in zip(refs[::37], sigs[::37]):
        out = detect_component(SpikeTrain(r), sup_of("".join(map(str, s))), DetectorConfig(w, mode))
        assert (str(out.verdict), out.decision_step, out.evidence_count) == scan_detect(list(r), list(s), mode)


@given(
    ref=st.lists(st.integers(0, 1), min_size=12, max_size=12),
    sig=st.lists(st.integers(0, 1), min_size=12, max_size=12),
    w1=st.integers(1, 12), w2=st.integers(1, 12),
    mode=st.sampled_from(["exact_orthogonal", "independent"]),
)
def test_window_monotonicity(ref, sig, w1, w2, mode):
    small, large = sorted((w1, w2))
    a = detect_component(SpikeTrain(ref), Superposition(SpikeTrain(sig), frozenset()), DetectorConfig(small, mode))
    b = detect_component(SpikeTrain(ref), Superposition(SpikeTrain(sig), frozenset()), DetectorConfig(large, mode))
    if a.verdict is Verdict.UNDECIDED:
        return
    if mode == "exact_orthogonal" or a.verdict is Verdict.ABSENT:
        assert b == a
    else:
        # independent Present is provisional: more slots can only expose an uncovered spike
        assert b.verdict in (Verdict.PRESENT, Verdict.ABSENT)
        if b.verdict is Verdict.ABSENT:
            assert b.decision_step >= small


# -- closed forms -----------------------------------------------------------

def test_undecided_probability_values():
    assert undecided_probability(0.5, 4) == 0.0625
    assert undecided_probability(0.0, 17) == 1.0
    assert undecided_probability(0.1, 20) == pytest.approx(0.12157665459056935, rel=1e-12)


def test_undecided_probability_matches_monte_carlo():
    # independent 20-slot windows, each from its own stream
    trials, p, T_ = 20000, 0.1, 20
    clock = ClockConfig(T_ * trials, p, 13)
    windows = generate_random_train(clock, 0).slots.reshape(trials, T_)
    silent = int(np.count_nonzero(windows.sum(axis=1) == 0))
    expected = undecided_probability(p, T_)
    assert abs(silent - trials * expected) <= 3 * binomial_sigma(trials, expected)


def test_false_positive_probability_values():
    assert false_positive_probability(0.5, 8) == 0.00390625
    assert false_positive_probability(1.0, 5) == 1.0
    q = 1 - 0.7**2
    assert false_positive_probability(q, 3) == pytest.approx(all_covered_by_enumeration(0.3, 2, 3), rel=1e-12)


@pytest.mark.parametrize("args", [(-0.1, 3), (1.5, 3), (0.5, 0), (0.5, 1.5)])
def test_closed_form_domains(args):
    with pytest.raises(ValueError):
        undecided_probability(*args)
    with pytest.raises(ValueError):
        false_positive_probability(*args)


# -- run_figure2_demo -------------------------------------------------------

def test_demo_three_components_matches_membership():
    report = run_figure2_demo(3, {0, 1}, {1, 2}, ClockConfig(200, 0.2, 99), DetectorConfig(200))
    assert len(report.rows) == 6
    for row in report.rows:
        assert row.verdict is not Verdict.UNDECIDED
        assert (row.verdict is Verdict.PRESENT) == row.member


def test_demo_single_component():
    report = run_figure2_demo(1, {0}, set(), ClockConfig(100, 0.5, 1), DetectorConfig(100))
    verdicts = {r.superposition: r.verdict for r in report.rows}
    assert verdicts == {"A": Verdict.PRESENT, "B": Verdict.ABSENT}


def test_demo_one_slot_window_is_mostly_undecided():
    runs = 3000
    undecided = sum(
        run_figure2_demo(1, {0}, set(), ClockConfig(1, 0.1, s), DetectorConfig(1)).rows[0].verdict
        is Verdict.UNDECIDED
        for s in range(runs)
    )
    assert abs(undecided - 0.9 * runs) <= 3 * binomial_sigma(runs, 0.9)


def test_demo_rejects_unknown_component():
    with pytest.raises(ValueError):
        run_figure2_demo(2, {0, 5}, set(), ClockConfig(10, 0.2), DetectorConfig(10))


def test_demo_csv_and_json():
    report = run_figure2_demo(2, {0}, {1}, ClockConfig(50, 0.3, 2), DetectorConfig(50))
    lines = report.to_csv(["seed=2"]).splitlines()
    assert lines[0] == "# seed=2"
    assert lines[1] == "component_id,superposition,verdict,decision_step,evidence_count"
    assert len(lines) == 2 + 4
    assert '"verdict"' in report.to_json()


def test_latency_is_geometric():
    p, runs = 0.2, 20000
    steps = []
    for s in range(0, runs, 1000):
        clock = ClockConfig(400, p, s)
        for label in range(1000):
            ref = generate_random_train(clock, label)
            out = detect_component(ref, sup_of("1" * 400), DetectorConfig(400))
            steps.append(out.decision_step)
    mean = np.mean(steps)
    sd_of_mean = np.sqrt((1 - p) / p**2 / runs)
    assert abs(mean - (1 - p) / p) <= 3 * sd_of_mean
