"""Brute-force reference computations, written independently of the package."""
import itertools
import math


def bernoulli_weight(bits, p):
    ones = sum(bits)
    return p**ones * (1 - p) ** (len(bits) - ones)


def parity(bits):
    return sum(bits) % 2


def agreement_by_enumeration(p, a, b):
    """P(hyperspace slots of strings a and b agree), enumerating every bank slot value.

    The bank slot is a tuple of 2N bits ordered (0,0),(0,1),(1,0),(1,1),...
    """
    n = len(a)
    total = 0.0
    for bank in itertools.product((0, 1), repeat=2 * n):
        alice = parity(bank[2 * i + a[i]] for i in range(n))
        bob = parity(bank[2 * i + b[i]] for i in range(n))
        if alice == bob:
            total += bernoulli_weight(bank, p)
    return total


def all_covered_by_enumeration(p, n_members, n_spikes):
    """P(every one of n_spikes reference slots is covered by the OR of independent members)."""
    total = 0.0
    for states in itertools.product((0, 1), repeat=n_members * n_spikes):
        slots = [states[s * n_members:(s + 1) * n_members] for s in range(n_spikes)]
        if all(any(slot) for slot in slots):
            total += bernoulli_weight(states, p)
    return total


def scan_detect(ref, sig, mode):
    """Plain-Python slot scan; returns (verdict, decision_step, evidence_count)."""
    seen = 0
    for t, (r, s) in enumerate(zip(ref, sig)):
        if not r:
            continue
        seen += 1
        if mode == "exact_orthogonal":
            return ("Present" if s else "Absent"), t, 1
        if not s:
            return "Absent", t, seen
    if seen == 0:
        return "Undecided", None, 0
    return "Present", len(ref) - 1, seen


def binomial_sigma(n, p):
    return math.sqrt(n * p * (1 - p))
