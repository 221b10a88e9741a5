import itertools
import sys
import math

import numpy as np
import pytest

from seqpred import (
    DeterministicMeasure,
    SparseZerosPredictor,
    TargetSequence,
    bernoulli,
    make_gamma_prime_t,
    make_gamma_t,
    make_hidden_chain,
    make_markov,
    mixture,
    rational_markov_grid,
    uniform,
)

T = TargetSequence


def binary_zoo():
    """One or more members of every binary measure family."""
    return {
        "uniform": uniform(2),
        "bernoulli_0.9": bernoulli(0.9),
        "bernoulli_1/3": bernoulli("1/3"),
        "markov1": make_markov(1, [["9/10", "1/10"], ["1/5", "4/5"]]),
        "markov2": make_markov(2, [[0.7, 0.3], [0.5, 0.5], [0.2, 0.8], [0.4, 0.6]]),
        "markov1_start": make_markov(1, [[1, 0], [0.5, 0.5]], stationary=False),
        "deterministic": DeterministicMeasure(T.periodic([0, 1, 1])),
        "gammat": make_gamma_t(T.squares()),
        "gammaprime": make_gamma_prime_t(T.random(3)),
        "sqrtzeros": SparseZerosPredictor(),
        "mixture": mixture([bernoulli(0.25), make_gamma_t(T.const(1)), uniform(2)],
                           [0.5, 0.25, 0.25]),
        "grid_k1_d2": rational_markov_grid(1, 2),
    }


@pytest.fixture(scope="session")
def zoo():
    return binary_zoo()


@pytest.fixture(scope="session")
def hidden():
    return make_hidden_chain(T.periodic([0, 1, 1]), 30)


def chain_rule_logprob(mu, x):
    """log2 mu(x) as a plain sum of conditional_next evaluations."""
    total = 0.0
    for i in range(len(x)):
        total += mu.conditional_next(x[:i])[x[i]]
    return total


def all_words(m, n):
    return [tuple(w) for w in itertools.product(range(m), repeat=n)]


def brute_dn(mu, rho, n):
    """Sum over X^n of mu(x) log2(mu(x)/rho(x)) from chain-rule probabilities."""
    total = 0.0
    for x in all_words(len(mu.alphabet), n):
        lm = chain_rule_logprob(mu, x)
        if lm == -math.inf:
            continue
        lr = chain_rule_logprob(rho, x)
        if lr == -math.inf:
            return math.inf
        total += 2.0 ** lm * (lm - lr)
    return total


def binary_entropy(p):
    return -sum(q * math.log2(q) for q in (p, 1 - p) if q > 0)


def seeded_rng(seed=0):
    return np.random.default_rng(seed)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "REPORT", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
