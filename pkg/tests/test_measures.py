import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from conftest import all_words

from seqpred import (
    InputError,
    SparseZerosPredictor,
    TargetSequence,
    bernoulli,
    make_gamma_prime_t,
    make_gamma_t,
    make_hidden_chain,
    make_markov,
    uniform,
)
from seqpred.core import enumerate_prefixes
from seqpred.measures import HiddenChainMeasure, MarkovError, stationary_blocks

T = TargetSequence


# -- target sequences ---------------------------------------------------------

def test_target_kinds():
    assert T.const(1).first(4).tolist() == [1, 1, 1, 1]
    assert T.periodic([0, 1, 1]).first(7).tolist() == [0, 1, 1, 0, 1, 1, 0]
    sq = T.squares().first(17)
    assert [i + 1 for i in np.flatnonzero(sq == 0)] == [1, 4, 9, 16]
    assert T.prefix([1, 0], fill=1).first(4).tolist() == [1, 0, 1, 1]
    assert T.random(5).first(100).tolist() == T.random(5).first(5000)[:100].tolist()


def test_target_spec_round_trip():
    for text in ["const:1", "periodic:0110", "squares:0:1", "squares:-1:2", "random:7",
                 "prefix:0101:1"]:
        t = T.parse(text)
        assert T.parse(t.to_spec()) == t
    with pytest.raises(InputError):
        T.parse("spiral:3")


# -- i.i.d. and Markov ---------------------------------------------------------

def test_bernoulli_parameters():
    mu = bernoulli("1/3")
    assert mu.probs == pytest.approx([1 / 3, 2 / 3])
    with pytest.raises(InputError):
        bernoulli(1.5)
    with pytest.raises(InputError):
        bernoulli("x")


def test_markov_order0_is_iid():
    mu = make_markov(0, [[0.5, 0.5]])
    assert mu.log_prob("0110") == -4.0


def test_markov_symmetric_stationary():
    mu = make_markov(1, [[0.9, 0.1], [0.1, 0.9]])
    # 2x2 fixed point: pi0 * 0.1 = pi1 * 0.1 and pi0 + pi1 = 1
    assert mu.block == pytest.approx([0.5, 0.5], abs=1e-12)


def test_markov_stationarity_equations():
    for table in ([[0.9, 0.1], [0.3, 0.7]],
                  [[0.7, 0.3], [0.5, 0.5], [0.2, 0.8], [0.4, 0.6]]):
        k = int(math.log2(len(table)))
        mu = make_markov(k, table)
        pi = mu.block
        assert pi @ mu.block_transition() == pytest.approx(pi, abs=1e-10)
        # P(x_{2..k+2} = w) = P(x_{1..k+1} = w)
        *_, (_, lp) = enumerate_prefixes([mu], k + 2)
        probs = np.exp2(lp[0])
        shifted = probs.reshape(2, -1).sum(axis=0)  # law of x_2..x_{k+2}
        head = probs.reshape(-1, 2).sum(axis=1)  # law of x_1..x_{k+1}
        assert shifted == pytest.approx(head, abs=1e-10)


def test_markov_rejects_bad_rows_and_nonergodic():
    with pytest.raises(InputError, match="context"):
        make_markov(1, [[0.5, 0.6], [0.5, 0.5]])
    with pytest.raises(MarkovError, match="closed class"):
        make_markov(1, [[1, 0], [0, 1]])
    # several closed classes are fine when the per-class laws are averaged
    from seqpred.measures import MarkovMeasure
    mu = MarkovMeasure(1, [[1, 0], [0, 1]], "stationary-mixed")
    assert mu.block == pytest.approx([0.5, 0.5])


def test_markov_memory():
    for k in (1, 2, 3):
        rng = np.random.default_rng(k)
        raw = rng.random((2 ** k, 2)) + 0.05
        mu = make_markov(k, raw / raw.sum(axis=1, keepdims=True))
        for x in itertools.product((0, 1), repeat=k + 3):
            ref = mu.conditional_next(x).log_probs
            for j in range(3):  # flip a symbol more than k steps back
                y = list(x)
                y[j] = 1 - y[j]
                if mu.log_prob(y) > -math.inf:
                    assert mu.conditional_next(y).log_probs == pytest.approx(ref, abs=1e-12)


def test_stationary_blocks_matches_power_iteration():
    mu = make_markov(2, [[0.7, 0.3], [0.5, 0.5], [0.2, 0.8], [0.4, 0.6]])
    P = mu.block_transition()
    v = np.full(4, 0.25)
    for _ in range(2000):
        v = v @ P
    assert stationary_blocks(mu) == pytest.approx(v, abs=1e-12)


# -- sequence-biased families ---------------------------------------------------

def test_gamma_t_examples():
    g = make_gamma_t(T.const(0))
    assert g.log_prob("000") == -2.0
    assert g.conditional_next("1").probs == pytest.approx([0.5, 0.5])
    assert g.log_prob("") == 0.0


def test_gamma_t_target_mass():
    t = T.random(1)
    g = make_gamma_t(t)
    for n in range(1, 61):
        assert 2 ** g.log_prob(t.first(n)) * (n + 1) == pytest.approx(1.0, abs=1e-9)


def test_gamma_prime_examples():
    g = make_gamma_prime_t(T.const(1))
    assert g.log_prob("11") == pytest.approx(2 * math.log2(2 / 3), abs=1e-12)
    assert sum(2 ** g.log_prob(w) for w in all_words(2, 2)) == pytest.approx(1.0)
    assert g.conditional_next("0").probs == pytest.approx([0.5, 0.5])
    t = T.squares()
    g = make_gamma_prime_t(t)
    for n in range(1, 61):
        assert g.log_prob(t.first(n)) == pytest.approx(n * math.log2(2 / 3), abs=1e-9)


# -- hidden chain -------------------------------------------------------------------

def test_hidden_chain_stationary_law():
    pi = HiddenChainMeasure.stationary_law(51)
    P = np.zeros((51, 51))
    for k in range(51):
        P[k, 0] = 1 / 3
        if k + 1 < 51:
            P[k, k + 1] = 2 / 3
    # state 0 is fed by the whole (truncated) tail, so check it analytically
    assert (pi @ P)[1:] == pytest.approx(pi[1:], abs=1e-12)
    assert pi[0] == pytest.approx(1 / 3)


def test_hidden_chain_examples():
    mu = make_hidden_chain(T.const(1))
    assert mu.conditional_next("").probs[0] == pytest.approx(1 / 3, abs=1e-15)
    assert mu.conditional_next("a").probs == pytest.approx([1 / 3, 0, 2 / 3], abs=1e-15)


def _hidden_brute(target, x, s_max=60):
    """Forward filter over the latent chain truncated at s_max + len(x)."""
    S = s_max + len(x) + 2
    pi = np.array([(1 / 3) * (2 / 3) ** k for k in range(S)])
    t = target.first(S + 1)
    alpha = pi.copy()
    for i, a in enumerate(x):
        emit = np.array([1.0 if (k == 0 and a == 0) or (k > 0 and a == t[k - 1] + 1) else 0.0
                         for k in range(S)])
        alpha = alpha * emit
        if i + 1 < len(x):
            nxt = np.zeros(S)
            nxt[0] = alpha.sum() / 3
            nxt[1:] = alpha[:-1] * 2 / 3
            alpha = nxt
    return alpha.sum()


def test_hidden_chain_against_forward_filter():
    target = T.periodic([0, 1, 1])
    mu = make_hidden_chain(target, 60)
    for x in itertools.product(range(3), repeat=5):
        want = _hidden_brute(target, x)
        got = 2 ** mu.log_prob(x)
        assert got == pytest.approx(want, abs=1e-9)


def test_hidden_chain_a_marginal_exactly_one_third():
    mu = make_hidden_chain(T.random(2))
    for n, lp in enumerate_prefixes([mu], 8):
        if n == 0:
            continue
        idx = np.arange(lp.shape[1])
        pa = np.exp2(lp[0][idx % 3 == 0]).sum()
        assert pa == pytest.approx(1 / 3, abs=1e-9)


def test_hidden_chain_a_conditional_exhaustive():
    mu = make_hidden_chain(T.periodic([1, 0]))
    words = all_words(3, 6)
    for x in words[::7]:
        if mu.log_prob(x) > -math.inf:
            assert mu.conditional_next(x).probs[0] == pytest.approx(1 / 3, abs=1e-12)


# -- sparse zeros -----------------------------------------------------------------

def test_sparse_zeros_rule():
    nu = SparseZerosPredictor()
    assert nu.conditional_next("").probs == pytest.approx([1.0, 0.0])
    assert nu.conditional_next("0111").probs == pytest.approx([1 / 5, 4 / 5])
    assert nu.log_prob("1") == -math.inf


def test_fraction_parameters_round_trip():
    mu = bernoulli(Fraction(3, 8))
    assert mu.to_spec() == {"family": "bernoulli", "p": "3/8"}
    assert uniform(3).to_spec()["family"] == "iid"
