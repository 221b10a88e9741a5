import json
import math
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest
from conftest import all_words, binary_zoo, chain_rule_logprob

from seqpred import (
    BudgetExceededError,
    InputError,
    MixturePredictor,
    TargetSequence,
    adversary_sequence,
    bernoulli,
    build_cover_construction,
    exact_dn,
    finite_memory_grid,
    make_gamma_prime_t,
    make_gamma_t,
    make_markov,
    mixture,
    rational_markov_grid,
    replace_regularizer,
    uniform,
)
from seqpred.core import TERNARY, enumerate_prefixes
from seqpred.divergence import exact_dn_series
from seqpred.lab.experiments import cover_pool
from seqpred.predictors import (
    INVERSE_SQUARE_NORMALIZER,
    check_ext,
    check_greedy,
    check_markov_mass,
    check_prediction_bound,
    check_v_mass,
    diagnostic_constant,
    grid_size,
    order_weights,
    simplex_grid,
)

GOLDEN = Path(__file__).parent / "golden"
T = TargetSequence


# -- mixtures -----------------------------------------------------------------

def test_single_component_mixture_is_identity():
    mu = make_markov(1, [["9/10", "1/10"], ["1/5", "4/5"]])
    nu = mixture([mu], [1.0])
    for x in all_words(2, 5):
        assert nu.conditional_next(x).log_probs == pytest.approx(
            mu.conditional_next(x).log_probs, abs=1e-12)


def test_symmetric_bernoulli_mixture():
    nu = mixture([bernoulli(0.25), bernoulli(0.75)], [0.5, 0.5])
    assert nu.conditional_next("").probs[0] == pytest.approx(0.5, abs=1e-15)


def test_mixture_joint_is_weighted_sum():
    comps = [bernoulli(0.25), make_gamma_t(T.squares()), make_markov(1, [[0.5, 0.5], [0.1, 0.9]])]
    w = [0.2, 0.3, 0.5]
    nu = mixture(comps, w)
    for x in all_words(2, 10)[::13]:
        want = sum(wk * 2 ** c.log_prob(x) for wk, c in zip(w, comps))
        assert 2 ** nu.log_prob(x) == pytest.approx(want, rel=1e-9)
        assert nu.log_prob(x) == pytest.approx(chain_rule_logprob(nu, x), abs=1e-9)


def test_mixture_rejects_bad_weights():
    with pytest.raises(InputError):
        mixture([])
    with pytest.raises(InputError):
        MixturePredictor([uniform(2), bernoulli(0.3)], [1.0, 0.0])
    with pytest.raises(InputError):
        MixturePredictor([uniform(2), bernoulli(0.3)], [0.5, 0.6])
    with pytest.raises(InputError):
        mixture([uniform(2), uniform(3)])


def test_mixture_dominance_pointwise():
    zoo = binary_zoo()
    comps = [zoo["bernoulli_0.9"], zoo["gammat"], zoo["markov2"], zoo["deterministic"]]
    nu = mixture(comps, [0.1, 0.2, 0.3, 0.4])
    for n, lp in enumerate_prefixes([nu] + comps, 10):
        for k in range(len(comps)):
            assert np.all(lp[0] >= math.log2(nu.weights[k]) + lp[k + 1] - 1e-9)


def test_mixture_dominance_in_dn():
    comps = [bernoulli(0.2), make_markov(1, [[0.6, 0.4], [0.3, 0.7]]), make_gamma_t(T.const(1))]
    nu = mixture(comps, [0.5, 0.25, 0.25])
    for k, mu in enumerate(comps):
        s = exact_dn_series(mu, nu, range(1, 15))
        assert max(s.values) <= -math.log2(nu.weights[k]) + 1e-9


def test_mixture_dead_history_falls_back_to_uniform():
    nu = mixture([bernoulli(1), bernoulli(0)], [0.5, 0.5])
    assert nu.log_prob("01") == -math.inf
    assert nu.conditional_next("01").probs == pytest.approx([0.5, 0.5])


# -- grids ------------------------------------------------------------------------

def test_simplex_grid():
    assert simplex_grid(2, 2) == [(Fraction(0), Fraction(1)), (Fraction(1, 2), Fraction(1, 2)),
                                  (Fraction(1), Fraction(0))]
    assert len(simplex_grid(3, 3)) == 10


def test_grid_k0_d2_components():
    nu = rational_markov_grid(0, 2)
    assert nu.grid_size == 3
    assert [c.table[0, 0] for c in nu.components] == [0.0, 0.5, 1.0]
    assert nu.weights == pytest.approx([1 / 3] * 3)


def test_grid_counts():
    assert rational_markov_grid(1, 1).grid_size == 4
    assert grid_size(1, 1) == 4
    assert grid_size(2, 8) == 9 ** 4
    assert grid_size(0, 3, 3) == 10
    assert len(rational_markov_grid(0, 3, TERNARY)) == 10
    fm = finite_memory_grid(2, 2)
    assert fm.order_sizes == [3, 9, 81]
    assert len(fm) == 93


def test_grid_budget_error_names_size():
    with pytest.raises(BudgetExceededError, match="6561"):
        rational_markov_grid(2, 8, max_components=1000)


def test_order_weights():
    w = order_weights(2)
    raw = np.array([1.0, 1 / 4, 1 / 9])
    assert w == pytest.approx(raw / raw.sum())


def test_on_grid_bernoulli_bound():
    nu = rational_markov_grid(0, 10)
    mu = bernoulli(Fraction(3, 10))
    s = exact_dn_series(mu, nu, range(1, 15))
    assert max(s.values) <= math.log2(11) + 1e-12


# -- adversary -------------------------------------------------------------------

def test_adversary_against_uniform():
    adv = adversary_sequence(uniform(2), 8)
    assert adv.dn()[-1] == 8.0
    assert exact_dn(adv.as_measure(), uniform(2), 8) == 8.0


def test_adversary_against_bernoulli():
    adv = adversary_sequence(bernoulli(0.1), 20)
    assert adv.text() == "0" * 20
    assert adv.dn() == pytest.approx(np.arange(1, 21) * math.log2(10), abs=1e-12)


def test_adversary_against_gamma_prime():
    rho = make_gamma_prime_t(T.const(0))
    adv = adversary_sequence(rho, 10)
    assert adv.text()[0] == "1"
    want = math.log2(3) + np.arange(10)
    assert adv.dn() == pytest.approx(want, abs=1e-12)
    for n in range(1, 11):
        assert exact_dn(adv.as_measure(), rho, n) == pytest.approx(want[n - 1], abs=1e-12)


def test_adversary_per_step_guarantee():
    suite = list(binary_zoo().values()) + [rational_markov_grid(0, 3, TERNARY)]
    for rho in suite:
        m = len(rho.alphabet)
        adv = adversary_sequence(rho, 64)
        assert np.all(adv.logprobs <= -math.log2(m) + 1e-12)
        assert np.all(adv.dn() >= np.arange(1, 65) * math.log2(m) - 1e-9)


def test_adversary_restricted_symbols():
    adv = adversary_sequence(uniform(3), 5, allowed=[1, 2])
    assert set(adv.text()) <= {"0", "1"}
    with pytest.raises(InputError):
        adversary_sequence(uniform(2), 0)


# -- cover construction -----------------------------------------------------------

def test_cover_single_uniform():
    mu = uniform(2)
    cc = build_cover_construction([(mu, mu)], mu, 6)
    for st in cc.steps:
        assert st.U.all() and st.V.all() and st.T.all()
        assert st.K == 1 and st.selected == [0]
        assert st.log_nu_n == pytest.approx(math.log2(INVERSE_SQUARE_NORMALIZER) + st.log_rho)


def _brute_sets(cc, st, j):
    """U, V, T rebuilt from chain-rule probabilities of every x in X^n."""
    mu, par = cc.pool[j]
    U, V = [], []
    for x in all_words(2, st.n):
        lm = chain_rule_logprob(mu, x)
        lr = chain_rule_logprob(cc.rho, x)
        lp = chain_rule_logprob(par, x)
        U.append(lm >= lr - math.log2(st.n))
        V.append(lp >= lm - st.delta[j])
    U, V = np.array(U), np.array(V)
    return U, V, U & V


@pytest.fixture(scope="module")
def pool_cover():
    pool = cover_pool()
    return build_cover_construction(pool, mixture(pool), 10)


def test_cover_sets_match_definitions(pool_cover):
    cc = pool_cover
    for st in cc.steps[:6]:
        for j in range(len(cc.pool)):
            U, V, Tset = _brute_sets(cc, st, j)
            assert np.array_equal(U, st.U[j])
            assert np.array_equal(V, st.V[j])
            assert np.array_equal(Tset, st.T[j])


def test_cover_greedy_is_argmax(pool_cover):
    cc = pool_cover
    for st in cc.steps:
        prho = np.exp2(st.log_rho)
        covered = np.zeros_like(st.T[0])
        for j, m in zip(st.selected, st.masses):
            gains = [prho[st.T[i] & ~covered].sum() for i in range(len(cc.pool))]
            assert gains[j] == max(gains) and gains.index(max(gains)) == j
            assert m == pytest.approx(gains[j], abs=1e-15)
            covered |= st.T[j]
        assert max(prho[st.T[i] & ~covered].sum() for i in range(len(cc.pool))) == 0.0


def test_cover_audits_hold(pool_cover):
    cc = pool_cover
    for check in (check_markov_mass, check_v_mass, check_ext, check_greedy):
        rows = check(cc)
        assert rows and all(r["ok"] for r in rows), check.__name__


def test_diagnostic_constant_inverse_square():
    for n in (1, 4, 10, 100):
        delta = 2.5
        w = INVERSE_SQUARE_NORMALIZER
        eps = 2.0 ** -math.sqrt(n)
        want = 1 + 3 * math.log2(n) - 2 * math.log2(eps) - 2 * math.log2(w) + delta
        assert diagnostic_constant(n, delta) == pytest.approx(want, abs=1e-12)


def test_cover_prediction_bound(pool_cover):
    cc = pool_cover
    dn = np.array([exact_dn_series(mu, cc.predictor, range(1, 11)).values
                   for mu, _ in cc.pool])
    rows = check_prediction_bound(cc, dn)
    assert all(r["ok"] for r in rows)


def test_cover_predictor_weights(pool_cover):
    cc = pool_cover
    nu = cc.predictor
    assert nu.components[0].to_spec() == uniform(2).to_spec()
    assert nu.weights[0] == pytest.approx(0.5)
    assert 0.0 <= cc.truncation_deficit < 1.0


def test_cover_audit_golden(pool_cover):
    got = json.loads(json.dumps(pool_cover.audit()))
    want = json.loads((GOLDEN / "cover_audit_pool6_h10.json").read_text())
    assert len(got["steps"]) == len(want["steps"]) == 10
    for a, b in zip(got["steps"], want["steps"]):
        for key in ("n", "U_size", "V_size", "T_size", "selected", "K"):
            assert a[key] == b[key], key
        assert a["masses"] == pytest.approx(b["masses"], abs=1e-12)
        assert a["delta"] == pytest.approx(b["delta"], abs=1e-12)
    assert got["predictor_weights"] == pytest.approx(want["predictor_weights"], abs=1e-12)


def test_cover_rejects_empty_pool():
    with pytest.raises(InputError):
        build_cover_construction([], uniform(2), 3)


# -- regularizer replacement ---------------------------------------------------------

def test_regularizer_single_measure_pool():
    mu = uniform(2)
    cc = build_cover_construction([mu], mu, 5)
    nu = replace_regularizer(cc, [mu])
    assert len(nu.regularizer) == 1
    assert nu.regularizer.components[0] is mu
    assert nu.audit["lower_bound_ok"]


def test_regularizer_lower_bound_n6():
    pool = [bernoulli("1/4"), bernoulli("3/4")]
    cc = build_cover_construction(pool, mixture(pool), 6)
    nu = replace_regularizer(cc)
    reg = nu.regularizer
    w6 = INVERSE_SQUARE_NORMALIZER / 36
    for x in all_words(2, 6):
        best = max(2 ** p.log_prob(x) for p in pool)
        assert 2 ** reg.log_prob(x) >= 0.5 * w6 * 2 ** -6 * best
    assert nu.audit["lower_bound_ok"]


def test_regularizer_full_support_pool_charges_everything():
    pool = [uniform(2), make_gamma_t(T.const(0))]
    cc = build_cover_construction(pool, mixture(pool), 5)
    reg = replace_regularizer(cc).regularizer
    assert all(reg.log_prob(x) > -math.inf for x in all_words(2, 5))


def test_regularizer_rejects_empty_pool():
    mu = uniform(2)
    cc = build_cover_construction([mu], mu, 3)
    with pytest.raises(InputError):
        replace_regularizer(cc, [])
