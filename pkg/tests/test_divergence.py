import csv
import io
import json
import math

import numpy as np
import pytest
from conftest import binary_entropy, binary_zoo, brute_dn

from seqpred import (
    BudgetExceededError,
    DeterministicMeasure,
    InputError,
    TargetSequence,
    bernoulli,
    exact_dn,
    make_gamma_prime_t,
    make_gamma_t,
    make_markov,
    mixture,
    uniform,
)
from seqpred.divergence import (
    DivergenceSeries,
    d_inf,
    d_inf_markov_bound,
    d_inf_markov_envelope,
    d_inf_series,
    exact_dn_series,
    kl_loss_estimate,
    mc_dn,
    mc_dn_series,
    tv_conditional,
    tv_dichotomy_trajectories,
    tv_series,
)

T = TargetSequence


def random_markov(rng, k, m=2):
    raw = rng.random((m ** k, m)) + 0.05
    return make_markov(k, raw / raw.sum(axis=1, keepdims=True))


# -- exact d_n ---------------------------------------------------------------------

def test_dn_forms_agree_with_brute_force():
    zoo = binary_zoo()
    names = list(zoo)
    for i, a in enumerate(names):
        b = names[(i + 5) % len(names)]
        mu, rho = zoo[a], zoo[b]
        for n in (1, 3, 6):
            want = brute_dn(mu, rho, n)
            p = exact_dn(mu, rho, n, "product")
            c = exact_dn(mu, rho, n, "conditional")
            if math.isinf(want):
                assert math.isinf(p) and math.isinf(c), (a, b, n)
            else:
                assert p == pytest.approx(want, abs=1e-9), (a, b, n)
                assert c == pytest.approx(want, abs=1e-9), (a, b, n)


def test_dn_self_is_zero(zoo):
    for mu in zoo.values():
        assert exact_dn(mu, mu, 8) == 0.0
        assert exact_dn(mu, mu, 8, "conditional") == 0.0


def test_dn_deterministic_vs_uniform():
    det = DeterministicMeasure(T.random(3))
    assert exact_dn_series(det, uniform(2), range(1, 11)).values == list(map(float, range(1, 11)))


def test_dn_deterministic_vs_gamma_t():
    t = T.random(4)
    s = exact_dn_series(DeterministicMeasure(t), make_gamma_t(t), range(1, 21))
    assert s.at(7) == pytest.approx(3.0, abs=1e-12)
    for n, v in zip(s.horizons, s.values):
        assert v == pytest.approx(math.log2(n + 1), abs=1e-9)


def test_dn_gamma_t_vs_uniform_small_n():
    t = T.random(5)
    s = exact_dn_series(make_gamma_t(t), uniform(2), range(1, 13))
    assert max(s.values) <= 1.0


def test_dn_nondecreasing_with_full_support():
    rng = np.random.default_rng(0)
    for _ in range(5):
        mu, rho = random_markov(rng, 1), random_markov(rng, 2)
        v = exact_dn_series(mu, rho, range(1, 11)).values
        assert all(b >= a - 1e-12 for a, b in zip(v, v[1:]))


def test_dn_equal_restriction_is_zero():
    # same law of the first 2 symbols, different afterwards: d_2 = 0 < d_3
    mu = make_markov(2, [[0.5, 0.5]] * 4, initial=[0.25] * 4)
    rho = make_markov(2, [[0.5, 0.5], [0.9, 0.1], [0.5, 0.5], [0.5, 0.5]], initial=[0.25] * 4)
    assert exact_dn(mu, rho, 2) == 0.0
    assert exact_dn(mu, rho, 3) > 0.0


def test_dn_infinite_with_witness():
    s = exact_dn_series(uniform(2), bernoulli(1), [1, 2, 3])
    assert s.values == [math.inf] * 3
    assert s.witness == "1"
    s = exact_dn_series(uniform(2), bernoulli(1), [4], form="conditional")
    assert s.witness == "1"


def test_dn_budget():
    with pytest.raises(BudgetExceededError, match="mc_dn"):
        exact_dn(uniform(2), bernoulli(0.3), 12, budget=8)
    # pruning: a deterministic mu keeps one live prefix at any n
    assert exact_dn(DeterministicMeasure(T.const(0)), uniform(2), 200, budget=8) == 200.0


def test_dn_input_errors():
    with pytest.raises(InputError):
        exact_dn(uniform(2), uniform(3), 3)
    with pytest.raises(InputError):
        exact_dn(uniform(2), uniform(2), 0)


# -- Monte Carlo ---------------------------------------------------------------------

def test_mc_self_zero():
    est = mc_dn(uniform(2), uniform(2), 50, 100, seed=1)
    assert est.estimate == 0.0 and est.stderr == 0.0


def test_mc_bernoulli_pair():
    est = mc_dn(bernoulli(0.75), bernoulli(0.5), 100, 10_000, seed=2)
    want = 100 * (1 - binary_entropy(0.75))
    assert abs(est.estimate - want) <= 3 * est.stderr + 1e-12
    # the per-step conditional KL is constant along every path, so stderr is ~0
    assert est.estimate == pytest.approx(want, abs=1e-9)
    j = mc_dn(bernoulli(0.75), bernoulli(0.5), 100, 10_000, seed=2, estimator="joint")
    assert abs(j.estimate - want) <= 3 * j.stderr


def test_mc_agrees_with_exact():
    rng = np.random.default_rng(11)
    zoo = list(binary_zoo().values())
    cases = 0
    for i in range(40):
        mu = zoo[rng.integers(len(zoo))]
        rho = mixture([zoo[rng.integers(len(zoo))], uniform(2)])
        n = int(rng.integers(2, 11))
        exact = exact_dn(mu, rho, n)
        for est in ("conditional", "joint"):
            m = mc_dn(mu, rho, n, 400, seed=i, estimator=est)
            assert abs(m.estimate - exact) <= 4 * m.stderr + 1e-9, (i, est)
        cases += 1
        if cases == 20:
            break


def test_mc_reproducible_and_chunk_independent():
    mu, rho = make_markov(1, [[0.7, 0.3], [0.2, 0.8]]), bernoulli(0.4)
    a = mc_dn_series(mu, rho, [5, 20], 300, seed=9, chunk=1000)
    b = mc_dn_series(mu, rho, [5, 20], 300, seed=9, chunk=7, jobs=3)
    assert a.values == b.values and a.stderr == b.stderr


def test_mc_infinite_witness():
    est = mc_dn(uniform(2), bernoulli(1), 5, 10, seed=0)
    assert est.estimate == math.inf
    assert est.witness is not None and est.witness.endswith("1")
    assert bernoulli(1).log_prob(est.witness) == -math.inf


def test_mc_needs_two_samples():
    with pytest.raises(InputError):
        mc_dn(uniform(2), uniform(2), 3, 1, seed=0)


# -- total variation ------------------------------------------------------------------

def test_tv_examples():
    assert tv_conditional(bernoulli(0.5), bernoulli(0.25), "", 1) == pytest.approx(0.25)
    assert tv_conditional(uniform(2), uniform(2), "0101", 6) == 0.0
    assert tv_conditional(uniform(2), bernoulli(1), "01", 3) == 1.0


def test_tv_brute_force():
    mu, rho = make_markov(1, [[0.7, 0.3], [0.2, 0.8]]), make_gamma_t(T.const(0))
    hist = (0, 0, 1)
    want = 0.0
    for y in np.ndindex(2, 2, 2):
        x = hist + tuple(y)
        pm = 2 ** (mu.log_prob(x) - mu.log_prob(hist))
        pr = 2 ** (rho.log_prob(x) - rho.log_prob(hist))
        want += abs(pm - pr)
    assert tv_conditional(mu, rho, hist, 3) == pytest.approx(want / 2, abs=1e-12)


def test_tv_monotone_in_h_and_symmetric():
    rng = np.random.default_rng(3)
    for _ in range(5):
        mu, rho = random_markov(rng, 1), random_markov(rng, 2)
        hist = tuple(rng.integers(0, 2, 4))
        vals = [tv_conditional(mu, rho, hist, h) for h in range(0, 9)]
        assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))
        assert all(0.0 <= v <= 1.0 for v in vals)
        assert tv_conditional(rho, mu, hist, 5) == pytest.approx(vals[5], abs=1e-15)


def test_tv_series():
    s = tv_series(uniform(2), bernoulli(0.25), "0000", [0, 2, 4], h=2)
    assert s.horizons == [0, 2, 4] and len(s.values) == 3


def test_dichotomy_identical_measures():
    r = tv_dichotomy_trajectories(uniform(2), uniform(2), 50, 4, 20, seed=0)
    assert np.all(r.tv == 0.0)
    assert r.fraction_to_0 == 1.0


def test_dichotomy_absolutely_continuous_small():
    mu = uniform(2)
    rho = mixture([uniform(2), bernoulli(0.25)])
    r = tv_dichotomy_trajectories(mu, rho, 400, 6, 40, seed=1)
    assert r.fraction_to_0 >= 0.9
    lo, hi = r.ci_to_1
    assert 0.0 <= lo <= r.fraction_to_1 <= hi <= 1.0


def test_dichotomy_singular_exchangeable_lookahead():
    # the depth-h cylinder TV between B(1/2) and B(1/4) is 1 - (sum of overlaps),
    # which approaches 1 only as h grows; at h = 64 it exceeds 0.9
    r = tv_dichotomy_trajectories(uniform(2), bernoulli(0.25), 200, 64, 50, seed=2,
                                  lookahead="exchangeable")
    assert r.fraction_to_1 == 1.0


def test_exchangeable_lookahead_matches_cylinders():
    mu = uniform(2)
    rho = mixture([uniform(2), bernoulli(0.25)])
    a = tv_dichotomy_trajectories(mu, rho, 30, 6, 10, seed=5)
    b = tv_dichotomy_trajectories(mu, rho, 30, 6, 10, seed=5, lookahead="exchangeable")
    assert a.tv == pytest.approx(b.tv, abs=1e-12)


# -- d_inf ------------------------------------------------------------------------------

def test_dinf_examples():
    assert d_inf(uniform(2), uniform(2), 6) == 0.0
    assert d_inf(bernoulli(0.5), bernoulli(0.25), 10) == pytest.approx(1.0, abs=1e-12)
    assert d_inf_markov_bound(bernoulli(0.5), bernoulli(0.25)) == pytest.approx(1.0)


def test_dinf_infinite_witness():
    vals, witness = d_inf_series(uniform(2), bernoulli(1), 4)
    assert vals == [math.inf] * 4 and witness == "1"


def test_dinf_metric_properties():
    rng = np.random.default_rng(4)
    for _ in range(10):
        a, b, c = (random_markov(rng, int(rng.integers(0, 3))) for _ in range(3))
        n = 8
        ab, ba = d_inf(a, b, n), d_inf(b, a, n)
        assert ab == pytest.approx(ba, abs=1e-12)
        assert d_inf(a, c, n) <= ab + d_inf(b, c, n) + 1e-12


def test_dinf_envelope_dominates():
    rng = np.random.default_rng(5)
    for _ in range(10):
        k = int(rng.integers(0, 3))
        a, b = random_markov(rng, k), random_markov(rng, k)
        assert d_inf(a, b, 10) <= d_inf_markov_envelope(a, b, 10) + 1e-12
    with pytest.raises(InputError):
        d_inf_markov_bound(random_markov(rng, 1), random_markov(rng, 2))


def test_dn_dinf_sandwich():
    rng = np.random.default_rng(6)
    for _ in range(5):
        a, b = random_markov(rng, 1), random_markov(rng, 2)
        dn = exact_dn_series(a, b, range(1, 13)).values
        dinf, _ = d_inf_series(a, b, 12)
        for n in range(1, 13):
            assert dn[n - 1] / n <= dinf[n - 1] + 1e-12
            assert dn[n - 1] / n <= max(dinf[n - 1:]) + 1e-12


# -- loss proxy and serialization ----------------------------------------------------------

def test_kl_loss_proxy_examples():
    t = T.random(8)
    det = DeterministicMeasure(t)
    hs = [2 ** j for j in range(1, 11)]  # ten horizons, so the last tenth is n = 1024
    est = kl_loss_estimate(exact_dn_series(det, make_gamma_prime_t(t), hs))
    assert est.value == pytest.approx(math.log2(1.5), abs=1e-12)
    est = kl_loss_estimate(exact_dn_series(det, make_gamma_t(t), hs))
    assert est.value == pytest.approx(math.log2(1025) / 1024, abs=1e-12)
    assert all(b < a for a, b in zip(est.values_over_n[1:], est.values_over_n[2:]))
    assert "proxy" in est.label
    assert kl_loss_estimate(exact_dn_series(det, det, [1, 2, 3])).value == 0.0
    with pytest.raises(InputError):
        kl_loss_estimate(exact_dn_series(det, det, [1, 2]))


def test_series_csv_and_json():
    s = mc_dn_series(bernoulli(0.3), uniform(2), [2, 4], 50, seed=3)
    rows = list(csv.DictReader(io.StringIO(s.to_csv())))
    assert list(rows[0]) == ["n", "value", "value_over_n", "stderr", "mode", "seed"]
    assert rows[1]["n"] == "4" and rows[1]["mode"] == "monte-carlo" and rows[1]["seed"] == "3"
    assert float(rows[1]["value"]) == s.values[1]
    back = DivergenceSeries.from_dict(json.loads(s.to_json()))
    assert back == s
    inf = exact_dn_series(uniform(2), bernoulli(1), [2])
    assert json.loads(inf.to_json())["values"] == ["inf"]
    assert DivergenceSeries.from_dict(json.loads(inf.to_json())).values == [math.inf]


def test_series_stderr_iff_monte_carlo():
    with pytest.raises(InputError):
        DivergenceSeries([1], [0.0], "exact", stderr=[0.0])
    with pytest.raises(InputError):
        DivergenceSeries([1], [0.0], "monte-carlo")
