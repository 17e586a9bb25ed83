import math
from fractions import Fraction

import numpy as np
import pytest

from unipredict.decision import LossSpec, PeriodicMask, Predictor, error_loss, weather_loss
from unipredict.evaluate import (
    convergence_sum,
    evaluate,
    exact_entropy,
    exact_expected_loss,
    mc_expected_loss,
    mc_losses,
    standard_schemes,
)
from unipredict.exceptions import HorizonTooLarge, ModelNotInClass
from unipredict.measures import BernoulliIID, DeterministicSeq, MarkovBinary
from unipredict.mixture import ModelClass

import oracles

ONES = DeterministicSeq("", "1")
DET_PAIR = ModelClass([DeterministicSeq("", "0"), ONES])
B13, B23 = BernoulliIID(1 / 3), BernoulliIID(2 / 3)
BERN_PAIR = ModelClass([B13, B23])


def test_informed_deterministic_has_zero_loss():
    assert exact_expected_loss(ONES, Predictor(ONES, error_loss()), 5).total == 0.0


def test_informed_bernoulli_closed_form():
    mu = BernoulliIID(0.9)
    tr = exact_expected_loss(mu, Predictor(mu, error_loss()), 10)
    assert tr.total == pytest.approx(1.0, rel=1e-12)
    np.testing.assert_allclose(tr.cumulative, 0.1 * np.arange(1, 11), rtol=1e-12)


def test_universal_det_pair_loss_matches_oracle():
    ref = oracles.expected_loss(
        oracles.det("", "1"),
        oracles.mixture([oracles.det("", "0"), oracles.det("", "1")]),
        (0, 1, 1, 0),
        5,
    )
    assert ref == 1
    assert exact_expected_loss(ONES, Predictor(DET_PAIR, error_loss()), 5).total == 1.0


@pytest.mark.parametrize("table", [(0, 1, 1, 0), (0.0, 0.3, 1.0, 0.1), (0.2, 0.9, 0.6, 0.1)])
def test_bernoulli_pair_losses_match_fraction_oracle(table):
    ftable = tuple(Fraction(str(v)) for v in table)
    mu_o = oracles.bern(Fraction(2, 3))
    xi_o = oracles.mixture([oracles.bern(Fraction(1, 3)), mu_o])
    loss = LossSpec.static(table, l_min=0, l_max=1)
    rep = evaluate(B23, 7, BERN_PAIR, standard_schemes(B23, BERN_PAIR, loss))
    assert rep.L("xi") == pytest.approx(float(oracles.expected_loss(mu_o, xi_o, ftable, 7)), rel=1e-12)
    assert rep.L("mu") == pytest.approx(float(oracles.expected_loss(mu_o, mu_o, ftable, 7)), rel=1e-12)


def test_markov_class_matches_oracle():
    m1, m2 = MarkovBinary(1, (0.2, 0.9)), MarkovBinary(1, (0.6, 0.3))
    M = ModelClass([m1, m2, BernoulliIID(0.5)])
    o1 = oracles.markov1(Fraction(1, 5), Fraction(9, 10))
    o2 = oracles.markov1(Fraction(3, 5), Fraction(3, 10))
    xi_o = oracles.mixture([o1, o2, oracles.bern(Fraction(1, 2))])
    rep = evaluate(m1, 6, M, standard_schemes(m1, M, error_loss()))
    H, S = oracles.entropy_and_sq(o1, xi_o, 6)
    assert rep.H[-1] == pytest.approx(H, rel=1e-10)
    assert rep.S[-1] == pytest.approx(S, rel=1e-10)
    assert rep.L("xi") == pytest.approx(float(oracles.expected_loss(o1, xi_o, (0, 1, 1, 0), 6)), rel=1e-12)


def test_entropy_examples():
    h, H = exact_entropy(B23, ModelClass([B23]), 6)
    assert H == 0.0 and not np.any(h)
    h, H = exact_entropy(ONES, DET_PAIR, 6)
    assert h[0] == pytest.approx(math.log(2)) and np.all(h[1:] == 0)
    assert H == pytest.approx(0.693147, abs=1e-6)
    _, H1 = exact_entropy(B23, BERN_PAIR, 1)
    assert H1 == pytest.approx((2 / 3) * math.log(4 / 3) + (1 / 3) * math.log(2 / 3), rel=1e-12)
    assert H1 == pytest.approx(0.056633, abs=5e-7)


def test_convergence_sum_examples():
    assert convergence_sum(B23, ModelClass([B23]), 5) == 0.0
    assert convergence_sum(ONES, DET_PAIR, 1) == pytest.approx(0.5)
    assert convergence_sum(B23, BERN_PAIR, 1) == pytest.approx(2 * (1 / 6) ** 2, rel=1e-12)


def test_entropy_needs_mu_in_class():
    with pytest.raises(ModelNotInClass):
        exact_entropy(BernoulliIID(0.5), BERN_PAIR, 3)


def test_horizon_cap():
    with pytest.raises(HorizonTooLarge):
        exact_expected_loss(B23, Predictor(B23, error_loss()), 21)
    assert exact_expected_loss(ONES, Predictor(ONES, error_loss()), 25, exact_cap=30).total == 0.0


def test_deterministic_environment_is_linear_cost():
    rep = evaluate(ONES, 20, DET_PAIR, standard_schemes(ONES, DET_PAIR, error_loss()))
    assert rep.n_prefixes == 20
    assert rep.n_pruned == 19


def test_convergence_chain_and_monotonicity(env):
    loss = env.require_loss()
    n = 14 if env.env_id != "mixed" else 12
    rep = evaluate(env.mu, n, env.model_class, standard_schemes(env.mu, env.model_class, loss))
    H, S = rep.H, rep.S
    assert np.all(S <= H + 1e-9)
    assert np.all(H <= rep.d_mu + 1e-9)
    assert np.all(np.diff(H) >= -1e-15)
    assert np.all(np.diff(S) >= -1e-15)


def test_informed_scheme_is_optimal(env):
    loss = env.require_loss()
    schemes = standard_schemes(env.mu, env.model_class, loss)
    for i, m in enumerate(env.model_class.models):
        schemes[f"model{i}"] = Predictor(m, loss)
    schemes["always0"] = Predictor(BernoulliIID(0.0), loss)
    schemes["always1"] = Predictor(BernoulliIID(1.0), loss)
    rep = evaluate(env.mu, 12, schemes=schemes)
    best = rep.loss("mu").cumulative
    for name in schemes:
        assert np.all(best <= rep.loss(name).cumulative + 1e-9), name


def test_squared_difference_tail_below_head():
    for mu, M in ((ONES, DET_PAIR), (DeterministicSeq("1111", "0"), ModelClass(
            [DeterministicSeq(format(i, "04b"), "0") for i in range(16)]))):
        s = evaluate(mu, 14, M).s
        assert s[7:].sum() <= s[:7].sum() + 1e-12


def test_masked_steps_contribute_nothing():
    loss = LossSpec.static((0, 1, 1, 0), schedule=PeriodicMask(2, (2,)))
    mu = BernoulliIID(0.7)
    tr = exact_expected_loss(mu, Predictor(mu, loss), 6)
    np.testing.assert_allclose(tr.per_step, [0.3, 0, 0.3, 0, 0.3, 0], atol=1e-15)


def test_mc_deterministic_zero_variance():
    est, se = mc_expected_loss(ONES, Predictor(DET_PAIR, error_loss()), 9, 500, seed=3)
    assert (est, se) == (1.0, 0.0)


def test_mc_bernoulli_closed_form():
    mu = BernoulliIID(0.7)
    est, se = mc_expected_loss(mu, Predictor(mu, error_loss()), 50, 100_000, seed=1)
    assert abs(est - 15.0) <= 3 * se


def test_mc_determinism_and_thread_independence():
    sch = Predictor(BERN_PAIR, weather_loss())
    a = mc_losses(B23, sch, 10, 20_000, seed=42)
    b = mc_losses(B23, sch, 10, 20_000, seed=42)
    c = mc_losses(B23, sch, 10, 20_000, seed=42, threads=3)
    assert a.tobytes() == b.tobytes() == c.tobytes()
    assert mc_expected_loss(B23, sch, 10, 20_000, 42) == mc_expected_loss(B23, sch, 10, 20_000, 42, threads=0)


def test_mc_prefix_of_samples_is_stable():
    # sample i depends only on (seed, i)
    sch = Predictor(BERN_PAIR, error_loss())
    short = mc_losses(B23, sch, 6, 9000, seed=5)
    long = mc_losses(B23, sch, 6, 20000, seed=5)
    assert np.array_equal(short, long[:9000])


def test_mc_needs_two_samples():
    with pytest.raises(ValueError):
        mc_expected_loss(B23, Predictor(B23, error_loss()), 3, 1, 0)
