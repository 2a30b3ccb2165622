import numpy as np
import pytest

from rvcv.errors import InvalidArgumentError
from rvcv.grf.exponential import ExponentialModel
from rvcv.grf.ising import IsingModel
from rvcv.score_est import score_type1, score_type1_batch, score_type2


def test_type1_exponential_example():
    est = score_type1([-2.0], [[-0.5], [-1.5]], [0.0])
    np.testing.assert_allclose(est.u_hat, [-1.0])
    assert est.K == 2


def test_type1_zero_when_sims_match_data():
    sims = np.array([[1.0, 4.0], [3.0, 0.0]])
    est = score_type1(sims.mean(axis=0), sims, np.zeros(2))
    np.testing.assert_array_equal(est.u_hat, [0.0, 0.0])


def test_type1_errors():
    with pytest.raises(InvalidArgumentError):
        score_type1([1.0], np.empty((0, 1)), [0.0])
    with pytest.raises(InvalidArgumentError):
        score_type1([1.0, 2.0], [[1.0]], [0.0, 0.0])


def test_type2_examples():
    v = np.array([0.3, -2.0])
    np.testing.assert_array_equal(score_type2([v]).u_hat, v)
    np.testing.assert_array_equal(score_type2([v, -v]).u_hat, [0.0, 0.0])
    with pytest.raises(InvalidArgumentError):
        score_type2([])


def test_batch_matches_single():
    r = np.random.default_rng(0)
    stats = r.normal(size=(5, 8, 2))
    grads = r.normal(size=(5, 2))
    s_obs = np.array([0.1, 0.2])
    batch = score_type1_batch(s_obs, stats, grads, K=3)
    for i in range(5):
        np.testing.assert_allclose(batch[i], score_type1(s_obs, stats[i, :3], grads[i]).u_hat)


def test_type1_unbiased_ising_at_zero(rng):
    data = np.array([[1, 1, -1], [1, -1, -1], [1, 1, 1]])
    model = IsingModel(data, sampler="exact")
    us = [score_type1(model.s_obs, model.simulate_stats(0.0, 5, rng), model.grad_log_prior(0.0)).u_hat[0]
          for _ in range(400)]
    se = np.std(us) / np.sqrt(len(us))
    assert abs(np.mean(us) - model.s_obs[0]) < 4 * se


def test_type1_unbiased_exponential(rng):
    model = ExponentialModel(2.0)
    theta = 1.7
    us = np.array([score_type1(model.s_obs, model.simulate_stats(theta, 3, rng), [0.0]).u_hat[0]
                   for _ in range(4000)])
    exact = model.exact_score(theta)[0]
    assert abs(us.mean() - exact) < 4 * us.std() / np.sqrt(us.size)


def test_type1_variance_scales_inverse_k(rng):
    model = ExponentialModel(2.0)
    var = []
    Ks = [1, 10, 100]
    for K in Ks:
        sims = model.simulate_stats(1.0, 3000 * K, rng).reshape(3000, K, 1)
        var.append(score_type1_batch(model.s_obs, sims, np.zeros((3000, 1)))[:, 0].var())
    slope = np.polyfit(np.log(Ks), np.log(var), 1)[0]
    assert slope == pytest.approx(-1.0, rel=0.2)
