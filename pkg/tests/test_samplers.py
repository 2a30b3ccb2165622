import csv

import numpy as np
import pytest

from rvcv.cv_core import batch_means_se
from rvcv.errors import InvalidArgumentError
from rvcv.grf.exponential import ExponentialModel
from rvcv.grf.ising import IsingModel
from rvcv.parallel_sim import PSEUDO_STREAM, stream
from rvcv.samplers import (ChainConfig, SimConfig, exchange_chain, exchange_log_ratio, latent_chain, rwm_chain,
                           write_trace)
from rvcv.sde import SirModel, SirParams, observe, simulate_sir


def _std_normal(t):
    return -0.5 * float(t @ t)


def test_config_validation():
    with pytest.raises(InvalidArgumentError):
        ChainConfig(0, 1.0, [0.0])
    with pytest.raises(InvalidArgumentError):
        ChainConfig(10, [1.0, -1.0], [0.0, 0.0])
    with pytest.raises(InvalidArgumentError):
        ChainConfig(10, 1.0, [0.0, 0.0], proposal_cov=[[1.0, 2.0], [2.0, 1.0]])
    assert ChainConfig(10, 0.5, [0.0, 0.0]).proposal_sd.tolist() == [0.5, 0.5]
    assert SimConfig(K=10, n_chains=3).split() == [4, 3, 3]
    assert SimConfig(K=2, n_chains=5).split() == [1, 1]


def test_rwm_standard_normal():
    out = rwm_chain(_std_normal, ChainConfig(50000, 2.4, [0.0], seed=1))
    x = out.thetas[:, 0]
    assert abs(x.mean()) < 4 * batch_means_se(x)
    assert x.var() == pytest.approx(1.0, rel=0.1)
    assert out.acceptance_rate == pytest.approx(out.accepted.sum() / 50000)


def test_rwm_tiny_steps_accept_everything():
    out = rwm_chain(_std_normal, ChainConfig(2000, 1e-6, [0.3], seed=2))
    assert out.acceptance_rate > 0.99
    assert np.ptp(out.thetas) < 1e-3


def test_rwm_seeded_and_frozen():
    a = rwm_chain(_std_normal, ChainConfig(500, 1.0, [0.0], seed=5, thinning=3, burn_in=7))
    b = rwm_chain(_std_normal, ChainConfig(500, 1.0, [0.0], seed=5, thinning=3, burn_in=7))
    np.testing.assert_array_equal(a.thetas, b.thetas)
    with pytest.raises(ValueError):
        a.thetas[0, 0] = 1.0
    with pytest.raises(InvalidArgumentError):
        rwm_chain(lambda t: -np.inf, ChainConfig(5, 1.0, [0.0]))


def test_log_ratio_matches_unnormalised_densities():
    rng = np.random.default_rng(3)
    for _ in range(50):
        d = int(rng.integers(1, 4))
        th, thp = rng.normal(size=d), rng.normal(size=d)
        s, sp = rng.normal(size=d) * 10, rng.normal(size=d) * 10
        prior = lambda t: -0.5 * float(t @ t) / 4  # noqa: E731
        f = lambda t, stat: float(t @ stat)  # noqa: E731 - log of exp(theta . s)
        ref = f(thp, s) + prior(thp) + f(th, sp) - f(th, s) - prior(th) - f(thp, sp)
        got = exchange_log_ratio(th, thp, s, sp, prior)
        assert got == pytest.approx(ref, rel=1e-12, abs=1e-12)


def test_exchange_exponential_posterior_mean():
    out = exchange_chain(ExponentialModel(2.0), ChainConfig(20000, 0.8, [1.0], seed=4, burn_in=500))
    x = out.thetas[:, 0]
    assert abs(x.mean() - 1.0) < 4 * batch_means_se(x)
    assert out.u_hats.shape == (20000, 1) and out.aux_stats.shape == (20000, 1, 1)


def test_exchange_degenerate_proposal_always_accepts():
    out = exchange_chain(ExponentialModel(2.0), ChainConfig(200, 1.0, [0.7], seed=1),
                         proposal=lambda t, rng: (t.copy(), 0.0))
    assert out.acceptance_rate == 1.0
    assert np.all(out.thetas == 0.7)


def test_exchange_asymmetric_proposal():
    def lognormal_walk(t, rng):
        prop = t * np.exp(0.7 * rng.standard_normal(t.size))
        return prop, float(np.sum(np.log(prop) - np.log(t)))

    out = exchange_chain(ExponentialModel(2.0), ChainConfig(20000, 1.0, [1.0], seed=6, burn_in=500),
                         proposal=lognormal_walk)
    x = out.thetas[:, 0]
    assert abs(x.mean() - 1.0) < 4 * batch_means_se(x)
    # dropping the h-ratio biases the chain
    biased = exchange_chain(ExponentialModel(2.0), ChainConfig(20000, 1.0, [1.0], seed=6, burn_in=500),
                            proposal=lambda t, rng: (lognormal_walk(t, rng)[0], 0.0))
    assert abs(biased.thetas.mean() - 1.0) > 4 * batch_means_se(biased.thetas[:, 0])


def test_exchange_ising_matches_exact_posterior(oracles):
    ref = oracles["ising"]["posterior_3x3"]
    model = IsingModel(np.array(ref["lattice"]), prior_sd=ref["prior_sd"], burn_in=270, lag=1)
    out = exchange_chain(model, ChainConfig(15000, 0.6, [0.0], seed=2, burn_in=500))
    x = out.thetas[:, 0]
    assert abs(x.mean() - ref["mean"]) < 4 * batch_means_se(x)


def test_exchange_distant_starts_agree():
    means, ses = [], []
    for start in (0.05, 6.0):
        x = exchange_chain(ExponentialModel(2.0), ChainConfig(8000, 0.8, [start], seed=9, burn_in=300)).thetas[:, 0]
        means.append(x.mean())
        ses.append(batch_means_se(x))
    assert abs(means[0] - means[1]) < 4 * np.hypot(*ses)


def test_exchange_reuses_pseudo_draw_when_asked():
    model = ExponentialModel(2.0)
    cfg = ChainConfig(300, 0.8, [1.0], seed=3)
    out = exchange_chain(model, cfg, SimConfig(K=3, reuse_exchange_draw=True))
    hits = np.flatnonzero(out.accepted)
    assert hits.size > 50
    for r in hits[:20]:
        s_prop = model.simulate_stats(out.thetas[r], 1, stream(3, PSEUDO_STREAM, r))[0]
        np.testing.assert_array_equal(out.aux_stats[r, 0], s_prop)
    # without reuse the path is unchanged and the score sims are fresh
    plain = exchange_chain(model, cfg, SimConfig(K=3))
    np.testing.assert_array_equal(plain.thetas, out.thetas)
    assert not np.array_equal(plain.aux_stats, out.aux_stats)


class _Flaky(ExponentialModel):
    def simulate_stats(self, theta, n, rng):
        if n == 1 and float(np.ravel(theta)[0]) > 1.5:
            raise RuntimeError("simulator crashed")
        return super().simulate_stats(theta, n, rng)


def test_failed_pseudo_draw_repeats_state():
    out = exchange_chain(_Flaky(2.0), ChainConfig(2000, 0.8, [1.0], seed=1), SimConfig(K=2))
    assert out.failed.any()
    assert out.thetas.max() <= 1.5
    for r in np.flatnonzero(out.failed):
        if r > 0:
            assert out.thetas[r, 0] == out.thetas[r - 1, 0]


def test_scores_subset_and_workers_do_not_matter():
    model = ExponentialModel(2.0)
    cfg = ChainConfig(200, 0.8, [1.0], seed=12)
    a = exchange_chain(model, cfg, SimConfig(K=8, n_chains=4, workers=1))
    b = exchange_chain(model, cfg, SimConfig(K=8, n_chains=4, workers=3))
    np.testing.assert_array_equal(a.u_hats, b.u_hats)
    np.testing.assert_array_equal(a.scores(8), a.u_hats)
    np.testing.assert_allclose(a.scores(1)[:, 0], -2.0 - a.aux_stats[:, 0, 0])


def test_write_trace(tmp_path):
    out = exchange_chain(ExponentialModel(2.0), ChainConfig(25, 0.8, [1.0], seed=1))
    write_trace(tmp_path / "t.csv", out)
    rows = list(csv.reader(open(tmp_path / "t.csv")))
    assert rows[0] == ["iteration", "theta_0", "u_hat_0", "accepted"]
    assert len(rows) == 26
    assert float(rows[5][1]) == out.thetas[4, 0]


@pytest.fixture(scope="module")
def small_sir():
    t, x = observe(simulate_sir(SirParams((0.5, 0.25)), seed=12), 6)
    return SirModel(t, x, inner_steps=5)


def test_latent_chain_runs_and_is_deterministic(small_sir):
    cfg = ChainConfig(30, [0.02, 0.01], [0.5, 0.25], seed=2, burn_in=5)
    a = latent_chain(small_sir, cfg, SimConfig(K=4, n_chains=2, workers=1), init_sweeps=5)
    b = latent_chain(small_sir, cfg, SimConfig(K=4, n_chains=2, workers=2), init_sweeps=5)
    assert a.aux_stats.shape == (30, 4, 2)
    np.testing.assert_array_equal(a.u_hats, b.u_hats)
    np.testing.assert_allclose(a.u_hats, a.aux_stats.mean(axis=1))
    assert 0 < a.acceptance_rate <= 1
