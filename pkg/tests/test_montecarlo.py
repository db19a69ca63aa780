import dataclasses
import math

import numpy as np
import pytest
from scipy import stats

from mmcov import analytic, model
from mmcov import montecarlo as mc
from mmcov.errors import DomainError
from mmcov.model import BallLos, SectoredAntenna

THRESHOLDS = 10 ** (np.arange(-10, 41, 5) / 10)


@pytest.fixture(scope="module")
def cfg100():
    return model.mmwave_config(100.0)


@pytest.fixture(scope="module")
def batch100(cfg100):
    return mc.simulate(cfg100, mc.McSettings(n_trials=20000, seed=11))


def _realization(radius, is_los, fading, directivity, dense=False):
    n = len(radius)
    return mc.NetworkRealization(
        radius=np.asarray(radius, float), angle=np.zeros(n), is_los=np.asarray(is_los, bool),
        fading=np.asarray(fading, float), directivity=np.asarray(directivity, float),
        tx_main=np.zeros(n, bool), rx_main=np.zeros(n, bool), window_radius=1e4, seed=0, trial=0,
        dense_mode=dense)


class TestSettings:
    def test_validation(self):
        with pytest.raises(DomainError):
            mc.McSettings(n_trials=0)
        with pytest.raises(DomainError):
            mc.McSettings(window_radius=-1.0)

    def test_default_window(self, cfg100):
        assert mc.default_window(cfg100) == pytest.approx(max(10 / cfg100.los.beta, 2000.0))
        ball = dataclasses.replace(cfg100, los=BallLos(600.0))
        assert mc.default_window(ball) == 3000.0
        assert mc.default_window(ball, dense_mode=True) == 600.0


class TestRealization:
    def test_deterministic(self, cfg100):
        s = mc.McSettings(seed=5)
        a, b = mc.sample_realization(cfg100, s, 3), mc.sample_realization(cfg100, s, 3)
        for f in ("radius", "angle", "is_los", "fading", "directivity"):
            assert np.array_equal(getattr(a, f), getattr(b, f))
        c = mc.sample_realization(cfg100, s, 4)
        assert not np.array_equal(a.radius[:5], c.radius[:5])

    def test_invariants(self, cfg100):
        r = mc.sample_realization(cfg100, mc.McSettings(seed=2), 0)
        assert np.all(r.radius <= r.window_radius) and np.all(np.diff(r.radius) >= 0)
        assert set(np.unique(r.directivity)) <= set(cfg100.pmf.gains)

    def test_mean_los_count(self, cfg100):
        s = mc.McSettings(n_trials=2000, seed=3)
        counts = np.array([mc.sample_realization(cfg100, s, i).is_los.sum() for i in range(s.n_trials)])
        expected = model.mean_los_count(cfg100.los, cfg100.bs_density)
        assert abs(counts.mean() - expected) <= 3 * counts.std(ddof=1) / math.sqrt(counts.size)

    def test_ball_has_no_los_beyond_radius(self, cfg100):
        cfg = dataclasses.replace(cfg100, los=BallLos(150.0))
        for i in range(20):
            r = mc.sample_realization(cfg, mc.McSettings(seed=4), i)
            assert not np.any(r.is_los & (r.radius >= 150.0))
            assert np.all(r.is_los[r.radius < 150.0])

    def test_dense_mode_drops_nlos_and_fading(self, cfg100):
        r = mc.sample_realization(cfg100, mc.McSettings(seed=4, dense_mode=True), 0)
        assert np.all(r.is_los) and np.all(r.fading == 1.0)
        assert r.window_radius == pytest.approx(mc.dense_ball_radius(cfg100))

    def test_window_prefix(self, cfg100):
        small = mc.sample_realization(cfg100, mc.McSettings(seed=8, window_radius=1000.0), 0)
        big = mc.sample_realization(cfg100, mc.McSettings(seed=8, window_radius=3000.0), 0)
        k = len(small)
        assert np.array_equal(small.radius, big.radius[:k])
        assert np.array_equal(small.fading, big.fading[:k])


class TestSinr:
    def test_two_points_by_hand(self, cfg100):
        cfg = dataclasses.replace(cfg100, noise_norm=1e-9)
        pl = cfg.pathloss
        real = _realization([50.0, 120.0], [True, False], [0.7, 1.9], [cfg.pmf.gains[0], cfg.pmf.gains[3]])
        g = [pl.intercept_los * 50.0 ** -pl.alpha_los, pl.intercept_nlos * 120.0 ** -pl.alpha_nlos]
        expected = 0.7 * cfg.boresight_gain * g[0] / (1.9 * cfg.pmf.gains[3] * g[1] + 1e-9)
        assert mc.sinr_sample(real, cfg) == pytest.approx(expected, rel=1e-13)

    def test_serving_is_strongest_path_not_nearest(self, cfg100):
        pl = cfg100.pathloss
        # an NLOS point nearer than a LOS point can still lose the association
        real = _realization([30.0, 60.0], [False, True], [1.0, 1.0], [1.0, 1.0])
        g_nlos = pl.intercept_nlos * 30.0 ** -pl.alpha_nlos
        g_los = pl.intercept_los * 60.0 ** -pl.alpha_los
        assert g_los > g_nlos
        expected = cfg100.boresight_gain * g_los / (g_nlos + cfg100.noise_norm)
        assert mc.sinr_sample(real, cfg100) == pytest.approx(expected, rel=1e-13)

    def test_empty_is_outage(self, cfg100):
        assert mc.sinr_sample(_realization([], [], [], []), cfg100) == 0.0

    def test_single_point_without_noise_is_infinite(self, cfg100):
        real = _realization([40.0], [True], [1.0], [1.0], dense=True)
        assert math.isinf(mc.sinr_sample(real, cfg100))

    def test_batch_matches_single_trial(self, cfg100):
        s = mc.McSettings(n_trials=30, seed=9, batch_size=7)
        batch = mc.simulate(cfg100, s)
        single = [mc.sinr_sample(mc.sample_realization(cfg100, s, i), cfg100) for i in range(30)]
        assert np.allclose(batch.sinr[:, 0], single, rtol=1e-13, atol=0)

    def test_batching_does_not_change_results(self, cfg100):
        a = mc.simulate(cfg100, mc.McSettings(n_trials=300, seed=9, batch_size=300)).sinr
        b = mc.simulate(cfg100, mc.McSettings(n_trials=300, seed=9, batch_size=17)).sinr
        assert np.array_equal(a, b)


class TestEstimators:
    def test_coverage_from_sinr(self):
        c = mc.coverage_from_sinr([0.5, 1.0, 2.0, 4.0], [0.25, 1.0, 3.0, 10.0])
        assert np.array_equal(c.probabilities, [1.0, 0.5, 0.25, 0.0])
        assert c.stderr[1] == pytest.approx(0.25)

    def test_stderr_bound(self, batch100):
        c = mc.coverage_from_sinr(batch100.sinr[:, 0], THRESHOLDS)
        assert np.all(c.stderr <= 0.5 / math.sqrt(batch100.sinr.shape[0]) + 1e-15)

    def test_window_sensitivity(self, cfg100):
        w = mc.default_window(cfg100)
        a = mc.empirical_coverage(cfg100, mc.McSettings(n_trials=3000, seed=12, window_radius=w), THRESHOLDS)
        b = mc.empirical_coverage(cfg100, mc.McSettings(n_trials=3000, seed=12, window_radius=2 * w),
                                  THRESHOLDS)
        assert np.max(np.abs(a.probabilities - b.probabilities)) < 0.005

    def test_association_matches_analytic(self, cfg100, batch100):
        rep = analytic.assoc_probabilities(cfg100)
        n = batch100.sinr.shape[0]
        a_los = np.mean(batch100.serving_tier == 1)
        se = math.sqrt(rep.a_los * (1 - rep.a_los) / n)
        assert abs(a_los - rep.a_los) <= 3 * se
        b_los = np.mean(batch100.los_count > 0)
        assert abs(b_los - rep.b_los) <= 3 * math.sqrt(rep.b_los * (1 - rep.b_los) / n) + 1e-12

    def test_ball_association_closed_form(self):
        cfg = model.NetworkConfig(bs_density=1 / (math.pi * 100**2), los=BallLos(150.0))
        rep = mc.empirical_association(cfg, mc.McSettings(n_trials=5000, seed=13))
        expected = 1 - math.exp(-cfg.bs_density * math.pi * 150**2)
        assert abs(rep.a_los - expected) <= 3 * math.sqrt(expected * (1 - expected) / 5000)

    def test_nearest_los_distribution(self, cfg100, batch100):
        near = batch100.nearest_los[np.isfinite(batch100.nearest_los)]
        lam, los = cfg100.bs_density, cfg100.los
        b_los = 1 - math.exp(-2 * math.pi * lam * los.total_moment)
        cdf = lambda x: -np.expm1(-2 * math.pi * lam * np.asarray(los.moment(x))) / b_los
        assert stats.kstest(near, cdf).statistic < 0.02

    def test_serving_distance_distribution(self, cfg100, batch100):
        rep = analytic.assoc_probabilities(cfg100)
        grid = np.concatenate([[0.0], np.geomspace(1e-3, 5000.0, 20001)])
        pdf = analytic.serving_pdf(cfg100, "los", grid[1:], rep)
        cum = np.concatenate([[0.0], np.cumsum(0.5 * (pdf[1:] + pdf[:-1]) * np.diff(grid[1:]))])
        cum = np.concatenate([[0.0], cum])[: grid.size]
        cdf = lambda x: np.interp(x, grid, cum)
        los_r = batch100.serving_radius[batch100.serving_tier == 1]
        assert stats.kstest(los_r, cdf).statistic < 0.02

    def test_serving_distance_tier_validation(self, cfg100):
        with pytest.raises(DomainError):
            mc.serving_distance_samples(cfg100, mc.McSettings(n_trials=1), tier="both")


class TestDenseMode:
    def test_scale_invariance_per_trial(self):
        ant = SectoredAntenna.from_db(10, -10, 30)
        lam, rb = 1 / (math.pi * 100**2), 200.0
        base = model.NetworkConfig(bs_density=lam, los=BallLos(rb), tx_antenna=ant, rx_antenna=ant)
        scaled = dataclasses.replace(base, bs_density=4 * lam, los=BallLos(rb / 2))
        s = mc.McSettings(n_trials=500, seed=21, dense_mode=True)
        a = mc.simulate(base, s).sinr[:, 0]
        b = mc.simulate(scaled, s).sinr[:, 0]
        finite = np.isfinite(a)
        assert np.array_equal(finite, np.isfinite(b))
        assert np.allclose(a[finite], b[finite], rtol=1e-9, atol=0)


class TestDominance:
    def test_identical_is_indistinguishable(self, cfg100):
        r = mc.dominance_check(cfg100, cfg100, mc.McSettings(n_trials=500, seed=1), THRESHOLDS)
        assert r.verdict == "indistinguishable"
        assert np.all(r.diff == 0)

    def test_rejects_non_antenna_difference(self, cfg100):
        other = dataclasses.replace(cfg100, noise_norm=cfg100.noise_norm * 2)
        with pytest.raises(DomainError, match="noise_norm"):
            mc.dominance_check(cfg100, other, mc.McSettings(n_trials=10), THRESHOLDS)

    def test_swapped_order(self, cfg100):
        hi = dataclasses.replace(cfg100, tx_antenna=SectoredAntenna.from_db(20, -10, 30))
        lo = dataclasses.replace(cfg100, tx_antenna=SectoredAntenna.from_db(10, -20, 30))
        s = mc.McSettings(n_trials=3000, seed=2)
        assert mc.dominance_check(hi, lo, s, THRESHOLDS).verdict == "a_dominates"
        r = mc.dominance_check(lo, hi, s, THRESHOLDS)
        assert r.verdict == "b_dominates" and not r.per_trial_a_geq_b
