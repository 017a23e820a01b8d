import numpy as np
import pytest

from pareto_ts.bounds import BanditModel
from pareto_ts.policy import PolicyConfig
from pareto_ts.rng import RngStream
from pareto_ts.simulator import (
    CHUNK_SIZE,
    Environment,
    SimulationError,
    _ChunkJob,
    geometric_checkpoints,
    quantiles,
    run_episode,
    run_experiment,
)

THETA4 = BanditModel.from_params([1.3, 1.2, 1.3, 1.5], [1.4, 1.6, 1.9, 2.0])
TWO_ARM = BanditModel.from_params([1.0, 1.0], [1.4, 2.2])


class TestEnvironment:
    def test_fixed_info_needs_two_arms(self):
        with pytest.raises(ValueError):
            Environment(THETA4, "fixed-info")

    def test_pinned_arm_defaults_to_suboptimal(self):
        env = Environment(TWO_ARM, "fixed-info")
        assert env.pinned_arm == 1
        assert env.pinned[1].mean == pytest.approx(2.2 / 1.2, rel=1e-15)

    def test_standard_mode_rejects_pinned_arm(self):
        with pytest.raises(ValueError):
            Environment(TWO_ARM, pinned_arm=0)

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            Environment(TWO_ARM, "oracle")


class TestEpisode:
    def test_single_arm_has_zero_regret(self):
        env = Environment(BanditModel.from_params([1.0], [2.0]))
        traj = run_episode(env, PolicyConfig(0), 200, RngStream(0))
        assert np.all(traj.regret == 0)

    def test_forced_second_arm_regret(self):
        env = Environment(THETA4)
        T = 500
        traj = run_episode(env, PolicyConfig(0), T, RngStream(1), policy=lambda s, r: 1)
        assert traj.final == pytest.approx(1.35 * T, rel=1e-12)

    def test_regret_equals_gap_weighted_counts(self):
        env = Environment(THETA4)
        traj = run_episode(env, PolicyConfig(1), 2000, RngStream(2))
        assert traj.final == pytest.approx(float(np.dot(THETA4.gaps, traj.counts)), rel=1e-12)
        assert traj.counts.sum() == 2000

    def test_trajectory_nondecreasing_and_bounded(self):
        env = Environment(THETA4)
        traj = run_episode(env, PolicyConfig(-1), 1500, RngStream(3))
        assert np.all(np.diff(traj.regret) >= 0)
        assert traj.regret[0] == THETA4.gaps[traj.arms[0]]
        t = np.arange(1, 1501)
        assert np.all(traj.regret <= t * THETA4.gaps.max() + 1e-9)

    def test_initialization_is_round_robin(self):
        env = Environment(THETA4)
        traj = run_episode(env, PolicyConfig(3), 100, RngStream(4))
        assert list(traj.arms[:16]) == [0, 1, 2, 3] * 4

    def test_rejects_short_horizon(self):
        with pytest.raises(ValueError):
            run_episode(Environment(THETA4), PolicyConfig(3), 10, RngStream(0))


@pytest.mark.parametrize(
    "env, cfg",
    [
        (Environment(THETA4), PolicyConfig(0)),
        (Environment(THETA4), PolicyConfig(-2, truncate=True)),
        (Environment(THETA4), PolicyConfig(2, tie_break="random")),
        (Environment(TWO_ARM, "fixed-info"), PolicyConfig(-1)),
    ],
)
def test_vectorized_engine_matches_scalar_episodes(env, cfg):
    T, seed = 600, 17
    checkpoints = list(range(1, T + 1))
    agg = run_experiment(env, cfg, T, 6, seed, checkpoints, keep_samples=True)
    for i in range(6):
        traj = run_episode(env, cfg, T, RngStream(seed, i))
        assert np.array_equal(agg.samples[i], traj.regret)


class TestExperiment:
    def test_single_replication(self):
        env = Environment(THETA4)
        agg = run_experiment(env, PolicyConfig(0), 300, 1, 5, [10, 100, 300])
        traj = run_episode(env, PolicyConfig(0), 300, RngStream(5, 0))
        assert np.array_equal(agg.mean, traj.regret[[9, 99, 299]])
        assert np.all(agg.std == 0)

    def test_parallelism_does_not_change_result(self):
        env = Environment(THETA4)
        n = 2 * CHUNK_SIZE + 37
        a = run_experiment(env, PolicyConfig(1), 150, n, 9)
        b = run_experiment(env, PolicyConfig(1), 150, n, 9, parallelism=8)
        assert a.to_csv() == b.to_csv()

    def test_band_contains_mean(self):
        agg = run_experiment(Environment(THETA4), PolicyConfig(0), 400, 1000, 3)
        assert np.all(agg.q_low <= agg.mean) and np.all(agg.mean <= agg.q_high)
        assert np.all(agg.q_high <= agg.q_tail)

    def test_csv_format(self):
        agg = run_experiment(Environment(THETA4), PolicyConfig(0), 50, 3, 1, [8, 50])
        lines = agg.to_csv().splitlines()
        assert lines[0] == f"# config_fingerprint={agg.fingerprint}"
        assert lines[1] == "round,mean,std,q005,q995,q9995"
        assert [ln.split(",")[0] for ln in lines[2:]] == ["8", "50"]
        assert float(lines[3].split(",")[1]) == agg.mean[1]

    def test_fingerprint_tracks_config(self):
        env = Environment(THETA4)
        a = run_experiment(env, PolicyConfig(0), 50, 2, 1)
        b = run_experiment(env, PolicyConfig(0), 50, 2, 2)
        c = run_experiment(env, PolicyConfig(0), 50, 2, 1)
        assert a.fingerprint != b.fingerprint and a.fingerprint == c.fingerprint

    def test_failure_reports_replication(self, monkeypatch):
        real = _ChunkJob.run

        def failing(self, reps):
            if 3 in reps:
                raise SimulationError("boom", 3)
            return real(self, reps)

        monkeypatch.setattr(_ChunkJob, "run", failing)
        with pytest.raises(SimulationError) as info:
            run_experiment(Environment(THETA4), PolicyConfig(0), 50, 10, 0)
        assert info.value.replication == 3

    def test_degenerate_arm_names_replication(self):
        # a point-mass arm makes the STS shape MLE infinite after initialization
        env = Environment(BanditModel.from_params([1.0, 1.0], [2.0, 1e300]))
        with pytest.raises(SimulationError) as info:
            run_experiment(env, PolicyConfig(0), 20, 3, 0)
        assert info.value.replication == 0

    @pytest.mark.parametrize("kwargs", [{"replications": 0}, {"horizon": 3}, {"checkpoints": [0]}])
    def test_rejects_bad_arguments(self, kwargs):
        args = dict(horizon=50, replications=2, checkpoints=None)
        args.update(kwargs)
        with pytest.raises(ValueError):
            run_experiment(Environment(THETA4), PolicyConfig(0), args["horizon"], args["replications"], 0,
                           args["checkpoints"])


class TestQuantiles:
    def test_constant_sample(self):
        assert np.all(quantiles(np.full(50, 3.5)) == 3.5)

    def test_one_to_thousand(self):
        q = quantiles(np.arange(1, 1001, dtype=float))
        assert 999 <= q[2] <= 1000

    def test_matches_naive_sort(self):
        rng = np.random.default_rng(0)
        for n in (2, 7, 100, 2001):
            x = rng.standard_cauchy(n)
            s = sorted(x)
            for level, got in zip((0.005, 0.995, 0.9995), quantiles(x)):
                pos = level * (n - 1)
                lo = int(pos)
                hi = min(lo + 1, n - 1)
                ref = s[lo] + (pos - lo) * (s[hi] - s[lo])
                assert got == pytest.approx(ref, rel=1e-12, abs=1e-12)

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            quantiles([])


def test_geometric_checkpoints():
    cp = geometric_checkpoints(10_000)
    assert cp[0] == 1 and cp[-1] == 10_000
    assert all(b > a for a, b in zip(cp, cp[1:]))
    assert geometric_checkpoints(1) == [1]


@pytest.mark.slow
def test_sts_k3_near_lower_bound():
    from pareto_ts.bounds import lower_bound_curve

    T = 10_000
    agg = run_experiment(Environment(THETA4), PolicyConfig(3), T, 1000, 11, [T])
    _, bound = lower_bound_curve(THETA4, [T])
    assert bound[0] / 3 <= agg.mean[-1] <= 3 * bound[0]
