import numpy as np
import pytest

from fairx.envs import (
    FixedContexts,
    LinearInstance,
    MabInstance,
    MultilabelEnv,
    MultilabelFormatError,
    RandomFourierFeatures,
    ReplayEnv,
    ReplayExhausted,
    ReplayFormatError,
    ReplayLog,
    lowerbound_fixtures,
    multilabel_to_linear,
    parse_multilabel,
    parse_replay_log,
    read_replay_log,
    replay_step,
    split_rows,
    synthetic_uniform_log,
    validate_replay_log,
    write_replay_log,
)
from fairx.rng import RngStreams, replication_seeds


def _streams(n, seed=0):
    return RngStreams.from_seed_sequences(replication_seeds(seed, n))


class TestMab:
    def test_degenerate_bernoulli(self):
        inst = MabInstance([0.0, 1.0])
        rng = np.random.default_rng(0)
        assert all(inst.pull(1, rng) == 1.0 for _ in range(100))
        assert all(inst.pull(0, rng) == 0.0 for _ in range(100))

    @pytest.mark.parametrize("noise", ["bernoulli", "gaussian", "uniform"])
    def test_mean(self, noise):
        inst = MabInstance([0.3, 0.7], noise, sigma=0.5)
        draws = inst.pull(np.ones(5000, int), _streams(5000))
        assert abs(draws.mean() - 0.7) <= 0.02

    def test_uniform_stays_in_range(self):
        inst = MabInstance([0.9], "uniform")
        draws = np.array([inst.pull(0, np.random.default_rng(i)) for i in range(500)])
        assert draws.min() >= 0.8 and draws.max() <= 1.0

    def test_errors(self):
        with pytest.raises(IndexError):
            MabInstance([0.5]).pull(1, np.random.default_rng(0))
        with pytest.raises(ValueError):
            MabInstance([1.5])
        with pytest.raises(ValueError):
            MabInstance([0.5], "cauchy")
        with pytest.raises(ValueError):
            MabInstance([0.5], "gaussian", sigma=0.0)


class TestLinear:
    def test_noiseless_aligned(self):
        inst = LinearInstance([1.0, 0.0], 2, noise_sigma=0.0,
                              context_source=FixedContexts(np.array([[1.0, 0.0], [0.0, 1.0]])))
        inst.reset(np.random.default_rng(0))
        ctx = inst.observe()
        reward, accepted = inst.step(0)
        assert reward == 1.0 and accepted
        assert inst.reveal(ctx, 1, np.random.default_rng(0)) == 0.0

    def test_contexts_in_unit_ball(self):
        inst = LinearInstance([0.6, 0.0, 0.8], 5)
        ctx = inst.contexts(np.random.default_rng(1))
        assert ctx.shape == (5, 3)
        np.testing.assert_allclose(np.linalg.norm(ctx, axis=-1), 1.0)

    def test_fixed_contexts_rescaled(self):
        inst = LinearInstance([1.0, 0.0], 1, context_source=FixedContexts(np.array([[3.0, 4.0]])))
        np.testing.assert_allclose(inst.contexts(np.random.default_rng(0)), [[0.6, 0.8]])

    def test_noise_level(self):
        inst = LinearInstance([1.0, 0.0], 1, noise_sigma=0.1,
                              context_source=FixedContexts(np.array([[1.0, 0.0]])))
        rng = _streams(5000)
        r = inst.reveal(inst.contexts(rng), np.zeros(5000, int), rng)
        assert abs(r.mean() - 1.0) <= 5e-3
        assert abs(r.std() - 0.1) <= 5e-3

    def test_errors(self):
        with pytest.raises(ValueError):
            LinearInstance([1.0, 1.0], 2)
        with pytest.raises(ValueError):
            LinearInstance([1.0], 2, context_source=FixedContexts(np.ones((3, 1))))


class TestRandomFourierFeatures:
    def test_zero_frequency(self):
        rff = RandomFourierFeatures(np.zeros((1, 2)), np.zeros(1), 2)
        np.testing.assert_allclose(rff.unscaled(np.array([0.3])), [[np.sqrt(2)], [np.sqrt(2)]])
        rff.fit_scale(np.array([[0.3], [0.7]]))
        np.testing.assert_allclose(rff(np.array([0.3])), [[1.0], [1.0]])

    def test_approximates_gaussian_kernel(self):
        rng = np.random.default_rng(0)
        sigma, n_f, k = 1.5, 3, 2
        rff = RandomFourierFeatures.draw(n_f, k, 2000, sigma, rng)
        feats = rng.normal(size=(20, n_f))
        ctx = rff.unscaled(feats).reshape(-1, 2000)
        raw = np.einsum("nf,ak->nakf", feats, np.eye(k)).reshape(-1, n_f * k)
        # raw flattening is f*K + a, but inner products are invariant to the ordering
        d2 = ((raw[:, None] - raw[None]) ** 2).sum(-1)
        kernel = np.exp(-d2 / (2 * sigma**2))
        assert np.abs(ctx @ ctx.T - kernel).mean() <= 0.05

    def test_identical_examples_identical_contexts(self):
        env = multilabel_to_linear(np.ones((4, 3)), np.eye(2)[[0, 1, 0, 1]], rff_dim=8,
                                   rng=np.random.default_rng(0))
        ctx = env.contexts_of(np.arange(4))
        np.testing.assert_array_equal(ctx[0], ctx[3])

    def test_max_norm_is_one(self):
        rng = np.random.default_rng(1)
        env = multilabel_to_linear(rng.normal(size=(30, 4)), rng.integers(0, 2, (30, 3)), rff_dim=16, rng=rng)
        np.testing.assert_allclose(np.linalg.norm(env.contexts_of(np.arange(30)), axis=-1).max(), 1.0)

    def test_errors(self):
        with pytest.raises(ValueError, match="empty"):
            multilabel_to_linear(np.zeros((0, 2)), np.zeros((0, 2)))
        with pytest.raises(ValueError, match="label width"):
            multilabel_to_linear(np.zeros((3, 2)), np.zeros((4, 2)))


class TestMultilabel:
    def test_parse(self):
        feats, labels = parse_multilabel(["0,2 0:1.5 3:-1", "# comment", "", "1 1:2"])
        np.testing.assert_array_equal(labels, [[1, 0, 1], [0, 1, 0]])
        np.testing.assert_array_equal(feats, [[1.5, 0, 0, -1], [0, 2, 0, 0]])

    def test_parse_errors(self):
        with pytest.raises(MultilabelFormatError, match="line 2"):
            parse_multilabel(["0 0:1", "0 0:x"])
        with pytest.raises(MultilabelFormatError, match="line 1"):
            parse_multilabel(["a,b 0:1"])
        with pytest.raises(MultilabelFormatError, match="label width"):
            parse_multilabel(["3 0:1"], n_labels=2)
        with pytest.raises(ValueError, match="empty"):
            parse_multilabel([])

    def test_label_lookup(self):
        env = MultilabelEnv(np.eye(3), np.array([[1, 0], [0, 1], [1, 1]]))
        env.reset(_streams(4), 4)
        env.observe()
        reward, accepted = env.step(np.zeros(4, int))
        np.testing.assert_array_equal(reward, env.labels[env._rows, 0])
        assert accepted.all()
        np.testing.assert_allclose(env.label_means(), [2 / 3, 2 / 3])

    def test_split_rows(self):
        val, test = split_rows(10, 0.2, 3)
        assert len(val) == 2 and len(test) == 8
        np.testing.assert_array_equal(np.sort(np.concatenate([val, test])), np.arange(10))
        np.testing.assert_array_equal(split_rows(10, 0.2, 3)[0], val)

    def test_well_specified_reward(self):
        rng = np.random.default_rng(2)
        env = multilabel_to_linear(rng.normal(size=(40, 3)), rng.integers(0, 2, (40, 2)), rff_dim=6,
                                   rng=rng, mode="well_specified")
        env.reset(_streams(5000), 5000)
        ctx = env.observe()
        reward, _ = env.step(np.zeros(5000, int))
        assert abs((reward - ctx[:, 0] @ env.theta_ls).std() - 0.1) <= 5e-3


class TestReplay:
    def test_point_mass_trace(self):
        log = ReplayLog([1, 2, 1], [1.0, 0.0, 0.0], 3)
        env = ReplayEnv(log)
        env.reset(np.random.default_rng(0))
        outcomes = [env.step(1) for _ in range(3)]
        matched = [bool(m) for _, m in outcomes]
        assert matched == [True, False, True]
        rewards = [r for r, m in outcomes if m]
        assert np.mean(rewards) == 0.5
        assert env.exhausted()

    def test_exhausted_never_accepts(self):
        env = ReplayEnv(ReplayLog([0], [1.0], 1))
        env.reset(np.random.default_rng(0))
        env.step(0)
        reward, matched = env.step(0)
        assert not matched and reward == 0.0

    def test_uniform_match_rate(self):
        rng = np.random.default_rng(1)
        log = synthetic_uniform_log(np.full(4, 0.5), 5000, rng)
        out = replay_step(log, np.arange(5000), np.full((5000, 4), 0.25), _streams(5000))
        assert abs(out.matched.mean() - 0.25) <= 0.02

    def test_replay_step_errors(self):
        log = ReplayLog([0, 1], [1.0, 0.0], 2)
        with pytest.raises(ReplayExhausted):
            replay_step(log, 2, [0.5, 0.5], np.random.default_rng(0))
        with pytest.raises(ValueError, match="uniformly"):
            replay_step(ReplayLog([0], [1.0], 1, uniform=False), 0, [1.0], np.random.default_rng(0))

    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(2)
        log = synthetic_uniform_log([0.1, 0.4, 0.3], 50, rng, contexts_dim=2)
        path = tmp_path / "log.tsv"
        write_replay_log(log, path)
        back = read_replay_log(path)
        np.testing.assert_array_equal(back.arms, log.arms)
        np.testing.assert_array_equal(back.rewards, log.rewards)
        np.testing.assert_array_equal(back.contexts, log.contexts)
        np.testing.assert_array_equal(back.timestamps, log.timestamps)

    @pytest.mark.parametrize("lines,line_no,match", [
        (["#fairx-replay K=2 d=0 uniform=1", "0 0 1.0 3 0"], 2, "header says"),
        (["#fairx-replay K=2 d=0 uniform=1", "0 0 1.0 2 0", "1 5 1.0 2 0"], 3, "outside"),
        (["#fairx-replay K=2 d=1 uniform=1", "0 0 1.0 2 1 0.5"], 2, "context values"),
        (["#fairx-replay K=2 d=0 uniform=1", "0 x 1.0 2 0"], 2, "non-numeric"),
        (["#fairx-replay K=2 d=0 uniform=1", "0 0 1.0"], 2, "expected"),
        (["K=2 d=0 uniform=1"], 1, "header"),
        (["#fairx-replay K=2 d=0 uniform=1"], 1, "no events"),
    ])
    def test_format_errors(self, lines, line_no, match):
        with pytest.raises(ReplayFormatError, match=match) as exc:
            parse_replay_log(lines)
        assert exc.value.line_no == line_no

    def test_validate_requires_uniform(self, tmp_path):
        path = tmp_path / "log.tsv"
        path.write_text("#fairx-replay K=2 d=0 uniform=0\n0 0 1.0 2 0\n")
        with pytest.raises(ReplayFormatError, match="uniformly"):
            validate_replay_log(path)

    def test_split_by_day(self):
        ts = np.repeat(np.arange(5), 3) * 86400
        log = ReplayLog(np.zeros(15, int), np.zeros(15), 2, timestamps=ts)
        val, test = log.split_by_day(0.2)
        assert len(val) == 3 and len(test) == 12
        assert val.timestamps.max() < test.timestamps.min()


class TestFixtures:
    def test_optimal_policies(self):
        f = {fx.name: fx for fx in lowerbound_fixtures(100)}
        np.testing.assert_allclose(f["min_merit_1"].optimal_policy, [1 / 3, 2 / 3], atol=1e-12)
        np.testing.assert_allclose(f["min_merit_2"].optimal_policy, [0.5, 0.5], atol=1e-12)
        np.testing.assert_allclose(f["lipschitz_1"].optimal_policy, [2 / 3, 1 / 3], atol=1e-12)
        np.testing.assert_allclose(f["lipschitz_2"].optimal_policy, [0.5, 0.5], atol=1e-12)

    def test_noise_variance(self):
        for fx in lowerbound_fixtures(400):
            assert fx.instance.noise == "gaussian"
            np.testing.assert_allclose(fx.instance.sigma**2, 0.5)

    def test_bad_horizon(self):
        with pytest.raises(ValueError):
            lowerbound_fixtures(0)
