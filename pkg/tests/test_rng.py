import numpy as np

from fairx.rng import RngStreams, replication_seeds, sample_arms, split_streams


class TestStreams:
    def test_batched_equals_single(self):
        seeds = replication_seeds(11, 4)
        batch = RngStreams.from_seed_sequences(seeds)
        singles = [RngStreams.from_seed_sequences([s]) for s in seeds]
        for shape in [(), (3,), (2, 5), ()] * 400:
            b = batch.random(shape)
            for i, s in enumerate(singles):
                np.testing.assert_array_equal(b[i], s.random(shape)[0])
        np.testing.assert_array_equal(batch.standard_normal((2,))[3], singles[3].standard_normal((2,))[0])

    def test_replication_depends_only_on_index(self):
        a = replication_seeds(5, 3)[2].generate_state(4)
        b = replication_seeds(5, 10)[2].generate_state(4)
        np.testing.assert_array_equal(a, b)

    def test_phases_differ(self):
        a = replication_seeds(5, 1, phase=0)[0].generate_state(4)
        b = replication_seeds(5, 1, phase=1)[0].generate_state(4)
        assert not np.array_equal(a, b)

    def test_split_streams_independent(self):
        env, algo, sampler = split_streams(replication_seeds(0, 2))
        assert not np.array_equal(env.random(()), algo.random(()))
        assert len(sampler) == 2


class TestSampleArms:
    def test_point_mass(self):
        p = np.array([[0.0, 1.0, 0.0]] * 5)
        np.testing.assert_array_equal(sample_arms(p, RngStreams.from_seed_sequences(replication_seeds(0, 5))),
                                      np.ones(5))

    def test_frequencies(self):
        rng = np.random.default_rng(0)
        p = np.array([0.2, 0.5, 0.3])
        arms = np.array([sample_arms(p, rng) for _ in range(20_000)])
        freq = np.bincount(arms, minlength=3) / arms.size
        np.testing.assert_allclose(freq, p, atol=0.015)


class TestSplit:
    def test_splitting_twice_is_repeatable(self):
        seeds = replication_seeds(4, 2)
        first = [s.random((3,)) for s in split_streams(seeds)]
        second = [s.random((3,)) for s in split_streams(seeds)]
        for a, b in zip(first, second):
            np.testing.assert_array_equal(a, b)

    def test_children_match_first_spawn(self):
        seq = replication_seeds(4, 1)[0]
        env, _, _ = split_streams([seq])
        expected = np.random.default_rng(replication_seeds(4, 1)[0].spawn(3)[0]).random()
        np.testing.assert_array_equal(env.random(())[0], expected)
