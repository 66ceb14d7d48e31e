import logging

import numpy as np
import pytest

from log_oversampler.config import GanSchedule, OptimizerConfig, RolloutSettings
from log_oversampler.corpus import EncodedLog, Label, Origin
from log_oversampler.errors import ArgumentError, CapacityError, NumericError, PartialResultError
from log_oversampler.nn import numerical_gradient
from log_oversampler.seqgan import (
    DiscriminatorParams,
    GeneratorParams,
    RolloutConfig,
    adversarial_train,
    canonicalize,
    chunk_records,
    completion_probabilities,
    disc_accuracy,
    disc_backward,
    disc_forward,
    disc_forward_batch,
    disc_loss,
    exhaustive_policy_gradient,
    exhaustive_reward,
    expected_reward,
    mc_reward,
    nll_backward,
    oversample,
    policy_gradient_step,
    pretrain_generator,
    rollout_rewards,
    rollout_scores,
    sample_sequence,
    sample_sequences,
    sequence_log_prob,
    teacher_forcing_nll,
    train_discriminator,
    train_seqgan,
    unique_fraction,
)


def _generator(vocab_size, seed, embedding_dim=3, hidden_dim=4):
    return GeneratorParams.init(
        vocab_size, embedding_dim, hidden_dim, np.random.default_rng(seed), dtype=np.float64
    )


def _discriminator(vocab_size, seed, widths=(1, 2), n_filters=4):
    return DiscriminatorParams.init(
        vocab_size, 3, widths, n_filters, np.random.default_rng(seed), dtype=np.float64
    )


def _assert_tensor_grads(tensors, loss):
    for name, tensor in tensors.items():
        numeric = numerical_gradient(lambda _: loss(), tensor)
        np.testing.assert_allclose(tensor.grad, numeric, rtol=1e-4, atol=1e-7, err_msg=name)


def _real_sequences(n, vocab_size, length, seed):
    rng = np.random.default_rng(seed)
    return rng.integers(1, vocab_size, size=(n, length))


class TestGenerator:
    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_nll_gradients(self, seed):
        gen = _generator(4, seed)
        seqs = np.random.default_rng(seed + 10).integers(0, 4, size=(3, 4))
        nll_backward(gen, seqs)
        _assert_tensor_grads(gen.tensors(), lambda: teacher_forcing_nll(gen, seqs))

    def test_sample_shape_and_range(self):
        seqs = sample_sequences(_generator(5, 0), 7, 6, np.random.default_rng(1))
        assert seqs.shape == (7, 6)
        assert seqs.min() >= 0 and seqs.max() < 5

    def test_sampling_is_deterministic(self):
        gen = _generator(5, 0)
        a = sample_sequences(gen, 4, 6, np.random.default_rng(3))
        b = sample_sequences(gen, 4, 6, np.random.default_rng(3))
        np.testing.assert_array_equal(a, b)

    def test_prefix_is_kept(self):
        seqs = sample_sequences(_generator(5, 0), 6, 5, np.random.default_rng(1), prefix=np.array([2, 4]))
        assert np.all(seqs[:, :2] == [2, 4])

    def test_full_prefix_is_returned(self):
        prefix = np.array([1, 2, 3])
        seq = sample_sequence(_generator(5, 0), 3, np.random.default_rng(1), prefix=prefix)
        np.testing.assert_array_equal(seq, prefix)

    @pytest.mark.parametrize("T", [0, -1])
    def test_non_positive_length_raises(self, T):
        with pytest.raises(ArgumentError):
            sample_sequences(_generator(5, 0), 2, T, np.random.default_rng(1))

    def test_prefix_longer_than_sequence_raises(self):
        with pytest.raises(ArgumentError):
            sample_sequences(_generator(5, 0), 2, 2, np.random.default_rng(1), prefix=np.array([1, 2, 3]))

    def test_degenerate_generator_repeats_one_token(self):
        gen = GeneratorParams.zeros(3, 2, 4, dtype=np.float64)
        gen.proj_b.value = np.array([[-50.0, 50.0, -50.0]])
        seqs = sample_sequences(gen, 5, 6, np.random.default_rng(0))
        assert np.all(seqs == 1)

    def test_uniform_generator_marginals(self):
        gen = GeneratorParams.zeros(4, 2, 3, dtype=np.float64)
        seqs = sample_sequences(gen, 10_000, 3, np.random.default_rng(0))
        for t in range(3):
            freq = np.bincount(seqs[:, t], minlength=4) / len(seqs)
            assert np.all((freq >= 0.22) & (freq <= 0.28))

    def test_pretraining_memorizes_a_repeated_sequence(self):
        gen = _generator(5, 0, embedding_dim=4, hidden_dim=8)
        real = np.tile([1, 2, 3, 4], (32, 1))
        schedule = GanSchedule(pretrain_gen_epochs=100, batch_size=8, optimizer=OptimizerConfig(alpha=0.01))
        best, history = pretrain_generator(gen, real, schedule, np.random.default_rng(0))
        assert len(history) == 100
        assert teacher_forcing_nll(best, real[:1]) < 0.1


class TestPolicyGradient:
    def test_zero_rewards_leave_parameters_unchanged(self):
        gen = GeneratorParams.init(5, 3, 4, np.random.default_rng(0))
        before = {name: p.value.copy() for name, p in gen.tensors().items()}
        seqs = sample_sequences(gen, 4, 6, np.random.default_rng(1))
        norm = policy_gradient_step(gen, seqs, np.zeros(seqs.shape), alpha=0.1)
        assert norm == 0.0
        for name, p in gen.tensors().items():
            np.testing.assert_array_equal(p.value, before[name])

    def test_unit_rewards_raise_sequence_probability(self):
        gen = _generator(5, 0)
        seqs = sample_sequences(gen, 4, 6, np.random.default_rng(1))
        before = sequence_log_prob(gen, seqs).sum()
        policy_gradient_step(gen, seqs, np.ones(seqs.shape), alpha=1e-3)
        assert sequence_log_prob(gen, seqs).sum() > before

    def test_non_finite_rewards_abort(self):
        gen = _generator(5, 0)
        before = {name: p.value.copy() for name, p in gen.tensors().items()}
        seqs = sample_sequences(gen, 2, 3, np.random.default_rng(1))
        rewards = np.ones(seqs.shape)
        rewards[0, 1] = np.nan
        with pytest.raises(NumericError):
            policy_gradient_step(gen, seqs, rewards, alpha=0.1)
        for name, p in gen.tensors().items():
            np.testing.assert_array_equal(p.value, before[name])

    def test_exhaustive_gradient_matches_finite_differences(self):
        gen = _generator(2, 4, embedding_dim=2, hidden_dim=3)
        disc = _discriminator(2, 5, widths=(1, 2), n_filters=3)
        grads = exhaustive_policy_gradient(gen, disc, 2)
        for name, tensor in gen.tensors().items():
            numeric = numerical_gradient(lambda _: expected_reward(gen, disc, 2), tensor)
            np.testing.assert_allclose(grads[name], numeric, atol=1e-4, err_msg=name)

    def test_exhaustive_gradient_refuses_large_spaces(self):
        with pytest.raises(CapacityError):
            exhaustive_policy_gradient(_generator(10, 0), _discriminator(10, 0), 6)


class TestDiscriminator:
    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_gradients(self, seed):
        disc = _discriminator(5, seed)
        seqs = np.random.default_rng(seed + 10).integers(0, 5, size=(4, 5))
        labels = np.array([1.0, 0.0, 1.0, 0.0])
        _, trace = disc_forward_batch(seqs, disc)
        disc_backward(trace, labels, disc)
        _assert_tensor_grads(disc.tensors(), lambda: disc_loss(seqs, labels, disc))

    def test_probabilities(self):
        probs, _ = disc_forward_batch(np.array([[1, 2, 3], [0, 0, 0]]), _discriminator(5, 0))
        assert probs.shape == (2,)
        assert np.all((probs > 0) & (probs < 1))

    def test_rejects_out_of_vocabulary_ids(self):
        with pytest.raises(ArgumentError):
            disc_forward_batch(np.array([[1, 5, 2]]), _discriminator(5, 0))

    def test_rejects_sequences_shorter_than_filters(self):
        with pytest.raises(ArgumentError):
            disc_forward_batch(np.array([[1]]), _discriminator(5, 0, widths=(1, 2)))

    def test_zero_discriminator_is_undecided(self):
        disc = DiscriminatorParams.zeros(4, 3, (1, 2), 2, dtype=np.float64)
        assert disc_forward(np.array([1, 2, 3]), disc) == pytest.approx(0.5)

    def test_learns_to_separate(self, tiny_gan):
        real = np.full((32, 4), 1)
        fake = np.full((32, 4), 3)
        disc = _discriminator(5, 0)
        losses = train_discriminator(disc, real, fake, tiny_gan, np.random.default_rng(0), epochs=30)
        assert losses[-1] < losses[0]
        assert disc_forward(real[0], disc) > disc_forward(fake[0], disc)

    def test_same_distribution_stays_at_chance(self, tiny_gan):
        real, fake, held_real, held_fake = (_real_sequences(400, 6, 5, seed=seed) for seed in (20, 21, 22, 23))
        disc = _discriminator(6, 0)
        train_discriminator(disc, real, fake, tiny_gan, np.random.default_rng(0), epochs=5)
        assert 0.4 <= disc_accuracy(disc, held_real, held_fake) <= 0.6


class TestRollout:
    def test_full_sequence_reward_is_the_discriminator_score(self):
        gen, disc = _generator(3, 0), _discriminator(3, 1)
        rollout = RolloutConfig.from_generator(gen, 8, 3)
        seq = np.array([1, 2, 0])
        assert mc_reward(seq, rollout, disc, np.random.default_rng(0)) == disc_forward(seq, disc)

    def test_zero_discriminator_gives_half_reward(self):
        gen = _generator(4, 0)
        disc = DiscriminatorParams.zeros(4, 3, (1, 2), 2, dtype=np.float64)
        rollout = RolloutConfig.from_generator(gen, 5, 4)
        assert mc_reward(np.array([1, 2]), rollout, disc, np.random.default_rng(0)) == pytest.approx(0.5)

    def test_exhaustive_reward_of_a_full_sequence(self):
        gen, disc = _generator(3, 0), _discriminator(3, 1)
        seq = np.array([2, 1, 0])
        assert exhaustive_reward(seq, gen, disc, 3) == pytest.approx(disc_forward(seq, disc))

    def test_exhaustive_reward_under_a_uniform_generator(self):
        gen = GeneratorParams.zeros(2, 2, 3, dtype=np.float64)
        disc = _discriminator(2, 1)
        expected = (disc_forward(np.array([1, 0]), disc) + disc_forward(np.array([1, 1]), disc)) / 2
        assert exhaustive_reward(np.array([1]), gen, disc, 2) == pytest.approx(expected)

    def test_monte_carlo_estimate_agrees_with_enumeration(self):
        gen, disc = _generator(3, 0), _discriminator(3, 1)
        rollout = RolloutConfig.from_generator(gen, 2000, 3)
        state = np.array([2])

        seqs, probs = completion_probabilities(state, gen, 3)
        scores, _ = disc_forward_batch(seqs, disc)
        exact = exhaustive_reward(state, gen, disc, 3)
        se = np.sqrt(np.sum(probs * (scores - exact) ** 2) / rollout.n_rollouts)

        hits = sum(
            abs(mc_reward(state, rollout, disc, np.random.default_rng(trial)) - exact) <= 3 * se
            for trial in range(50)
        )
        assert hits >= 48

    def test_monte_carlo_estimate_is_unbiased(self):
        gen, disc = _generator(3, 2), _discriminator(3, 3)
        rollout = RolloutConfig.from_generator(gen, 200, 3)
        state = np.array([1])

        seqs, probs = completion_probabilities(state, gen, 3)
        scores, _ = disc_forward_batch(seqs, disc)
        exact = exhaustive_reward(state, gen, disc, 3)
        std = np.sqrt(np.sum(probs * (scores - exact) ** 2))

        estimates = [mc_reward(state, rollout, disc, np.random.default_rng(100 + i)) for i in range(50)]
        assert abs(np.mean(estimates) - exact) <= 4 * std / np.sqrt(200 * 50)

    def test_rollout_scores_count(self):
        gen, disc = _generator(3, 0), _discriminator(3, 1)
        rollout = RolloutConfig.from_generator(gen, 5, 4)
        assert rollout_scores(np.array([1, 2]), rollout, disc, np.random.default_rng(0)).shape == (5,)
        assert rollout_scores(np.array([1, 2, 1, 2]), rollout, disc, np.random.default_rng(0)).shape == (1,)

    def test_invalid_state_raises(self):
        gen, disc = _generator(3, 0), _discriminator(3, 1)
        rollout = RolloutConfig.from_generator(gen, 5, 3)
        with pytest.raises(ArgumentError):
            mc_reward(np.array([], dtype=np.int64), rollout, disc, np.random.default_rng(0))
        with pytest.raises(ArgumentError):
            mc_reward(np.array([1, 1, 1, 1]), rollout, disc, np.random.default_rng(0))

    def test_rollout_rewards(self):
        gen, disc = _generator(4, 0), _discriminator(4, 1)
        rollout = RolloutConfig.from_generator(gen, 3, 5)
        seqs = sample_sequences(gen, 6, 5, np.random.default_rng(2))
        rewards = rollout_rewards(seqs, rollout, disc, seed=9, key=(1, 0))
        assert rewards.shape == (6, 5)
        assert np.all((rewards >= 0) & (rewards <= 1))
        final, _ = disc_forward_batch(seqs, disc)
        np.testing.assert_array_equal(rewards[:, -1], final)
        np.testing.assert_array_equal(rewards, rollout_rewards(seqs, rollout, disc, seed=9, key=(1, 0)))

    @pytest.mark.parametrize("state", [[2], []])
    def test_completion_probabilities_sum_to_one(self, state):
        seqs, probs = completion_probabilities(np.array(state, dtype=np.int64), _generator(3, 0), 3)
        assert len(seqs) == 3 ** (3 - len(state))
        assert probs.sum() == pytest.approx(1.0, abs=1e-9)

    def test_completion_probabilities_capacity(self):
        with pytest.raises(CapacityError):
            completion_probabilities(np.array([1]), _generator(10, 0), 7)

    def test_refresh_copies_the_generator(self):
        gen = _generator(4, 0)
        rollout = RolloutConfig.from_generator(_generator(4, 1), 2, 3)
        rollout.refresh(gen)
        for name, p in gen.tensors().items():
            assert rollout.rollout_params.tensors()[name].value.tobytes() == p.value.tobytes()
        gen.proj_b.value += 1.0
        assert not np.array_equal(rollout.rollout_params.proj_b.value, gen.proj_b.value)

    def test_rollout_config_validation(self):
        with pytest.raises(ArgumentError):
            RolloutConfig.from_generator(_generator(4, 0), 0, 3)


def _alternating_parity(n, vocab_size, length, rng):
    parity = (rng.integers(0, 2, size=(n, 1)) + np.arange(length)) % 2
    return 2 * rng.integers(0, vocab_size // 2, size=(n, length)) + parity


def _follows_grammar(seqs):
    parity = seqs % 2
    return np.all(parity[:, 1:] != parity[:, :-1], axis=1)


class TestTraining:
    def _adversarial(self, tiny_gan):
        real = _real_sequences(40, 6, 5, seed=0)
        gen = GeneratorParams.init(6, 4, 8, np.random.default_rng(1))
        disc = DiscriminatorParams.init(6, 4, (1, 2), 3, np.random.default_rng(2))
        rollout = RolloutConfig.from_generator(gen, 2, 5)
        return adversarial_train(gen, disc, real, tiny_gan, rollout, seed=3), rollout

    def test_adversarial_rounds(self, tiny_gan):
        (gen, _, diagnostics), rollout = self._adversarial(tiny_gan)
        assert 1 <= len(diagnostics) <= tiny_gan.adversarial_rounds
        assert [row.round for row in diagnostics] == list(range(1, len(diagnostics) + 1))
        for row in diagnostics:
            assert 0 <= row.mean_reward <= 1
            assert 0 <= row.disc_accuracy <= 1
            assert 0 < row.unique_fraction <= 1
        for name, p in gen.tensors().items():
            assert rollout.rollout_params.tensors()[name].value.tobytes() == p.value.tobytes()

    def test_adversarial_training_is_deterministic(self, tiny_gan):
        (gen_a, _, diag_a), _ = self._adversarial(tiny_gan)
        (gen_b, _, diag_b), _ = self._adversarial(tiny_gan)
        assert diag_a == diag_b
        for name, p in gen_a.tensors().items():
            np.testing.assert_array_equal(p.value, gen_b.tensors()[name].value)

    def test_train_seqgan(self, tiny_gan):
        model = train_seqgan(_real_sequences(30, 6, 5, seed=4), 6, tiny_gan, RolloutSettings(n_rollouts=2), seed=5)
        assert len(model.pretrain_nll) == tiny_gan.pretrain_gen_epochs
        assert model.generator.vocab_size == 6
        assert all(row.chunk == 0 for row in model.diagnostics)

    def test_train_seqgan_rejects_short_sequences(self, tiny_gan):
        with pytest.raises(ArgumentError):
            train_seqgan(np.ones((4, 1), dtype=np.int64), 6, tiny_gan, RolloutSettings(n_rollouts=2), seed=5)

    def test_unique_fraction(self):
        assert unique_fraction(np.array([[1, 2], [1, 2], [2, 1], [3, 3]])) == 0.75
        assert unique_fraction(np.zeros((0, 2))) == 0.0

    @pytest.mark.slow
    def test_adversarial_training_moves_samples_toward_the_grammar(self):
        vocab_size, length = 6, 6
        schedule = GanSchedule(
            pretrain_gen_epochs=1,
            pretrain_disc_epochs=3,
            adversarial_rounds=30,
            patience=30,
            batch_size=64,
            gen_embedding_dim=8,
            gen_hidden_dim=16,
            disc_embedding_dim=8,
            disc_filter_widths=(1, 2, 3),
            disc_filters=8,
            policy_lr=0.05,
        )
        gains = []
        for seed in range(5):
            real = _alternating_parity(512, vocab_size, length, np.random.default_rng(seed))
            gen = GeneratorParams.init(vocab_size, 8, 16, np.random.default_rng(100 + seed))
            gen, _ = pretrain_generator(gen, real, schedule, np.random.default_rng(200 + seed))
            before = _follows_grammar(sample_sequences(gen, 2000, length, np.random.default_rng(300 + seed))).mean()

            disc = DiscriminatorParams.init(vocab_size, 8, (1, 2, 3), 8, np.random.default_rng(400 + seed))
            rng = np.random.default_rng(500 + seed)
            fake = sample_sequences(gen, len(real), length, rng)
            train_discriminator(disc, real, fake, schedule, rng, epochs=schedule.pretrain_disc_epochs)
            rollout = RolloutConfig.from_generator(gen, 8, length)
            gen, _, diagnostics = adversarial_train(gen, disc, real, schedule, rollout, seed=seed)

            after = _follows_grammar(sample_sequences(gen, 2000, length, np.random.default_rng(300 + seed))).mean()
            gains.append(after - before)
            assert all(row.unique_fraction > 0.5 for row in diagnostics)
        assert np.median(gains) > 0


def _negatives(n, vocab_size=6, length=5):
    seqs = {tuple(int(i) for i in row) for row in _real_sequences(3 * n, vocab_size, length, seed=11)}
    return [EncodedLog(ids, Label.NEGATIVE) for ids in sorted(seqs)[:n]]


class TestOversample:
    def test_canonicalize(self):
        assert canonicalize(np.array([3, 0, 2, 0])) == (3, 0, 0, 0)
        assert canonicalize(np.array([1, 2])) == (1, 2)
        assert canonicalize(np.array([0, 4, 4])) is None

    def test_chunk_records(self):
        chunks = chunk_records(_negatives(5), 2, np.random.default_rng(0))
        assert sorted(len(c) for c in chunks) == [2, 3]

    def test_chunk_count_is_clamped(self, caplog):
        with caplog.at_level(logging.WARNING):
            chunks = chunk_records(_negatives(3), 5, np.random.default_rng(0))
        assert len(chunks) == 3
        assert "clamping" in caplog.text

    def test_already_at_target(self, tiny_gan):
        negatives = _negatives(10)
        result = oversample(negatives, 2, 10, 6, tiny_gan, RolloutSettings(n_rollouts=2), seed=0)
        assert result.records == negatives
        assert result.models == []

    def test_target_below_count_raises(self, tiny_gan):
        with pytest.raises(ArgumentError):
            oversample(_negatives(10), 2, 5, 6, tiny_gan, RolloutSettings(n_rollouts=2), seed=0)

    def test_reaches_target(self, tiny_gan):
        negatives = _negatives(30)
        result = oversample(negatives, 2, 45, 6, tiny_gan, RolloutSettings(n_rollouts=2), seed=0)
        assert len(result.records) == 45
        assert result.records[:30] == negatives
        generated = result.records[30:]
        assert all(r.origin == Origin.GENERATED and r.label == Label.NEGATIVE for r in generated)
        assert len({r.ids for r in result.records}) == 45
        assert all(canonicalize(np.array(r.ids)) == r.ids for r in generated)
        assert len(result.models) == 2
        assert {row.chunk for row in result.diagnostics} == {0, 1}

    def test_budget_exhaustion_keeps_partial_records(self, tiny_gan):
        negatives = _negatives(20)
        with pytest.raises(PartialResultError) as info:
            oversample(
                negatives, 1, 40, 6, tiny_gan, RolloutSettings(n_rollouts=2), seed=0, budget_factor=0.05
            )
        assert 20 <= len(info.value.records) < 40
        assert info.value.records[:20] == negatives

    def test_budget_covers_the_gap_left_by_duplicate_originals(self, tiny_gan):
        unique = _negatives(20)
        negatives = unique + unique[:19]
        result = oversample(
            negatives, 1, 40, 6, tiny_gan, RolloutSettings(n_rollouts=2), seed=0, budget_factor=2.0
        )
        assert len(result.records) == 40
        assert result.records[:20] == unique
        assert len({r.ids for r in result.records}) == 40
        assert result.generated <= 40
