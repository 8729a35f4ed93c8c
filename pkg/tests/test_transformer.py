"""
Tests for the classical transformer reference
"""

import math
import pytest
import sys
from collections import Counter
from pathlib import Path

import numpy as np
from hypothesis import given, settings, strategies as st

# Add parent directory to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from harness.compare import chi_square_check
from model.builder.model_registry import GOLDEN_EXAMPLE_INPUT, ModelRegistry
from model.transformer import (
    AttentionBlock,
    DimensionMismatchError,
    Distribution,
    JointDistribution,
    Scaling,
    ScoreVector,
    TransformerStack,
    derive_trajectory_seeds,
    draw,
    joint_distribution,
    next_token_distribution,
    sample_text,
    self_attention_output,
    similarity_scores,
    softmax,
)
from model.vocab import Embedding, Text, Vocabulary
from tests.random_models import random_instance

E = math.e


@pytest.fixture(scope='module')
def golden():
    return ModelRegistry().load('golden_example')


@pytest.fixture(scope='module')
def golden_text(golden):
    return golden.vocabulary.parse(GOLDEN_EXAMPLE_INPUT)


class TestSimilarity:
    """Tests for similarity scores and softmax"""

    def test_golden_block_one_scores(self, golden, golden_text):
        """Block 1 on (x0, x1, x0): W_K = sigma_x puts the only unit score on x1"""
        scores = similarity_scores(golden.blocks[0], golden_text, golden.embedding, Scaling.NONE)
        np.testing.assert_allclose(scores.scores, [0.0, 1.0, 0.0])

    def test_inv_sqrt_d_scaling(self, golden, golden_text):
        """The 1/sqrt(d) convention divides every score by sqrt(2)"""
        scores = similarity_scores(golden.blocks[0], golden_text, golden.embedding, Scaling.INV_SQRT_D)
        np.testing.assert_allclose(scores.scores, [0.0, 1 / math.sqrt(2), 0.0])

    def test_softmax_large_scores(self):
        """Max-subtraction keeps huge scores finite"""
        dist = softmax(ScoreVector(np.array([1000.0, 1000.0, -1000.0])))
        assert dist[0] == pytest.approx(0.5)
        assert dist[2] == 0.0

    @given(
        st.lists(st.floats(-30, 30), min_size=1, max_size=6),
        st.floats(-50, 50)
    )
    @settings(max_examples=50, deadline=None)
    def test_softmax_shift_invariant(self, scores, shift):
        """Adding a constant to every score leaves softmax unchanged"""
        base = softmax(ScoreVector(np.array(scores)))
        shifted = softmax(ScoreVector(np.array(scores) + shift))
        for i in range(len(scores)):
            assert shifted[i] == pytest.approx(base[i], abs=1e-12)

    def test_non_finite_scores_rejected(self):
        """ScoreVector rejects infinities"""
        with pytest.raises(ValueError):
            ScoreVector(np.array([0.0, np.inf]))


class TestNextToken:
    """Tests for next_token_distribution"""

    def test_golden_first_step(self, golden, golden_text):
        """P(x0) = 2/(e+2), P(x1) = e/(e+2)"""
        dist = next_token_distribution(golden.blocks[0], golden_text, golden.embedding, Scaling.NONE)
        x0, x1 = golden.vocabulary
        assert dist[x0] == pytest.approx(2 / (E + 2), abs=1e-14)
        assert dist[x1] == pytest.approx(E / (E + 2), abs=1e-14)

    def test_positions_emitting_same_token_aggregate(self):
        """Two positions with the same image contribute one outcome"""
        vocab = Vocabulary(['a', 'b'])
        emb = Embedding(vocab, np.eye(2))
        # FFN sends everything to a
        block = AttentionBlock.build(np.eye(2), np.eye(2), np.eye(2), emb, {vocab[1]: vocab[0]})
        dist = next_token_distribution(block, vocab.parse('a b'), emb)
        assert list(dist) == [vocab[0]]
        assert dist[vocab[0]] == 1.0

    def test_dimension_mismatch(self, golden, golden_text):
        """A block built for another embedding dimension is rejected"""
        vocab = golden.vocabulary
        emb3 = Embedding(vocab, [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
        with pytest.raises(DimensionMismatchError):
            similarity_scores(golden.blocks[0], golden_text, emb3)

    def test_self_attention_output(self, golden):
        """Block 2 on (x0, x1, x0, x0) has expected value (1/(3e+1), 3e/(3e+1))"""
        text = golden.vocabulary.parse('x0 x1 x0 x0')
        out = self_attention_output(golden.blocks[1], text, golden.embedding, Scaling.NONE)
        np.testing.assert_allclose(out, [1 / (3 * E + 1), 3 * E / (3 * E + 1)], atol=1e-14)


class TestAttentionBlock:
    """Tests for AttentionBlock construction"""

    def test_query_key_shapes_must_match(self):
        """W_Q and W_K must share their d' x d shape"""
        with pytest.raises(DimensionMismatchError):
            AttentionBlock(np.eye(2), np.ones((1, 2)), np.eye(2), (0, 1))

    def test_missing_ffn_entries_are_identity(self, golden):
        """Tokens without an FFN entry map through W^V alone"""
        block = AttentionBlock.build(np.eye(2), np.eye(2), [[0, 1], [1, 0]], golden.embedding)
        assert block.value_map == (1, 0)

    def test_stack_needs_blocks(self):
        """An empty stack is rejected"""
        with pytest.raises(ValueError):
            TransformerStack(())


class TestJointDistribution:
    """Tests for joint_distribution"""

    def test_golden_joint(self, golden, golden_text):
        """The four joint probabilities match their closed forms"""
        joint = joint_distribution(golden.stack, golden_text, golden.embedding).by_symbols()
        expected = {
            'x0 x0': 2 / ((E + 2) * (3 * E + 1)),
            'x0 x1': 6 * E / ((E + 2) * (3 * E + 1)),
            'x1 x0': E ** 2 / ((E + 2) * (E + 1)),
            'x1 x1': E / ((E + 2) * (E + 1)),
        }
        assert list(joint) == sorted(expected)
        for key, value in expected.items():
            assert joint[key] == pytest.approx(value, abs=1e-12)

    def test_marginal_matches_shorter_stack(self, golden, golden_text):
        """Summing out the last token gives the depth L-1 distribution"""
        joint = joint_distribution(golden.stack, golden_text, golden.embedding)
        shorter = joint_distribution(golden.stack.truncated(1), golden_text, golden.embedding)
        marginal = joint.marginalize_last()
        for text, p in shorter.items():
            assert marginal[text] == pytest.approx(p, abs=1e-14)

    def test_invalid_totals_rejected(self, golden):
        """Entries must sum to one"""
        x0 = golden.vocabulary[0]
        with pytest.raises(ValueError):
            JointDistribution({Text((x0,)): 0.5})

    def test_mixed_lengths_rejected(self, golden):
        """Outcome texts must share one length"""
        x0, x1 = golden.vocabulary
        with pytest.raises(ValueError):
            JointDistribution({Text((x0,)): 0.5, Text((x0, x1)): 0.5})


class TestSampling:
    """Tests for seeded sampling"""

    def test_same_seed_same_text(self, golden, golden_text):
        """Identical seeds reproduce the same draw"""
        first = sample_text(golden.stack, golden_text, golden.embedding, 42)
        second = sample_text(golden.stack, golden_text, golden.embedding, 42)
        assert first == second

    def test_sampled_probability_matches_joint(self, golden, golden_text):
        """The reported probability is the joint probability of the drawn text"""
        joint = joint_distribution(golden.stack, golden_text, golden.embedding)
        for child in derive_trajectory_seeds(7, 10):
            text, p = sample_text(golden.stack, golden_text, golden.embedding, child)
            assert p == pytest.approx(joint[text], abs=1e-14)

    def test_spawned_seeds_are_distinct(self):
        """Spawned seed sequences have distinct entropy streams"""
        seeds = derive_trajectory_seeds(1, 5)
        states = {tuple(s.generate_state(2)) for s in seeds}
        assert len(states) == 5

    def test_negative_seed(self, golden, golden_text):
        """Negative seeds wrap into the unsigned 64-bit range"""
        wrapped = sample_text(golden.stack, golden_text, golden.embedding, 2 ** 64 - 1)
        assert sample_text(golden.stack, golden_text, golden.embedding, -1) == wrapped

        children = derive_trajectory_seeds(-5, 3)
        expected = derive_trajectory_seeds(2 ** 64 - 5, 3)
        assert [tuple(s.generate_state(2)) for s in children] == [tuple(s.generate_state(2)) for s in expected]

    def test_chi_square_golden(self, golden, golden_text):
        """10^5 spawned seeds on the golden stack pass chi-square at alpha = 0.001"""
        counts = Counter(
            sample_text(golden.stack, golden_text, golden.embedding, child)[0]
            for child in derive_trajectory_seeds(20240601, 100_000)
        )
        result = chi_square_check(counts, joint_distribution(golden.stack, golden_text, golden.embedding), 0.001)
        assert result.degrees_of_freedom == 3
        assert result.passed

    def test_random_model_within_three_sigma(self):
        """Sampled frequencies on a random N=3, L=2 model sit within 3 sigma of the joint"""
        rng = np.random.default_rng(3)
        instance = random_instance(rng)
        while len(instance.embedding.vocabulary) != 3 or instance.stack.depth != 2:
            instance = random_instance(rng)

        trajectories = 100_000
        counts = Counter(
            sample_text(instance.stack, instance.text, instance.embedding, child)[0]
            for child in derive_trajectory_seeds(17, trajectories)
        )
        joint = joint_distribution(instance.stack, instance.text, instance.embedding)
        assert set(counts) <= {t for t, p in joint.items() if p > 0}
        for text, p in joint.items():
            sigma = math.sqrt(p * (1 - p) / trajectories)
            assert abs(counts.get(text, 0) / trajectories - p) <= 3 * sigma + 1e-12, instance.describe()

    def test_draw_skips_zero_outcomes(self):
        """Zero-probability outcomes are never drawn"""
        dist = Distribution({'a': 0.0, 'b': 0.25, 'c': 0.75})
        assert draw(dist, 0.0) == ('b', 0.25)
        assert draw(dist, 0.3) == ('c', 0.75)
        assert draw(dist, 0.999999999) == ('c', 0.75)


if __name__ == '__main__':
    pytest.main([__file__, '-v'])
