"""
Tests for the token PVM and Lueders reduction
"""

import math
import pytest
import sys
from pathlib import Path

import numpy as np

# Add parent directory to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from model.vocab import Vocabulary
from quantum.fock import FockSpace, SequenceEnsembleState, TruncationError, to_dense
from quantum.measurement import (
    DIAMOND,
    PVM,
    ZeroProbabilityOutcomeError,
    luders_reduce,
    luders_reduce_dense,
    outcome_probabilities,
)

VOCAB = Vocabulary(['x0', 'x1'])
X0, X1 = VOCAB


class TestPVM:
    """Tests for the projector-valued measure"""

    @pytest.mark.parametrize('truncation', [2, 3, 4])
    def test_completeness(self, truncation):
        """X(DIAMOND) + sum_x X(x) is exactly the identity"""
        space = FockSpace(2, truncation)
        for base in range(truncation):
            pvm = PVM(base, space, VOCAB)
            total = pvm.projector_for(pvm.outcomes).dense()
            assert np.array_equal(total, np.eye(space.dimension))

    def test_projectors_orthogonal_and_idempotent(self):
        """Distinct outcomes are orthogonal; each projector squares to itself"""
        space = FockSpace(2, 3)
        pvm = PVM(1, space, VOCAB)
        dense = {w: pvm.projector(w).dense() for w in pvm.outcomes}
        for a in pvm.outcomes:
            np.testing.assert_array_equal(dense[a] @ dense[a], dense[a])
            for b in pvm.outcomes:
                if a != b:
                    assert not np.any(dense[a] @ dense[b])

    def test_outcome_order(self):
        """DIAMOND comes first, then tokens by id"""
        pvm = PVM(0, FockSpace(2, 1), VOCAB)
        assert pvm.outcomes == (DIAMOND, X0, X1)

    def test_measurement_beyond_truncation(self):
        """A PVM cannot measure past block M"""
        with pytest.raises(TruncationError):
            PVM(3, FockSpace(2, 3), VOCAB)


class TestOutcomeProbabilities:
    """Tests for outcome_probabilities"""

    def test_reads_last_token(self):
        """Probabilities are the weights of sequences ending in each token"""
        state = SequenceEnsembleState(2, {(X0, X0): 0.1, (X1, X0): 0.2, (X0, X1): 0.7})
        probs = outcome_probabilities(PVM(1, FockSpace(2, 2), VOCAB), state)
        assert probs[DIAMOND] == 0.0
        assert probs[X0] == pytest.approx(0.3)
        assert probs[X1] == pytest.approx(0.7)

    def test_matches_dense_trace(self):
        """Sparse probabilities equal Tr[X(w) rho]"""
        space = FockSpace(2, 3)
        state = SequenceEnsembleState(2, {(X0, X0): 0.1, (X1, X0): 0.2, (X0, X1): 0.7})
        rho = to_dense(state, space).dense()
        pvm = PVM(1, space, VOCAB)
        probs = outcome_probabilities(pvm, state)
        for w in pvm.outcomes:
            assert np.trace(pvm.projector(w).dense() @ rho).real == pytest.approx(probs[w], abs=1e-15)

    def test_state_outside_measured_block(self):
        """A state that is not in the measured block gives DIAMOND with certainty"""
        state = SequenceEnsembleState(1, {(X1,): 1.0})
        probs = outcome_probabilities(PVM(1, FockSpace(2, 2), VOCAB), state)
        assert probs[DIAMOND] == 1.0


class TestLudersReduction:
    """Tests for the post-measurement update"""

    def test_keeps_matching_sequences(self):
        """Reduction keeps sequences ending in the outcome and renormalizes"""
        state = SequenceEnsembleState(2, {(X0, X0): 0.1, (X1, X0): 0.3, (X0, X1): 0.6})
        reduced = luders_reduce(PVM(1, FockSpace(2, 2), VOCAB), state, X0)
        assert dict(reduced.items()) == pytest.approx({(X0, X0): 0.25, (X1, X0): 0.75})

    def test_matches_dense_formula(self):
        """Sparse reduction equals E rho E / Tr[E rho]"""
        space = FockSpace(2, 3)
        state = SequenceEnsembleState(2, {(X0, X0): 0.1, (X1, X0): 0.3, (X0, X1): 0.6})
        pvm = PVM(1, space, VOCAB)

        sparse = to_dense(luders_reduce(pvm, state, X1), space).dense()
        dense = luders_reduce_dense(pvm.projector(X1), to_dense(state, space)).dense()
        assert np.max(np.abs(sparse - dense)) <= 1e-15

    def test_zero_probability_outcome(self):
        """Reducing on an impossible outcome raises"""
        state = SequenceEnsembleState(2, {(X0, X0): 1.0})
        with pytest.raises(ZeroProbabilityOutcomeError):
            luders_reduce(PVM(1, FockSpace(2, 2), VOCAB), state, X1)

    def test_reconstruction(self):
        """Mixing the reduced states by their probabilities gives back the state"""
        weights = [0.05, 0.15, 0.3, 0.5]
        seqs = [(X0, X0), (X0, X1), (X1, X0), (X1, X1)]
        state = SequenceEnsembleState(2, dict(zip(seqs, weights)))
        pvm = PVM(1, FockSpace(2, 2), VOCAB)
        probs = outcome_probabilities(pvm, state)

        rebuilt = {}
        for token in VOCAB:
            for seq, w in luders_reduce(pvm, state, token).items():
                rebuilt[seq] = probs[token] * w
        for seq, w in state.items():
            assert rebuilt[seq] == pytest.approx(w, abs=1e-12)
        assert math.fsum(rebuilt.values()) == pytest.approx(1.0, abs=1e-12)


if __name__ == '__main__':
    pytest.main([__file__, '-v'])
