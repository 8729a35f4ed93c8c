"""
Sequential Measurement Protocol

Starting from rho_T, step l = 1..L applies E(t_l, t_0), measures X_l and
Lueders-reduces on the observed token. Exact enumeration walks every
nonzero branch; sampling follows one branch per trajectory with its own
derived seed.
"""

import logging
import math
from collections import Counter
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple

from model.transformer import (
    Distribution,
    JointDistribution,
    TransformerStack,
    derive_trajectory_seeds,
    draw,
    make_generator,
)
from model.vocab import Embedding, Text, Token
from quantum.channel import QuantumOperation, apply_channel, build_channels
from quantum.fock import (
    WEIGHT_TOLERANCE,
    FockSpace,
    SequenceEnsembleState,
    TokenSequence,
    TruncationError,
    input_state,
)
from quantum.measurement import DIAMOND, PVM, luders_reduce, outcome_probabilities

logger = logging.getLogger(__name__)


class ProtocolInvariantError(RuntimeError):
    """Raised when a protocol state breaks normalization or the DIAMOND outcome fires."""


@dataclass(frozen=True)
class TrajectoryRecord:
    """One branch of the sequential measurement: outcomes y^(1)..y^(L) and their probabilities."""
    outcomes: Text
    probability: float
    per_step_probabilities: Tuple[float, ...]

    def __post_init__(self):
        if len(self.per_step_probabilities) != len(self.outcomes):
            raise ValueError("Need one step probability per outcome")
        expected = math.prod(self.per_step_probabilities)
        if abs(expected - self.probability) > WEIGHT_TOLERANCE:
            raise ValueError(
                f"Trajectory probability {self.probability!r} != product of steps {expected!r}"
            )

    @property
    def steps(self) -> int:
        return len(self.outcomes)


class MeasurementProtocol:
    """
    The physical model {E(t_l, t_0)} for a stack, bound to one input text.

    Usage:
        protocol = MeasurementProtocol(stack, text, embedding)
        joint = protocol.run()
        counts = protocol.sample(seed=7, trajectories=1000)
    """

    def __init__(
        self,
        stack: TransformerStack,
        text: Text,
        emb: Embedding,
        vacuum_token: Optional[Token] = None,
        truncation: Optional[int] = None
    ):
        text.check_vocabulary(emb.vocabulary)
        self.stack = stack
        self.text = text
        self.embedding = emb

        minimum = text.length + stack.depth
        self.space = FockSpace(len(emb.vocabulary), truncation or minimum)
        if self.space.truncation < minimum:
            raise TruncationError(
                f"Protocol needs n + L = {minimum} blocks, truncation is M={self.space.truncation}"
            )

        self.channels: List[QuantumOperation] = build_channels(stack, emb, self.space, vacuum_token)
        self.initial_state = input_state(text, self.space)
        self._step_cache: Dict[Tuple[int, TokenSequence], Tuple[SequenceEnsembleState, Distribution]] = {}
        self._reduce_cache: Dict[Tuple[int, TokenSequence, Token], SequenceEnsembleState] = {}

        logger.debug(
            f"Protocol ready: n={text.length}, L={stack.depth}, M={self.space.truncation}, "
            f"N={self.space.vocab_size}"
        )

    def pvm(self, step: int) -> PVM:
        """X_l for step l (1-based): measures block n + l."""
        return PVM(self.text.length + step - 1, self.space, self.embedding.vocabulary)

    def evolve(self, step: int, state: SequenceEnsembleState) -> Tuple[SequenceEnsembleState, Distribution]:
        """Apply E(t_l, t_0) and compute the outcome probabilities of X_l, checking state sanity."""
        key = None
        if len(state) == 1:
            key = (step, next(iter(state)))
            if key in self._step_cache:
                return self._step_cache[key]

        evolved = apply_channel(self.channels[step - 1], state)
        probabilities = outcome_probabilities(self.pvm(step), evolved)
        _check_sanity(step, evolved, probabilities)

        if key is not None:
            self._step_cache[key] = (evolved, probabilities)
        return evolved, probabilities

    def _reduced(self, step: int, state: SequenceEnsembleState, evolved: SequenceEnsembleState, token: Token):
        key = (step, next(iter(state)), token)
        if key not in self._reduce_cache:
            self._reduce_cache[key] = luders_reduce(self.pvm(step), evolved, token)
        return self._reduce_cache[key]

    def trajectories(self) -> List[TrajectoryRecord]:
        """Every nonzero-probability branch, outcomes in ascending token order."""
        records: List[TrajectoryRecord] = []

        def descend(step: int, state: SequenceEnsembleState, outcomes: Tuple[Token, ...], probs: Tuple[float, ...]):
            if step > self.stack.depth:
                records.append(TrajectoryRecord(Text(outcomes), math.prod(probs), probs))
                return
            evolved, probabilities = self.evolve(step, state)
            for token in self.embedding.vocabulary:
                p = probabilities[token]
                if p <= 0:
                    continue
                reduced = luders_reduce(self.pvm(step), evolved, token)
                descend(step + 1, reduced, outcomes + (token,), probs + (p,))

        descend(1, self.initial_state, (), ())
        logger.debug(f"Protocol enumeration visited {len(records)} trajectories")
        return records

    def run(self) -> JointDistribution:
        """The joint distribution of the L measurement outcomes."""
        return JointDistribution({r.outcomes: r.probability for r in self.trajectories()})

    def sample_one(self, seed: Any) -> TrajectoryRecord:
        """Simulate one trajectory of measurement outcomes."""
        uniforms = make_generator(seed).random(self.stack.depth)
        state = self.initial_state
        outcomes: List[Token] = []
        probs: List[float] = []

        for step, u in enumerate(uniforms, start=1):
            evolved, probabilities = self.evolve(step, state)
            token, p = draw(probabilities, u)
            state = self._reduced(step, state, evolved, token)
            outcomes.append(token)
            probs.append(p)

        return TrajectoryRecord(Text(tuple(outcomes)), math.prod(probs), tuple(probs))

    def sample(self, seed: int, trajectories: int) -> Dict[Text, int]:
        """Outcome counts over trajectories, each with a seed spawned from seed."""
        if trajectories < 1:
            raise ValueError(f"Need at least one trajectory, got {trajectories}")
        counts = Counter(
            self.sample_one(child).outcomes
            for child in derive_trajectory_seeds(seed, trajectories)
        )
        return dict(sorted(counts.items()))


def _check_sanity(step: int, state: SequenceEnsembleState, probabilities: Distribution) -> None:
    if any(w < 0 for _, w in state.items()) or abs(state.total_weight() - 1.0) > WEIGHT_TOLERANCE:
        raise ProtocolInvariantError(f"Step {step}: state weights are not a distribution")
    if probabilities[DIAMOND] > WEIGHT_TOLERANCE:
        raise ProtocolInvariantError(
            f"Step {step}: DIAMOND outcome has probability {probabilities[DIAMOND]!r}"
        )


def enumerate_trajectories(
    stack: TransformerStack,
    text: Text,
    emb: Embedding,
    vacuum_token: Optional[Token] = None
) -> List[TrajectoryRecord]:
    """Every nonzero branch of the sequential measurement with per-step probabilities."""
    return MeasurementProtocol(stack, text, emb, vacuum_token).trajectories()


def run_protocol(
    stack: TransformerStack,
    text: Text,
    emb: Embedding,
    vacuum_token: Optional[Token] = None,
    truncation: Optional[int] = None
) -> JointDistribution:
    """Exact joint distribution realised by the sequential measurement."""
    return MeasurementProtocol(stack, text, emb, vacuum_token, truncation).run()


def sample_protocol(
    stack: TransformerStack,
    text: Text,
    emb: Embedding,
    seed: int,
    trajectories: int,
    vacuum_token: Optional[Token] = None
) -> Dict[Text, int]:
    """Monte-Carlo counts of generated texts from the sequential measurement."""
    return MeasurementProtocol(stack, text, emb, vacuum_token).sample(seed, trajectories)
