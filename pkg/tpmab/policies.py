"""
Bandit learners for temporally-partitioned rewards.

All learners share the same bookkeeping (:class:`PolicyState`): running sums
of every observed partial reward, completed-pull sums, and a ring buffer of
the live pulls whose reward is still arriving. They differ only in the index
they maximise.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .env import ObservationBatch
from .errors import (
    ArmNotInitializedError,
    ConsistencyError,
    InvalidArgumentError,
    InvalidParameterError,
    InvalidRoundError,
)
from .spread import (
    SpreadPmf,
    expected_index,
    index_of_coincidence,
    parse_spread_spec,
    uniform_spread,
)

logger = logging.getLogger(__name__)

POLICY_KINDS = ('tp_ucb_fr_g', 'tp_ucb_fr', 'ucb1', 'delayed_ucb1', 'uniform_random')


class PolicyState:
    """
    Per-run statistics shared by every learner.

    ``observed_sum[i]`` holds every partial reward seen so far for arm i, so it
    equals the completed cumulative rewards plus the fictitious rewards of the
    live pulls (unseen partials count as zero).
    """

    def __init__(self, num_arms: int, tau_max: int):
        if num_arms < 1:
            raise InvalidParameterError(f"num_arms must be >= 1, got {num_arms}")
        if tau_max < 1:
            raise InvalidParameterError(f"tau_max must be >= 1, got {tau_max}")
        self.num_arms = int(num_arms)
        self.tau_max = int(tau_max)
        self.clock = 1

        self.counts = np.zeros(num_arms, dtype=np.int64)
        self.observed_sum = np.zeros(num_arms, dtype=np.float64)
        self.completed_sum = np.zeros(num_arms, dtype=np.float64)
        self.completed_count = np.zeros(num_arms, dtype=np.int64)

        # live window, indexed by pull round modulo tau_max
        self._win_round = np.full(tau_max, -1, dtype=np.int64)
        self._win_arm = np.full(tau_max, -1, dtype=np.int64)
        self._win_partial = np.zeros(tau_max, dtype=np.float64)
        self._win_seen = np.zeros(tau_max, dtype=np.int64)

    @property
    def fictitious_sum(self) -> np.ndarray:
        """Per-arm sum of the fictitious rewards of live pulls."""
        live = self._win_round >= 0
        out = np.zeros(self.num_arms)
        np.add.at(out, self._win_arm[live], self._win_partial[live])
        return out

    def live_pulls(self) -> List[Tuple[int, int, float, int]]:
        """(pull round, arm, partial sum so far, partials seen), oldest first."""
        live = np.flatnonzero(self._win_round >= 0)
        order = live[np.argsort(self._win_round[live])]
        return [
            (int(self._win_round[s]), int(self._win_arm[s]), float(self._win_partial[s]),
             int(self._win_seen[s]))
            for s in order
        ]

    def update(self, batch: ObservationBatch) -> None:
        """
        Fold one round of partial rewards into the statistics and advance the clock.

        A pull first appears in the batch of its own round (its first partial);
        it is moved to the completed sums once its tau_max-th partial arrives.
        """
        t = self.clock
        if batch.round != t:
            raise ConsistencyError(f"batch for round {batch.round} delivered at round {t}")
        if len(batch) == 0:
            self.clock += 1
            return

        arms = batch.arms
        rounds = batch.pull_rounds
        values = batch.values
        slots = rounds % self.tau_max
        if np.unique(slots).size != slots.size:
            raise ConsistencyError(f"round {t}: several observations for the same pull")
        if np.any(arms < 0) or np.any(arms >= self.num_arms):
            raise ConsistencyError(
                f"round {t}: observation for an arm outside 0..{self.num_arms - 1}"
            )

        new = rounds == t
        if np.count_nonzero(new) > 1:
            raise ConsistencyError(f"round {t}: more than one pull registered")
        if np.any(new):
            slot = slots[new][0]
            self._win_round[slot] = t
            self._win_arm[slot] = arms[new][0]
            self._win_partial[slot] = 0.0
            self._win_seen[slot] = 0
            self.counts[arms[new][0]] += 1

        known = self._win_round[slots] == rounds
        if not np.all(known):
            h = int(rounds[~known][0])
            raise ConsistencyError(f"round {t}: observation for unknown live pull h={h}")
        if np.any(self._win_arm[slots] != arms):
            raise ConsistencyError(f"round {t}: observation attributed to the wrong arm")
        if np.any(self._win_seen[slots] != t - rounds):
            raise ConsistencyError(f"round {t}: partial reward delivered out of schedule")

        self._win_partial[slots] += values
        self._win_seen[slots] += 1
        np.add.at(self.observed_sum, arms, values)

        done = slots[self._win_seen[slots] == self.tau_max]
        if done.size:
            np.add.at(self.completed_sum, self._win_arm[done], self._win_partial[done])
            np.add.at(self.completed_count, self._win_arm[done], 1)
            self._win_round[done] = -1
        self.clock += 1


class Policy:
    """Base learner: round-robin initialisation, then argmax of :meth:`indices`."""

    kind = ''

    def __init__(self, num_arms: int, tau_max: int,
                 max_rewards: Optional[Sequence[float]] = None, name: str = ''):
        self.state = PolicyState(num_arms, tau_max)
        if max_rewards is None:
            max_rewards = np.ones(num_arms)
        max_rewards = np.asarray(max_rewards, dtype=np.float64).reshape(-1)
        if max_rewards.shape[0] != num_arms:
            raise InvalidParameterError(
                f"got {max_rewards.shape[0]} max rewards for {num_arms} arms"
            )
        if np.any(max_rewards <= 0):
            raise InvalidParameterError("max rewards must all be > 0")
        self.max_rewards = max_rewards
        self.max_reward = float(np.max(max_rewards))
        self.name = name or self.kind

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.name!r}, K={self.num_arms}, tau_max={self.tau_max})"

    @property
    def num_arms(self) -> int:
        return self.state.num_arms

    @property
    def tau_max(self) -> int:
        return self.state.tau_max

    @property
    def counts(self) -> np.ndarray:
        return self.state.counts

    def estimated_mean(self, arm: int) -> float:
        """R-hat: (completed rewards + fictitious rewards of live pulls) / N_i."""
        self._check_arm(arm)
        n = self.state.counts[arm]
        if n == 0:
            raise ArmNotInitializedError(f"arm {arm} has not been pulled yet")
        return float(self.state.observed_sum[arm] / n)

    def indices(self, t: int) -> np.ndarray:
        raise NotImplementedError

    def select_arm(self, t: int) -> int:
        """Arm t-1 during the first K rounds, then the argmax of the index (lowest arm on ties)."""
        if t < 1:
            raise InvalidRoundError(f"round must be >= 1, got {t}")
        if t <= self.num_arms:
            return t - 1
        return int(np.argmax(self.indices(t)))

    def update(self, batch: ObservationBatch) -> None:
        self.state.update(batch)

    def _check_arm(self, arm: int) -> None:
        if not 0 <= arm < self.num_arms:
            raise InvalidArgumentError(f"arm {arm} out of range 0..{self.num_arms - 1}")


class TpUcbFrG(Policy):
    """
    TP-UCB-FR-G: optimistic index R-hat + c with a confidence term shaped by a spread PMF.

    c = phi * R_i * E[Y] / N_i + R_i * sqrt(2 ln(t-1) * IC / N_i)
    """

    kind = 'tp_ucb_fr_g'

    def __init__(self, num_arms: int, tau_max: int, alpha_est: int, spread: SpreadPmf,
                 max_rewards: Optional[Sequence[float]] = None, name: str = ''):
        if alpha_est < 1 or tau_max % alpha_est != 0:
            raise InvalidParameterError(
                f"alpha_est={alpha_est} does not divide tau_max={tau_max}"
            )
        if spread.alpha != alpha_est:
            raise InvalidParameterError(
                f"spread distribution has alpha={spread.alpha}, expected alpha_est={alpha_est}"
            )
        super().__init__(num_arms, tau_max, max_rewards, name)
        self.alpha_est = int(alpha_est)
        self.phi = tau_max // alpha_est
        self.spread = spread
        self.mean_index = expected_index(spread)
        self.coincidence = index_of_coincidence(spread)
        if not name:
            self.name = f'{self.kind}({alpha_est},{spread.label})'

    def confidence_term(self, arm: int, t: int) -> float:
        self._check_arm(arm)
        if t < 2:
            raise InvalidRoundError(f"the confidence term needs t >= 2, got {t}")
        n = self.state.counts[arm]
        if n == 0:
            raise ArmNotInitializedError(f"arm {arm} has not been pulled yet")
        r = self.max_rewards[arm]
        log_t = math.log(max(t - 1, 1))
        return (self.phi * r * self.mean_index / n
                + r * math.sqrt(2.0 * log_t * self.coincidence / n))

    def confidence_terms(self, t: int) -> np.ndarray:
        if t < 2:
            raise InvalidRoundError(f"the confidence term needs t >= 2, got {t}")
        n = self.state.counts.astype(np.float64)
        r = self.max_rewards
        log_t = math.log(max(t - 1, 1))
        with np.errstate(divide='ignore', invalid='ignore'):
            c = self.phi * r * self.mean_index / n + r * np.sqrt(2.0 * log_t * self.coincidence / n)
        return np.where(n > 0, c, np.inf)

    def indices(self, t: int) -> np.ndarray:
        n = self.state.counts
        with np.errstate(divide='ignore', invalid='ignore'):
            means = np.where(n > 0, self.state.observed_sum / np.maximum(n, 1), 0.0)
        return means + self.confidence_terms(t)


class TpUcbFr(TpUcbFrG):
    """TP-UCB-FR: TP-UCB-FR-G with the uniform spread of ``alpha_est``."""

    kind = 'tp_ucb_fr'

    def __init__(self, num_arms: int, tau_max: int, alpha_est: int,
                 max_rewards: Optional[Sequence[float]] = None, name: str = ''):
        super().__init__(num_arms, tau_max, alpha_est, uniform_spread(alpha_est),
                         max_rewards, name or f'tp_ucb_fr({alpha_est})')


class Ucb1(Policy):
    """UCB1 on fictitious cumulative rewards: R-hat + R_max * sqrt(2 ln t / N_i)."""

    kind = 'ucb1'

    def indices(self, t: int) -> np.ndarray:
        n = self.state.counts
        return self._index(self.state.observed_sum, n, t)

    def _index(self, sums: np.ndarray, n: np.ndarray, t: int) -> np.ndarray:
        safe = np.maximum(n, 1).astype(np.float64)
        bonus = self.max_reward * np.sqrt(2.0 * math.log(t) / safe)
        return np.where(n > 0, sums / safe + bonus, np.inf)


class DelayedUcb1(Ucb1):
    """UCB1 that only uses pulls whose full cumulative reward has arrived."""

    kind = 'delayed_ucb1'

    def indices(self, t: int) -> np.ndarray:
        return self._index(self.state.completed_sum, self.state.completed_count, t)


class UniformRandom(Policy):
    """Picks an arm uniformly at random every round."""

    kind = 'uniform_random'

    def __init__(self, num_arms: int, tau_max: int, rng: Optional[np.random.Generator] = None,
                 max_rewards: Optional[Sequence[float]] = None, name: str = ''):
        super().__init__(num_arms, tau_max, max_rewards, name)
        self.rng = rng if rng is not None else np.random.default_rng()

    def select_arm(self, t: int) -> int:
        if t < 1:
            raise InvalidRoundError(f"round must be >= 1, got {t}")
        return int(self.rng.integers(self.num_arms))

    def indices(self, t: int) -> np.ndarray:
        return np.zeros(self.num_arms)


def make_tp_ucb_fr_g(K: int, tau_max: int, alpha_est: int, B: SpreadPmf,
                     max_rewards: Optional[Sequence[float]] = None) -> TpUcbFrG:
    return TpUcbFrG(K, tau_max, alpha_est, B, max_rewards)


def make_tp_ucb_fr(K: int, tau_max: int, alpha_est: int,
                   max_rewards: Optional[Sequence[float]] = None) -> TpUcbFr:
    return TpUcbFr(K, tau_max, alpha_est, max_rewards)


def make_ucb1(K: int, max_rewards: Optional[Sequence[float]] = None, tau_max: int = 1) -> Ucb1:
    return Ucb1(K, tau_max, max_rewards)


def make_delayed_ucb1(K: int, tau_max: int,
                      max_rewards: Optional[Sequence[float]] = None) -> DelayedUcb1:
    return DelayedUcb1(K, tau_max, max_rewards)


@dataclass
class PolicySpec:
    """
    Learner description as it appears in an experiment config.

    ``tau_max`` and ``num_arms`` are optional; when given they must match the
    environment the learner runs against.
    """
    kind: str
    name: str = ''
    alpha_est: Optional[int] = None
    distribution: Optional[Dict[str, Any]] = None
    tau_max: Optional[int] = None
    num_arms: Optional[int] = None

    def __post_init__(self):
        if self.kind not in POLICY_KINDS:
            raise InvalidParameterError(
                f"unknown policy kind {self.kind!r} (valid: {', '.join(POLICY_KINDS)})"
            )
        if self.kind in ('tp_ucb_fr_g', 'tp_ucb_fr') and self.alpha_est is None:
            raise InvalidParameterError(f"policy kind '{self.kind}' needs 'alpha_est'")
        if self.kind == 'tp_ucb_fr_g' and self.distribution is None:
            raise InvalidParameterError("policy kind 'tp_ucb_fr_g' needs 'distribution'")
        if not self.name:
            self.name = self.default_name()

    def spread(self) -> Optional[SpreadPmf]:
        if self.kind == 'tp_ucb_fr_g':
            return parse_spread_spec(self.distribution, alpha=self.alpha_est)
        if self.kind == 'tp_ucb_fr':
            return uniform_spread(self.alpha_est)
        return None

    def default_name(self) -> str:
        if self.kind == 'tp_ucb_fr_g':
            return f'TP-UCB-FR-G({self.alpha_est}, {self.spread().label})'
        if self.kind == 'tp_ucb_fr':
            return f'TP-UCB-FR({self.alpha_est})'
        return {'ucb1': 'UCB1', 'delayed_ucb1': 'Delayed-UCB1',
                'uniform_random': 'Uniform-Random'}[self.kind]

    def build(self, num_arms: int, tau_max: int, max_rewards: Optional[Sequence[float]] = None,
              rng: Optional[np.random.Generator] = None) -> Policy:
        """Instantiate the learner for an environment of shape (num_arms, tau_max)."""
        if self.tau_max is not None and self.tau_max != tau_max:
            raise InvalidParameterError(
                f"policy '{self.name}' expects tau_max={self.tau_max}, environment has {tau_max}"
            )
        if self.num_arms is not None and self.num_arms != num_arms:
            raise InvalidParameterError(
                f"policy '{self.name}' expects K={self.num_arms}, environment has {num_arms}"
            )
        if self.kind == 'tp_ucb_fr_g':
            return TpUcbFrG(num_arms, tau_max, self.alpha_est, self.spread(), max_rewards,
                            self.name)
        if self.kind == 'tp_ucb_fr':
            return TpUcbFr(num_arms, tau_max, self.alpha_est, max_rewards, self.name)
        if self.kind == 'ucb1':
            return Ucb1(num_arms, tau_max, max_rewards, self.name)
        if self.kind == 'delayed_ucb1':
            return DelayedUcb1(num_arms, tau_max, max_rewards, self.name)
        return UniformRandom(num_arms, tau_max, rng, max_rewards, self.name)

    def to_dict(self) -> dict:
        data: Dict[str, Any] = {'kind': self.kind, 'name': self.name}
        if self.alpha_est is not None:
            data['alpha_est'] = self.alpha_est
        if self.distribution is not None:
            data['distribution'] = self.distribution
        if self.tau_max is not None:
            data['tau_max'] = self.tau_max
        if self.num_arms is not None:
            data['num_arms'] = self.num_arms
        return data

    @classmethod
    def from_dict(cls, data: dict) -> 'PolicySpec':
        alpha = data.get('alpha_est')
        return cls(
            kind=data.get('kind', ''),
            name=data.get('name', ''),
            alpha_est=None if alpha is None else int(alpha),
            distribution=data.get('distribution'),
            tau_max=data.get('tau_max'),
            num_arms=data.get('num_arms'),
        )
