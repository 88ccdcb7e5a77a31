"""
Temporally-partitioned reward environments.

Each pull of arm i draws alpha z-group aggregates, expands them to tau_max
per-round partial rewards, and reveals one partial per round for the next
tau_max rounds. The environment keeps a ring buffer of depth tau_max holding
the reward vectors of the live pulls.
"""

from __future__ import annotations

import csv
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import InvalidArgumentError, InvalidParameterError, TraceLoadError

logger = logging.getLogger(__name__)

# R^i = 100 * zeta_i for the synthetic settings
ZETA = (1, 3, 6, 9, 12, 15, 18, 21, 22, 23)

# Setting 2 configurations: (tau_max, alpha)
SETTING2_CONFIGURATIONS: Dict[int, Tuple[int, int]] = {
    1: (100, 10),
    2: (100, 50),
    3: (200, 20),
    4: (200, 100),
}
SETTING2_SCENARIOS = ('uniform', 'late', 'early')

TRACE_HEADER = re.compile(r'^tpmab-trace v1 K=(\d+) tau_max=(\d+)\s*$')

# Offset of the policy's own stream; arm streams use jumps 0..K-1
POLICY_STREAM_OFFSET = 1 << 20


# ---------------------------------------------------------------------------
# Samplers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class UniformScaled:
    """Z_k ~ (R/alpha) * U[0, 1], independently for every z-group."""
    kind = 'uniform'

    def sample_groups(self, rng: np.random.Generator, max_reward: float, alpha: int) -> np.ndarray:
        return (max_reward / alpha) * rng.random(alpha)

    def group_means(self, max_reward: float, alpha: int) -> np.ndarray:
        return np.full(alpha, 0.5 * max_reward / alpha)

    def to_dict(self) -> dict:
        return {'kind': self.kind}


@dataclass(frozen=True, eq=False)
class BetaScaled:
    """Z_k ~ (R/alpha) * Beta(a_k, b_k) with one (a, b) pair per z-group."""
    a: np.ndarray
    b: np.ndarray
    kind = 'beta'

    def __post_init__(self):
        a = np.array(self.a, dtype=np.float64).reshape(-1)
        b = np.array(self.b, dtype=np.float64).reshape(-1)
        if a.shape != b.shape:
            raise InvalidParameterError(f"a has {a.size} entries but b has {b.size}")
        if np.any(a <= 0) or np.any(b <= 0):
            raise InvalidParameterError("Beta parameters must all be > 0")
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, 'a', a)
        object.__setattr__(self, 'b', b)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BetaScaled):
            return NotImplemented
        return np.array_equal(self.a, other.a) and np.array_equal(self.b, other.b)

    def sample_groups(self, rng: np.random.Generator, max_reward: float, alpha: int) -> np.ndarray:
        return (max_reward / alpha) * rng.beta(self.a, self.b)

    def group_means(self, max_reward: float, alpha: int) -> np.ndarray:
        return (max_reward / alpha) * self.a / (self.a + self.b)

    def to_dict(self) -> dict:
        return {'kind': self.kind, 'a': self.a.tolist(), 'b': self.b.tolist()}


@dataclass(frozen=True, eq=False)
class TraceSampler:
    """Replays recorded per-round reward vectors, drawn uniformly with replacement."""
    records: np.ndarray
    source: str = ""
    kind = 'trace'

    def __post_init__(self):
        records = np.array(self.records, dtype=np.float64)
        if records.ndim != 2 or records.shape[0] == 0:
            raise InvalidParameterError("a trace sampler needs at least one record")
        records.setflags(write=False)
        object.__setattr__(self, 'records', records)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TraceSampler):
            return NotImplemented
        return np.array_equal(self.records, other.records)

    def sample_vector(self, rng: np.random.Generator) -> np.ndarray:
        return self.records[rng.integers(self.records.shape[0])]

    @property
    def mean_cumulative(self) -> float:
        return float(np.mean(self.records.sum(axis=1)))

    def to_dict(self) -> dict:
        return {'kind': self.kind, 'source': self.source, 'records': self.records.tolist()}


Sampler = Union[UniformScaled, BetaScaled, TraceSampler]


def sampler_from_dict(data: Dict[str, Any]) -> Sampler:
    """Inverse of ``Sampler.to_dict``."""
    kind = data.get('kind')
    if kind == 'uniform':
        return UniformScaled()
    if kind == 'beta':
        return BetaScaled(a=data['a'], b=data['b'])
    if kind == 'trace':
        return TraceSampler(records=data['records'], source=data.get('source', ''))
    raise InvalidParameterError(f"unknown sampler kind {kind!r} (valid: uniform, beta, trace)")


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ArmSpec:
    """Generative description of one arm: its maximum cumulative reward and sampler."""
    max_reward: float
    sampler: Sampler = field(default_factory=UniformScaled)

    def __post_init__(self):
        if not self.max_reward > 0:
            raise InvalidParameterError(f"max_reward must be > 0, got {self.max_reward!r}")

    def to_dict(self) -> dict:
        return {'max_reward': self.max_reward, 'sampler': self.sampler.to_dict()}

    @classmethod
    def from_dict(cls, data: dict) -> 'ArmSpec':
        return cls(max_reward=float(data['max_reward']), sampler=sampler_from_dict(data['sampler']))


@dataclass(frozen=True)
class EnvironmentConfig:
    """Global shape (K, tau_max, alpha) plus the K arm descriptions and a seed."""
    tau_max: int
    alpha: int
    arms: Tuple[ArmSpec, ...]
    seed: int = 0
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, 'arms', tuple(self.arms))
        if self.tau_max < 1 or self.alpha < 1:
            raise InvalidParameterError("tau_max and alpha must be positive integers")
        if self.tau_max % self.alpha != 0:
            raise InvalidParameterError(
                f"alpha={self.alpha} does not divide tau_max={self.tau_max}"
            )
        if not self.arms:
            raise InvalidParameterError("an environment needs at least one arm")
        for i, arm in enumerate(self.arms):
            sampler = arm.sampler
            if isinstance(sampler, BetaScaled) and sampler.a.size != self.alpha:
                raise InvalidParameterError(
                    f"arm {i}: Beta parameter vectors have length {sampler.a.size}, "
                    f"expected alpha={self.alpha}"
                )
            if isinstance(sampler, TraceSampler) and sampler.records.shape[1] != self.tau_max:
                raise InvalidParameterError(
                    f"arm {i}: trace records have {sampler.records.shape[1]} rounds, "
                    f"expected tau_max={self.tau_max}"
                )

    @property
    def num_arms(self) -> int:
        return len(self.arms)

    @property
    def phi(self) -> int:
        """Rounds per z-group."""
        return self.tau_max // self.alpha

    @property
    def max_rewards(self) -> np.ndarray:
        return np.array([arm.max_reward for arm in self.arms], dtype=np.float64)

    @property
    def means(self) -> np.ndarray:
        return np.array([true_mean(self, i) for i in range(self.num_arms)])

    @property
    def optimal_arm(self) -> int:
        return int(np.argmax(self.means))

    def to_dict(self) -> dict:
        return {
            'name': self.name,
            'tau_max': self.tau_max,
            'alpha': self.alpha,
            'seed': self.seed,
            'arms': [arm.to_dict() for arm in self.arms],
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'EnvironmentConfig':
        return cls(
            tau_max=int(data['tau_max']),
            alpha=int(data['alpha']),
            arms=tuple(ArmSpec.from_dict(a) for a in data['arms']),
            seed=int(data.get('seed', 0)),
            name=data.get('name', ''),
        )


def true_mean(config: EnvironmentConfig, arm: int) -> float:
    """Expected cumulative reward mu_i of one pull of ``arm``."""
    if not 0 <= arm < config.num_arms:
        raise InvalidArgumentError(f"arm {arm} out of range 0..{config.num_arms - 1}")
    spec = config.arms[arm]
    sampler = spec.sampler
    if isinstance(sampler, TraceSampler):
        return sampler.mean_cumulative
    if isinstance(sampler, UniformScaled):
        return spec.max_reward / 2.0
    return float(np.sum(sampler.group_means(spec.max_reward, config.alpha)))


# ---------------------------------------------------------------------------
# Observations and the running environment
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ObservationBatch:
    """
    Partial rewards revealed at one round.

    Parallel arrays: ``arms[n]`` was pulled at round ``pull_rounds[n]`` and
    delivers ``values[n]`` at round ``round``.
    """
    round: int
    arms: np.ndarray
    pull_rounds: np.ndarray
    values: np.ndarray

    @classmethod
    def empty(cls, round: int) -> 'ObservationBatch':
        return cls(
            round=round,
            arms=np.zeros(0, dtype=np.int64),
            pull_rounds=np.zeros(0, dtype=np.int64),
            values=np.zeros(0, dtype=np.float64),
        )

    def __len__(self) -> int:
        return int(self.values.shape[0])

    @property
    def items(self) -> List[Tuple[int, int, float]]:
        """(arm, pull round, partial reward) triples, oldest pull first."""
        return list(zip(self.arms.tolist(), self.pull_rounds.tolist(), self.values.tolist()))

    def __iter__(self) -> Iterator[Tuple[int, int, float]]:
        return iter(self.items)


class Environment:
    """
    One run's environment state.

    Randomness comes from a Philox counter-based generator seeded with the
    run seed; arm i draws from the sub-stream ``jumped(i)``, so the k-th pull
    of an arm yields the same reward whatever the other pulls were.
    """

    def __init__(self, config: EnvironmentConfig, seed: Optional[int] = None):
        self.config = config
        self.seed = config.seed if seed is None else int(seed)
        base = np.random.Philox(self.seed)
        self._arm_rngs = [np.random.Generator(base.jumped(i)) for i in range(config.num_arms)]

        tau = config.tau_max
        self._rewards = np.zeros((tau, tau), dtype=np.float64)
        self._cumulative = np.zeros(tau, dtype=np.float64)
        self._pull_round = np.full(tau, -1, dtype=np.int64)
        self._pull_arm = np.full(tau, -1, dtype=np.int64)
        self.pull_count = 0

    def sample_pull(self, arm: int, t: int) -> np.ndarray:
        """
        Draw the full reward vector x_{t,t} .. x_{t,t+tau_max-1} of pulling ``arm`` at ``t``.

        The vector is buffered and revealed one entry per round by :meth:`observe`.
        """
        config = self.config
        if not 0 <= arm < config.num_arms:
            raise InvalidArgumentError(f"arm {arm} out of range 0..{config.num_arms - 1}")
        if t < 1:
            raise InvalidArgumentError(f"round must be >= 1, got {t}")

        spec = config.arms[arm]
        rng = self._arm_rngs[arm]
        if isinstance(spec.sampler, TraceSampler):
            vector = spec.sampler.sample_vector(rng)
        else:
            groups = spec.sampler.sample_groups(rng, spec.max_reward, config.alpha)
            vector = np.repeat(groups / config.phi, config.phi)

        slot = t % config.tau_max
        self._rewards[slot] = vector
        # sequential sum, the same order in which partials are revealed
        self._cumulative[slot] = np.cumsum(vector)[-1]
        self._pull_round[slot] = t
        self._pull_arm[slot] = arm
        self.pull_count += 1
        return self._rewards[slot].copy()

    def observe(self, t: int) -> ObservationBatch:
        """One partial reward for every live pull h in t-tau_max+1 .. t."""
        tau = self.config.tau_max
        rounds = np.arange(max(1, t - tau + 1), t + 1, dtype=np.int64)
        slots = rounds % tau
        live = self._pull_round[slots] == rounds
        rounds, slots = rounds[live], slots[live]
        if rounds.size == 0:
            return ObservationBatch.empty(t)
        return ObservationBatch(
            round=t,
            arms=self._pull_arm[slots].copy(),
            pull_rounds=rounds,
            values=self._rewards[slots, t - rounds].copy(),
        )

    def cumulative_reward(self, h: int) -> float:
        """Cumulative reward r_h sampled for the pull made at round ``h`` (while still buffered)."""
        slot = h % self.config.tau_max
        if self._pull_round[slot] != h:
            raise InvalidArgumentError(f"no buffered pull for round {h}")
        return float(self._cumulative[slot])

    def policy_rng(self) -> np.random.Generator:
        """A stream reserved for randomized policies, disjoint from every arm stream."""
        return np.random.Generator(np.random.Philox(self.seed).jumped(POLICY_STREAM_OFFSET))


# ---------------------------------------------------------------------------
# Named settings
# ---------------------------------------------------------------------------

def _zeta_max_rewards(num_arms: int) -> List[float]:
    if not 1 <= num_arms <= len(ZETA):
        raise InvalidParameterError(f"num_arms must lie in 1..{len(ZETA)}, got {num_arms}")
    return [100.0 * z for z in ZETA[:num_arms]]


def make_setting1(alpha_true: int = 20, tau_max: int = 100, K: int = 10) -> EnvironmentConfig:
    """Uniformly spread rewards, Z_k ~ (R/alpha) U[0,1], R^i = 100 * zeta_i."""
    arms = tuple(ArmSpec(max_reward=r, sampler=UniformScaled()) for r in _zeta_max_rewards(K))
    return EnvironmentConfig(
        tau_max=tau_max,
        alpha=alpha_true,
        arms=arms,
        name=f'setting1(alpha={alpha_true}, tau_max={tau_max})',
    )


def setting2_parameters(alpha: int, scenario: str) -> Tuple[np.ndarray, np.ndarray]:
    """
    Per-group Beta parameters (a, b) for a Setting 2 scenario.

    ``late`` ramps a up as [2, 4, ..., alpha, ..., alpha] with b its reverse, so mass
    arrives late; ``early`` swaps the two vectors; ``uniform`` is all ones.
    """
    if scenario == 'uniform':
        ones = np.ones(alpha)
        return ones, ones.copy()
    ramp = np.minimum(2.0 * np.arange(1, alpha + 1), float(alpha))
    if scenario == 'late':
        return ramp, ramp[::-1].copy()
    if scenario == 'early':
        return ramp[::-1].copy(), ramp
    raise InvalidParameterError(
        f"unknown scenario {scenario!r} (valid: {', '.join(SETTING2_SCENARIOS)})"
    )


def make_setting2(configuration: int, scenario: str) -> EnvironmentConfig:
    """Beta-spread rewards for one of the four (tau_max, alpha) configurations."""
    if configuration not in SETTING2_CONFIGURATIONS:
        raise InvalidParameterError(
            f"unknown configuration {configuration!r} (valid: 1, 2, 3, 4)"
        )
    tau_max, alpha = SETTING2_CONFIGURATIONS[configuration]
    a, b = setting2_parameters(alpha, scenario)
    sampler = BetaScaled(a=a, b=b)
    arms = tuple(ArmSpec(max_reward=r, sampler=sampler) for r in _zeta_max_rewards(len(ZETA)))
    return EnvironmentConfig(
        tau_max=tau_max,
        alpha=alpha,
        arms=arms,
        name=f'setting2(configuration={configuration}, scenario={scenario})',
    )


# ---------------------------------------------------------------------------
# Trace files
# ---------------------------------------------------------------------------

def write_trace(path: Union[str, Path], records: Sequence[Tuple[int, Sequence[float]]],
                num_arms: int, tau_max: int) -> Path:
    """Write ``(arm, rewards)`` records in the ``tpmab-trace v1`` format."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8', newline='') as f:
        f.write(f"tpmab-trace v1 K={num_arms} tau_max={tau_max}\n")
        writer = csv.writer(f, lineterminator='\n')
        for arm, rewards in records:
            writer.writerow([int(arm)] + [repr(float(x)) for x in rewards])
    return path


def load_trace(path: Union[str, Path]) -> Tuple[int, int, Dict[int, np.ndarray]]:
    """
    Parse a trace file into (K, tau_max, {arm: records array}).

    Raises :class:`TraceLoadError` naming the file and line on any problem.
    """
    path = Path(path)
    if not path.exists():
        raise TraceLoadError(f"trace file not found: {path}")
    try:
        with open(path, 'r', encoding='utf-8', newline='') as f:
            lines = f.read().split('\n')
    except OSError as e:
        raise TraceLoadError(f"cannot read trace file {path}: {e}") from e

    if not lines or not lines[0].strip():
        raise TraceLoadError(f"{path}: empty trace file (0 records, header missing)")
    match = TRACE_HEADER.match(lines[0])
    if not match:
        raise TraceLoadError(
            f"{path}:1: bad header {lines[0]!r}, expected 'tpmab-trace v1 K=<K> tau_max=<tau>'"
        )
    num_arms, tau_max = int(match.group(1)), int(match.group(2))

    per_arm: Dict[int, List[List[float]]] = {i: [] for i in range(num_arms)}
    for lineno, row in enumerate(csv.reader(lines[1:]), start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != tau_max + 1:
            raise TraceLoadError(
                f"{path}:{lineno}: malformed record with {len(row) - 1} rewards, "
                f"expected tau_max={tau_max}"
            )
        try:
            arm = int(row[0])
            rewards = [float(cell) for cell in row[1:]]
        except ValueError as e:
            raise TraceLoadError(f"{path}:{lineno}: malformed record: {e}") from e
        if not 0 <= arm < num_arms:
            raise TraceLoadError(f"{path}:{lineno}: arm index {arm} outside 0..{num_arms - 1}")
        if any(x < 0 or not np.isfinite(x) for x in rewards):
            raise TraceLoadError(f"{path}:{lineno}: rewards must be finite and non-negative")
        per_arm[arm].append(rewards)

    total = sum(len(v) for v in per_arm.values())
    empty = [arm for arm, recs in per_arm.items() if not recs]
    if empty:
        raise TraceLoadError(
            f"{path}: {total} records loaded; arm(s) {', '.join(map(str, empty))} have zero records"
        )
    logger.debug(f"Loaded trace {path}: {total} records over {num_arms} arms")
    return num_arms, tau_max, {arm: np.array(recs) for arm, recs in per_arm.items()}


def make_trace_env(path: Union[str, Path], K: int, tau_max: int,
                   alpha: Optional[int] = None) -> EnvironmentConfig:
    """
    Environment that replays recorded reward vectors.

    R^i is the largest recorded cumulative reward of arm i; alpha defaults
    to tau_max (one round per z-group).
    """
    num_arms, file_tau, records = load_trace(path)
    if num_arms != K:
        raise TraceLoadError(f"{path}: header declares K={num_arms}, expected K={K}")
    if file_tau != tau_max:
        raise TraceLoadError(f"{path}: header declares tau_max={file_tau}, expected {tau_max}")
    arms = []
    for i in range(K):
        recs = records[i]
        max_reward = float(np.max(recs.sum(axis=1)))
        if max_reward <= 0:
            raise TraceLoadError(f"{path}: arm {i} never earns a positive reward")
        arms.append(ArmSpec(max_reward=max_reward, sampler=TraceSampler(recs, source=str(path))))
    return EnvironmentConfig(
        tau_max=tau_max,
        alpha=tau_max if alpha is None else alpha,
        arms=tuple(arms),
        name=f'trace({Path(path).name})',
    )
