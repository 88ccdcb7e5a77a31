"""
Seeded Monte-Carlo experiment runner.

An experiment runs every policy for ``runs`` episodes with seeds
``seed .. seed + runs - 1``. Run r of every policy sees the same environment
draws (common random numbers), so paired comparisons have low variance.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from . import __version__
from .env import Environment, EnvironmentConfig
from .errors import ConfigError, ExperimentError, InvalidParameterError, ResultsSchemaError
from .policies import PolicySpec

logger = logging.getLogger(__name__)

RESULT_COLUMNS = ('policy_name', 't', 'mean_regret', 'ci_half_width')
DEFAULT_STRIDE = 100
Z_95 = 1.96

ProgressCallback = Callable[[int, int], None]


@dataclass
class ExperimentConfig:
    """One experiment: an environment, the learners to compare and the run schedule."""
    environment: EnvironmentConfig
    policies: List[PolicySpec]
    horizon: int
    runs: int = 1
    seed: int = 0
    checkpoint_stride: int = DEFAULT_STRIDE
    workers: int = 1
    name: str = ""
    output_csv: Optional[str] = None
    output_json: Optional[str] = None
    # raw environment record as written in the config file, echoed into JSON results
    environment_record: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.horizon < self.environment.num_arms:
            raise ConfigError(
                f"horizon T={self.horizon} is shorter than the K={self.environment.num_arms} "
                f"initialisation rounds",
                field='horizon',
            )
        if self.runs < 1:
            raise ConfigError(f"runs must be >= 1, got {self.runs}", field='runs')
        if self.checkpoint_stride < 1:
            raise ConfigError(
                f"checkpoint_stride must be >= 1, got {self.checkpoint_stride}",
                field='checkpoint_stride',
            )
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}", field='workers')
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed}",
                              field='seed')
        if not self.policies:
            raise ConfigError("at least one policy is required", field='policies')
        names = [p.name for p in self.policies]
        duplicates = sorted({n for n in names if names.count(n) > 1})
        if duplicates:
            raise ConfigError(f"duplicate policy names: {', '.join(duplicates)}", field='policies')

    @property
    def seeds(self) -> List[int]:
        return [self.seed + r for r in range(self.runs)]

    def to_dict(self) -> dict:
        return {
            'name': self.name,
            'environment': self.environment_record or self.environment.to_dict(),
            'policies': [p.to_dict() for p in self.policies],
            'horizon': self.horizon,
            'runs': self.runs,
            'seed': self.seed,
            'checkpoint_stride': self.checkpoint_stride,
            'workers': self.workers,
            'output': {'csv': self.output_csv, 'json': self.output_json},
        }


@dataclass(frozen=True)
class RegretTrace:
    """Pseudo-regret of one episode at each checkpoint round."""
    rounds: Tuple[int, ...]
    regret: Tuple[float, ...]
    counts: Tuple[int, ...] = ()
    arms: Optional[Tuple[int, ...]] = None

    @property
    def final(self) -> float:
        return self.regret[-1]

    @property
    def time_averaged(self) -> float:
        """Cumulative regret averaged over the checkpoints (regret averaged over T)."""
        return math.fsum(self.regret) / len(self.regret)


@dataclass(frozen=True)
class PolicyAggregate:
    """Across-run summary of one policy; half-widths use the normal approximation."""
    name: str
    kind: str
    rounds: Tuple[int, ...]
    mean_regret: Tuple[float, ...]
    ci_half_width: Tuple[float, ...]
    final_mean: float
    final_ci: float
    time_averaged_mean: float
    time_averaged_ci: float
    runs: int

    def to_dict(self) -> dict:
        data = asdict(self)
        for key in ('rounds', 'mean_regret', 'ci_half_width'):
            data[key] = list(data[key])
        return data

    @classmethod
    def from_dict(cls, data: dict) -> 'PolicyAggregate':
        return cls(
            name=data['name'],
            kind=data.get('kind', ''),
            rounds=tuple(int(t) for t in data['rounds']),
            mean_regret=tuple(float(x) for x in data['mean_regret']),
            ci_half_width=tuple(float(x) for x in data['ci_half_width']),
            final_mean=float(data['final_mean']),
            final_ci=float(data['final_ci']),
            time_averaged_mean=float(data['time_averaged_mean']),
            time_averaged_ci=float(data['time_averaged_ci']),
            runs=int(data['runs']),
        )


@dataclass(frozen=True)
class AggregateResult:
    name: str
    policies: Tuple[PolicyAggregate, ...] = ()
    metadata: Dict[str, Any] = field(default_factory=dict)

    def get(self, name: str) -> PolicyAggregate:
        for agg in self.policies:
            if agg.name == name:
                return agg
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            'name': self.name,
            'metadata': self.metadata,
            'policies': [p.to_dict() for p in self.policies],
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'AggregateResult':
        return cls(
            name=data.get('name', ''),
            policies=tuple(PolicyAggregate.from_dict(p) for p in data.get('policies', [])),
            metadata=data.get('metadata', {}),
        )


def checkpoint_rounds(horizon: int, stride: int) -> np.ndarray:
    """Multiples of ``stride`` up to ``horizon``, always ending at ``horizon``."""
    rounds = np.arange(stride, horizon + 1, stride, dtype=np.int64)
    if rounds.size == 0 or rounds[-1] != horizon:
        rounds = np.append(rounds, horizon)
    return rounds


def _build_policy(env: Environment, spec: PolicySpec):
    config = env.config
    try:
        return spec.build(config.num_arms, config.tau_max, config.max_rewards,
                          rng=env.policy_rng())
    except InvalidParameterError as e:
        raise ConfigError(f"policy '{spec.name}': {e}", field='policies') from e


def run_episode(env_config: EnvironmentConfig, policy_spec: PolicySpec, T: int, seed: int,
                checkpoint_stride: Optional[int] = None, record_arms: bool = False) -> RegretTrace:
    """
    Simulate T rounds of select -> pull -> observe -> update.

    Pseudo-regret at round t is sum_i gap_i * N_i(t). The result depends only
    on (env_config, policy_spec, T, seed).
    """
    if T < 1:
        raise ConfigError(f"horizon must be >= 1, got {T}", field='horizon')
    env = Environment(env_config, seed=seed)
    policy = _build_policy(env, policy_spec)

    means = env_config.means
    gaps = float(np.max(means)) - means
    stride = checkpoint_stride or min(DEFAULT_STRIDE, T)
    rounds = checkpoint_rounds(T, stride)
    regret = np.zeros(rounds.size)
    counts = np.zeros(env_config.num_arms, dtype=np.int64)
    arms = np.zeros(T, dtype=np.int64) if record_arms else None

    c = 0
    for t in range(1, T + 1):
        arm = policy.select_arm(t)
        env.sample_pull(arm, t)
        policy.update(env.observe(t))
        counts[arm] += 1
        if arms is not None:
            arms[t - 1] = arm
        if t == rounds[c]:
            regret[c] = math.fsum(gaps * counts)
            c += 1

    return RegretTrace(
        rounds=tuple(rounds.tolist()),
        regret=tuple(regret.tolist()),
        counts=tuple(counts.tolist()),
        arms=None if arms is None else tuple(arms.tolist()),
    )


def _half_width(values: np.ndarray) -> np.ndarray:
    n = values.shape[0]
    if n < 2:
        return np.zeros(values.shape[1:])
    return Z_95 * np.std(values, axis=0, ddof=1) / math.sqrt(n)


def aggregate_traces(name: str, kind: str, traces: Sequence[RegretTrace]) -> PolicyAggregate:
    """Mean and 95% half-width across runs, per checkpoint and for the summaries."""
    if not traces:
        raise InvalidParameterError(f"no traces to aggregate for '{name}'")
    values = np.array([tr.regret for tr in traces])
    finals = values[:, -1]
    averaged = values.mean(axis=1)
    return PolicyAggregate(
        name=name,
        kind=kind,
        rounds=traces[0].rounds,
        mean_regret=tuple(values.mean(axis=0).tolist()),
        ci_half_width=tuple(_half_width(values).tolist()),
        final_mean=float(finals.mean()),
        final_ci=float(_half_width(finals[:, None])[0]),
        time_averaged_mean=float(averaged.mean()),
        time_averaged_ci=float(_half_width(averaged[:, None])[0]),
        runs=len(traces),
    )


def _episode_task(args: Tuple[int, int, dict, dict, int, int, int]):
    """Pool worker; returns (policy index, run index, trace or None, error message)."""
    p_idx, r_idx, env_data, spec_data, horizon, seed, stride = args
    try:
        env_config = EnvironmentConfig.from_dict(env_data)
        spec = PolicySpec.from_dict(spec_data)
        trace = run_episode(env_config, spec, horizon, seed, stride)
        return p_idx, r_idx, trace, None
    except Exception as e:  # reported back to the parent with the run identity
        return p_idx, r_idx, None, f"{type(e).__name__}: {e}"


def run_experiment(config: ExperimentConfig, workers: Optional[int] = None,
                   progress: Optional[ProgressCallback] = None) -> AggregateResult:
    """
    Run every (policy, seed) episode and aggregate per policy.

    Any failed episode aborts the experiment with an :class:`ExperimentError`
    listing every failure.
    """
    workers = workers or config.workers
    env_config = config.environment
    horizon = config.horizon
    stride = min(config.checkpoint_stride, horizon)

    # dimension mismatches are config errors, raised before anything is simulated
    probe = Environment(env_config, seed=config.seed)
    for spec in config.policies:
        _build_policy(probe, spec)

    env_data = env_config.to_dict()
    tasks = [
        (p_idx, r_idx, env_data, spec.to_dict(), horizon, seed, stride)
        for p_idx, spec in enumerate(config.policies)
        for r_idx, seed in enumerate(config.seeds)
    ]
    total = len(tasks)
    logger.info(
        f"Experiment '{config.name}': {len(config.policies)} policies x {config.runs} runs, "
        f"T={horizon}, workers={workers}"
    )
    start = time.time()

    traces: Dict[Tuple[int, int], RegretTrace] = {}
    failures: List[str] = []

    def collect(result) -> None:
        p_idx, r_idx, trace, error = result
        spec = config.policies[p_idx]
        seed = config.seeds[r_idx]
        if error is not None:
            logger.error(f"Episode failed: policy '{spec.name}', seed {seed}: {error}")
            failures.append(f"policy '{spec.name}', seed {seed}: {error}")
        else:
            logger.debug(f"Episode done: policy '{spec.name}', seed {seed}, "
                         f"final regret {trace.final:.1f}")
            traces[(p_idx, r_idx)] = trace
        if progress:
            progress(len(traces) + len(failures), total)

    if workers > 1 and total > 1:
        from multiprocessing import get_context

        ctx = get_context("spawn")
        with ctx.Pool(processes=min(workers, total)) as pool:
            for result in pool.imap(_episode_task, tasks, chunksize=1):
                collect(result)
    else:
        for task in tasks:
            collect(_episode_task(task))

    if failures:
        raise ExperimentError(failures)

    aggregates = tuple(
        aggregate_traces(
            spec.name, spec.kind, [traces[(p_idx, r)] for r in range(config.runs)]
        )
        for p_idx, spec in enumerate(config.policies)
    )
    logger.info(f"Experiment '{config.name}' finished in {time.time() - start:.1f}s")
    return AggregateResult(
        name=config.name,
        policies=aggregates,
        metadata={
            'config': config.to_dict(),
            'seeds': config.seeds,
            'version': __version__,
        },
    )


def export_results(result: AggregateResult, format: str, path: Union[str, Path]) -> Path:
    """Write ``result`` as CSV (one row per policy and checkpoint) or JSON."""
    path = Path(path)
    if format not in ('csv', 'json'):
        raise InvalidParameterError(f"unknown results format {format!r} (valid: csv, json)")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        if format == 'json':
            with open(path, 'w', encoding='utf-8') as f:
                json.dump(result.to_dict(), f, indent=2)
                f.write('\n')
        else:
            with open(path, 'w', encoding='utf-8', newline='') as f:
                writer = csv.writer(f, lineterminator='\n')
                writer.writerow(RESULT_COLUMNS)
                for agg in result.policies:
                    for t, mean, hw in zip(agg.rounds, agg.mean_regret, agg.ci_half_width):
                        writer.writerow([agg.name, t, repr(mean), repr(hw)])
    except OSError as e:
        raise OSError(f"cannot write results to {path}: {e.strerror or e}") from e
    logger.info(f"Wrote {format.upper()} results to {path}")
    return path


def load_results(path: Union[str, Path]) -> AggregateResult:
    """Read results written by :func:`export_results` (format chosen by suffix)."""
    path = Path(path)
    if path.suffix.lower() == '.json':
        with open(path, 'r', encoding='utf-8') as f:
            data = json.load(f)
        if 'policies' not in data:
            raise ResultsSchemaError(path, ['policies'])
        return AggregateResult.from_dict(data)

    with open(path, 'r', encoding='utf-8', newline='') as f:
        reader = csv.DictReader(f)
        missing = [c for c in RESULT_COLUMNS if c not in (reader.fieldnames or [])]
        if missing:
            raise ResultsSchemaError(path, missing)
        rows: Dict[str, List[Tuple[int, float, float]]] = {}
        for row in reader:
            rows.setdefault(row['policy_name'], []).append(
                (int(row['t']), float(row['mean_regret']), float(row['ci_half_width']))
            )

    policies = []
    for name, points in rows.items():
        rounds, means, widths = zip(*points)
        policies.append(PolicyAggregate(
            name=name,
            kind='',
            rounds=tuple(rounds),
            mean_regret=tuple(means),
            ci_half_width=tuple(widths),
            final_mean=means[-1],
            final_ci=widths[-1],
            time_averaged_mean=math.fsum(means) / len(means),
            time_averaged_ci=float('nan'),
            runs=0,
        ))
    return AggregateResult(name=path.stem, policies=tuple(policies))


def summary_rows(result: AggregateResult, baseline_kind: str = 'tp_ucb_fr') -> List[Dict[str, Any]]:
    """
    Policies sorted by time-averaged regret.

    ``decrease`` is the percentage decrease in time-averaged regret against the
    first policy of ``baseline_kind`` (None when there is no such policy);
    ``final_decrease`` is the same comparison on the regret at the horizon.
    """
    baseline = next((p for p in result.policies if p.kind == baseline_kind), None)
    rows = []
    for agg in sorted(result.policies, key=lambda p: p.time_averaged_mean):
        decrease = final_decrease = None
        if baseline is not None and baseline.time_averaged_mean > 0:
            decrease = 100.0 * (1.0 - agg.time_averaged_mean / baseline.time_averaged_mean)
        if baseline is not None and baseline.final_mean > 0:
            final_decrease = 100.0 * (1.0 - agg.final_mean / baseline.final_mean)
        rows.append({
            'name': agg.name,
            'kind': agg.kind,
            'time_averaged': agg.time_averaged_mean,
            'time_averaged_ci': agg.time_averaged_ci,
            'final': agg.final_mean,
            'final_ci': agg.final_ci,
            'decrease': decrease,
            'final_decrease': final_decrease,
            'is_baseline': agg is baseline,
        })
    return rows
