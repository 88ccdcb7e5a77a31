"""
Closed-form regret bounds for beta-spread instances.

The lower bound holds for any uniformly efficient policy, the upper bound for
TP-UCB-FR-G run with the instance's true spread. Both are evaluated as curves
over the horizon T.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import rel_entr

from .env import EnvironmentConfig
from .errors import DegenerateInstanceError, InvalidParameterError
from .spread import SpreadPmf, expected_index, index_of_coincidence, uniform_spread

logger = logging.getLogger(__name__)

BOUNDS_COLUMNS = ('T', 'lower_bound', 'upper_bound', 'upper_bound_uniform', 'tightness_value')

# mu* closer than this to R_max makes the KL terms blow up
DEGENERATE_GAP = 1e-15


@dataclass(frozen=True, eq=False)
class InstanceSummary:
    """Everything the bounds need to know about an instance."""
    means: np.ndarray
    max_rewards: np.ndarray
    alpha: int
    phi: int
    spread: SpreadPmf
    mean_index: float
    coincidence: float

    @property
    def mu_star(self) -> float:
        return float(np.max(self.means))

    @property
    def gaps(self) -> np.ndarray:
        return self.mu_star - self.means

    @property
    def max_reward(self) -> float:
        return float(np.max(self.max_rewards))

    @property
    def suboptimal(self) -> np.ndarray:
        """Indices of the arms with a positive gap."""
        return np.flatnonzero(self.gaps > 0)

    @classmethod
    def from_environment(cls, config: EnvironmentConfig,
                         spread: Optional[SpreadPmf] = None) -> 'InstanceSummary':
        """Summary of an environment; the spread defaults to the uniform one of its alpha."""
        if spread is None:
            spread = uniform_spread(config.alpha)
        return summarize_instance(config.means, config.max_rewards, config.tau_max, spread)


def summarize_instance(means: Sequence[float], max_rewards: Sequence[float], tau_max: int,
                       spread: SpreadPmf) -> InstanceSummary:
    means = np.asarray(means, dtype=np.float64).reshape(-1)
    max_rewards = np.asarray(max_rewards, dtype=np.float64).reshape(-1)
    if means.size == 0 or means.shape != max_rewards.shape:
        raise InvalidParameterError(
            f"got {means.size} means and {max_rewards.size} max rewards"
        )
    if np.any(max_rewards <= 0):
        raise InvalidParameterError("max rewards must all be > 0")
    if np.any(means < 0) or np.any(means > max_rewards):
        raise InvalidParameterError("every mean must lie in [0, its max reward]")
    if tau_max % spread.alpha != 0:
        raise InvalidParameterError(f"alpha={spread.alpha} does not divide tau_max={tau_max}")
    means.setflags(write=False)
    max_rewards.setflags(write=False)
    return InstanceSummary(
        means=means,
        max_rewards=max_rewards,
        alpha=spread.alpha,
        phi=tau_max // spread.alpha,
        spread=spread,
        mean_index=expected_index(spread),
        coincidence=index_of_coincidence(spread),
    )


def kl_bernoulli(p: float, q: float) -> float:
    """KL divergence between Bernoulli(p) and Bernoulli(q), with 0 ln 0 = 0."""
    if not 0.0 <= p <= 1.0:
        raise InvalidParameterError(f"p must lie in [0, 1], got {p!r}")
    if not 0.0 <= q <= 1.0:
        raise InvalidParameterError(f"q must lie in [0, 1], got {q!r}")
    if q in (0.0, 1.0):
        return 0.0 if p == q else math.inf
    return float(rel_entr(p, q) + rel_entr(1.0 - p, 1.0 - q))


def tightness_condition(alpha: int, spread: SpreadPmf) -> Tuple[float, bool]:
    """
    Value of (2/(alpha+1)) * E[Y] * alpha * IC and whether it exceeds 1.

    Above 1 the beta-spread lower bound is tighter than the alpha-smooth one.
    The uniform spread gives exactly 1.
    """
    if spread.alpha != alpha:
        raise InvalidParameterError(f"spread has alpha={spread.alpha}, expected {alpha}")
    if spread.is_uniform:
        return 1.0, False
    value = 2.0 / (alpha + 1) * expected_index(spread) * alpha * index_of_coincidence(spread)
    return value, value > 1.0


def _check_horizon(T: float) -> float:
    if not T >= 2:
        raise InvalidParameterError(f"horizon T must be >= 2, got {T!r}")
    return math.log(T)


def _kl_terms(inst: InstanceSummary) -> Optional[np.ndarray]:
    """Per suboptimal arm KL(mu_i/R_max, mu*/R_max), or None when any of them degenerates."""
    r_max = inst.max_reward
    if inst.mu_star >= r_max:
        raise DegenerateInstanceError(
            f"mu*={inst.mu_star:g} reaches R_max={r_max:g}; the lower bound needs mu* < R_max"
        )
    q = inst.mu_star / r_max
    kl = np.array([kl_bernoulli(inst.means[i] / r_max, q) for i in inst.suboptimal])
    if r_max - inst.mu_star < DEGENERATE_GAP or np.any(kl <= 0) or not np.all(np.isfinite(kl)):
        return None
    return kl


def lower_bound_curve(inst: InstanceSummary, T: float) -> float:
    """ln T * sum_i (2/(alpha+1)) E[Y] alpha IC * gap_i / (alpha * KL_i)."""
    log_t = _check_horizon(T)
    if inst.suboptimal.size == 0:
        return 0.0
    kl = _kl_terms(inst)
    if kl is None:
        return math.inf
    prefactor, _ = tightness_condition(inst.alpha, inst.spread)
    gaps = inst.gaps[inst.suboptimal]
    return log_t * math.fsum(prefactor * gaps / (inst.alpha * kl))


def smooth_lower_bound(inst: InstanceSummary, T: float) -> float:
    """The alpha-smooth lower bound: ln T * sum_i gap_i / (alpha * KL_i)."""
    log_t = _check_horizon(T)
    if inst.suboptimal.size == 0:
        return 0.0
    kl = _kl_terms(inst)
    if kl is None:
        return math.inf
    gaps = inst.gaps[inst.suboptimal]
    return log_t * math.fsum(gaps / (inst.alpha * kl))


def upper_bound_curve(inst: InstanceSummary, T: float) -> float:
    """
    Regret upper bound of TP-UCB-FR-G.

    Only valid when the policy's spread matches the instance; that is not checked.
    """
    log_t = _check_horizon(T)
    sub = inst.suboptimal
    if sub.size == 0:
        return 0.0
    gaps = inst.gaps[sub]
    r = inst.max_rewards[sub]
    e, ic, phi = inst.mean_index, inst.coincidence, inst.phi
    s2 = r * r * ic
    exploration = 4.0 * log_t * s2 / gaps * (1.0 + np.sqrt(1.0 + gaps * phi * e / (r * log_t * ic)))
    delay = 2.0 * phi * e * math.fsum(r)
    constant = (1.0 + math.pi ** 2 / 3.0) * math.fsum(gaps)
    return math.fsum(exploration) + delay + constant


def log_grid(t_min: int, t_max: int, points: int = 50) -> List[int]:
    """Distinct integer horizons, log-spaced between t_min and t_max inclusive."""
    if t_min < 2:
        raise InvalidParameterError(f"t_min must be >= 2, got {t_min}")
    if t_max < t_min:
        raise InvalidParameterError(f"t_max={t_max} is smaller than t_min={t_min}")
    if points < 1:
        raise InvalidParameterError(f"points must be >= 1, got {points}")
    if points == 1 or t_min == t_max:
        return sorted({int(t_min), int(t_max)})
    grid = np.rint(np.geomspace(t_min, t_max, points)).astype(np.int64)
    return sorted(set(grid.tolist()) | {int(t_min), int(t_max)})


def bounds_table(inst: InstanceSummary, horizons: Sequence[int]) -> List[Dict[str, float]]:
    """Rows with the :data:`BOUNDS_COLUMNS` schema, one per horizon."""
    uniform = summarize_instance(inst.means, inst.max_rewards, inst.alpha * inst.phi,
                                 uniform_spread(inst.alpha))
    tightness, _ = tightness_condition(inst.alpha, inst.spread)
    rows = []
    for T in horizons:
        rows.append({
            'T': int(T),
            'lower_bound': lower_bound_curve(inst, T),
            'upper_bound': upper_bound_curve(inst, T),
            'upper_bound_uniform': upper_bound_curve(uniform, T),
            'tightness_value': tightness,
        })
    logger.debug(f"Evaluated bounds on {len(rows)} horizons")
    return rows
