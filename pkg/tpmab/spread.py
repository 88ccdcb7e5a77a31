"""
Discrete spread distributions over z-group indices.

A spread PMF gives, for each z-group k in {1..alpha}, the probability that a
partial reward lands in that group. TP-UCB-FR-G and the regret bounds only
consume two moments of it: the expected index and the index of coincidence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple

import numpy as np
from scipy.special import betaln, gammaln
from scipy.stats import hypergeom

from .errors import InvalidParameterError

PROB_TOLERANCE = 1e-12

# Beta-Binomial (a, b) shape parameters, keyed by the name of the region the mass sits in
SPREAD_PRESETS: Dict[str, Tuple[float, float]] = {
    'extreme_begin': (1, 100),
    'very_begin': (1, 16),
    'begin': (2, 8),
    'begin_middle': (2, 4),
    'middle': (5, 5),
    'middle_end': (4, 2),
    'end': (8, 2),
    'very_end': (16, 1),
}

SPREAD_KINDS = ('uniform', 'beta_binomial', 'zipfian', 'boltzmann', 'hypergeometric', 'named')


@dataclass(frozen=True, eq=False)
class SpreadPmf:
    """
    Probability mass function over z-group indices 1..alpha.

    ``probs[k-1]`` is the mass of group k. Instances are immutable; the array
    is copied and marked read-only on construction.
    """
    alpha: int
    probs: np.ndarray
    label: str = ""
    spec: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if int(self.alpha) != self.alpha or self.alpha < 1:
            raise InvalidParameterError(f"alpha must be a positive integer, got {self.alpha!r}")
        probs = np.array(self.probs, dtype=np.float64).reshape(-1)
        if probs.shape[0] != self.alpha:
            raise InvalidParameterError(
                f"PMF has {probs.shape[0]} entries but alpha={self.alpha}"
            )
        if np.any(~np.isfinite(probs)) or np.any(probs < 0):
            raise InvalidParameterError("PMF entries must be finite and non-negative")
        total = float(np.sum(probs))
        if abs(total - 1.0) > PROB_TOLERANCE:
            raise InvalidParameterError(f"PMF entries sum to {total!r}, not 1")
        probs.setflags(write=False)
        object.__setattr__(self, 'alpha', int(self.alpha))
        object.__setattr__(self, 'probs', probs)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SpreadPmf):
            return NotImplemented
        return self.alpha == other.alpha and np.array_equal(self.probs, other.probs)

    def __hash__(self) -> int:
        return hash((self.alpha, self.probs.tobytes()))

    def __repr__(self) -> str:
        name = self.label or 'custom'
        return f"SpreadPmf({name}, alpha={self.alpha})"

    @property
    def is_uniform(self) -> bool:
        """True when every group carries 1/alpha of the mass (alpha-smoothness)."""
        return bool(np.allclose(self.probs, 1.0 / self.alpha, rtol=0.0, atol=PROB_TOLERANCE))

    @property
    def mode(self) -> int:
        """1-based index of the group with the largest mass (lowest index on ties)."""
        return int(np.argmax(self.probs)) + 1

    def to_spec(self) -> Dict[str, Any]:
        """Tagged-record form accepted by :func:`parse_spread_spec`."""
        if self.spec:
            return dict(self.spec)
        return {'kind': 'custom', 'alpha': self.alpha, 'probs': self.probs.tolist()}


def _normalized(alpha: int, weights: np.ndarray, label: str, spec: Dict[str, Any]) -> SpreadPmf:
    weights = np.asarray(weights, dtype=np.float64)
    return SpreadPmf(alpha=alpha, probs=weights / np.sum(weights), label=label, spec=spec)


def _check_alpha(alpha: int) -> int:
    if isinstance(alpha, bool) or int(alpha) != alpha or alpha < 1:
        raise InvalidParameterError(f"alpha must be a positive integer, got {alpha!r}")
    return int(alpha)


def _check_positive(name: str, value: float) -> float:
    if not (value > 0) or not math.isfinite(value):
        raise InvalidParameterError(f"{name} must be a positive real, got {value!r}")
    return float(value)


def uniform_spread(alpha: int) -> SpreadPmf:
    """The alpha-smooth case: every z-group has mass 1/alpha."""
    alpha = _check_alpha(alpha)
    return SpreadPmf(
        alpha=alpha,
        probs=np.full(alpha, 1.0 / alpha),
        label='uniform',
        spec={'kind': 'uniform', 'alpha': alpha},
    )


def point_mass_spread(alpha: int, k: int = 1) -> SpreadPmf:
    """All mass on z-group ``k`` (1-based)."""
    alpha = _check_alpha(alpha)
    if not 1 <= k <= alpha:
        raise InvalidParameterError(f"k must lie in 1..{alpha}, got {k}")
    probs = np.zeros(alpha)
    probs[k - 1] = 1.0
    return SpreadPmf(
        alpha=alpha,
        probs=probs,
        label=f'point({k})',
        spec={'kind': 'custom', 'alpha': alpha, 'probs': probs.tolist()},
    )


def beta_binomial_spread(alpha: int, a: float, b: float) -> SpreadPmf:
    """
    Beta-Binomial(alpha-1, a, b) shifted by one onto {1..alpha}.

    Evaluated in log space (log-gamma / log-beta) so that alpha in the
    hundreds does not overflow the binomial coefficient.
    """
    alpha = _check_alpha(alpha)
    a = _check_positive('a', a)
    b = _check_positive('b', b)
    n = alpha - 1
    x = np.arange(alpha, dtype=np.float64)
    log_comb = gammaln(n + 1) - gammaln(x + 1) - gammaln(n - x + 1)
    log_pmf = log_comb + betaln(x + a, n - x + b) - betaln(a, b)
    return _normalized(
        alpha,
        np.exp(log_pmf),
        label=f'beta_binomial({a:g},{b:g})',
        spec={'kind': 'beta_binomial', 'alpha': alpha, 'a': a, 'b': b},
    )


def named_spread(name: str, alpha: int) -> SpreadPmf:
    """Beta-Binomial spread looked up in :data:`SPREAD_PRESETS`."""
    if name not in SPREAD_PRESETS:
        valid = ', '.join(SPREAD_PRESETS)
        raise InvalidParameterError(f"unknown spread preset '{name}' (valid: {valid})")
    a, b = SPREAD_PRESETS[name]
    pmf = beta_binomial_spread(alpha, a, b)
    return SpreadPmf(
        alpha=pmf.alpha,
        probs=pmf.probs,
        label=name,
        spec={'kind': 'named', 'alpha': pmf.alpha, 'name': name},
    )


def zipfian_spread(alpha: int, s: float) -> SpreadPmf:
    """Zipf law on {1..alpha}: mass proportional to k^(-s)."""
    alpha = _check_alpha(alpha)
    s = _check_positive('s', s)
    k = np.arange(1, alpha + 1, dtype=np.float64)
    return _normalized(
        alpha,
        k ** (-s),
        label=f'zipfian({s:g})',
        spec={'kind': 'zipfian', 'alpha': alpha, 's': s},
    )


def boltzmann_spread(alpha: int, lam: float) -> SpreadPmf:
    """Truncated Boltzmann law: mass proportional to exp(-lam * (k-1))."""
    alpha = _check_alpha(alpha)
    lam = _check_positive('lambda', lam)
    k = np.arange(alpha, dtype=np.float64)
    return _normalized(
        alpha,
        np.exp(-lam * k),
        label=f'boltzmann({lam:g})',
        spec={'kind': 'boltzmann', 'alpha': alpha, 'lambda': lam},
    )


def hypergeometric_spread(alpha: int, n_pop: int) -> SpreadPmf:
    """
    Hypergeometric(N=n_pop, K=alpha-1, n=alpha-1) shifted by one onto {1..alpha}.

    ``n_pop`` shapes the distribution and must be at least ``2 * alpha``.
    """
    alpha = _check_alpha(alpha)
    if int(n_pop) != n_pop or n_pop < 2 * alpha:
        raise InvalidParameterError(
            f"n_pop must be an integer >= 2*alpha = {2 * alpha}, got {n_pop!r}"
        )
    n_pop = int(n_pop)
    pmf = hypergeom(n_pop, alpha - 1, alpha - 1).pmf(np.arange(alpha))
    return _normalized(
        alpha,
        pmf,
        label=f'hypergeom({n_pop})',
        spec={'kind': 'hypergeometric', 'alpha': alpha, 'n_pop': n_pop},
    )


def expected_index(pmf: SpreadPmf) -> float:
    """E[Y] = sum_k k * B(k); lies in [1, alpha]."""
    if pmf.is_uniform:
        return (pmf.alpha + 1) / 2.0
    k = np.arange(1, pmf.alpha + 1, dtype=np.float64)
    return math.fsum(k * pmf.probs)


def index_of_coincidence(pmf: SpreadPmf) -> float:
    """sum_k B(k)^2; 1/alpha for the uniform spread, 1 for a point mass."""
    return math.fsum(pmf.probs * pmf.probs)


def parse_spread_spec(record: Any, alpha: Optional[int] = None) -> SpreadPmf:
    """
    Build a SpreadPmf from a tagged record.

    ``{"kind": "named", "name": "begin"}``, ``{"kind": "zipfian", "s": 1}``, ...
    ``alpha`` fills in a missing ``alpha`` field; when both are present they
    must agree. A bare string is shorthand for a named preset or ``uniform``.
    """
    if isinstance(record, str):
        record = {'kind': 'uniform'} if record == 'uniform' else {'kind': 'named', 'name': record}
    if not isinstance(record, dict):
        raise InvalidParameterError(f"distribution must be an object, got {type(record).__name__}")

    kind = record.get('kind')
    rec_alpha = record.get('alpha')
    if rec_alpha is None:
        rec_alpha = alpha
    elif alpha is not None and int(rec_alpha) != int(alpha):
        raise InvalidParameterError(
            f"distribution alpha={rec_alpha} does not match alpha_est={alpha}"
        )
    if rec_alpha is None:
        raise InvalidParameterError("distribution needs an 'alpha'")

    def param(name: str) -> Any:
        if name not in record:
            raise InvalidParameterError(f"distribution kind '{kind}' needs parameter '{name}'")
        return record[name]

    if kind == 'uniform':
        return uniform_spread(rec_alpha)
    if kind == 'beta_binomial':
        return beta_binomial_spread(rec_alpha, float(param('a')), float(param('b')))
    if kind == 'zipfian':
        return zipfian_spread(rec_alpha, float(param('s')))
    if kind == 'boltzmann':
        lam = record.get('lambda', record.get('lam'))
        if lam is None:
            raise InvalidParameterError("distribution kind 'boltzmann' needs parameter 'lambda'")
        return boltzmann_spread(rec_alpha, float(lam))
    if kind == 'hypergeometric':
        return hypergeometric_spread(rec_alpha, int(param('n_pop')))
    if kind == 'named':
        return named_spread(str(param('name')), rec_alpha)
    if kind == 'custom':
        return SpreadPmf(alpha=int(rec_alpha), probs=np.asarray(param('probs'), dtype=float),
                         label='custom', spec=dict(record))
    raise InvalidParameterError(
        f"unknown distribution kind {kind!r} (valid: {', '.join(SPREAD_KINDS)})"
    )
