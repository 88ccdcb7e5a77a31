"""
Experiment config files.

Configs are JSON documents; a bare name (no suffix, no path separator) refers
to one of the presets shipped in ``tpmab/presets``. Every validation error is
raised as :class:`ConfigError` carrying the dotted path of the offending field.
"""

from __future__ import annotations

import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from .env import (
    ArmSpec,
    EnvironmentConfig,
    make_setting1,
    make_setting2,
    make_trace_env,
    sampler_from_dict,
)
from .errors import ConfigError, TpmabError
from .harness import DEFAULT_STRIDE, ExperimentConfig
from .policies import PolicySpec

logger = logging.getLogger(__name__)

PRESETS_DIR = Path(__file__).parent / "presets"
ENVIRONMENT_SETTINGS = ('setting1', 'setting2', 'trace')

DEFAULT_HOME = Path.home() / ".tpmab"


def get_home() -> Path:
    """Directory holding the run registry (``TPMAB_HOME``, default ``~/.tpmab``)."""
    return Path(os.environ.get('TPMAB_HOME') or DEFAULT_HOME)


def list_presets() -> List[str]:
    return sorted(p.stem for p in PRESETS_DIR.glob("*.json"))


def resolve_config_path(name_or_path: Union[str, Path]) -> Path:
    """A filesystem path, or the bundled preset of that name."""
    path = Path(name_or_path)
    if path.exists():
        return path
    text = str(name_or_path)
    if path.suffix == '' and os.sep not in text and '/' not in text:
        preset = PRESETS_DIR / f"{text}.json"
        if preset.exists():
            return preset
    raise ConfigError(f"config file not found: {name_or_path}")


def _require(record: Dict[str, Any], key: str, where: str) -> Any:
    if key not in record:
        field = f"{where}.{key}" if where else key
        raise ConfigError(f"missing required field '{key}'", field=field)
    return record[key]


def _as_int(value: Any, where: str, minimum: Optional[int] = None) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
        raise ConfigError(f"expected an integer, got {value!r}", field=where)
    value = int(value)
    if minimum is not None and value < minimum:
        raise ConfigError(f"must be >= {minimum}, got {value}", field=where)
    return value


def _as_dict(value: Any, where: str) -> Dict[str, Any]:
    if not isinstance(value, dict):
        raise ConfigError(f"expected an object, got {type(value).__name__}", field=where)
    return value


def environment_from_record(record: Dict[str, Any], base_dir: Optional[Path] = None,
                            seed: int = 0) -> EnvironmentConfig:
    """Build an :class:`EnvironmentConfig` from the ``environment`` section of a config."""
    where = 'environment'
    record = _as_dict(record, where)
    setting = record.get('setting')
    try:
        if setting == 'setting1':
            config = make_setting1(
                alpha_true=_as_int(record.get('alpha', 20), f'{where}.alpha', 1),
                tau_max=_as_int(record.get('tau_max', 100), f'{where}.tau_max', 1),
                K=_as_int(record.get('num_arms', 10), f'{where}.num_arms', 1),
            )
        elif setting == 'setting2':
            config = make_setting2(
                _as_int(_require(record, 'configuration', where), f'{where}.configuration'),
                str(_require(record, 'scenario', where)),
            )
        elif setting == 'trace':
            path = Path(str(_require(record, 'path', where)))
            if not path.is_absolute() and base_dir is not None:
                path = base_dir / path
            alpha = record.get('alpha')
            config = make_trace_env(
                path,
                K=_as_int(_require(record, 'num_arms', where), f'{where}.num_arms', 1),
                tau_max=_as_int(_require(record, 'tau_max', where), f'{where}.tau_max', 1),
                alpha=None if alpha is None else _as_int(alpha, f'{where}.alpha', 1),
            )
        elif setting is None:
            arms_record = _require(record, 'arms', where)
            if not isinstance(arms_record, list) or not arms_record:
                raise ConfigError("expected a non-empty list of arms", field=f'{where}.arms')
            arms = []
            for i, arm in enumerate(arms_record):
                arm_where = f'{where}.arms[{i}]'
                arm = _as_dict(arm, arm_where)
                sampler = _as_dict(arm.get('sampler', {'kind': 'uniform'}), f'{arm_where}.sampler')
                try:
                    arms.append(ArmSpec(
                        max_reward=float(_require(arm, 'max_reward', arm_where)),
                        sampler=sampler_from_dict(sampler),
                    ))
                except (TpmabError, KeyError, TypeError, ValueError) as e:
                    if isinstance(e, ConfigError):
                        raise
                    raise ConfigError(str(e), field=arm_where) from e
            config = EnvironmentConfig(
                tau_max=_as_int(_require(record, 'tau_max', where), f'{where}.tau_max', 1),
                alpha=_as_int(_require(record, 'alpha', where), f'{where}.alpha', 1),
                arms=tuple(arms),
                name=str(record.get('name', 'custom')),
            )
        else:
            raise ConfigError(
                f"unknown setting {setting!r} (valid: {', '.join(ENVIRONMENT_SETTINGS)})",
                field=f'{where}.setting',
            )
    except ConfigError:
        raise
    except TpmabError as e:
        raise ConfigError(str(e), field=where) from e

    return EnvironmentConfig(
        tau_max=config.tau_max, alpha=config.alpha, arms=config.arms, seed=seed, name=config.name
    )


def policies_from_record(records: Any) -> List[PolicySpec]:
    if not isinstance(records, list) or not records:
        raise ConfigError("expected a non-empty list of policies", field='policies')
    specs = []
    for i, record in enumerate(records):
        where = f'policies[{i}]'
        record = _as_dict(record, where)
        if 'alpha_est' in record:
            _as_int(record['alpha_est'], f'{where}.alpha_est', 1)
        try:
            specs.append(PolicySpec.from_dict(record))
        except (TpmabError, TypeError, ValueError) as e:
            if isinstance(e, ConfigError):
                raise
            raise ConfigError(str(e), field=where) from e
    return specs


def parse_config(data: Dict[str, Any], base_dir: Optional[Path] = None) -> ExperimentConfig:
    """Validate a decoded config document."""
    data = _as_dict(data, '')
    seed = _as_int(data.get('seed', 0), 'seed', 0)
    output = _as_dict(data.get('output', {}), 'output')
    environment_record = _require(data, 'environment', '')
    return ExperimentConfig(
        name=str(data.get('name', '')),
        environment=environment_from_record(environment_record, base_dir, seed),
        policies=policies_from_record(_require(data, 'policies', '')),
        horizon=_as_int(_require(data, 'horizon', ''), 'horizon', 1),
        runs=_as_int(data.get('runs', 1), 'runs', 1),
        seed=seed,
        checkpoint_stride=_as_int(data.get('checkpoint_stride', DEFAULT_STRIDE),
                                  'checkpoint_stride', 1),
        workers=_as_int(data.get('workers', 1), 'workers', 1),
        output_csv=output.get('csv'),
        output_json=output.get('json'),
        environment_record=dict(environment_record),
    )


def load_config(name_or_path: Union[str, Path]) -> ExperimentConfig:
    """Read and validate a config file or bundled preset."""
    path = resolve_config_path(name_or_path)
    try:
        text = path.read_text(encoding='utf-8')
    except OSError as e:
        raise ConfigError(f"cannot read config file {path}: {e}") from e
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: {e.msg}", line=e.lineno, column=e.colno) from e

    config = parse_config(data, base_dir=path.parent)
    if not config.name:
        config.name = path.stem
    logger.debug(f"Loaded config {path}: {len(config.policies)} policies, T={config.horizon}")
    return config
