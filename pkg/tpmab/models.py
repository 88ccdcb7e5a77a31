"""
Registry of executed experiments.
Uses SQLite with Peewee ORM; one row per `tpmab run`, one row per policy summary.
"""

import hashlib
import json
from datetime import datetime
from pathlib import Path
from typing import List, Optional

from peewee import (
    BooleanField,
    CharField,
    DateTimeField,
    FloatField,
    ForeignKeyField,
    IntegerField,
    Model,
    SqliteDatabase,
    TextField,
)

DB_NAME = "runs.db"

# Database instance (initialized by init_database)
database = SqliteDatabase(None)


class BaseModel(Model):
    """Base model with common fields."""
    created_at = DateTimeField(default=datetime.now)
    updated_at = DateTimeField(default=datetime.now)

    class Meta:
        database = database

    def save(self, *args, **kwargs):
        self.updated_at = datetime.now()
        return super().save(*args, **kwargs)


class ExperimentRun(BaseModel):
    """One invocation of `tpmab run`."""
    name = CharField(index=True)
    config_digest = CharField(max_length=64)  # sha256 of the canonical config JSON
    horizon = IntegerField()
    runs = IntegerField()
    seed = CharField()  # 64-bit unsigned, beyond SQLite INTEGER
    workers = IntegerField(default=1)
    duration_seconds = FloatField(null=True)
    success = BooleanField(default=True)
    message = TextField(null=True)
    output_csv = CharField(null=True)
    output_json = CharField(null=True)

    class Meta:
        table_name = "experiment_runs"


class PolicySummary(BaseModel):
    """Time-averaged and final regret of one policy in a run."""
    run = ForeignKeyField(ExperimentRun, backref="summaries", on_delete="CASCADE")
    policy_name = CharField()
    kind = CharField(null=True)
    time_averaged = FloatField()
    time_averaged_ci = FloatField()
    final = FloatField()
    final_ci = FloatField()
    decrease = FloatField(null=True)  # percent vs the TP-UCB-FR row

    class Meta:
        table_name = "policy_summaries"
        indexes = (
            (("run", "policy_name"), True),
        )


def config_digest(config_dict: dict) -> str:
    """Stable digest of a config (key order does not matter)."""
    canonical = json.dumps(config_dict, sort_keys=True, separators=(',', ':'))
    return hashlib.sha256(canonical.encode('utf-8')).hexdigest()


def init_database(home: Optional[Path] = None):
    """Initialize database connection under ``home`` and create tables."""
    if home is None:
        from .config import get_home
        home = get_home()
    home = Path(home)
    home.mkdir(parents=True, exist_ok=True)

    database.init(str(home / DB_NAME), pragmas={
        'journal_mode': 'wal',
        'foreign_keys': 1,
    })
    database.connect(reuse_if_open=True)
    database.create_tables([ExperimentRun, PolicySummary], safe=True)
    return database


def close_database():
    """Close database connection."""
    if not database.is_closed():
        database.close()


def record_run(config_dict: dict, rows: List[dict], duration: float, success: bool = True,
               message: Optional[str] = None, output_csv: Optional[str] = None,
               output_json: Optional[str] = None) -> ExperimentRun:
    """Store a finished (or failed) run with its per-policy summary rows."""
    with database.atomic():
        run = ExperimentRun.create(
            name=config_dict.get('name') or 'unnamed',
            config_digest=config_digest(config_dict),
            horizon=config_dict['horizon'],
            runs=config_dict['runs'],
            seed=str(config_dict['seed']),
            workers=config_dict.get('workers', 1),
            duration_seconds=duration,
            success=success,
            message=message,
            output_csv=output_csv,
            output_json=output_json,
        )
        for row in rows:
            PolicySummary.create(
                run=run,
                policy_name=row['name'],
                kind=row.get('kind'),
                time_averaged=row['time_averaged'],
                time_averaged_ci=row['time_averaged_ci'],
                final=row['final'],
                final_ci=row['final_ci'],
                decrease=row.get('decrease'),
            )
    return run


def recent_runs(limit: int = 20) -> List[ExperimentRun]:
    return list(ExperimentRun.select().order_by(ExperimentRun.id.desc()).limit(limit))
