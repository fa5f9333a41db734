"""
SQLite registry of grid-sweep cells.
Lets an interrupted sweep skip cells that already completed.
"""
import json
import logging
import sqlite3
from datetime import datetime
from pathlib import Path
from typing import Dict, List, Optional

from src import config
from src.models import SweepCellResult

logger = logging.getLogger(__name__)


class Database:
    """SQLite database manager for sweep results."""

    def __init__(self, db_path: Optional[str] = None):
        """Initialize database connection.

        Args:
            db_path: Path to SQLite database file. Defaults to config.DB_PATH.
        """
        self.db_path = db_path or config.DB_PATH
        Path(self.db_path).parent.mkdir(parents=True, exist_ok=True)
        self.conn = None

    def connect(self) -> sqlite3.Connection:
        """Establish database connection with WAL mode."""
        if self.conn is None:
            self.conn = sqlite3.connect(self.db_path)
            self.conn.execute("PRAGMA journal_mode=WAL")
            self.conn.row_factory = sqlite3.Row
        return self.conn

    def close(self):
        if self.conn:
            self.conn.close()
            self.conn = None

    def initialize_schema(self):
        """Create the sweep table and index if they don't exist."""
        conn = self.connect()
        conn.execute("""
            CREATE TABLE IF NOT EXISTS sweep_cells (
                sweep_id TEXT NOT NULL,
                cell_id TEXT NOT NULL,
                params TEXT NOT NULL,
                status TEXT NOT NULL,
                metrics TEXT,
                criterion REAL,
                error TEXT,
                created_at TEXT NOT NULL,
                PRIMARY KEY (sweep_id, cell_id)
            )
        """)
        conn.execute("""
            CREATE INDEX IF NOT EXISTS idx_sweep_cells_status
            ON sweep_cells(sweep_id, status)
        """)
        conn.commit()
        logger.debug("Sweep registry ready at %s", self.db_path)

    def execute(self, query: str, params: tuple = ()):
        conn = self.connect()
        cursor = conn.cursor()
        cursor.execute(query, params)
        conn.commit()
        return cursor

    def fetchall(self, query: str, params: tuple = ()) -> list:
        """Execute query and fetch all results as row dictionaries."""
        return [dict(row) for row in self.execute(query, params).fetchall()]

    def fetchone(self, query: str, params: tuple = ()) -> Optional[dict]:
        row = self.execute(query, params).fetchone()
        return dict(row) if row else None

    def record_cell(self, sweep_id: str, result: SweepCellResult) -> None:
        """Insert or replace one cell outcome."""
        self.execute(
            """INSERT OR REPLACE INTO sweep_cells
                   (sweep_id, cell_id, params, status, metrics, criterion, error, created_at)
                   VALUES (?, ?, ?, ?, ?, ?, ?, ?)""",
            (
                sweep_id,
                result.cell_id,
                json.dumps(result.params, sort_keys=True),
                result.status,
                json.dumps(result.metrics, sort_keys=True),
                result.criterion,
                result.error,
                datetime.now().isoformat(),
            ),
        )

    def completed_cells(self, sweep_id: str) -> Dict[str, SweepCellResult]:
        """Completed cells of a sweep keyed by cell id; failed cells are retried."""
        rows = self.fetchall(
            "SELECT * FROM sweep_cells WHERE sweep_id = ? AND status = 'completed'",
            (sweep_id,),
        )
        return {row["cell_id"]: _row_to_result(row) for row in rows}

    def sweep_cells(self, sweep_id: str) -> List[SweepCellResult]:
        rows = self.fetchall("SELECT * FROM sweep_cells WHERE sweep_id = ? ORDER BY cell_id", (sweep_id,))
        return [_row_to_result(row) for row in rows]


def _row_to_result(row: dict) -> SweepCellResult:
    return SweepCellResult(
        cell_id=row["cell_id"],
        params=json.loads(row["params"]),
        status=row["status"],
        criterion=row["criterion"],
        metrics=json.loads(row["metrics"] or "{}"),
        error=row["error"],
    )

