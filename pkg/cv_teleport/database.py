"""SQLite archive of command runs."""

import json
import logging
import sqlite3
from contextlib import asynccontextmanager, contextmanager
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

import aiosqlite

from .tables import Provenance

logger = logging.getLogger(__name__)


class RunArchive:
    """Stores every archived command result with its provenance."""

    def __init__(self, db_path: Path):
        """Initialize the archive.

        Args:
            db_path: Path to SQLite database file
        """
        self.db_path = Path(db_path)
        self.db_path.parent.mkdir(parents=True, exist_ok=True)
        self._init_schema()

    @contextmanager
    def get_connection(self):
        """Get a database connection with automatic commit/rollback."""
        conn = sqlite3.connect(self.db_path)
        conn.row_factory = sqlite3.Row
        try:
            yield conn
            conn.commit()
        except Exception:
            conn.rollback()
            raise
        finally:
            conn.close()

    @asynccontextmanager
    async def get_async_connection(self):
        """Get an async database connection with automatic commit/rollback."""
        conn = await aiosqlite.connect(str(self.db_path))
        conn.row_factory = aiosqlite.Row
        try:
            yield conn
            await conn.commit()
        except Exception:
            await conn.rollback()
            raise
        finally:
            await conn.close()

    def _init_schema(self):
        with self.get_connection() as conn:
            cursor = conn.cursor()
            cursor.execute("""
                CREATE TABLE IF NOT EXISTS runs (
                    id INTEGER PRIMARY KEY AUTOINCREMENT,
                    command TEXT NOT NULL,
                    config_hash TEXT NOT NULL,
                    tool_version TEXT NOT NULL,
                    seed TEXT,
                    created_at TEXT NOT NULL,
                    payload TEXT NOT NULL
                )
            """)
            cursor.execute("CREATE INDEX IF NOT EXISTS idx_runs_config_hash ON runs(config_hash)")
            cursor.execute("CREATE INDEX IF NOT EXISTS idx_runs_command ON runs(command)")
            logger.debug(f"Run archive schema initialized at {self.db_path}")

    @staticmethod
    def _row_values(command: str, provenance: Provenance, payload: dict) -> tuple:
        # u64 seeds overflow SQLite's signed INTEGER, so they are kept as text
        seed = None if provenance.seed is None else str(provenance.seed)
        return (
            command,
            provenance.config_hash,
            provenance.tool_version,
            seed,
            datetime.now(timezone.utc).isoformat(),
            json.dumps(payload),
        )

    def store_run(self, command: str, provenance: Provenance, payload: dict) -> int:
        """Archive one result synchronously.

        Returns:
            Run ID
        """
        with self.get_connection() as conn:
            cursor = conn.cursor()
            cursor.execute("""
                INSERT INTO runs (command, config_hash, tool_version, seed, created_at, payload)
                VALUES (?, ?, ?, ?, ?, ?)
            """, self._row_values(command, provenance, payload))
            run_id = cursor.lastrowid
        logger.info(f"Archived {command} run {run_id}")
        return run_id

    async def store_run_async(self, command: str, provenance: Provenance, payload: dict) -> int:
        """Async version of store_run."""
        async with self.get_async_connection() as conn:
            cursor = await conn.cursor()
            await cursor.execute("""
                INSERT INTO runs (command, config_hash, tool_version, seed, created_at, payload)
                VALUES (?, ?, ?, ?, ?, ?)
            """, self._row_values(command, provenance, payload))
            run_id = cursor.lastrowid
        logger.info(f"Archived {command} run {run_id}")
        return run_id

    @staticmethod
    def _summary(row: sqlite3.Row) -> dict:
        return {
            'id': row['id'],
            'command': row['command'],
            'config_hash': row['config_hash'],
            'tool_version': row['tool_version'],
            'seed': int(row['seed']) if row['seed'] is not None else None,
            'created_at': row['created_at'],
        }

    def list_runs(self, command: Optional[str] = None, config_hash: Optional[str] = None,
                  limit: int = 20, offset: int = 0) -> dict:
        """List archived runs, newest first.

        Args:
            command: Filter by command name
            config_hash: Filter by configuration hash
            limit: Maximum results
            offset: Number of results to skip

        Returns:
            Paginated summary without payloads
        """
        where_clauses = []
        params: list = []
        if command:
            where_clauses.append("command = ?")
            params.append(command)
        if config_hash:
            where_clauses.append("config_hash = ?")
            params.append(config_hash)
        where = f"WHERE {' AND '.join(where_clauses)}" if where_clauses else ""

        with self.get_connection() as conn:
            cursor = conn.cursor()
            cursor.execute(f"SELECT COUNT(*) AS count FROM runs {where}", params)
            total = cursor.fetchone()['count']
            cursor.execute(f"""
                SELECT id, command, config_hash, tool_version, seed, created_at
                FROM runs {where}
                ORDER BY id DESC
                LIMIT ? OFFSET ?
            """, [*params, limit, offset])
            results = [self._summary(row) for row in cursor.fetchall()]

        has_more = (offset + len(results)) < total
        return {
            'total': total,
            'limit': limit,
            'offset': offset,
            'returned': len(results),
            'has_more': has_more,
            'next_offset': offset + limit if has_more else None,
            'results': results,
        }

    def get_run(self, run_id: int) -> Optional[dict]:
        """Full archived run including its payload."""
        with self.get_connection() as conn:
            cursor = conn.cursor()
            cursor.execute("SELECT * FROM runs WHERE id = ?", (run_id,))
            row = cursor.fetchone()
            if not row:
                return None
            run = self._summary(row)
            run['payload'] = json.loads(row['payload'])
            return run

    def find_latest(self, command: str, config_hash: str) -> Optional[dict]:
        """Most recent run of a command for a configuration."""
        with self.get_connection() as conn:
            cursor = conn.cursor()
            cursor.execute("""
                SELECT id FROM runs
                WHERE command = ? AND config_hash = ?
                ORDER BY id DESC LIMIT 1
            """, (command, config_hash))
            row = cursor.fetchone()
        return self.get_run(row['id']) if row else None

    def clear_all(self):
        """Delete every archived run."""
        with self.get_connection() as conn:
            conn.execute("DELETE FROM runs")
            logger.info("Run archive cleared")
