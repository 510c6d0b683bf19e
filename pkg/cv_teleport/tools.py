"""Tool implementations shared by the MCP server and the CLI archive step."""

import logging
import sqlite3
from typing import Optional, Union

from . import config
from .database import RunArchive
from .errors import ConfigValidationError
from .experiments import run_command
from .runner import run_sync
from .schema import parse_run_config
from .tables import CurveTable, Report

logger = logging.getLogger(__name__)

# Global archive instance
_archive: Optional[RunArchive] = None


def get_archive() -> Optional[RunArchive]:
    """Get or create the archive; None when CV_TELEPORT_ARCHIVE_PATH is unset."""
    global _archive
    if _archive is None and config.ARCHIVE_PATH is not None:
        _archive = RunArchive(config.ARCHIVE_PATH)
    return _archive


def archive_result(result: Union[CurveTable, Report], archive: Optional[RunArchive] = None) -> Optional[int]:
    """Store a result if an archive is available. Archive failures never fail the run."""
    archive = archive or get_archive()
    if archive is None:
        return None
    try:
        return run_sync(archive.store_run_async(result.command, result.provenance, result.to_dict()))
    except (sqlite3.Error, OSError) as e:
        logger.warning(f"Could not archive {result.command} run: {e}")
        return None


def run_tool(command: str, document: dict) -> dict:
    """Validate a run document, run the command and return its JSON form.

    Returns:
        The command's JSON payload (with run_id when archived), or {'error': ...}
    """
    try:
        run = parse_run_config(document)
        result = run_command(command, run)
        payload = result.to_dict()
        run_id = archive_result(result)
        if run_id is not None:
            payload['run_id'] = run_id
        return payload
    except ConfigValidationError as e:
        logger.error(f"Invalid {command} request: {e}")
        return {'error': str(e), 'fields': [{'path': path, 'message': msg} for path, msg in e.errors]}
    except Exception as e:
        logger.error(f"{command} failed: {e}", exc_info=True)
        return {'error': str(e)}


def list_runs(command: Optional[str] = None, config_hash: Optional[str] = None,
              limit: int = 20, offset: int = 0) -> dict:
    archive = get_archive()
    if archive is None:
        return {'error': "Run archive is disabled; set CV_TELEPORT_ARCHIVE_PATH",
                'total': 0, 'limit': limit, 'offset': offset, 'returned': 0, 'results': []}
    try:
        return archive.list_runs(command, config_hash, limit, offset)
    except sqlite3.Error as e:
        logger.error(f"Error listing runs: {e}")
        return {'error': str(e), 'total': 0, 'limit': limit, 'offset': offset, 'returned': 0, 'results': []}


def get_run(run_id: int) -> dict:
    archive = get_archive()
    if archive is None:
        return {'error': "Run archive is disabled; set CV_TELEPORT_ARCHIVE_PATH"}
    try:
        run = archive.get_run(run_id)
    except sqlite3.Error as e:
        logger.error(f"Error reading run {run_id}: {e}")
        return {'error': str(e)}
    if run is None:
        return {'error': f"Run {run_id} not found"}
    return run
