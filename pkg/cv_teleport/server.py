"""FastMCP server exposing the teleportation experiments as tools."""

import logging
from typing import Any, Optional

from fastmcp import FastMCP

from . import tools
from .config import ARCHIVE_PATH, LOG_LEVEL

logger = logging.getLogger(__name__)

mcp = FastMCP("CV Teleport Sim")


@mcp.tool()
def teleport(config: dict[str, Any]) -> dict:
    """Run one teleportation and report every figure of merit.

    The config is a run document (see README): a "teleporter" block with
    opa1/opa2 squeezing, efficiencies, dark noise, gains and the input state;
    optionally a "montecarlo" block {n, seed} for a sampled cross-check.

    Returns:
        Fidelity, T+-/T_q, conditional variances/V_q, Duan value, flags against
        the classical and no-cloning limits, measurement penalties and provenance
    """
    return tools.run_tool('teleport', config)


@mcp.tool()
def sweep_gain(config: dict[str, Any]) -> dict:
    """Sweep a teleporter parameter (the gain by default) and tabulate F, T_q and V_q.

    Use the "sweep" block: {parameter, start, stop, steps, gain_ratio}.
    gain_ratio fixes g- = gain_ratio * g+ while teleporter.gain_plus is swept.

    Returns:
        {columns, rows, provenance, metadata} with columns g_plus, g_minus, F, T_q, V_q
    """
    return tools.run_tool('sweep-gain', config)


@mcp.tool()
def tv_map(config: dict[str, Any]) -> dict:
    """Classical-limit, unity-gain and experiment curves on the T-V plane.

    Returns:
        Table with columns curve_id, parameter, T_q, V_q
    """
    return tools.run_tool('tv-map', config)


@mcp.tool()
def duan(config: dict[str, Any]) -> dict:
    """Duan inseparability of the configured EPR resource.

    Set "observed_duan" to infer the OPA squeezing behind a measured value.
    """
    return tools.run_tool('duan', config)


@mcp.tool()
def spectrum(config: dict[str, Any]) -> dict:
    """Synthesized spectrum-analyzer traces of the input and output states.

    Requires a "montecarlo" block for the seed. Traces come with classical
    (4.77 dB) and no-cloning (3.01 dB) reference rows.
    """
    return tools.run_tool('spectrum', config)


@mcp.tool()
def phase_space(config: dict[str, Any]) -> dict:
    """Fidelity over a grid of coherent input amplitudes at the configured gains."""
    return tools.run_tool('phase-space', config)


@mcp.tool()
def list_runs(
    command: Optional[str] = None,
    config_hash: Optional[str] = None,
    limit: int = 20,
    offset: int = 0
) -> dict:
    """List archived runs, newest first.

    PAGINATION: if has_more=true, call again with offset=next_offset.

    Args:
        command: Filter by command (teleport/sweep-gain/tv-map/duan/spectrum/phase-space)
        config_hash: Filter by configuration hash
        limit: Maximum results per page (default: 20, max: 100)
        offset: Number of results to skip
    """
    limit = min(limit, 100)
    return tools.list_runs(command, config_hash, limit, offset)


@mcp.tool()
def get_run(run_id: int) -> dict:
    """Full archived run, including the stored command output."""
    return tools.get_run(run_id)


def main():
    """Run the MCP server."""
    logging.basicConfig(
        level=LOG_LEVEL,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    )
    if ARCHIVE_PATH is None:
        logger.warning("CV_TELEPORT_ARCHIVE_PATH is not set; runs will not be archived")
    logger.info("Starting CV Teleport Sim MCP server")
    mcp.run()


if __name__ == "__main__":
    main()
