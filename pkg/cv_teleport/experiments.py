"""Experiment commands behind the CLI and the MCP tools.

Every command takes a validated RunConfig and returns either a CurveTable
(sweeps, maps, traces) or a Report (single runs). Grid points are evaluated
through runner.run_grid, so rows always come back in grid order.
"""

import logging
import math
from typing import Callable, Optional, Union

import numpy as np

from . import __version__
from .errors import ConfigValidationError, SweepError
from .metrics import (
    REPORT_TOLERANCE,
    MetricsReport,
    conditional_from_covariance,
    evaluate,
    fidelity,
    reference_limits,
    variance_to_squeezing_db,
    victor_correct,
)
from .montecarlo import (
    RNG_ALGORITHM,
    corrected_levels,
    extract_snr,
    floor_db,
    stream_moments,
    synthesize_spectrum,
    variance_tolerance,
)
from .noise import NoiseBasis, mode_variances
from .optics import SqueezerSpec, apply_entanglement_loss, duan_inseparability, epr_pair
from .runner import run_grid
from .schema import MonteCarloSettings, RunConfig, SweepSettings, set_path, teleporter_config
from .tables import CurveTable, Provenance, Report
from .teleporter import (
    BobCoupling,
    TeleportOutcome,
    TeleporterConfig,
    closed_form_output_variances,
    measurement_penalties,
    teleport,
)

logger = logging.getLogger(__name__)

GAIN_PATHS = ('teleporter.gain_plus', 'teleporter.gain_minus')
SWEEP_COLUMNS = ['g_plus', 'g_minus', 'F', 'T_q', 'V_q']
TV_COLUMNS = ['curve_id', 'parameter', 'T_q', 'V_q']
SPECTRUM_COLUMNS = ['trace', 'quadrature', 'frequency_hz', 'power_db']
PHASE_SPACE_COLUMNS = ['alpha_plus', 'alpha_minus', 'separation', 'F', 'beats_classical']

# Lower end of the unity-gain curve; v_sq = 0 itself is not a physical squeezer
UNITY_CURVE_FLOOR = 1e-12


def provenance(run: RunConfig, seed: Optional[int] = None) -> Provenance:
    return Provenance(run.config_hash(), __version__, seed)


def report_for(outcome: TeleportOutcome, duan: Optional[float] = None) -> MetricsReport:
    tele = outcome.config
    return evaluate(
        outcome.input_variances(),
        outcome.output_variances(),
        (tele.input.alpha_plus, tele.input.alpha_minus),
        tele.gains,
        duan,
    )


def evaluate_config(tele: TeleporterConfig) -> MetricsReport:
    return report_for(teleport(tele))


# Sweep grids

def sweep_grid(sweep: SweepSettings) -> list[float]:
    if sweep.start == sweep.stop:
        raise SweepError(f"Sweep of {sweep.parameter} has an empty range [{sweep.start}, {sweep.stop}]")
    return np.linspace(sweep.start, sweep.stop, sweep.steps).tolist()


def sweep_point(run: RunConfig, sweep: SweepSettings, value: float) -> TeleporterConfig:
    """Teleporter configuration with the swept parameter set to value."""
    relative = sweep.parameter.split('.', 1)[1]
    settings = set_path(run.teleporter, relative, value)
    if sweep.parameter == 'teleporter.gain_plus' and sweep.gain_ratio is not None:
        settings = settings.model_copy(update={'gain_minus': sweep.gain_ratio * value})
    return teleporter_config(run.model_copy(update={'teleporter': settings}))


def cmd_sweep_gain(run: RunConfig) -> CurveTable:
    """Fidelity, T_q and V_q along a one-parameter sweep (gain by default)."""
    sweep = run.sweep or SweepSettings()
    grid = sweep_grid(sweep)
    is_gain = sweep.parameter in GAIN_PATHS
    logger.info(f"Sweeping {sweep.parameter} over {len(grid)} points")

    def point(value: float) -> list:
        tele = sweep_point(run, sweep, value)
        report = evaluate_config(tele)
        row = [tele.gain_plus, tele.gain_minus, report.fidelity, report.t_q, report.v_q]
        return row if is_gain else [value, *row]

    rows = run_grid(grid, point, 'sweep-gain')
    columns = SWEEP_COLUMNS if is_gain else ['parameter', *SWEEP_COLUMNS]

    f_index = columns.index('F')
    best = max(range(len(rows)), key=lambda i: rows[i][f_index])
    metadata = {
        'parameter': sweep.parameter,
        'gain_ratio': sweep.gain_ratio,
        'max_fidelity': rows[best][f_index],
        'argmax': dict(zip(columns, rows[best])),
    }
    return CurveTable('sweep-gain', columns, rows, provenance(run), metadata)


def cmd_tv_map(run: RunConfig) -> CurveTable:
    """Classical-limit, unity-gain and experiment curves on the T-V plane."""
    gain_sweep = run.sweep if run.sweep is not None and run.sweep.parameter in GAIN_PATHS else SweepSettings()
    if run.sweep is not None and gain_sweep is not run.sweep:
        logger.warning(f"tv-map sweeps gain only; ignoring sweep over {run.sweep.parameter} "
                       f"and using the default gain grid")
    gains = sweep_grid(gain_sweep)

    unity_axis = np.linspace(1.0, 0.0, gain_sweep.steps)
    squeezing = [max(float(v), UNITY_CURVE_FLOOR) for v in unity_axis]

    points: list[tuple[str, float, Callable[[], TeleporterConfig]]] = []
    for g in gains:
        points.append(('classical', g, lambda g=g: TeleporterConfig(gain_plus=g, gain_minus=g)))
    for v in squeezing:
        points.append(('unity_gain', v, lambda v=v: TeleporterConfig(opa1=SqueezerSpec(v), opa2=SqueezerSpec(v))))
    for g in gains:
        points.append(('experiment', g, lambda g=g: sweep_point(run, gain_sweep, g)))

    def point(item) -> list:
        curve_id, parameter, build = item
        report = evaluate_config(build())
        return [curve_id, parameter, report.t_q, report.v_q]

    rows = run_grid(points, point, 'tv-map')
    metadata = {
        'boundary': {'T_q': reference_limits().tv_boundary[0], 'V_q': reference_limits().tv_boundary[1]},
        'gain_parameter': gain_sweep.parameter,
        'gain_ratio': gain_sweep.gain_ratio,
    }
    return CurveTable('tv-map', TV_COLUMNS, rows, provenance(run), metadata)


# Single runs

def monte_carlo_check(outcome: TeleportOutcome, settings: MonteCarloSettings) -> dict:
    """Sampled output moments next to their noise-algebra values with 3 sigma bounds."""
    forms = [outcome.input.x_plus, outcome.input.x_minus, outcome.output.x_plus, outcome.output.x_minus]
    acc = stream_moments(forms, outcome.basis, settings.n, settings.seed)
    cov = acc.covariance_matrix()

    v_out = outcome.output_variances()
    estimated = (float(cov[2, 2]), float(cov[3, 3]))
    tolerance = tuple(variance_tolerance(v, settings.n) for v in v_out)
    cond = conditional_from_covariance((cov[0, 0], cov[1, 1]), estimated, (cov[0, 2], cov[1, 3]))

    return {
        'n': settings.n,
        'seed': settings.seed,
        'algorithm': RNG_ALGORITHM,
        'v_out_plus': estimated[0],
        'v_out_minus': estimated[1],
        'tolerance_plus': tolerance[0],
        'tolerance_minus': tolerance[1],
        'within_tolerance': all(abs(e - v) <= t for e, v, t in zip(estimated, v_out, tolerance)),
        'v_cond_plus': float(cond.plus),
        'v_cond_minus': float(cond.minus),
    }


def cmd_teleport(run: RunConfig) -> Report:
    """Full metrics report for one configuration."""
    tele = teleporter_config(run)
    outcome = teleport(tele)
    duan = duan_inseparability(outcome.pair, outcome.basis)
    report = report_for(outcome, duan)

    data = report.to_dict()
    v_m = measurement_penalties(tele)
    data['measurement_penalties'] = {'plus': v_m[0], 'minus': v_m[1], 'product': v_m[0] * v_m[1]}
    gain_plus, gain_minus = outcome.measured_gains()
    data['measured_gains'] = {'plus': gain_plus, 'minus': gain_minus}
    if tele.bob_coupling is BobCoupling.IDEAL_DISPLACEMENT:
        closed = closed_form_output_variances(tele)
        data['closed_form_v_out'] = {'plus': closed[0], 'minus': closed[1]}

    seed = None
    if run.montecarlo is not None:
        data['montecarlo'] = monte_carlo_check(outcome, run.montecarlo)
        seed = run.montecarlo.seed

    logger.info(f"Teleport: F={report.fidelity:.4f}, T_q={report.t_q:.4f}, V_q={report.v_q:.4f}")
    return Report('teleport', data, provenance(run, seed))


def cmd_duan(run: RunConfig) -> Report:
    """Inseparability of the configured resource and the OPA squeezing it implies."""
    tele = teleporter_config(run)
    basis = NoiseBasis()
    pair = epr_pair(basis, tele.opa1, tele.opa2)
    lossless = duan_inseparability(pair, basis)
    lossy = apply_entanglement_loss(pair, tele.eta_a, tele.eta_b, basis)
    duan = duan_inseparability(lossy, basis)

    a_plus, a_minus = mode_variances(lossy.beam_a, basis)
    b_plus, b_minus = mode_variances(lossy.beam_b, basis)
    data = {
        'duan': duan,
        'duan_lossless': lossless,
        'entangled': duan < 1.0 - REPORT_TOLERANCE,
        'eta_a': tele.eta_a,
        'eta_b': tele.eta_b,
        'beam_a': {'v_plus': a_plus, 'v_minus': a_minus},
        'beam_b': {'v_plus': b_plus, 'v_minus': b_minus},
    }

    observed = run.observed_duan if run.observed_duan is not None else duan
    if tele.eta_a == tele.eta_b and tele.eta_a > 0:
        # Symmetric loss maps the average squeezed variance v to eta v + (1 - eta)
        inferred = victor_correct(observed, tele.eta_a)
        data['inferred'] = {
            'observed_duan': observed,
            'v_squeezed': inferred,
            'squeezing_db': variance_to_squeezing_db(inferred) if inferred > 0 else None,
        }
    else:
        logger.warning(f"Cannot infer OPA squeezing with asymmetric loss (eta_a={tele.eta_a}, eta_b={tele.eta_b})")
        data['inferred'] = None

    logger.info(f"Duan inseparability {duan:.4f} (lossless {lossless:.4f})")
    return Report('duan', data, provenance(run))


# Spectra and phase space

def cmd_spectrum(run: RunConfig) -> CurveTable:
    """Analyzer traces of the input and output around the modulation frequency.

    The levels the verifier detects at eta_victor are corrected for that
    efficiency, and the traces are drawn from the corrected levels.
    """
    if run.montecarlo is None:
        raise ConfigValidationError("Spectrum synthesis needs a seed",
                                    [('montecarlo', 'required for the spectrum command')])
    spec = run.spectrum
    seed = run.montecarlo.seed
    tele = teleporter_config(run)
    outcome = teleport(tele)
    eta = tele.eta_victor

    states = {
        'input': (outcome.input_variances(), (outcome.input.alpha_plus, outcome.input.alpha_minus)),
        'output': (outcome.output_variances(), (outcome.output.alpha_plus, outcome.output.alpha_minus)),
    }
    offsets = (-spec.span / 2, spec.span / 2)

    rows = []
    snr = {}
    floors = {}
    index = 0
    for q, quadrature in enumerate(('plus', 'minus')):
        for name in ('input', 'output'):
            variances, amplitudes = states[name]
            floor, alpha = corrected_levels(eta * variances[q] + (1.0 - eta), math.sqrt(eta) * amplitudes[q], eta)
            trace = synthesize_spectrum(floor, alpha, spec.center, spec.span, spec.rbw, spec.vbw,
                                        seed ^ index, spec.points)
            index += 1
            snr[f"{name}_{quadrature}"] = extract_snr(trace, spec.center, offsets)
            floors[f"{name}_{quadrature}"] = floor_db(trace)
            rows.extend([name, quadrature, float(f), float(p)] for f, p in zip(trace.frequencies, trace.power_db))

    frequencies = np.linspace(spec.center - spec.span / 2, spec.center + spec.span / 2, spec.points)
    limits = reference_limits()
    for name, level in (('classical_limit', limits.classical_noise_db),
                        ('no_cloning_limit', limits.no_cloning_noise_db)):
        rows.extend([name, 'both', float(f), level] for f in frequencies)

    transfer = {}
    expected = {}
    for q, quadrature in enumerate(('plus', 'minus')):
        v_in, v_out = states['input'][0][q], states['output'][0][q]
        expected[quadrature] = tele.gains[q] ** 2 * v_in / v_out
        signal_in = snr[f"input_{quadrature}"] - 1.0
        if states['input'][1][q] != 0 and signal_in > 0:
            transfer[quadrature] = (snr[f"output_{quadrature}"] - 1.0) / signal_in
        else:
            transfer[quadrature] = None

    metadata = {
        'center_hz': spec.center,
        'span_hz': spec.span,
        'rbw_hz': spec.rbw,
        'vbw_hz': spec.vbw,
        'eta_victor': eta,
        'snr': snr,
        'floor_db': floors,
        'transfer_from_traces': transfer,
        'transfer_expected': expected,
    }
    logger.info(f"Synthesized {index} traces of {spec.points} points (seed {seed})")
    return CurveTable('spectrum', SPECTRUM_COLUMNS, rows, provenance(run, seed), metadata)


def cmd_phase_space(run: RunConfig) -> CurveTable:
    """Fidelity over a grid of input amplitudes at the configured gains."""
    tele = teleporter_config(run)
    outcome = teleport(tele)
    v_in, v_out = outcome.input_variances(), outcome.output_variances()
    g_plus, g_minus = tele.gains
    axis = np.linspace(0.0, run.phase_space.alpha_max, run.phase_space.steps).tolist()
    classical = reference_limits().classical_fidelity

    rows = []
    for alpha_plus in axis:
        for alpha_minus in axis:
            fid = fidelity(v_in, v_out, (alpha_plus, alpha_minus), tele.gains).fidelity
            separation = math.hypot((g_plus - 1.0) * alpha_plus, (g_minus - 1.0) * alpha_minus)
            rows.append([alpha_plus, alpha_minus, separation, fid, fid > classical + REPORT_TOLERANCE])

    values = [row[3] for row in rows]
    metadata = {
        'mean_fidelity': float(np.mean(values)),
        'min_fidelity': min(values),
        'fraction_beating_classical': sum(row[4] for row in rows) / len(rows),
    }
    return CurveTable('phase-space', PHASE_SPACE_COLUMNS, rows, provenance(run), metadata)


COMMANDS: dict[str, Callable[[RunConfig], Union[CurveTable, Report]]] = {
    'teleport': cmd_teleport,
    'sweep-gain': cmd_sweep_gain,
    'tv-map': cmd_tv_map,
    'duan': cmd_duan,
    'spectrum': cmd_spectrum,
    'phase-space': cmd_phase_space,
}


def run_command(name: str, run: RunConfig) -> Union[CurveTable, Report]:
    try:
        command = COMMANDS[name]
    except KeyError:
        raise ConfigValidationError(f"Unknown command '{name}'", [('command', f"expected one of {sorted(COMMANDS)}")]) from None
    logger.info(f"Running {name} (config {run.config_hash()[:12]})")
    return command(run)
