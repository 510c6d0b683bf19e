"""Stochastic cross-checks of the noise algebra and spectrum-analyzer trace synthesis.

Random streams use numpy's counter-based Philox4x64-10 generator. Work is
split into fixed-size chunks; chunk i draws from the stream keyed
seed XOR i, so results are bit-reproducible for a given seed and
CV_TELEPORT_MC_CHUNK regardless of how many workers run the chunks.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np

from . import config
from .errors import DomainError, UsageError
from .metrics import linear_to_db, victor_correct
from .noise import LinearForm, NoiseBasis

logger = logging.getLogger(__name__)

RNG_ALGORITHM = 'Philox4x64-10'

DEFAULT_CENTER = 8.4e6
DEFAULT_SPAN = 100e3
DEFAULT_RBW = 10e3
DEFAULT_VBW = 30.0
DEFAULT_POINTS = 401
DEFAULT_NOISE_OFFSETS = (-50e3, 50e3)

_U64 = 2 ** 64


def stream(seed: int, index: int = 0) -> np.random.Generator:
    """Philox stream for one worker or chunk, keyed seed XOR index."""
    if not 0 <= seed < _U64:
        raise DomainError(f"Seed must be an unsigned 64-bit integer, got {seed}")
    return np.random.Generator(np.random.Philox(key=seed ^ index))


@dataclass(frozen=True)
class SampleSet:
    values: np.ndarray
    seed: int

    @property
    def n(self) -> int:
        return int(self.values.shape[0])


class _Layout(NamedTuple):
    var_ids: list[int]
    scales: np.ndarray
    coefficients: np.ndarray
    offsets: np.ndarray


def _layout(forms: Sequence[LinearForm], basis: NoiseBasis) -> _Layout:
    for f in forms:
        if f.basis_token != basis.token:
            raise UsageError(f"Form of basis {f.basis_token} sampled against basis {basis.token}")
    var_ids = sorted({i for f in forms for i in f.coefficients})
    scales = np.sqrt(np.array([basis.variance_of(i) for i in var_ids], dtype=float))
    coefficients = np.array([f.coefficient_vector(var_ids) for f in forms], dtype=float).T
    offsets = np.array([f.offset for f in forms], dtype=float)
    return _Layout(var_ids, scales, coefficients.reshape(len(var_ids), len(forms)), offsets)


def _chunk_sizes(n: int) -> list[int]:
    chunk = config.MC_CHUNK
    return [min(chunk, n - start) for start in range(0, n, chunk)]


def _draw_chunk(layout: _Layout, seed: int, index: int, size: int) -> np.ndarray:
    rng = stream(seed, index)
    if not layout.var_ids:
        return np.broadcast_to(layout.offsets, (size, len(layout.offsets))).copy()
    z = rng.standard_normal((size, len(layout.var_ids))) * layout.scales
    return z @ layout.coefficients + layout.offsets


def sample_joint(forms: Sequence[LinearForm], basis: NoiseBasis, n: int, seed: int,
                 workers: Optional[int] = None) -> list[SampleSet]:
    """Draw n joint samples of several forms from shared source draws."""
    if n < 1:
        raise DomainError(f"Sample count must be >= 1, got {n}")
    layout = _layout(forms, basis)
    sizes = _chunk_sizes(n)
    with ThreadPoolExecutor(max_workers=workers or config.worker_count()) as pool:
        chunks = list(pool.map(lambda item: _draw_chunk(layout, seed, *item), enumerate(sizes)))
    values = np.concatenate(chunks, axis=0)
    return [SampleSet(values[:, j].copy(), seed) for j in range(len(forms))]


def sample(form: LinearForm, basis: NoiseBasis, n: int, seed: int) -> SampleSet:
    """Draw n samples of one form (sources drawn zero-mean with their variances)."""
    return sample_joint([form], basis, n, seed)[0]


@dataclass(frozen=True)
class MomentAccumulator:
    """Count, means and co-moment matrix; merges are order-independent up to rounding."""

    count: int
    mean: np.ndarray
    comoment: np.ndarray

    @classmethod
    def from_values(cls, values: np.ndarray) -> 'MomentAccumulator':
        values = np.atleast_2d(values.T).T
        mean = values.mean(axis=0)
        centered = values - mean
        return cls(values.shape[0], mean, centered.T @ centered)

    def merge(self, other: 'MomentAccumulator') -> 'MomentAccumulator':
        if self.count == 0:
            return other
        total = self.count + other.count
        delta = other.mean - self.mean
        return MomentAccumulator(
            total,
            self.mean + delta * other.count / total,
            self.comoment + other.comoment + np.outer(delta, delta) * self.count * other.count / total,
        )

    def covariance_matrix(self) -> np.ndarray:
        if self.count < 2:
            raise DomainError(f"Moment estimates need at least 2 samples, got {self.count}")
        return self.comoment / (self.count - 1)


class Moments(NamedTuple):
    mean: float
    variance: float
    covariance: Optional[float] = None


def estimate_moments(s: SampleSet, s2: Optional[SampleSet] = None) -> Moments:
    """Unbiased mean, variance and (with a second set) covariance."""
    if s.n < 2:
        raise DomainError(f"Moment estimates need at least 2 samples, got {s.n}")
    columns = [s.values]
    if s2 is not None:
        if s2.n != s.n:
            raise DomainError(f"Sample sets differ in length ({s.n} vs {s2.n})")
        columns.append(s2.values)
    stacked = np.column_stack(columns)

    acc = MomentAccumulator(0, np.zeros(len(columns)), np.zeros((len(columns), len(columns))))
    for start in range(0, s.n, config.MC_CHUNK):
        acc = acc.merge(MomentAccumulator.from_values(stacked[start:start + config.MC_CHUNK]))
    cov = acc.covariance_matrix()
    return Moments(float(acc.mean[0]), float(cov[0, 0]), float(cov[0, 1]) if s2 is not None else None)


def stream_moments(forms: Sequence[LinearForm], basis: NoiseBasis, n: int, seed: int,
                   workers: Optional[int] = None) -> MomentAccumulator:
    """Moments of n joint samples without keeping the samples.

    Draws exactly the samples sample_joint() would and merges per-chunk
    accumulators in chunk order.
    """
    if n < 2:
        raise DomainError(f"Moment estimates need at least 2 samples, got {n}")
    layout = _layout(forms, basis)
    sizes = _chunk_sizes(n)

    def run(item):
        index, size = item
        return MomentAccumulator.from_values(_draw_chunk(layout, seed, index, size))

    with ThreadPoolExecutor(max_workers=workers or config.worker_count()) as pool:
        parts = list(pool.map(run, enumerate(sizes)))

    acc = parts[0]
    for part in parts[1:]:
        acc = acc.merge(part)
    logger.debug(f"Merged {len(parts)} Monte Carlo chunks ({n} samples, seed {seed})")
    return acc


def variance_tolerance(v: float, n: int, sigmas: float = 3.0) -> float:
    """sigmas standard deviations of the Gaussian sample-variance estimator."""
    return sigmas * v * math.sqrt(2.0 / (n - 1))


def covariance_tolerance(v1: float, v2: float, cov: float, n: int, sigmas: float = 3.0) -> float:
    """sigmas standard deviations of the Gaussian sample-covariance estimator."""
    return sigmas * math.sqrt((v1 * v2 + cov ** 2) / (n - 1))


# Spectrum-analyzer traces

@dataclass(frozen=True)
class SpectrumTrace:
    frequencies: np.ndarray
    power_db: np.ndarray
    rbw: float
    vbw: float
    center: float

    def __post_init__(self):
        if self.frequencies.shape != self.power_db.shape:
            raise UsageError("Trace frequency and power arrays differ in length")
        if self.rbw <= 0:
            raise DomainError(f"Resolution bandwidth must be positive, got {self.rbw}")

    def linear(self) -> np.ndarray:
        return 10 ** (self.power_db / 10)

    def index_of(self, frequency: float) -> int:
        lo, hi = self.frequencies[0], self.frequencies[-1]
        slack = 1e-9 * max(abs(lo), abs(hi), 1.0)
        if not lo - slack <= frequency <= hi + slack:
            raise DomainError(f"Frequency {frequency} Hz lies outside the trace span [{lo}, {hi}]")
        return int(np.argmin(np.abs(self.frequencies - frequency)))


def video_window(rbw: float, vbw: float, points: int) -> int:
    """Number of RBW-limited readings averaged per displayed point."""
    return max(1, min(math.ceil(rbw / vbw), points))


def synthesize_spectrum(noise_variance: float, signal_alpha: float, center: float = DEFAULT_CENTER,
                        span: float = DEFAULT_SPAN, rbw: float = DEFAULT_RBW, vbw: float = DEFAULT_VBW,
                        seed: int = 0, points: int = DEFAULT_POINTS) -> SpectrumTrace:
    """Noise floor plus a coherent peak, in dB relative to the shot-noise limit.

    Each point averages video_window() independent exponential power
    readings of the floor. The signal adds (2 alpha)^2 through a Gaussian
    RBW filter, so the peak over the floor is 1 + 4 alpha^2 / V.
    """
    if span <= 0 or rbw <= 0 or vbw <= 0:
        raise DomainError(f"Span and bandwidths must be positive, got span={span} rbw={rbw} vbw={vbw}")
    if noise_variance <= 0:
        raise DomainError(f"Noise variance must be positive, got {noise_variance}")
    if points < 3:
        raise DomainError(f"A trace needs at least 3 points, got {points}")

    frequencies = np.linspace(center - span / 2, center + span / 2, points)
    window = video_window(rbw, vbw, points)
    readings = stream(seed).standard_gamma(window, size=points) / window
    filter_shape = np.exp(-4.0 * math.log(2.0) * ((frequencies - center) / rbw) ** 2)
    power = noise_variance * readings + 4.0 * signal_alpha ** 2 * filter_shape
    return SpectrumTrace(frequencies, 10 * np.log10(power), rbw, vbw, center)


def extract_snr(trace: SpectrumTrace, center: float = DEFAULT_CENTER,
                offsets: tuple[float, float] = DEFAULT_NOISE_OFFSETS) -> float:
    """Peak power at center over the mean noise level at the two offset probes (linear).

    Each probe's noise level averages the points within half an RBW of it.
    """
    linear = trace.linear()
    peak = linear[trace.index_of(center)]
    levels = []
    for offset in offsets:
        probe = center + offset
        trace.index_of(probe)
        near = np.abs(trace.frequencies - probe) <= trace.rbw / 2
        levels.append(float(linear[near].mean()))
    return float(peak / np.mean(levels))


def corrected_levels(measured_floor: float, measured_alpha: float, eta_victor: float) -> tuple[float, float]:
    """Floor variance and peak amplitude with the verifier's detection loss undone.

    The correction acts on the detected levels, not on individual noisy
    readings; traces are then drawn from the corrected levels.
    """
    floor = victor_correct(measured_floor, eta_victor)
    if floor <= 0:
        raise DomainError(f"Detected floor {measured_floor} leaves no noise at efficiency {eta_victor}")
    return floor, measured_alpha / math.sqrt(eta_victor)


def floor_db(trace: SpectrumTrace, exclude: Optional[float] = None) -> float:
    """Mean floor level in dB, skipping points within `exclude` Hz of the center."""
    exclude = 2 * trace.rbw if exclude is None else exclude
    mask = np.abs(trace.frequencies - trace.center) > exclude
    return linear_to_db(float(trace.linear()[mask].mean()))
