"""Optical component library: squeezers, beamsplitters, phase shifts, loss, EPR pairs."""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from .errors import DomainError, UncertaintyViolationError, UsageError
from .noise import (
    UNCERTAINTY_TOLERANCE,
    FieldMode,
    LinearForm,
    NoiseBasis,
    SourceKind,
    combine,
    variance,
)

logger = logging.getLogger(__name__)


class Orientation(str, Enum):
    AMPLITUDE_SQUEEZED = 'amplitude_squeezed'
    PHASE_SQUEEZED = 'phase_squeezed'


@dataclass(frozen=True)
class SqueezerSpec:
    """Output variances of one OPA.

    When v_antisqueezed is omitted it takes the pure-state value 1/v_squeezed.
    """

    v_squeezed: float
    v_antisqueezed: Optional[float] = None
    orientation: Orientation = Orientation.AMPLITUDE_SQUEEZED

    def __post_init__(self):
        if self.v_antisqueezed is None and self.v_squeezed > 0:
            object.__setattr__(self, 'v_antisqueezed', 1.0 / self.v_squeezed)
        object.__setattr__(self, 'orientation', Orientation(self.orientation))

    @classmethod
    def vacuum(cls) -> 'SqueezerSpec':
        return cls(1.0, 1.0)

    @classmethod
    def from_db(cls, squeezing_db: float, antisqueezing_db: Optional[float] = None,
                orientation: Orientation = Orientation.AMPLITUDE_SQUEEZED) -> 'SqueezerSpec':
        """Build from squeezing quoted in dB below the shot-noise limit."""
        v_sq = 10 ** (-squeezing_db / 10)
        v_anti = None if antisqueezing_db is None else 10 ** (antisqueezing_db / 10)
        return cls(v_sq, v_anti, orientation)

    def validate(self):
        """Raise DomainError unless v_sq <= 1 <= v_anti and v_sq * v_anti >= 1."""
        v_sq, v_anti = self.v_squeezed, self.v_antisqueezed
        if v_anti is None or not (math.isfinite(v_sq) and math.isfinite(v_anti)) or v_sq <= 0:
            raise DomainError(f"Squeezer variances must be finite and positive, got ({v_sq}, {v_anti})")
        if v_sq > 1.0 or v_anti < 1.0:
            raise DomainError(f"Squeezer needs v_squeezed <= 1 <= v_antisqueezed, got ({v_sq}, {v_anti})")
        if v_sq * v_anti < 1.0 - UNCERTAINTY_TOLERANCE:
            raise UncertaintyViolationError(
                f"Squeezer ({v_sq}, {v_anti}) violates the uncertainty principle"
            )


@dataclass(frozen=True)
class EprPair:
    """Two entangled beams. a+ - b+ carries OPA 1's squeezing, a- + b- OPA 2's."""

    beam_a: FieldMode
    beam_b: FieldMode


def _require_optical(*modes: FieldMode):
    for m in modes:
        if m.classical:
            raise UsageError("Optical operation applied to a measured (classical) mode")


def vacuum_mode(basis: NoiseBasis) -> FieldMode:
    """Fresh vacuum mode with unit variance on both quadratures."""
    plus_id, minus_id = basis.register_source(1.0, 1.0, SourceKind.VACUUM)
    return basis.mode(plus_id, minus_id)


def squeezed_mode(basis: NoiseBasis, spec: SqueezerSpec) -> FieldMode:
    """Mode with the squeezer's variances, oriented per spec."""
    spec.validate()
    if spec.orientation is Orientation.AMPLITUDE_SQUEEZED:
        v_plus, v_minus = spec.v_squeezed, spec.v_antisqueezed
    else:
        v_plus, v_minus = spec.v_antisqueezed, spec.v_squeezed
    kind = SourceKind.VACUUM if v_plus == v_minus == 1.0 else SourceKind.SQUEEZED
    plus_id, minus_id = basis.register_source(v_plus, v_minus, kind)
    return basis.mode(plus_id, minus_id)


def beamsplitter(m1: FieldMode, m2: FieldMode, transmittance: float) -> tuple[FieldMode, FieldMode]:
    """Real orthogonal beamsplitter.

    out1 = sqrt(T) m1 + sqrt(1-T) m2, out2 = sqrt(T) m2 - sqrt(1-T) m1.
    """
    if not 0.0 <= transmittance <= 1.0:
        raise DomainError(f"Transmittance must lie in [0, 1], got {transmittance}")
    _require_optical(m1, m2)
    t = math.sqrt(transmittance)
    r = math.sqrt(1.0 - transmittance)
    out1 = FieldMode(combine(m1.x_plus, t, m2.x_plus, r), combine(m1.x_minus, t, m2.x_minus, r))
    out2 = FieldMode(combine(m2.x_plus, t, m1.x_plus, -r), combine(m2.x_minus, t, m1.x_minus, -r))
    return out1, out2


def phase_shift(m: FieldMode, theta: float) -> FieldMode:
    """Rotate the quadratures: X+' = cos X+ - sin X-, X-' = sin X+ + cos X-."""
    _require_optical(m)
    c, s = math.cos(theta), math.sin(theta)
    return FieldMode(combine(m.x_plus, c, m.x_minus, -s), combine(m.x_plus, s, m.x_minus, c))


def loss(m: FieldMode, eta: float, basis: NoiseBasis) -> FieldMode:
    """Loss channel of efficiency eta: mixes in a fresh vacuum, V' = eta V + (1 - eta)."""
    if not 0.0 <= eta <= 1.0:
        raise DomainError(f"Efficiency must lie in [0, 1], got {eta}")
    _require_optical(m)
    if eta == 1.0:
        return m
    transmitted, _ = beamsplitter(m, vacuum_mode(basis), eta)
    return transmitted


def displace(m: FieldMode, alpha_plus: float, alpha_minus: float) -> FieldMode:
    """Add coherent amplitude: offsets move by 2*alpha on each quadrature."""
    return FieldMode(
        m.x_plus.shifted(2.0 * alpha_plus),
        m.x_minus.shifted(2.0 * alpha_minus),
        m.classical,
    )


def epr_pair(basis: NoiseBasis, opa1: SqueezerSpec, opa2: SqueezerSpec) -> EprPair:
    """Entangle two amplitude-squeezed beams on a 50/50 splitter with a pi/2 phase.

    Builds a = (s1 + s2')/sqrt2 and b = (s2' - s1)/sqrt2 where s2' is OPA 2's
    beam rotated by pi/2, so that a+ - b+ = sqrt2 X+_1 and a- + b- = sqrt2 X+_2.
    """
    for spec in (opa1, opa2):
        if spec.orientation is not Orientation.AMPLITUDE_SQUEEZED:
            raise DomainError("EPR construction needs two amplitude-squeezed beams")
    s1 = squeezed_mode(basis, opa1)
    s2 = phase_shift(squeezed_mode(basis, opa2), math.pi / 2)
    beam_a, beam_b = beamsplitter(s1, s2, 0.5)
    return EprPair(beam_a, beam_b)


def apply_entanglement_loss(pair: EprPair, eta_a: float, eta_b: float, basis: NoiseBasis) -> EprPair:
    """Post-entanglement loss on each beam."""
    return EprPair(loss(pair.beam_a, eta_a, basis), loss(pair.beam_b, eta_b, basis))


def duan_inseparability(pair: EprPair, basis: NoiseBasis) -> float:
    """(V(a+ - b+) + V(a- + b-)) / 4; two coherent beams give exactly 1."""
    diff_plus: LinearForm = pair.beam_a.x_plus - pair.beam_b.x_plus
    sum_minus: LinearForm = pair.beam_a.x_minus + pair.beam_b.x_minus
    return (variance(diff_plus, basis) + variance(sum_minus, basis)) / 4.0
