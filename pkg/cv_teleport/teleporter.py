"""Teleportation protocol chain: Alice's joint measurement, feedforward, Bob's reconstruction."""

import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional

from .errors import DomainError, OracleScopeError, UsageError
from .noise import (
    UNCERTAINTY_TOLERANCE,
    FieldMode,
    LinearForm,
    NoiseBasis,
    SourceKind,
    covariance,
    variance,
)
from .optics import (
    EprPair,
    SqueezerSpec,
    apply_entanglement_loss,
    displace,
    epr_pair,
    loss,
)

logger = logging.getLogger(__name__)

BOB_TAP_TRANSMITTANCE = 0.98


class BobCoupling(str, Enum):
    IDEAL_DISPLACEMENT = 'ideal_displacement'
    TAPPED_98_2 = 'tapped_98_2'


@dataclass(frozen=True)
class InputState:
    """Gaussian input: quadrature variances and coherent amplitudes."""

    v_plus: float = 1.0
    v_minus: float = 1.0
    alpha_plus: float = 0.0
    alpha_minus: float = 0.0


@dataclass(frozen=True)
class TeleporterConfig:
    """Physical parameters of one teleporter run.

    eta_entanglement applies to both EPR beams unless a per-beam override
    is given.
    """

    opa1: SqueezerSpec = field(default_factory=SqueezerSpec.vacuum)
    opa2: SqueezerSpec = field(default_factory=SqueezerSpec.vacuum)
    eta_entanglement: float = 1.0
    eta_entanglement_a: Optional[float] = None
    eta_entanglement_b: Optional[float] = None
    eta_alice: float = 1.0
    dark_noise_alice: float = 0.0
    gain_plus: float = 1.0
    gain_minus: float = 1.0
    bob_coupling: BobCoupling = BobCoupling.IDEAL_DISPLACEMENT
    input: InputState = field(default_factory=InputState)
    eta_victor: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, 'bob_coupling', BobCoupling(self.bob_coupling))

    @property
    def eta_a(self) -> float:
        return self.eta_entanglement if self.eta_entanglement_a is None else self.eta_entanglement_a

    @property
    def eta_b(self) -> float:
        return self.eta_entanglement if self.eta_entanglement_b is None else self.eta_entanglement_b

    @property
    def gains(self) -> tuple[float, float]:
        return self.gain_plus, self.gain_minus

    def with_gains(self, gain_plus: float, gain_minus: float) -> 'TeleporterConfig':
        return replace(self, gain_plus=gain_plus, gain_minus=gain_minus)

    def validate(self):
        """Raise DomainError for out-of-range parameters."""
        for name in ('eta_entanglement', 'eta_a', 'eta_b', 'eta_victor'):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise DomainError(f"{name} must lie in [0, 1], got {value}")
        # Bob's calibration divides by sqrt(eta_alice)
        if not 0.0 < self.eta_alice <= 1.0:
            raise DomainError(f"eta_alice must lie in (0, 1], got {self.eta_alice}")
        if not math.isfinite(self.dark_noise_alice) or self.dark_noise_alice < 0:
            raise DomainError(f"dark_noise_alice must be >= 0, got {self.dark_noise_alice}")
        for gain in self.gains:
            if not math.isfinite(gain):
                raise DomainError(f"Gains must be finite, got {self.gains}")
        inp = self.input
        if inp.v_plus <= 0 or inp.v_minus <= 0 or inp.v_plus * inp.v_minus < 1.0 - UNCERTAINTY_TOLERANCE:
            raise DomainError(f"Input variances ({inp.v_plus}, {inp.v_minus}) violate V+V- >= 1")
        self.opa1.validate()
        self.opa2.validate()


@dataclass(frozen=True)
class TeleportOutcome:
    """Everything one teleport() call produced, sharing one basis."""

    output: FieldMode
    input: FieldMode
    photocurrent_plus: LinearForm
    photocurrent_minus: LinearForm
    basis: NoiseBasis
    pair: EprPair
    config: TeleporterConfig

    def input_variances(self) -> tuple[float, float]:
        return variance(self.input.x_plus, self.basis), variance(self.input.x_minus, self.basis)

    def output_variances(self) -> tuple[float, float]:
        return variance(self.output.x_plus, self.basis), variance(self.output.x_minus, self.basis)

    def input_output_covariances(self) -> tuple[float, float]:
        return (
            covariance(self.input.x_plus, self.output.x_plus, self.basis),
            covariance(self.input.x_minus, self.output.x_minus, self.basis),
        )

    def measured_gains(self) -> tuple[Optional[float], Optional[float]]:
        """alpha_out / alpha_in per quadrature; None without input amplitude."""
        pairs = (
            (self.output.alpha_plus, self.input.alpha_plus),
            (self.output.alpha_minus, self.input.alpha_minus),
        )
        return tuple(out / inp if inp != 0 else None for out, inp in pairs)


def alice_measure(input: FieldMode, beam_a: FieldMode, eta_alice: float, dark: float,
                  basis: NoiseBasis) -> tuple[LinearForm, LinearForm]:
    """Alice's joint measurement of the input and EPR beam a.

    Detection inefficiency acts as loss on both beams before an ideal
    measurement; dark noise enters each photocurrent afterwards.

    Returns:
        Tuple of (sum photocurrent ~ X+_in + X+_a, difference photocurrent ~ X-_in - X-_a)
    """
    if not 0.0 < eta_alice <= 1.0:
        raise DomainError(f"eta_alice must lie in (0, 1], got {eta_alice}")
    if dark < 0:
        raise DomainError(f"Dark noise must be >= 0, got {dark}")

    detected_in = loss(input, eta_alice, basis)
    detected_a = loss(beam_a, eta_alice, basis)
    m_plus = detected_in.x_plus + detected_a.x_plus
    m_minus = detected_in.x_minus - detected_a.x_minus

    if dark > 0:
        m_plus = m_plus + basis.form(basis.register_electronic(dark))
        m_minus = m_minus + basis.form(basis.register_electronic(dark))

    return m_plus.as_classical(), m_minus.as_classical()


def bob_reconstruct(beam_b: FieldMode, m_plus: LinearForm, m_minus: LinearForm,
                    g_plus: float, g_minus: float, coupling: BobCoupling, basis: NoiseBasis,
                    eta_alice: float = 1.0) -> FieldMode:
    """Displace beam b by the fed-forward photocurrents.

    Photocurrents are calibrated by 1/sqrt(eta_alice) so that g+- is the
    coherent amplitude ratio. Beam b is rotated by pi, which makes unity gain
    cancel into the squeezed EPR combinations a+ - b+ and a- + b-.
    """
    if not (m_plus.classical and m_minus.classical):
        raise UsageError("Bob can only feed forward measured (classical) photocurrents")
    if beam_b.classical:
        raise UsageError("Bob's carrier must be an optical beam")

    coupling = BobCoupling(coupling)
    # pi rotation, exact
    carrier = FieldMode(-beam_b.x_plus, -beam_b.x_minus)
    if coupling is BobCoupling.TAPPED_98_2:
        carrier = loss(carrier, BOB_TAP_TRANSMITTANCE, basis)

    scale = 1.0 / math.sqrt(eta_alice)
    out_plus = carrier.x_plus + m_plus * (g_plus * scale)
    out_minus = carrier.x_minus + m_minus * (g_minus * scale)
    return FieldMode(replace(out_plus, classical=False), replace(out_minus, classical=False))


def prepare_input(basis: NoiseBasis, state: InputState) -> FieldMode:
    """Register the input source and give it its coherent amplitude."""
    kind = SourceKind.VACUUM if state.v_plus == state.v_minus == 1.0 else SourceKind.SQUEEZED
    plus_id, minus_id = basis.register_source(state.v_plus, state.v_minus, kind)
    return displace(basis.mode(plus_id, minus_id), state.alpha_plus, state.alpha_minus)


def teleport(config: TeleporterConfig) -> TeleportOutcome:
    """Run the full protocol chain on a fresh basis."""
    config.validate()
    basis = NoiseBasis()

    input_mode = prepare_input(basis, config.input)
    pair = apply_entanglement_loss(epr_pair(basis, config.opa1, config.opa2),
                                   config.eta_a, config.eta_b, basis)
    m_plus, m_minus = alice_measure(input_mode, pair.beam_a, config.eta_alice,
                                    config.dark_noise_alice, basis)
    output = bob_reconstruct(pair.beam_b, m_plus, m_minus, config.gain_plus, config.gain_minus,
                             config.bob_coupling, basis, config.eta_alice)

    logger.debug(f"Teleported on basis {basis.token} ({len(basis)} variables), gains {config.gains}")
    return TeleportOutcome(output, input_mode, m_plus, m_minus, basis, pair, config)


def measurement_penalties(config: TeleporterConfig) -> tuple[float, float]:
    """Noise (V_M+, V_M-) Alice's measurement adds to the input, referred to the input."""
    outcome = teleport(config)
    v_in_plus, v_in_minus = outcome.input_variances()
    eta = config.eta_alice
    return (
        variance(outcome.photocurrent_plus, outcome.basis) / eta - v_in_plus,
        variance(outcome.photocurrent_minus, outcome.basis) / eta - v_in_minus,
    )


def closed_form_output_variances(config: TeleporterConfig) -> tuple[float, float]:
    """Analytic output variances for ideal-displacement coupling.

    With symmetric loss, no dark noise and ideal detection this is
    V+ = g+^2 V_in+ + (1+g+)^2/2 v_sq1' + (1-g+)^2/2 v_anti2' and
    V- = g-^2 V_in- + (1-g-)^2/2 v_anti1' + (1+g-)^2/2 v_sq2'.
    """
    if BobCoupling(config.bob_coupling) is not BobCoupling.IDEAL_DISPLACEMENT:
        raise OracleScopeError("Closed-form variances cover ideal_displacement coupling only")
    config.validate()

    sq1, anti1 = config.opa1.v_squeezed, config.opa1.v_antisqueezed
    sq2, anti2 = config.opa2.v_squeezed, config.opa2.v_antisqueezed
    eta_a, eta_b = config.eta_a, config.eta_b
    eta_alice = config.eta_alice
    g_plus, g_minus = config.gains

    def after_loss(v: float, eta: float) -> float:
        return eta * v + (1.0 - eta)

    cross = math.sqrt(eta_a * eta_b)

    # Single-beam plus variances are equal for a and b; cov(a+, b+) = (anti2 - sq1)/2
    v_beam_plus = (sq1 + anti2) / 2.0
    noise_plus = (g_plus ** 2 * after_loss(v_beam_plus, eta_a) + after_loss(v_beam_plus, eta_b)
                  - 2.0 * g_plus * cross * (anti2 - sq1) / 2.0)

    # cov(a-, b-) = (sq2 - anti1)/2
    v_beam_minus = (anti1 + sq2) / 2.0
    noise_minus = (g_minus ** 2 * after_loss(v_beam_minus, eta_a) + after_loss(v_beam_minus, eta_b)
                   + 2.0 * g_minus * cross * (sq2 - anti1) / 2.0)

    detection = (2.0 * (1.0 - eta_alice) + config.dark_noise_alice) / eta_alice
    inp = config.input
    return (
        g_plus ** 2 * (inp.v_plus + detection) + noise_plus,
        g_minus ** 2 * (inp.v_minus + detection) + noise_minus,
    )
