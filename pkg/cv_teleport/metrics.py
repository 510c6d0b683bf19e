"""Figures of merit: fidelity, signal transfer (T_q), conditional variances (V_q), dB helpers.

All functions are pure and take per-quadrature values as Quadratures pairs
(plus, minus). Variances are in shot-noise units.
"""

import logging
import math
from dataclasses import asdict, dataclass
from typing import NamedTuple, Optional

from .errors import DomainError, ModelViolationError, UndefinedTransferError

logger = logging.getLogger(__name__)

REPORT_TOLERANCE = 1e-9


class Quadratures(NamedTuple):
    plus: float
    minus: float


def _q(value) -> Quadratures:
    return value if isinstance(value, Quadratures) else Quadratures(*value)


# dB utilities

def db_to_linear(db: float) -> float:
    """10^(db/10). Positive dB lies above the shot-noise limit."""
    return 10 ** (db / 10)


def linear_to_db(v: float) -> float:
    if v <= 0:
        raise DomainError(f"Cannot express non-positive value {v} in dB")
    return 10 * math.log10(v)


def squeezing_db_to_variance(squeezing_db: float) -> float:
    """Variance for squeezing quoted as positive dB below the shot-noise limit."""
    return db_to_linear(-squeezing_db)


def variance_to_squeezing_db(v: float) -> float:
    return -linear_to_db(v)


def unity_gain_variance_for_fidelity(target: float) -> float:
    """Output variance at unity gain that yields the target fidelity for a coherent input.

    At g = 1 and V_in = 1 the fidelity reduces to 2/(1 + V_out).
    """
    if not 0.0 < target <= 1.0:
        raise DomainError(f"Target fidelity must lie in (0, 1], got {target}")
    return 2.0 / target - 1.0


@dataclass(frozen=True)
class ReferenceLimits:
    classical_fidelity: float
    no_cloning_fidelity: float
    classical_noise_db: float
    no_cloning_noise_db: float
    tv_boundary: tuple[float, float]


_LIMITS = ReferenceLimits(
    classical_fidelity=0.5,
    no_cloning_fidelity=2.0 / 3.0,
    classical_noise_db=linear_to_db(unity_gain_variance_for_fidelity(0.5)),
    no_cloning_noise_db=linear_to_db(unity_gain_variance_for_fidelity(2.0 / 3.0)),
    tv_boundary=(1.0, 1.0),
)


def reference_limits() -> ReferenceLimits:
    return _LIMITS


# Fidelity

class FidelityResult(NamedTuple):
    fidelity: float
    k_plus: float
    k_minus: float


def fidelity(v_in, v_out, alpha_in, gains) -> FidelityResult:
    """Gaussian-state fidelity with the gain penalty k = alpha^2 (1-g)^2 / (V_in + V_out)."""
    v_in, v_out, alpha_in, gains = _q(v_in), _q(v_out), _q(alpha_in), _q(gains)
    for value in (*v_in, *v_out):
        if not value > 0:
            raise DomainError(f"Fidelity needs positive variances, got in={tuple(v_in)} out={tuple(v_out)}")

    k_plus = alpha_in.plus ** 2 * (1 - gains.plus) ** 2 / (v_in.plus + v_out.plus)
    k_minus = alpha_in.minus ** 2 * (1 - gains.minus) ** 2 / (v_in.minus + v_out.minus)
    overlap = math.sqrt(v_in.plus * v_in.minus
                        / ((v_in.plus + v_out.plus) * (v_in.minus + v_out.minus)))
    return FidelityResult(2.0 * math.exp(-(k_plus + k_minus)) * overlap, k_plus, k_minus)


# Signal transfer

class TransferResult(NamedTuple):
    t_plus: float
    t_minus: float
    t_q: float


def _two_quadrature_transfer(t_plus: float, t_minus: float, v_in: Quadratures) -> float:
    return t_plus + t_minus - t_plus * t_minus * (1.0 - 1.0 / (v_in.plus * v_in.minus))


def transfer(v_in, v_out, alpha_in, gains) -> TransferResult:
    """T+- = SNR_out / SNR_in with the power convention SNR = alpha^2 / V."""
    v_in, v_out, alpha_in, gains = _q(v_in), _q(v_out), _q(alpha_in), _q(gains)
    if alpha_in.plus == 0 or alpha_in.minus == 0:
        raise UndefinedTransferError(
            f"Signal transfer needs a coherent amplitude on both quadratures, got {tuple(alpha_in)}"
        )
    t = []
    for vi, vo, a, g in zip(v_in, v_out, alpha_in, gains):
        snr_in = a ** 2 / vi
        snr_out = (g * a) ** 2 / vo
        t.append(snr_out / snr_in)
    return TransferResult(t[0], t[1], _two_quadrature_transfer(t[0], t[1], v_in))


def signal_transfer(v_in, v_out, gains) -> TransferResult:
    """Amplitude-free form of transfer(): T+- = g^2 V_in / V_out."""
    v_in, v_out, gains = _q(v_in), _q(v_out), _q(gains)
    t_plus = gains.plus ** 2 * v_in.plus / v_out.plus
    t_minus = gains.minus ** 2 * v_in.minus / v_out.minus
    return TransferResult(t_plus, t_minus, _two_quadrature_transfer(t_plus, t_minus, v_in))


# Conditional variances

class ConditionalResult(NamedTuple):
    v_cond_plus: float
    v_cond_minus: float
    v_q: float
    v_sum: float


def conditional(v_in, v_out, gains) -> ConditionalResult:
    """V_in|out = V_out - g^2 V_in per quadrature, their product V_q and sum."""
    v_in, v_out, gains = _q(v_in), _q(v_out), _q(gains)
    cond = []
    for vi, vo, g in zip(v_in, v_out, gains):
        value = vo - g ** 2 * vi
        if value < -REPORT_TOLERANCE * max(1.0, vo):
            raise ModelViolationError(
                f"Negative conditional variance {value:.6g} (V_out={vo}, g={g}, V_in={vi})"
            )
        cond.append(max(value, 0.0))
    return ConditionalResult(cond[0], cond[1], cond[0] * cond[1], cond[0] + cond[1])


def conditional_from_covariance(v_in, v_out, cov) -> Quadratures:
    """V_out - |cov(in, out)|^2 / V_in per quadrature."""
    v_in, v_out, cov = _q(v_in), _q(v_out), _q(cov)
    return Quadratures(*(vo - c ** 2 / vi for vi, vo, c in zip(v_in, v_out, cov)))


def victor_correct(v_measured: float, eta_victor: float) -> float:
    """Undo the verifier's detection loss: (V - (1 - eta)) / eta."""
    if not 0.0 < eta_victor <= 1.0:
        raise DomainError(f"Verifier efficiency must lie in (0, 1], got {eta_victor}")
    corrected = (v_measured - (1.0 - eta_victor)) / eta_victor
    if corrected < -REPORT_TOLERANCE:
        raise DomainError(
            f"Measured variance {v_measured} implies a negative true variance at efficiency {eta_victor}"
        )
    return max(corrected, 0.0)


@dataclass(frozen=True)
class MetricsReport:
    fidelity: float
    k_plus: float
    k_minus: float
    t_plus: float
    t_minus: float
    t_q: float
    v_cond_plus: float
    v_cond_minus: float
    v_q: float
    v_cond_sum: float
    gains: Quadratures
    v_in: Quadratures
    v_out: Quadratures
    input_is_pure: bool
    duan: Optional[float] = None

    @property
    def beats_classical(self) -> bool:
        return self.fidelity > _LIMITS.classical_fidelity + REPORT_TOLERANCE

    @property
    def beats_no_cloning(self) -> bool:
        return self.fidelity > _LIMITS.no_cloning_fidelity + REPORT_TOLERANCE

    @property
    def tq_above_one(self) -> bool:
        return self.t_q > 1.0 + REPORT_TOLERANCE

    @property
    def vq_below_one(self) -> bool:
        return self.v_q < 1.0 - REPORT_TOLERANCE

    def flags(self) -> dict:
        return {
            'beats_classical': self.beats_classical,
            'beats_no_cloning': self.beats_no_cloning,
            'tq_above_one': self.tq_above_one,
            'vq_below_one': self.vq_below_one,
        }

    def to_dict(self) -> dict:
        data = asdict(self)
        for key in ('gains', 'v_in', 'v_out'):
            data[key] = {'plus': data[key][0], 'minus': data[key][1]}
        data['flags'] = self.flags()
        data['limits'] = asdict(_LIMITS)
        return data


def evaluate(v_in, v_out, alpha_in, gains, duan: Optional[float] = None) -> MetricsReport:
    """Compute every figure of merit for one input/output pair."""
    v_in, v_out, alpha_in, gains = _q(v_in), _q(v_out), _q(alpha_in), _q(gains)
    pure = abs(v_in.plus * v_in.minus - 1.0) <= REPORT_TOLERANCE
    if not pure:
        logger.warning(f"Input variances {tuple(v_in)} are not minimum uncertainty; "
                       f"fidelity is reported but not certified")

    fid = fidelity(v_in, v_out, alpha_in, gains)
    if alpha_in.plus != 0 and alpha_in.minus != 0:
        tr = transfer(v_in, v_out, alpha_in, gains)
    else:
        # alpha -> 0 limit of the SNR ratio
        tr = signal_transfer(v_in, v_out, gains)
    cond = conditional(v_in, v_out, gains)

    return MetricsReport(
        fidelity=fid.fidelity,
        k_plus=fid.k_plus,
        k_minus=fid.k_minus,
        t_plus=tr.t_plus,
        t_minus=tr.t_minus,
        t_q=tr.t_q,
        v_cond_plus=cond.v_cond_plus,
        v_cond_minus=cond.v_cond_minus,
        v_q=cond.v_q,
        v_cond_sum=cond.v_sum,
        gains=gains,
        v_in=v_in,
        v_out=v_out,
        input_is_pure=pure,
        duan=duan,
    )
