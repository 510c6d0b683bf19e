"""Second-moment bookkeeping over independent Gaussian noise sources.

Every optical or electronic observable in the simulator is a linear
combination of independent, zero-mean Gaussian source variables plus a
deterministic offset. Variances and covariances therefore follow in closed
form from the coefficients. All variances are in shot-noise units: a vacuum
quadrature has variance 1.
"""

import itertools
import logging
import math
from dataclasses import dataclass, replace
from enum import Enum
from types import MappingProxyType
from typing import Iterable, Mapping, Optional

from .errors import DomainError, UncertaintyViolationError, UsageError

logger = logging.getLogger(__name__)

# Quoted squeezing figures are rounded (0.44 * 2.2727 = 0.99999), so the
# uncertainty check allows this much relative slack.
UNCERTAINTY_TOLERANCE = 1e-4
PAIRING_TOLERANCE = 1e-12

_basis_tokens = itertools.count(1)


class SourceKind(str, Enum):
    """Physical origin of a source variable."""

    VACUUM = 'vacuum'
    SQUEEZED = 'squeezed'
    ANTISQUEEZED = 'antisqueezed'
    ELECTRONIC = 'electronic'


@dataclass(frozen=True)
class SourceVariable:
    """One independent Gaussian variable of a noise basis."""

    id: int
    variance: float
    kind: SourceKind
    conjugate_of: Optional[int] = None


class NoiseBasis:
    """Registry of independent Gaussian source variables.

    Registration is the only mutation. A basis is built by a single owner
    (usually one teleport() call) and read-only afterwards.
    """

    def __init__(self):
        self.token = next(_basis_tokens)
        self._entries: list[SourceVariable] = []
        self._by_id: dict[int, SourceVariable] = {}
        self._pairs: list[tuple[int, int]] = []

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, var_id: int) -> bool:
        return var_id in self._by_id

    @property
    def entries(self) -> tuple[SourceVariable, ...]:
        return tuple(self._entries)

    def variance_of(self, var_id: int) -> float:
        """Variance of a registered variable."""
        try:
            return self._by_id[var_id].variance
        except KeyError:
            raise UsageError(f"Variable {var_id} is not registered in basis {self.token}") from None

    def conjugate_pairs(self) -> list[tuple[int, int]]:
        """All optical (plus, minus) variable pairs in registration order."""
        return list(self._pairs)

    def register_source(self, v_plus: float, v_minus: Optional[float] = None,
                        kind: SourceKind = SourceKind.VACUUM) -> tuple[int, Optional[int]]:
        """Register a source and return its variable ids.

        Optical kinds register a conjugate (plus, minus) pair and require
        v_plus * v_minus >= 1. The electronic kind registers a single
        unpaired variable and returns (id, None).

        Args:
            v_plus: Variance of the amplitude variable (or the electronic variable)
            v_minus: Variance of the phase variable (optical kinds only)
            kind: Physical origin of the source

        Returns:
            Tuple of (plus id, minus id)
        """
        kind = SourceKind(kind)
        if kind is SourceKind.ELECTRONIC:
            if v_minus is not None:
                raise UsageError("Electronic sources have no conjugate variable")
            if not math.isfinite(v_plus) or v_plus < 0:
                raise DomainError(f"Electronic variance must be finite and >= 0, got {v_plus}")
            return self._append(v_plus, kind), None

        if v_minus is None:
            raise UsageError(f"{kind.value} sources need both quadrature variances")
        for value in (v_plus, v_minus):
            if not math.isfinite(value) or value <= 0:
                raise DomainError(f"Optical variances must be finite and > 0, got ({v_plus}, {v_minus})")
        if v_plus * v_minus < 1.0 - UNCERTAINTY_TOLERANCE:
            raise UncertaintyViolationError(
                f"Source ({v_plus}, {v_minus}) violates V+V- >= 1 (product {v_plus * v_minus:.6g})"
            )

        plus_id = self._append(v_plus, _variable_kind(kind, v_plus))
        minus_id = self._append(v_minus, _variable_kind(kind, v_minus), conjugate_of=plus_id)
        self._by_id[plus_id] = replace(self._by_id[plus_id], conjugate_of=minus_id)
        self._entries[plus_id] = self._by_id[plus_id]
        self._pairs.append((plus_id, minus_id))
        logger.debug(f"Basis {self.token}: registered {kind.value} pair ({v_plus:.6g}, {v_minus:.6g})")
        return plus_id, minus_id

    def register_electronic(self, variance: float) -> int:
        """Register one unpaired electronic noise variable."""
        var_id, _ = self.register_source(variance, None, SourceKind.ELECTRONIC)
        return var_id

    def _append(self, variance: float, kind: SourceKind, conjugate_of: Optional[int] = None) -> int:
        var_id = len(self._entries)
        entry = SourceVariable(var_id, float(variance), kind, conjugate_of)
        self._entries.append(entry)
        self._by_id[var_id] = entry
        return var_id

    def form(self, var_id: int, coefficient: float = 1.0) -> 'LinearForm':
        """Form consisting of a single registered variable."""
        if var_id not in self._by_id:
            raise UsageError(f"Variable {var_id} is not registered in basis {self.token}")
        return LinearForm(self.token, {var_id: float(coefficient)})

    def zero(self, offset: float = 0.0) -> 'LinearForm':
        """Noise-free form with the given offset."""
        return LinearForm(self.token, {}, float(offset))

    def mode(self, plus_id: int, minus_id: int) -> 'FieldMode':
        """Field mode whose quadratures are one registered conjugate pair."""
        return FieldMode(self.form(plus_id), self.form(minus_id))


def _variable_kind(kind: SourceKind, variance: float) -> SourceKind:
    if kind in (SourceKind.SQUEEZED, SourceKind.ANTISQUEEZED):
        return SourceKind.SQUEEZED if variance < 1.0 else SourceKind.ANTISQUEEZED
    return kind


@dataclass(frozen=True)
class LinearForm:
    """Observable as coefficients over basis variables plus a deterministic offset.

    The offset is the coherent part of a quadrature, 2*alpha. It carries
    no noise. Forms flagged classical are measured photocurrents.
    """

    basis_token: int
    coefficients: Mapping[int, float]
    offset: float = 0.0
    classical: bool = False

    def __post_init__(self):
        object.__setattr__(self, 'coefficients', MappingProxyType(dict(self.coefficients)))

    def scaled(self, factor: float) -> 'LinearForm':
        return LinearForm(
            self.basis_token,
            {k: factor * c for k, c in self.coefficients.items() if factor * c != 0.0},
            factor * self.offset,
            self.classical,
        )

    def shifted(self, delta: float) -> 'LinearForm':
        return replace(self, offset=self.offset + delta)

    def as_classical(self) -> 'LinearForm':
        return replace(self, classical=True)

    def coefficient_vector(self, var_ids: Iterable[int]) -> list[float]:
        return [self.coefficients.get(i, 0.0) for i in var_ids]

    def __add__(self, other: 'LinearForm') -> 'LinearForm':
        return combine(self, 1.0, other, 1.0)

    def __sub__(self, other: 'LinearForm') -> 'LinearForm':
        return combine(self, 1.0, other, -1.0)

    def __neg__(self) -> 'LinearForm':
        return self.scaled(-1.0)

    def __mul__(self, factor: float) -> 'LinearForm':
        return self.scaled(factor)

    __rmul__ = __mul__


@dataclass(frozen=True)
class FieldMode:
    """One optical beam: amplitude (plus) and phase (minus) quadrature forms."""

    x_plus: LinearForm
    x_minus: LinearForm
    classical: bool = False

    def __post_init__(self):
        if self.x_plus.basis_token != self.x_minus.basis_token:
            raise UsageError("Quadratures of a mode must share one basis")

    @property
    def basis_token(self) -> int:
        return self.x_plus.basis_token

    @property
    def alpha_plus(self) -> float:
        return self.x_plus.offset / 2.0

    @property
    def alpha_minus(self) -> float:
        return self.x_minus.offset / 2.0


def combine(a: LinearForm, ca: float, b: LinearForm, cb: float) -> LinearForm:
    """Linear combination ca*a + cb*b of two forms over the same basis."""
    if a.basis_token != b.basis_token:
        raise UsageError(f"Cannot combine forms of bases {a.basis_token} and {b.basis_token}")
    coefficients: dict[int, float] = {}
    for var_id, c in a.coefficients.items():
        coefficients[var_id] = ca * c
    for var_id, c in b.coefficients.items():
        coefficients[var_id] = coefficients.get(var_id, 0.0) + cb * c
    return LinearForm(
        a.basis_token,
        {k: c for k, c in coefficients.items() if c != 0.0},
        ca * a.offset + cb * b.offset,
        a.classical or b.classical,
    )


def _check_basis(basis: NoiseBasis, *forms: LinearForm):
    for f in forms:
        if f.basis_token != basis.token:
            raise UsageError(f"Form of basis {f.basis_token} evaluated against basis {basis.token}")


def variance(f: LinearForm, basis: NoiseBasis) -> float:
    """Variance of the noise part of a form (the offset is excluded)."""
    _check_basis(basis, f)
    return math.fsum(c * c * basis.variance_of(i) for i, c in f.coefficients.items())


def covariance(f: LinearForm, g: LinearForm, basis: NoiseBasis) -> float:
    """Covariance of two forms over the same basis."""
    _check_basis(basis, f, g)
    if len(g.coefficients) < len(f.coefficients):
        f, g = g, f
    return math.fsum(
        c * g.coefficients[i] * basis.variance_of(i)
        for i, c in f.coefficients.items() if i in g.coefficients
    )


def mode_variances(m: FieldMode, basis: NoiseBasis) -> tuple[float, float]:
    """(V+, V-) of a field mode."""
    return variance(m.x_plus, basis), variance(m.x_minus, basis)


def symplectic_pairing(m: FieldMode, basis: NoiseBasis) -> float:
    """Commutator audit: sum over conjugate pairs of c+_q d-_p - c+_p d-_q.

    Equals 1 for any mode built from source modes by optical operations.
    """
    if m.classical:
        raise UsageError("Symplectic pairing is undefined for a measured (classical) mode")
    _check_basis(basis, m.x_plus, m.x_minus)
    c = m.x_plus.coefficients
    d = m.x_minus.coefficients
    return math.fsum(
        c.get(q, 0.0) * d.get(p, 0.0) - c.get(p, 0.0) * d.get(q, 0.0)
        for q, p in basis.conjugate_pairs()
    )
