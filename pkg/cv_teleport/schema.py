"""Run documents: the JSON configuration consumed by the CLI and the MCP tools.

Unknown keys are rejected so that a misspelled physics parameter fails
loudly instead of silently falling back to its default.
"""

import hashlib
import json
import logging
from pathlib import Path
from typing import Any, Literal, Optional, Union, get_args

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from . import config
from .errors import ConfigValidationError
from .optics import Orientation, SqueezerSpec
from .teleporter import BobCoupling, InputState, TeleporterConfig

logger = logging.getLogger(__name__)


class _Strict(BaseModel):
    model_config = ConfigDict(extra='forbid', allow_inf_nan=False)


class SqueezerSettings(_Strict):
    """One OPA, given either as a linear variance or as dB below shot noise."""

    v_squeezed: Optional[float] = Field(None, gt=0, le=1)
    squeezing_db: Optional[float] = Field(None, ge=0)
    v_antisqueezed: Optional[float] = Field(None, ge=1)
    antisqueezing_db: Optional[float] = Field(None, ge=0)
    orientation: Orientation = Orientation.AMPLITUDE_SQUEEZED

    @model_validator(mode='after')
    def _one_form_each(self):
        if self.v_squeezed is not None and self.squeezing_db is not None:
            raise ValueError("give v_squeezed or squeezing_db, not both")
        if self.v_antisqueezed is not None and self.antisqueezing_db is not None:
            raise ValueError("give v_antisqueezed or antisqueezing_db, not both")
        return self

    def to_spec(self) -> SqueezerSpec:
        if self.squeezing_db is not None:
            v_sq = 10 ** (-self.squeezing_db / 10)
        elif self.v_squeezed is not None:
            v_sq = self.v_squeezed
        else:
            v_sq = 1.0
        if self.antisqueezing_db is not None:
            v_anti = 10 ** (self.antisqueezing_db / 10)
        else:
            v_anti = self.v_antisqueezed
        return SqueezerSpec(v_sq, v_anti, self.orientation)


class InputSettings(_Strict):
    v_plus: float = Field(1.0, gt=0)
    v_minus: float = Field(1.0, gt=0)
    alpha_plus: float = 0.0
    alpha_minus: float = 0.0


class TeleporterSettings(_Strict):
    opa1: SqueezerSettings = Field(default_factory=SqueezerSettings)
    opa2: SqueezerSettings = Field(default_factory=SqueezerSettings)
    eta_entanglement: float = Field(1.0, ge=0, le=1)
    eta_entanglement_a: Optional[float] = Field(None, ge=0, le=1)
    eta_entanglement_b: Optional[float] = Field(None, ge=0, le=1)
    eta_alice: float = Field(1.0, gt=0, le=1)
    dark_noise_alice: float = Field(0.0, ge=0)
    gain_plus: float = 1.0
    gain_minus: float = 1.0
    bob_coupling: BobCoupling = BobCoupling.IDEAL_DISPLACEMENT
    input: InputSettings = Field(default_factory=InputSettings)
    eta_victor: float = Field(1.0, gt=0, le=1)

    def to_config(self) -> TeleporterConfig:
        return TeleporterConfig(
            opa1=self.opa1.to_spec(),
            opa2=self.opa2.to_spec(),
            eta_entanglement=self.eta_entanglement,
            eta_entanglement_a=self.eta_entanglement_a,
            eta_entanglement_b=self.eta_entanglement_b,
            eta_alice=self.eta_alice,
            dark_noise_alice=self.dark_noise_alice,
            gain_plus=self.gain_plus,
            gain_minus=self.gain_minus,
            bob_coupling=self.bob_coupling,
            input=InputState(**self.input.model_dump()),
            eta_victor=self.eta_victor,
        )


def numeric_paths(model: type[BaseModel] = TeleporterSettings, prefix: str = 'teleporter') -> set[str]:
    """Dotted paths of every numeric field reachable from the teleporter settings."""
    paths = set()
    for name, info in model.model_fields.items():
        annotation = info.annotation
        inner = [a for a in get_args(annotation) if a is not type(None)] or [annotation]
        target = inner[0]
        if isinstance(target, type) and issubclass(target, BaseModel):
            paths |= numeric_paths(target, f"{prefix}.{name}")
        elif target in (float, int):
            paths.add(f"{prefix}.{name}")
    return paths


def set_path(model: BaseModel, path: str, value: Any) -> BaseModel:
    """Copy of a settings model with the field at a dotted path replaced."""
    head, _, rest = path.partition('.')
    if not rest:
        return model.model_copy(update={head: value})
    return model.model_copy(update={head: set_path(getattr(model, head), rest, value)})


class SweepSettings(_Strict):
    parameter: str = 'teleporter.gain_plus'
    start: float = 0.0
    stop: float = 2.0
    steps: int = Field(41, ge=2)
    # g- = gain_ratio * g+ when sweeping teleporter.gain_plus; null keeps g- fixed
    gain_ratio: Optional[float] = 1.0

    @field_validator('parameter')
    @classmethod
    def _known_path(cls, value: str) -> str:
        if value not in numeric_paths():
            raise ValueError(f"'{value}' is not a numeric teleporter field")
        return value


class MonteCarloSettings(_Strict):
    n: int = Field(default_factory=lambda: config.DEFAULT_SAMPLES, ge=2)
    seed: int = Field(default_factory=lambda: config.DEFAULT_SEED, ge=0, lt=2 ** 64)


class SpectrumSettings(_Strict):
    center: float = Field(8.4e6, gt=0)
    span: float = Field(100e3, gt=0)
    rbw: float = Field(10e3, gt=0)
    vbw: float = Field(30.0, gt=0)
    points: int = Field(401, ge=3, le=100_001)


class PhaseSpaceSettings(_Strict):
    alpha_max: float = Field(6.0, gt=0)
    steps: int = Field(13, ge=2)


class OutputSettings(_Strict):
    format: Literal['csv', 'json'] = 'csv'
    path: Optional[str] = None


class RunConfig(_Strict):
    teleporter: TeleporterSettings = Field(default_factory=TeleporterSettings)
    sweep: Optional[SweepSettings] = None
    montecarlo: Optional[MonteCarloSettings] = None
    spectrum: SpectrumSettings = Field(default_factory=SpectrumSettings)
    phase_space: PhaseSpaceSettings = Field(default_factory=PhaseSpaceSettings)
    observed_duan: Optional[float] = Field(None, gt=0)
    output: OutputSettings = Field(default_factory=OutputSettings)

    def config_hash(self) -> str:
        """SHA-256 of the canonical JSON form (excluding output routing)."""
        payload = self.model_dump(mode='json', exclude={'output'})
        canonical = json.dumps(payload, sort_keys=True, separators=(',', ':'))
        return hashlib.sha256(canonical.encode('utf-8')).hexdigest()


def _field_errors(exc: ValidationError) -> list[tuple[str, str]]:
    return [('.'.join(str(p) for p in err['loc']) or '$', err['msg']) for err in exc.errors()]


def parse_run_config(document: Union[str, bytes, dict]) -> RunConfig:
    """Validate a run document given as JSON text or an already-decoded dict."""
    try:
        if isinstance(document, dict):
            return RunConfig.model_validate(document)
        return RunConfig.model_validate_json(document)
    except ValidationError as e:
        raise ConfigValidationError("Invalid run configuration", _field_errors(e)) from e


def load_run_config(path: Path) -> RunConfig:
    """Read and validate a UTF-8 JSON run document."""
    text = Path(path).read_text(encoding='utf-8')
    logger.debug(f"Loaded run configuration from {path}")
    return parse_run_config(text)


def with_overrides(run: RunConfig, seed: Optional[int] = None, samples: Optional[int] = None,
                   fmt: Optional[str] = None, out: Optional[str] = None) -> RunConfig:
    """Apply command-line flags on top of a run document.

    --seed or --samples create the montecarlo block when the document has none.
    """
    updates = {}
    try:
        if seed is not None or samples is not None:
            current = run.montecarlo.model_dump() if run.montecarlo else {}
            if seed is not None:
                current['seed'] = seed
            if samples is not None:
                current['n'] = samples
            updates['montecarlo'] = MonteCarloSettings.model_validate(current)
        if fmt is not None or out is not None:
            current = run.output.model_dump()
            if fmt is not None:
                current['format'] = fmt
            if out is not None:
                current['path'] = out
            updates['output'] = OutputSettings.model_validate(current)
    except ValidationError as e:
        raise ConfigValidationError("Invalid command-line override", _field_errors(e)) from e
    return run.model_copy(update=updates) if updates else run


def teleporter_config(run: RunConfig) -> TeleporterConfig:
    """Physics configuration of a run, with validation errors mapped to field paths."""
    try:
        tele = run.teleporter.to_config()
        tele.validate()
    except ValueError as e:
        raise ConfigValidationError("Invalid teleporter parameters", [('teleporter', str(e))]) from e
    return tele
