"""Shared fixtures for the simulator test suite."""

import numpy as np
import pytest

from cv_teleport import config
from cv_teleport.database import RunArchive
from cv_teleport.noise import NoiseBasis
from cv_teleport.optics import SqueezerSpec
from cv_teleport.teleporter import BobCoupling, InputState, TeleporterConfig

PURE_044 = SqueezerSpec(0.44)
FIG3A_INPUT = InputState(alpha_plus=2.9, alpha_minus=3.5)


def random_teleporter_config(rng: np.random.Generator,
                             coupling: BobCoupling = BobCoupling.IDEAL_DISPLACEMENT) -> TeleporterConfig:
    """Random physical configuration: lossy, noisy, asymmetric, possibly mixed input."""
    def opa():
        v_sq = rng.uniform(0.05, 1.0)
        return SqueezerSpec(v_sq, rng.uniform(1.0, 3.0) / v_sq)

    v_plus = rng.uniform(0.5, 2.0)
    return TeleporterConfig(
        opa1=opa(),
        opa2=opa(),
        eta_entanglement=1.0,
        eta_entanglement_a=rng.uniform(0.5, 1.0),
        eta_entanglement_b=rng.uniform(0.5, 1.0),
        eta_alice=rng.uniform(0.5, 1.0),
        dark_noise_alice=rng.uniform(0.0, 0.5),
        gain_plus=rng.uniform(0.0, 2.0),
        gain_minus=rng.uniform(0.0, 2.0),
        bob_coupling=coupling,
        input=InputState(v_plus, rng.uniform(1.0, 1.5) / v_plus,
                         rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0)),
    )


@pytest.fixture
def basis():
    return NoiseBasis()


@pytest.fixture
def rng():
    return np.random.default_rng(20030101)


@pytest.fixture
def random_config(rng):
    """Factory for random teleporter configurations drawn from the seeded rng."""
    return lambda coupling=BobCoupling.IDEAL_DISPLACEMENT: random_teleporter_config(rng, coupling)


@pytest.fixture
def squeezed_resource():
    """Two pure 0.44 squeezers, ideal detection, unity gain."""
    return TeleporterConfig(opa1=PURE_044, opa2=PURE_044)


@pytest.fixture
def archive(tmp_path):
    return RunArchive(tmp_path / 'runs.db')


@pytest.fixture
def small_chunks(monkeypatch):
    """Force several Monte Carlo chunks on small sample counts."""
    monkeypatch.setattr(config, 'MC_CHUNK', 1000)
    return 1000
