import numpy as np
import pytest

from beamcast.channel import synthesize_scenario
from beamcast.cli import true_effective_channels
from beamcast.config import ScenarioConfig


@pytest.fixture
def tiny_config():
    """2x2 UPA, two UEs: the small instance used against brute-force oracles."""
    return ScenarioConfig(m_v=2, m_h=2, m_v_low=1, m_h_low=1, k_ues=2, frames=3)


def oracle_gains(config: ScenarioConfig, seed: int, frame: int = 0) -> np.ndarray:
    """True per-(ue, beam) gains |h_k^H w_n|^2 for one frame of a seeded scenario."""
    scenario = synthesize_scenario(config, seed)
    return true_effective_channels(scenario, frame).gains
