"""Shared fixtures: published scenario constants and model builders."""
import numpy as np
import pytest

from lorachan import ScenarioModel

# Fitted parameters for the three measured scenarios (d0 = 10 m,
# delta_d = 10 m): rho0 [dB], gamma, sigma_z [dB], sigma_x [dB],
# sigma_y [dB], phi, sigma_eps [dB].
SCENARIO_CONSTANTS = {
    "uav-los": dict(rho0=64.20, gamma=2.79, sigma_z=5.36,
                    sigma_x=2.89, sigma_y=4.51, phi=0.974, sigma_eps=1.02),
    "uav-nlos": dict(rho0=65.67, gamma=3.62, sigma_z=5.71,
                     sigma_x=4.01, sigma_y=4.07, phi=0.898, sigma_eps=1.79),
    "ped-nlos": dict(rho0=61.60, gamma=3.25, sigma_z=8.90,
                     sigma_x=7.60, sigma_y=4.63, phi=0.750, sigma_eps=3.06),
}


def consistent_model(tag: str) -> ScenarioModel:
    """Model with sigma_y/sigma_eps derived exactly from (sigma_z, sigma_x, phi)."""
    c = SCENARIO_CONSTANTS[tag]
    return ScenarioModel.from_constants(
        tag, c["rho0"], c["gamma"], c["sigma_z"], c["sigma_x"], c["phi"])


@pytest.fixture(params=sorted(SCENARIO_CONSTANTS))
def scenario_tag(request):
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
