import logging

import pytest

from cascade_adrc.controller import ControllerConfig
from cascade_adrc.observer import ObserverConfig
from cascade_adrc.plant import PlantParams
from cascade_adrc.signals import DisturbanceProfile, NoiseConfig, ReferenceConfig
from cascade_adrc.simloop import SimConfig


@pytest.fixture
def nominal():
    """Nominal configs as keyword arguments for ``simloop.run``."""
    return dict(plant_params=PlantParams(), ref_cfg=ReferenceConfig(),
                dist_profile=DisturbanceProfile.default(), noise_cfg=NoiseConfig(),
                obs_cfg=ObserverConfig(), ctrl_cfg=ControllerConfig(), sim_cfg=SimConfig())


@pytest.fixture(autouse=True)
def _quiet_logs(caplog):
    caplog.set_level(logging.WARNING)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for key in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[key])
