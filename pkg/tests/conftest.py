from pathlib import Path
from typing import Dict
import pytest
from src.schemas.schemas import RunReport, ScenarioConfig
from src.services.harness_services import HarnessService
from tests.helpers import SCENARIOS_DIR


@pytest.fixture(scope="session")
def scenario_path():
    def resolve(name: str) -> Path:
        return SCENARIOS_DIR / f"{name}.json"

    return resolve


@pytest.fixture(scope="session")
def shipped_config(scenario_path):
    def load(name: str) -> ScenarioConfig:
        return HarnessService.load_scenario_file(scenario_path(name))

    return load


@pytest.fixture(scope="session")
def shipped_report(shipped_config):
    """Ejecuta cada escenario incluido una sola vez por sesión."""
    cache: Dict[str, RunReport] = {}

    def run(name: str) -> RunReport:
        if name not in cache:
            cache[name] = HarnessService.run(shipped_config(name))
        return cache[name]

    return run
