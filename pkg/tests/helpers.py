from pathlib import Path
from typing import Any, Dict
from src.models.models import BroadcastRecord
from src.schemas.schemas import ScenarioConfig
from src.services.consensus_services import ConsensusService
from src.services.key_store import KeyStore

SCENARIOS_DIR = Path(__file__).resolve().parent.parent / "scenarios"

SHIPPED_SCENARIOS = (
    "fig6a",
    "fig6b",
    "fig6c-d",
    "fig6e-f",
    "attack-n4f2",
    "equivocation-n7f3",
)

# p pequeño para que los tests que no son de aceptación sean rápidos
FAST_P = 16


def make_config(**overrides: Any) -> ScenarioConfig:
    document: Dict[str, Any] = {
        "n": 3,
        "f": 1,
        "initial_primary": 0,
        "dishonest": [],
        "honest_message": "m1",
        "seed": 11,
        "p": FAST_P,
    }
    document.update(overrides)
    return ScenarioConfig.model_validate(document)


def broadcast(config: ScenarioConfig, verify_signatures: bool = True) -> BroadcastRecord:
    key_store = KeyStore(config.seed, config.p, config.retry_bound)
    key_store.provision(
        ConsensusService.enumerate_rounds(config.n, config.f, config.initial_primary)
    )
    return ConsensusService.run_broadcast_phase(
        config, key_store, verify_signatures=verify_signatures
    )
