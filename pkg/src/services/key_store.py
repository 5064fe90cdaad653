import logging
from collections import Counter
from typing import Dict, Iterable, Optional, Tuple
import numpy as np
from src.models.models import RoundPlan, ThreePartyKeys
from src.services.qds_services import QDSService
from src.utils.exceptions import KeyExhaustion
from src.utils.validator import Route, format_route

logger = logging.getLogger(__name__)

# (ruta, forwarder, verifier, intento)
BundleKey = Tuple[Route, int, int, int]

_BUNDLE_STREAM = 0
_SIGNER_STREAM = 1


class KeyStore:
    """
    Almacén de paquetes de claves de un solo uso. Cada instancia QDS tiene un
    paquete pregenerado; los reintentos toman claves frescas de una reserva de
    `reserve` paquetes por turno de reenvío.
    """

    def __init__(self, seed: int, p: int, reserve: int):
        self.seed = seed
        self.p = p
        self.reserve = reserve
        self._bundles: Dict[BundleKey, ThreePartyKeys] = {}
        self._attempts: Counter = Counter()
        self._reserve_spent: Counter = Counter()

    def stream(self, purpose: int, key: BundleKey) -> np.random.Generator:
        route, forwarder, verifier, attempt = key
        sequence = np.random.SeedSequence(
            self.seed,
            spawn_key=(purpose, len(route), *route, forwarder, verifier, attempt),
        )
        return np.random.default_rng(sequence)

    def signer_rng(self, key: BundleKey) -> np.random.Generator:
        return self.stream(_SIGNER_STREAM, key)

    def provision(self, rounds: Iterable[RoundPlan]) -> int:
        """Pregenera un paquete por cada instancia QDS programada."""
        for plan in rounds:
            for forwarder in plan.backups:
                for verifier in plan.backups:
                    if verifier != forwarder:
                        key = (plan.route, forwarder, verifier, 0)
                        self.set(key, self._generate(key))
        logger.debug("Provisionados %d paquetes de claves", len(self._bundles))
        return len(self._bundles)

    def set(self, key: BundleKey, bundle: ThreePartyKeys) -> None:
        self._bundles[key] = bundle

    def get(self, key: BundleKey) -> Optional[ThreePartyKeys]:
        return self._bundles.get(key)

    def delete(self, key: BundleKey) -> None:
        self._bundles.pop(key, None)

    def take(self, route: Route, forwarder: int, verifier: int) -> Tuple[ThreePartyKeys, BundleKey]:
        """
        Entrega el siguiente paquete de la instancia y lo retira del almacén.

        Raises:
            KeyExhaustion: Si no quedan paquetes para la instancia o el turno
        """
        attempt = self._attempts[(route, forwarder, verifier)]
        key = (route, forwarder, verifier, attempt)

        if attempt == 0:
            bundle = self.get(key)
            if bundle is None:
                raise KeyExhaustion(
                    f"No hay paquete provisionado para {format_route(route)} "
                    f"({forwarder} -> {verifier})"
                )
        else:
            turn = (route, forwarder)
            if self._reserve_spent[turn] >= self.reserve:
                raise KeyExhaustion(
                    f"Reserva agotada en el turno de {forwarder} en {format_route(route)}"
                )
            self._reserve_spent[turn] += 1
            bundle = self._generate(key)

        self.delete(key)
        self._attempts[(route, forwarder, verifier)] += 1
        return bundle, key

    def close(self) -> None:
        self._bundles.clear()

    def _generate(self, key: BundleKey) -> ThreePartyKeys:
        return QDSService.establish_key_bundle(self.p, self.stream(_BUNDLE_STREAM, key))
