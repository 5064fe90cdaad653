import logging
from collections import Counter
from typing import Dict, List, Optional, Sequence, Tuple
import numpy as np
from src.models.models import (
    AttackContext,
    BroadcastEntry,
    BroadcastList,
    BroadcastRecord,
    GatheringList,
    RoundPlan,
    RoundRecord,
    Signature,
    SignatureRecord,
    ThreePartyKeys,
    TieOrder,
)
from src.schemas.schemas import ScenarioConfig, StrategyKind
from src.services.adversary_services import AdversaryService
from src.services.key_store import KeyStore
from src.services.qds_services import QDSService
from src.services.trace_recorder import TraceRecorder
from src.utils.exceptions import IncompleteRecordError, LivenessAbort
from src.utils.validator import Route, format_route

logger = logging.getLogger(__name__)


class ConsensusService:
    @staticmethod
    def majority(elements: Sequence[bytes], order: TieOrder) -> bytes:
        """
        Mensaje con mayor multiplicidad; los empates se resuelven con `order`.

        Raises:
            ValueError: Si la secuencia está vacía
        """
        if not elements:
            raise ValueError("La mayoría de una secuencia vacía no está definida")
        counts = Counter(elements)
        top = max(counts.values())
        return min((m for m, c in counts.items() if c == top), key=order.rank_key)

    @staticmethod
    def check_consistency(previous: bytes, current: bytes) -> bool:
        return previous == current

    @staticmethod
    def enumerate_rounds(n: int, f: int, initial_primary: int = 0) -> List[RoundPlan]:
        """
        Rondas de multidifusión en orden canónico: profundidad primero y
        backups en orden ascendente.
        """
        if n < 2 or not 1 <= f <= n - 1:
            raise ValueError(f"Parámetros inválidos: n={n}, f={f}")
        if not 0 <= initial_primary < n:
            raise ValueError(f"Primario inicial {initial_primary} fuera de [0, {n})")

        plans: List[RoundPlan] = []

        def expand(route: Route, backups: Tuple[int, ...]) -> None:
            plans.append(RoundPlan(route=route, primary=route[-1], backups=backups))
            if len(route) == f:
                return
            for backup in backups:
                expand(route + (backup,), tuple(b for b in backups if b != backup))

        expand((initial_primary,), tuple(node for node in range(n) if node != initial_primary))
        return plans

    @staticmethod
    def recommended_depth(n: int) -> int:
        """Mayor f con n >= 2f + 1."""
        if n < 3:
            raise ValueError("Se necesitan al menos 3 jugadores para tolerar un fallo")
        return (n - 1) // 2

    @staticmethod
    def draw_initial_primary(n: int, seed: int) -> int:
        if n < 2:
            raise ValueError("Se necesitan al menos 2 jugadores")
        return int(np.random.default_rng(seed).integers(n))

    @staticmethod
    def run_broadcast_phase(
        scenario: ScenarioConfig,
        key_store: KeyStore,
        recorder: Optional[TraceRecorder] = None,
        record: Optional[BroadcastRecord] = None,
        verify_signatures: bool = True,
    ) -> BroadcastRecord:
        """
        Ejecuta todas las rondas de la fase de difusión. Si se pasa `record`,
        se rellena en sitio para conservar el estado parcial ante un aborto.

        Raises:
            LivenessAbort: Si un bucle de reintentos supera `retry_bound`
            KeyExhaustion: Si se agota la reserva de claves
        """
        driver = _BroadcastDriver(
            scenario,
            key_store,
            recorder or TraceRecorder(enabled=False),
            record if record is not None else BroadcastRecord(),
            verify_signatures,
        )
        return driver.run()

    @staticmethod
    def run_gathering_phase(
        node: int, lists: Dict[Route, BroadcastList], scenario: ScenarioConfig
    ) -> Tuple[bytes, List[GatheringList]]:
        """
        Recursión de mayorías de abajo arriba usando solo las listas del nodo.

        Raises:
            IncompleteRecordError: Si falta una lista o está incompleta
        """
        order = scenario.tie()
        gathered: List[GatheringList] = []

        def gather(route: Route) -> List[bytes]:
            backups = [j for j in range(scenario.n) if j not in route]
            broadcast_list = lists.get(route)
            if broadcast_list is None:
                raise IncompleteRecordError(
                    f"El nodo {node} no tiene lista para {format_route(route)}"
                )
            if len(broadcast_list.entries) != len(backups):
                raise IncompleteRecordError(
                    f"La lista de {node} en {format_route(route)} tiene "
                    f"{len(broadcast_list.entries)} entradas, se esperaban {len(backups)}"
                )

            if len(route) == scenario.f:
                elements = broadcast_list.messages_by_source()
            else:
                own = broadcast_list.own_message()
                if own is None:
                    raise IncompleteRecordError(
                        f"Falta el mensaje propio de {node} en {format_route(route)}"
                    )
                elements = [
                    own if j == node else ConsensusService.majority(gather(route + (j,)), order)
                    for j in backups
                ]
            gathered.append(GatheringList(owner=node, route=route, elements=elements))
            return elements

        final = ConsensusService.majority(gather((scenario.initial_primary,)), order)
        return final, gathered


class _BroadcastDriver:
    """Estado de una fase de difusión en curso."""

    def __init__(
        self,
        scenario: ScenarioConfig,
        key_store: KeyStore,
        recorder: TraceRecorder,
        record: BroadcastRecord,
        verify_signatures: bool,
    ):
        self.scenario = scenario
        self.key_store = key_store
        self.recorder = recorder
        self.record = record
        self.verify_signatures = verify_signatures

    def run(self) -> BroadcastRecord:
        scenario = self.scenario
        for plan in ConsensusService.enumerate_rounds(
            scenario.n, scenario.f, scenario.initial_primary
        ):
            self._run_round(plan)
        return self.record

    def _run_round(self, plan: RoundPlan) -> None:
        logger.debug(
            "Ronda %s: primario %d, backups %s",
            format_route(plan.route), plan.primary, list(plan.backups),
        )
        round_record = RoundRecord(route=plan.route, primary=plan.primary)
        self.record.rounds.append(round_record)
        for forwarder in plan.backups:
            verifiers = [node for node in plan.backups if node != forwarder]
            if not verifiers:
                self._deliver_unsigned(plan, forwarder, round_record)
            for verifier in verifiers:
                self._run_instance(plan, forwarder, verifier, round_record)

    def _parent_message(self, plan: RoundPlan, forwarder: int) -> Optional[bytes]:
        # Lo que el primario de esta ronda reenvió al forwarder en la ronda padre
        if plan.depth == 1:
            return None
        return self.record.forwarded.get((plan.route[:-1], plan.primary, forwarder))

    def _primary_proposal(
        self, plan: RoundPlan, forwarder: int, verifier: Optional[int], attempt: int
    ) -> bytes:
        parent = self._parent_message(plan, forwarder)
        context = AttackContext(
            route=plan.route,
            depth=plan.depth,
            role="primary",
            actor=plan.primary,
            counterpart=forwarder,
            consistent_message=self.scenario.honest_message if parent is None else parent,
            attempt=attempt,
            verifier=verifier,
        )
        return AdversaryService.decide_primary_message(
            self.scenario.strategy_for(plan.primary), context
        )

    def _passes_consistency(self, plan: RoundPlan, forwarder: int, proposal: bytes) -> bool:
        # Sin comprobación a profundidad 1 ni en forwarders deshonestos
        if plan.depth == 1 or not self.scenario.is_honest(forwarder):
            return True
        consistent = ConsensusService.check_consistency(
            self._parent_message(plan, forwarder), proposal
        )
        self.recorder.emit(
            "consistency-check",
            plan.route,
            actor=forwarder,
            counterpart=plan.primary,
            message=proposal,
            verdict=consistent,
        )
        return consistent

    def _colluding(self, primary: int, forwarder: int) -> bool:
        return all(
            self.scenario.strategy_for(node).kind == StrategyKind.COLLUDE
            and not self.scenario.is_honest(node)
            for node in (primary, forwarder)
        )

    def _retry(
        self, plan: RoundPlan, forwarder: int, verifier: Optional[int], count: int, reason: str
    ) -> None:
        self.record.retries += 1
        self.recorder.emit(
            "retry", plan.route, actor=forwarder, counterpart=plan.primary, verifier=verifier
        )
        logger.debug(
            "Reintento %d (%s) en %s, forwarder %d",
            count, reason, format_route(plan.route), forwarder,
        )
        if count > self.scenario.retry_bound:
            raise LivenessAbort(
                f"Se superó el límite de {self.scenario.retry_bound} reintentos "
                f"({reason}) en {format_route(plan.route)}, forwarder {forwarder}"
            )

    def _accept_from_primary(
        self, plan: RoundPlan, forwarder: int, message: bytes, round_record: RoundRecord
    ) -> None:
        if forwarder in round_record.delivered:
            return
        round_record.delivered[forwarder] = message
        self.record.list_for(forwarder, plan.route).entries.append(
            BroadcastEntry(source=forwarder, message=message)
        )
        self.recorder.emit(
            "record", plan.route, actor=forwarder, counterpart=plan.primary, message=message
        )

    def _deliver_unsigned(
        self, plan: RoundPlan, forwarder: int, round_record: RoundRecord
    ) -> None:
        # Ronda de un solo backup: no hay verifier ni instancia QDS
        rejections = 0
        while True:
            proposal = self._primary_proposal(plan, forwarder, None, rejections)
            if self._passes_consistency(plan, forwarder, proposal):
                break
            rejections += 1
            self._retry(plan, forwarder, None, rejections, "consistencia")
        self._accept_from_primary(plan, forwarder, proposal, round_record)

    def _run_instance(
        self, plan: RoundPlan, forwarder: int, verifier: int, round_record: RoundRecord
    ) -> None:
        route, primary = plan.route, plan.primary
        inconsistent = rejected = 0
        while True:
            proposal = self._primary_proposal(plan, forwarder, verifier, inconsistent)
            signed = proposal
            if self._colluding(primary, forwarder):
                signed = AdversaryService.co_signed_message(
                    self.scenario.strategy_for(forwarder), route, verifier, proposal
                )

            bundle, key = self.key_store.take(route, forwarder, verifier)
            signature = QDSService.sign(signed, bundle, self.key_store.signer_rng(key))
            self.record.qds_invocations += 1
            self.record.signatures.append(
                SignatureRecord(
                    route=route,
                    signer=primary,
                    forwarder=forwarder,
                    verifier=verifier,
                    attempt=key[3],
                    message=signed,
                    signature=signature,
                )
            )
            self.recorder.emit(
                "sign", route, actor=primary, counterpart=forwarder, verifier=verifier, message=signed
            )

            if not self._passes_consistency(plan, forwarder, proposal):
                inconsistent += 1
                self._retry(plan, forwarder, verifier, inconsistent, "consistencia")
                continue

            context = AttackContext(
                route=route,
                depth=plan.depth,
                role="forwarder",
                actor=forwarder,
                counterpart=verifier,
                consistent_message=signed,
                attempt=rejected,
                verifier=verifier,
                signed_messages_available=((signed, signature),),
            )
            message, forwarded = AdversaryService.decide_forwarded_message(
                self.scenario.strategy_for(forwarder), context
            )
            self.recorder.emit(
                "forward", route, actor=forwarder, counterpart=verifier, verifier=verifier, message=message
            )
            if message != signed or forwarded != signature:
                self.record.forgery_attempts += 1
                self.recorder.emit(
                    "forgery-attempt", route, actor=forwarder, counterpart=verifier,
                    verifier=verifier, message=message,
                )
                logger.debug("Falsificación de %d hacia %d en %s", forwarder, verifier, format_route(route))

            if not self._verify_pair(
                plan, forwarder, verifier, bundle, (signed, signature), (message, forwarded)
            ):
                rejected += 1
                self._retry(plan, forwarder, verifier, rejected, "verificación")
                continue

            self._accept_from_primary(plan, forwarder, proposal, round_record)
            self.record.list_for(verifier, route).entries.append(
                BroadcastEntry(source=forwarder, message=message)
            )
            self.record.forwarded[(route, forwarder, verifier)] = message
            self.recorder.emit(
                "record", route, actor=verifier, counterpart=forwarder, verifier=verifier, message=message
            )
            return

    def _verify_pair(
        self,
        plan: RoundPlan,
        forwarder: int,
        verifier: int,
        bundle: ThreePartyKeys,
        received: Tuple[bytes, Signature],
        forwarded: Tuple[bytes, Signature],
    ) -> bool:
        """
        Bob verifica lo que recibió del primario y Charlie lo que le reenvió
        Bob, ambos con las claves combinadas tras el intercambio.
        """
        combined = QDSService.combine_partner_keys(bundle.x_b, bundle.y_b, bundle.x_c, bundle.y_c)
        accepted = True
        for party, counterpart, (message, signature) in (
            (forwarder, plan.primary, received),
            (verifier, forwarder, forwarded),
        ):
            verdict = QDSService.verify(message, signature, combined) if self.verify_signatures else True
            self.recorder.emit(
                "verify", plan.route, actor=party, counterpart=counterpart,
                verifier=verifier, message=message, verdict=verdict,
            )
            accepted = accepted and verdict
        return accepted
