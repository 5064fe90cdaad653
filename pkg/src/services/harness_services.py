import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Optional, TextIO, Union
from pydantic import ValidationError
from src.models.models import BroadcastRecord, GatheringList, RoundPlan
from src.schemas.schemas import (
    BroadcastEntryDoc,
    BroadcastListDoc,
    GatheringListDoc,
    NodeOutput,
    RoundDoc,
    RunReport,
    RunVerdict,
    ScenarioConfig,
    SignatureDoc,
)
from src.services.consensus_services import ConsensusService
from src.services.key_store import KeyStore
from src.services.trace_recorder import TraceRecorder, message_digest
from src.utils.exceptions import KeyExhaustion, LivenessAbort, ScenarioError
from src.utils.validator import format_route, validation_diagnostics

logger = logging.getLogger(__name__)


class HarnessService:
    @staticmethod
    def load_scenario(text: Union[str, bytes]) -> ScenarioConfig:
        """
        Valida un documento JSON de escenario.

        Raises:
            ScenarioError: Con un diagnóstico por cada campo inválido
        """
        try:
            return ScenarioConfig.model_validate_json(text)
        except ValidationError as e:
            raise ScenarioError(validation_diagnostics(e))

    @staticmethod
    def load_scenario_file(path: Union[str, Path]) -> ScenarioConfig:
        return HarnessService.load_scenario(Path(path).read_text(encoding="utf-8"))

    @staticmethod
    def with_overrides(config: ScenarioConfig, **updates: Any) -> ScenarioConfig:
        """Copia revalidada del escenario con campos sustituidos."""
        try:
            return ScenarioConfig.model_validate({**config.model_dump(), **updates})
        except ValidationError as e:
            raise ScenarioError(validation_diagnostics(e))

    @staticmethod
    def complexity(n: int, f: int) -> int:
        """Número de instancias QDS de una ejecución sin reintentos."""
        if n < 2 or not 1 <= f <= n - 2:
            raise ValueError(f"Se requiere n >= 2 y 1 <= f <= n - 2 (n={n}, f={f})")
        return sum(math.perm(n - 1, 2 + m) for m in range(f))

    @staticmethod
    def run(
        config: ScenarioConfig,
        *,
        verify_signatures: bool = True,
        collect_trace: bool = True,
    ) -> RunReport:
        """
        Ejecuta la difusión y, si termina, la recolección de cada nodo. Los
        abortos quedan en el veredicto con el registro parcial.
        """
        plans = ConsensusService.enumerate_rounds(config.n, config.f, config.initial_primary)
        key_store = KeyStore(config.seed, config.p, config.retry_bound)
        key_store.provision(plans)
        recorder = TraceRecorder(enabled=collect_trace)
        record = BroadcastRecord()
        logger.info(
            "Ejecución n=%d f=%d primario=%d deshonestos=%s",
            config.n, config.f, config.initial_primary, config.dishonest,
        )

        verdict: RunVerdict = "completed"
        try:
            ConsensusService.run_broadcast_phase(
                config, key_store, recorder, record=record, verify_signatures=verify_signatures
            )
        except LivenessAbort as e:
            logger.warning("Ejecución abortada por vivacidad: %s", e)
            verdict = "aborted-liveness"
        except KeyExhaustion as e:
            logger.warning("Ejecución abortada por claves: %s", e)
            verdict = "aborted-keys"
        finally:
            key_store.close()

        outputs: List[NodeOutput] = []
        gathered: List[GatheringList] = []
        if verdict == "completed":
            for node in range(config.n):
                if node == config.initial_primary:
                    message = config.honest_message
                else:
                    message, lists = ConsensusService.run_gathering_phase(
                        node, record.lists_for(node), config
                    )
                    gathered.extend(lists)
                recorder.emit("decision", (config.initial_primary,), actor=node, message=message)
                outputs.append(
                    NodeOutput(
                        node=node,
                        message=message,
                        honest=config.is_honest(node),
                        role="primary" if node == config.initial_primary else "lieutenant",
                    )
                )

        logger.info(
            "Fin de ejecución: %s, %d instancias QDS, %d reintentos",
            verdict, record.qds_invocations, record.retries,
        )
        return _build_report(config, plans, record, verdict, outputs, gathered, recorder)

    @staticmethod
    def emit_trace(report: RunReport, sink: Optional[TextIO] = None) -> str:
        """Traza en JSON lines, un evento por línea en orden canónico."""
        text = "".join(event.model_dump_json() + "\n" for event in report.trace)
        if sink is not None:
            sink.write(text)
        return text


def _build_report(
    config: ScenarioConfig,
    plans: List[RoundPlan],
    record: BroadcastRecord,
    verdict: RunVerdict,
    outputs: List[NodeOutput],
    gathered: List[GatheringList],
    recorder: TraceRecorder,
) -> RunReport:
    backups: Dict[tuple, tuple] = {plan.route: plan.backups for plan in plans}
    complexity = (
        HarnessService.complexity(config.n, config.f) if config.f <= config.n - 2 else None
    )
    return RunReport(
        n=config.n,
        f=config.f,
        initial_primary=config.initial_primary,
        dishonest=config.dishonest,
        honest_message=config.honest_message,
        verdict=verdict,
        qds_invocations=record.qds_invocations,
        complexity=complexity,
        retries=record.retries,
        forgery_attempts=record.forgery_attempts,
        outputs=outputs,
        broadcast_lists=[
            BroadcastListDoc(
                owner=owner,
                route=format_route(route),
                entries=[
                    BroadcastEntryDoc(source=entry.source, message=entry.message)
                    for entry in broadcast_list.entries
                ],
            )
            for (owner, route), broadcast_list in sorted(record.lists.items())
        ],
        gathering_lists=[
            GatheringListDoc(
                owner=gathering.owner,
                route=format_route(gathering.route),
                elements=gathering.elements,
            )
            for gathering in gathered
        ],
        rounds=[
            RoundDoc(
                route=format_route(round_record.route),
                depth=len(round_record.route),
                primary=round_record.primary,
                backups=list(backups[round_record.route]),
                delivered=round_record.delivered,
            )
            for round_record in record.rounds
        ],
        signatures=[
            SignatureDoc(
                route=format_route(signature.route),
                signer=signature.signer,
                forwarder=signature.forwarder,
                verifier=signature.verifier,
                attempt=signature.attempt,
                message_digest=message_digest(signature.message),
                signature=signature.signature.to_hex(),
            )
            for signature in record.signatures
        ],
        trace=recorder.events,
    )
