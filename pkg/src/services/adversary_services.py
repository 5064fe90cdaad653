import logging
from typing import Dict, Iterable, Optional, Sequence, Tuple, Union
from src.models.models import AttackContext, Signature, TieOrder
from src.schemas.schemas import ScenarioConfig, Strategy, StrategyKind
from src.utils.validator import Route, format_route

logger = logging.getLogger(__name__)

# Etiquetas del ataque guionizado n = 2f
ATTACK_LABELS = (b"m1", b"m2")


class AdversaryService:
    @staticmethod
    def decide_primary_message(strategy: Strategy, context: AttackContext) -> bytes:
        """
        Mensaje que el primario de la ronda entrega al forwarder de la
        instancia. Las tablas parciales caen en el mensaje consistente.
        """
        if strategy.kind == StrategyKind.HONEST:
            return context.consistent_message
        # Tras un rechazo solo insiste un nodo terco
        if context.attempt > 0 and not strategy.stubborn:
            return context.consistent_message

        chosen = strategy.primary_message(context.route, context.counterpart)
        if chosen is None:
            return context.consistent_message
        if chosen != context.consistent_message:
            logger.debug("Equivocación: %s", context.describe())
        return chosen

    @staticmethod
    def co_signed_message(
        strategy: Strategy, route: Route, verifier: int, proposal: bytes
    ) -> bytes:
        """Mensaje que un primario colusor firma a petición del forwarder."""
        chosen = strategy.forward_message(route, verifier)
        return proposal if chosen is None else chosen

    @staticmethod
    def decide_forwarded_message(
        strategy: Strategy, context: AttackContext
    ) -> Tuple[bytes, Signature]:
        """
        Par (mensaje, firma) que el forwarder reenvia al verifier. Un nodo
        deshonesto solo puede reutilizar firmas emitidas en la ejecución; si
        quiere otro mensaje intenta una falsificación que el verifier rechaza.

        Raises:
            ValueError: Si el forwarder no recibió ningún par firmado
        """
        if not context.signed_messages_available:
            raise ValueError(f"Sin mensajes firmados para {context.describe()}")
        genuine = context.signed_messages_available[0]
        if strategy.kind == StrategyKind.HONEST:
            return genuine

        desired = strategy.forward_message(context.route, context.counterpart)
        if desired is None:
            return genuine
        for message, signature in context.signed_messages_available:
            if message == desired:
                return message, signature

        if context.attempt > 0 and not strategy.stubborn:
            return genuine
        logger.debug("Intento de falsificación: %s", context.describe())
        return desired, genuine[1]

    @staticmethod
    def collusion_tables(
        n: int, f: int, initial_primary: int, dishonest: Iterable[int], message: bytes
    ) -> Dict[int, Strategy]:
        """
        Familia de colusión: cada primario deshonesto firma `message` para
        cada forwarder deshonesto, y este lo reenvia a todos los verifiers.
        """
        # Import local: consensus depende de este módulo
        from src.services.consensus_services import ConsensusService

        corrupt = set(dishonest)
        primary_tables: Dict[int, Dict[str, Dict[int, bytes]]] = {node: {} for node in corrupt}
        forward_tables: Dict[int, Dict[str, Dict[int, bytes]]] = {node: {} for node in corrupt}

        for plan in ConsensusService.enumerate_rounds(n, f, initial_primary):
            if plan.primary not in corrupt:
                continue
            route = format_route(plan.route)
            accomplices = [node for node in plan.backups if node in corrupt]
            if accomplices:
                primary_tables[plan.primary][route] = {node: message for node in accomplices}
            for forwarder in accomplices:
                verifiers = [node for node in plan.backups if node != forwarder]
                if verifiers:
                    forward_tables[forwarder][route] = {node: message for node in verifiers}

        return {
            node: Strategy(
                kind=StrategyKind.COLLUDE,
                primary_table=primary_tables[node],
                forward_table=forward_tables[node],
            )
            for node in sorted(corrupt)
        }

    @staticmethod
    def scripted_attack_n_eq_2f(
        f: int,
        tie_order: Union[str, Sequence[Union[bytes, str]]] = "lexicographic",
        seed: int = 0,
        p: Optional[int] = None,
    ) -> ScenarioConfig:
        """
        Escenario n = 2f con primario honesto y f tenientes deshonestos que
        coluden para empatar las listas de los tenientes honestos hacia la
        etiqueta favorecida por el desempate.
        """
        if f < 2:
            raise ValueError("El ataque guionizado requiere f >= 2")

        n = 2 * f
        if tie_order == "lexicographic":
            order = TieOrder()
        else:
            order = TieOrder(
                tuple(item.encode() if isinstance(item, str) else item for item in tie_order)
            )
        attack = min(ATTACK_LABELS, key=order.rank_key)
        honest = next(label for label in ATTACK_LABELS if label != attack)
        dishonest = list(range(f, n))

        document = {
            "n": n,
            "f": f,
            "initial_primary": 0,
            "dishonest": dishonest,
            "honest_message": honest,
            "strategies": AdversaryService.collusion_tables(n, f, 0, dishonest, attack),
            "tie_order": tie_order if tie_order == "lexicographic" else list(order.ranking),
            "seed": seed,
        }
        if p is not None:
            document["p"] = p
        logger.info("Ataque n=2f: n=%d, ataque=%r, honesto=%r", n, attack, honest)
        return ScenarioConfig.model_validate(document)
