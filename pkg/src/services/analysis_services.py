import logging
import multiprocessing
from itertools import combinations, product
from typing import Dict, List, Optional, Sequence, Tuple
import numpy as np
from src.config import settings
from src.models.models import SafePath, TreeNode
from src.schemas.schemas import (
    ICStatus,
    ICVerdict,
    Lemma1Violation,
    RoundDoc,
    RunReport,
    ScenarioConfig,
    Strategy,
    StrategyKind,
    Witness,
    WorstCaseReport,
)
from src.services.adversary_services import AdversaryService
from src.services.consensus_services import ConsensusService
from src.services.harness_services import HarnessService
from src.utils.validator import format_route, parse_route

logger = logging.getLogger(__name__)

SEARCH_FAMILIES = ("equivocation", "collusion", "scripted")

# (tabla, dueño, ruta, destino)
Slot = Tuple[str, int, str, int]

_SEVERITY = {ICStatus.VIOLATED: 2, ICStatus.INDETERMINATE: 1}


def _severity(verdict: ICVerdict) -> int:
    return max(_SEVERITY.get(verdict.ic1, 0), _SEVERITY.get(verdict.ic2, 0))


def _evaluate_candidate(config: ScenarioConfig) -> Tuple[ScenarioConfig, ICVerdict]:
    # Nivel de módulo: multiprocessing necesita poder serializarlo
    report = HarnessService.run(config, collect_trace=False)
    return config, AnalysisService.check_ic(report, config)


def _slots(plans, dishonest: Sequence[int], families: Sequence[str]) -> List[Slot]:
    corrupt = set(dishonest)
    slots: List[Slot] = []
    for plan in plans:
        if plan.primary not in corrupt:
            continue
        route = format_route(plan.route)
        for forwarder in plan.backups:
            slots.append(("primary", plan.primary, route, forwarder))
        if "collusion" not in families:
            continue
        for forwarder in plan.backups:
            if forwarder not in corrupt:
                continue
            for verifier in plan.backups:
                if verifier != forwarder:
                    slots.append(("forward", forwarder, route, verifier))
    return slots


def _candidate(
    n: int,
    f: int,
    dishonest: Tuple[int, ...],
    slots: List[Slot],
    honest_index: int,
    assignment: Sequence[int],
    alphabet: Sequence[bytes],
    kind: StrategyKind,
    seed: int,
    p: int,
) -> ScenarioConfig:
    tables: Dict[int, Dict[str, Dict[str, Dict[int, bytes]]]] = {
        node: {"primary": {}, "forward": {}} for node in dishonest
    }
    for (table, owner, route, target), index in zip(slots, assignment):
        tables[owner][table].setdefault(route, {})[target] = alphabet[index]
    return ScenarioConfig(
        n=n,
        f=f,
        initial_primary=0,
        dishonest=list(dishonest),
        honest_message=alphabet[honest_index],
        strategies={
            node: Strategy(
                kind=kind,
                primary_table=tables[node]["primary"],
                forward_table=tables[node]["forward"],
            )
            for node in dishonest
        },
        seed=seed,
        p=p,
    )


class AnalysisService:
    @staticmethod
    def build_tree(
        n: int,
        f: int,
        initial_primary_honest: bool,
        honest_count: int,
        dishonest_count: int,
    ) -> TreeNode:
        """
        Árbol binario de clases de rondas: el hijo izquierdo tiene primario
        honesto y el derecho deshonesto. Los recuentos son los backups de la
        raíz (todos los nodos salvo el primario inicial).

        Raises:
            ValueError: Si los recuentos no suman n - 1
        """
        if not 1 <= f <= n - 1:
            raise ValueError(f"f fuera de rango: se requiere 1 <= f <= {n - 1}")
        if honest_count < 0 or dishonest_count < 0:
            raise ValueError("Los recuentos no pueden ser negativos")
        if honest_count + dishonest_count != n - 1:
            raise ValueError(
                f"Recuentos inconsistentes: {honest_count} + {dishonest_count} != {n - 1}"
            )

        def grow(depth: int, honest: bool, h: int, d: int, path: str) -> TreeNode:
            node = TreeNode(depth, honest, h, d, path=path)
            if depth < f:
                if h > 0:
                    node.left = grow(depth + 1, True, h - 1, d, path + "L")
                if d > 0:
                    node.right = grow(depth + 1, False, h, d - 1, path + "R")
            return node

        return grow(1, initial_primary_honest, honest_count, dishonest_count, "")

    @staticmethod
    def tree_from_config(config: ScenarioConfig) -> TreeNode:
        lieutenants = [node for node in range(config.n) if node != config.initial_primary]
        dishonest = sum(1 for node in lieutenants if not config.is_honest(node))
        return AnalysisService.build_tree(
            config.n,
            config.f,
            config.is_honest(config.initial_primary),
            len(lieutenants) - dishonest,
            dishonest,
        )

    @staticmethod
    def find_safe_path(tree: TreeNode, f: int) -> Optional[SafePath]:
        """
        Busca en anchura (izquierda primero) el primer nodo seguro desde el que
        se puede construir el camino: hacia la izquierda hasta equilibrar
        backups, y después derecha e izquierda alternadas hasta f - 1.
        """
        for node in tree.iter_breadth_first():
            if node.honest and node.honest_backups >= node.dishonest_backups:
                path = _path_from(node, f)
                if path is not None:
                    return path

        # Hoja sin colusión: todos sus backups son honestos
        for node in tree.iter_breadth_first():
            if not node.honest and node.depth == f and node.dishonest_backups == 0:
                return SafePath(node, node, node, tuple(node.path))
        return None

    @staticmethod
    def check_ic(report: RunReport, config: Optional[ScenarioConfig] = None) -> ICVerdict:
        """
        IC1: los tenientes honestos coinciden. IC2: coinciden con el primario
        inicial si es honesto. Sin `config` se usan los datos del informe.
        """
        if not report.completed:
            return ICVerdict(ic1=ICStatus.INDETERMINATE, ic2=ICStatus.INDETERMINATE)

        primary = config.initial_primary if config else report.initial_primary
        dishonest = set(config.dishonest if config else report.dishonest)
        expected_message = config.honest_message if config else report.honest_message
        outputs = {
            node: report.output_of(node)
            for node in range(report.n)
            if node != primary and node not in dishonest
        }

        witnesses: Dict[int, bytes] = {}
        ic1 = ICStatus.HOLDS
        if len(set(outputs.values())) > 1:
            ic1 = ICStatus.VIOLATED
            witnesses.update(outputs)

        expected = None
        if primary in dishonest:
            ic2 = ICStatus.NOT_APPLICABLE
        else:
            expected = expected_message
            wrong = {node: out for node, out in outputs.items() if out != expected}
            ic2 = ICStatus.VIOLATED if wrong else ICStatus.HOLDS
            witnesses.update(wrong)

        return ICVerdict(
            ic1=ic1,
            ic2=ic2,
            expected=expected,
            witnesses=[Witness(node=node, output=out) for node, out in sorted(witnesses.items())],
        )

    @staticmethod
    def audit_lemma1(report: RunReport) -> List[Lemma1Violation]:
        """
        Para cada ronda A honesta, backup deshonesto B y primario honesto C de
        A->B->C, lo que C difunde debe coincidir con lo que A entregó a B.
        """
        dishonest = set(report.dishonest)
        rounds: Dict[str, RoundDoc] = {doc.route: doc for doc in report.rounds}
        violations: List[Lemma1Violation] = []

        for round_a in report.rounds:
            route_a = parse_route(round_a.route)
            if round_a.primary in dishonest or len(route_a) > report.f - 2:
                continue
            for b in round_a.backups:
                expected = round_a.delivered.get(b)
                if b not in dishonest or expected is None:
                    continue
                round_b = rounds.get(format_route(route_a + (b,)))
                if round_b is None:
                    continue
                for c in round_b.backups:
                    if c in dishonest:
                        continue
                    round_c = rounds.get(format_route(route_a + (b, c)))
                    if round_c is None:
                        continue
                    observed = next(
                        (m for _, m in sorted(round_c.delivered.items()) if m != expected), None
                    )
                    if observed is not None:
                        violations.append(
                            Lemma1Violation(
                                round_a=round_a.route,
                                dishonest_b=b,
                                honest_c=c,
                                expected=expected,
                                observed=observed,
                            )
                        )
        return violations

    @staticmethod
    def strategy_search(
        n: int,
        f: int,
        alphabet: Sequence[bytes] = (b"m1", b"m2"),
        families: Sequence[str] = ("equivocation", "collusion"),
        budget: Optional[int] = None,
        seed: int = 0,
        p: Optional[int] = None,
        workers: Optional[int] = None,
    ) -> WorstCaseReport:
        """
        Recorre asignaciones de tablas deshonestas sobre `alphabet` para todos
        los conjuntos corruptos de tamaño <= f y sobre el mensaje honesto del
        primario, de forma exhaustiva si caben en el presupuesto y por
        muestreo con semilla si no.
        """
        unknown = [family for family in families if family not in SEARCH_FAMILIES]
        if unknown:
            raise ValueError(f"Familias desconocidas: {unknown}")
        if not alphabet:
            raise ValueError("El alfabeto no puede estar vacío")
        budget = settings.SEARCH_BUDGET if budget is None else budget
        p = settings.SEARCH_SECURITY_PARAMETER if p is None else p
        workers = settings.SEARCH_WORKERS if workers is None else workers

        candidates, exhaustive, space = _candidates(n, f, alphabet, families, budget, seed, p)
        logger.info(
            "Búsqueda n=%d f=%d: espacio %d, %s",
            n, f, space, "exhaustiva" if exhaustive else f"muestreo de {budget}",
        )

        if workers > 1:
            with multiprocessing.Pool(workers) as pool:
                results = list(pool.imap(_evaluate_candidate, candidates, chunksize=16))
        else:
            results = [_evaluate_candidate(config) for config in candidates]

        violations = aborted = 0
        worst: Optional[ICVerdict] = None
        witness: Optional[ScenarioConfig] = None
        for index, (config, verdict) in enumerate(results, start=1):
            if verdict.violated:
                violations += 1
            if verdict.ic1 == ICStatus.INDETERMINATE:
                aborted += 1
            if worst is None or _severity(verdict) > _severity(worst):
                worst = verdict
                witness = config if verdict.violated else None
            if index % 1000 == 0:
                logger.info("Evaluados %d candidatos, %d violaciones", index, violations)

        return WorstCaseReport(
            n=n,
            f=f,
            alphabet=list(alphabet),
            families=list(families),
            budget=budget,
            evaluated=len(results),
            exhaustive=exhaustive,
            budget_exhausted=not exhaustive,
            violations=violations,
            aborted=aborted,
            worst=worst,
            witness=witness,
        )


def _path_from(safe: TreeNode, f: int) -> Optional[SafePath]:
    intermediate = safe
    while not intermediate.balanced:
        intermediate = intermediate.left
        if intermediate is None:
            return None

    ending, go_right = intermediate, True
    while ending.depth < max(f - 1, intermediate.depth):
        ending = ending.right if go_right else ending.left
        if ending is None:
            return None
        go_right = not go_right
    return SafePath(safe, intermediate, ending, tuple(ending.path))


def _candidates(
    n: int,
    f: int,
    alphabet: Sequence[bytes],
    families: Sequence[str],
    budget: int,
    seed: int,
    p: int,
) -> Tuple[List[ScenarioConfig], bool, int]:
    candidates: List[ScenarioConfig] = []
    if "scripted" in families and n == 2 * f and f >= 2:
        for preferred in (b"m2", b"m1"):
            candidates.append(
                AdversaryService.scripted_attack_n_eq_2f(
                    f, tie_order=[preferred], seed=seed, p=p
                )
            )

    table_families = [family for family in families if family != "scripted"]
    if not table_families:
        return candidates, True, len(candidates)

    kind = StrategyKind.COLLUDE if "collusion" in table_families else StrategyKind.EQUIVOCATE
    plans = ConsensusService.enumerate_rounds(n, f, 0)
    corruption_sets = [
        subset for size in range(f + 1) for subset in combinations(range(n), size)
    ]
    slot_map = {subset: _slots(plans, subset, table_families) for subset in corruption_sets}
    # El mensaje honesto es una dimensión más del espacio
    space = sum(len(alphabet) ** (len(slots) + 1) for slots in slot_map.values())

    def build(subset, choice) -> ScenarioConfig:
        honest_index, *assignment = choice
        return _candidate(
            n, f, subset, slot_map[subset], honest_index, assignment, alphabet, kind, seed, p
        )

    if space <= budget:
        for subset in corruption_sets:
            for assignment in product(range(len(alphabet)), repeat=len(slot_map[subset]) + 1):
                candidates.append(build(subset, assignment))
        return candidates, True, space

    rng = np.random.default_rng(seed)
    for _ in range(budget):
        subset = corruption_sets[int(rng.integers(len(corruption_sets)))]
        assignment = rng.integers(len(alphabet), size=len(slot_map[subset]) + 1).tolist()
        candidates.append(build(subset, assignment))
    return candidates, False, space
