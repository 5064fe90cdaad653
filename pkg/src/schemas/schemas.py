from enum import Enum
from typing import Annotated, Any, Dict, List, Literal, Optional, Union
from pydantic import (
    AfterValidator,
    BaseModel,
    BeforeValidator,
    ConfigDict,
    Field,
    NonNegativeInt,
    PlainSerializer,
    ValidationInfo,
    field_validator,
    model_validator,
)
from src.config import settings
from src.models.models import TieOrder
from src.utils.validator import Route, dump_message, format_route, parse_message, parse_route


def _non_empty(message: bytes) -> bytes:
    if not message:
        raise ValueError("El mensaje no puede estar vacío")
    return message


# Mensaje de protocolo: cadena UTF-8 o {"hex": "..."}
Message = Annotated[
    bytes,
    BeforeValidator(parse_message),
    AfterValidator(_non_empty),
    PlainSerializer(dump_message, return_type=Any),
]

TraceKind = Literal[
    "sign",
    "consistency-check",
    "forward",
    "verify",
    "forgery-attempt",
    "record",
    "retry",
    "decision",
]

RunVerdict = Literal["completed", "aborted-liveness", "aborted-keys"]


class StrategyKind(str, Enum):
    HONEST = "honest"
    EQUIVOCATE = "equivocate"
    COLLUDE = "collude"
    CUSTOM_TABLE = "custom-table"


# Tablas indexadas por ruta "0>2" y luego por nodo
StrategyTable = Dict[str, Dict[int, Message]]


class Strategy(BaseModel):
    kind: StrategyKind = StrategyKind.HONEST
    primary_table: StrategyTable = {}
    forward_table: StrategyTable = {}
    stubborn: bool = False

    model_config = ConfigDict(extra="forbid", frozen=True)

    @field_validator("primary_table", "forward_table", mode="before")
    def normalize_routes(cls, v):
        if not isinstance(v, dict):
            raise ValueError("La tabla debe ser un objeto indexado por rutas")
        return {format_route(parse_route(route)): row for route, row in v.items()}

    def primary_message(self, route: Route, forwarder: int) -> Optional[bytes]:
        if self.kind == StrategyKind.HONEST:
            return None
        return self.primary_table.get(format_route(route), {}).get(forwarder)

    def forward_message(self, route: Route, verifier: int) -> Optional[bytes]:
        if self.kind not in (StrategyKind.COLLUDE, StrategyKind.CUSTOM_TABLE):
            return None
        return self.forward_table.get(format_route(route), {}).get(verifier)


class ScenarioConfig(BaseModel):
    n: int = Field(..., ge=2)
    f: int
    initial_primary: int = 0
    dishonest: List[int] = []
    honest_message: Message
    strategies: Dict[int, Strategy] = {}
    tie_order: Union[Literal["lexicographic"], List[Message]] = "lexicographic"
    seed: int = Field(0, ge=0, lt=2**64)
    p: int = Field(default_factory=lambda: settings.DEFAULT_SECURITY_PARAMETER, ge=2)
    retry_bound: int = Field(
        default_factory=lambda: settings.DEFAULT_RETRY_BOUND, ge=0
    )

    model_config = ConfigDict(extra="forbid")

    @field_validator("f")
    def f_in_range(cls, v, info: ValidationInfo):
        n = info.data.get("n")
        if n is not None and not 1 <= v <= n - 1:
            raise ValueError(f"f fuera de rango: se requiere 1 <= f <= {n - 1}")
        return v

    @field_validator("initial_primary")
    def primary_in_range(cls, v, info: ValidationInfo):
        n = info.data.get("n")
        if n is not None and not 0 <= v < n:
            raise ValueError(f"El primario inicial debe estar en [0, {n})")
        return v

    @field_validator("dishonest")
    def dishonest_are_players(cls, v, info: ValidationInfo):
        n = info.data.get("n")
        if len(set(v)) != len(v):
            raise ValueError("El conjunto deshonesto repite nodos")
        if n is not None and any(not 0 <= node < n for node in v):
            raise ValueError(f"Los nodos deshonestos deben estar en [0, {n})")
        return sorted(v)

    @field_validator("tie_order")
    def ranking_without_repeats(cls, v):
        if isinstance(v, list) and len(set(v)) != len(v):
            raise ValueError("El orden de desempate repite mensajes")
        return v

    @model_validator(mode="after")
    def strategies_match_players(self):
        problems = []
        for node, strategy in self.strategies.items():
            if node not in self.dishonest:
                problems.append(f"strategies.{node}: el nodo no es deshonesto")
            for label, table in (
                ("primary_table", strategy.primary_table),
                ("forward_table", strategy.forward_table),
            ):
                for route_text in table:
                    issue = self._route_issue(parse_route(route_text), node, label)
                    if issue:
                        problems.append(f"strategies.{node}.{label}.{route_text}: {issue}")
        if problems:
            raise ValueError("; ".join(problems))
        return self

    def _route_issue(self, route: Route, owner: int, table: str) -> Optional[str]:
        if route[0] != self.initial_primary:
            return "la ruta debe empezar por el primario inicial"
        if any(not 0 <= node < self.n for node in route):
            return "la ruta contiene nodos inexistentes"
        if len(route) > self.f:
            return f"la profundidad supera f={self.f}"
        if table == "primary_table" and route[-1] != owner:
            return "el dueño de la tabla no es el primario de esa ronda"
        if table == "forward_table" and owner in route:
            return "el dueño de la tabla no es backup de esa ronda"
        return None

    def tie(self) -> TieOrder:
        if self.tie_order == "lexicographic":
            return TieOrder()
        return TieOrder(tuple(self.tie_order))

    def is_honest(self, node: int) -> bool:
        return node not in self.dishonest

    def strategy_for(self, node: int) -> Strategy:
        if self.is_honest(node):
            return HONEST_STRATEGY
        return self.strategies.get(node, HONEST_STRATEGY)


HONEST_STRATEGY = Strategy()


class TraceEvent(BaseModel):
    seq: int
    kind: TraceKind
    depth: int
    route: str
    actor: int
    counterpart: Optional[int] = None
    verifier: Optional[int] = None
    message_digest: Optional[str] = None
    verdict: Optional[bool] = None


class NodeOutput(BaseModel):
    node: int
    message: Message
    honest: bool
    role: Literal["primary", "lieutenant"]


class BroadcastEntryDoc(BaseModel):
    source: int
    message: Message


class BroadcastListDoc(BaseModel):
    owner: int
    route: str
    entries: List[BroadcastEntryDoc]


class GatheringListDoc(BaseModel):
    owner: int
    route: str
    elements: List[Message]


class RoundDoc(BaseModel):
    route: str
    depth: int
    primary: int
    backups: List[int]
    delivered: Dict[int, Message]


class SignatureDoc(BaseModel):
    route: str
    signer: int
    forwarder: int
    verifier: int
    attempt: int
    message_digest: str
    signature: str


class RunReport(BaseModel):
    n: int
    f: int
    initial_primary: int
    dishonest: List[int]
    honest_message: Message
    verdict: RunVerdict
    qds_invocations: int
    complexity: Optional[int] = None
    retries: int
    forgery_attempts: int
    outputs: List[NodeOutput] = []
    broadcast_lists: List[BroadcastListDoc] = []
    gathering_lists: List[GatheringListDoc] = []
    rounds: List[RoundDoc] = []
    signatures: List[SignatureDoc] = []
    trace: List[TraceEvent] = []

    @property
    def completed(self) -> bool:
        return self.verdict == "completed"

    def output_of(self, node: int) -> Optional[bytes]:
        for output in self.outputs:
            if output.node == node:
                return output.message
        return None


class ICStatus(str, Enum):
    HOLDS = "holds"
    VIOLATED = "violated"
    NOT_APPLICABLE = "not-applicable"
    INDETERMINATE = "indeterminate"


class Witness(BaseModel):
    node: int
    output: Message


class ICVerdict(BaseModel):
    ic1: ICStatus
    ic2: ICStatus
    expected: Optional[Message] = None
    witnesses: List[Witness] = []

    @property
    def consensus(self) -> bool:
        return self.ic1 == ICStatus.HOLDS and self.ic2 in (
            ICStatus.HOLDS,
            ICStatus.NOT_APPLICABLE,
        )

    @property
    def violated(self) -> bool:
        return ICStatus.VIOLATED in (self.ic1, self.ic2)


class Lemma1Violation(BaseModel):
    round_a: str
    dishonest_b: int
    honest_c: int
    expected: Message
    observed: Message


class WorstCaseReport(BaseModel):
    n: int
    f: int
    alphabet: List[Message]
    families: List[str]
    budget: int
    evaluated: int
    exhaustive: bool
    budget_exhausted: bool
    violations: int
    aborted: int
    worst: Optional[ICVerdict] = None
    witness: Optional[ScenarioConfig] = None


class AttackDemoReport(BaseModel):
    scenario: ScenarioConfig
    verdict: ICVerdict
    violation_found: bool
    outputs: List[NodeOutput]


class DecoyParams(BaseModel):
    mu: float = 0.40
    nu: float = 0.20
    omega: float = 0.40
    p_mu: float = 0.60
    p_nu: float = 0.20
    p_omega: float = 0.15
    p_0: float = 0.05
    eps_sec: float = 1e-10
    eps_cor: float = 1e-15
    lambda_ec: float = Field(0.0, ge=0)

    model_config = ConfigDict(extra="forbid")

    @field_validator("nu", "omega", "p_mu", "p_nu", "p_omega", "p_0")
    def strictly_positive(cls, v):
        if v <= 0:
            raise ValueError("Debe ser estrictamente positivo")
        return v

    @field_validator("eps_sec", "eps_cor")
    def probability_bound(cls, v):
        if not 0 < v < 1:
            raise ValueError("Debe estar en (0, 1)")
        return v

    @model_validator(mode="after")
    def consistent_intensities(self):
        if not self.mu > self.nu:
            raise ValueError("Se requiere mu > nu > 0 (intensidades degeneradas)")
        total = self.p_mu + self.p_nu + self.p_omega + self.p_0
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"Las probabilidades deben sumar 1 (suman {total})")
        return self


class ObservedCounts(BaseModel):
    n_mu_z: NonNegativeInt
    n_nu_z: NonNegativeInt
    n_0_z: NonNegativeInt
    n_mu_x: NonNegativeInt
    n_nu_x: NonNegativeInt
    n_0_x: NonNegativeInt
    m_omega_x: NonNegativeInt

    model_config = ConfigDict(extra="forbid")


class DecoyEstimates(BaseModel):
    s0_zz_expected: float
    s1_zz_expected: float
    s1_xx_expected: float
    t0_xx_expected: float
    s0_zz_lower: float
    s1_zz_lower: float
    s1_xx_lower: float
    t1_xx_upper: float


class KeyRateRequest(BaseModel):
    params: DecoyParams = DecoyParams()
    counts: ObservedCounts

    model_config = ConfigDict(extra="forbid")


class KeyRateResult(BaseModel):
    s0_zz_lower: float
    s1_zz_lower: float
    s1_xx_lower: float
    t1_xx_upper: float
    phi1_zz_upper: float
    ell_real: float
    ell: int
    diagnostics: List[str] = []
