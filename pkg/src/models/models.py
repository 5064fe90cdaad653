from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple
from src.utils.exceptions import OneTimeKeyError
from src.utils.validator import Route, format_route, validate_bit_string


@dataclass(frozen=True)
class Bits:
    """
    Cadena de bits de longitud fija. La posición 0 de la cadena es el bit
    más significativo de `value`.
    """

    value: int
    length: int

    def __post_init__(self):
        if self.length < 0:
            raise ValueError("La longitud no puede ser negativa")
        if self.value < 0 or self.value >> self.length:
            raise ValueError(
                f"El valor {self.value} no cabe en {self.length} bits"
            )

    @classmethod
    def from_str(cls, bits: str) -> "Bits":
        validate_bit_string(bits)
        return cls(int(bits, 2) if bits else 0, len(bits))

    @classmethod
    def from_bytes(cls, data: bytes) -> "Bits":
        # Expansión MSB primero de cada byte
        return cls(int.from_bytes(data, "big"), 8 * len(data))

    @classmethod
    def zeros(cls, length: int) -> "Bits":
        return cls(0, length)

    def __len__(self) -> int:
        return self.length

    def __str__(self) -> str:
        return format(self.value, f"0{self.length}b") if self.length else ""

    def __xor__(self, other: "Bits") -> "Bits":
        if self.length != other.length:
            raise ValueError(
                f"Longitudes distintas en XOR: {self.length} y {other.length}"
            )
        return Bits(self.value ^ other.value, self.length)

    def concat(self, other: "Bits") -> "Bits":
        return Bits((self.value << other.length) | other.value, self.length + other.length)

    def split(self, head_length: int) -> Tuple["Bits", "Bits"]:
        tail_length = self.length - head_length
        if tail_length < 0:
            raise ValueError("Corte fuera de rango")
        tail_mask = (1 << tail_length) - 1
        return (
            Bits(self.value >> tail_length, head_length),
            Bits(self.value & tail_mask, tail_length),
        )

    def to_hex(self) -> str:
        width = (self.length + 3) // 4
        return format(self.value, f"0{width}x") if width else ""


@dataclass(frozen=True)
class IrreduciblePoly:
    """
    Polinomio de grado p sobre GF(2). `coefficients` guarda c_{p-1} ... c_0
    (el coeficiente principal es implícito).
    """

    degree: int
    coefficients: Bits

    def __post_init__(self):
        if self.degree < 1:
            raise ValueError("El grado debe ser positivo")
        if self.coefficients.length != self.degree:
            raise ValueError(
                f"Se esperaban {self.degree} coeficientes, hay {self.coefficients.length}"
            )

    @classmethod
    def from_int(cls, poly: int) -> "IrreduciblePoly":
        degree = poly.bit_length() - 1
        return cls(degree, Bits(poly ^ (1 << degree), degree))

    def as_int(self) -> int:
        return (1 << self.degree) | self.coefficients.value

    @property
    def feedback_mask(self) -> int:
        # bit i activo <=> c_i = 1
        return self.coefficients.value

    def __str__(self) -> str:
        terms = []
        for power in range(self.degree, -1, -1):
            if self.as_int() >> power & 1:
                terms.append("1" if power == 0 else "x" if power == 1 else f"x^{power}")
        return " + ".join(terms)


@dataclass
class ThreePartyKeys:
    p: int
    x_a: Bits
    x_b: Bits
    x_c: Bits
    y_a: Bits
    y_b: Bits
    y_c: Bits
    consumed: bool = False

    @classmethod
    def from_partner_keys(
        cls, x_b: Bits, y_b: Bits, x_c: Bits, y_c: Bits
    ) -> "ThreePartyKeys":
        """Construye el paquete de Alice a partir de las mitades de Bob y Charlie."""
        if x_b.length != x_c.length or y_b.length != y_c.length:
            raise ValueError("Las claves de Bob y Charlie tienen longitudes distintas")
        if y_b.length != 2 * x_b.length:
            raise ValueError("Las claves Y deben medir el doble que las claves X")
        return cls(
            p=x_b.length,
            x_a=x_b ^ x_c,
            x_b=x_b,
            x_c=x_c,
            y_a=y_b ^ y_c,
            y_b=y_b,
            y_c=y_c,
        )

    def mark_consumed(self) -> None:
        if self.consumed:
            raise OneTimeKeyError("El paquete de claves ya se usó para firmar")
        self.consumed = True


@dataclass(frozen=True)
class Signature:
    bits: Bits

    @property
    def p(self) -> int:
        return self.bits.length // 2

    def to_hex(self) -> str:
        return self.bits.to_hex()


@dataclass(frozen=True)
class CombinedKeys:
    k_x: Bits
    k_y: Bits


@dataclass(frozen=True)
class TieOrder:
    """
    Orden total para desempatar la mayoría. Los mensajes de `ranking` van
    primero, en ese orden; el resto sigue en orden lexicográfico de bytes.
    """

    ranking: Tuple[bytes, ...] = ()

    def rank_key(self, message: bytes) -> Tuple[int, int, bytes]:
        if message in self.ranking:
            return (0, self.ranking.index(message), b"")
        return (1, 0, message)


# Ronda de multidifusión planificada
@dataclass(frozen=True)
class RoundPlan:
    route: Route
    primary: int
    backups: Tuple[int, ...]

    @property
    def depth(self) -> int:
        return len(self.route)


@dataclass(frozen=True)
class BroadcastEntry:
    source: int
    message: bytes


@dataclass
class BroadcastList:
    owner: int
    route: Route
    entries: List[BroadcastEntry] = field(default_factory=list)

    def own_message(self) -> Optional[bytes]:
        for entry in self.entries:
            if entry.source == self.owner:
                return entry.message
        return None

    def messages_by_source(self) -> List[bytes]:
        return [entry.message for entry in sorted(self.entries, key=lambda e: e.source)]


@dataclass
class GatheringList:
    owner: int
    route: Route
    elements: List[bytes] = field(default_factory=list)


@dataclass
class RoundRecord:
    route: Route
    primary: int
    # forwarder -> mensaje que el forwarder aceptó del primario
    delivered: Dict[int, bytes] = field(default_factory=dict)


@dataclass(frozen=True)
class SignatureRecord:
    route: Route
    signer: int
    forwarder: int
    verifier: int
    attempt: int
    message: bytes
    signature: Signature


@dataclass
class BroadcastRecord:
    """Resultado acumulado de la fase de difusión (también si se aborta)."""

    lists: Dict[Tuple[int, Route], BroadcastList] = field(default_factory=dict)
    rounds: List[RoundRecord] = field(default_factory=list)
    signatures: List[SignatureRecord] = field(default_factory=list)
    # (ruta, forwarder, verifier) -> mensaje aceptado por el verifier
    forwarded: Dict[Tuple[Route, int, int], bytes] = field(default_factory=dict)
    qds_invocations: int = 0
    retries: int = 0
    forgery_attempts: int = 0

    def list_for(self, owner: int, route: Route) -> BroadcastList:
        key = (owner, route)
        if key not in self.lists:
            self.lists[key] = BroadcastList(owner=owner, route=route)
        return self.lists[key]

    def lists_for(self, owner: int) -> Dict[Route, BroadcastList]:
        return {
            route: broadcast_list
            for (list_owner, route), broadcast_list in self.lists.items()
            if list_owner == owner
        }


@dataclass(frozen=True)
class AttackContext:
    route: Route
    depth: int
    role: str
    actor: int
    counterpart: int
    # mensaje que un nodo honesto enviaría en esta posición
    consistent_message: bytes
    attempt: int = 0
    verifier: Optional[int] = None
    signed_messages_available: Tuple[Tuple[bytes, Signature], ...] = ()

    def describe(self) -> str:
        return f"{self.role} {self.actor} en {format_route(self.route)} -> {self.counterpart}"


@dataclass
class TreeNode:
    depth: int
    honest: bool
    honest_backups: int
    dishonest_backups: int
    left: Optional["TreeNode"] = None
    right: Optional["TreeNode"] = None
    # camino desde la raíz: "L" primario honesto, "R" deshonesto
    path: str = ""

    @property
    def balanced(self) -> bool:
        return self.honest_backups == self.dishonest_backups

    def iter_breadth_first(self):
        level: List["TreeNode"] = [self]
        while level:
            yield from level
            level = [
                child for node in level for child in (node.left, node.right) if child
            ]


@dataclass(frozen=True)
class SafePath:
    safe_node: TreeNode
    intermediate_node: TreeNode
    ending_node: TreeNode
    steps: Tuple[str, ...]
