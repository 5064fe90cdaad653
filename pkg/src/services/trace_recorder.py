import hashlib
from typing import List, Optional
from src.schemas.schemas import TraceEvent, TraceKind
from src.utils.validator import Route, format_route


def message_digest(message: bytes) -> str:
    return hashlib.sha256(message).hexdigest()


class TraceRecorder:
    """Registro ordenado de eventos de una ejecución."""

    def __init__(self, enabled: bool = True):
        self.enabled = enabled
        self.events: List[TraceEvent] = []
        self._seq = 0

    def emit(
        self,
        kind: TraceKind,
        route: Route,
        actor: int,
        counterpart: Optional[int] = None,
        verifier: Optional[int] = None,
        message: Optional[bytes] = None,
        verdict: Optional[bool] = None,
    ) -> None:
        seq = self._seq
        self._seq += 1
        if not self.enabled:
            return
        self.events.append(
            TraceEvent(
                seq=seq,
                kind=kind,
                depth=len(route),
                route=format_route(route),
                actor=actor,
                counterpart=counterpart,
                verifier=verifier,
                message_digest=None if message is None else message_digest(message),
                verdict=verdict,
            )
        )
