from typing import List


class ScenarioError(ValueError):
    """Documento de escenario inválido. Conserva los diagnósticos por ruta de campo."""

    def __init__(self, diagnostics: List[str]):
        self.diagnostics = diagnostics
        super().__init__("; ".join(diagnostics))


class OneTimeKeyError(ValueError):
    pass


class LivenessAbort(ValueError):
    """Un bucle de reintentos superó el límite configurado."""


class KeyExhaustion(ValueError):
    """La reserva de claves de un turno de reenvío se agotó."""


class IncompleteRecordError(ValueError):
    pass
