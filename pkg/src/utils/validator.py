from typing import Any, Dict, List, Tuple, Union

Route = Tuple[int, ...]

ROUTE_SEPARATOR = ">"


def parse_route(value: Union[str, Route, list]) -> Route:
    """
    Convierte una ruta escrita como "0>2>3" en una tupla de nodos.

    Raises:
        ValueError: Si la ruta está vacía, no es numérica o repite nodos
    """
    if isinstance(value, str):
        parts = value.split(ROUTE_SEPARATOR)
        if any(not part.strip().isdigit() for part in parts):
            raise ValueError(f"Ruta mal formada: '{value}'")
        route = tuple(int(part) for part in parts)
    else:
        route = tuple(int(node) for node in value)

    if not route:
        raise ValueError("La ruta no puede estar vacía")
    if len(set(route)) != len(route):
        raise ValueError(f"La ruta repite nodos: '{format_route(route)}'")
    return route


def format_route(route: Route) -> str:
    return ROUTE_SEPARATOR.join(str(node) for node in route)


def parse_message(value: Any) -> bytes:
    """
    Acepta un mensaje como cadena UTF-8 o como {"hex": "..."}.
    """
    if isinstance(value, (bytes, bytearray)):
        return bytes(value)
    if isinstance(value, str):
        return value.encode("utf-8")
    if isinstance(value, dict):
        if set(value) != {"hex"}:
            raise ValueError('Un mensaje binario debe tener la forma {"hex": "..."}')
        try:
            return bytes.fromhex(value["hex"])
        except (TypeError, ValueError):
            raise ValueError(f"Hexadecimal inválido: '{value['hex']}'")
    raise ValueError("El mensaje debe ser una cadena o un objeto {\"hex\": ...}")


def dump_message(message: bytes) -> Union[str, Dict[str, str]]:
    try:
        return message.decode("utf-8")
    except UnicodeDecodeError:
        return {"hex": message.hex()}


def validate_bit_string(bits: str) -> str:
    if any(char not in "01" for char in bits):
        raise ValueError(f"Cadena de bits inválida: '{bits}'")
    return bits


def validation_diagnostics(error: Any) -> List[str]:
    """Una línea "campo.ruta: mensaje" por cada error de pydantic."""
    lines = []
    for issue in error.errors():
        location = ".".join(str(part) for part in issue["loc"]) or "<documento>"
        lines.append(f"{location}: {issue['msg']}")
    return lines
