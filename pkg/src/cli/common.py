from typing import NoReturn, Optional
import click
from pydantic import BaseModel

# Códigos de salida de la CLI
EXIT_OK = 0
EXIT_CONFIG_ERROR = 2
EXIT_LIVENESS_ABORT = 3
EXIT_KEY_EXHAUSTION = 4

VERDICT_EXIT_CODES = {
    "completed": EXIT_OK,
    "aborted-liveness": EXIT_LIVENESS_ABORT,
    "aborted-keys": EXIT_KEY_EXHAUSTION,
}


def emit_document(document: BaseModel, output: Optional[str] = None) -> None:
    """Escribe el documento JSON en `output` o en stdout."""
    text = document.model_dump_json(indent=2) + "\n"
    if output:
        with open(output, "w", encoding="utf-8") as handle:
            handle.write(text)
    else:
        click.echo(text, nl=False)


def fail(message: str, code: int = EXIT_CONFIG_ERROR) -> NoReturn:
    click.echo(f"Error: {message}", err=True)
    raise click.exceptions.Exit(code)
