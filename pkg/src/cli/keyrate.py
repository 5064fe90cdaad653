from pathlib import Path
from typing import Optional
import click
from pydantic import ValidationError
from src.cli.common import emit_document, fail
from src.schemas.schemas import KeyRateRequest
from src.services.keyrate_services import KeyRateService
from src.utils.validator import validation_diagnostics


@click.command("keyrate")
@click.argument("params_path", type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--output", type=click.Path(dir_okay=False))
def keyrate_command(params_path: str, output: Optional[str]) -> None:
    """
    Calcula la longitud de clave segura a partir de parámetros y recuentos.

    Args:
        params_path (str): Documento JSON {"params": ..., "counts": ...}
    """
    try:
        request = KeyRateRequest.model_validate_json(
            Path(params_path).read_text(encoding="utf-8")
        )
    except ValidationError as e:
        for line in validation_diagnostics(e):
            click.echo(line, err=True)
        fail(f"parámetros inválidos: {params_path}")

    result = KeyRateService.evaluate(request.params, request.counts)
    emit_document(result, output)
    click.echo(f"l = {result.ell} bits (phi = {result.phi1_zz_upper:.6g})", err=True)
    for line in result.diagnostics:
        click.echo(f"  {line}", err=True)
