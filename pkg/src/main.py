import logging
from typing import Optional
import click
from src.config import settings
from src.cli.analysis import analyze_command, attack_demo_command, search_command
from src.cli.keyrate import keyrate_command
from src.cli.run import complexity_command, run_command


@click.group(name="qba")
@click.option("--log-level", default=None, help="Nivel de logging (por defecto QBA_LOG_LEVEL).")
@click.version_option("0.1.0", prog_name="qba")
def cli(log_level: Optional[str]) -> None:
    """Simulador de acuerdo bizantino con firmas digitales cuánticas."""
    # Los registros van a stderr; stdout queda para el documento JSON
    logging.basicConfig(
        level=(log_level or settings.LOG_LEVEL).upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


cli.add_command(run_command)
cli.add_command(complexity_command)
cli.add_command(analyze_command)
cli.add_command(search_command)
cli.add_command(attack_demo_command)
cli.add_command(keyrate_command)

if __name__ == "__main__":
    cli()
