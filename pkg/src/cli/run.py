from typing import Optional
import click
from src.cli.common import VERDICT_EXIT_CODES, emit_document, fail
from src.config import Settings
from src.services.consensus_services import ConsensusService
from src.services.harness_services import HarnessService
from src.utils.exceptions import ScenarioError


@click.command("run")
@click.argument("config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--trace", "trace_path", type=click.Path(dir_okay=False), help="Traza JSON lines.")
@click.option("-o", "--output", type=click.Path(dir_okay=False), help="Informe JSON.")
@click.option("--random-primary", is_flag=True, help="Sortea el primario inicial con la semilla.")
def run_command(
    config_path: str, trace_path: Optional[str], output: Optional[str], random_primary: bool
) -> None:
    """
    Ejecuta un escenario y emite su RunReport.

    Args:
        config_path (str): Documento JSON del escenario
        trace_path (str): Fichero donde escribir la traza
        output (str): Fichero del informe; por defecto stdout
        random_primary (bool): Sortear el primario inicial
    """
    try:
        config = HarnessService.load_scenario_file(config_path)
        seed = Settings().SEED
        if seed is not None:
            config = HarnessService.with_overrides(config, seed=seed)
        if random_primary:
            primary = ConsensusService.draw_initial_primary(config.n, config.seed)
            config = HarnessService.with_overrides(config, initial_primary=primary)
    except ScenarioError as e:
        for line in e.diagnostics:
            click.echo(line, err=True)
        fail(f"escenario inválido: {config_path}")

    report = HarnessService.run(config)
    emit_document(report, output)
    if trace_path:
        with open(trace_path, "w", encoding="utf-8") as sink:
            HarnessService.emit_trace(report, sink)

    click.echo(
        f"Veredicto: {report.verdict}; instancias QDS: {report.qds_invocations}; "
        f"reintentos: {report.retries}",
        err=True,
    )
    for node_output in report.outputs:
        mark = "" if node_output.honest else " (deshonesto)"
        click.echo(f"  nodo {node_output.node}{mark}: {node_output.message!r}", err=True)
    raise click.exceptions.Exit(VERDICT_EXIT_CODES[report.verdict])


@click.command("complexity")
@click.option("--n", "n", type=int, required=True)
@click.option("--f", "f", type=int, required=True)
def complexity_command(n: int, f: int) -> None:
    """Número de instancias QDS de una ejecución sin reintentos."""
    try:
        click.echo(HarnessService.complexity(n, f))
    except ValueError as e:
        fail(str(e))
