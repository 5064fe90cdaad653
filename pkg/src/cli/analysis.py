from pathlib import Path
from typing import List, Optional, Tuple
import click
from pydantic import BaseModel, ValidationError
from src.cli.common import emit_document, fail
from src.schemas.schemas import (
    AttackDemoReport,
    ICVerdict,
    Lemma1Violation,
    RunReport,
    ScenarioConfig,
)
from src.services.adversary_services import AdversaryService
from src.services.analysis_services import SEARCH_FAMILIES, AnalysisService
from src.services.harness_services import HarnessService
from src.utils.exceptions import ScenarioError


class AuditDocument(BaseModel):
    verdict: ICVerdict
    lemma1_violations: List[Lemma1Violation]


@click.command("analyze")
@click.argument("report_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--audit", is_flag=True, help="Incluye la auditoría de consistencia.")
@click.option("-o", "--output", type=click.Path(dir_okay=False))
def analyze_command(
    report_path: str, config_path: Optional[str], audit: bool, output: Optional[str]
) -> None:
    """
    Evalúa IC1/IC2 sobre un RunReport.

    Args:
        report_path (str): Informe producido por `run`
        config_path (str): Escenario original; opcional
        audit (bool): Añadir las violaciones de consistencia A -> B -> C
    """
    try:
        report = RunReport.model_validate_json(Path(report_path).read_text(encoding="utf-8"))
        config: Optional[ScenarioConfig] = None
        if config_path:
            config = HarnessService.load_scenario_file(config_path)
    except ValidationError as e:
        fail(f"informe inválido: {e.error_count()} errores")
    except ScenarioError as e:
        fail(str(e))

    verdict = AnalysisService.check_ic(report, config)
    if audit:
        emit_document(
            AuditDocument(verdict=verdict, lemma1_violations=AnalysisService.audit_lemma1(report)),
            output,
        )
    else:
        emit_document(verdict, output)
    click.echo(f"IC1: {verdict.ic1.value}; IC2: {verdict.ic2.value}", err=True)


@click.command("search")
@click.option("--n", "n", type=int, required=True)
@click.option("--f", "f", type=int, required=True)
@click.option("--alphabet", default="m1,m2", show_default=True, help="Mensajes separados por comas.")
@click.option("--budget", type=int, default=None, help="Candidatos máximos.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option(
    "--family",
    "families",
    multiple=True,
    type=click.Choice(SEARCH_FAMILIES),
    help="Familia de estrategias; repetible.",
)
@click.option("--workers", type=int, default=None)
@click.option("-o", "--output", type=click.Path(dir_okay=False))
def search_command(
    n: int,
    f: int,
    alphabet: str,
    budget: Optional[int],
    seed: int,
    families: Tuple[str, ...],
    workers: Optional[int],
    output: Optional[str],
) -> None:
    """Búsqueda acotada de estrategias deshonestas que rompan IC1/IC2."""
    messages = [item.strip().encode("utf-8") for item in alphabet.split(",") if item.strip()]
    try:
        report = AnalysisService.strategy_search(
            n,
            f,
            alphabet=messages,
            families=families or SEARCH_FAMILIES,
            budget=budget,
            seed=seed,
            workers=workers,
        )
    except ValueError as e:
        fail(str(e))

    emit_document(report, output)
    click.echo(
        f"Evaluados: {report.evaluated}; violaciones: {report.violations}; "
        f"abortados: {report.aborted}",
        err=True,
    )


@click.command("attack-demo")
@click.option("--f", "f", type=int, default=2, show_default=True)
@click.option("--prefer", type=click.Choice(["m1", "m2"]), default="m2", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("-o", "--output", type=click.Path(dir_okay=False))
def attack_demo_command(f: int, prefer: str, seed: int, output: Optional[str]) -> None:
    """
    Genera y ejecuta el ataque de colusión con n = 2f, donde el desempate
    favorece `prefer`.
    """
    other = "m1" if prefer == "m2" else "m2"
    try:
        scenario = AdversaryService.scripted_attack_n_eq_2f(
            f, tie_order=[prefer, other], seed=seed
        )
    except ValueError as e:
        fail(str(e))

    report = HarnessService.run(scenario, collect_trace=False)
    verdict = AnalysisService.check_ic(report, scenario)
    emit_document(
        AttackDemoReport(
            scenario=scenario,
            verdict=verdict,
            violation_found=verdict.violated,
            outputs=report.outputs,
        ),
        output,
    )
    for witness in verdict.witnesses:
        click.echo(
            f"Teniente honesto {witness.node} decide {witness.output!r}, "
            f"el primario envió {verdict.expected!r}",
            err=True,
        )
