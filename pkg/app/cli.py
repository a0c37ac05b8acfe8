"""
Interface de linha de comando do kinlab.

Subcomandos: geometry-info, exit-sample, singular-sample, cover-verify,
cutoff-verify, measure-verify, transport-run e run (suíte completa).
Códigos de saída: 0 tudo aprovado, 2 alguma verificação falhou,
3 orçamento de tempo esgotado, 64 configuração inválida.
"""
import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from app.application.dtos import ExperimentConfig
from app.core import dependencies
from app.core.exceptions import AppError, CheckFailed, ConfigInvalid
from app.core.logging_config import setup_logging
from app.domain.models import Report
from app.infrastructure.sample_writer import ReportWriter, to_jsonable
from app.infrastructure.shapes import GALLERY_ALIASES

logger = logging.getLogger(__name__)

DEFAULT_DOMAIN = "graph-bump"

# subcomando -> módulos executados
VERIFY_MODULES = {
    "cover-verify": ["cover"],
    "cutoff-verify": ["cutoff"],
    "measure-verify": ["measure"],
    "transport-run": ["scenario"],
}


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="Arquivo JSON de configuração do experimento")
    parser.add_argument("--domain", help="Domínio da galeria (ball, bump, slab ou nome longo)")
    parser.add_argument("--seed", type=int, help="Semente (substitui a da configuração)")
    parser.add_argument("--out", help="Diretório de saída, ou caminho de um arquivo .json de relatório")
    parser.add_argument("--threads", type=int, help="Workers para lotes de amostras")
    parser.add_argument("--budget-seconds", type=float, help="Orçamento de tempo de parede")
    parser.add_argument("--log-level", help="Nível de log")


def build_parser() -> argparse.ArgumentParser:
    """Parser com todos os subcomandos."""
    parser = argparse.ArgumentParser(prog="kinlab", description="Verificação numérica de geometria cinética")
    sub = parser.add_subparsers(dest="command", required=True)

    _add_common(sub.add_parser("geometry-info", help="Resumo da decomposição em cartas"))

    exit_sample = sub.add_parser("exit-sample", help="Amostra tempos e pontos de saída")
    _add_common(exit_sample)
    exit_sample.add_argument("--n", type=int, default=1000)

    singular = sub.add_parser("singular-sample", help="Amostra o conjunto singular")
    _add_common(singular)
    singular.add_argument("--n", type=int)

    for name in ("cover-verify", "cutoff-verify"):
        verify = sub.add_parser(name, help=f"Verificações do módulo {VERIFY_MODULES[name][0]}")
        _add_common(verify)
        verify.add_argument("--eps", type=float, help="Maior ε da escada")
        verify.add_argument("--ladder", type=int, default=3, help="Níveis da escada (ε, ε/2, ε/4, ...)")
        verify.add_argument("--n", type=int, help="Amostras de Monte Carlo")

    measure = sub.add_parser("measure-verify", help="Verificações da mudança de variáveis")
    _add_common(measure)
    measure.add_argument("--n", type=int)

    transport = sub.add_parser("transport-run", help="Verificações de um cenário de transporte")
    _add_common(transport)
    transport.add_argument("--scenario", help="Cenário da galeria")
    transport.add_argument("--t", type=float, help="Tempo de avaliação")
    transport.add_argument("--depth", type=int, help="Profundidade do modo difuso")
    transport.add_argument("--n", type=int, help="Pontos de avaliação")

    _add_common(sub.add_parser("run", help="Suíte completa conforme a configuração"))
    return parser


def _split_out(out: Optional[str]) -> Tuple[Optional[str], Optional[str]]:
    """--out pode ser um diretório ou um arquivo .json dentro dele."""
    if not out:
        return None, None
    path = Path(out)
    if path.suffix == ".json":
        return str(path.parent), path.name
    return str(path), None


def load_config(args: argparse.Namespace) -> Tuple[ExperimentConfig, Optional[str]]:
    """
    Monta a configuração a partir do arquivo e das opções da linha de comando.

    Returns:
        Configuração validada e nome opcional do arquivo de relatório

    Raises:
        ConfigInvalid: Se o arquivo ou as opções forem inválidos
    """
    if args.config:
        data: Dict[str, Any] = ExperimentConfig.from_file(args.config).model_dump(mode="json")
    else:
        data = {"domain": {"kind": DEFAULT_DOMAIN}}

    if args.domain:
        kind = GALLERY_ALIASES.get(args.domain)
        if kind is None:
            raise ConfigInvalid(f"Domínio desconhecido: {args.domain}")
        if data["domain"].get("kind") != kind:
            data["domain"] = {"kind": kind}

    output_dir, report_name = _split_out(args.out)
    for key, value in (("seed", args.seed), ("threads", args.threads),
                       ("budget_seconds", args.budget_seconds), ("output_dir", output_dir)):
        if value is not None:
            data[key] = value

    command = args.command
    if command in VERIFY_MODULES:
        data["modules"] = VERIFY_MODULES[command]
    n = getattr(args, "n", None)
    budgets = data.setdefault("budgets", {})
    if command in ("cover-verify", "cutoff-verify"):
        if args.eps is not None:
            if args.ladder < 1:
                raise ConfigInvalid("--ladder deve ser >= 1")
            data.setdefault("ladders", {})["eps"] = [args.eps / 2 ** i for i in range(args.ladder)]
        if n is not None:
            budgets["cover" if command == "cover-verify" else "cutoff"] = n
    elif command == "singular-sample" and n is not None:
        budgets["singular"] = n
    elif command == "measure-verify" and n is not None:
        budgets["measure"] = n
    elif command == "transport-run":
        transport = data.setdefault("transport", {})
        for key in ("scenario", "t", "depth"):
            if getattr(args, key) is not None:
                transport[key] = getattr(args, key)
        if n is not None:
            budgets["transport_points"] = n

    return ExperimentConfig.parse(data), report_name


def _emit(payload: Dict[str, Any]) -> None:
    print(json.dumps(to_jsonable(payload), indent=2, sort_keys=True, ensure_ascii=False))


def _report_summary(report: Report) -> Dict[str, Any]:
    return {
        "run_id": report.run_id,
        "seed": report.seed,
        "passed": report.passed,
        "checks": [{"name": c.name, "passed": c.passed, "estimate": c.estimate} for c in report.checks],
    }


def execute(args: argparse.Namespace) -> int:
    """
    Executa um subcomando já interpretado.

    Raises:
        AppError: Erros da aplicação (mapeados para códigos de saída em main)
    """
    config, report_name = load_config(args)
    command = args.command

    if command == "geometry-info":
        info = dependencies.get_geometry_info_use_case().execute(config)
        payload = {"seed": config.seed, "config": config.echo(), "geometry": info.model_dump()}
        if config.output_dir:
            ReportWriter(config.output_dir).write_json(report_name or "geometry_info.json", payload)
        _emit(payload)
        return 0

    if command == "exit-sample":
        _emit(dependencies.get_exit_sample_use_case().execute(config, args.n))
        return 0

    if command == "singular-sample":
        _emit(dependencies.get_singular_sample_use_case().execute(config))
        return 0

    report = dependencies.get_run_suite_use_case().execute(config, report_name=report_name or "report.json")
    _emit(_report_summary(report))
    if not report.passed:
        failed = [c.name for c in report.checks if not c.passed]
        raise CheckFailed(f"{len(failed)} verificação(ões) falharam: {', '.join(failed)}")
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    """Ponto de entrada do console script `kinlab`."""
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level, sys.stderr)
    try:
        return execute(args)
    except AppError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
