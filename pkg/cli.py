"""Interface de linha de comando.

Comandos:
  test-single   teste de uma mudança (T_n) com bootstrap multiplicador
  test-multi    teste de múltiplas mudanças (T_{n,M}, varredura forward/backward)
  estimate      estimação WBS dos pontos de mudança
  simulate      experimentos Monte Carlo com cenários nomeados (CSV + manifesto JSON)
  diagnose      screening de heterocedasticidade (teste de variância + Higher Criticism)
  history       últimas execuções registradas no banco

Códigos de saída: 0 sucesso (independe de rejeitar ou não H0), 2 erro de uso,
3 erro nos dados, 4 degenerescência numérica.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Optional, Sequence

import pandas as pd

import config
from bootstrap import test_multi, test_single
from core_stats import build_gram, multi_scan, single_scan
from diagnostics import panel_heteroscedasticity_screen
from erros import ErroDados, ErroDegenerado, ErroDominio
from fluxos import semente_aleatoria
from ingestao import load_panel
from relatorio import FORMATOS_TABELA, agora_iso, escrever_relatorio, exportar_tabela, ler_relatorio, serializar
from simulate import (
    list_scenarios,
    parse_scenario,
    run_power_curve,
    run_rejection_experiment,
    run_size_experiment,
    run_wbs_experiment,
)
from wbs import WbsConfig, wbs_estimate

logger = logging.getLogger(__name__)

COMANDOS = ("test-single", "test-multi", "estimate", "simulate", "diagnose", "history")
_COM_ENTRADA = {"test-single", "test-multi", "estimate", "diagnose"}

SAIDA_OK = 0
SAIDA_USO = 2
SAIDA_DADOS = 3
SAIDA_DEGENERADO = 4

REPLICAS_WBS_EXPERIMENTO = 50


@dataclass(frozen=True)
class RunConfig:
    command: str
    alpha: Optional[float] = None
    bootstrap_reps: int = config.REPLICAS_BOOTSTRAP
    wbs_intervals: int = config.WBS_INTERVALOS
    wbs_reps: int = config.WBS_REPLICAS
    seed: Optional[int] = None
    input_path: Optional[str] = None
    output_path: Optional[str] = None
    threads: int = config.THREADS_PADRAO
    sep: str = ","
    scenario: Optional[str] = None
    reps: Optional[int] = None
    list_scenarios: bool = False
    profile: bool = False
    registrar: bool = config.REGISTRAR_EXECUCOES
    limit: int = 10

    def validar(self) -> "RunConfig":
        if self.command not in COMANDOS:
            raise ErroDominio(f"Comando desconhecido: {self.command!r}")
        if self.alpha is not None and not 0.0 < float(self.alpha) < 1.0:
            raise ErroDominio(f"--alpha deve estar em (0, 1); recebido {self.alpha}")
        for nome in ("bootstrap_reps", "wbs_intervals", "wbs_reps", "threads", "limit"):
            if int(getattr(self, nome)) < 1:
                raise ErroDominio(f"--{nome.replace('_', '-')} deve ser >= 1")
        if self.reps is not None and int(self.reps) < 1:
            raise ErroDominio("--reps deve ser >= 1")
        if self.seed is not None and int(self.seed) < 0:
            raise ErroDominio("--seed deve ser um inteiro não negativo")
        if self.command in _COM_ENTRADA and not self.input_path:
            raise ErroDominio(f"{self.command} exige --input")
        if self.command == "simulate" and not (self.scenario or self.list_scenarios):
            raise ErroDominio("simulate exige --scenario (ou --list-scenarios)")
        self._validar_saida()
        if self.alpha is None and self.command != "simulate":
            return replace(self, alpha=config.ALPHA_PADRAO)
        return self

    def _validar_saida(self) -> None:
        if not self.output_path or self.command == "history":
            return
        sufixo = Path(self.output_path).suffix.lower()
        if self.command == "simulate":
            aceitos = {"", *(f".{f}" for f in FORMATOS_TABELA)}
        else:
            aceitos = {"", ".json"}
        if sufixo not in aceitos:
            opcoes = ", ".join(sorted(a for a in aceitos if a))
            raise ErroDominio(f"--output com extensão {sufixo} não serve para {self.command}; use {opcoes}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        conhecidos = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in conhecidos})


# ---------------- Comandos ---------------- #

def _carregar(cfg: RunConfig):
    return load_panel(cfg.input_path, sep=cfg.sep)


def _caminho_perfil(cfg: RunConfig) -> Path:
    base = Path(cfg.output_path) if cfg.output_path else Path(f"{cfg.command}.json")
    return base.with_suffix(".profile.csv")


def _cmd_teste(cfg: RunConfig, tempos: dict) -> dict:
    t0 = time.perf_counter()
    X = _carregar(cfg)
    tempos["carga"] = time.perf_counter() - t0
    teste = test_single if cfg.command == "test-single" else test_multi
    relatorio = teste(X, alpha=cfg.alpha, M=cfg.bootstrap_reps, seed=cfg.seed, threads=cfg.threads)
    resultado = {"n": X.n, "p": X.p, **relatorio.to_dict()}
    if cfg.profile:
        gram = build_gram(X)
        if cfg.command == "test-single":
            perfil = single_scan(gram)
            tabela = perfil.to_frame()
            resultado["argmax"] = perfil.argmax
        else:
            _, frente, tras = multi_scan(gram)
            tabela = pd.concat([frente.to_frame(), tras.to_frame()], ignore_index=True)
        resultado["profile_path"] = str(exportar_tabela(tabela, _caminho_perfil(cfg)))
    return resultado


def _cmd_estimar(cfg: RunConfig, tempos: dict) -> dict:
    t0 = time.perf_counter()
    X = _carregar(cfg)
    tempos["carga"] = time.perf_counter() - t0
    wcfg = WbsConfig(N=cfg.wbs_intervals, R=cfg.wbs_reps, seed=cfg.seed)
    estimativa = wbs_estimate(X, wcfg, threads=cfg.threads)
    return {"n": X.n, "p": X.p, **estimativa.to_dict()}


def _cmd_diagnosticar(cfg: RunConfig, tempos: dict) -> dict:
    t0 = time.perf_counter()
    X = _carregar(cfg)
    tempos["carga"] = time.perf_counter() - t0
    tela = panel_heteroscedasticity_screen(X, alpha=cfg.alpha, seed=cfg.seed, threads=cfg.threads)
    return {"n": X.n, "p": X.p, **tela.to_dict()}


def _niveis(cfg: RunConfig) -> list[float]:
    return [cfg.alpha] if cfg.alpha is not None else list(config.ALPHAS_PADRAO)


def _cmd_simular(cfg: RunConfig, tempos: dict) -> dict:
    cenario = parse_scenario(cfg.scenario)
    spec = cenario.spec
    if cenario.experiment == "wbs":
        reps = cfg.reps or REPLICAS_WBS_EXPERIMENTO
        wcfg = WbsConfig(N=cfg.wbs_intervals, R=cfg.wbs_reps)
        resultado_wbs = run_wbs_experiment(spec, wcfg, reps=reps, seed=cfg.seed, threads=cfg.threads)
        tabela = resultado_wbs.to_frame()
        tabela.insert(0, "scenario", cenario.name)
        resumo = resultado_wbs.to_dict()
    else:
        reps = cfg.reps or config.REPLICAS_EXPERIMENTO
        comum = dict(reps=reps, M=cfg.bootstrap_reps, seed=cfg.seed, statistic=cenario.statistic, threads=cfg.threads)
        if cenario.experiment == "size":
            tabela = run_size_experiment(spec, _niveis(cfg), **comum)
        elif cenario.experiment == "rejection":
            tabela = run_rejection_experiment(spec, _niveis(cfg), **comum)
        else:
            tabela = run_power_curve(spec, cenario.deltas, cfg.alpha or config.ALPHA_PADRAO, **comum)
        resumo = {"rows": tabela.to_dict(orient="records")}
    destino = Path(cfg.output_path) if cfg.output_path else Path(f"{cenario.name}.csv")
    exportar_tabela(tabela, destino)
    return {
        "scenario": spec.to_dict(),
        "experiment": cenario.experiment,
        "statistic": cenario.statistic,
        "reps": reps,
        "table_path": str(destino),
        **resumo,
    }


_DESPACHO = {
    "test-single": _cmd_teste,
    "test-multi": _cmd_teste,
    "estimate": _cmd_estimar,
    "diagnose": _cmd_diagnosticar,
    "simulate": _cmd_simular,
}


def _historico(cfg: RunConfig) -> int:
    from database import init_db, listar_execucoes

    init_db()
    for e in listar_execucoes(limit=cfg.limit):
        print(f"{e['id']:>5}  {e['created_at']}  {e['comando']:<12} semente={e['semente']}  v{e['versao']}")
    return SAIDA_OK


def _registrar(cfg: RunConfig, resultado: dict) -> None:
    try:
        from database import init_db, salvar_execucao

        init_db()
        salvar_execucao(comando=cfg.command, semente=cfg.seed, configuracao=cfg.to_dict(), resultado=resultado)
    except Exception as exc:  # melhor esforço
        logger.warning("Execução não registrada: %s", exc)


def _caminho_relatorio(cfg: RunConfig, resultado: dict) -> Optional[Path]:
    if cfg.command == "simulate":
        tabela = Path(resultado["table_path"])
        return tabela.with_name(tabela.name + ".manifest.json")
    return Path(cfg.output_path) if cfg.output_path else None


def _executar_comando(cfg: RunConfig) -> dict:
    inicio = time.perf_counter()
    tempos: dict = {}
    resultado = _DESPACHO[cfg.command](cfg, tempos)
    tempos["total"] = time.perf_counter() - inicio

    relatorio = {
        "command": cfg.command,
        "config": cfg.to_dict(),
        "result": resultado,
        "library_version": config.VERSAO,
        "timings": tempos,
        "created_at": agora_iso(),
    }
    destino = _caminho_relatorio(cfg, resultado)
    if destino is None:
        print(serializar(relatorio))
    else:
        escrever_relatorio(destino, relatorio)
        logger.info("Relatório gravado em %s", destino)
    return resultado


def run(cfg: RunConfig) -> int:
    """Executa um comando e grava o relatório JSON; retorna o código de saída."""
    if cfg.command == "history":
        return _historico(cfg)
    if cfg.command == "simulate" and cfg.list_scenarios:
        for nome in list_scenarios():
            print(nome)
        return SAIDA_OK
    if cfg.seed is None:
        cfg = replace(cfg, seed=semente_aleatoria())

    try:
        resultado = _executar_comando(cfg)
    except ErroDegenerado as exc:
        logger.error("Degenerescência numérica: %s", exc)
        print(f"Erro numérico: {exc}", file=sys.stderr)
        return SAIDA_DEGENERADO
    except (ErroDados, ErroDominio) as exc:
        logger.error("Erro nos dados: %s", exc)
        print(f"Erro nos dados: {exc}", file=sys.stderr)
        return SAIDA_DADOS
    except OSError as exc:
        logger.error("Falha de leitura ou gravação: %s", exc)
        print(f"Erro de arquivo: {exc}", file=sys.stderr)
        return SAIDA_DADOS
    if cfg.registrar:
        _registrar(cfg, resultado)
    return SAIDA_OK


# ---------------- Argumentos ---------------- #

def _montar_parser() -> argparse.ArgumentParser:
    comum = argparse.ArgumentParser(add_help=False)
    comum.add_argument("--input", dest="input_path", help="CSV/TXT/XLSX com o painel (linhas = tempo)")
    comum.add_argument("--output", dest="output_path", help="arquivo de saída (JSON; CSV em simulate)")
    comum.add_argument("--sep", default=",", help="separador do CSV (';' aceita vírgula decimal)")
    comum.add_argument("--alpha", type=float, default=None,
                       help="nível do teste; em simulate substitui os níveis de CPD_ALPHAS")
    comum.add_argument("--bootstrap-reps", type=int, default=config.REPLICAS_BOOTSTRAP)
    comum.add_argument("--seed", type=int, default=None)
    comum.add_argument("--threads", type=int, default=config.THREADS_PADRAO)
    comum.add_argument("--wbs-intervals", type=int, default=config.WBS_INTERVALOS)
    comum.add_argument("--wbs-reps", type=int, default=config.WBS_REPLICAS)
    comum.add_argument("--registrar", action="store_true", default=config.REGISTRAR_EXECUCOES,
                       help="registra a execução no banco (DATABASE_URL)")
    comum.add_argument("--from-report", dest="from_report",
                       help="reexecuta a configuração embutida em um relatório JSON")

    parser = argparse.ArgumentParser(prog="cli.py", description="Detecção de mudanças na média sob heterocedasticidade")
    sub = parser.add_subparsers(dest="command", required=True)
    for nome in ("test-single", "test-multi"):
        p = sub.add_parser(nome, parents=[comum])
        p.add_argument("--profile", action="store_true", help="exporta o perfil da varredura em CSV")
    sub.add_parser("estimate", parents=[comum])
    sub.add_parser("diagnose", parents=[comum])
    p = sub.add_parser("simulate", parents=[comum])
    p.add_argument("--scenario")
    p.add_argument("--reps", type=int, default=None)
    p.add_argument("--list-scenarios", action="store_true")
    p = sub.add_parser("history", parents=[comum])
    p.add_argument("--limit", type=int, default=10)
    return parser


def _config_de_args(args: argparse.Namespace) -> RunConfig:
    if getattr(args, "from_report", None):
        try:
            salvo = ler_relatorio(args.from_report)["config"]
        except (OSError, KeyError, json.JSONDecodeError) as exc:
            raise ErroDominio(f"Relatório inválido em --from-report: {exc}")
        cfg = RunConfig.from_dict(salvo)
        if args.output_path:
            cfg = replace(cfg, output_path=args.output_path)
        return cfg.validar()
    valores = {k: v for k, v in vars(args).items() if k in {f.name for f in fields(RunConfig)}}
    return RunConfig(**valores).validar()


def executar(argv: Optional[Sequence[str]] = None) -> int:
    parser = _montar_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse encerra com 2 em erro de uso e 0 em --help
        return int(exc.code or 0)
    logging.basicConfig(
        level=getattr(logging, config.NIVEL_LOG, logging.WARNING),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = _config_de_args(args)
    except (ErroDominio, ValueError, TypeError) as exc:
        print(f"Erro de uso: {exc}", file=sys.stderr)
        return SAIDA_USO
    return run(cfg)


if __name__ == "__main__":  # Execução direta
    raise SystemExit(executar())
