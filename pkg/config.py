"""Configurações carregadas de variáveis de ambiente (.env) com defaults seguros.

Exponha constantes para uso em toda a biblioteca (testes, WBS, simulações e CLI)
sem acoplar os módulos numéricos à camada de banco.
"""

from __future__ import annotations

import os
import sys
import json
from pathlib import Path
from typing import List

VERSAO = "0.3.0"


# --- Carregamento do .env (compatível com PyInstaller/auto-py-to-exe) ---
def _candidatos_env() -> list[Path]:
    candidatos = [Path.cwd() / ".env"]
    if getattr(sys, "frozen", False):
        candidatos.append(Path(sys.executable).resolve().parent / ".env")
    candidatos.append(Path(__file__).resolve().parent / ".env")
    base = getattr(sys, "_MEIPASS", None)
    if base:
        candidatos.append(Path(base) / ".env")
    return candidatos


def _load_env_if_possible() -> None:
    try:
        from dotenv import load_dotenv  # type: ignore
    except Exception:
        return
    # Primeiro .env encontrado vence; variáveis já definidas no ambiente têm prioridade
    for caminho in _candidatos_env():
        try:
            if caminho.is_file() and load_dotenv(dotenv_path=caminho, override=False):
                return
        except Exception:
            continue


_load_env_if_possible()


def _parse_env_list(var_name: str, default: list[str]) -> list[str]:
    """Lê uma lista do ambiente por CSV simples ou JSON.

    Prioridades:
      1) VAR_NAME (se iniciar com '[' e terminar com ']': tenta JSON; caso contrário, CSV)
      2) VAR_NAME_JSON (JSON estrito)
      3) default
    """
    raw = os.getenv(var_name)
    if raw is None:
        raw = os.getenv(f"{var_name}_JSON")
        if raw is None:
            return list(default)
        try:
            data = json.loads(raw)
        except Exception:
            return list(default)
        if isinstance(data, list):
            return [str(x).strip() for x in data if str(x).strip()]
        return list(default)

    s = raw.strip()
    if s.startswith("[") and s.endswith("]"):
        try:
            data = json.loads(s)
            if isinstance(data, list):
                return [str(x).strip() for x in data if str(x).strip()]
        except Exception:
            pass
    return [p.strip() for p in s.split(",") if p.strip()]


def _env_float(var_name: str, default: float) -> float:
    try:
        return float(os.getenv(var_name, "").strip() or default)
    except ValueError:
        return default


def _env_int(var_name: str, default: int, minimo: int = 1) -> int:
    try:
        valor = int(os.getenv(var_name, "").strip() or default)
    except ValueError:
        return default
    return valor if valor >= minimo else default


def _env_bool(var_name: str, default: bool = False) -> bool:
    raw = (os.getenv(var_name) or "").strip().lower()
    if not raw:
        return default
    return raw in {"1", "true", "sim", "yes", "on"}


def _parse_alphas(valores: list[str], default: list[float]) -> list[float]:
    out: list[float] = []
    for v in valores:
        try:
            a = float(v)
        except ValueError:
            return list(default)
        if not 0.0 < a < 1.0:
            return list(default)
        out.append(a)
    return out or list(default)


ALPHA_PADRAO: float = _env_float("CPD_ALPHA", 0.05)
if not 0.0 < ALPHA_PADRAO < 1.0:
    ALPHA_PADRAO = 0.05

# Níveis usados pelos experimentos de tamanho
ALPHAS_PADRAO: List[float] = _parse_alphas(_parse_env_list("CPD_ALPHAS", ["0.05", "0.1"]), [0.05, 0.1])

REPLICAS_BOOTSTRAP: int = _env_int("CPD_BOOTSTRAP_REPS", 200)
REPLICAS_ACEITACAO: int = 1000
REPLICAS_MINIMAS_RECOMENDADAS: int = 50

WBS_INTERVALOS: int = _env_int("CPD_WBS_N", 1000)
WBS_REPLICAS: int = _env_int("CPD_WBS_R", 200)
WBS_QUANTIL: float = 0.95
WBS_SEGMENTO_MINIMO: int = 4

# Réplicas Monte Carlo por cenário
REPLICAS_EXPERIMENTO: int = _env_int("CPD_REPS", 500)

HC_SORTEIOS_NULOS: int = _env_int("CPD_HC_DRAWS", 10_000)

THREADS_PADRAO: int = _env_int("CPD_THREADS", os.cpu_count() or 1)

DATABASE_URL: str = os.getenv("DATABASE_URL", "sqlite:///execucoes.db")
REGISTRAR_EXECUCOES: bool = _env_bool("CPD_REGISTRAR", False)

NIVEL_LOG: str = (os.getenv("CPD_LOG_LEVEL") or "WARNING").strip().upper()
