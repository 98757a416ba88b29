"""Saída de relatórios (JSON) e tabelas de experimentos (CSV, XLSX ou TXT)."""

from __future__ import annotations

import json
import math
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from erros import ErroDominio

FORMATOS_TABELA = ("csv", "xlsx", "txt")


def _para_json(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _para_json(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_para_json(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _para_json(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, pd.DataFrame):
        return _para_json(obj.to_dict(orient="records"))
    if isinstance(obj, Path):
        return str(obj)
    return obj


def serializar(payload: dict) -> str:
    return json.dumps(_para_json(payload), sort_keys=True, indent=2, ensure_ascii=False)


def escrever_relatorio(path, payload: dict) -> Path:
    """Grava o relatório JSON (chaves ordenadas; tipos numpy convertidos)."""
    caminho = Path(path)
    caminho.parent.mkdir(parents=True, exist_ok=True)
    caminho.write_text(serializar(payload) + "\n", encoding="utf-8")
    return caminho


def ler_relatorio(path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def agora_iso() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")



def exportar_tabela(df: pd.DataFrame, caminho, formato: str | None = None) -> Path:
    """Exporta uma tabela; o formato vem da extensão quando não informado."""
    caminho = Path(caminho)
    formato = (formato or caminho.suffix.lstrip(".") or "csv").lower()
    if formato not in FORMATOS_TABELA:
        raise ErroDominio(f"Formato não suportado: {formato}. Use csv, xlsx ou txt.")
    caminho.parent.mkdir(parents=True, exist_ok=True)
    if formato == "csv":
        df.to_csv(caminho, index=False, float_format="%.17g")
    elif formato == "xlsx":
        from openpyxl import Workbook

        wb = Workbook()
        ws = wb.active
        ws.append([str(c) for c in df.columns])
        for registro in df.itertuples(index=False, name=None):
            ws.append([_para_json(v) for v in registro])
        wb.save(caminho)
    else:
        with open(caminho, "w", encoding="utf-8") as f:
            f.write("\t".join(str(c) for c in df.columns) + "\n")
            for registro in df.itertuples(index=False, name=None):
                f.write("\t".join("" if v is None else str(v) for v in registro) + "\n")
    return caminho
