"""Leitura e gravação de painéis de dados (linhas = tempo/locus, colunas = coordenadas).

Formatos aceitos:
 - CSV/TXT com separador ``,`` (padrão) ou ``;`` (aceita vírgula decimal, ex.: ``1.234,56``);
 - XLSX (primeira planilha, via openpyxl).

Uma linha de cabeçalho opcional é detectada automaticamente: a primeira linha é tratada
como cabeçalho quando nenhuma de suas células é numérica.
"""

from __future__ import annotations

import csv
import logging
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence

import numpy as np
import pandas as pd

from core_stats import DataMatrix, as_data_matrix
from erros import ErroDados

logger = logging.getLogger(__name__)

EXTENSOES_TEXTO = {".csv", ".txt"}
EXTENSOES_PLANILHA = {".xlsx", ".xlsm"}


def _parse_valor(v: Any) -> Optional[float]:
    """Converte uma célula em float; None quando não numérica."""
    if v is None or (isinstance(v, float) and pd.isna(v)):
        return None
    if isinstance(v, (int, float, np.integer, np.floating)) and not isinstance(v, bool):
        return float(v)
    s = str(v).strip().replace("\u00a0", "").replace(" ", "")
    if not s:
        return None
    # 1.234,56 | 1,234.56 | 1234,56 | 1234.56 | 1e-3
    if "," in s and "." in s:
        if s.rfind(",") > s.rfind("."):
            s = s.replace(".", "").replace(",", ".")
        else:
            s = s.replace(",", "")
    elif "," in s:
        s = s.replace(",", ".")
    try:
        return float(s)
    except ValueError:
        return None


def _montar(linhas: Sequence[tuple[int, list]], origem: str) -> DataMatrix:
    """Valida as linhas (número da linha, células) e monta a matriz."""
    if not linhas:
        raise ErroDados(f"Arquivo vazio: {origem}")
    _, primeira = linhas[0]
    if all(_parse_valor(c) is None for c in primeira):
        linhas = linhas[1:]
        if not linhas:
            raise ErroDados(f"Arquivo sem linhas de dados (apenas cabeçalho): {origem}")
    largura = len(linhas[0][1])
    valores = np.empty((len(linhas), largura), dtype=float)
    for i, (num_linha, celulas) in enumerate(linhas):
        if len(celulas) != largura:
            raise ErroDados(
                f"Linha {num_linha} com {len(celulas)} campo(s); esperado {largura} ({origem})"
            )
        for j, celula in enumerate(celulas):
            v = _parse_valor(celula)
            if v is None:
                raise ErroDados(f"Valor não numérico {celula!r} na linha {num_linha}, coluna {j + 1} ({origem})")
            valores[i, j] = v
    return DataMatrix.from_array(valores)


def _linha_invalida(path: Path) -> int:
    bruto = path.read_bytes()
    try:
        bruto.decode("utf-8-sig")
    except UnicodeDecodeError as exc:
        return bruto.count(b"\n", 0, exc.start) + 1
    return 1


def _linhas_csv(path: Path, sep: str) -> list[tuple[int, list]]:
    linhas: list[tuple[int, list]] = []
    with open(path, newline="", encoding="utf-8-sig") as f:
        leitor = csv.reader(f, delimiter=sep)
        try:
            for celulas in leitor:
                if not celulas or all(not c.strip() for c in celulas):
                    continue
                linhas.append((leitor.line_num, celulas))
        except UnicodeDecodeError as exc:
            raise ErroDados(f"Codificação inválida (esperado UTF-8) na linha {_linha_invalida(path)}: {path}") from exc
    return linhas


def load_csv(path, sep: str = ",") -> DataMatrix:
    caminho = Path(path)
    if not caminho.is_file():
        raise ErroDados(f"Arquivo não encontrado: {caminho}")
    dados = _montar(_linhas_csv(caminho, sep), str(caminho))
    logger.info("Dados carregados de %s: n=%d, p=%d", caminho, dados.n, dados.p)
    return dados


def _vazia(c: Any) -> bool:
    return c is None or (isinstance(c, float) and pd.isna(c)) or not str(c).strip()


def _linhas_planilha(df: pd.DataFrame) -> list[tuple[int, list]]:
    linhas: list[tuple[int, list]] = []
    for pos, registro in enumerate(df.itertuples(index=False, name=None), start=1):
        celulas = list(registro)
        if all(_vazia(c) for c in celulas):
            continue
        linhas.append((pos, celulas))
    return linhas


def load_panel(path, sep: str = ",") -> DataMatrix:
    """Carrega CSV/TXT ou XLSX conforme a extensão."""
    caminho = Path(path)
    ext = caminho.suffix.lower()
    if ext in EXTENSOES_PLANILHA:
        if not caminho.is_file():
            raise ErroDados(f"Arquivo não encontrado: {caminho}")
        try:
            df = pd.read_excel(caminho, header=None, engine="openpyxl")
        except Exception as exc:
            raise ErroDados(f"Planilha inválida: {caminho} ({exc})") from exc
        dados = _montar(_linhas_planilha(df), str(caminho))
        logger.info("Dados carregados de %s: n=%d, p=%d", caminho, dados.n, dados.p)
        return dados
    if ext in EXTENSOES_TEXTO or not ext:
        return load_csv(caminho, sep=sep)
    raise ErroDados(f"Formato não suportado: {ext} (use .csv, .txt ou .xlsx)")


def save_csv(X, path, colunas: Optional[Iterable[str]] = None) -> Path:
    """Grava o painel com 17 dígitos significativos (ida e volta sem perda)."""
    dados = as_data_matrix(X)
    nomes = list(colunas) if colunas is not None else [f"x{j + 1}" for j in range(dados.p)]
    caminho = Path(path)
    caminho.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(dados.values, columns=nomes).to_csv(caminho, index=False, float_format="%.17g")
    return caminho
