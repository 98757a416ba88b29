"""Diagnósticos de heterocedasticidade anteriores ao teste de mudança.

``variance_constancy_test`` avalia uma série univariada: variâncias em b_n blocos
disjuntos de tamanho l_n = floor(n^s), estatística U(n) das diferenças absolutas dos
logaritmos e padronização pela variância de longo prazo kappa*. A rejeição é pela
cauda superior. As últimas n - b_n l_n observações são descartadas.

``higher_criticism`` combina p-valores (HC* sobre a metade inferior das estatísticas de
ordem) com nulo obtido por Monte Carlo; ``panel_heteroscedasticity_screen`` aplica as duas
etapas a todas as coordenadas de um painel.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np
from joblib import Parallel, delayed
from scipy.stats import norm

import config
from core_stats import as_data_matrix
from erros import ErroDegenerado, ErroDominio
from fluxos import FLUXO_NULO_HC, gerador

logger = logging.getLogger(__name__)

VARIANCIA_LIMITE = 4.0 / 3.0 + (8.0 / math.pi) * (math.sqrt(3.0) - 2.0)
CENTRO_LIMITE = 2.0 / math.sqrt(math.pi)
RECORTE_P = 1e-12
_TOLERANCIA_PISO = 1e-9

METADADOS_SCREENING = {"sidedness": "upper", "kappa_centering": "l_n blocks"}


@dataclass(frozen=True)
class VarianceTestConfig:
    s: float = 0.7
    q: float = 0.5

    def __post_init__(self) -> None:
        if not 0.0 < float(self.q) < float(self.s) < 1.0:
            raise ErroDominio(f"Expoentes exigem 0 < q < s < 1; recebido s={self.s}, q={self.q}")

    def tamanhos(self, n: int) -> tuple[int, int, int, int]:
        """(l_n, b_n, l~_n, b~_n) para uma série de tamanho n."""
        l = math.floor(n**self.s + _TOLERANCIA_PISO)
        b = n // l if l > 0 else 0
        l_til = math.floor(n**self.q + _TOLERANCIA_PISO)
        b_til = (b * l) // l_til if l_til > 0 else 0
        return l, b, l_til, b_til

    def admite(self, n: int) -> bool:
        l, b, l_til, b_til = self.tamanhos(n)
        return l >= 2 and b >= 2 and l_til >= 1 and b_til >= 1

    def n_minimo(self) -> int:
        for n in range(2, 1_000_000):
            if self.admite(n):
                return n
        raise ErroDominio(f"Expoentes s={self.s}, q={self.q} não admitem nenhum n razoável")


@dataclass(frozen=True, eq=False)
class VarianceTestReport:
    U: float
    standardized: float
    p_value: float
    block_variances: np.ndarray
    kappa_star: float
    l_n: int
    b_n: int

    def to_dict(self) -> dict:
        return {
            "U": self.U,
            "standardized": self.standardized,
            "p_value": self.p_value,
            "kappa_star": self.kappa_star,
            "l_n": self.l_n,
            "b_n": self.b_n,
            "block_variances": self.block_variances.tolist(),
        }


def variance_constancy_test(series, cfg: VarianceTestConfig = VarianceTestConfig()) -> VarianceTestReport:
    D = np.asarray(series, dtype=float).ravel()
    n = int(D.size)
    if not np.isfinite(D).all():
        raise ErroDominio("Série contém valores não finitos")
    if not cfg.admite(n):
        raise ErroDominio(f"Teste de variância exige n >= {cfg.n_minimo()} (s={cfg.s}, q={cfg.q}); recebido n = {n}")
    l, b, l_til, b_til = cfg.tamanhos(n)

    blocos = D[: b * l].reshape(b, l)
    centrados = blocos - blocos.mean(axis=1, keepdims=True)
    variancias = (centrados**2).mean(axis=1)
    if (variancias <= 0).any():
        j = int(np.flatnonzero(variancias <= 0)[0]) + 1
        raise ErroDegenerado(f"Variância nula no bloco {j} (observações {(j - 1) * l + 1}..{j * l})")
    logs = np.log(variancias)
    U = float(np.abs(logs[:, None] - logs[None, :]).sum() / (b * (b - 1)))

    D_til2 = centrados.ravel() ** 2
    sigma2_H = float(D_til2.mean())
    somas = (D_til2[: b_til * l_til] - sigma2_H).reshape(b_til, l_til).sum(axis=1) / math.sqrt(l_til)
    kappa = float(math.sqrt(math.pi / 2.0) / sigma2_H * np.abs(somas).sum() / b_til)
    if not kappa > 0.0:
        raise ErroDegenerado("Variância de longo prazo estimada (kappa*) nula")

    padronizada = math.sqrt(b) * (math.sqrt(l) / kappa * U - CENTRO_LIMITE)
    p = float(norm.sf(padronizada / math.sqrt(VARIANCIA_LIMITE)))
    p = min(max(p, np.finfo(float).tiny), 1.0 - np.finfo(float).eps)
    variancias.setflags(write=False)
    return VarianceTestReport(
        U=U,
        standardized=float(padronizada),
        p_value=p,
        block_variances=variancias,
        kappa_star=kappa,
        l_n=l,
        b_n=b,
    )


# ---------------- Higher Criticism ---------------- #

def _hc(ordenados: np.ndarray) -> np.ndarray:
    """HC* por linha para p-valores já ordenados (última dimensão)."""
    N = ordenados.shape[-1]
    i = np.arange(1, max(1, N // 2) + 1)
    p = ordenados[..., : i.size]
    return np.max(math.sqrt(N) * (i / N - p) / np.sqrt(p * (1.0 - p)), axis=-1)


@lru_cache(maxsize=16)
def _nulo_hc(N: int, sorteios: int, semente: int) -> np.ndarray:
    rng = gerador(semente, FLUXO_NULO_HC, N)
    valores = []
    restantes = sorteios
    while restantes > 0:
        lote = min(restantes, 1000)
        u = np.clip(rng.random((lote, N)), RECORTE_P, 1.0 - RECORTE_P)
        valores.append(_hc(np.sort(u, axis=1)))
        restantes -= lote
    nulo = np.concatenate(valores)
    nulo.setflags(write=False)
    return nulo


def higher_criticism(
    pvalues: Sequence[float],
    draws: int = config.HC_SORTEIOS_NULOS,
    seed: int = 0,
) -> tuple[float, float]:
    """(HC*, p-valor Monte Carlo). O p-valor usa a convenção (#{HC_nulo >= HC*} + 1) / (draws + 1)."""
    p = np.asarray(list(pvalues), dtype=float)
    if p.size == 0:
        raise ErroDominio("Higher Criticism exige ao menos um p-valor")
    if not np.isfinite(p).all() or (p < 0).any() or (p > 1).any():
        raise ErroDominio("p-valores devem estar em [0, 1]")
    if int(draws) < 1:
        raise ErroDominio(f"Número de sorteios deve ser >= 1; recebido {draws}")
    recortar = (p < RECORTE_P) | (p > 1.0 - RECORTE_P)
    if recortar.any():
        logger.warning("%d p-valor(es) recortado(s) para [%g, 1 - %g]", int(recortar.sum()), RECORTE_P, RECORTE_P)
        p = np.clip(p, RECORTE_P, 1.0 - RECORTE_P)
    estatistica = float(_hc(np.sort(p)))
    nulo = _nulo_hc(int(p.size), int(draws), int(seed))
    p_valor = (int(np.count_nonzero(nulo >= estatistica)) + 1) / (int(draws) + 1)
    return estatistica, p_valor


# ---------------- Screening do painel ---------------- #

@dataclass(frozen=True)
class ScreenReport:
    coordinates: list[dict]
    excluded: list[dict]
    hc_stat: float
    p_value: float
    alpha: float
    reject: bool
    metadata: dict = field(default_factory=lambda: dict(METADADOS_SCREENING))

    @property
    def pvalues(self) -> list[float]:
        return [c["p_value"] for c in self.coordinates]

    def to_dict(self) -> dict:
        return {
            "coordinates": self.coordinates,
            "excluded": self.excluded,
            "combined": {"hc_stat": self.hc_stat, "p_value": self.p_value, "alpha": self.alpha, "reject": self.reject},
            "metadata": self.metadata,
        }


def _testar_coordenada(coluna: np.ndarray, indice: int, cfg: VarianceTestConfig) -> dict:
    try:
        r = variance_constancy_test(coluna, cfg)
    except (ErroDegenerado, ErroDominio) as exc:
        return {"index": indice, "erro": str(exc)}
    return {"index": indice, "U": r.U, "standardized": r.standardized, "p_value": r.p_value}


def panel_heteroscedasticity_screen(
    X,
    cfg: VarianceTestConfig = VarianceTestConfig(),
    alpha: float = config.ALPHA_PADRAO,
    draws: int = config.HC_SORTEIOS_NULOS,
    seed: Optional[int] = 0,
    threads: int = 1,
) -> ScreenReport:
    """Teste de variância por coordenada (índices a partir de 1) e combinação por HC."""
    dados = as_data_matrix(X)
    if not cfg.admite(dados.n):
        raise ErroDominio(f"Screening exige n >= {cfg.n_minimo()} (s={cfg.s}, q={cfg.q}); recebido n = {dados.n}")
    colunas = range(dados.p)
    if threads <= 1:
        resultados = [_testar_coordenada(dados.values[:, j], j + 1, cfg) for j in colunas]
    else:
        resultados = Parallel(n_jobs=threads, prefer="threads")(
            delayed(_testar_coordenada)(dados.values[:, j], j + 1, cfg) for j in colunas
        )
    validos = [r for r in resultados if "erro" not in r]
    excluidos = [{"index": r["index"], "reason": r["erro"]} for r in resultados if "erro" in r]
    for e in excluidos:
        logger.warning("Coordenada %d excluída do screening: %s", e["index"], e["reason"])
    if not validos:
        raise ErroDegenerado("Nenhuma coordenada elegível para o screening de variância")

    hc, p_valor = higher_criticism([r["p_value"] for r in validos], draws=draws, seed=seed or 0)
    return ScreenReport(
        coordinates=validos,
        excluded=excluidos,
        hc_stat=hc,
        p_value=p_valor,
        alpha=float(alpha),
        reject=bool(p_valor <= alpha),
    )
