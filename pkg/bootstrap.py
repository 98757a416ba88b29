"""Bootstrap multiplicador gaussiano para T_n e T_{n,M}.

Os dados são centrados pela média global (centragem por média local não é oferecida).
Cada réplica repondera a tabela de Gram centrada por e_i e_j, reconstrói as somas
prefixadas (O(n²)) e reaplica a varredura correspondente.

O p-valor segue a convenção "+1" ((#{T* > T} + 1) / (M + 1)), nunca zero; é uma
extensão à regra de decisão, que usa apenas o valor crítico.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Literal, Optional, Sequence, Union

import numpy as np
from joblib import Parallel, delayed

import config
from core_stats import (
    DataMatrix,
    GramTable,
    as_data_matrix,
    build_gram,
    multi_scan,
    single_scan,
)
from erros import ErroDominio
from fluxos import FLUXO_MULTIPLICADORES, gerador, semente_aleatoria

logger = logging.getLogger(__name__)

TipoEstatistica = Literal["single", "multi"]


@dataclass(frozen=True)
class MultiplierStream:
    """Sequência e_1..e_n i.i.d. N(0,1) de uma réplica; mesma (seed, índice) => mesmos bits."""

    seed: int
    replicate_index: int

    def draw(self, n: int) -> np.ndarray:
        return gerador(self.seed, FLUXO_MULTIPLICADORES, self.replicate_index).standard_normal(int(n))


@dataclass(frozen=True, eq=False)
class BootstrapDraws:
    stat_kind: TipoEstatistica
    values: np.ndarray
    seed: int

    def __post_init__(self) -> None:
        valores = np.asarray(self.values, dtype=float)
        if valores.ndim != 1 or valores.size < 1:
            raise ErroDominio("BootstrapDraws exige ao menos uma réplica")
        if not np.isfinite(valores).all():
            raise ErroDominio("Réplicas de bootstrap contêm valores não finitos")
        valores.setflags(write=False)
        object.__setattr__(self, "values", valores)

    @property
    def M(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True)
class TestReport:
    __test__ = False  # não é uma classe de teste do pytest

    statistic: float
    critical_value: float
    alpha: float
    reject: bool
    p_value: float
    stat_kind: TipoEstatistica
    M: int
    seed: int

    def to_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "critical_value": self.critical_value,
            "alpha": self.alpha,
            "reject": self.reject,
            "p_value": self.p_value,
            "stat_kind": self.stat_kind,
            "draws": {"M": self.M, "seed": self.seed},
        }


# ---------------- Tabelas ---------------- #

def centered_gram(X) -> GramTable:
    """Gram das linhas X_i - X_barra (centragem pela média global)."""
    dados = as_data_matrix(X)
    if dados.n < 2:
        raise ErroDominio(f"Centragem exige n >= 2; recebido n = {dados.n}")
    centrados = dados.values - dados.values.mean(axis=0)
    return build_gram(centrados)


def reweighted_gram(centered: GramTable, e) -> GramTable:
    """Tabela G*[i][j] = e_i e_j G[i][j] com somas prefixadas reconstruídas."""
    e = _validar_multiplicadores(centered, e)
    return GramTable.from_gram(np.outer(e, e) * centered.gram)


def _validar_multiplicadores(centered: GramTable, e) -> np.ndarray:
    e = np.asarray(e, dtype=float)
    if e.ndim != 1 or e.size != centered.n:
        raise ErroDominio(f"Multiplicadores com dimensão {e.shape}; esperado ({centered.n},)")
    return e


# ---------------- Estatísticas de réplica ---------------- #

def bootstrap_single_stat(centered: GramTable, e) -> float:
    """T_n* = max_m G~*_n(m) para uma sequência de multiplicadores."""
    return single_scan(reweighted_gram(centered, e)).max_value


def bootstrap_multi_stat(centered: GramTable, e) -> float:
    """T*_{n,M}: varredura forward + backward sobre a tabela reponderada."""
    return multi_scan(reweighted_gram(centered, e))[0]


_ESTATISTICAS_REPLICA = {
    "single": bootstrap_single_stat,
    "multi": bootstrap_multi_stat,
}


def _replica(centered: GramTable, kind: TipoEstatistica, seed: int, indice: int) -> float:
    e = MultiplierStream(seed, indice).draw(centered.n)
    return _ESTATISTICAS_REPLICA[kind](centered, e)


def bootstrap_draws(
    centered: GramTable,
    kind: TipoEstatistica,
    M: int,
    seed: int,
    threads: int = 1,
) -> BootstrapDraws:
    """M réplicas independentes (índices 1..M); a ordem do resultado não depende de ``threads``."""
    M = _validar_M(M)
    if kind not in _ESTATISTICAS_REPLICA:
        raise ErroDominio(f"Tipo de estatística inválido: {kind!r}")
    indices = range(1, M + 1)
    if threads <= 1 or M == 1:
        valores = [_replica(centered, kind, seed, i) for i in indices]
    else:
        valores = Parallel(n_jobs=threads, prefer="threads")(
            delayed(_replica)(centered, kind, seed, i) for i in indices
        )
    return BootstrapDraws(stat_kind=kind, values=np.asarray(valores, dtype=float), seed=int(seed))


# ---------------- Valor crítico e decisão ---------------- #

def _validar_alpha(alpha: float) -> float:
    try:
        alpha = float(alpha)
    except (TypeError, ValueError):
        raise ErroDominio(f"alpha inválido: {alpha!r}")
    if not 0.0 < alpha < 1.0:
        raise ErroDominio(f"alpha deve estar em (0, 1); recebido {alpha}")
    return alpha


def _validar_M(M: int) -> int:
    try:
        M = int(M)
    except (TypeError, ValueError):
        raise ErroDominio(f"Número de réplicas inválido: {M!r}")
    if M < 1:
        raise ErroDominio(f"Número de réplicas deve ser >= 1; recebido {M}")
    return M


def critical_value(draws: Union[BootstrapDraws, Sequence[float], np.ndarray], alpha: float) -> float:
    """c^(M)_alpha = v_(M - floor(alpha M)) das réplicas ordenadas.

    É o menor valor t entre as réplicas com #{v_j > t} <= alpha M.
    """
    alpha = _validar_alpha(alpha)
    valores = draws.values if isinstance(draws, BootstrapDraws) else np.asarray(draws, dtype=float)
    M = int(valores.size)
    if M < 1:
        raise ErroDominio("Valor crítico exige ao menos uma réplica")
    ordenados = np.sort(valores)
    # tolerância evita que 1 - 0.9 = 0.0999... derrube o piso
    descartados = math.floor(alpha * M + 1e-9)
    posicao = max(M - descartados, 1)
    return float(ordenados[posicao - 1])


def bootstrap_p_value(draws: BootstrapDraws, statistic: float) -> float:
    excedentes = int(np.count_nonzero(draws.values > statistic))
    return (excedentes + 1) / (draws.M + 1)


def decide(statistic: float, draws: BootstrapDraws, alpha: float) -> TestReport:
    """Monta o relatório de decisão para um nível alpha a partir das réplicas já calculadas."""
    critico = critical_value(draws, alpha)
    return TestReport(
        statistic=float(statistic),
        critical_value=critico,
        alpha=float(alpha),
        reject=bool(statistic > critico),
        p_value=bootstrap_p_value(draws, statistic),
        stat_kind=draws.stat_kind,
        M=draws.M,
        seed=draws.seed,
    )


def observed_statistic(X, kind: TipoEstatistica) -> float:
    gram = build_gram(X)
    if kind == "single":
        return single_scan(gram).max_value
    return multi_scan(gram)[0]


def run_bootstrap(
    X,
    kind: TipoEstatistica,
    M: int,
    seed: Optional[int] = None,
    threads: int = 1,
) -> tuple[float, BootstrapDraws]:
    """Estatística observada e réplicas de bootstrap, sem decisão."""
    dados: DataMatrix = as_data_matrix(X)
    if dados.n < 4:
        raise ErroDominio(f"Teste exige n >= 4; recebido n = {dados.n}")
    M = _validar_M(M)
    if M < config.REPLICAS_MINIMAS_RECOMENDADAS:
        logger.warning("M = %d réplicas; recomenda-se M >= %d", M, config.REPLICAS_MINIMAS_RECOMENDADAS)
    if seed is None:
        seed = semente_aleatoria()
    estatistica = observed_statistic(dados, kind)
    draws = bootstrap_draws(centered_gram(dados), kind, M, int(seed), threads=threads)
    return estatistica, draws


def test_single(
    X,
    alpha: float = config.ALPHA_PADRAO,
    M: int = config.REPLICAS_BOOTSTRAP,
    seed: Optional[int] = None,
    threads: int = 1,
) -> TestReport:
    """Rejeita H0 (sem mudança) quando T_n > c^(M)_{1,alpha}."""
    alpha = _validar_alpha(alpha)
    estatistica, draws = run_bootstrap(X, "single", M, seed, threads)
    return decide(estatistica, draws, alpha)


def test_multi(
    X,
    alpha: float = config.ALPHA_PADRAO,
    M: int = config.REPLICAS_BOOTSTRAP,
    seed: Optional[int] = None,
    threads: int = 1,
) -> TestReport:
    """Rejeita H0 quando T_{n,M} > c^(M)_{2,alpha}."""
    alpha = _validar_alpha(alpha)
    estatistica, draws = run_bootstrap(X, "multi", M, seed, threads)
    return decide(estatistica, draws, alpha)


# Funções de API com prefixo "test_" não devem ser coletadas pelo pytest
test_single.__test__ = False  # type: ignore[attr-defined]
test_multi.__test__ = False  # type: ignore[attr-defined]
