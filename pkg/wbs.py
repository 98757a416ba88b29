"""Wild Binary Segmentation com limiar calibrado por bootstrap.

Fluxo de ``wbs_estimate``:
 1. sorteia N intervalos (s, e) com e - s >= 4, uniformes entre os pares válidos;
 2. calcula W(s, e) = max_{s+1 <= t <= e-2} G~_n(t; s, e) em cada intervalo (dados brutos);
 3. calibra xi_n: em cada réplica um único vetor de multiplicadores vale para todos os
    intervalos, xi^i = max_m W*^(i)(s_m, e_m), e xi_n é o quantil 95% de {xi^i};
 4. WBS(1, n): entre os intervalos contidos em [s, e], o de maior W; se W > xi_n,
    registra t^ e segue em [s, t^] e [t^+1, e].

O limiar é calculado uma vez e reaproveitado em toda a recursão.
"""

from __future__ import annotations

import logging
import operator
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

import config
from bootstrap import MultiplierStream, centered_gram, critical_value, reweighted_gram
from core_stats import GramTable, as_data_matrix, build_gram, rescaled_g_values
from erros import ErroDominio
from fluxos import FLUXO_INTERVALOS_WBS, FLUXO_LIMIAR_WBS, derivar_semente, gerador, semente_aleatoria

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class IntervalSet:
    intervals: np.ndarray
    seed: Optional[int] = None

    def __post_init__(self) -> None:
        arr = np.array(self.intervals, dtype=np.int64).reshape(-1, 2)
        if arr.shape[0] == 0:
            raise ErroDominio("Conjunto de intervalos vazio")
        if (arr[:, 0] < 1).any():
            raise ErroDominio("Intervalos devem começar em s >= 1")
        curtos = np.flatnonzero(arr[:, 1] - arr[:, 0] < config.WBS_SEGMENTO_MINIMO)
        if curtos.size:
            s, e = arr[curtos[0]]
            raise ErroDominio(f"Intervalo ({s}, {e}) curto demais: exige e - s >= {config.WBS_SEGMENTO_MINIMO}")
        arr.setflags(write=False)
        object.__setattr__(self, "intervals", arr)

    @property
    def N(self) -> int:
        return int(self.intervals.shape[0])


@dataclass(frozen=True)
class WbsConfig:
    N: int = config.WBS_INTERVALOS
    R: int = config.WBS_REPLICAS
    quantile_level: float = config.WBS_QUANTIL
    seed: Optional[int] = None
    min_segment: int = config.WBS_SEGMENTO_MINIMO

    def __post_init__(self) -> None:
        if int(self.N) < 1 or int(self.R) < 1:
            raise ErroDominio(f"WBS exige N >= 1 e R >= 1 (N={self.N}, R={self.R})")
        if not 0.0 < float(self.quantile_level) < 1.0:
            raise ErroDominio(f"Nível do quantil deve estar em (0, 1); recebido {self.quantile_level}")


@dataclass(frozen=True)
class Detection:
    s: int
    e: int
    W: float
    t_hat: int


@dataclass(frozen=True)
class ChangePointEstimate:
    locations: tuple[int, ...]
    threshold: float
    detections: tuple[Detection, ...] = field(default_factory=tuple)
    seed: Optional[int] = None

    def to_dict(self) -> dict:
        return {
            "locations": list(self.locations),
            "threshold": self.threshold,
            "detections": [
                {"interval": [d.s, d.e], "W": d.W, "t_hat": d.t_hat} for d in self.detections
            ],
            "seed": self.seed,
        }


# ---------------- Intervalos ---------------- #

def draw_intervals(n: int, N: int, seed: int) -> IntervalSet:
    """N pares uniformes em {(s, e): 1 <= s < e <= n, e - s >= 4}, por rejeição."""
    n, N = operator.index(n), operator.index(N)
    if n < config.WBS_SEGMENTO_MINIMO + 1:
        raise ErroDominio(f"Nenhum intervalo válido com n = {n}; exige n >= 5")
    if N < 1:
        raise ErroDominio(f"N deve ser >= 1; recebido {N}")
    rng = gerador(seed, FLUXO_INTERVALOS_WBS)
    coletados: list[np.ndarray] = []
    faltam = N
    while faltam > 0:
        lote = max(4 * faltam, 64)
        s = rng.integers(1, n + 1, size=lote)
        e = rng.integers(1, n + 1, size=lote)
        validos = e - s >= config.WBS_SEGMENTO_MINIMO
        pares = np.column_stack([s[validos], e[validos]])[:faltam]
        coletados.append(pares)
        faltam -= pares.shape[0]
    return IntervalSet(intervals=np.concatenate(coletados), seed=int(seed))


@dataclass(frozen=True, eq=False)
class _Grade:
    """Candidatos t de todos os intervalos achatados; cada intervalo ocupa um trecho contíguo."""

    t: np.ndarray
    s: np.ndarray
    e: np.ndarray
    dono: np.ndarray
    inicios: np.ndarray


def _grade(intervals: IntervalSet) -> _Grade:
    s, e = intervals.intervals[:, 0], intervals.intervals[:, 1]
    contagens = e - s - 2
    inicios = np.concatenate([[0], np.cumsum(contagens)[:-1]])
    dono = np.repeat(np.arange(intervals.N), contagens)
    deslocamento = np.arange(dono.size) - inicios[dono]
    return _Grade(t=s[dono] + 1 + deslocamento, s=s[dono], e=e[dono], dono=dono, inicios=inicios)


def _maximos(table: GramTable, grade: _Grade) -> tuple[np.ndarray, np.ndarray]:
    valores = rescaled_g_values(table, grade.t, grade.s, grade.e)
    W = np.maximum.reduceat(valores, grade.inicios)
    posicoes = np.arange(valores.size)
    candidatas = np.where(valores == W[grade.dono], posicoes, valores.size)
    primeira = np.minimum.reduceat(candidatas, grade.inicios)
    return W, grade.t[primeira]


def interval_stat(gram: GramTable, s: int, e: int) -> tuple[float, int]:
    """W(s, e) e o menor t que o atinge; t percorre s+1 .. e-2, logo W(1, n) = T_n."""
    s, e = operator.index(s), operator.index(e)
    if s < 1 or e > gram.n:
        raise ErroDominio(f"Intervalo ({s}, {e}) fora de [1, {gram.n}]")
    if e - s < config.WBS_SEGMENTO_MINIMO:
        raise ErroDominio(f"Intervalo ({s}, {e}) curto demais: exige e - s >= {config.WBS_SEGMENTO_MINIMO}")
    ts = np.arange(s + 1, e - 1)
    valores = rescaled_g_values(gram, ts, s, e)
    pos = int(np.argmax(valores))
    return float(valores[pos]), int(ts[pos])


# ---------------- Limiar ---------------- #

def calibrate_threshold(
    X,
    intervals: IntervalSet,
    cfg: WbsConfig,
    multipliers: Optional[np.ndarray] = None,
    threads: int = 1,
) -> float:
    """xi_n: quantil ``cfg.quantile_level`` dos máximos bootstrap sobre todos os intervalos.

    ``multipliers`` (R x n) substitui os multiplicadores sorteados; útil em testes.
    """
    dados = as_data_matrix(X)
    if intervals.N == 0:
        raise ErroDominio("Conjunto de intervalos vazio")
    centrada = centered_gram(dados)
    grade = _grade(intervals)
    R = int(cfg.R)
    if multipliers is not None:
        multipliers = np.asarray(multipliers, dtype=float)
        if multipliers.shape != (R, dados.n):
            raise ErroDominio(f"Multiplicadores com formato {multipliers.shape}; esperado ({R}, {dados.n})")
    if cfg.seed is None:
        cfg = replace(cfg, seed=semente_aleatoria())
        logger.info("Limiar WBS sem semente; sorteada %d", cfg.seed)
    semente = derivar_semente(cfg.seed, FLUXO_LIMIAR_WBS)

    def _maximo_replica(i: int) -> float:
        e = multipliers[i - 1] if multipliers is not None else MultiplierStream(semente, i).draw(dados.n)
        W, _ = _maximos(reweighted_gram(centrada, e), grade)
        return float(W.max())

    if threads <= 1 or R == 1:
        maximos = [_maximo_replica(i) for i in range(1, R + 1)]
    else:
        maximos = Parallel(n_jobs=threads, prefer="threads")(
            delayed(_maximo_replica)(i) for i in range(1, R + 1)
        )
    return critical_value(np.asarray(maximos), 1.0 - float(cfg.quantile_level))


# ---------------- Estimação ---------------- #

def wbs_estimate(
    X,
    cfg: WbsConfig,
    intervals: Optional[IntervalSet] = None,
    threshold: Optional[float] = None,
    threads: int = 1,
) -> ChangePointEstimate:
    dados = as_data_matrix(X)
    n = dados.n
    if n < config.WBS_SEGMENTO_MINIMO + 1:
        raise ErroDominio(f"WBS exige n >= 5; recebido n = {n}")
    if cfg.seed is None:
        cfg = replace(cfg, seed=semente_aleatoria())
    if intervals is None:
        intervals = draw_intervals(n, int(cfg.N), cfg.seed)
    elif int(intervals.intervals[:, 1].max()) > n:
        raise ErroDominio(f"Intervalo termina após n = {n}")

    W, t_hat = _maximos(build_gram(dados), _grade(intervals))
    xi = float(threshold) if threshold is not None else calibrate_threshold(dados, intervals, cfg, threads=threads)
    logger.debug("WBS: n=%d, N=%d, limiar=%.6g", n, intervals.N, xi)

    inicio, fim = intervals.intervals[:, 0], intervals.intervals[:, 1]
    deteccoes: list[Detection] = []
    pilha = [(1, n)]
    while pilha:
        s, e = pilha.pop()
        if e - s < config.WBS_SEGMENTO_MINIMO:
            continue
        contidos = np.flatnonzero((inicio >= s) & (fim <= e))
        if contidos.size == 0:
            continue
        m0 = int(contidos[np.argmax(W[contidos])])
        if W[m0] <= xi:
            continue
        t = int(t_hat[m0])
        deteccoes.append(Detection(s=int(inicio[m0]), e=int(fim[m0]), W=float(W[m0]), t_hat=t))
        pilha.append((t + 1, e))
        pilha.append((s, t))

    return ChangePointEstimate(
        locations=tuple(sorted(d.t_hat for d in deteccoes)),
        threshold=xi,
        detections=tuple(deteccoes),
        seed=cfg.seed,
    )


# ---------------- Avaliação ---------------- #

def _rotulos(pontos: Sequence[int], n: int, nome: str) -> np.ndarray:
    arr = np.asarray(list(pontos), dtype=np.int64)
    if arr.size and ((arr < 1).any() or (arr > n - 1).any()):
        raise ErroDominio(f"Pontos de mudança ({nome}) devem estar em [1, {n - 1}]")
    if arr.size > 1 and (np.diff(arr) <= 0).any():
        raise ErroDominio(f"Pontos de mudança ({nome}) devem estar em ordem estritamente crescente")
    # ponto t encerra um segmento: i <= t fica no segmento anterior
    return np.searchsorted(arr, np.arange(1, n + 1), side="left")


def _pares(x: np.ndarray) -> float:
    x = x.astype(float)
    return float((x * (x - 1) / 2).sum())


def adjusted_rand_index(estimated: Sequence[int], truth: Sequence[int], n: int) -> float:
    """ARI (Hubert–Arabie) entre as segmentações vistas como rotulagens de 1..n.

    Sem nenhum ponto estimado e com ao menos um verdadeiro, o ARI é 0 por convenção.
    """
    n = operator.index(n)
    estimated, truth = list(estimated), list(truth)
    if n < 2:
        raise ErroDominio(f"ARI exige n >= 2; recebido n = {n}")
    rot_est = _rotulos(estimated, n, "estimados")
    rot_ver = _rotulos(truth, n, "verdadeiros")
    if not estimated and truth:
        return 0.0
    tabela = pd.crosstab(rot_est, rot_ver).to_numpy()
    indice = _pares(tabela)
    soma_linhas = _pares(tabela.sum(axis=1))
    soma_colunas = _pares(tabela.sum(axis=0))
    esperado = soma_linhas * soma_colunas / (n * (n - 1) / 2)
    maximo = (soma_linhas + soma_colunas) / 2
    if maximo == esperado:
        return 1.0
    return float((indice - esperado) / (maximo - esperado))
