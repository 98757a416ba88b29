"""Estatísticas U de varredura para mudança na média.

Toda estatística G_n(m; a, b) é uma combinação de três somas sobre a tabela de Gram
X_i^T X_j: pares dentro do bloco esquerdo [a, m], pares dentro do bloco direito
[m+1, b] e a soma cruzada entre os dois. Com somas prefixadas 2D cada consulta custa
O(1), então as varreduras simples (O(n)) e forward/backward (O(n²)) e as réplicas de
bootstrap reaproveitam a mesma construção O(n²p).

Convenções:
 - índices públicos são 1-based (i = 1..n), como no modelo X_i = mu_i + H(i/n) Z_i;
 - os dados NÃO são centrados aqui (a centragem pertence ao bootstrap);
 - empates no máximo ficam com o menor índice (ou o menor par em ordem lexicográfica).

``d_oracle`` e ``s_tilde`` são oráculos de força bruta, úteis apenas para n pequeno.
"""

from __future__ import annotations

import math
import operator
from dataclasses import dataclass
from functools import lru_cache
from itertools import permutations
from typing import Literal, Union

import numpy as np
import pandas as pd

from erros import ErroDados, ErroDominio

# Somas prefixadas acumuladas em precisão estendida (80 bits em x86) e arredondadas
# uma única vez para float64; as consultas trabalham em float64
_ACUMULADOR = np.longdouble

TipoPerfil = Literal["single", "intervalForward", "intervalBackward"]


@dataclass(frozen=True, eq=False)
class DataMatrix:
    """Painel observado n x p (linhas = tempo, colunas = coordenadas)."""

    values: np.ndarray

    @property
    def n(self) -> int:
        return int(self.values.shape[0])

    @property
    def p(self) -> int:
        return int(self.values.shape[1])

    @classmethod
    def from_array(cls, dados) -> "DataMatrix":
        if isinstance(dados, DataMatrix):
            return dados
        try:
            arr = np.array(dados, dtype=float)
        except (TypeError, ValueError) as exc:
            raise ErroDados(f"Dados não numéricos: {exc}") from exc
        if arr.ndim == 1:
            arr = arr.reshape(-1, 1)
        if arr.ndim != 2 or arr.shape[0] == 0 or arr.shape[1] == 0:
            raise ErroDados(f"Esperada matriz n x p não vazia; recebido formato {arr.shape}")
        finitos = np.isfinite(arr)
        if not finitos.all():
            i, j = (int(v) for v in np.argwhere(~finitos)[0])
            raise ErroDados(f"Valor não finito na linha {i + 1}, coluna {j + 1}: {arr[i, j]!r}")
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        return cls(arr)


def as_data_matrix(dados) -> DataMatrix:
    return DataMatrix.from_array(dados)


@dataclass(frozen=True, eq=False)
class GramTable:
    """Tabela de produtos internos com somas prefixadas 2D. Imutável após construída."""

    gram: np.ndarray
    prefix: np.ndarray
    diag_prefix: np.ndarray

    @classmethod
    def from_gram(cls, gram: np.ndarray) -> "GramTable":
        gram = np.array(gram, dtype=float)
        if gram.ndim != 2 or gram.shape[0] != gram.shape[1]:
            raise ErroDominio(f"Tabela de Gram deve ser quadrada; recebido {gram.shape}")
        n = gram.shape[0]
        prefix = np.zeros((n + 1, n + 1), dtype=float)
        prefix[1:, 1:] = np.cumsum(np.cumsum(gram.astype(_ACUMULADOR), axis=0), axis=1)
        diag_prefix = np.zeros(n + 1, dtype=float)
        diag_prefix[1:] = np.cumsum(np.diagonal(gram).astype(_ACUMULADOR))
        for arr in (gram, prefix, diag_prefix):
            arr.setflags(write=False)
        return cls(gram=gram, prefix=prefix, diag_prefix=diag_prefix)

    @property
    def n(self) -> int:
        return int(self.gram.shape[0])

    def block_sum(self, a, b, c, d):
        """Soma de gram[i][j] para i em [a, b] e j em [c, d] (1-based, inclusivo)."""
        P = self.prefix
        return P[b, d] - P[a - 1, d] - P[b, c - 1] + P[a - 1, c - 1]

    def diag_sum(self, a, b):
        return self.diag_prefix[b] - self.diag_prefix[a - 1]

    def off_diag_sum(self, a, b):
        """Soma fora da diagonal do quadrado [a, b] x [a, b]."""
        return self.block_sum(a, b, a, b) - self.diag_sum(a, b)

    def pair_sum(self, a, b):
        """Soma de X_i^T X_j sobre a <= i < j <= b."""
        return self.off_diag_sum(a, b) / 2


@dataclass(frozen=True, eq=False)
class ScanProfile:
    """Superfície avaliada de G~ e seu maximizador.

    ``candidates`` tem forma (K,) para a varredura simples e (K, 2) com pares (m, k)
    nas varreduras por intervalo, sempre em ordem lexicográfica.
    """

    kind: TipoPerfil
    candidates: np.ndarray
    values: np.ndarray
    max_value: float
    argmax: Union[int, tuple[int, int]]

    def value_at(self, indice) -> float:
        if self.candidates.ndim == 1:
            pos = np.flatnonzero(self.candidates == int(indice))
        else:
            m, k = indice
            pos = np.flatnonzero((self.candidates[:, 0] == int(m)) & (self.candidates[:, 1] == int(k)))
        if pos.size == 0:
            raise ErroDominio(f"Índice {indice!r} fora do conjunto varrido ({self.kind})")
        return float(self.values[pos[0]])

    def to_frame(self) -> pd.DataFrame:
        if self.candidates.ndim == 1:
            df = pd.DataFrame({"m": self.candidates, "valor": self.values})
        else:
            df = pd.DataFrame({"m": self.candidates[:, 0], "k": self.candidates[:, 1], "valor": self.values})
        df.insert(0, "tipo", self.kind)
        return df


def _perfil(kind: TipoPerfil, candidates: np.ndarray, values: np.ndarray) -> ScanProfile:
    pos = int(np.argmax(values))
    if candidates.ndim == 1:
        argmax: Union[int, tuple[int, int]] = int(candidates[pos])
    else:
        argmax = (int(candidates[pos, 0]), int(candidates[pos, 1]))
    return ScanProfile(kind=kind, candidates=candidates, values=values, max_value=float(values[pos]), argmax=argmax)


# ---------------- Construção ---------------- #

def build_gram(X) -> GramTable:
    """Tabela de Gram das linhas de X; simetria exata (triângulo superior espelhado)."""
    valores = as_data_matrix(X).values
    gram = valores @ valores.T
    gram = np.triu(gram) + np.triu(gram, 1).T
    return GramTable.from_gram(gram)


# ---------------- Núcleo vetorizado ---------------- #

def _g_values(table: GramTable, m, a, b):
    """G_n(m; a, b) para arrays de índices já validados."""
    L = np.asarray(m - a + 1, dtype=float)
    R = np.asarray(b - m, dtype=float)
    esquerda = table.pair_sum(a, m) / (L * (L - 1) / 2)
    direita = table.pair_sum(m + 1, b) / (R * (R - 1) / 2)
    cruzada = table.block_sum(a, m, m + 1, b)
    return esquerda + direita - 2 * cruzada / (L * R)


def _fator_escala(m, a, b):
    L = np.asarray(m - a + 1, dtype=float)
    R = np.asarray(b - m, dtype=float)
    T = np.asarray(b - a + 1, dtype=float)
    return L * (L - 1) * R * (R - 1) / T**3


def _rescaled_values(table: GramTable, m, a, b) -> np.ndarray:
    return np.asarray(_fator_escala(m, a, b) * _g_values(table, m, a, b), dtype=float)


def _validar_blocos(n: int, m, a, b) -> tuple[int, int, int]:
    m, a, b = operator.index(m), operator.index(a), operator.index(b)
    if not (1 <= a <= m < b <= n):
        raise ErroDominio(f"Índices fora da faixa: exige 1 <= a <= m < b <= n (a={a}, m={m}, b={b}, n={n})")
    if m - a + 1 < 2:
        raise ErroDominio(f"Bloco esquerdo [{a}, {m}] tem {m - a + 1} observação(ões); mínimo 2")
    if b - m < 2:
        raise ErroDominio(f"Bloco direito [{m + 1}, {b}] tem {b - m} observação(ões); mínimo 2")
    return m, a, b


def g_stat(gram: GramTable, m: int, a: int, b: int) -> float:
    """G_n(m; a, b): médias de pares dentro de cada bloco menos o termo cruzado."""
    m, a, b = _validar_blocos(gram.n, m, a, b)
    return float(_g_values(gram, m, a, b))


def rescaled_g(gram: GramTable, m: int, a: int, b: int) -> float:
    """G~_n(m; a, b) = (m-a+1)(m-a)(b-m)(b-m-1)/(b-a+1)^3 * G_n(m; a, b)."""
    m, a, b = _validar_blocos(gram.n, m, a, b)
    return float(_fator_escala(m, a, b) * _g_values(gram, m, a, b))


def rescaled_g_values(gram: GramTable, m, a, b) -> np.ndarray:
    """Versão vetorizada de ``rescaled_g``; os índices são validados em lote."""
    m, a, b = np.broadcast_arrays(np.asarray(m, dtype=np.int64), np.asarray(a, dtype=np.int64), np.asarray(b, dtype=np.int64))
    invalidos = (a < 1) | (b > gram.n) | (m - a + 1 < 2) | (b - m < 2)
    if invalidos.any():
        pos = int(np.flatnonzero(invalidos.ravel())[0])
        m0, a0, b0 = int(m.ravel()[pos]), int(a.ravel()[pos]), int(b.ravel()[pos])
        _validar_blocos(gram.n, m0, a0, b0)
    return _rescaled_values(gram, m, a, b)


# ---------------- Varreduras ---------------- #

def _exigir_n_minimo(n: int) -> None:
    if n < 4:
        raise ErroDominio(f"Varredura exige n >= 4 (m = 2..n-2); recebido n = {n}")


def single_scan(gram: GramTable) -> ScanProfile:
    """Perfil de G~_n(m) para m = 2..n-2; ``max_value`` é T_n."""
    n = gram.n
    _exigir_n_minimo(n)
    ms = np.arange(2, n - 1)
    valores = _rescaled_values(gram, ms, 1, n)
    return _perfil("single", ms, valores)


def _congelar(*arrays: np.ndarray) -> tuple[np.ndarray, ...]:
    for arr in arrays:
        arr.setflags(write=False)
    return arrays


@lru_cache(maxsize=8)
def _pares_forward(n: int) -> tuple[np.ndarray, np.ndarray]:
    # G~(m; 1, k): bloco esquerdo [1, m] com m >= 2, direito [m+1, k] com k - m >= 2
    m, k = np.meshgrid(np.arange(n + 1), np.arange(n + 1), indexing="ij")
    mascara = (m >= 2) & (k - m >= 2)
    return _congelar(m[mascara], k[mascara])


@lru_cache(maxsize=8)
def _pares_backward(n: int) -> tuple[np.ndarray, np.ndarray]:
    # G~(m; k, n): bloco esquerdo [k, m] com m - k + 1 >= 2, direito [m+1, n] com n - m >= 2
    m, k = np.meshgrid(np.arange(n + 1), np.arange(n + 1), indexing="ij")
    mascara = (k >= 1) & (m - k + 1 >= 2) & (n - m >= 2)
    return _congelar(m[mascara], k[mascara])


def forward_scan(gram: GramTable) -> ScanProfile:
    n = gram.n
    _exigir_n_minimo(n)
    ms, ks = _pares_forward(n)
    valores = _rescaled_values(gram, ms, 1, ks)
    return _perfil("intervalForward", np.column_stack([ms, ks]), valores)


def backward_scan(gram: GramTable) -> ScanProfile:
    n = gram.n
    _exigir_n_minimo(n)
    ms, ks = _pares_backward(n)
    valores = _rescaled_values(gram, ms, ks, n)
    return _perfil("intervalBackward", np.column_stack([ms, ks]), valores)


def multi_scan(gram: GramTable) -> tuple[float, ScanProfile, ScanProfile]:
    """T_{n,M} = max forward + max backward, em O(n²) consultas O(1)."""
    forward = forward_scan(gram)
    backward = backward_scan(gram)
    return forward.max_value + backward.max_value, forward, backward


# ---------------- Oráculos de força bruta ---------------- #

def d_oracle(X, k: int) -> float:
    """D_n(k): soma quádrupla sobre j1 != j3 <= k < j2 != j4 de (X_j1 - X_j2)^T (X_j3 - X_j4).

    Custo O(n^4 p); G_n(k) = D_n(k) / (k(k-1)(n-k)(n-k-1)).
    """
    valores = as_data_matrix(X).values
    n = valores.shape[0]
    k = operator.index(k)
    if not 2 <= k <= n - 2:
        raise ErroDominio(f"d_oracle exige 2 <= k <= n-2 (k={k}, n={n})")
    direita = valores[k:]
    parcelas: list[float] = []
    for j1, j3 in permutations(range(k), 2):
        A = valores[j1] - direita
        B = valores[j3] - direita
        produtos = A @ B.T
        # j2 != j4: remove a diagonal
        parcelas.append(float(produtos.sum() - np.trace(produtos)))
    return math.fsum(parcelas)


def s_tilde(X, k: int, m: int) -> float:
    """S~_n(k, m) = sum_{i=k..m} sum_{j=k..i} X_{i+1}^T X_j (1 <= k <= m <= n-1)."""
    valores = as_data_matrix(X).values
    n = valores.shape[0]
    k, m = operator.index(k), operator.index(m)
    if not 1 <= k <= m <= n - 1:
        raise ErroDominio(f"s_tilde exige 1 <= k <= m <= n-1 (k={k}, m={m}, n={n})")
    parcelas = [
        float(valores[i] @ valores[j - 1])
        for i in range(k, m + 1)
        for j in range(k, i + 1)
    ]
    return math.fsum(parcelas)


def s_tilde_representation(X, k: int) -> float:
    """Lado direito da representação de G~_n(k) via S~_n, com os limites resolvidos.

    S~_n(a, b-1) é a soma de pares dentro de [a, b], portanto:
      pares em [1, k]   -> S~_n(1, k-1)
      pares em [k+1, n] -> S~_n(k+1, n-1)
      todos os pares    -> S~_n(1, n-1)
    e o coeficiente exato do termo cruzado é 2(k-1)(n-k-1)/n^3 (2k(n-k)/n^3 é só a ordem dominante).
    """
    valores = as_data_matrix(X).values
    n = valores.shape[0]
    k = operator.index(k)
    if not 2 <= k <= n - 2:
        raise ErroDominio(f"Representação exige 2 <= k <= n-2 (k={k}, n={n})")
    esquerda = s_tilde(valores, 1, k - 1)
    direita = s_tilde(valores, k + 1, n - 1)
    total = s_tilde(valores, 1, n - 1)
    cruzada = total - esquerda - direita
    return (
        2 * (n - k) * (n - k - 1) * esquerda
        + 2 * k * (k - 1) * direita
        - 2 * (k - 1) * (n - k - 1) * cruzada
    ) / n**3
