"""Fluxos de números aleatórios reprodutíveis.

Cada finalidade tem uma constante de fluxo própria; o gerador de uma réplica depende
apenas de ``(semente, fluxo, índices...)``, nunca da ordem de execução. Assim o
resultado é o mesmo com 1 ou N threads.

Normais são geradas por ``Generator.standard_normal`` (ziggurat do numpy sobre PCG64).
"""

from __future__ import annotations

import logging

import numpy as np

logger = logging.getLogger(__name__)

FLUXO_MULTIPLICADORES = 1
FLUXO_LIMIAR_WBS = 2
FLUXO_INTERVALOS_WBS = 3
FLUXO_PAINEL = 4
FLUXO_REPLICA = 5
FLUXO_BOOTSTRAP_REPLICA = 6
FLUXO_NULO_HC = 7

_MASCARA_63 = (1 << 63) - 1


def gerador(semente: int, *chaves: int) -> np.random.Generator:
    """Gerador PCG64 determinístico para ``(semente, *chaves)``."""
    semente = _normalizar_semente(semente)
    ss = np.random.SeedSequence([semente, *[int(c) for c in chaves]])
    return np.random.Generator(np.random.PCG64(ss))


def derivar_semente(semente: int, *chaves: int) -> int:
    """Semente filha de 63 bits (cabe em JSON e em colunas inteiras com sinal)."""
    semente = _normalizar_semente(semente)
    ss = np.random.SeedSequence([semente, *[int(c) for c in chaves]])
    return int(ss.generate_state(1, dtype=np.uint64)[0]) & _MASCARA_63


def semente_aleatoria() -> int:
    """Sorteia uma semente nova a partir da entropia do sistema."""
    semente = int(np.random.SeedSequence().entropy) & _MASCARA_63
    logger.info("Semente não informada; usando semente sorteada %d", semente)
    return semente


def _normalizar_semente(semente: int) -> int:
    try:
        valor = int(semente)
    except (TypeError, ValueError):
        raise ValueError(f"Semente inválida: {semente!r}")
    if valor < 0:
        raise ValueError("Semente deve ser um inteiro não negativo")
    return valor
