"""Exceções da biblioteca.

Todas derivam de tipos embutidos para que chamadores que já tratam ``ValueError``
continuem funcionando. O CLI converte cada classe em um código de saída.
"""

from __future__ import annotations


class ErroDados(ValueError):
    """Entrada malformada: CSV irregular, célula não numérica, valores não finitos."""


class ErroDominio(ValueError):
    """Parâmetro fora do domínio da operação (índices, tamanhos de bloco, alpha, M...)."""


class ErroDegenerado(ArithmeticError):
    """Degenerescência numérica (variância nula, estimador de escala nulo)."""
