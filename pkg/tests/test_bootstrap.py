from __future__ import annotations

import logging

import numpy as np
import pytest

import bootstrap as bt
from core_stats import build_gram, rescaled_g, single_scan
from erros import ErroDominio


def _g_estrela_direto(X: np.ndarray, e: np.ndarray, m: int) -> float:
    """G~*_n(m) pela soma tripla explícita sobre os dados centrados."""
    n = X.shape[0]
    c = X - X.mean(axis=0)
    esquerda = sum(e[i] * e[j] * (c[i] @ c[j]) for i in range(m) for j in range(m) if i != j)
    direita = sum(e[i] * e[j] * (c[i] @ c[j]) for i in range(m, n) for j in range(m, n) if i != j)
    cruzada = sum(e[i] * e[j] * (c[i] @ c[j]) for i in range(m) for j in range(m, n))
    g = esquerda / (m * (m - 1)) + direita / ((n - m) * (n - m - 1)) - 2 * cruzada / (m * (n - m))
    return m * (m - 1) * (n - m) * (n - m - 1) / n**3 * g


# ---------------- Tabela centrada ---------------- #

def test_centered_gram_de_linhas_constantes():
    tabela = bt.centered_gram(np.tile([0.3, -1.7, 2.0], (7, 1)))
    assert np.allclose(tabela.gram, 0.0, atol=1e-12)


def test_centered_gram_igual_a_dupla_centragem(rng):
    X = rng.standard_normal((6, 3))
    G = X @ X.T
    r = G.mean(axis=1)
    duplo = G - r[:, None] - r[None, :] + G.mean()
    assert np.allclose(bt.centered_gram(X).gram, duplo, rtol=1e-12, atol=1e-12)


def test_centered_gram_invariante_a_deslocamento(rng, degrau):
    X = degrau(10, 3, 5) + 0.1 * rng.standard_normal((10, 3))
    deslocado = X + np.array([5.0, -3.0, 0.25])
    assert np.allclose(bt.centered_gram(X).gram, bt.centered_gram(deslocado).gram, atol=1e-10)


def test_tabela_reponderada_igual_a_gram_das_linhas_ponderadas(rng):
    X = rng.standard_normal((9, 4))
    e = rng.standard_normal(9)
    esperado = build_gram((X - X.mean(axis=0)) * e[:, None]).gram
    assert np.allclose(bt.reweighted_gram(bt.centered_gram(X), e).gram, esperado, rtol=1e-12, atol=1e-12)


def test_multiplicadores_com_dimensao_errada(rng):
    with pytest.raises(ErroDominio, match="Multiplicadores"):
        bt.reweighted_gram(bt.centered_gram(rng.standard_normal((6, 2))), np.ones(5))


# ---------------- Estatísticas de réplica ---------------- #

def test_replica_com_multiplicadores_nulos(rng):
    centrada = bt.centered_gram(rng.standard_normal((10, 3)))
    assert bt.bootstrap_single_stat(centrada, np.zeros(10)) == 0.0
    assert bt.bootstrap_multi_stat(centrada, np.zeros(10)) == 0.0


def test_multiplicadores_unitarios_reproduzem_t_n_centrado(rng):
    X = rng.standard_normal((12, 4))
    X = X - X.mean(axis=0)
    T_n = single_scan(build_gram(X)).max_value
    assert bt.bootstrap_single_stat(bt.centered_gram(X), np.ones(12)) == pytest.approx(T_n, rel=1e-10)


def test_replica_simples_confere_com_soma_tripla(rng):
    n = 10
    X = rng.standard_normal((n, 3))
    e = rng.standard_normal(n)
    esperado = max(_g_estrela_direto(X, e, m) for m in range(2, n - 1))
    assert bt.bootstrap_single_stat(bt.centered_gram(X), e) == pytest.approx(esperado, rel=1e-10)


def test_replica_multipla_confere_com_laco_exaustivo(rng):
    n = 10
    X = rng.standard_normal((n, 2))
    e = rng.standard_normal(n)
    tabela = build_gram((X - X.mean(axis=0)) * e[:, None])
    frente = max(rescaled_g(tabela, m, 1, k) for k in range(4, n + 1) for m in range(2, k - 1))
    tras = max(rescaled_g(tabela, m, k, n) for k in range(1, n - 2) for m in range(k + 1, n - 1))
    assert bt.bootstrap_multi_stat(bt.centered_gram(X), e) == pytest.approx(frente + tras, rel=1e-10)


def test_fluxo_de_multiplicadores_deterministico():
    a = bt.MultiplierStream(7, 3).draw(50)
    b = bt.MultiplierStream(7, 3).draw(50)
    c = bt.MultiplierStream(7, 4).draw(50)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_replicas_nao_dependem_do_numero_de_threads(rng):
    centrada = bt.centered_gram(rng.standard_normal((20, 5)))
    um = bt.bootstrap_draws(centrada, "single", 24, seed=11, threads=1)
    varios = bt.bootstrap_draws(centrada, "single", 24, seed=11, threads=3)
    assert np.array_equal(um.values, varios.values)


# ---------------- Valor crítico e decisão ---------------- #

def test_valor_critico_de_1_a_100():
    assert bt.critical_value(np.arange(1, 101), 0.05) == 95


def test_valor_critico_de_uma_replica():
    assert bt.critical_value([7.0], 0.5) == 7.0


@pytest.mark.parametrize("alpha", [0.01, 0.05, 0.1, 0.5, 0.9])
def test_valor_critico_de_replicas_iguais(alpha):
    assert bt.critical_value([2.5] * 40, alpha) == 2.5


def test_valor_critico_monotono_e_invariante_a_permutacao(rng):
    valores = rng.standard_normal(200)
    criticos = [bt.critical_value(valores, a) for a in (0.01, 0.05, 0.1, 0.2)]
    assert criticos == sorted(criticos, reverse=True)
    assert bt.critical_value(rng.permutation(valores), 0.05) == criticos[1]


@pytest.mark.parametrize("alpha", [0.0, 1.0, -0.1, 1.5])
def test_alpha_fora_do_intervalo(alpha):
    with pytest.raises(ErroDominio, match="alpha"):
        bt.critical_value([1.0, 2.0], alpha)


def test_p_valor_e_decisao():
    draws = bt.BootstrapDraws("single", np.array([1.0, 2.0, 3.0, 4.0]), seed=1)
    relatorio = bt.decide(2.5, draws, alpha=0.5)
    assert relatorio.p_value == pytest.approx(3 / 5)
    assert relatorio.critical_value == 2.0
    assert relatorio.reject is True
    assert relatorio.to_dict()["draws"] == {"M": 4, "seed": 1}


def test_draws_rejeitam_valores_nao_finitos():
    with pytest.raises(ErroDominio):
        bt.BootstrapDraws("single", np.array([1.0, np.inf]), seed=0)


# ---------------- Testes completos ---------------- #

def test_teste_simples_rejeita_degrau_forte(degrau):
    relatorio = bt.test_single(degrau(100, 3, 50, norma2=4.0), alpha=0.05, M=100, seed=3)
    assert relatorio.reject is True
    assert relatorio.p_value == pytest.approx(1 / 101)
    assert relatorio.statistic == pytest.approx(50 * 49 * 50 * 49 / 100**3 * 4.0, rel=1e-10)


def test_teste_multiplo_rejeita_duas_mudancas_fortes():
    X = np.zeros((150, 3))
    X[50:100] = 2.0
    relatorio = bt.test_multi(X, alpha=0.05, M=60, seed=5)
    assert relatorio.reject is True
    assert relatorio.p_value == pytest.approx(1 / 61)
    assert relatorio.stat_kind == "multi"


def test_mesma_semente_mesmo_relatorio(rng):
    X = rng.standard_normal((30, 8))
    assert bt.test_single(X, M=60, seed=42) == bt.test_single(X, M=60, seed=42)
    assert bt.test_multi(X, M=60, seed=42) == bt.test_multi(X, M=60, seed=42)


def test_aviso_para_poucas_replicas(rng, caplog):
    with caplog.at_level(logging.WARNING, logger="bootstrap"):
        bt.test_single(rng.standard_normal((12, 3)), M=10, seed=1)
    assert any("réplicas" in r.getMessage() for r in caplog.records)


@pytest.mark.parametrize("M", [0, -3])
def test_numero_de_replicas_invalido(rng, M):
    with pytest.raises(ErroDominio, match="réplicas"):
        bt.test_single(rng.standard_normal((12, 3)), M=M, seed=1)


def test_n_pequeno_demais():
    with pytest.raises(ErroDominio, match="n >= 4"):
        bt.test_single(np.ones((3, 2)), M=50, seed=1)
