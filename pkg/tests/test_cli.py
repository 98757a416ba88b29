from __future__ import annotations

import json

import numpy as np
import pandas as pd
import pytest

import cli
import config
import database
from ingestao import save_csv
from relatorio import ler_relatorio

CHAVES_RELATORIO = {"command", "config", "result", "library_version", "timings", "created_at"}


@pytest.fixture
def painel(tmp_path, rng):
    X = rng.standard_normal((40, 3))
    X[20:] += 1.5
    return str(save_csv(X, tmp_path / "painel.csv"))


def _args(*extra):
    return ["--seed", "7", "--bootstrap-reps", "50", "--threads", "1", *extra]


# ---------------- Testes ---------------- #

def test_teste_simples_grava_relatorio(tmp_path, painel):
    saida = tmp_path / "r.json"
    assert cli.executar(["test-single", "--input", painel, "--output", str(saida), *_args()]) == 0
    relatorio = ler_relatorio(saida)
    assert set(relatorio) == CHAVES_RELATORIO
    assert relatorio["command"] == "test-single"
    assert relatorio["library_version"] == config.VERSAO
    resultado = relatorio["result"]
    assert (resultado["n"], resultado["p"]) == (40, 3)
    assert resultado["reject"] is True
    assert resultado["draws"] == {"M": 50, "seed": 7}


def test_mesma_semente_mesmo_resultado(tmp_path, painel):
    for nome in ("a.json", "b.json"):
        assert cli.executar(["test-multi", "--input", painel, "--output", str(tmp_path / nome), *_args()]) == 0
    a, b = ler_relatorio(tmp_path / "a.json"), ler_relatorio(tmp_path / "b.json")
    assert a["result"] == b["result"]
    assert {k: v for k, v in a["config"].items() if k != "output_path"} == {
        k: v for k, v in b["config"].items() if k != "output_path"
    }


def test_relatorio_na_saida_padrao(painel, capsys):
    assert cli.executar(["test-single", "--input", painel, *_args()]) == 0
    relatorio = json.loads(capsys.readouterr().out)
    assert set(relatorio) == CHAVES_RELATORIO


def test_perfil_da_varredura(tmp_path, painel):
    saida = tmp_path / "r.json"
    assert cli.executar(["test-single", "--input", painel, "--output", str(saida), "--profile", *_args()]) == 0
    resultado = ler_relatorio(saida)["result"]
    perfil = pd.read_csv(resultado["profile_path"])
    assert resultado["profile_path"].endswith("r.profile.csv")
    assert len(perfil) == 40 - 3
    assert resultado["argmax"] == int(perfil.loc[perfil["valor"].idxmax(), "m"])


def test_reexecucao_a_partir_do_relatorio(tmp_path, painel):
    original = tmp_path / "original.json"
    assert cli.executar(["test-single", "--input", painel, "--output", str(original), *_args()]) == 0
    copia = tmp_path / "copia.json"
    assert cli.executar(["test-single", "--from-report", str(original), "--output", str(copia)]) == 0
    assert ler_relatorio(copia)["result"] == ler_relatorio(original)["result"]


def test_estimacao(tmp_path, painel):
    saida = tmp_path / "e.json"
    argv = ["estimate", "--input", painel, "--output", str(saida), "--wbs-intervals", "100", "--wbs-reps", "20"]
    assert cli.executar(argv + _args()) == 0
    resultado = ler_relatorio(saida)["result"]
    assert {"locations", "threshold", "detections", "seed"} <= set(resultado)
    assert all(1 <= t <= 39 for t in resultado["locations"])


def test_diagnostico(tmp_path, painel):
    saida = tmp_path / "d.json"
    assert cli.executar(["diagnose", "--input", painel, "--output", str(saida), *_args()]) == 0
    resultado = ler_relatorio(saida)["result"]
    assert [c["index"] for c in resultado["coordinates"]] == [1, 2, 3]
    assert resultado["metadata"]["sidedness"] == "upper"


# ---------------- Códigos de saída ---------------- #

@pytest.mark.parametrize(
    "argv",
    [
        ["test-single", "--alpha", "1.5", "--input", "x.csv"],
        ["test-single"],
        ["simulate"],
        ["comando-inexistente"],
        ["test-single", "--input", "x.csv", "--bootstrap-reps", "0"],
    ],
)
def test_erros_de_uso(argv):
    assert cli.executar(argv) == cli.SAIDA_USO


def test_arquivo_malformado(tmp_path):
    caminho = tmp_path / "ruim.csv"
    caminho.write_text("1,2\n3,x\n5,6\n7,8\n", encoding="utf-8")
    assert cli.executar(["test-single", "--input", str(caminho), *_args()]) == cli.SAIDA_DADOS


def test_arquivo_inexistente(tmp_path):
    assert cli.executar(["estimate", "--input", str(tmp_path / "nada.csv"), *_args()]) == cli.SAIDA_DADOS


def test_painel_curto_demais(tmp_path):
    caminho = save_csv(np.ones((3, 2)), tmp_path / "curto.csv")
    assert cli.executar(["test-single", "--input", str(caminho), *_args()]) == cli.SAIDA_DADOS


def test_degenerescencia_no_diagnostico(tmp_path):
    caminho = save_csv(np.ones((50, 2)), tmp_path / "constante.csv")
    assert cli.executar(["diagnose", "--input", str(caminho), *_args()]) == cli.SAIDA_DEGENERADO


@pytest.mark.parametrize(
    ("comando", "saida"),
    [("simulate", "t.json"), ("test-single", "r.csv"), ("estimate", "e.xlsx")],
)
def test_extensao_de_saida_incompativel(tmp_path, painel, comando, saida):
    destino = tmp_path / saida
    argv = [comando, "--output", str(destino), *_args()]
    argv += ["--scenario", "table2-a0-ar05-h0", "--reps", "2"] if comando == "simulate" else ["--input", painel]
    assert cli.executar(argv) == cli.SAIDA_USO
    assert not destino.exists()


def test_csv_com_codificacao_invalida(tmp_path):
    caminho = tmp_path / "latin1.csv"
    caminho.write_bytes(b"1,2\n3,4\n\xe9,5\n6,7\n8,9\n")
    assert cli.executar(["test-single", "--input", str(caminho), *_args()]) == cli.SAIDA_DADOS


def test_planilha_corrompida(tmp_path):
    caminho = tmp_path / "corrompida.xlsx"
    caminho.write_bytes(b"PK\x03\x04 truncado")
    assert cli.executar(["estimate", "--input", str(caminho), *_args()]) == cli.SAIDA_DADOS


def test_saida_impossivel_de_gravar(tmp_path, painel):
    bloqueio = tmp_path / "arquivo"
    bloqueio.write_text("ocupado", encoding="utf-8")
    destino = bloqueio / "r.json"
    assert cli.executar(["test-single", "--input", painel, "--output", str(destino), *_args()]) == cli.SAIDA_DADOS


# ---------------- Simulação e histórico ---------------- #

def test_lista_cenarios(capsys):
    assert cli.executar(["simulate", "--list-scenarios"]) == 0
    linhas = capsys.readouterr().out.split()
    assert len(linhas) == 128
    assert "table3-a0-strong" in linhas


def test_simulacao_pequena(tmp_path):
    tabela = tmp_path / "t.csv"
    argv = ["simulate", "--scenario", "table2-a0-ar05-h0", "--reps", "2", "--output", str(tabela), *_args()]
    assert cli.executar(argv) == 0
    df = pd.read_csv(tabela)
    assert len(df) == len(config.ALPHAS_PADRAO)
    assert (df["statistic"] == "multi").all()
    manifesto = ler_relatorio(tmp_path / "t.csv.manifest.json")
    assert manifesto["result"]["reps"] == 2
    assert manifesto["result"]["experiment"] == "size"


def test_simulacao_respeita_alpha(tmp_path):
    tabela = tmp_path / "t.csv"
    argv = ["simulate", "--scenario", "table2-a0-ar05-h0", "--reps", "2", "--alpha", "0.1", "--output", str(tabela)]
    assert cli.executar(argv + _args()) == 0
    df = pd.read_csv(tabela)
    assert df["alpha"].tolist() == [0.1]


def test_alpha_padrao_nos_testes(tmp_path, painel):
    saida = tmp_path / "r.json"
    assert cli.executar(["test-single", "--input", painel, "--output", str(saida), *_args()]) == 0
    assert ler_relatorio(saida)["config"]["alpha"] == config.ALPHA_PADRAO


def test_cenario_desconhecido_na_simulacao(tmp_path):
    argv = ["simulate", "--scenario", "tabela-x", "--output", str(tmp_path / "t.csv"), *_args()]
    assert cli.executar(argv) == cli.SAIDA_DADOS


def test_registro_e_historico(tmp_path, painel, capsys):
    database.configurar_banco(f"sqlite:///{tmp_path / 'h.db'}")
    try:
        argv = ["test-single", "--input", painel, "--output", str(tmp_path / "r.json"), "--registrar", *_args()]
        assert cli.executar(argv) == 0
        assert cli.executar(["history", "--limit", "5"]) == 0
        saida = capsys.readouterr().out
        assert "test-single" in saida
        assert "semente=7" in saida
    finally:
        database.configurar_banco("sqlite:///:memory:")
