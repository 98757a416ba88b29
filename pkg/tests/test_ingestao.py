from __future__ import annotations

import numpy as np
import pytest
from openpyxl import Workbook

from erros import ErroDados
from ingestao import _parse_valor, load_csv, load_panel, save_csv


def _escrever(tmp_path, texto, nome="dados.csv"):
    caminho = tmp_path / nome
    caminho.write_text(texto, encoding="utf-8")
    return caminho


@pytest.mark.parametrize(
    "entrada, esperado",
    [("1.234,56", 1234.56), ("1,234.56", 1234.56), ("1234,5", 1234.5), (" -3.5 ", -3.5), ("1e-3", 0.001), (7, 7.0)],
)
def test_parse_valor(entrada, esperado):
    assert _parse_valor(entrada) == pytest.approx(esperado)


@pytest.mark.parametrize("entrada", ["", "abc", None, float("nan")])
def test_parse_valor_nao_numerico(entrada):
    assert _parse_valor(entrada) is None


def test_carrega_matriz_4_por_2(tmp_path):
    dados = load_csv(_escrever(tmp_path, "1,2\n3,4\n5,6\n7,8\n"))
    assert (dados.n, dados.p) == (4, 2)
    assert dados.values[2, 1] == 6.0


def test_cabecalho_e_linhas_em_branco(tmp_path):
    dados = load_csv(_escrever(tmp_path, "x1,x2\n1,2\n\n3,4\n"))
    assert dados.values.tolist() == [[1.0, 2.0], [3.0, 4.0]]


def test_linha_irregular_indica_numero(tmp_path):
    with pytest.raises(ErroDados, match="Linha 3 com 1 campo"):
        load_csv(_escrever(tmp_path, "1,2\n3,4\n5\n"))


def test_celula_nao_numerica(tmp_path):
    with pytest.raises(ErroDados, match="'abc' na linha 2, coluna 2"):
        load_csv(_escrever(tmp_path, "1,2\n3,abc\n"))


def test_arquivo_vazio(tmp_path):
    with pytest.raises(ErroDados, match="vazio"):
        load_csv(_escrever(tmp_path, "\n\n"))


def test_apenas_cabecalho(tmp_path):
    with pytest.raises(ErroDados, match="apenas cabeçalho"):
        load_csv(_escrever(tmp_path, "a,b\n"))


def test_arquivo_inexistente(tmp_path):
    with pytest.raises(ErroDados, match="não encontrado"):
        load_panel(tmp_path / "nada.csv")


def test_separador_ponto_e_virgula_com_virgula_decimal(tmp_path):
    dados = load_panel(_escrever(tmp_path, "a;b\n1,5;2\n-0,25;1.000,5\n"), sep=";")
    assert dados.values.tolist() == [[1.5, 2.0], [-0.25, 1000.5]]


def test_planilha_xlsx(tmp_path):
    wb = Workbook()
    ws = wb.active
    ws.append(["x1", "x2", "x3"])
    for i in range(5):
        ws.append([i, i * 0.5, -i])
    caminho = tmp_path / "painel.xlsx"
    wb.save(caminho)
    dados = load_panel(caminho)
    assert (dados.n, dados.p) == (5, 3)
    assert dados.values[4].tolist() == [4.0, 2.0, -4.0]


def test_formato_nao_suportado(tmp_path):
    with pytest.raises(ErroDados, match="Formato não suportado"):
        load_panel(_escrever(tmp_path, "{}", "dados.json"))


def test_codificacao_invalida_indica_linha(tmp_path):
    caminho = tmp_path / "latin1.csv"
    caminho.write_bytes(b"1,2\n3,4\n\xe9,5\n6,7\n")
    with pytest.raises(ErroDados, match="linha 3"):
        load_csv(caminho)


def test_planilha_corrompida(tmp_path):
    caminho = tmp_path / "corrompida.xlsx"
    caminho.write_bytes(b"isto nao e um zip")
    with pytest.raises(ErroDados, match="Planilha inválida"):
        load_panel(caminho)


def test_gravacao_preserva_valores(tmp_path, rng):
    X = rng.standard_normal((6, 3))
    caminho = save_csv(X, tmp_path / "saida" / "painel.csv")
    assert caminho.read_text(encoding="utf-8").splitlines()[0] == "x1,x2,x3"
    assert np.array_equal(load_csv(caminho).values, X)
