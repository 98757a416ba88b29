"""Processos geradores de dados e experimentos Monte Carlo.

Modelo: X_i = mu_i + H(i/n) Z_i, com Z_i ~ MVN(0, Sigma) independentes.

- ``CovarianceSpec``: AR(rho) (Sigma_ij = rho^|i-j|) ou CS(rho) (Sigma_ij = rho^{1(i != j)});
- ``TrendSpec``: tendências de variância A0..A4 e misturas (primeira metade / segunda metade);
- ``MeanPlan``: sem mudança, uma, duas, três mudanças ou plano WBS por zonas.

Os experimentos derivam, para cada réplica r, sementes próprias do painel e do bootstrap
a partir da semente mestre, de modo que o resultado não depende do número de threads.
Os cenários nomeados (``parse_scenario``) reproduzem as configurações de tamanho, poder e
estimação usadas como referência de aceitação.
"""

from __future__ import annotations

import logging
import math
import re
from dataclasses import dataclass, field, replace
from typing import Literal, Optional, Sequence

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from scipy.signal import lfilter

import config
from bootstrap import TipoEstatistica, bootstrap_draws, centered_gram, decide, observed_statistic
from core_stats import DataMatrix
from erros import ErroDominio
from fluxos import FLUXO_BOOTSTRAP_REPLICA, FLUXO_PAINEL, FLUXO_REPLICA, derivar_semente, gerador
from wbs import WbsConfig, adjusted_rand_index, wbs_estimate

logger = logging.getLogger(__name__)


# ---------------- Covariância ---------------- #

@dataclass(frozen=True)
class CovarianceSpec:
    kind: Literal["AR", "CS"]
    rho: float
    p: int

    def __post_init__(self) -> None:
        kind = str(self.kind).upper()
        if kind not in {"AR", "CS"}:
            raise ErroDominio(f"Covariância desconhecida: {self.kind!r} (use AR ou CS)")
        object.__setattr__(self, "kind", kind)
        rho = float(self.rho)
        if kind == "AR" and not -1.0 < rho < 1.0:
            raise ErroDominio(f"AR exige rho em (-1, 1); recebido {rho}")
        if kind == "CS" and not 0.0 <= rho < 1.0:
            raise ErroDominio(f"CS exige rho em [0, 1); recebido {rho}")
        if int(self.p) < 1:
            raise ErroDominio(f"Dimensão p deve ser >= 1; recebido {self.p}")

    def sigma(self) -> np.ndarray:
        idx = np.arange(self.p)
        if self.kind == "AR":
            return self.rho ** np.abs(idx[:, None] - idx[None, :]).astype(float)
        sigma = np.full((self.p, self.p), self.rho, dtype=float)
        np.fill_diagonal(sigma, 1.0)
        return sigma

    def frobenius_norm(self) -> float:
        p, rho = int(self.p), float(self.rho)
        if self.kind == "AR":
            d = np.arange(1, p)
            return math.sqrt(p + 2.0 * float(np.sum((p - d) * rho ** (2 * d))))
        return math.sqrt(p + p * (p - 1) * rho**2)

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """n linhas i.i.d. MVN(0, Sigma), sem fatoração de matriz."""
        eps = rng.standard_normal((n, self.p))
        if self.kind == "AR":
            c = math.sqrt(1.0 - self.rho**2)
            # z_1 = eps_1; z_l = rho z_{l-1} + c eps_l
            eps[:, 0] /= c
            return lfilter([c], [1.0, -self.rho], eps, axis=1)
        w = rng.standard_normal(n)
        return math.sqrt(self.rho) * w[:, None] + math.sqrt(1.0 - self.rho) * eps

    def to_dict(self) -> dict:
        return {"kind": self.kind, "rho": self.rho, "p": self.p}


# ---------------- Tendências ---------------- #

_TENDENCIAS_SIMPLES = ("A0", "A1", "A2", "A3", "A4")


def _h(kind: str, n: int) -> np.ndarray:
    i = np.arange(1, n + 1, dtype=float)
    if kind == "A0":
        return np.ones(n)
    if kind == "A1":
        return np.where(i <= n / 2, 0.2, 0.6)
    if kind == "A2":
        return i / n
    if kind == "A3":
        return 0.2 * (1.0 + np.cos(i / n**0.8) ** 2)
    return 0.2 + 0.1 * np.log1p(np.abs(i - n / 2))


@dataclass(frozen=True)
class TrendSpec:
    kind: str
    first: Optional["TrendSpec"] = None
    second: Optional["TrendSpec"] = None

    def __post_init__(self) -> None:
        kind = str(self.kind).upper()
        object.__setattr__(self, "kind", kind)
        if kind == "MIX":
            if self.first is None or self.second is None:
                raise ErroDominio("Mistura de tendências exige 'first' e 'second'")
        elif kind not in _TENDENCIAS_SIMPLES:
            raise ErroDominio(f"Tendência desconhecida: {self.kind!r}")

    @classmethod
    def parse(cls, texto: str) -> "TrendSpec":
        """``"A1"`` ou ``"A1+A2"`` (mistura: primeira tendência na metade inicial das coordenadas)."""
        partes = [t.strip().upper() for t in str(texto).split("+") if t.strip()]
        if len(partes) == 1:
            return cls(partes[0])
        if len(partes) == 2:
            return cls("MIX", first=cls(partes[0]), second=cls(partes[1]))
        raise ErroDominio(f"Tendência inválida: {texto!r}")

    @property
    def label(self) -> str:
        if self.kind == "MIX":
            return f"{self.first.label}+{self.second.label}"
        return self.kind

    def matrix(self, n: int, p: int) -> np.ndarray:
        """Diagonal de H(i/n) para cada i: matriz (n, p)."""
        if self.kind != "MIX":
            return np.repeat(_h(self.kind, n)[:, None], p, axis=1)
        if p < 2:
            raise ErroDominio("Mistura de tendências exige p >= 2")
        meio = p // 2
        return np.hstack([self.first.matrix(n, meio), self.second.matrix(n, p - meio)])


# ---------------- Médias ---------------- #

@dataclass(frozen=True, eq=False)
class MeanPlan:
    """Plano de médias.

    ``one``: mu_i = Delta para i >= k* (mudança após k* - 1).
    ``two``: mu_i = Delta para floor(n/3) <= i <= floor(2n/3).
    ``three``: Delta em floor(n/4)..floor(n/2) e em floor(3n/4)..n.
    ``wbs``: zonas (loc_{j-1}, loc_j] com médias nu_1 = 0, nu_{j+1} = nu_j + theta_j.
    """

    kind: Literal["null", "one", "two", "three", "wbs"] = "null"
    delta: object = 0.0
    k_star: Optional[int] = None
    locations: tuple[int, ...] = ()
    thetas: tuple = ()

    def __post_init__(self) -> None:
        if self.kind not in {"null", "one", "two", "three", "wbs"}:
            raise ErroDominio(f"Plano de médias desconhecido: {self.kind!r}")
        if self.kind == "wbs" and len(self.locations) != len(self.thetas):
            raise ErroDominio("Plano WBS exige um theta por ponto de mudança")
        object.__setattr__(self, "locations", tuple(int(x) for x in self.locations))

    def with_delta(self, delta) -> "MeanPlan":
        return replace(self, delta=delta)

    def delta_vector(self, p: int):
        d = np.asarray(self.delta, dtype=float)
        if d.ndim == 0:
            return np.full(p, float(d))
        if d.shape != (p,):
            raise ErroDominio(f"Delta com dimensão {d.shape}; esperado ({p},)")
        return d

    def _k(self, n: int) -> int:
        return int(self.k_star) if self.k_star is not None else n // 2

    def change_points(self, n: int) -> list[int]:
        """Pontos de mudança verdadeiros t (a média muda entre t e t + 1)."""
        if self.kind == "null":
            return []
        if self.kind == "one":
            return [self._k(n) - 1]
        if self.kind == "two":
            return [n // 3 - 1, (2 * n) // 3]
        if self.kind == "three":
            return [n // 4 - 1, n // 2, (3 * n) // 4 - 1]
        return list(self.locations)

    def validate(self, n: int, p: int) -> None:
        pontos = self.change_points(n)
        for t in pontos:
            if not 1 <= t <= n - 1:
                raise ErroDominio(f"Ponto de mudança {t} fora de (1, {n})")
        if self.kind == "wbs":
            if list(pontos) != sorted(set(pontos)):
                raise ErroDominio("Locais do plano WBS devem ser estritamente crescentes")
            for theta in self.thetas:
                _vetor(theta, p)
        elif self.kind != "null":
            self.delta_vector(p)

    def mean_matrix(self, n: int, p: int) -> np.ndarray:
        mu = np.zeros((n, p))
        i = np.arange(1, n + 1)
        if self.kind == "null":
            return mu
        if self.kind == "wbs":
            nu = np.zeros(p)
            for loc, theta in zip(self.locations, self.thetas):
                nu = nu + _vetor(theta, p)
                mu[i > loc] = nu
            return mu
        delta = self.delta_vector(p)
        if self.kind == "one":
            mascara = i >= self._k(n)
        elif self.kind == "two":
            mascara = (i >= n // 3) & (i <= (2 * n) // 3)
        else:
            mascara = ((i >= n // 4) & (i <= n // 2)) | (i >= (3 * n) // 4)
        mu[mascara] = delta
        return mu

    def to_dict(self) -> dict:
        d = np.asarray(self.delta, dtype=float)
        return {
            "kind": self.kind,
            "delta": float(d) if d.ndim == 0 else d.tolist(),
            "k_star": self.k_star,
            "locations": list(self.locations),
            "thetas": [np.asarray(t, dtype=float).tolist() for t in self.thetas],
        }


def _vetor(valor, p: int) -> np.ndarray:
    v = np.asarray(valor, dtype=float)
    if v.ndim == 0:
        return np.full(p, float(v))
    if v.shape != (p,):
        raise ErroDominio(f"Vetor com dimensão {v.shape}; esperado ({p},)")
    return v


# ---------------- Cenário ---------------- #

@dataclass(frozen=True, eq=False)
class ScenarioSpec:
    n: int
    p: int
    covariance: CovarianceSpec
    trend: TrendSpec = field(default_factory=lambda: TrendSpec("A0"))
    mean_plan: MeanPlan = field(default_factory=MeanPlan)
    name: str = ""

    def __post_init__(self) -> None:
        if int(self.n) < 4:
            raise ErroDominio(f"Cenário exige n >= 4; recebido n = {self.n}")
        if int(self.covariance.p) != int(self.p):
            raise ErroDominio(f"Covariância com p = {self.covariance.p}; cenário com p = {self.p}")
        if self.trend.kind == "MIX" and int(self.p) < 2:
            raise ErroDominio("Mistura de tendências exige p >= 2")
        self.mean_plan.validate(int(self.n), int(self.p))

    def with_mean_plan(self, plano: MeanPlan) -> "ScenarioSpec":
        return replace(self, mean_plan=plano)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "n": self.n,
            "p": self.p,
            "covariance": self.covariance.to_dict(),
            "trend": self.trend.label,
            "mean_plan": self.mean_plan.to_dict(),
        }


def sample_panel(spec: ScenarioSpec, seed: int) -> DataMatrix:
    rng = gerador(seed, FLUXO_PAINEL)
    Z = spec.covariance.draw(rng, spec.n)
    X = spec.mean_plan.mean_matrix(spec.n, spec.p) + spec.trend.matrix(spec.n, spec.p) * Z
    return DataMatrix.from_array(X)


def snr(spec: ScenarioSpec) -> float:
    """n ||Delta||^2 / ||Sigma||_F (0 sem mudança)."""
    if spec.mean_plan.kind in {"null", "wbs"}:
        return 0.0
    delta = spec.mean_plan.delta_vector(spec.p)
    return float(spec.n * np.dot(delta, delta) / spec.covariance.frobenius_norm())


# ---------------- Experimentos de rejeição ---------------- #

def _rejeicoes_replica(
    spec: ScenarioSpec,
    alphas: Sequence[float],
    M: int,
    seed: int,
    r: int,
    statistic: TipoEstatistica,
) -> list[bool]:
    X = sample_panel(spec, derivar_semente(seed, FLUXO_REPLICA, r))
    estatistica = observed_statistic(X, statistic)
    draws = bootstrap_draws(
        centered_gram(X), statistic, M, derivar_semente(seed, FLUXO_BOOTSTRAP_REPLICA, r)
    )
    return [decide(estatistica, draws, a).reject for a in alphas]


def _mapear(func, itens, threads: int) -> list:
    if threads <= 1:
        return [func(i) for i in itens]
    return Parallel(n_jobs=threads, prefer="threads")(delayed(func)(i) for i in itens)


def run_rejection_experiment(
    spec: ScenarioSpec,
    alphas: Sequence[float] = tuple(config.ALPHAS_PADRAO),
    reps: int = config.REPLICAS_EXPERIMENTO,
    M: int = config.REPLICAS_BOOTSTRAP,
    seed: int = 0,
    statistic: TipoEstatistica = "single",
    threads: int = 1,
) -> pd.DataFrame:
    """Taxa de rejeição por nível alpha; um bootstrap por réplica serve a todos os níveis."""
    alphas = [float(a) for a in alphas]
    if not alphas or any(not 0.0 < a < 1.0 for a in alphas):
        raise ErroDominio(f"Níveis alpha inválidos: {alphas}")
    reps = int(reps)
    if reps < 1:
        raise ErroDominio(f"Número de réplicas deve ser >= 1; recebido {reps}")
    if statistic not in ("single", "multi"):
        raise ErroDominio(f"Tipo de estatística inválido: {statistic!r}")

    decisoes = _mapear(
        lambda r: _rejeicoes_replica(spec, alphas, M, seed, r, statistic),
        range(1, reps + 1),
        threads,
    )
    tabela = np.asarray(decisoes, dtype=bool).reshape(reps, len(alphas))
    linhas = []
    for j, alpha in enumerate(alphas):
        rejeicoes = int(tabela[:, j].sum())
        taxa = rejeicoes / reps
        linhas.append({
            "scenario": spec.name,
            "statistic": statistic,
            "alpha": alpha,
            "rejections": rejeicoes,
            "rate": taxa,
            "se": math.sqrt(taxa * (1.0 - taxa) / reps),
            "reps": reps,
        })
    logger.debug("Experimento %s: %s", spec.name or "(sem nome)", [l["rate"] for l in linhas])
    return pd.DataFrame(linhas)


def run_size_experiment(
    spec: ScenarioSpec,
    alphas: Sequence[float] = tuple(config.ALPHAS_PADRAO),
    reps: int = config.REPLICAS_EXPERIMENTO,
    M: int = config.REPLICAS_BOOTSTRAP,
    seed: int = 0,
    statistic: TipoEstatistica = "single",
    threads: int = 1,
) -> pd.DataFrame:
    if spec.mean_plan.kind != "null":
        raise ErroDominio("Experimento de tamanho exige plano de médias nulo")
    return run_rejection_experiment(spec, alphas, reps, M, seed, statistic, threads)


def run_power_curve(
    spec: ScenarioSpec,
    deltas: Sequence[float],
    alpha: float = config.ALPHA_PADRAO,
    reps: int = config.REPLICAS_EXPERIMENTO,
    M: int = config.REPLICAS_BOOTSTRAP,
    seed: int = 0,
    statistic: TipoEstatistica = "single",
    threads: int = 1,
) -> pd.DataFrame:
    """Poder para cada Delta da grade (escalar => Delta * 1_p).

    Todos os pontos da curva usam a mesma semente mestre (números aleatórios comuns);
    com Delta = 0 o resultado coincide com o experimento de tamanho.
    """
    if spec.mean_plan.kind != "one":
        raise ErroDominio("Curva de poder exige plano com uma mudança")
    blocos = []
    for delta in deltas:
        cenario = spec.with_mean_plan(spec.mean_plan.with_delta(delta))
        tabela = run_rejection_experiment(cenario, [alpha], reps, M, seed, statistic, threads)
        d = np.asarray(delta, dtype=float)
        tabela.insert(1, "delta", float(d) if d.ndim == 0 else float(np.linalg.norm(d)))
        tabela.insert(2, "snr", snr(cenario))
        blocos.append(tabela)
    return pd.concat(blocos, ignore_index=True)


# ---------------- Experimento WBS ---------------- #

@dataclass(frozen=True, eq=False)
class WbsExperimentResult:
    histogram: dict[int, int]
    mse: float
    mean_ari: float
    per_rep: pd.DataFrame

    def to_frame(self) -> pd.DataFrame:
        linhas = [{"n_hat_minus_n": k, "count": v} for k, v in sorted(self.histogram.items())]
        return pd.DataFrame(linhas)

    def to_dict(self) -> dict:
        return {
            "histogram": {str(k): v for k, v in sorted(self.histogram.items())},
            "mse": self.mse,
            "mean_ari": self.mean_ari,
            "reps": int(len(self.per_rep)),
        }


def run_wbs_experiment(
    spec: ScenarioSpec,
    cfg: WbsConfig,
    reps: int = 50,
    seed: int = 0,
    threads: int = 1,
) -> WbsExperimentResult:
    """Histograma de N^ - N (classes -3..+1 sempre presentes), MSE de N^ - N e ARI médio."""
    reps = int(reps)
    if reps < 1:
        raise ErroDominio(f"Número de réplicas deve ser >= 1; recebido {reps}")
    verdade = spec.mean_plan.change_points(spec.n)

    def _replica(r: int) -> dict:
        X = sample_panel(spec, derivar_semente(seed, FLUXO_REPLICA, r))
        estimativa = wbs_estimate(X, replace(cfg, seed=derivar_semente(seed, FLUXO_BOOTSTRAP_REPLICA, r)))
        return {
            "rep": r,
            "n_hat": len(estimativa.locations),
            "diff": len(estimativa.locations) - len(verdade),
            "ari": adjusted_rand_index(estimativa.locations, verdade, spec.n),
            "locations": " ".join(str(t) for t in estimativa.locations),
        }

    por_replica = pd.DataFrame(_mapear(_replica, range(1, reps + 1), threads))
    histograma = {k: 0 for k in range(-3, 2)}
    for diff, contagem in por_replica["diff"].value_counts().items():
        histograma[int(diff)] = int(contagem)
    return WbsExperimentResult(
        histogram=histograma,
        mse=float(np.mean(por_replica["diff"].to_numpy(dtype=float) ** 2)),
        mean_ari=float(por_replica["ari"].mean()),
        per_rep=por_replica,
    )


# ---------------- Cenários nomeados ---------------- #

TipoExperimento = Literal["size", "rejection", "power", "wbs"]

_TENDENCIAS_TABELA1 = ("a0", "a1", "a2", "a3", "a4", "a1+a2", "a1+a3", "a1+a4")
_TENDENCIAS_TABELA2 = ("a0", "a1", "a2", "a1+a2")
_COVARIANCIAS = {"ar05": ("AR", 0.5), "ar08": ("AR", 0.8), "cs05": ("CS", 0.5)}
_DIMENSOES_TABELA1 = ((400, 100), (100, 100), (400, 400))
GRADE_DELTA_PADRAO: tuple[float, ...] = tuple(np.round(np.linspace(0.0, 0.25, 6), 3))


@dataclass(frozen=True, eq=False)
class NamedScenario:
    name: str
    spec: ScenarioSpec
    experiment: TipoExperimento
    statistic: TipoEstatistica = "single"
    deltas: tuple[float, ...] = ()


def _covariancia(token: str, p: int) -> CovarianceSpec:
    token = token.lower()
    if token == "cs":
        token = "cs05"
    if token not in _COVARIANCIAS:
        raise ErroDominio(f"Covariância desconhecida no cenário: {token!r}")
    kind, rho = _COVARIANCIAS[token]
    return CovarianceSpec(kind, rho, p)


def wbs_plan(p: int, k: float, locations: Sequence[int] = (30, 60, 90)) -> MeanPlan:
    """theta = (k, -k, k, ...) * 1_p nas posições dadas."""
    thetas = tuple(((-1) ** j) * k for j in range(len(locations)))
    return MeanPlan("wbs", locations=tuple(locations), thetas=thetas)


_PADRAO_NOME = re.compile(
    r"^(?:table1-(?P<t1>[a0-9+]+)-(?P<c1>ar05|ar08|cs05|cs)-n(?P<n>\d+)-p(?P<p>\d+)"
    r"|table2-(?P<t2>[a0-9+]+)-(?P<c2>ar05|ar08)-(?P<h>h0|2cp|3cp)"
    r"|table3-(?P<t3>[a0-9+]+)-(?P<forca>weak|strong)"
    r"|fig1-(?P<t4>[a0-9+]+)-(?P<c4>ar05|ar08|cs05|cs))$"
)


def parse_scenario(nome: str) -> NamedScenario:
    """Resolve um cenário nomeado (ver ``list_scenarios``)."""
    nome = str(nome).strip().lower()
    m = _PADRAO_NOME.match(nome)
    if not m:
        raise ErroDominio(f"Cenário desconhecido: {nome!r}")
    g = m.groupdict()
    if g["t1"]:
        n, p = int(g["n"]), int(g["p"])
        spec = ScenarioSpec(n, p, _covariancia(g["c1"], p), TrendSpec.parse(g["t1"]), MeanPlan(), nome)
        return NamedScenario(nome, spec, "size")
    if g["t2"]:
        n = p = 50
        plano = {"h0": MeanPlan(), "2cp": MeanPlan("two", 0.2), "3cp": MeanPlan("three", 0.2)}[g["h"]]
        spec = ScenarioSpec(n, p, _covariancia(g["c2"], p), TrendSpec.parse(g["t2"]), plano, nome)
        return NamedScenario(nome, spec, "size" if g["h"] == "h0" else "rejection", statistic="multi")
    if g["t3"]:
        n, p = 120, 50
        k = math.sqrt(2.5 / p) * (2.0 if g["forca"] == "strong" else 1.0)
        spec = ScenarioSpec(n, p, CovarianceSpec("AR", 0.0, p), TrendSpec.parse(g["t3"]), wbs_plan(p, k), nome)
        return NamedScenario(nome, spec, "wbs")
    n = p = 100
    spec = ScenarioSpec(n, p, _covariancia(g["c4"], p), TrendSpec.parse(g["t4"]), MeanPlan("one", 0.0), nome)
    return NamedScenario(nome, spec, "power", deltas=GRADE_DELTA_PADRAO)


def list_scenarios() -> list[str]:
    nomes: list[str] = []
    for n, p in _DIMENSOES_TABELA1:
        for cov in _COVARIANCIAS:
            nomes.extend(f"table1-{t}-{cov}-n{n}-p{p}" for t in _TENDENCIAS_TABELA1)
    for cov in ("ar05", "ar08"):
        for h in ("h0", "2cp", "3cp"):
            nomes.extend(f"table2-{t}-{cov}-{h}" for t in _TENDENCIAS_TABELA2)
    for forca in ("weak", "strong"):
        nomes.extend(f"table3-{t}-{forca}" for t in _TENDENCIAS_TABELA1)
    for cov in ("ar05", "ar08"):
        nomes.extend(f"fig1-{t}-{cov}" for t in _TENDENCIAS_TABELA1)
    return nomes
