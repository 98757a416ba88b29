"""Camada de persistência do histórico de execuções usando SQLAlchemy.

Objetivos:
 - Engine configurável via DATABASE_URL (ver ``config``) ou ``configurar_banco``.
 - Criar a tabela EXECUCOES caso não exista.
 - Registrar cada execução da CLI (comando, semente efetiva, configuração e resultado em JSON)
   para que possa ser listada e reexecutada depois.
"""

from __future__ import annotations

import json
import logging
from datetime import datetime, timezone
from typing import Optional

from sqlalchemy import DateTime, Integer, String, Text, create_engine, select
from sqlalchemy.orm import Mapped, Session, declarative_base, mapped_column, sessionmaker

import config

logger = logging.getLogger(__name__)

engine = create_engine(config.DATABASE_URL, future=True, echo=False)
SessionLocal = sessionmaker(bind=engine, expire_on_commit=False, autoflush=False, autocommit=False, future=True)

Base = declarative_base()


def _agora() -> datetime:
    return datetime.now(timezone.utc).replace(tzinfo=None)


class ExecucaoModel(Base):
    """Uma execução registrada.

    A semente é guardada como texto: sementes de 63 bits não cabem com segurança em
    todos os tipos inteiros dos SGBDs suportados.
    """

    __tablename__ = "EXECUCOES"

    id: Mapped[int] = mapped_column(Integer, primary_key=True, autoincrement=True)
    comando: Mapped[str] = mapped_column(String(30), nullable=False, index=True)
    semente: Mapped[Optional[str]] = mapped_column(String(32), nullable=True)
    config_json: Mapped[str] = mapped_column(Text, nullable=False)
    resultado_json: Mapped[Optional[str]] = mapped_column(Text, nullable=True)
    versao: Mapped[str] = mapped_column(String(20), nullable=False)
    created_at: Mapped[datetime] = mapped_column(DateTime, default=_agora, nullable=False, index=True)

    def __repr__(self) -> str:  # pragma: no cover
        return f"<Execucao id={self.id} comando={self.comando!r} semente={self.semente}>"


def configurar_banco(url: str) -> None:
    """Troca a engine (ex.: ``sqlite:///:memory:`` em testes) e recria as tabelas."""
    global engine
    engine.dispose()
    engine = create_engine(url, future=True, echo=False)
    SessionLocal.configure(bind=engine)
    init_db()


def init_db() -> None:
    """Cria as tabelas se não existirem."""
    Base.metadata.create_all(engine)


def get_session() -> Session:
    return SessionLocal()


def _para_dict(r: ExecucaoModel, completo: bool = True) -> dict:
    out = {
        "id": r.id,
        "comando": r.comando,
        "semente": int(r.semente) if r.semente not in (None, "") else None,
        "versao": r.versao,
        "created_at": r.created_at.isoformat(timespec="seconds"),
    }
    if completo:
        out["config"] = json.loads(r.config_json)
        out["resultado"] = json.loads(r.resultado_json) if r.resultado_json else None
    return out


def salvar_execucao(*, comando: str, semente: Optional[int], configuracao: dict, resultado: Optional[dict] = None) -> int:
    """Registra uma execução; retorna o id (0 em caso de falha, sem interromper o comando)."""
    comando = (comando or "").strip()
    if not comando:
        raise ValueError("comando obrigatório")
    with get_session() as session:
        try:
            obj = ExecucaoModel(
                comando=comando,
                semente=str(int(semente)) if semente is not None else None,
                config_json=json.dumps(configuracao, sort_keys=True, default=str),
                resultado_json=json.dumps(resultado, sort_keys=True, default=str) if resultado is not None else None,
                versao=config.VERSAO,
            )
            session.add(obj)
            session.commit()
            session.refresh(obj)
            return obj.id
        except Exception as exc:
            # Não quebra o fluxo da aplicação por falha de registro
            logger.warning("Falha ao registrar execução: %s", exc)
            session.rollback()
            return 0


def listar_execucoes(limit: int = 10) -> list[dict]:
    """Últimas execuções, mais recentes primeiro (limite padrão 10)."""
    with get_session() as session:
        try:
            q = select(ExecucaoModel).order_by(ExecucaoModel.id.desc()).limit(int(limit))
            return [_para_dict(r, completo=False) for r in session.scalars(q).all()]
        except Exception as exc:
            logger.warning("Falha ao listar execuções: %s", exc)
            return []


def obter_execucao(execucao_id: int) -> Optional[dict]:
    with get_session() as session:
        r = session.get(ExecucaoModel, int(execucao_id))
        return _para_dict(r) if r is not None else None
