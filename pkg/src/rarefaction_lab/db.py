# src/rarefaction_lab/db.py
"""
Each output directory carries its own ledger, so engines are built per
URL by `make_session_factory` rather than once at import time.
"""

from sqlalchemy import create_engine
from sqlalchemy.orm import sessionmaker
from .models import Base


def make_session_factory(database_url: str) -> sessionmaker:
    """Engine + session factory for one ledger; tables are created on first use."""
    engine = create_engine(database_url, echo=False, future=True)
    Base.metadata.create_all(bind=engine)
    return sessionmaker(bind=engine, autoflush=False, autocommit=False, future=True)
