# src/rarefaction_lab/models.py

from sqlalchemy import Boolean, Column, DateTime, Float, ForeignKey, Integer, String, Text
from sqlalchemy.orm import declarative_base, relationship
import datetime

Base = declarative_base()


def _utcnow():
    return datetime.datetime.now(datetime.timezone.utc)


class SweepRun(Base):
    __tablename__ = "sweep_run"
    id             = Column(Integer, primary_key=True)
    config_digest  = Column(String, nullable=False, index=True)
    config_text    = Column(Text)
    status         = Column(String, default="pending")  # pending, completed, failed
    failure_reason = Column(Text)
    created_at     = Column(DateTime, default=_utcnow)
    updated_at     = Column(DateTime, default=_utcnow, onupdate=_utcnow)

    cases = relationship("CaseResult", back_populates="run")


class CaseResult(Base):
    __tablename__ = "case_result"
    id                = Column(Integer, primary_key=True)
    run_id            = Column(Integer, ForeignKey("sweep_run.id"), nullable=False)
    epsilon           = Column(Float, nullable=False)
    status            = Column(String, default="pending")
    failure_reason    = Column(Text)
    mu                = Column(Float)
    delta             = Column(Float)
    err_rho_inf       = Column(Float)
    err_m_inf         = Column(Float)
    energy_peak       = Column(Float)
    dissipation_total = Column(Float)
    bound_ratio       = Column(Float)
    phi_inf           = Column(Float)
    psi_inf           = Column(Float)
    a_priori_ok       = Column(Boolean)
    band_low          = Column(Float)
    band_high         = Column(Float)
    min_density       = Column(Float)
    speed_growth      = Column(Float)
    n_cells           = Column(Integer)
    steps             = Column(Integer)
    runtime           = Column(Float)
    created_at        = Column(DateTime, default=_utcnow)

    run = relationship("SweepRun", back_populates="cases")
