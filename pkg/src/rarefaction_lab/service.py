# src/rarefaction_lab/service.py

import hashlib
import json
import logging
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import asdict
from typing import Callable, List, NamedTuple, Optional

from .db       import make_session_factory
from .errors   import ManifestError
from .limitlab import SweepConfig, SweepRecord, run_case
from .models   import CaseResult, SweepRun


LOG = logging.getLogger(__name__)

RECORD_FIELDS = (
    "mu", "delta", "err_rho_inf", "err_m_inf", "energy_peak", "dissipation_total",
    "bound_ratio", "phi_inf", "psi_inf", "a_priori_ok", "band_low", "band_high",
    "min_density", "speed_growth", "n_cells", "steps", "runtime",
)


class CaseOutcome(NamedTuple):
    epsilon: float
    record:  Optional[SweepRecord]
    error:   Optional[str]

    @property
    def ok(self) -> bool:
        return self.record is not None


def config_digest(config: SweepConfig) -> str:
    canonical = json.dumps(asdict(config), sort_keys=True)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def process_case(config: SweepConfig, epsilon: float, keep_snapshot: bool = False) -> CaseOutcome:
    try:
        return CaseOutcome(epsilon, run_case(config, epsilon, keep_snapshot), None)
    except Exception as e:
        LOG.exception("Error running case epsilon=%g", epsilon)
        return CaseOutcome(epsilon, None, f"{type(e).__name__}: {e}")


def run_sweep(config: SweepConfig, workers: int = 1, keep_snapshots: bool = False,
              on_outcome: Optional[Callable[[CaseOutcome], None]] = None) -> List[CaseOutcome]:
    """
    One run_case per ε. Outcomes are reported to `on_outcome` in this
    process as they complete and returned sorted by ε, largest first.
    """
    outcomes = []
    if workers <= 1:
        for eps in config.epsilons:
            outcome = process_case(config, eps, keep_snapshots)
            outcomes.append(outcome)
            if on_outcome:
                on_outcome(outcome)
    else:
        LOG.info("running %d cases on %d workers", len(config.epsilons), workers)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(process_case, config, eps, keep_snapshots) for eps in config.epsilons]
            for fut in as_completed(futures):
                outcome = fut.result()
                outcomes.append(outcome)
                if on_outcome:
                    on_outcome(outcome)
    return sorted(outcomes, key=lambda o: -o.epsilon)


class SweepLedger:
    """Bookkeeping of sweep runs and their cases in the SQL ledger."""

    def __init__(self, database_url: str):
        self.SessionLocal = make_session_factory(database_url)
        self.run_id: Optional[int] = None

    def open(self, config: SweepConfig, config_text: str = "", force: bool = False) -> int:
        digest = config_digest(config)
        session = self.SessionLocal()
        try:
            done = session.query(SweepRun).filter_by(config_digest=digest, status="completed").first()
            if done is not None and not force:
                raise ManifestError(
                    f"a completed sweep with this configuration already exists (run {done.id}); use --force to rerun"
                )
            run = SweepRun(config_digest=digest, config_text=config_text, status="pending")
            session.add(run)
            session.commit()
            self.run_id = run.id
            LOG.info("ledger run %d opened (config %s)", run.id, digest[:12])
            return run.id
        finally:
            session.close()

    def record_case(self, outcome: CaseOutcome):
        session = self.SessionLocal()
        try:
            row = CaseResult(run_id=self.run_id, epsilon=outcome.epsilon)
            if outcome.ok:
                for name in RECORD_FIELDS:
                    setattr(row, name, getattr(outcome.record, name))
                row.status = "completed"
            else:
                row.status = "failed"
                row.failure_reason = outcome.error
            session.add(row)
            session.commit()
        except Exception:
            session.rollback()
            raise
        finally:
            session.close()

    def finish(self, outcomes: List[CaseOutcome]):
        failed = [o for o in outcomes if not o.ok]
        session = self.SessionLocal()
        try:
            run = session.get(SweepRun, self.run_id)
            if failed:
                run.status = "failed"
                run.failure_reason = "; ".join(f"epsilon={o.epsilon:g}: {o.error}" for o in failed)
            else:
                run.status = "completed"
            session.commit()
        finally:
            session.close()
