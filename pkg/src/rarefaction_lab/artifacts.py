# src/rarefaction_lab/artifacts.py
"""
File artifacts of a sweep: the per-ε CSV, profile snapshots and JSON
reports. Floats are written with 17 significant digits so that reading a
file back reproduces the in-memory values exactly.
"""

import json
import logging
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .errors import ConfigError
from .gasdyn import GasModel
from .limitlab import RateFit, SweepRecord
from .smoothwave import RateLaw, perturbation_rates, rate_exponents

LOG = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"

SWEEP_COLUMNS = [
    "epsilon", "mu", "delta", "err_rho_inf", "err_m_inf", "ratio_rho", "ratio_m",
    "energy_peak", "dissipation_total", "runtime_s",
]
EXTRA_COLUMNS = [
    "bound_ratio", "bound_ratio_rel", "phi_inf", "psi_inf", "ratio_phi", "ratio_psi",
    "a_priori_ok", "band_low", "band_high", "min_density", "speed_growth", "n_cells", "steps",
    "gamma",
]
PROFILE_COLUMNS = ["x", "rho_eps", "rho_exact", "m_eps", "m_exact"]


def sweep_frame(records: Sequence[SweepRecord], gas: GasModel) -> pd.DataFrame:
    rates = rate_exponents(gas)
    laws = perturbation_rates(gas)
    # the unknown constant in the energy bound is taken as the sweep maximum
    top = max((r.bound_ratio for r in records), default=0.0)
    rows = []
    for r in records:
        rows.append({
            "epsilon": r.epsilon, "mu": r.mu, "delta": r.delta,
            "err_rho_inf": r.err_rho_inf, "err_m_inf": r.err_m_inf,
            "ratio_rho": r.err_rho_inf / rates.density(r.epsilon),
            "ratio_m": r.err_m_inf / rates.momentum(r.epsilon),
            "energy_peak": r.energy_peak, "dissipation_total": r.dissipation_total,
            "runtime_s": r.runtime,
            "bound_ratio": r.bound_ratio,
            "bound_ratio_rel": r.bound_ratio / top if top > 0.0 else np.nan,
            "phi_inf": r.phi_inf, "psi_inf": r.psi_inf,
            "ratio_phi": r.phi_inf / laws.phi(r.epsilon), "ratio_psi": r.psi_inf / laws.psi(r.epsilon),
            "a_priori_ok": bool(r.a_priori_ok), "band_low": r.band_low, "band_high": r.band_high,
            "min_density": r.min_density,
            "speed_growth": r.speed_growth, "n_cells": int(r.n_cells), "steps": int(r.steps),
            "gamma": gas.gamma,
        })
    return pd.DataFrame(rows, columns=SWEEP_COLUMNS + EXTRA_COLUMNS)


def write_sweep_csv(path: Path, records: Sequence[SweepRecord], gas: GasModel):
    sweep_frame(records, gas).to_csv(path, index=False, float_format=FLOAT_FORMAT)
    LOG.info("wrote %d sweep rows to %s", len(records), path)


def read_sweep_csv(path: Path) -> Tuple[List[SweepRecord], Optional[float]]:
    """Records from a sweep CSV, and the γ column when the file carries one."""
    frame = pd.read_csv(path)
    missing = [c for c in ("epsilon", "mu", "delta", "err_rho_inf", "err_m_inf") if c not in frame.columns]
    if missing:
        raise ConfigError("input", f"{path} lacks sweep columns: {', '.join(missing)}")

    def opt(row, key, default):
        return row[key] if key in frame.columns else default

    records = []
    for _, row in frame.iterrows():
        records.append(SweepRecord(
            epsilon=float(row["epsilon"]), mu=float(row["mu"]), delta=float(row["delta"]),
            err_rho_inf=float(row["err_rho_inf"]), err_m_inf=float(row["err_m_inf"]),
            energy_peak=float(opt(row, "energy_peak", 0.0)),
            dissipation_total=float(opt(row, "dissipation_total", 0.0)),
            runtime=float(opt(row, "runtime_s", 0.0)),
            phi_inf=float(opt(row, "phi_inf", 0.0)), psi_inf=float(opt(row, "psi_inf", 0.0)),
            bound_ratio=float(opt(row, "bound_ratio", 0.0)),
            a_priori_ok=bool(opt(row, "a_priori_ok", True)),
            band_low=float(opt(row, "band_low", np.nan)), band_high=float(opt(row, "band_high", np.nan)),
            min_density=float(opt(row, "min_density", np.nan)),
            speed_growth=float(opt(row, "speed_growth", 1.0)),
            n_cells=int(opt(row, "n_cells", 0)), steps=int(opt(row, "steps", 0)),
        ))
    gamma = None
    if "gamma" in frame.columns and len(frame):
        gamma = float(frame["gamma"].iloc[0])
    return records, gamma


def write_profile_snapshot(path: Path, snapshot: Mapping[str, np.ndarray]):
    frame = pd.DataFrame({c: snapshot[c] for c in PROFILE_COLUMNS})
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)


def profile_name(epsilon: float) -> str:
    return f"profile_eps_{epsilon:.6e}.csv"


def _law_dict(law: RateLaw) -> Dict[str, float]:
    return {"exponent": law.exponent, "log_power": law.log_power}


def fit_report(fits: Mapping[str, RateFit], gas: GasModel) -> dict:
    rates = rate_exponents(gas)
    perturbation = perturbation_rates(gas)
    laws = {"density": rates.density, "momentum": rates.momentum,
            "phi": perturbation.phi, "psi": perturbation.psi}
    report = {"gamma": gas.gamma, "log_augmented": rates.log_augmented}
    for name, fit in fits.items():
        entry = fit._asdict()
        entry["ratio_series"] = list(fit.ratio_series)
        entry["law"] = _law_dict(laws[name])
        report[name] = entry
    return report


def dumps_json(payload) -> str:
    return json.dumps(payload, sort_keys=True, indent=2, default=_jsonable) + "\n"


def write_json(path: Optional[Path], payload) -> str:
    text = dumps_json(payload)
    if path is not None:
        Path(path).write_text(text)
    return text


def _jsonable(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serialisable: {type(obj).__name__}")
