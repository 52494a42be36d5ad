#!/usr/bin/env python3
# src/rarefaction_lab/cli.py

import logging
import math
from io import StringIO
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import click
import numpy as np
import pandas as pd
from dotenv import dotenv_values, load_dotenv

from rarefaction_lab.artifacts import (
    FLOAT_FORMAT, fit_report, profile_name, read_sweep_csv, write_json,
    write_profile_snapshot, write_sweep_csv,
)
from rarefaction_lab.errors import ConfigError, DomainError, RarefactionLabError
from rarefaction_lab.gasdyn import (
    GasModel, RightState, build_cutoff_wave, build_exact_wave, eval_cutoff_wave,
    eval_exact_wave,
)
from rarefaction_lab.limitlab import SweepConfig, cutoff_gap, fit_records
from rarefaction_lab.settings import Settings, database_url_for, load_settings
from rarefaction_lab.smoothwave import (
    build_approx_wave, default_samples, eval_approx_wave, verify_burgers_estimates,
    verify_wave_identities,
)
import rarefaction_lab.service as service_module


LOG = logging.getLogger(__name__)

REQUIRED_KEYS = ("gamma", "rho_plus", "u_plus", "epsilons", "h", "t_end")
DEFAULTS      = {"c_mu": 1.0, "cells_per_delta": 50.0, "order": 2, "cfl": 0.45, "n_samples": 8}
OPTIONAL_KEYS = tuple(DEFAULTS) + ("sample_times", "workers")


# ─── Config documents ─────────────────────────────────────────────────────────

def read_document(text: str) -> Dict[str, str]:
    """Flat key=value document; `#` comments, arrays comma-separated."""
    values = dotenv_values(stream=StringIO(text))
    doc = {}
    for key, value in values.items():
        key = key.strip().lower()
        if key not in REQUIRED_KEYS + OPTIONAL_KEYS:
            raise ConfigError(key, "unknown key")
        if value is None or not value.strip():
            raise ConfigError(key, "missing value")
        doc[key] = value.strip()
    return doc


def _number(doc: Dict[str, str], key: str) -> float:
    try:
        value = float(doc[key])
    except ValueError:
        raise ConfigError(key, f"not a number: {doc[key]!r}") from None
    if not math.isfinite(value):
        raise ConfigError(key, f"must be finite, got {doc[key]!r}")
    return value


def _integer(doc: Dict[str, str], key: str) -> int:
    try:
        return int(doc[key])
    except ValueError:
        raise ConfigError(key, f"not an integer: {doc[key]!r}") from None


def _numbers(doc: Dict[str, str], key: str) -> List[float]:
    items = [s.strip() for s in doc[key].split(",") if s.strip()]
    if not items:
        raise ConfigError(key, "empty list")
    return [_number({key: s}, key) for s in items]


def parse_config(text: str) -> SweepConfig:
    """Validated SweepConfig with every ε's schedule checked for feasibility."""
    doc = read_document(text)
    for key in REQUIRED_KEYS:
        if key not in doc:
            raise ConfigError(key, "missing key")

    gamma = _number(doc, "gamma")
    try:
        GasModel(gamma)
    except DomainError as e:
        raise ConfigError("gamma", str(e)) from e

    h, t_end = _number(doc, "h"), _number(doc, "t_end")
    if "sample_times" in doc:
        sample_times = tuple(_numbers(doc, "sample_times"))
    else:
        n = _integer(doc, "n_samples") if "n_samples" in doc else DEFAULTS["n_samples"]
        if n < 1:
            raise ConfigError("n_samples", f"must be at least 1, got {n}")
        sample_times = tuple(np.linspace(h, t_end, n).tolist()) if h < t_end else ()

    return SweepConfig(
        gamma=gamma,
        rho_plus=_number(doc, "rho_plus"),
        u_plus=_number(doc, "u_plus"),
        epsilons=tuple(_numbers(doc, "epsilons")),
        h=h,
        t_end=t_end,
        c_mu=_number(doc, "c_mu") if "c_mu" in doc else DEFAULTS["c_mu"],
        cells_per_delta=_number(doc, "cells_per_delta") if "cells_per_delta" in doc else DEFAULTS["cells_per_delta"],
        order=_integer(doc, "order") if "order" in doc else DEFAULTS["order"],
        cfl=_number(doc, "cfl") if "cfl" in doc else DEFAULTS["cfl"],
        sample_times=sample_times,
    )


def _parse_range(text: str):
    parts = text.split(":")
    if len(parts) != 3:
        raise click.BadParameter(f"expected a:b:n, got {text!r}", param_hint="--xi-range")
    try:
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise click.BadParameter(f"expected a:b:n, got {text!r}", param_hint="--xi-range") from None
    if not lo < hi or n < 2:
        raise click.BadParameter("need a < b and n >= 2", param_hint="--xi-range")
    return np.linspace(lo, hi, n)


def _emit(text: str, output: Optional[str]):
    if output:
        Path(output).write_text(text)
        LOG.info("wrote %s", output)
    else:
        click.echo(text, nl=False)


# ─── Commands ─────────────────────────────────────────────────────────────────

@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Debug logging")
@click.option("-q", "--quiet",   is_flag=True, help="Warnings and errors only")
@click.pass_context
def cli(ctx, verbose: bool, quiet: bool):
    """Vanishing-viscosity experiments for vacuum rarefaction waves."""
    settings = load_settings()
    level = settings.log_level_value
    if verbose:
        level = logging.DEBUG
    elif quiet:
        level = logging.WARNING
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    ctx.obj = settings


@cli.command()
@click.argument("config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--output", default="results", show_default=True, help="Output directory")
@click.option("-j", "--jobs", type=int, default=None, help="Parallel cases (overrides RAREFACTION_WORKERS)")
@click.option("--force", is_flag=True, help="Rerun even if this configuration already completed")
@click.pass_obj
def sweep(settings: Settings, config_path: str, output: str, jobs: Optional[int], force: bool):
    """Run one viscous case per epsilon and write sweep.csv, fit.json and profiles."""
    text = Path(config_path).read_text()
    config = parse_config(text)
    doc = read_document(text)
    workers = jobs or (_integer(doc, "workers") if "workers" in doc else settings.workers)
    if workers < 1:
        raise ConfigError("workers", f"must be at least 1, got {workers}")

    out = Path(output)
    out.mkdir(parents=True, exist_ok=True)
    ledger = service_module.SweepLedger(database_url_for(settings, out))
    ledger.open(config, text, force=force)

    outcomes = service_module.run_sweep(config, workers=workers, keep_snapshots=True,
                                        on_outcome=ledger.record_case)
    records = [o.record for o in outcomes if o.ok]
    gas = config.gas
    write_sweep_csv(out / "sweep.csv", records, gas)

    profiles = out / "profiles"
    profiles.mkdir(exist_ok=True)
    for r in records:
        if r.snapshot is not None:
            write_profile_snapshot(profiles / profile_name(r.epsilon), r.snapshot)

    if len(records) >= 3:
        write_json(out / "fit.json", fit_report(fit_records(records, gas), gas))
    else:
        LOG.warning("only %d completed cases; no rate fit written", len(records))

    ledger.finish(outcomes)
    failed = [o for o in outcomes if not o.ok]
    for o in failed:
        click.echo(f"case epsilon={o.epsilon:g} failed: {o.error}", err=True)
    click.echo(f"{len(records)}/{len(outcomes)} cases completed; results in {out}")
    return 1 if failed else 0


@cli.command()
@click.option("--gamma",    type=float, default=2.0, show_default=True)
@click.option("--rho-plus", type=float, default=1.0, show_default=True)
@click.option("--u-plus",   type=float, default=0.0, show_default=True)
@click.option("--mu",       type=float, default=0.1, show_default=True, help="Cut-off density")
@click.option("--delta",    type=float, default=0.1, show_default=True, help="Smoothing width")
@click.option("--t",        "t", type=float, default=1.0, show_default=True, help="Time of the approximate wave")
@click.option("--xi-range", required=True, help="a:b:n grid in xi = x/t")
@click.option("-o", "--output", default=None, help="CSV file (stdout if omitted)")
def waves(gamma, rho_plus, u_plus, mu, delta, t, xi_range, output):
    """Dump exact, cut-off and approximate wave profiles on a xi grid."""
    if not t > 0.0:
        raise click.BadParameter("must be positive", param_hint="--t")
    xi = _parse_range(xi_range)
    exact = build_exact_wave(GasModel(gamma), RightState(rho_plus, u_plus))
    cutoff = build_cutoff_wave(exact, mu)
    aw = build_approx_wave(cutoff, delta)

    rho, _, m = eval_exact_wave(exact, xi)
    rho_mu, _, m_mu = eval_cutoff_wave(cutoff, xi)
    s = eval_approx_wave(aw, xi * t, t)
    frame = pd.DataFrame({
        "xi": xi, "rho_exact": rho, "m_exact": m, "rho_cutoff": rho_mu, "m_cutoff": m_mu,
        "rho_approx": s.rho, "m_approx": np.asarray(s.rho) * np.asarray(s.u),
    })
    _emit(frame.to_csv(index=False, float_format=FLOAT_FORMAT), output)


@cli.command()
@click.option("--gamma",    type=float, default=2.0, show_default=True)
@click.option("--rho-plus", type=float, default=1.0, show_default=True)
@click.option("--u-plus",   type=float, default=0.0, show_default=True)
@click.option("--mu",       type=float, default=0.1, show_default=True)
@click.option("--delta",    type=float, required=True)
@click.option("--t",        "t", type=float, required=True)
@click.option("-p", "ps",   type=float, multiple=True, help="L^p exponents (default 1, 2, inf)")
@click.option("-o", "--output", default=None, help="JSON file (stdout if omitted)")
def verify(gamma, rho_plus, u_plus, mu, delta, t, ps, output):
    """Property reports for the smoothed Burgers wave, the gas wave and the cut-off."""
    exact = build_exact_wave(GasModel(gamma), RightState(rho_plus, u_plus))
    cutoff = build_cutoff_wave(exact, mu)
    aw = build_approx_wave(cutoff, delta)
    burgers = verify_burgers_estimates(aw.profile, t, p=ps or (1.0, 2.0, math.inf))
    x, ts = default_samples(aw, times=(0.0, 0.5 * t, t))
    identities = verify_wave_identities(aw, x, ts)
    gap = cutoff_gap(cutoff)
    report = {
        "gamma": gamma, "mu": mu, "delta": delta, "t": t,
        "burgers": burgers.as_dict(),
        "wave_identities": identities.as_dict(),
        "cutoff_gap": {"density": gap.density, "momentum": gap.momentum, "total": gap.total},
    }
    _emit(write_json(None, report), output)
    if not burgers.ok:
        LOG.warning("curvature bound violated at %d samples", burgers.violations)


@cli.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--gamma", type=float, default=None, help="Adiabatic exponent (read from the CSV if omitted)")
@click.option("-o", "--output", default=None, help="JSON file (stdout if omitted)")
def fit(input_path, gamma, output):
    """Re-fit convergence rates from an existing sweep CSV."""
    records, csv_gamma = read_sweep_csv(Path(input_path))
    g = gamma if gamma is not None else csv_gamma
    if g is None:
        raise ConfigError("gamma", "not in the CSV; pass --gamma")
    gas = GasModel(g)
    _emit(write_json(None, fit_report(fit_records(records, gas), gas)), output)


# ─── Entry point ──────────────────────────────────────────────────────────────

def main(argv: Optional[Sequence[str]] = None) -> int:
    load_dotenv()
    try:
        rv = cli.main(args=list(argv) if argv is not None else None,
                      prog_name="rarefaction-lab", standalone_mode=False)
    except click.ClickException as e:
        e.show()
        return e.exit_code
    except click.exceptions.Abort:
        click.echo("Aborted!", err=True)
        return 1
    except RarefactionLabError as e:
        click.echo(f"error: {e}", err=True)
        return 1
    return rv if isinstance(rv, int) else 0


if __name__ == "__main__":
    raise SystemExit(main())
