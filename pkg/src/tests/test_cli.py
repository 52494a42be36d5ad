# src/tests/test_cli.py

import json
from io import StringIO

import numpy as np
import pandas as pd
import pytest

import rarefaction_lab.service as service_module
from rarefaction_lab.cli import main, parse_config, read_document
from rarefaction_lab.errors import ConfigError
from rarefaction_lab.limitlab import SweepRecord
from rarefaction_lab.smoothwave import make_schedule
from rarefaction_lab.gasdyn import RightState


CONFIG = """\
# gamma = 2 sweep
gamma=2
rho_plus=1
u_plus=0
epsilons=0.05,0.02,0.01
h=0.1
t_end=0.2
c_mu=0.1
"""


@pytest.fixture(autouse=True)
def _clean_env(monkeypatch, tmp_path):
    for name in ("RAREFACTION_WORKERS", "RAREFACTION_DATABASE_URL", "RAREFACTION_LOG_LEVEL"):
        monkeypatch.delenv(name, raising=False)
    # keep load_dotenv away from any .env in the checkout
    monkeypatch.chdir(tmp_path)


def _fake_run_case(config, epsilon, keep_snapshot=False):
    sched = make_schedule(config.gas, epsilon, config.c_mu, RightState(config.rho_plus, config.u_plus))
    x = np.linspace(-1.0, 1.0, 5)
    snapshot = {"x": x, "rho_eps": x + 2.0, "rho_exact": x + 2.0, "m_eps": x, "m_exact": x}
    return SweepRecord(
        epsilon=epsilon, mu=sched.mu, delta=sched.delta,
        err_rho_inf=2.0 * epsilon ** (1.0 / 6.0), err_m_inf=3.0 * epsilon ** 0.125,
        energy_peak=1.0, dissipation_total=0.5, runtime=0.01,
        phi_inf=1e-3, psi_inf=1e-3, bound_ratio=0.2, a_priori_ok=True,
        band_low=0.9, band_high=1.1, speed_growth=1.01, n_cells=100, steps=10,
        snapshot=snapshot if keep_snapshot else None,
    )


# ─── Config documents ─────────────────────────────────────────────────────────

def test_parse_config_defaults():
    config = parse_config(CONFIG)
    assert config.gamma == 2.0
    assert config.epsilons == (0.05, 0.02, 0.01)
    assert config.cells_per_delta == 50.0
    assert config.order == 2
    assert config.cfl == 0.45
    assert len(config.sample_times) == 8
    assert config.sample_times[0] == pytest.approx(0.1)
    assert config.sample_times[-1] == pytest.approx(0.2)


def test_parse_config_explicit_samples():
    config = parse_config(CONFIG + "sample_times=0.15, 0.2\norder=1\n")
    assert config.sample_times == (0.15, 0.2)
    assert config.order == 1


@pytest.mark.parametrize("text,key", [
    (CONFIG.replace("gamma=2\n", ""), "gamma"),
    (CONFIG + "colour=blue\n", "colour"),
    (CONFIG.replace("h=0.1", "h=abc"), "h"),
    (CONFIG.replace("gamma=2", "gamma=1"), "gamma"),
    (CONFIG.replace("0.05,0.02,0.01", "0.01,0.02"), "epsilons"),
    (CONFIG.replace("h=0.1", "h=nan"), "h"),
    (CONFIG.replace("c_mu=0.1", "c_mu=1.0"), "epsilons"),
])
def test_parse_config_errors(text, key):
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    assert exc.value.key == key


def test_read_document_ignores_comments():
    doc = read_document("# nothing here\ngamma=3 # adiabatic\n")
    assert doc == {"gamma": "3"}


# ─── waves / verify ───────────────────────────────────────────────────────────

def test_waves_to_stdout(capsys):
    assert main(["waves", "--xi-range=-2:2:401"]) == 0
    frame = pd.read_csv(StringIO(capsys.readouterr().out))
    assert list(frame.columns) == [
        "xi", "rho_exact", "m_exact", "rho_cutoff", "m_cutoff", "rho_approx", "m_approx",
    ]
    assert len(frame) == 401
    assert frame["rho_exact"].iloc[-1] == 1.0
    assert frame["m_exact"].iloc[-1] == 0.0
    assert frame["rho_cutoff"].min() >= 0.1 * (1 - 1e-12)
    assert np.all(np.diff(frame["rho_exact"].to_numpy()) >= -1e-14)


def test_waves_to_file(tmp_path):
    out = tmp_path / "waves.csv"
    assert main(["waves", "--gamma", "3", "--xi-range=-1.5:1.5:31", "-o", str(out)]) == 0
    frame = pd.read_csv(out)
    assert len(frame) == 31
    assert frame["xi"].iloc[0] == -1.5


@pytest.mark.parametrize("xi_range", ["1:0:10", "0:1", "0:1:x", "0:1:1"])
def test_waves_bad_range_is_usage_error(xi_range, capsys):
    assert main(["waves", "--xi-range", xi_range]) == 2
    assert "xi-range" in capsys.readouterr().err


def test_verify_report(capsys):
    assert main(["verify", "--delta", "0.1", "--t", "1"]) == 0
    text = capsys.readouterr().out
    report = json.loads(text)
    assert sorted(report) == ["burgers", "cutoff_gap", "delta", "gamma", "mu", "t", "wave_identities"]
    assert report["burgers"]["ok"] is True
    assert report["burgers"]["curvature_ratio"] <= 4.0 / 0.1
    assert set(report["burgers"]["norms_wx"]) == {"1", "2", "inf"}
    assert report["cutoff_gap"]["density"] == pytest.approx(0.1)
    assert text.index('"burgers"') < text.index('"cutoff_gap"')


def test_verify_requires_delta(capsys):
    assert main(["verify", "--t", "1"]) == 2


def test_unknown_command_exits_two(capsys):
    assert main(["launch"]) == 2
    assert main(["waves", "--bogus"]) == 2


def test_domain_errors_exit_one(capsys):
    assert main(["waves", "--gamma", "1", "--xi-range=-1:1:5"]) == 1
    assert "error:" in capsys.readouterr().err


# ─── sweep / fit ──────────────────────────────────────────────────────────────

def test_sweep_writes_artifacts_and_ledger(tmp_path, monkeypatch, capsys):
    monkeypatch.setattr(service_module, "run_case", _fake_run_case)
    cfg = tmp_path / "sweep.env"
    cfg.write_text(CONFIG)
    out = tmp_path / "results"

    assert main(["sweep", str(cfg), "-o", str(out)]) == 0
    frame = pd.read_csv(out / "sweep.csv")
    assert frame["epsilon"].tolist() == [0.05, 0.02, 0.01]
    eps = frame["epsilon"].to_numpy()
    assert frame["ratio_rho"].to_numpy() == pytest.approx(2.0 / np.abs(np.log(eps)), rel=1e-12)
    assert (out / "runs.db").exists()
    assert len(list((out / "profiles").glob("profile_eps_*.csv"))) == 3

    fit = json.loads((out / "fit.json").read_text())
    assert fit["density"]["slope"] == pytest.approx(1.0 / 6.0, rel=1e-10)
    assert fit["momentum"]["slope"] == pytest.approx(0.125, rel=1e-10)
    assert fit["log_augmented"] is False

    # same configuration again is refused unless forced
    assert main(["sweep", str(cfg), "-o", str(out)]) == 1
    assert "--force" in capsys.readouterr().err
    assert main(["sweep", str(cfg), "-o", str(out), "--force"]) == 0


def test_sweep_reports_failed_cases(tmp_path, monkeypatch, capsys):
    def flaky(config, epsilon, keep_snapshot=False):
        if epsilon == 0.02:
            raise RuntimeError("solver blew up")
        return _fake_run_case(config, epsilon, keep_snapshot)

    monkeypatch.setattr(service_module, "run_case", flaky)
    cfg = tmp_path / "sweep.env"
    cfg.write_text(CONFIG)
    out = tmp_path / "results"

    assert main(["sweep", str(cfg), "-o", str(out)]) == 1
    err = capsys.readouterr().err
    assert "epsilon=0.02" in err
    assert len(pd.read_csv(out / "sweep.csv")) == 2
    assert not (out / "fit.json").exists()


def test_sweep_bad_config_exits_one(tmp_path, capsys):
    cfg = tmp_path / "bad.env"
    cfg.write_text(CONFIG.replace("gamma=2", "gamma=0.5"))
    assert main(["sweep", str(cfg), "-o", str(tmp_path / "r")]) == 1
    assert "gamma" in capsys.readouterr().err


def test_fit_from_sweep_csv(tmp_path, monkeypatch, capsys):
    monkeypatch.setattr(service_module, "run_case", _fake_run_case)
    cfg = tmp_path / "sweep.env"
    cfg.write_text(CONFIG)
    out = tmp_path / "results"
    assert main(["sweep", str(cfg), "-o", str(out)]) == 0
    capsys.readouterr()

    assert main(["fit", "--input", str(out / "sweep.csv")]) == 0
    refit = json.loads(capsys.readouterr().out)
    assert refit == json.loads((out / "fit.json").read_text())


def test_fit_needs_gamma_without_column(tmp_path, capsys):
    path = tmp_path / "bare.csv"
    eps = np.array([0.05, 0.02, 0.01])
    pd.DataFrame({
        "epsilon": eps, "mu": eps, "delta": eps,
        "err_rho_inf": eps ** 0.25, "err_m_inf": eps ** 0.125,
    }).to_csv(path, index=False)
    assert main(["fit", "--input", str(path)]) == 1
    assert "gamma" in capsys.readouterr().err
    assert main(["fit", "--input", str(path), "--gamma", "2"]) == 0
    assert json.loads(capsys.readouterr().out)["gamma"] == 2.0
