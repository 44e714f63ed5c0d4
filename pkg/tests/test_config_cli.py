import json
from dataclasses import replace

import numpy as np
import pytest

from ceco import cli, config
from ceco.config import ConfigError, ScenarioConfig
from ceco.sim import DriveCycle, write_cycle

SHORT_CYCLE = DriveCycle(
    "short", 5.0, np.arange(0.0, 65.0, 5.0), np.linspace(0.0, 24.0, 13),
    np.linspace(900.0, 800.0, 13), np.full(13, 308.15),
)


@pytest.fixture
def short_config(tmp_path):
    """Default configuration pointed at a one-minute cycle and a temp output dir."""
    cycle_path = tmp_path / "short.csv"
    write_cycle(SHORT_CYCLE, cycle_path)
    text = config.dumps().replace("cycle = \n", f"cycle = {cycle_path}\n")
    text = text.replace("output_dir = ceco_out", f"output_dir = {tmp_path / 'out'}")
    path = tmp_path / "short.cfg"
    path.write_text(text)
    return path


# --- config ------------------------------------------------------------------

def test_default_config_round_trips():
    text = config.dumps()
    cfg = config.loads(text, env={})
    assert cfg == ScenarioConfig()
    assert config.dumps(cfg) == text


def test_config_overrides_and_tuple_parsing():
    text = "[ac]\neta_speed_knots = 0:1, 20:1.2, 40:1.4\n[mpc]\nhorizon = 4\n[scenario]\nrecord_timing = true\n"
    cfg = config.loads(text, env={})
    assert cfg.ac.eta_speed_knots == ((0.0, 1.0), (20.0, 1.2), (40.0, 1.4))
    assert cfg.mpc.horizon == 4 and cfg.scenario.record_timing is True


def test_validation_lists_every_problem():
    text = "[mpc]\ncomfort_weight = -1\nioch_xi = 0\n[occupant]\nalpha1 = 0.3\n[solver]\nmax_iter = ten\n[bogus]\nx = 1\n"
    with pytest.raises(ConfigError) as info:
        config.loads(text, env={})
    msg = str(info.value)
    for fragment in ("comfort_weight", "ioch_xi", "alpha1", "max_iter", "bogus"):
        assert fragment in msg
    assert len(info.value.errors) == 5


def test_unknown_key_rejected():
    with pytest.raises(ConfigError, match="gamma9"):
        config.loads("[ac]\ngamma9 = 1\n", env={})


def test_seed_env_override():
    cfg = config.loads(config.dumps(), env={config.SEED_ENV: "11"})
    assert cfg.scenario.seed == 11 and cfg.plant_params().perturbation_seed == 11
    with pytest.raises(ConfigError, match=config.SEED_ENV):
        config.loads(config.dumps(), env={config.SEED_ENV: "x"})


def test_sample_time_must_match():
    with pytest.raises(ConfigError, match="sample_time"):
        config.loads("[mpc]\nts = 2.0\n", env={})


def test_plant_params_carry_nominal_model():
    cfg = replace(ScenarioConfig(), ac=replace(ScenarioConfig().ac, gamma1=0.03))
    assert cfg.plant_params().ac.gamma1 == 0.03


# --- CLI ---------------------------------------------------------------------

def test_dump_default_config(capsys):
    assert cli.main(["--dump-default-config"]) == 0
    assert capsys.readouterr().out == config.dumps()


def test_dumped_config_runs_unchanged(tmp_path, capsys, monkeypatch):
    monkeypatch.delenv(config.SEED_ENV, raising=False)
    cli.main(["--dump-default-config"])
    cfg_path = tmp_path / "default.cfg"
    cfg_path.write_text(capsys.readouterr().out)
    monkeypatch.chdir(tmp_path)
    assert cli.main(["run", "--config", str(cfg_path), "--controller", "ceco-e"]) == 0
    assert (tmp_path / "ceco_out" / "trace_ceco-e.csv").exists()
    assert (tmp_path / "ceco_out" / "metrics_ceco-e.json").exists()


def test_run_writes_outputs(short_config, tmp_path, monkeypatch):
    monkeypatch.delenv(config.SEED_ENV, raising=False)
    log = tmp_path / "solver.csv"
    rc = cli.main(["run", "--config", str(short_config), "--controller", "ceco-e", "--solver-log", str(log)])
    assert rc == 0
    out = tmp_path / "out"
    assert (out / "trace_ceco-e.csv").exists()
    metrics = json.loads((out / "metrics_ceco-e.json").read_text())
    assert set(metrics) == {"e_tot", "i_pmv", "otc_violation_pct", "mean_solve_time"}
    assert log.read_text().splitlines()[0] == "step,iter,f,violation,step_length,grad_norm"


def test_run_rejects_invalid_config(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("[mpc]\ncomfort_weight = -5\n")
    assert cli.main(["run", "--config", str(bad), "--controller", "ceco-c"]) != 0
    assert "comfort_weight" in capsys.readouterr().err


def test_compare_table_matches_single_runs(short_config, tmp_path, capsys, monkeypatch):
    monkeypatch.delenv(config.SEED_ENV, raising=False)
    assert cli.main(["compare", "--config", str(short_config)]) == 0
    table = capsys.readouterr().out
    lines = table.splitlines()
    assert [ln.split()[0] for ln in lines[2:]] == ["baseline", "ceco-e", "ceco-c", "ceco-ioch"]
    assert lines[2].split()[2] == "0.00"
    combined = json.loads((tmp_path / "out" / "metrics.json").read_text())
    assert combined["baseline"]["savings_pct"] == 0.0

    for kind in ("baseline", "ceco-ioch"):
        single_dir = tmp_path / f"single_{kind}"
        assert cli.main(["run", "--config", str(short_config), "--controller", kind,
                         "--output-dir", str(single_dir)]) == 0
        single = json.loads((single_dir / f"metrics_{kind}.json").read_text())
        for key in ("e_tot", "i_pmv", "otc_violation_pct"):
            assert single[key] == combined[kind][key]
        assert (single_dir / f"trace_{kind}.csv").read_bytes() == (tmp_path / "out" / f"trace_{kind}.csv").read_bytes()


def test_plot_writes_four_svgs(short_config, tmp_path, monkeypatch):
    monkeypatch.delenv(config.SEED_ENV, raising=False)
    cli.main(["run", "--config", str(short_config), "--controller", "baseline"])
    trace = tmp_path / "out" / "trace_baseline.csv"
    figs = tmp_path / "figs"
    assert cli.main(["plot", str(trace), "--out-dir", str(figs)]) == 0
    svgs = sorted(p.name for p in figs.glob("*.svg"))
    assert len(svgs) == 4
    pmv_svg = (figs / "trace_baseline_pmv.svg").read_text()
    assert "stroke-dasharray" in pmv_svg


def test_plot_empty_trace(tmp_path, capsys):
    from ceco.sim import TRACE_COLUMNS

    empty = tmp_path / "empty.csv"
    empty.write_text(",".join(TRACE_COLUMNS) + "\n")
    assert cli.main(["plot", str(empty)]) != 0
    assert "empty trace" in capsys.readouterr().err


def test_plot_parse_error_has_line_number(tmp_path, capsys):
    from ceco.sim import TRACE_COLUMNS

    bad = tmp_path / "bad.csv"
    row = ",".join(["1"] * (len(TRACE_COLUMNS) - 1))
    bad.write_text(",".join(TRACE_COLUMNS) + "\n" + ",".join(["0"] * len(TRACE_COLUMNS)) + "\n" + row + "\n")
    assert cli.main(["plot", str(bad)]) != 0
    assert ":3:" in capsys.readouterr().err


def test_pmv_eval(capsys):
    assert cli.main(["pmv", "eval", "--t-a", "40", "--t-mr", "40", "--v-air", "0.1"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("pmv = ") and "(Hot)" in out
    assert cli.main(["pmv", "eval", "--t-cab", "26", "--t-ain", "10", "--t-int", "28",
                     "--m-bl", "0.1", "--w-rad", "150"]) == 0
    assert "-2.949746" in capsys.readouterr().out


def test_pmv_eval_missing_inputs(capsys):
    assert cli.main(["pmv", "eval", "--t-a", "26"]) != 0
    assert "--t-mr" in capsys.readouterr().err
