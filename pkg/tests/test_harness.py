"""Experiment driver: config parsing, CSV round-trips, determinism, CLI."""
import dataclasses
import json
import os

import numpy as np
import pytest

from secjam.cli import main
from secjam.config import dbm_to_watt
from secjam.harness import (CSV_COLUMNS, ConfigError, ExperimentConfig,
                            ExperimentResult, ResultRow, emit_results,
                            fig2_configs, fig3_configs, fig4_configs,
                            load_config, parse_results_csv, run_experiment,
                            summarize, validate_config)

TINY_INI = """\
[topology]
num_bobs = 2
num_eves = 2

[secrecy]
rates = 1

[sweep]
regime = known_ecsi
schemes = cfj
rhos = 0

[run]
realizations = 2
rx_grid_points = 8
seed = 11
"""


def _tiny_config(**overrides):
    base = dict(schemes=("cfj",), rates=(1.0,), rhos=(0.0,),
                num_realizations=2, rx_grid_points=8, master_seed=5)
    base.update(overrides)
    return ExperimentConfig(**base)


# ---------------------------------------------------------------------------
# Config file loading


def test_load_config_parses_sections(tmp_path):
    path = tmp_path / "sweep.ini"
    path.write_text("""\
[physical]
noise_dbm = -90

[topology]
num_bobs = 2
num_eves = 1
cell_radius_m = 15
eve_placement = near_bob

[limits]
alice_max_dbm = 20
bob_max_dbm = 5

[secrecy]
rates = 1 2,3
outage_budget = 0.05

[sweep]
regime = known_ecsi
schemes = zfbf cfj
alphas = 0 1e-8
rhos = 0 0.9

[run]
realizations = 7
seed = 77
rx_search = per_bob
workers = 2
dump_realizations = true
""")
    config = load_config(str(path))
    assert config.constants.noise_power_w == dbm_to_watt(-90.0)
    assert config.topology.num_bobs == 2
    assert config.topology.num_eves == 1
    assert config.topology.cell_radius_m == 15.0
    assert config.topology.eve_placement == "near_bob"
    assert config.limits.alice_max_w == dbm_to_watt(20.0)
    assert config.limits.bob_max_w == dbm_to_watt(5.0)
    assert config.rates == (1.0, 2.0, 3.0)
    assert config.outage_budget == 0.05
    assert config.schemes == ("zfbf", "cfj")
    assert config.alphas == (0.0, 1e-8)
    assert config.rhos == (0.0, 0.9)
    assert config.num_realizations == 7
    assert config.master_seed == 77
    assert config.rx_search == "per_bob"
    assert config.workers == 2
    assert config.dump_realizations is True


def test_load_config_defaults(tmp_path):
    path = tmp_path / "empty.ini"
    path.write_text("[run]\n")
    config = load_config(str(path))
    assert config.regime == "known_ecsi"
    assert config.schemes == ("cfj",)
    assert config.rates == (2.0,)
    assert config.master_seed == 20160401
    assert config.audit_draws == 2000


def test_load_config_missing_file_raises_oserror(tmp_path):
    with pytest.raises(OSError):
        load_config(str(tmp_path / "nope.ini"))


def test_load_config_rejects_bad_field_values(tmp_path):
    path = tmp_path / "bad.ini"
    path.write_text("[topology]\ncell_radius_m = -5\n")
    with pytest.raises(ConfigError):
        load_config(str(path))
    path.write_text("[secrecy]\nrates = abc\n")
    with pytest.raises(ConfigError):
        load_config(str(path))


@pytest.mark.parametrize("overrides,fragment", [
    (dict(regime="psychic"), "regime"),
    (dict(schemes=("cfj", "beamhop")), "scheme"),
    (dict(regime="unknown_ecsi", schemes=("zfbf",)), "zfbf"),
    (dict(rates=()), "rate"),
    (dict(rates=(1.0, -2.0)), "rate"),
    (dict(alphas=(0.0, 1.5)), "alphas"),
    (dict(rhos=(-0.1,)), "rhos"),
    (dict(regime="unknown_ecsi", t_values=(2,)), "t_values"),
    (dict(t_values=(0,)), "t_values"),
    (dict(t_values=(9,)), "t_values"),
    (dict(outage_budget=0.0), "outage_budget"),
    (dict(num_realizations=0), "realizations"),
    (dict(rx_search="diagonal"), "rx_search"),
    (dict(rx_max=-1.0), "rx_max"),
    (dict(rx_grid_points=1), "rx_"),
    (dict(audit_draws=0), "audit_draws"),
    (dict(workers=0), "workers"),
])
def test_validate_config_rejections(overrides, fragment):
    config = dataclasses.replace(ExperimentConfig(), **overrides)
    with pytest.raises(ConfigError, match=fragment):
        validate_config(config)


def test_zfbf_needs_antenna_headroom():
    from secjam.config import TopologyConfig
    config = ExperimentConfig(schemes=("zfbf",),
                              topology=TopologyConfig(num_tx_antennas=5))
    with pytest.raises(ConfigError, match="antennas"):
        validate_config(config)


def test_figure_presets_are_valid_configs():
    presets = (fig2_configs() + fig3_configs() + fig4_configs())
    assert len(presets) == 4 + 4 + 2
    for label, config in presets:
        validate_config(config)
        assert label.startswith("fig")
    fig3 = dict(fig3_configs())
    assert all(c.regime == "unknown_ecsi" for c in fig3.values())
    assert all(c.topology.cell_radius_m == 12.0 for c in fig3.values())
    fig4 = dict(fig4_configs())
    assert all(c.t_values == (1, 2, 3, 4) for c in fig4.values())


# ---------------------------------------------------------------------------
# Row formatting and CSV round-trips


def test_result_row_csv_formatting():
    row = ResultRow(scheme="cfj", regime="known_ecsi", rate=2.0, alpha=1e-8,
                    rho=0.5, num_active=3, realization=4, seed="1:0:4",
                    feasible=True, total_power_w=0.012345678,
                    total_power_dbm=10.9151, info_power_w=0.01,
                    txfj_power_w=0.002, rxfj_power_w=0.00034567891,
                    chosen_rx=(0.5, 0.25), min_secrecy_rate=2.0,
                    empirical_outage=None)
    cells = row.to_csv()
    assert len(cells) == len(CSV_COLUMNS)
    assert cells[0] == "cfj"
    assert cells[2] == "2"
    assert cells[3] == "1e-08"
    assert cells[8] == "true"
    assert cells[9] == "0.0123457"          # six significant digits
    assert cells[14] == "0.5;0.25"
    assert cells[16] == ""                   # None prints as empty

    hollow = ResultRow(scheme="zfbf", regime="known_ecsi", rate=1.0, alpha=0.0,
                       rho=0.0, num_active=3, realization=0, seed="1:0:0",
                       feasible=False)
    cells = hollow.to_csv()
    assert cells[8] == "false"
    assert cells[9] == "" and cells[14] == "" and cells[15] == ""


def test_emit_and_parse_round_trip(tmp_path):
    config = _tiny_config(dump_realizations=True)
    result = run_experiment(config)
    out = tmp_path / "run"
    emit_results(result, str(out))
    assert (out / "results.csv").exists()
    assert (out / "summary.json").exists()
    dumps = sorted(p.name for p in (out / "realizations").iterdir())
    assert dumps == ["cfj_5_0_0.json", "cfj_5_0_1.json"]

    parsed = parse_results_csv(str(out / "results.csv"))
    assert len(parsed) == len(result.rows)
    for before, after in zip(result.rows, parsed):
        assert after.scheme == before.scheme
        assert after.regime == before.regime
        assert after.seed == before.seed
        assert after.feasible == before.feasible
        assert after.num_active == before.num_active
        if before.feasible:
            # CSV keeps six significant digits
            assert after.total_power_w == pytest.approx(before.total_power_w,
                                                        rel=1e-5)
            assert after.total_power_dbm == pytest.approx(
                10.0 * np.log10(after.total_power_w * 1e3), abs=1e-3)
            assert np.allclose(after.chosen_rx, before.chosen_rx, rtol=1e-5)
        else:
            assert after.total_power_w is None
            assert after.chosen_rx == ()

    summary = json.loads((out / "summary.json").read_text())
    assert summary["schema"] == "secjam-summary-v1"
    assert summary["grid"][0]["n"] == 2


def test_emit_empty_row_set(tmp_path):
    result = ExperimentResult(rows=[], summary=summarize([], ExperimentConfig()))
    out = tmp_path / "empty"
    emit_results(result, str(out))
    assert (out / "results.csv").read_text().splitlines() == \
        [",".join(CSV_COLUMNS)]
    summary = json.loads((out / "summary.json").read_text())
    assert summary["grid"] == []
    assert parse_results_csv(str(out / "results.csv")) == []


def test_summarize_hand_rows():
    def row(feasible, total=None, outage=None, scheme="cfj"):
        r = ResultRow(scheme=scheme, regime="unknown_ecsi", rate=1.0, alpha=0.0,
                      rho=0.0, num_active=3, realization=0, seed="s",
                      feasible=feasible)
        if feasible:
            r.total_power_w = total
            r.info_power_w = total / 2
            r.txfj_power_w = total / 4
            r.rxfj_power_w = total / 4
            r.empirical_outage = outage
        return r

    rows = [row(True, 1.0, 0.001), row(True, 2.0, None), row(True, 4.0, 0.003),
            row(False), row(True, 8.0, 0.0, scheme="txfj_only")]
    summary = summarize(rows, ExperimentConfig(regime="unknown_ecsi"))
    grid = {g["scheme"]: g for g in summary["grid"]}
    cfj = grid["cfj"]
    assert cfj["n"] == 4
    assert cfj["n_feasible"] == 3
    assert cfj["n_excluded"] == 1
    assert cfj["infeasible_fraction"] == pytest.approx(0.25)
    assert cfj["mean_power_w"] == pytest.approx(7.0 / 3.0)
    assert cfj["median_power_w"] == pytest.approx(2.0)
    assert cfj["mean_info_w"] == pytest.approx(7.0 / 6.0)
    assert cfj["max_empirical_outage"] == pytest.approx(0.003)
    assert grid["txfj_only"]["n"] == 1
    assert summary["regime"] == "unknown_ecsi"


# ---------------------------------------------------------------------------
# Determinism and parallel execution


def test_run_experiment_is_deterministic():
    first = run_experiment(_tiny_config())
    second = run_experiment(_tiny_config())
    assert [dataclasses.asdict(r) for r in first.rows] == \
           [dataclasses.asdict(r) for r in second.rows]
    assert first.summary == second.summary


def test_workers_do_not_change_results():
    serial = run_experiment(_tiny_config(workers=1))
    parallel = run_experiment(_tiny_config(workers=2))
    assert [dataclasses.asdict(r) for r in serial.rows] == \
           [dataclasses.asdict(r) for r in parallel.rows]


def test_alpha_grid_only_applies_to_cfj():
    config = _tiny_config(schemes=("zfbf", "txfj_only", "cfj"),
                          alphas=(0.0, 1e-8), num_realizations=1)
    result = run_experiment(config)
    seen = {(r.scheme, r.alpha) for r in result.rows}
    assert seen == {("zfbf", 0.0), ("txfj_only", 0.0),
                    ("cfj", 0.0), ("cfj", 1e-8)}


# ---------------------------------------------------------------------------
# Command-line interface


def test_cli_run_and_audit_round_trip(tmp_path, capsys):
    ini = tmp_path / "tiny.ini"
    ini.write_text(TINY_INI)
    out = tmp_path / "out"
    code = main(["run", "--config", str(ini), "--out", str(out),
                 "--dump-realizations"])
    assert code == 0
    assert (out / "results.csv").exists()
    assert (out / "summary.json").exists()
    dump_dir = out / "realizations"
    dumps = sorted(dump_dir.iterdir())
    assert dumps

    feasible = [p for p in dumps
                if json.loads(p.read_text())["feasible"]]
    assert feasible, "expected at least one feasible tiny realization"
    capsys.readouterr()
    assert main(["audit", str(feasible[0])]) == 0
    assert "PASS" in capsys.readouterr().out

    # starving the information beams must flip the audit to a failure
    dump = json.loads(feasible[0].read_text())
    dump["allocation"]["info_w"] = [v * 1e-3 for v in dump["allocation"]["info_w"]]
    broken = tmp_path / "broken.json"
    broken.write_text(json.dumps(dump))
    assert main(["audit", str(broken)]) == 1
    assert "FAIL" in capsys.readouterr().out


def test_cli_run_seed_override(tmp_path):
    ini = tmp_path / "tiny.ini"
    ini.write_text(TINY_INI)
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    assert main(["run", "--config", str(ini), "--out", str(out_a),
                 "--seed", "123"]) == 0
    assert main(["run", "--config", str(ini), "--out", str(out_b),
                 "--seed", "123"]) == 0
    assert (out_a / "results.csv").read_bytes() == \
           (out_b / "results.csv").read_bytes()


def test_cli_config_error_exit_code(tmp_path):
    ini = tmp_path / "bad.ini"
    ini.write_text("[sweep]\nregime = sideways\n")
    assert main(["run", "--config", str(ini)]) == 2


def test_cli_missing_config_exit_code(tmp_path):
    assert main(["run", "--config", str(tmp_path / "ghost.ini")]) == 3


def test_cli_oracle_smoke(capsys):
    assert main(["oracle", "--instances", "2"]) == 0
    out = capsys.readouterr().out
    assert "oracle checks passed" in out
    assert "FAIL" not in out
