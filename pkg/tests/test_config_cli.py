import csv
import json

import numpy as np
import pytest

from pdola import cli
from pdola.config import ConfigError, load_config, power_pdo, resolve, scenarios
from pdola.link_simulator import Adaptation, SimResult, write_results_csv
from pdola.mcs_mapping import McsTable

TINY = """\
scenario:
  name: tiny
simulation:
  drops: 2
  snr_grid_db: [0, 20]
calibration:
  drops: 2000
"""


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.setenv(cli.OUTPUT_ENV, str(tmp_path / "out"))
    (tmp_path / "tiny.yaml").write_text(TINY)
    return tmp_path


def test_defaults_and_presets():
    cfg = resolve()
    assert cfg["grid"]["n_rbg"] == 8 and cfg["channel"]["model"] == "EPA5"
    s2 = resolve(preset="setting2")
    assert (s2["channel"]["model"], s2["channel"]["n_tx"], s2["grid"]["srs_comb"]) == ("EVA20", 2, 2)
    pinned = resolve(preset="setting1_pdo+3")
    assert pinned["simulation"]["pdo_db"] == [3.0]
    ids = [sc.scenario_id for sc in scenarios(pinned)]
    assert ids == ["setting1_pdo+3", "setting1_pdo+3"]
    assert resolve(preset="setting1_full")["grid"]["n_rbg"] == 68


def test_scenarios_cover_pdo_and_mode():
    scs = scenarios(resolve({"simulation": {"pdo_db": [10, -10]}, "adaptation": {"modes": ["OFF"]}}))
    assert [(s.pdo_db, s.adaptation) for s in scs] == [(10.0, Adaptation.OFF), (-10.0, Adaptation.OFF)]
    assert scs[0].scenario_id == "custom_pdo+10"
    assert scs[0].grid.srs_symbols == 4


@pytest.mark.parametrize(
    "text, field, line",
    [
        ("calibration:\n  target_bler: 1.5\n", "calibration.target_bler", 2),
        ("grid:\n  srs_comb: 3\n", "grid.srs_comb", 2),
        ("simulation:\n  drops: 0\n", "simulation.drops", 2),
        ("channel:\n  model: XYZ\n", "channel.model", 2),
        ("bogus: {}\n", "bogus", 1),
        ("grid:\n  n_rbg: 8\n  colour: red\n", "grid.colour", 3),
        ("adaptation:\n  alpha_scale: 0.5\n", "adaptation.alpha_scale", 2),
        ("simulation:\n  pusch_rbgs: [0, 9]\n", "simulation.pusch_rbgs", 2),
    ],
)
def test_validation_reports_field_and_line(tmp_path, text, field, line):
    path = tmp_path / "bad.yaml"
    path.write_text(text)
    with pytest.raises(ConfigError) as err:
        load_config(path)
    assert err.value.field == field
    assert err.value.line == line


def test_yaml_syntax_error_has_line(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("grid:\n  n_rbg: [1, 2\n")
    with pytest.raises(ConfigError) as err:
        load_config(path)
    assert err.value.line is not None


def test_power_section_derives_pdo():
    power = {
        "pathloss_db": 90.0,
        "pusch": {"p_cmax_dbm": 23, "p_o_dbm": -80, "alpha_pc": 1.0, "n_rb": 8, "n_re_per_rb": 12},
        "srs": {"p_cmax_dbm": 23, "p_o_dbm": -80, "alpha_pc": 1.0, "n_rb": 272, "n_re_per_rb": 3},
    }
    # PUSCH: -80 + 9.03 + 90 = 19.03 dBm, SRS capped at 23 dBm
    expected = (-80 + 10 * np.log10(8) + 90 - 10 * np.log10(96)) - (23 - 10 * np.log10(816))
    assert power_pdo(power) == pytest.approx(expected, abs=1e-9)
    cfg = resolve({"power": power, "simulation": {"pdo_db": None}})
    assert scenarios(cfg)[0].pdo_db == pytest.approx(expected, abs=1e-9)
    with pytest.raises(ConfigError):
        resolve({"power": {"pusch": power["pusch"]}})


def test_cli_calibrate_writes_identical_tables(workdir):
    out = workdir / "out"
    assert cli.main(["calibrate", "tiny.yaml"]) == 0
    first = (out / "mcs_table.txt").read_bytes()
    table = McsTable.load(out / "mcs_table.txt")
    assert len(table) == 29 and np.all(np.diff(table.thresholds) > 0)
    report = json.loads((out / "mcs_table.report.json").read_text())
    assert len(report["achieved_bler"]) == 29
    assert cli.main(["calibrate", "tiny.yaml"]) == 0
    assert (out / "mcs_table.txt").read_bytes() == first


def test_cli_bad_config_exit_2(workdir, capsys):
    (workdir / "bad.yaml").write_text("calibration:\n  target_bler: 1.5\n")
    assert cli.main(["calibrate", "bad.yaml"]) == 2
    assert cli.main(["simulate", "missing.yaml"]) == 2
    assert cli.main(["calibrate"]) == 2
    assert cli.main(["simulate", "--preset", "setting9"]) == 2
    assert cli.main(["simulate", "tiny.yaml", "--seed", "-1"]) == 2


def test_cli_simulate_requires_table(workdir):
    assert cli.main(["simulate", "tiny.yaml"]) == 3


def test_cli_simulate_and_gains(workdir, capsys):
    out = workdir / "out"
    assert cli.main(["calibrate", "tiny.yaml"]) == 0
    assert cli.main(["simulate", "tiny.yaml", "--svg"]) == 0
    csv_path = out / "tiny_pdo+3.csv"
    rows = list(csv.DictReader(csv_path.open()))
    assert len(rows) == 4 and {r["adaptation"] for r in rows} == {"ON", "OFF"}
    assert (out / "tiny_pdo+3.svg").read_text().startswith("<svg")
    manifest = json.loads((out / "tiny.manifest.json").read_text())
    assert manifest["seed"] == 1
    assert set(manifest["outputs"]) >= {"tiny_pdo+3.csv", "tiny_pdo-3.csv"}
    assert manifest["config"]["simulation"]["drops"] == 2

    first = csv_path.read_bytes()
    assert cli.main(["simulate", "tiny.yaml"]) == 0
    assert csv_path.read_bytes() == first
    assert cli.main(["simulate", "tiny.yaml", "--seed", "7", "--output-dir", "other", "--table", str(out / "mcs_table.txt")]) == 0
    assert json.loads((workdir / "other" / "tiny.manifest.json").read_text())["seed"] == 7

    capsys.readouterr()
    assert cli.main(["gains", str(out)]) == 0
    text = capsys.readouterr().out
    assert "PDO +3 dB" in text and "PDO -3 dB" in text
    gains = list(csv.DictReader((out / "gains.csv").open()))
    assert {g["scenario_id"] for g in gains} == {"tiny_pdo+3", "tiny_pdo-3"}


def _pair(sid, t_on, t_off, pdo=3.0):
    snr = np.array([0.0, 10.0])
    make = lambda a, t: SimResult(sid, a, pdo, snr, np.zeros(2), np.asarray(t, float), np.zeros(2), 1, 1)  # noqa: E731
    return [make(Adaptation.ON, t_on), make(Adaptation.OFF, t_off)]


def test_gains_synthetic_values(tmp_path, capsys):
    write_results_csv(tmp_path / "a.csv", _pair("s_pdo+3", [1.25, 2.5], [1.0, 2.0]))
    write_results_csv(tmp_path / "b.csv", _pair("s_pdo-20", [5.0, 5.0], [0.0, 0.0], -20.0))
    assert cli.main(["gains", str(tmp_path)]) == 0
    text = capsys.readouterr().out
    assert "25.0%" in text and "inf" in text
    gains = {g["scenario_id"]: g["gain"] for g in csv.DictReader((tmp_path / "gains.csv").open())}
    assert float(gains["s_pdo+3"]) == pytest.approx(0.25)
    assert gains["s_pdo-20"] == "inf"


def test_gains_unpaired_exit_4(tmp_path, caplog):
    write_results_csv(tmp_path / "a.csv", _pair("s_pdo+3", [1.0, 1.0], [1.0, 1.0])[:1])
    assert cli.main(["gains", str(tmp_path)]) == 4
    assert "s_pdo+3: missing OFF" in caplog.text
    assert cli.main(["gains", str(tmp_path / "empty")]) == 2
