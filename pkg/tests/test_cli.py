import csv
import io
import json
import math

import numpy as np
import pytest

from modegate import cli, config
from modegate.errors import ConfigError

UNIFORM = """
[chain]
ion_count = 3
axial_frequency_mhz = 0.5
transverse_frequencies_mhz = 3.0
"""


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


@pytest.fixture
def uniform_cfg(tmp_path):
    p = tmp_path / "uniform.toml"
    p.write_text(UNIFORM)
    return str(p)


def test_modes_uniform(capsys, uniform_cfg):
    code, out, _ = run(capsys, "modes", "--config", uniform_cfg)
    assert code == 0
    table = rows(out)
    expected = [[1, -2, 1], [1, 0, -1], [1, 1, 1]] / np.sqrt([[6], [2], [3]])
    got = np.array([[float(r[f"nu_{i}"]) for i in range(3)] for r in table])
    np.testing.assert_allclose(got, expected, atol=1e-10)


def test_modes_paper(capsys):
    code, out, _ = run(capsys, "modes", "--config", "paper3ion")
    table = rows(out)
    f = [float(r["frequency_hz"]) for r in table]
    assert code == 0 and f == [2.649e6, 2.735e6, 2.793e6]
    assert [int(r["k"]) for r in table] == [92, 95, 97]


def test_bad_chain_exit_code(capsys, tmp_path):
    p = tmp_path / "bad.toml"
    p.write_text("[chain]\nion_count = 1\n")
    code, _, err = run(capsys, "modes", "--config", str(p))
    assert code == 2 and "ion_count" in err


def test_solver_error_exit_code(capsys, tmp_path):
    p = tmp_path / "unstable.toml"
    p.write_text(UNIFORM.replace("axial_frequency_mhz = 0.5", "axial_frequency_mhz = 4.0"))
    code, _, err = run(capsys, "modes", "--config", str(p))
    assert code == 3 and "solver error" in err


def test_design_common_scale(capsys):
    code, out, _ = run(capsys, "design", "--config", "paper3ion-common")
    table = {r["parity"]: r for r in rows(out)}
    assert code == 0
    assert int(table["odd"]["l"]) == 193 and int(table["even"]["l"]) == 192
    assert float(table["even"]["power_ratio_vs_odd"]) == pytest.approx(1.32, abs=0.15)


def test_design_zero_angle(capsys, tmp_path):
    text = config.resources.files("modegate").joinpath("presets/paper3ion.toml").read_text()
    p = tmp_path / "zero.toml"
    p.write_text(text.replace("theta_over_pi = 0.5", "theta_over_pi = 0.0"))
    code, out, _ = run(capsys, "design", "--config", str(p), "--parity", "odd")
    r = rows(out)[0]
    assert code == 0 and float(r["omega_rad_s"]) == 0.0 and float(r["alpha"]) == 0.0


def test_fig3_markers(capsys):
    code, out, _ = run(capsys, "fig3", "--config", "paper3ion")
    marked = [int(r["l"]) for r in rows(out) if r["resonance_marker"] == "1"]
    assert code == 0 and marked == [184, 190, 194]


def test_fig4_midpoint(capsys):
    code, out, _ = run(capsys, "fig4", "--config", "paper3ion")
    table = rows(out)
    assert code == 0 and len(table) >= 10_000
    mid = [r for r in table if float(r["t_us"]) == 34.733]
    assert len(mid) == 1
    assert float(mid[0]["g_odd"]) == 0.0 and float(mid[0]["g_even"]) == 0.0


def test_fig5_zero_row_matches_design(capsys):
    _, out5, _ = run(capsys, "fig5", "--config", "paper3ion")
    zero = [r for r in rows(out5) if float(r["delta_omega_rad_s"]) == 0.0]
    _, outd, _ = run(capsys, "design", "--config", "paper3ion")
    design = {r["parity"]: r for r in rows(outd)}
    assert len(zero) == 1
    assert zero[0]["alpha_odd"] == design["odd"]["alpha"]
    assert zero[0]["alpha_even"] == design["even"]["alpha"]


def test_engineer(capsys):
    code, out, _ = run(capsys, "engineer", "--config", "paper3ion")
    table = rows(out)
    assert code == 0 and len(table) == 5
    assert any((r["k_0"], r["k_1"], r["k_2"]) == ("92", "95", "97")
               and abs(float(r["tau_us"]) - 69.466) < 0.01 for r in table)


def test_sweep_and_json(capsys):
    code, out, _ = run(capsys, "sweep", "--config", "paper3ion", "--format", "json",
                       "--parity", "even")
    doc = json.loads(out)
    assert code == 0 and len(doc["rows"]) == 201
    assert set(doc["rows"][0]) == {"delta_omega_rad_s", "delta_omega_2pi_hz", "alpha_l186"}


def test_verify_pass_and_mutation(capsys):
    code, out, _ = run(capsys, "verify", "--config", "paper3ion", "--seed", "123")
    report = json.loads(out)
    assert code == 0 and report["passed"] and report["seed"] == 123
    code, out, _ = run(capsys, "verify", "--config", "paper3ion", "--inject-chi-error", "0.01")
    report = json.loads(out)
    assert code == 4 and not report["passed"]
    failed = [c["name"] for c in report["checks"] if not c["passed"]]
    assert failed == ["chi_analytic_vs_oracle"]


def test_determinism(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert cli.main(["fig5", "--config", "paper3ion", "--out", str(a)]) == 0
    assert cli.main(["fig5", "--config", "paper3ion", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    lines = a.read_text().splitlines()
    assert lines[0].startswith("delta_omega_rad_s,")
    # 12 significant digits from the preset
    assert lines[1].split(",")[2] == format(float(lines[1].split(",")[2]), ".12g")


def test_unknown_key_and_section(tmp_path):
    p = tmp_path / "typo.toml"
    p.write_text("[chain]\nion_cuont = 3\n")
    with pytest.raises(ConfigError):
        config.load_config(str(p))
    p.write_text("[chians]\n")
    with pytest.raises(ConfigError):
        config.load_config(str(p))


@pytest.mark.parametrize("snippet", [
    "[output]\nprecision = 5\n",
    "[output]\nformat = 'xml'\n",
    "[gate]\nion_i = 3\n",
    "[gate]\nion_i = 1\nion_j = 1\n",
    "[gate]\nparity = 'any'\n",
    "[chain]\nmodes = 'quoted'\n",
    "[chain]\nnbar = -0.1\n",
    "[fig4]\nsamples = 100\n",
    "[chain\n",
])
def test_config_validation(tmp_path, snippet):
    p = tmp_path / "c.toml"
    p.write_text(snippet)
    with pytest.raises(ConfigError):
        config.load_config(str(p))


def test_presets_and_units():
    assert {"paper3ion", "paper3ion-common", "paper3ion-ideal"} <= set(config.preset_names())
    cfg = config.load_config("paper3ion")
    assert cfg.tau == pytest.approx(69.466e-6)
    assert cfg.theta_target == pytest.approx(math.pi / 2)
    spec = config.build_spectrum(config.load_config("paper3ion-ideal"))
    np.testing.assert_allclose(spec.frequencies * 69.466e-6 / (4 * math.pi), [92, 95, 97],
                               rtol=1e-14)


def test_missing_config_file():
    with pytest.raises(ConfigError):
        config.load_config("/nonexistent/file.toml")
