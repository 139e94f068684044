import csv
import json
import shutil
from pathlib import Path

import pytest

from uavlink.cli import ConfigError, load_config, main

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def read_csv(path):
    lines = path.read_text().splitlines()
    comments = dict(l[2:].split("=", 1) for l in lines if l.startswith("# "))
    rows = list(csv.DictReader(l for l in lines if not l.startswith("#")))
    return comments, rows


def small_config(tmp_path, name="u2u.ini", edit=None):
    text = (CONFIGS / name).read_text().replace("trials = 1000000", "trials = 20000")
    if edit:
        text = edit(text)
    path = tmp_path / name
    path.write_text(text)
    return path


def test_curve_writes_both_files(tmp_path):
    cfg = small_config(tmp_path)
    assert main(["curve", "--config", str(cfg), "--out-dir", str(tmp_path / "o")]) == 0
    com, rows = read_csv(tmp_path / "o" / "curve_cdf.csv")
    assert list(rows[0]) == ["gamma_linear", "gamma_db", "value"]
    assert len(rows) == 400
    assert {"config_hash", "library_version", "zero_atom"} <= set(com)
    assert abs(float(rows[-1]["value"]) - 1.0) < 1e-6
    _, pdf = read_csv(tmp_path / "o" / "curve_pdf.csv")
    assert len(pdf) == 400
    manifest = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert manifest["config_hash"] == com["config_hash"]


def test_missing_node_section_is_named(tmp_path, capsys):
    cfg = small_config(tmp_path, edit=lambda t: t.replace("[rx]", "[rx_unused]"))
    assert main(["curve", "--config", str(cfg)]) == 2
    assert "[rx]" in capsys.readouterr().err
    with pytest.raises(ConfigError, match="rx"):
        load_config(cfg)


def test_bad_key_is_named(tmp_path):
    cfg = small_config(tmp_path, edit=lambda t: t.replace("n_elements = 8", "n_elements = eight"))
    with pytest.raises(ConfigError, match="n_elements"):
        load_config(cfg)


def test_angles_converted_from_mrad(tmp_path):
    sc = load_config(small_config(tmp_path))
    assert sc.link.orient_tx.sigma == pytest.approx(0.030)
    assert sc.link.orient_rx.boresight == pytest.approx(0.005)


def test_rerun_is_byte_identical(tmp_path):
    cfg = small_config(tmp_path)
    for d in ("a", "b"):
        assert main(["curve", "--config", str(cfg), "--evaluator", "both",
                     "--out-dir", str(tmp_path / d)]) == 0
    for name in ("curve_pdf.csv", "curve_cdf.csv", "curve_pdf_mc.csv", "curve_cdf_mc.csv",
                 "manifest.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_seed_override_changes_only_mc(tmp_path):
    cfg = small_config(tmp_path)
    main(["curve", "--config", str(cfg), "--evaluator", "both", "--out-dir", str(tmp_path / "a")])
    main(["curve", "--config", str(cfg), "--evaluator", "both", "--seed", "9",
          "--out-dir", str(tmp_path / "b")])
    _, a = read_csv(tmp_path / "a" / "curve_cdf.csv")
    _, b = read_csv(tmp_path / "b" / "curve_cdf.csv")
    assert a == b
    assert (tmp_path / "a" / "curve_cdf_mc.csv").read_text() != \
        (tmp_path / "b" / "curve_cdf_mc.csv").read_text()


def test_outage_columns_and_zero_threshold(tmp_path):
    cfg = small_config(tmp_path, edit=lambda t: t.replace("gamma_th_db = 10", "gamma_th = 0"))
    assert main(["outage", "--config", str(cfg), "--evaluator", "both",
                 "--out-dir", str(tmp_path)]) == 0
    com, rows = read_csv(tmp_path / "outage.csv")
    assert list(rows[0]) == ["sweep_var", "p_out_analytic", "p_out_mc", "mc_stderr"]
    assert [float(r["sweep_var"]) for r in rows] == [0, 5, 10, 15, 20, 25, 30, 35, 40]
    atom = float(rows[0]["p_out_analytic"])
    assert all(float(r["p_out_analytic"]) == atom for r in rows)
    assert 0 < atom < 1e-3


def test_outage_n_sweep(tmp_path):
    cfg = small_config(tmp_path, edit=lambda t: t.replace(
        "var = snr_db", "var = n_elements\nn_elements = 4 6 8"))
    assert main(["outage", "--config", str(cfg), "--out-dir", str(tmp_path)]) == 0
    _, rows = read_csv(tmp_path / "outage.csv")
    assert [r["sweep_var"] for r in rows] == ["4", "6", "8"]
    assert rows[0]["p_out_mc"] == ""


def test_validate_exit_status(tmp_path, capsys):
    # sectorized simulation reproduces the analytic model, so the check passes
    ok = small_config(tmp_path, edit=lambda t: t.replace("gain_model = exact",
                                                         "gain_model = sectorized"))
    assert main(["validate", "--config", str(ok), "--trials", "200000",
                 "--out-dir", str(tmp_path / "ok")]) == 0
    assert "overall PASS" in capsys.readouterr().out
    strict = small_config(tmp_path, edit=lambda t: t + "\n[validate]\nsup_tol = 1e-9\n")
    assert main(["validate", "--config", str(strict), "--out-dir", str(tmp_path / "bad")]) == 1
    assert "overall FAIL" in capsys.readouterr().out


def test_optimal_n_table(tmp_path):
    cfg = small_config(tmp_path, "u2u_optimal_n.ini")
    assert main(["optimal-n", "--config", str(cfg), "--out-dir", str(tmp_path)]) == 0
    _, rows = read_csv(tmp_path / "optimal_n.csv")
    assert len(rows) == 6
    assert set(rows[0]) == {"sigma_mrad", "theta_prime_mrad", "snr_db", "n_opt_analytic",
                            "p_out_analytic", "n_opt_mc", "p_out_mc"}


@pytest.mark.parametrize("name", ["u2u2u.ini", "g2u2g.ini"])
def test_relay_configs_load(tmp_path, name):
    sc = load_config(small_config(tmp_path, name))
    assert sc.kind in ("u2u2u", "g2u2g")


def test_module_entry_point(tmp_path):
    import subprocess
    import sys
    cfg = small_config(tmp_path, "g2u2g.ini")
    out = subprocess.run([sys.executable, "-m", "uavlink", "curve", "--config", str(cfg),
                          "--out-dir", str(tmp_path)], capture_output=True, text=True)
    assert out.returncode == 0, out.stderr
    assert (tmp_path / "curve_cdf.csv").exists()
