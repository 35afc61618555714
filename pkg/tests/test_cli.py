import json
import os

import pytest

from mimofb.cli import main
from mimofb.quantizer import avg_power, quantizer_from_json
from mimofb.eigdist import SmallestAnalytic
from mimofb.randmat import AntennaConfig


@pytest.fixture(autouse=True)
def isolated_cache(tmp_path, monkeypatch):
    monkeypatch.setenv("MIMOFB_CACHE_DIR", str(tmp_path / "cache"))


def run_cli(capsys, *argv):
    rc = main(list(argv))
    captured = capsys.readouterr()
    return rc, captured.out, captured.err


def test_design_quantizer_golden(tmp_path, capsys):
    out = tmp_path / "q.json"
    rc, _, err = run_cli(capsys, "design-quantizer", "--m", "1", "--n", "1",
                         "--bins", "1", "--snr-db", "20", "--rate-bits", "2",
                         "--out", str(out))
    assert rc == 0, err
    doc = json.loads(out.read_text())
    assert doc["powers"] == [100.0]
    assert doc["gamma0"] == pytest.approx(0.03)
    assert doc["L"] == 1 and doc["method"] == "equi"


def test_design_quantizer_round_trip(tmp_path, capsys):
    out = tmp_path / "q.json"
    rc, _, _ = run_cli(capsys, "design-quantizer", "--m", "1", "--n", "1",
                       "--bins", "3", "--snr-db", "15", "--rate-bits", "2",
                       "--method", "kkt", "--out", str(out))
    assert rc == 0
    q, raw = quantizer_from_json(out.read_text())
    dist = SmallestAnalytic(AntennaConfig(raw["m"], raw["n"]))
    assert avg_power(q, dist) == pytest.approx(raw["avg_power"], rel=1e-9)


def test_tradeoff_contains_anchor_row(capsys):
    rc, out, _ = run_cli(capsys, "tradeoff", "--scheme", "quantized",
                         "--m", "2", "--n", "3", "--bins", "2")
    assert rc == 0
    assert "0,42,1,quantized" in out.splitlines()


def test_fit_synthetic_power_law(tmp_path, capsys):
    path = tmp_path / "sweep.csv"
    with open(path, "w") as f:
        f.write("snr_db,rate_bits,outage,stderr,trials,transmit_fraction,"
                "no_tx_outage,decode_outage,mode\n")
        for snr in range(10, 42, 2):
            outage = (10.0 ** (snr / 10.0)) ** -3
            f.write(f"{snr},2.0,{outage!r},0.0,0,1.0,0.0,{outage!r},analytic\n")
    rc, out, _ = run_cli(capsys, "fit", "--in", str(path),
                         "--window-start-db", "10", "--window-stop-db", "40")
    assert rc == 0
    assert "d_hat = 3.000" in out


def test_sweep_header_golden_rerun(tmp_path, capsys):
    out1 = tmp_path / "a.csv"
    args = ["sweep", "--scheme", "no-csit", "--m", "1", "--n", "1",
            "--rate-bits", "2", "--snr-start", "0", "--snr-stop", "6",
            "--snr-step", "3", "--trials", "20000", "--seed", "9"]
    rc, _, _ = run_cli(capsys, *args, "--threads", "1", "--out", str(out1))
    assert rc == 0
    # Rebuild the command from the header alone and rerun with a different
    # thread count: byte-identical output.
    header = {}
    for line in out1.read_text().splitlines():
        if not line.startswith("#"):
            break
        key, _, value = line[2:].partition("=")
        header[key] = value
    assert header.pop("command") == "sweep"
    argv = ["sweep"]
    for key, value in header.items():
        argv += [f"--{key}", value]
    out2 = tmp_path / "b.csv"
    rc, _, _ = run_cli(capsys, *argv, "--threads", "3", "--out", str(out2))
    assert rc == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_config_file_merge_and_override(tmp_path, capsys):
    cfg = tmp_path / "run.conf"
    cfg.write_text(
        "# sweep defaults\n"
        "scheme = no-csit\n"
        "m = 1\n"
        "n = 1\n"
        "rate-bits = 2\n"
        "snr-start = 0\n"
        "snr-stop = 4\n"
        "snr-step = 2\n"
        "trials = 5000\n"
        "seed = 3\n")
    out1 = tmp_path / "a.csv"
    rc, _, _ = run_cli(capsys, "sweep", "--config", str(cfg), "--out", str(out1))
    assert rc == 0
    assert "# seed=3" in out1.read_text()
    out2 = tmp_path / "b.csv"
    rc, _, _ = run_cli(capsys, "sweep", "--config", str(cfg), "--seed", "4",
                       "--out", str(out2))
    assert rc == 0
    assert "# seed=4" in out2.read_text()  # flag overrides file


def test_usage_errors(capsys):
    rc, _, err = run_cli(capsys, "sweep", "--scheme", "no-csit", "--m", "1",
                         "--n", "1", "--rate-bits", "2", "--mux", "1",
                         "--snr-start", "0", "--snr-stop", "4")
    assert rc != 0
    assert "mux" in err
    rc, _, err = run_cli(capsys, "sweep", "--nope", "1")
    assert rc != 0
    assert "--nope" in err
    rc, _, err = run_cli(capsys, "unknown-command")
    assert rc != 0


def test_numeric_parse_error_names_flag(capsys):
    rc, _, err = run_cli(capsys, "sweep", "--scheme", "no-csit", "--m", "1",
                         "--n", "1", "--rate-bits", "2", "--snr-start", "zero",
                         "--snr-stop", "4")
    assert rc != 0
    assert "--snr-start" in err


def test_missing_required_flag(capsys):
    rc, _, err = run_cli(capsys, "design-quantizer", "--m", "1", "--n", "1")
    assert rc != 0
    assert "--bins" in err or "--snr-db" in err


def test_figure_command(tmp_path, capsys):
    rc, out, _ = run_cli(capsys, "figure", "--id", "fig6",
                         "--out-dir", str(tmp_path / "figs"))
    assert rc == 0
    assert (tmp_path / "figs" / "fig6_joint_figure.csv").exists()


def test_cache_lifecycle(tmp_path, capsys):
    rc, out, _ = run_cli(capsys, "cache", "--build", "--m", "1", "--n", "2",
                         "--samples", "20000", "--seed", "5")
    assert rc == 0
    path = out.strip()
    assert os.path.exists(path)
    rc, out, _ = run_cli(capsys, "cache", "--list")
    assert rc == 0
    assert "#eigdist v1,1,2,1,20000,5" in out
    rc, out, _ = run_cli(capsys, "cache", "--clear")
    assert rc == 0
    assert not os.path.exists(path)
    rc, _, err = run_cli(capsys, "cache")
    assert rc != 0


def test_empirical_design_uses_cache(tmp_path, capsys):
    args = ["design-quantizer", "--m", "2", "--n", "3", "--eig-index", "2",
            "--bins", "2", "--snr-db", "10", "--rate-bits", "2",
            "--dist", "empirical", "--samples", "20000", "--seed", "5"]
    rc, out1, _ = run_cli(capsys, *args)
    assert rc == 0
    cache_files = list((tmp_path / "cache").glob("eigdist_*.csv"))
    assert len(cache_files) == 1
    rc, out2, _ = run_cli(capsys, *args)  # second run reads the cache
    assert rc == 0
    assert json.loads(out1) == json.loads(out2)


def test_stdout_when_no_out_flag(capsys):
    rc, out, _ = run_cli(capsys, "tradeoff", "--scheme", "no-csit",
                         "--m", "2", "--n", "2", "--grid-points", "3")
    assert rc == 0
    assert out.startswith("# command=tradeoff")
    assert "r,d,branch_i,scheme" in out


def test_help_paths(capsys):
    assert run_cli(capsys, "--help")[0] == 0
    assert run_cli(capsys, "sweep", "--help")[0] == 0
    assert run_cli(capsys)[0] == 0
