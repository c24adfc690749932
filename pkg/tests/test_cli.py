"""End-to-end command-line tests: exit codes, file outputs, determinism."""

import json
import math

import numpy as np
import pytest

from mstv.analysis import fit_rate
from mstv.cli import main
from mstv.frames import make_frame, FrameIndex
from mstv.grid import TorusSignal
from mstv.sigio import read_signal, write_signal


def run(*argv):
    return main([str(a) for a in argv])


def test_usage_errors_exit_one(tmp_path, capsys):
    assert run("denoise") == 1
    assert run("denoise", tmp_path / "missing.csv", "--sigma", "0.1") == 1
    assert run("simulate") == 1
    assert run("simulate", "--truth", "nosuch", "--out", tmp_path) == 1
    assert run("diagnose") == 1
    capsys.readouterr()


def test_denoise_requires_sigma_or_flag(tmp_path, capsys):
    sig = TorusSignal(1, 64, np.zeros(64))
    write_signal(tmp_path / "z.csv", sig)
    assert run("denoise", tmp_path / "z.csv", "--out", tmp_path) == 1
    err = capsys.readouterr().err
    assert "sigma" in err


def test_denoise_constant_pgm_zero_noise_round_trip(tmp_path):
    s = TorusSignal(2, 32, np.full((32, 32), 0.42))
    write_signal(tmp_path / "c.pgm", s)
    code = run(
        "denoise", tmp_path / "c.pgm", "--sigma", "1e-300", "--out", tmp_path / "out"
    )
    assert code == 0
    est = read_signal(tmp_path / "out" / "estimate.pgm")
    assert np.max(np.abs(est.values - s.values)) < 1e-9


def test_denoise_report_feasibility_and_exit_codes(tmp_path):
    run(
        "simulate", "--truth", "step", "--d", "1", "--grid-side", "128",
        "--sigma", "0.3", "--out", tmp_path / "sim",
    )
    code = run(
        "denoise", tmp_path / "sim" / "noisy.csv", "--sigma", "0.3",
        "--out", tmp_path / "den", "--rel-obj-tol", "1e-2", "--max-iters", "6000",
    )
    report = json.loads((tmp_path / "den" / "report.json").read_text())
    assert code == 0
    assert report["converged"] is True
    assert report["feas_residual"] <= report["gamma"] * (1 + 1e-6)
    assert report["cardinality"] > 0
    # starved iteration budget cannot converge on noisy data: exit 2
    code = run(
        "denoise", tmp_path / "sim" / "noisy.csv", "--sigma", "0.3",
        "--out", tmp_path / "den2", "--max-iters", "20", "--rel-obj-tol", "1e-12",
        "--feas-tol", "1e-14",
    )
    assert code == 2
    report2 = json.loads((tmp_path / "den2" / "report.json").read_text())
    assert report2["converged"] is False


def test_simulate_is_deterministic(tmp_path):
    for sub in ("a", "b"):
        assert (
            run(
                "simulate", "--truth", "blocks", "--d", "1", "--grid-side", "256",
                "--sigma", "0.4", "--seed", "11", "--out", tmp_path / sub,
            )
            == 0
        )
    for name in ("truth.csv", "noisy.csv", "coefficients.csv", "observation.json"):
        assert (tmp_path / "a" / name).read_bytes() == (
            tmp_path / "b" / name
        ).read_bytes()


def test_bench_zero_noise_and_schema_and_slope_consistency(tmp_path):
    config = {
        "d": 1,
        "q": 2.0,
        "truth": "constant",
        "truth_params": {"value": 0.25},
        "sigma": 1e-300,
        "ladder": [64, 128, 256],
        "replicates": 2,
        "estimator": "frame_tv",
        "solver": {"max_iters": 2000, "rel_obj_tol": 1e-3},
    }
    (tmp_path / "cfg.json").write_text(json.dumps(config))
    assert run("bench", "--config", tmp_path / "cfg.json", "--out", tmp_path) == 0
    rows = (tmp_path / "bench.csv").read_text().strip().split("\n")
    assert rows[0] == "d,q,n,estimator,mean_risk,stderr,reps,feas_freq,converged_frac"
    for row in rows[1:]:
        assert float(row.split(",")[4]) < 1e-6

    noisy = dict(config, sigma=0.5, estimator="identity", solver={})
    (tmp_path / "cfg2.json").write_text(json.dumps(noisy))
    assert run("bench", "--config", tmp_path / "cfg2.json", "--out", tmp_path / "n") == 0
    payload = json.loads((tmp_path / "n" / "bench.json").read_text())
    csv_rows = (tmp_path / "n" / "bench.csv").read_text().strip().split("\n")[1:]
    ladder = [(int(r.split(",")[2]), float(r.split(",")[4])) for r in csv_rows]
    slope, _stderr, _icept = fit_rate(ladder)
    assert payload["fit"]["slope"] == pytest.approx(slope, abs=1e-12)
    assert (tmp_path / "n" / "bench.svg").read_text().startswith("<svg")


def test_bench_threads_bitwise_identical(tmp_path):
    base = [
        "bench", "--truth", "step", "--d", "1", "--sigma", "0.4",
        "--ladder", "64,128,256", "--replicates", "3",
        "--estimator", "wavelet_threshold",
    ]
    assert run(*base, "--threads", "1", "--out", tmp_path / "t1") == 0
    assert run(*base, "--threads", "2", "--out", tmp_path / "t2") == 0
    assert (tmp_path / "t1" / "bench.csv").read_bytes() == (
        tmp_path / "t2" / "bench.csv"
    ).read_bytes()
    assert (tmp_path / "t1" / "bench.json").read_bytes() == (
        tmp_path / "t2" / "bench.json"
    ).read_bytes()


def test_dump_config_rerun_identical(tmp_path, capsys):
    argv = [
        "bench", "--truth", "constant", "--sigma", "0.5", "--ladder", "64,128,256",
        "--replicates", "2", "--estimator", "identity", "--out", str(tmp_path / "r1"),
    ]
    assert run(*argv, "--dump-config") == 0
    dumped = capsys.readouterr().out
    cfg_path = tmp_path / "resolved.json"
    cfg_path.write_text(dumped)
    # the dumped file reruns identically and re-dumps identically
    assert run("bench", "--config", cfg_path, "--dump-config") == 0
    assert capsys.readouterr().out == dumped
    assert run(*argv) == 0
    assert run("bench", "--config", cfg_path, "--out", tmp_path / "r2") == 0
    assert (tmp_path / "r1" / "bench.csv").read_bytes() == (
        tmp_path / "r2" / "bench.csv"
    ).read_bytes()


def test_config_unknown_keys_rejected(tmp_path, capsys):
    (tmp_path / "bad.json").write_text(json.dumps({"truth": "step", "typo_key": 1}))
    assert run("bench", "--config", tmp_path / "bad.json") == 1
    assert "typo_key" in capsys.readouterr().err


def test_diagnose_single_atom_passes_all_checks(tmp_path):
    frame = make_frame("wavelet", 1, vanishing_moments=2)
    atom = frame.atom(FrameIndex(2, (1,), (1,)), 64)
    write_signal(tmp_path / "atom.tsig", atom)
    assert run("diagnose", tmp_path / "atom.tsig", "--out", tmp_path) == 0
    payload = json.loads((tmp_path / "diagnose.json").read_text())
    assert payload["all_pass"] is True
    for check in payload["checks"].values():
        assert check["status"] == "pass"


def test_diagnose_zero_signal_skips_interpolation(tmp_path):
    write_signal(tmp_path / "zero.csv", TorusSignal(1, 64, np.zeros(64)))
    assert run("diagnose", tmp_path / "zero.csv", "--out", tmp_path) == 0
    payload = json.loads((tmp_path / "diagnose.json").read_text())
    assert payload["checks"]["interpolation"]["status"] == "skipped"
    assert payload["all_pass"] is True


def test_diagnose_corpus_constants_frozen(tmp_path):
    for sub in ("a", "b"):
        assert (
            run(
                "diagnose", "--corpus", "8", "--d", "2", "--grid-side", "32",
                "--seed", "7", "--out", tmp_path / sub,
            )
            == 0
        )
    first = json.loads((tmp_path / "a" / "diagnose.json").read_text())
    second = json.loads((tmp_path / "b" / "diagnose.json").read_text())
    assert first == second
    ratio = first["checks"]["interpolation"]["max_ratio"]
    assert math.isfinite(ratio) and ratio > 0
