import csv
import io
import json
import math
import os
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from greedycoh import (
    SparseRepresentation,
    build_orthonormal,
    new_dictionary,
    save_dictionary,
    save_representation,
)
from greedycoh.analysis import REPORT_CSV_HEADER, parse_report_text
from greedycoh.cli import main
from greedycoh.greedy import read_trace_csv

GOLDEN = Path(__file__).parent / "golden"

ORTHO16 = {
    "dictionary": {"type": "orthonormal", "dim": 16},
    "signal": {"type": "sparse", "sparsity": 4, "amp_low": 1, "amp_high": 2, "seed": 9},
    "algorithm": "PGA",
    "stop": {"max_iterations": 100},
    "checks": ["theorem1"],
}

INCOHERENT = {
    "dictionary": {"type": "incoherent", "dim": 64, "count": 64, "target_mu1": 0.3, "seed": 3},
    "signal": {"type": "sparse", "sparsity": 5, "amp_low": 1, "amp_high": 2, "seed": 4},
    "algorithm": "both",
    "stop": {"max_iterations": 200},
    "checks": ["theorem1", "theoremA_recovery", "energy_recursion", "lemma3"],
}


def write_config(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def run_cli(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def read_dir(path):
    return {p.name: p.read_bytes() for p in sorted(Path(path).rglob("*")) if p.is_file()}


@pytest.fixture
def ortho4_files(tmp_path):
    save_dictionary(build_orthonormal(4), tmp_path / "o4.txt")
    save_representation(SparseRepresentation({0: 3.0, 1: 2.0, 2: 1.0}), tmp_path / "f.txt")
    return {
        "dictionary": {"type": "file", "path": "o4.txt"},
        "signal": {"type": "file", "path": "f.txt"},
    }


@pytest.fixture
def three_files(tmp_path):
    # sqrt(0.5) is the correctly rounded 1/sqrt2; 2*sqrt(0.5) is then exactly fl(sqrt2)
    h = math.sqrt(0.5)
    save_dictionary(new_dictionary(np.array([[1.0, 0.0, h], [0.0, 1.0, h]]), "three"), tmp_path / "three.txt")
    save_representation(SparseRepresentation({0: 1.0, 1: 1.0}), tmp_path / "f11.txt")
    return {
        "dictionary": {"type": "file", "path": "three.txt"},
        "signal": {"type": "file", "path": "f11.txt"},
    }


class TestCoherence:
    def test_orthonormal_config(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {"dictionary": {"type": "orthonormal", "dim": 8},
                                      "signal": {"type": "sparse", "sparsity": 1}})
        code, out, _ = run_cli(capsys, "coherence", "--config", cfg)
        assert code == 0
        assert out.splitlines()[0] == "mu1=0"

    def test_orthonormal_file(self, tmp_path, capsys):
        save_dictionary(build_orthonormal(8), tmp_path / "o8.txt")
        code, out, _ = run_cli(capsys, "coherence", tmp_path / "o8.txt")
        assert code == 0 and "mu1=0\n" in out

    def test_three_atoms_warns(self, tmp_path, capsys, three_files):
        code, out, err = run_cli(capsys, "coherence", tmp_path / "three.txt")
        assert code == 2
        d = parse_report_text(out)
        assert d["mu1"] == "1.4142135623730951"
        assert d["worst_atom"] == "2"
        assert "1/2" in err

    def test_missing_file(self, tmp_path, capsys):
        code, _, err = run_cli(capsys, "coherence", tmp_path / "nope.txt")
        assert code == 1 and err.startswith("error:")

    def test_malformed_file(self, tmp_path, capsys):
        (tmp_path / "bad.txt").write_text("2 2\n1 0\n")
        assert run_cli(capsys, "coherence", tmp_path / "bad.txt")[0] == 1

    def test_quiet(self, tmp_path, capsys):
        save_dictionary(build_orthonormal(3), tmp_path / "o3.txt")
        code, out, _ = run_cli(capsys, "coherence", tmp_path / "o3.txt", "--quiet")
        assert code == 0 and out == ""

    def test_no_source(self, capsys):
        assert run_cli(capsys, "coherence")[0] == 1


class TestRun:
    def test_orthonormal_example(self, tmp_path, capsys):
        cfg = write_config(tmp_path, ORTHO16)
        code, out, _ = run_cli(capsys, "run", "--config", cfg, "--out", tmp_path / "out")
        assert code == 0
        rows = read_trace_csv((tmp_path / "out" / "trace_pga.csv").read_text())
        assert len(rows) == 4
        assert rows[-1][3] == 0.0
        report = parse_report_text((tmp_path / "out" / "report_theorem1.txt").read_text())
        assert report["holds"] == "True"
        assert "theorem1: holds=True" in out

    def test_incoherent_example(self, tmp_path, capsys):
        cfg = write_config(tmp_path, INCOHERENT)
        code, out, err = run_cli(capsys, "run", "--config", cfg, "--out", tmp_path / "out")
        assert code == 0, err
        summary = list(csv.reader(io.StringIO((tmp_path / "out" / "summary.csv").read_text())))
        assert summary[0] == REPORT_CSV_HEADER.split(",")
        assert [r[0] for r in summary[1:]] == ["Theorem1", "TheoremA_recovery", "EnergyRecursion", "Lemma3"]
        assert all(r[1] == "True" for r in summary[1:])
        oga = read_trace_csv((tmp_path / "out" / "trace_oga.csv").read_text())
        assert len(oga) == 5

    def test_overcomplete_70_unreachable(self, tmp_path, capsys):
        cfg = dict(INCOHERENT, dictionary=dict(INCOHERENT["dictionary"], count=70, max_attempts=3))
        path = write_config(tmp_path, cfg)
        code, _, err = run_cli(capsys, "run", "--config", path, "--out", tmp_path / "out")
        assert code == 1 and "error:" in err
        assert not (tmp_path / "out").exists()

    def test_theorem2_needs_p(self, tmp_path, capsys):
        cfg = write_config(tmp_path, dict(ORTHO16, checks=["theorem2"]))
        code, _, err = run_cli(capsys, "run", "--config", cfg, "--out", tmp_path / "out")
        assert code == 1 and "requires p" in err

    def test_check_needs_matching_algorithm(self, tmp_path, capsys):
        cfg = write_config(tmp_path, dict(ORTHO16, checks=["theoremA_recovery"]))
        assert run_cli(capsys, "run", "--config", cfg)[0] == 1

    def test_unknown_check(self, tmp_path, capsys):
        cfg = write_config(tmp_path, dict(ORTHO16, checks=["theorem9"]))
        assert run_cli(capsys, "run", "--config", cfg)[0] == 1

    def test_invalid_json(self, tmp_path, capsys):
        (tmp_path / "bad.json").write_text("{nope")
        assert run_cli(capsys, "run", "--config", tmp_path / "bad.json")[0] == 1

    def test_missing_config_flag(self, capsys):
        assert run_cli(capsys, "run")[0] == 1

    def test_hypothesis_warning_exit_2(self, tmp_path, capsys):
        cfg = dict(INCOHERENT, dictionary=dict(INCOHERENT["dictionary"], target_mu1=0.45),
                   checks=["theorem1"])
        code, _, err = run_cli(capsys, "run", "--config", write_config(tmp_path, cfg),
                               "--out", tmp_path / "out")
        assert code == 2 and "mu1 < 1/3" in err

    def test_output_dir_relative_to_config(self, tmp_path, capsys):
        sub = tmp_path / "exp"
        sub.mkdir()
        cfg = write_config(sub, dict(ORTHO16, output_dir="results"))
        assert run_cli(capsys, "run", "--config", cfg)[0] == 0
        assert (sub / "results" / "trace_pga.csv").is_file()

    def test_snapshots(self, tmp_path, capsys):
        cfg = write_config(tmp_path, dict(ORTHO16, snapshots=True))
        run_cli(capsys, "run", "--config", cfg, "--out", tmp_path / "out")
        snaps = sorted((tmp_path / "out" / "snapshots_pga").iterdir())
        assert [p.name for p in snaps] == [f"step_{k:05d}.txt" for k in range(1, 5)]

    def test_failure_leaves_no_partial_output(self, tmp_path, capsys, monkeypatch):
        import greedycoh.cli as cli

        def boom(*a, **k):
            raise OSError("disk full")

        monkeypatch.setattr(cli, "save_trace", boom)
        cfg = write_config(tmp_path, ORTHO16)
        code, _, err = run_cli(capsys, "run", "--config", cfg, "--out", tmp_path / "out")
        assert code == 1 and "disk full" in err
        assert not (tmp_path / "out").exists()
        assert [p.name for p in tmp_path.iterdir()] == ["cfg.json"]

    def test_seed_override(self, tmp_path, capsys):
        base = write_config(tmp_path, ORTHO16)
        reseeded = write_config(tmp_path, dict(ORTHO16, signal=dict(ORTHO16["signal"], seed=5)), "b.json")
        run_cli(capsys, "run", "--config", base, "--seed", 5, "--out", tmp_path / "a")
        run_cli(capsys, "run", "--config", reseeded, "--out", tmp_path / "b")
        run_cli(capsys, "run", "--config", base, "--out", tmp_path / "c")
        assert read_dir(tmp_path / "a") == read_dir(tmp_path / "b")
        assert read_dir(tmp_path / "a") != read_dir(tmp_path / "c")

    def test_trace_csv_lossless(self, tmp_path, capsys):
        cfg = write_config(tmp_path, INCOHERENT)
        run_cli(capsys, "run", "--config", cfg, "--out", tmp_path / "out")
        text = (tmp_path / "out" / "trace_pga.csv").read_text()
        rows = read_trace_csv(text)
        rebuilt = "step,selected,inner_product,residual_norm\n" + "".join(
            f"{s},{k},{format(ip, '.17g')},{format(r, '.17g')}\n" for s, k, ip, r in rows
        )
        assert rebuilt == text
        for _, _, ip, r in rows:
            assert math.isfinite(ip) and r >= 0


@pytest.mark.parametrize("name", ["ortho16", "ortho4_both"])
def test_golden_outputs(tmp_path, capsys, ortho4_files, name):
    cfg = {
        "ortho16": ORTHO16,
        "ortho4_both": dict(ortho4_files, algorithm="both", checks=["theorem1", "oracle"], oracle_m=2),
    }[name]
    path = write_config(tmp_path, cfg)
    for out in ("a", "b"):
        assert run_cli(capsys, "run", "--config", path, "--out", tmp_path / out)[0] == 0
    first = read_dir(tmp_path / "a")
    assert first == read_dir(tmp_path / "b")
    assert first == read_dir(GOLDEN / name)


class TestOracle:
    def test_orthonormal(self, tmp_path, capsys, ortho4_files):
        cfg = write_config(tmp_path, ortho4_files)
        code, out, _ = run_cli(capsys, "oracle", "--config", cfg, "--m", 2)
        d = parse_report_text(out)
        assert code == 0
        assert float(d["oracle_error"]) == 1.0
        assert d["oracle_support"] == "0 1"
        assert float(d["oga_residual"]) == 1.0
        assert float(d["pga_residual"]) == 1.0

    def test_three_atoms(self, tmp_path, capsys, three_files):
        cfg = write_config(tmp_path, three_files)
        code, out, _ = run_cli(capsys, "oracle", "--config", cfg, "--m", 1)
        d = parse_report_text(out)
        assert code == 0
        assert float(d["oracle_error"]) == pytest.approx(0.0, abs=1e-15)
        assert d["oracle_support"] == "2"

    def test_guard(self, tmp_path, capsys):
        cfg = write_config(tmp_path, {"dictionary": {"type": "orthonormal", "dim": 40},
                                      "signal": {"type": "sparse", "sparsity": 3}})
        code, _, err = run_cli(capsys, "oracle", "--config", cfg, "--m", 20)
        assert code == 1 and "exceeds the limit" in err


def test_module_entry_point(tmp_path):
    save_dictionary(new_dictionary(np.eye(2)), tmp_path / "i2.txt")
    proc = subprocess.run(
        [sys.executable, "-m", "greedycoh", "coherence", str(tmp_path / "i2.txt")],
        capture_output=True, text=True, env=dict(os.environ),
    )
    assert proc.returncode == 0
    assert proc.stdout.startswith("mu1=0\n")
