import csv
import hashlib
import io
import json
import math
import subprocess
import sys
from pathlib import Path

import pytest

from beamgap.cli import main
from beamgap.homogenization import appendix_tensor_closed_form
from beamgap.lattice import build_square_example, save_config
from beamgap.resonance import beta1_closed

DEMOS = Path(__file__).resolve().parents[1] / "demos"


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def table(text):
    body = [line for line in text.splitlines() if not line.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(body))))


def header(text):
    return [line for line in text.splitlines() if line.startswith("#")]


class TestHomogenize:
    def test_builtin(self, capsys):
        code, out, _ = run(capsys, "homogenize", "--builtin", "square", "--alpha", "45", "--a", "0.25", "--h", "0.015625")
        assert code == 0
        rows = {r["quantity"]: r for r in table(out)}
        ref = appendix_tensor_closed_form(1, 1, 1).voigt
        assert float(rows["C1111"]["value"]) == pytest.approx(ref[0, 0], rel=1e-10)
        assert float(rows["C1212"]["value"]) == pytest.approx(6 / 13, rel=1e-10)
        assert float(rows["C1122"]["value"]) == pytest.approx(0, abs=1e-10)
        assert all(float(r["rel_error"]) < 1e-10 for q, r in rows.items() if q.startswith("C"))
        assert float(rows["symmetry_major"]["value"]) <= 1e-10
        assert float(rows["coercivity"]["value"]) == pytest.approx(12 / 13, rel=1e-10)

    def test_provenance_header(self, capsys):
        _, out, _ = run(capsys, "homogenize", "--builtin", "square", "--a", "0.25", "--h", "0.015625")
        lines = header(out)
        assert lines[0] == "# beamgap homogenize --builtin square --a 0.25 --h 0.015625"
        assert lines[1].startswith("# config sha256 ") and len(lines[1].split()[-1]) == 64
        assert lines[2] == "# h 0.015625"

    def test_rerun_is_byte_identical(self, capsys):
        argv = ("homogenize", "--builtin", "square", "--a", "0.25", "--h", "0.03125")
        assert run(capsys, *argv)[1] == run(capsys, *argv)[1]

    def test_config_file(self, capsys, tmp_path):
        path = tmp_path / "lattice.json"
        save_config(build_square_example(45.0, 0.25), path)
        code, out, _ = run(capsys, "homogenize", "--config", str(path), "--h", "0.03125")
        assert code == 0
        rows = {r["quantity"]: r for r in table(out)}
        assert float(rows["C1111"]["value"]) == pytest.approx(1.0, rel=1e-10)
        assert rows["C1111"]["closed_form"] == ""
        assert header(out)[1] == f"# config sha256 {hashlib.sha256(path.read_bytes()).hexdigest()}"

    def test_shipped_config(self, capsys):
        code, _, _ = run(capsys, "homogenize", "--config", str(DEMOS / "square_clamped45.json"), "--h", "0.0625")
        assert code == 0


class TestBetaAndGaps:
    def test_gaps_example(self, capsys):
        code, out, _ = run(capsys, "gaps", "--builtin", "square", "--a", "0.5", "--lambda-max", "200", "--mode", "closed-form")
        assert code == 0
        rows = table(out)
        assert any(r["class"] == "FullGap" for r in rows)
        assert rows[0]["lambda_lo"] == "0"
        assert float(rows[-1]["lambda_hi"]) == 200
        assert {r["boundary_type"] for r in rows} <= {"zero", "pole", "end"}

    def test_gaps_fe(self, capsys):
        code, out, _ = run(capsys, "gaps", "--builtin", "square", "--a", "0.5", "--lambda-max", "20",
                           "--mode", "fe", "--h", "0.0078125", "--samples", "400")
        assert code == 0
        assert any(r["class"] == "FullGap" for r in table(out))

    def test_beta_closed_form(self, capsys):
        code, out, _ = run(capsys, "beta", "--builtin", "square", "--a", "0.5", "--lambda-max", "1", "--samples", "101")
        assert code == 0
        rows = table(out)
        assert len(rows) == 101
        assert float(rows[-1]["beta1"]) == pytest.approx(beta1_closed(1.0, 0.5), rel=1e-10)
        assert rows[0]["class"] == "Band"

    def test_beta_fe_columns(self, capsys):
        code, out, _ = run(capsys, "beta", "--builtin", "square", "--a", "0.5", "--lambda-max", "5", "--samples", "101",
                           "--mode", "fe", "--h", "0.015625")
        assert code == 0
        assert list(table(out)[0]) == ["lambda", "b11", "b12", "b22", "eig1", "eig2", "class"]

    def test_resonant_sample_is_labelled(self, capsys):
        lam1 = math.pi**2
        code, out, _ = run(capsys, "beta", "--builtin", "square", "--a", "0.5", "--lambda-min", str(lam1),
                           "--lambda-max", str(lam1 + 1), "--samples", "100")
        assert code == 0
        assert table(out)[0]["class"] == "Resonance"

    def test_out_file(self, capsys, tmp_path):
        target = tmp_path / "gaps.csv"
        code, out, _ = run(capsys, "gaps", "--builtin", "square", "--a", "0.5", "--lambda-max", "50", "--out", str(target))
        assert code == 0 and out == ""
        assert target.read_text().startswith("# beamgap gaps")


class TestBlochAndValidate:
    def test_bloch(self, capsys):
        code, out, _ = run(capsys, "bloch", "--builtin", "square", "--h", "0.0625", "--points", "2", "--bands", "4")
        assert code == 0
        rows = table(out)
        assert len(rows) == 7 * 4
        assert list(rows[0]) == ["path_coord", "k1", "k2", "band_index", "lambda", "omega"]

    def test_bloch_scaled(self, capsys):
        code, out, _ = run(capsys, "bloch", "--builtin", "square", "--h", "0.0625", "--points", "1", "--bands", "3",
                           "--epsilon", "0.25")
        assert code == 0

    def test_validate(self, capsys):
        code, out, _ = run(capsys, "validate", "--builtin", "square", "--h", "0.0625", "--epsilons", "0.25,0.125")
        assert code == 0
        rows = table(out)
        assert len(rows) == 2
        assert float(rows[1]["rel_dev"]) < float(rows[0]["rel_dev"])


class TestErrors:
    def test_negative_lambda_is_usage_error(self, capsys):
        code, _, err = run(capsys, "beta", "--builtin", "square", "--a", "0.5", "--lambda-min", "-1")
        assert code == 2
        assert "usage" in err

    @pytest.mark.parametrize(
        "argv",
        [
            ["frobnicate"],
            ["beta"],
            ["beta", "--builtin", "square"],
            ["gaps", "--builtin", "square", "--a", "0.5", "--lambda-min", "5", "--lambda-max", "1"],
            ["validate", "--builtin", "square", "--epsilons", "0.1,0.2"],
            ["homogenize", "--builtin", "square", "--a", "0.25", "--h", "-1"],
        ],
    )
    def test_usage_errors(self, capsys, argv):
        assert run(capsys, *argv)[0] == 2

    def test_geometry_is_domain_error(self, capsys):
        code, _, err = run(capsys, "homogenize", "--builtin", "square", "--a", "0.9")
        assert code == 1
        assert "exits" in err

    def test_bad_config_is_domain_error(self, capsys, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"vertices": []}))
        assert run(capsys, "homogenize", "--config", str(path))[0] == 1

    def test_module_entry_point(self):
        proc = subprocess.run([sys.executable, "-m", "beamgap", "beta", "--lambda-min", "-1"], capture_output=True, text=True)
        assert proc.returncode == 2
        proc = subprocess.run([sys.executable, "-m", "beamgap", "--version"], capture_output=True, text=True)
        assert proc.returncode == 0 and proc.stdout.startswith("beamgap ")
