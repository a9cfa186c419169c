import json
from pathlib import Path

import pytest

from rayflow.cli import CSV_HEADER, main

MATRIX_COMPARE = """
[instance]
kind = matrix
diag = 1 4

[iterate]
rtol = 1e-13
dtol = 1e-9
grad_tol = 1e-12

[flow]
tau = 1e-3
t_end = 40.0
rtol = 1e-12
dtol = 1e-7
grad_tol = 1e-11

[compare]
lambda_rtol = 1e-8
"""

PD_ITERATE = """
[instance]
kind = pdirichlet1d
p = 3.0
n = 9
L = 1.0

[iterate]
rtol = 1e-11
dtol = 1e-8
"""


def write(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


class TestCompare:
    def test_matrix_agreement_within_1e8(self, tmp_path):
        cfg = write(tmp_path, MATRIX_COMPARE)
        code = main(["compare", "--config", cfg, "--out", str(tmp_path), "--quiet"])
        assert code == 0
        data = json.loads((tmp_path / "compare.json").read_text())
        assert data["pass"] is True
        for key in ("gap_iterate_oracle", "gap_flow_oracle", "gap_iterate_flow"):
            assert abs(data[key]) <= 1e-8
        assert data["lambda_oracle"] == pytest.approx(1.0, abs=1e-12)


class TestConfigErrors:
    def test_bad_p_exits_2_naming_key(self, tmp_path, capsys):
        cfg = write(tmp_path, "[instance]\nkind = pdirichlet1d\np = 0.5\nn = 4\n")
        code = main(["iterate", "--config", cfg, "--out", str(tmp_path)])
        assert code == 2
        assert "p" in capsys.readouterr().err

    def test_unknown_section(self, tmp_path, capsys):
        cfg = write(tmp_path, "[instance]\nkind = pdirichlet1d\np = 2.0\nn = 4\n[turbo]\nx = 1\n")
        code = main(["iterate", "--config", cfg, "--out", str(tmp_path)])
        assert code == 2
        assert "turbo" in capsys.readouterr().err

    def test_unknown_key_in_section(self, tmp_path, capsys):
        cfg = write(tmp_path, "[instance]\nkind = pdirichlet1d\np = 2.0\nn = 4\nwavelength = 8\n")
        code = main(["iterate", "--config", cfg, "--out", str(tmp_path)])
        assert code == 2
        assert "wavelength" in capsys.readouterr().err

    def test_missing_config_flag(self, tmp_path, capsys):
        code = main(["iterate", "--out", str(tmp_path)])
        assert code == 2


class TestOutputs:
    def test_iterate_files_and_schema(self, tmp_path):
        cfg = write(tmp_path, PD_ITERATE)
        code = main(["iterate", "--config", cfg, "--out", str(tmp_path), "--quiet"])
        assert code == 0
        csv_text = (tmp_path / "iterate_trace.csv").read_text()
        lines = csv_text.split("\n")
        assert lines[0] == CSV_HEADER
        assert csv_text.endswith("\n") and "\r" not in csv_text
        summary = json.loads((tmp_path / "iterate_summary.json").read_text())
        assert summary["command"] == "iterate"
        assert summary["converged"] is True
        assert summary["mu_hat"] == pytest.approx(summary["lambda_hat"] ** (1 / 2), rel=1e-12)
        assert len(summary["limit_vec"]) == 9

    def test_flow_and_oracle_files(self, tmp_path):
        cfg = write(tmp_path, MATRIX_COMPARE)
        assert main(["flow", "--config", cfg, "--out", str(tmp_path), "--quiet"]) == 0
        assert main(["oracle", "--config", cfg, "--out", str(tmp_path), "--quiet"]) == 0
        flow = json.loads((tmp_path / "flow_summary.json").read_text())
        assert flow["tau"] == pytest.approx(1e-3)
        oracle = json.loads((tmp_path / "oracle_result.json").read_text())
        assert oracle["method"] == "jacobi_eig"
        assert (tmp_path / "flow_trace.csv").read_text().split("\n")[0] == CSV_HEADER

    def test_determinism_byte_identical(self, tmp_path):
        cfg = write(tmp_path, PD_ITERATE)
        out1, out2 = tmp_path / "a", tmp_path / "b"
        for out in (out1, out2):
            assert main(["iterate", "--config", cfg, "--out", str(out), "--seed", "7", "--quiet"]) == 0
        for name in ("iterate_trace.csv", "iterate_summary.json"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()
