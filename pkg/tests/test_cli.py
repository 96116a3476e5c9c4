import json
import math
import subprocess
import sys

import pytest

from csqueeze import protocol
from csqueeze.cli import SWEEP_COLUMNS, main
from csqueeze.errors import DegenerateCodeError

SMALL = "[params]\nepsilon = 0.1\nresonator_dim = 60\n"


def ini(tmp_path, text, name="run.ini"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def read_json(path):
    return json.loads(path.read_text())


class TestWigner:
    def test_vacuum(self, tmp_path):
        cfg = ini(tmp_path, "[params]\nresonator_dim = 20\n[wigner]\nextent = 4\npoints = 81\n")
        code = main(["wigner", "--config", cfg, "--out", str(tmp_path / "vac.json")])
        assert code == 0
        out = read_json(tmp_path / "vac.json")
        assert out["w_max"] == pytest.approx(1 / math.pi, rel=1e-12)
        assert out["argmax"] == {"x": 0.0, "p": 0.0}
        assert out["integral"] == pytest.approx(1.0, abs=1e-6)
        assert (tmp_path / "vac.png").exists()
        man = read_json(tmp_path / "vac.manifest.json")
        assert man["status"] == "ok"
        assert man["outputs"] == ["vac.json", "vac.png"]

    def test_fock_one_is_negative_at_origin(self, tmp_path):
        cfg = ini(tmp_path, "[params]\nresonator_dim = 20\n[wigner]\nstate = fock\nfock_n = 1\npoints = 41\nextent = 2\n")
        assert main(["wigner", "--config", cfg, "--out", str(tmp_path / "f1"), "--no-figures"]) == 0
        out = read_json(tmp_path / "f1.json")
        assert out["w_min"] == pytest.approx(-1 / math.pi, rel=1e-12)
        assert not (tmp_path / "f1.png").exists()


class TestSweep:
    def run_sweep(self, tmp_path, name, extra=()):
        cfg = ini(tmp_path, SMALL + "[protocol]\nbackend = ideal\n[sweep]\ntheta_b = 0, pi/2, pi\nphi_b = 0, pi/2\n")
        return main(["sweep", "--config", cfg, "--out", str(tmp_path / name), *extra])

    def test_csv_layout(self, tmp_path):
        assert self.run_sweep(tmp_path, "a") == 0
        raw = (tmp_path / "a.csv").read_bytes()
        assert b"\r" not in raw
        lines = raw.decode().splitlines()
        assert lines[0] == ",".join(SWEEP_COLUMNS)
        assert len(lines) == 7
        first = dict(zip(SWEEP_COLUMNS, lines[1].split(",")))
        assert float(first["f_avg"]) == pytest.approx(1.0)

    def test_reruns_are_byte_identical(self, tmp_path):
        self.run_sweep(tmp_path, "a")
        self.run_sweep(tmp_path, "b", ["--jobs", "2"])
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
        assert (tmp_path / "a.png").read_bytes() == (tmp_path / "b.png").read_bytes()

    def test_manifest_reproduces_run(self, tmp_path):
        self.run_sweep(tmp_path, "a")
        man = tmp_path / "a.manifest.json"
        assert main(["sweep", "--config", str(man), "--out", str(tmp_path / "again")]) == 0
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "again.csv").read_bytes()
        m1, m2 = read_json(man), read_json(tmp_path / "again.manifest.json")
        assert m1["config"]["params"] == m2["config"]["params"]
        assert m1["derived"] == m2["derived"]

    def test_failed_point_is_null_and_exit_3(self, tmp_path, monkeypatch):
        real = protocol.compensated_encode

        def flaky(point, *args, **kwargs):
            if point.theta_b == math.pi:
                raise DegenerateCodeError("forced")
            return real(point, *args, **kwargs)

        monkeypatch.setattr(protocol, "compensated_encode", flaky)
        assert self.run_sweep(tmp_path, "f", ["--format", "json"]) == 3
        out = read_json(tmp_path / "f.json")
        bad = [r for r in out["reports"] if r["error"]]
        assert len(bad) == 2
        assert bad[0]["f_avg"] is None
        man = read_json(tmp_path / "f.manifest.json")
        assert man["status"] == "numeric_failure"
        assert "forced" in man["error"]


class TestExitCodes:
    def test_config_error(self, tmp_path, capsys):
        cfg = ini(tmp_path, "[params]\nomega = 6\n")
        assert main(["simulate", "--config", cfg]) == 2
        assert "run.ini:2" in capsys.readouterr().err

    def test_degenerate_code(self, tmp_path):
        cfg = ini(tmp_path, "[params]\nepsilon = 0\nresonator_dim = 20\n")
        assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "z")]) == 3
        man = read_json(tmp_path / "z.manifest.json")
        assert man["error"].startswith("DegenerateCodeError")

    def test_strict_regime(self, tmp_path, capsys):
        cfg = ini(tmp_path, "[params]\nresonator_dim = 10\n")
        assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "s"), "--strict"]) == 4
        assert "truncation" in capsys.readouterr().err
        assert read_json(tmp_path / "s.manifest.json")["status"] == "regime_violation"


class TestScenarios:
    def test_simulate_ideal(self, tmp_path):
        cfg = ini(tmp_path, SMALL + "[protocol]\nbackend = ideal\ntheta_b = pi/2\nphi_b = 0\n")
        assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "sim")]) == 0
        rep = read_json(tmp_path / "sim.json")["report"]
        # N = 60 truncates r = 1 at the 1e-8 level
        assert rep["f_avg"] == pytest.approx(protocol.average_fidelity_exact(1.0, 0.0), abs=1e-6)

    def test_flags_override_file(self, tmp_path):
        cfg = ini(tmp_path, SMALL + "[protocol]\nbackend = unitary\nframe = driven\n")
        assert main(["simulate", "--config", cfg, "--backend", "ideal", "--phi-star", "1.0", "--out", str(tmp_path / "o"), "--no-figures"]) == 0
        man = read_json(tmp_path / "o.manifest.json")
        assert man["config"]["protocol"]["backend"] == "ideal"
        assert man["config"]["protocol"]["phi_star"] == "1.0"

    def test_optimize_rwa(self, tmp_path):
        cfg = ini(tmp_path, SMALL + "[protocol]\nframe = rwa\ngrid_points = 21\n")
        assert main(["optimize-phi", "--config", cfg, "--out", str(tmp_path / "opt"), "--format", "csv"]) == 0
        lines = (tmp_path / "opt.csv").read_text().splitlines()
        assert lines[0] == "phi,f_avg"
        assert len(lines) == 22

    def test_modes(self, tmp_path):
        assert main(["modes", "--out", str(tmp_path / "m"), "--no-figures"]) == 0
        out = read_json(tmp_path / "m.json")
        assert out["spectrum"]["frequencies"][0] == pytest.approx(37.54576, abs=1e-4)
        assert max(out["spectrum"]["residuals"]) < 1e-10
        assert out["extracted"]["theta_shift"] == pytest.approx(math.pi)


def test_console_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "csqueeze.cli", "--version"], capture_output=True, text=True, cwd=tmp_path, check=False
    )
    assert proc.returncode == 0
    assert proc.stdout.startswith("csq ")
