import csv
import io
import json
import math

import pytest

from qudit_repeater import cli, oracle
from qudit_repeater.cli import RunConfig, build_parser, main, resolve_config
from qudit_repeater.errors import ConfigError


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def read_csv(text):
    lines = text.splitlines()
    meta = json.loads(lines[0][len("# meta: "):])
    body = [ln for ln in lines if not ln.startswith("#")]
    derived = next((json.loads(ln[len("# derived: "):]) for ln in lines if ln.startswith("# derived: ")), {})
    return meta, derived, list(csv.DictReader(io.StringIO("\n".join(body))))


class TestGain:
    def test_plateau_point(self, capsys):
        code, out, _ = run(capsys, "gain", "--encoding", "mm", "--dim", "37", "--L", "200", "--N", "200")
        assert code == 0
        fields = dict(line.split(None, 1) for line in out.splitlines())
        assert float(fields["delta"]) > 0
        for key in ("B_rep_lower", "B_plob_upper", "entropy", "M", "p_succ_rep", "p_succ_bob_z"):
            assert key in fields

    def test_not_prime(self, capsys):
        code, _, err = run(capsys, "gain", "--dim", "4", "--N", "10")
        assert code == 2 and "NotPrime" in err

    def test_invalid_regime(self, capsys):
        code, _, err = run(capsys, "gain", "--encoding", "fock", "--dim", "17", "--L", "200", "--N", "20")
        assert code == 3 and "invalid regime" in err

    def test_negative_gain_is_success(self, capsys):
        code, out, _ = run(capsys, "gain", "--dim", "7", "--L", "200", "--N", "200")
        fields = dict(line.split(None, 1) for line in out.splitlines())
        assert code == 0 and float(fields["delta"]) <= 0

    def test_odd_links_and_missing_topology(self, capsys):
        assert run(capsys, "gain", "--dim", "13", "--N", "11")[0] == 2
        assert run(capsys, "gain", "--dim", "13")[0] == 2

    def test_custom_code_and_spacing(self, capsys):
        code, out, _ = run(capsys, "gain", "--dim", "5", "--code", "9,5", "--L", "20", "--L0", "2")
        fields = dict(line.split(None, 1) for line in out.splitlines())
        assert code == 0 and fields["n"].strip() == "9" and fields["N"].strip() == "10"

    def test_singleton_violation(self, capsys):
        assert run(capsys, "gain", "--dim", "5", "--code", "3,3", "--N", "4")[0] == 2

    def test_json_output(self, capsys):
        code, out, _ = run(capsys, "gain", "--dim", "13", "--N", "400", "--format", "json")
        doc = json.loads(out)
        assert code == 0
        assert doc["schema"] == cli.SCHEMA
        assert doc["meta"]["config"]["dim"] == 13
        assert doc["rows"][0]["N"] == 400

    def test_csv_file_full_precision(self, capsys, tmp_path):
        path = tmp_path / "g.csv"
        code, _, _ = run(capsys, "gain", "--dim", "29", "--N", "300", "--out", str(path))
        meta, _, rows = read_csv(path.read_text())
        assert code == 0
        from qudit_repeater import PhysicalParams, Topology, evaluate, polynomial_code

        exact = evaluate(PhysicalParams(), Topology(200.0, 300), polynomial_code(29), "mm")
        assert float(rows[0]["delta"]) == exact.delta
        assert meta["config_sha256"] == RunConfig.from_dict(meta["config"]).digest()


class TestConfig:
    def test_defaults(self):
        cfg = RunConfig()
        p = cfg.physical()
        assert (p.alpha, p.f_M, p.f_G, p.gamma, p.c) == (0.2, 1e-2, 1e-3, 1e-2, 200.0)

    def test_round_trip(self):
        cfg = RunConfig(dim=29, encoding="fock", code=[29, 15], N=1000, fM=0.003)
        again = RunConfig.from_dict(json.loads(cfg.canonical()))
        assert again.canonical() == cfg.canonical()
        assert again.digest() == cfg.digest()

    def test_unknown_key(self):
        with pytest.raises(ConfigError):
            RunConfig.from_dict({"dimension": 5})

    def test_precedence(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text(json.dumps({"dim": 17, "fM": 0.002, "L": 150.0}))
        args = build_parser().parse_args(["gain", "--config", str(path), "--dim", "29"])
        cfg = resolve_config(args)
        assert cfg.dim == 29  # flag beats file
        assert cfg.fM == 0.002  # file beats default
        assert cfg.fG == 1e-3  # default

    def test_bad_config_file(self, capsys, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        assert run(capsys, "gain", "--config", str(path))[0] == 2
        assert run(capsys, "gain", "--config", str(tmp_path / "missing.json"))[0] == 2


class TestValidate:
    def test_zero_noise_exact(self, capsys):
        code, out, _ = run(
            capsys, "validate", "--dim", "3", "--N", "4", "--L", "4",
            "--alpha", "0", "--fM", "0", "--fG", "0", "--gamma", "0", "--samples", "20000",
        )
        assert code == 0
        assert "FAIL" not in out

    def test_default_d3(self, capsys):
        code, out, _ = run(capsys, "validate", "--dim", "3", "--N", "4", "--L", "4")
        assert code == 0, out

    def test_negative_control(self, capsys, monkeypatch):
        real = oracle.analytic_values

        def skewed(*args):
            vals = dict(real(*args))
            vals["p_x[0]"] -= 0.01
            return vals

        monkeypatch.setattr(oracle, "analytic_values", skewed)
        code, out, _ = run(
            capsys, "validate", "--dim", "3", "--N", "4", "--L", "4", "--fM", "0.05", "--samples", "200000"
        )
        assert code == 1 and "FAIL" in out

    def test_json_report(self, capsys):
        code, out, _ = run(capsys, "validate", "--dim", "3", "--N", "2", "--L", "2", "--samples", "10000", "--format", "json")
        doc = json.loads(out)
        assert code == 0
        assert {r["quantity"] for r in doc["rows"]} >= {"p_x[0]", "p_z[0]", "succ_rep"}
        assert doc["meta"]["seed"] == 12345


class TestPseudothreshold:
    def test_d29(self, capsys):
        code, out, _ = run(capsys, "pseudothreshold", "--dim", "29")
        assert code == 0 and "[[29,1,15]]_29" in out
        rate = float(out.split("physical rate")[1].split()[0])
        assert rate == pytest.approx(0.2, abs=0.05)

    def test_no_crossing(self, capsys):
        assert run(capsys, "pseudothreshold", "--dim", "5", "--code", "1,1")[0] == 2


class TestSweep:
    def test_var_sweep(self, capsys):
        code, out, _ = run(
            capsys, "sweep", "--dim", "11", "--var", "fM", "--from", "1e-5", "--to", "1e-1",
            "--points", "6", "--log",
        )
        meta, derived, rows = read_csv(out)
        assert code == 0 and len(rows) == 6
        assert meta["config"]["log"] is True
        assert "max_delta_mm" in derived
        assert rows[-1]["status"] == "no_capacity"
        for r in rows:
            if r["status"] == "ok":
                assert math.isfinite(float(r["delta"]))

    def test_dataset_reproduces_from_its_meta(self, capsys, tmp_path):
        first = tmp_path / "a.csv"
        args = ["sweep", "--dim", "13", "--var", "L0", "--from", "0.1", "--to", "5", "--points", "4", "--log"]
        assert run(capsys, *args, "--out", str(first), "--workers", "2")[0] == 0
        meta, _, _ = read_csv(first.read_text())
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps(meta["config"]))
        code, out, _ = run(capsys, "sweep", "--config", str(cfg))
        assert code == 0 and out == first.read_text()

    def test_needs_a_target(self, capsys):
        assert run(capsys, "sweep", "--dim", "13")[0] == 2
        assert run(capsys, "sweep", "--dim", "13", "--var", "L")[0] == 2

    @pytest.mark.slow
    def test_table(self, capsys, tmp_path):
        path = tmp_path / "t.json"
        code, _, _ = run(capsys, "sweep", "--table", "1", "--format", "json", "--out", str(path), "--workers", "4")
        doc = json.loads(path.read_text())
        assert code == 0
        got = {(r["encoding"], r["D"]): r for r in doc["rows"]}
        assert set(got) == {("mm", 13), ("mm", 17), ("mm", 29), ("mm", 73), ("fock", 13), ("fock", 17), ("fock", 29)}
        assert abs(got[("mm", 29)]["N_links"] - 163) <= 2

    def test_figure6(self, capsys):
        code, out, _ = run(capsys, "sweep", "--figure", "6")
        meta, derived, rows = read_csv(out)
        assert code == 0
        assert derived["min_entropy_L20000"] < math.log2(29)
        assert derived["min_entropy_L25000"] > math.log2(29)
