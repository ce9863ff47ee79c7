import csv
import json
import math
from pathlib import Path

import pytest

from mixapprox.cli import main, parse_config, selftest
from mixapprox.errors import ValidationError
from mixapprox.mixtures import chi2_moment_bound
from mixapprox.serialize import config_hash, csv_text, fmt

GOLDEN = Path(__file__).parent / "golden"
PI = {"kind": "uniform", "halfwidth": math.pi}
U1 = {"kind": "uniform", "halfwidth": 1.0}


def write_config(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return p


def rows(path):
    lines = [l for l in path.read_text().splitlines() if not l.startswith("#")]
    return list(csv.DictReader(lines))


def test_fmt():
    assert fmt(0.1) == "0.10000000000000001"
    assert fmt(float("nan")) == "nan"
    assert fmt(-math.inf) == "-inf"
    assert fmt(None) == ""
    assert fmt(True) == "true"
    assert csv_text(["a", "b"], [(1, 0.5)], ["h"]) == "# h\na,b\n1,0.5\n"


def test_config_hash_is_key_order_independent():
    assert config_hash({"a": 1, "b": [1.5]}) == config_hash({"b": [1.5], "a": 1})


def test_certify_golden(tmp_path):
    cfg = write_config(tmp_path, {"family": PI, "m": [1, 2, 3], "delta_grid": [0.5, 1.0]})
    assert main(["certify", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    got = (tmp_path / "certify.csv").read_bytes()
    assert got == (GOLDEN / "certify_uniform_pi.csv").read_bytes()
    for r in rows(tmp_path / "certify.csv"):
        assert float(r["lambda_min"]) == pytest.approx(1.0, abs=1e-12)
        m = int(r["m"])
        assert float(r["certificate"]) == pytest.approx(math.exp(-m * m / 2) / (2 * (m + 1)), rel=1e-12)


def test_certify_gaussian_m1(tmp_path):
    cfg = write_config(tmp_path, {"family": {"kind": "gaussian", "stddev": 1.0}, "m": 1, "delta_grid": [1.0]})
    assert main(["certify", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    (r,) = rows(tmp_path / "certify.csv")
    assert float(r["certificate"]) == pytest.approx(0.059661, abs=2e-6)
    assert r["method"] == "EigenDirect"


def test_sandwich_golden_and_headers(tmp_path):
    cfg = write_config(tmp_path, {"family": U1, "m": {"min": 1, "max": 4}})
    assert main(["sandwich", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    text = (tmp_path / "sandwich.csv").read_bytes()
    assert text == (GOLDEN / "sandwich_uniform1.csv").read_bytes()
    lines = text.decode().split("\n")
    assert lines[0] == "# mixapprox 0.1.0 sandwich"
    assert lines[1].startswith("# config_sha256=")
    assert b"\r" not in text
    for r in rows(tmp_path / "sandwich.csv"):
        assert float(r["lower_cert"]) <= float(r["measured_tv"])


def test_approximate_outputs(tmp_path):
    cfg = write_config(tmp_path, {"family": U1, "m": [4, 5], "divergences": ["tv", "chi2", "h2"]})
    assert main(["approximate", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    for m in (4, 5):
        d = json.loads((tmp_path / f"approximant_m{m}.json").read_text())
        assert len(d["atoms"]) == m
        assert math.fsum(d["weights"]) == pytest.approx(1.0, abs=1e-14)
    rep = rows(tmp_path / "approximate_report.csv")
    assert [int(r["m"]) for r in rep] == [4, 5]
    for r in rep:
        assert float(r["chi2"]) <= float(r["chi2_bound"])
        assert float(r["chi2_bound"]) == pytest.approx(chi2_moment_bound(1.0, 2 * int(r["m"])))
    first = (tmp_path / "approximate_report.csv").read_bytes()
    assert main(["approximate", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    assert (tmp_path / "approximate_report.csv").read_bytes() == first


def test_npmle_command(tmp_path):
    cfg = {"seed": 3, "npmle": {"truth": U1, "constraint": {"kind": "bounded", "M": 1.0},
                                "n_list": [100, 200, 400], "replicates": 2}}
    p = write_config(tmp_path, cfg)
    assert main(["npmle", "--config", str(p), "--out", str(tmp_path / "a")]) == 0
    assert main(["npmle", "--config", str(p), "--out", str(tmp_path / "b"), "--workers", "2"]) == 0
    a = (tmp_path / "a" / "npmle_rate.csv").read_bytes()
    assert a == (tmp_path / "b" / "npmle_rate.csv").read_bytes()
    assert len(rows(tmp_path / "a" / "npmle_rate.csv")) == 3
    assert len(rows(tmp_path / "a" / "npmle_replicates.csv")) == 6
    assert main(["npmle", "--config", str(p), "--out", str(tmp_path / "c"), "--seed", "4"]) == 0
    assert (tmp_path / "c" / "npmle_rate.csv").read_bytes() != a


def test_flags_override_config():
    cfg = parse_config({"family": U1, "m": 2, "precision": "double", "seed": 1}, "certify",
                       precision="extended", seed=9)
    assert cfg.precision == "extended" and cfg.seed == 9


@pytest.mark.parametrize("cfg,field", [
    ({"family": U1, "m": []}, "'m'"),
    ({"family": U1, "m": {"min": 3, "max": 2}}, "'m'"),
    ({"family": U1, "m": 0}, "'m'"),
    ({"m": 2}, "'family'"),
    ({"family": {"kind": "cauchy"}, "m": 2}, "'family'"),
    ({"family": U1, "m": 2, "route": "sideways"}, "'route'"),
    ({"family": U1, "m": 2, "delta_grid": [-1.0]}, "'delta_grid'"),
    ({"family": U1, "m": 2, "seed": -1}, "'seed'"),
    ({"family": U1, "m": 2, "colour": "red"}, "unknown config fields"),
])
def test_validation_messages(cfg, field):
    with pytest.raises(ValidationError, match=field):
        parse_config(cfg, "sandwich")


def test_exit_codes(tmp_path, capsys):
    bad = write_config(tmp_path, {"family": U1, "m": []})
    assert main(["sandwich", "--config", str(bad)]) == 2
    assert "'m'" in capsys.readouterr().err
    assert main(["certify"]) == 2
    garbage = tmp_path / "x.json"
    garbage.write_text("{not json")
    assert main(["certify", "--config", str(garbage)]) == 2
    npm = write_config(tmp_path, {"npmle": {"truth": U1, "constraint": {"kind": "bounded", "M": 1.0},
                                            "n_list": [300, 200]}}, "n.json")
    assert main(["npmle", "--config", str(npm)]) == 2


def test_sandwich_violation_exit_code(tmp_path, monkeypatch):
    from mixapprox import cli
    from mixapprox.certificates import Certificate

    fake = Certificate(1.0, 0.0, "EigenDirect", 1.0, 1.0, 1)
    monkeypatch.setattr(cli, "tv_certificate", lambda *a, **k: fake)
    cfg = write_config(tmp_path, {"family": U1, "m": 2})
    assert main(["sandwich", "--config", str(cfg), "--out", str(tmp_path)]) == 4
    bundle = json.loads((tmp_path / "sandwich_violation.json").read_text())
    assert bundle["rows"][0]["m"] == 2
    assert not (tmp_path / "sandwich.csv").exists()


def test_numerical_error_exit_code(monkeypatch):
    from mixapprox import cli
    from mixapprox.errors import NumericalError

    def boom():
        raise NumericalError("forced")

    monkeypatch.setattr(cli, "selftest", lambda: [("x", False, "")])
    assert main(["selftest"]) == 3
    monkeypatch.setattr(cli, "selftest", boom)
    assert main(["selftest"]) == 3


def test_selftest_passes(capsys):
    assert all(ok for _, ok, _ in selftest())
    assert main(["selftest"]) == 0
    assert capsys.readouterr().out.count("PASS") == 5
