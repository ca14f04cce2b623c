import math

import pytest

from coopcal import cli
from coopcal import config as cfgmod
from coopcal.formats import read_frames, read_results


def run(argv):
    return cli.main([str(a) for a in argv])


def test_default_config():
    c = cfgmod.RunConfig()
    assert (c.suite.n_frames, c.suite.n_objects, c.suite.eta) == (200, 30, 0.6)


def test_yaml_round_trip(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text(cfgmod.default_yaml())
    assert cfgmod.load(p) == cfgmod.RunConfig()


def test_degree_strings(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text("noise:\n  sigma_theta: 10deg\n  loc_dtheta: 5 deg\nmatch:\n  sigma1: 0.3\n")
    c = cfgmod.load(p)
    assert c.noise.sigma_theta == pytest.approx(math.radians(10))
    assert c.noise.loc_dtheta == pytest.approx(math.radians(5))
    assert c.match.sigma1 == 0.3


@pytest.mark.parametrize(
    "data,field",
    [
        ({"suite": {"eta": 1.5}}, "suite.eta"),
        ({"noise": {"sigma_p": -1}}, "noise.sigma_p"),
        ({"noise": {"sigma_theta": "ten"}}, "noise.sigma_theta"),
        ({"match": {"bogus": 1}}, "match.bogus"),
        ({"fit": {"scale_schedule": [1, 2]}}, "fit.scale_schedule"),
        ({"methods": ["cbm", "ransac"]}, "methods"),
        ({"workers": 0}, "workers"),
        ({"extra": 1}, "extra"),
        ({"suite": {"n_frames": 2.5}}, "suite.n_frames"),
    ],
)
def test_config_errors_name_field(data, field):
    with pytest.raises(cfgmod.ConfigError) as err:
        cfgmod.from_mapping(data)
    assert err.value.field == field


def test_generate_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    assert run(["generate", "--frames", 3, "--seed", 5, "--out", a]) == 0
    assert run(["generate", "--frames", 3, "--seed", 5, "--out", b]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert len(read_frames(a)) == 3


def test_generate_noise_free(tmp_path):
    p = tmp_path / "f.jsonl"
    assert run(["generate", "--frames", 2, "--eta", 1, "--sigma-p", 0, "--sigma-theta", 0, "--out", p]) == 0
    for f in read_frames(p):
        assert f.noise.sigma_p == 0 and f.eta == 1.0
        assert len(f.covisible_truth) == len(f.ground_truth)


def test_run_gnss_rte(tmp_path, capsys):
    frames, out = tmp_path / "f.jsonl", tmp_path / "r.csv"
    run(["generate", "--frames", 4, "--out", frames])
    assert run(["run", frames, "--methods", "gnss", "--out", out]) == 0
    rows = read_results(out)
    assert len(rows) == 4
    assert all(r["rte_m"] == pytest.approx(math.sqrt(18), abs=1e-9) for r in rows)
    assert "gnss" in capsys.readouterr().out


def test_run_cbm_noise_free(tmp_path):
    out = tmp_path / "r.csv"
    args = ["run", "--frames", 3, "--eta", 1, "--sigma-p", 0, "--sigma-theta", 0, "--methods", "cbm"]
    assert run(args + ["--out", out]) == 0
    for r in read_results(out):
        assert r["precision"] == 1.0 and r["rte_m"] < 1e-9


def test_run_csv_byte_identical(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["run", "--frames", 4, "--seed", 2, "--no-timing"]
    assert run(args + ["--out", a]) == 0
    assert run(args + ["--out", b, "--workers", 2]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_sweep_row_count_and_single_value(tmp_path):
    out = tmp_path / "s.csv"
    assert run(["sweep", "--axis", "eta", "--values", "0.4,1.0", "--frames", 3, "--methods", "cbm,icp", "--out", out]) == 0
    rows = read_results(out)
    assert len(rows) == 2 * 2 * 3
    assert sorted({r["eta"] for r in rows}) == [0.4, 1.0]

    single, plain = tmp_path / "one.csv", tmp_path / "run.csv"
    common = ["--frames", 3, "--methods", "cbm", "--no-timing"]
    assert run(["sweep", "--axis", "eta", "--values", "0.6", "--out", single] + common) == 0
    assert run(["run", "--out", plain] + common) == 0
    assert single.read_bytes() == plain.read_bytes()


def test_sweep_localization_axis_uses_gaussian(tmp_path, capsys):
    out = tmp_path / "s.csv"
    assert run(["sweep", "--axis", "sigma_theta_L", "--values", "0deg,2deg", "--frames", 2, "--methods", "gnss", "--out", out]) == 0
    rows = read_results(out)
    assert rows[0]["rre_deg"] == 0.0 and rows[-1]["sigma_theta_L"] == pytest.approx(math.radians(2))


def test_inspect(tmp_path, capsys):
    p = tmp_path / "f.jsonl"
    run(["generate", "--frames", 2, "--out", p])
    capsys.readouterr()
    assert run(["inspect", p, "--index", 1]) == 0
    out = capsys.readouterr().out
    assert "frame 1" in out and "T_true" in out and "cbm pairs" in out
    assert run(["inspect", p, "--index", 9]) == 2


def test_usage_errors(tmp_path, capsys):
    assert run(["run", "--methods", "nope", "--frames", 1]) == 2
    assert run(["sweep", "--axis", "eta", "--values", ",", "--frames", 1]) == 2
    assert run(["generate", "--eta", 3, "--out", tmp_path / "x"]) == 2
    assert run([]) == 2
    with pytest.raises(SystemExit) as e:
        run(["sweep", "--axis", "speed", "--values", "1"])
    assert e.value.code == 2


def test_runtime_errors(tmp_path):
    assert run(["run", tmp_path / "missing.jsonl"]) == 1
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"format":"coopcal-frames","version":7}\n')
    assert run(["run", bad]) == 1


def test_print_config(capsys):
    assert run(["--print-config"]) == 0
    assert "sigma2: 3.0" in capsys.readouterr().out
