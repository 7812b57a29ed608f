import json

import pytest

from irspectrum.cli import DEFAULTS, EXPERIMENTS, build_parser, pool_mean, run

SMALL = {
    "entropy-bracket": ["--t", "5", "--t-lower", "3", "--r", "2", "--n", "10", "--samples", "1000"],
    "glue-verify": ["--n", "2,3", "--far-samples", "40"],
    "irs-sweep": ["--p", "0,0.5,1", "--R", "4", "--t", "2", "--walks", "300", "--cores", "2", "--n", "3"],
    "norm-count": ["--n", "3", "--R", "10", "--max-len", "8", "--words-needed", "2", "--p", "0.1", "--draws", "500"],
    "prefix-flip": ["--n", "3,4", "--samples", "100", "--block", "50"],
    "stankov": ["--samples", "20", "--horizon", "100", "--block", "10"],
    "green": ["--samples", "20", "--horizon", "100", "--block", "10", "--profile-samples", "200",
              "--profile-horizon", "50"],
    "sl2-hitting": ["--samples", "5000", "--atoms", "500"],
    "abramov": ["--walks", "5000", "--k", "2", "--bootstrap", "3", "--long-walks", "100", "--long-k", "20"],
    "nil-decay": ["--t-max", "6", "--t-free", "4"],
}


def test_every_experiment_has_defaults_and_smoke_args():
    assert set(EXPERIMENTS) == set(DEFAULTS) == set(SMALL)


@pytest.mark.parametrize("name", EXPERIMENTS)
def test_experiment_runs_and_writes(name, tmp_path):
    code = run([name, "--out", str(tmp_path), "--seed", "3"] + SMALL[name])
    assert code == 0
    rows = (tmp_path / f"{name}.csv").read_text().splitlines()
    assert rows[0] == "experiment,quantity,parameters,estimate,ci_halfwidth,samples,seed"
    assert len(rows) > 1 and all(r.startswith(name + ",") for r in rows[1:])
    man = json.loads((tmp_path / f"{name}.manifest.json").read_text())
    assert man["experiment"] == name and man["seed"] == 3
    assert {"config", "config_hash", "version", "started", "elapsed", "results_summary"} <= set(man)


def test_reproducible_csv(tmp_path):
    args = ["stankov", "--seed", "9"] + SMALL["stankov"]
    run(args + ["--out", str(tmp_path / "a")])
    run(args + ["--out", str(tmp_path / "b"), "--threads", "2"])
    assert (tmp_path / "a" / "stankov.csv").read_bytes() == (tmp_path / "b" / "stankov.csv").read_bytes()


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[common]\nseed = 5\n\n[nil-decay]\nt_max = 3\nquotients = lambda\n")
    run(["nil-decay", "--config", str(cfg), "--out", str(tmp_path)])
    man = json.loads((tmp_path / "nil-decay.manifest.json").read_text())
    assert man["seed"] == 5 and man["config"]["t_max"] == 3
    run(["nil-decay", "--config", str(cfg), "--out", str(tmp_path), "--t-max", "4", "--seed", "1"])
    man = json.loads((tmp_path / "nil-decay.manifest.json").read_text())
    assert man["seed"] == 1 and man["config"]["t_max"] == 4


def test_config_keys_keep_case(tmp_path):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[irs-sweep]\nn = 3\np = 0.0, 1.0\nwalks = 100\ncores = 1\nR = 5\nt = 3\n")
    assert run(["irs-sweep", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    man = json.loads((tmp_path / "irs-sweep.manifest.json").read_text())
    assert man["config"]["R"] == 5 and man["config"]["p"] == [0.0, 1.0]


def test_unknown_config_key(tmp_path):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[nil-decay]\nbogus = 1\n")
    with pytest.raises(SystemExit):
        run(["nil-decay", "--config", str(cfg), "--out", str(tmp_path)])


def test_unwritable_output_is_an_error(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert run(["nil-decay", "--out", str(blocker / "sub")] + SMALL["nil-decay"]) != 0


def test_invariant_violation_exits_nonzero(tmp_path, monkeypatch):
    from irspectrum import cli

    def broken(cfg, seed, threads):
        res = cli.Result()
        res.add("x", "", 1.0)
        res.ok = False
        return res

    monkeypatch.setitem(cli.RUNNERS, "nil-decay", broken)
    assert run(["nil-decay", "--out", str(tmp_path)]) == 1


def test_resource_error_exits_nonzero(tmp_path):
    # exact convolution of the free group far beyond its cap
    assert run(["nil-decay", "--quotients", "free", "--t-free", "12", "--cap", "1000", "--out", str(tmp_path)]) == 3


def test_figures(tmp_path):
    run(["nil-decay", "--out", str(tmp_path), "--figures"] + SMALL["nil-decay"])
    assert (tmp_path / "nil-decay.png").stat().st_size > 1000


def test_help_documents_columns(capsys):
    with pytest.raises(SystemExit):
        build_parser().parse_args(["glue-verify", "--help"])
    out = capsys.readouterr().out
    assert "ci_halfwidth" in out and "smallest_passing_R" in out


def test_pool_mean_matches_direct():
    import numpy as np

    x = np.random.default_rng(0).normal(size=1000)
    parts = []
    for blk in np.split(x, [300, 650]):
        parts.append((blk.mean(), blk.std(ddof=1) / np.sqrt(len(blk)), len(blk)))
    m, se, n = pool_mean(parts)
    assert n == 1000 and m == pytest.approx(x.mean())
    assert se == pytest.approx(x.std(ddof=1) / np.sqrt(1000), rel=1e-9)
