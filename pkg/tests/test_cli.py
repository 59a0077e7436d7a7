import pytest
from click.testing import CliRunner

from flatdenjoy.cli import cli


@pytest.fixture(scope="module")
def built(tmp_path_factory):
    out = tmp_path_factory.mktemp("k1")
    res = CliRunner().invoke(cli, ["construct", "--stages", "1", "--out", str(out)])
    return out, res


def run(*args):
    return CliRunner().invoke(cli, [str(a) for a in args])


def test_construct_outputs(built):
    out, res = built
    assert res.exit_code == 0, res.output
    assert "certificate complete" in res.output
    for name in ("final.map", "checkpoints/stage_0.state", "checkpoints/stage_1.state",
                 "checkpoints/stage_1.prev.map", "certificate/decay.csv",
                 "certificate/conditions.csv", "figures/decay.png", "figures/map.png"):
        assert (out / name).exists(), name
    assert (out / "final.map").read_text().startswith("# config ")


def test_verify_checkpoint(built):
    out, _ = built
    res = run("verify", out / "checkpoints" / "stage_1.state")
    assert res.exit_code == 0, res.output
    assert "stage 1" in res.output


def test_verify_planted_failure(built, tmp_path):
    out, _ = built
    ck = out / "checkpoints"
    for name in ("stage_1.map", "stage_1.prev.map"):
        (tmp_path / name).write_text((ck / name).read_text())
    lines = (ck / "stage_1.state").read_text().splitlines()
    lines = [ln if not ln.startswith("U ") else "U 0.2 0.6" for ln in lines]
    (tmp_path / "stage_1.state").write_text("\n".join(lines) + "\n")
    res = run("verify", tmp_path / "stage_1.state")
    assert res.exit_code == 1
    assert "failed condition" in res.output


def test_exit_codes_for_errors(tmp_path):
    assert run("verify", tmp_path / "missing.state").exit_code == 3
    assert run("rotnum", tmp_path / "missing.map").exit_code == 3
    (tmp_path / "bad.map").write_text("not a map\n")
    assert run("rotnum", tmp_path / "bad.map").exit_code == 3
    cfg = tmp_path / "short.cfg"
    cfg.write_text("l=0.5\n")
    res = run("construct", "--config", cfg, "--out", tmp_path / "o")
    assert res.exit_code == 2
    assert "LengthTooSmall" in res.output


def test_analysis_commands(built, tmp_path):
    out, _ = built
    ck = out / "checkpoints" / "stage_1.state"
    res = run("basin", ck, "--samples", 200, "--seed", 1, "--out", tmp_path)
    assert res.exit_code == 0, res.output
    assert (tmp_path / "basin.csv").read_text().startswith("# config ")
    res = run("gapcover", out / "final.map", "--iters", 3, "--out", tmp_path)
    assert res.exit_code == 0, res.output
    assert (tmp_path / "gapcover.png").exists()
    res = run("trace", ck, "--iters", 5, "--out", tmp_path)
    assert res.exit_code == 0, res.output
    assert "<!-- config " in (tmp_path / "trace.svg").read_text()
    res = run("rotnum", out / "final.map", "--iters", 1000)
    assert res.exit_code == 0 and "n=1000" in res.output


def test_tune_command(built, tmp_path):
    out, _ = built
    res = run("tune", out / "checkpoints" / "stage_0.map", "--iters", 200000, "--out", tmp_path)
    assert res.exit_code == 0, res.output
    assert (tmp_path / "tuned.map").exists()
