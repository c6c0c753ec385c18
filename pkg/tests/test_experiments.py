import json
import pathlib

from iqnet.cli import main
from iqnet.config import parse_config, parse_text
from iqnet.experiments import run_experiment


def small(kind, lam=0.25, shared="", section=""):
    text = f"[experiment]\nkind = {kind}\nlambda = {lam}\ninterference = ones:3\n{shared}"
    if section:
        text += f"\n[{kind}]\n{section}"
    return parse_text(text, source=f"{kind}.ini")


def write_config(path, body):
    path.write_text(body, encoding="utf-8")
    return str(path)


def names(rep):
    return [v.name for v in rep.verdicts]


def test_mean_vs_formula_small():
    cfg = small("mean-vs-formula", shared="n = 10\nseeds = 1\nburn_in = 500\nhorizon = 5000\n",
                section="rel_tol = 0.5\nrate_tol = 0.5\n")
    rep = run_experiment(cfg, write=False)
    assert names(rep)[0] == "mean"
    assert rep.verdicts[0].passed
    assert rep.inputs["lambda"] == 0.25


def test_failure_carries_seed_and_replay():
    cfg = small("mean-vs-formula", shared="n = 10\nseeds = 3,4\nburn_in = 200\nhorizon = 3000\n",
                section="target = 5\nrel_tol = 0.01\n")
    rep = run_experiment(cfg, write=False)
    assert not rep.passed
    bad = [v for v in rep.verdicts if not v.passed]
    assert all(v.replay.startswith("iqnet run mean-vs-formula.ini") for v in bad)
    assert bad[0].seed in (3, 4)
    assert f"--seeds {bad[0].seed}" in bad[0].replay


def test_coupling_suite_small():
    cfg = small("coupling-suite", shared="n = 10\nseeds = 0-1\n", section="min_events = 2000\n")
    rep = run_experiment(cfg, write=False)
    assert rep.passed, [v.detail for v in rep.verdicts]


def test_local_vs_box_small():
    cfg = small("local-vs-box", lam=0.3, shared="mode = box\nseeds = 0-4\n", section="T = 3\n")
    assert run_experiment(cfg, write=False).passed


def test_loynes_small():
    cfg = small("loynes", shared="n = 15\nseeds = 0-2\n",
                section="box_radii = 5,10\nbox_depth = 64\nmin_fraction = 0.5\n")
    rep = run_experiment(cfg, write=False)
    assert rep.passed
    assert len(rep.per_seed) == 3


def test_frozen_wall_small():
    cfg = small("frozen-wall", lam=0.3, shared="mode = box\nn = 5\nseeds = 0-2\n",
                section="count_time = 500\ncheckpoints = 100,400,1600\n")
    rep = run_experiment(cfg, write=False)
    assert "adjacent_no_departures" in names(rep)
    assert next(v for v in rep.verdicts if v.name == "adjacent_no_departures").passed


def test_supercritical_growth_small():
    cfg = small("supercritical-growth", lam=0.5, shared="n = 10\nseeds = 0\nhorizon = 1000\n")
    assert run_experiment(cfg, write=False).passed


def test_fluid_small():
    cfg = small("fluid-transience", lam=0.4, shared="seeds = 0\n",
                section="N = 5\nstep = 1e-3\nfluid_horizon = 20\nscales = 20,200\nscaling_horizon = 1\n"
                        "halving_tol = 1e-3\ndrain_fraction = 0.5\n")
    rep = run_experiment(cfg, write=False)
    assert {"unimodality", "J_monotone", "slope_bound", "revival"} <= set(names(rep))
    assert "supercritical.csv" in rep.extras["files"]


def test_artifacts_are_byte_identical(tmp_path):
    body = ("[experiment]\nkind = mean-vs-formula\nlambda = 0.25\nn = 8\nseeds = 1,2\n"
            "burn_in = 200\nhorizon = 3000\noutput_dir = {out}\n")
    outputs = []
    for run in ("a", "b"):
        out = tmp_path / run
        cfg = parse_text(body.format(out=out), source="same.ini")
        run_experiment(cfg)
        outputs.append({p.name: p.read_bytes() for p in (out / "mean-vs-formula").iterdir()})
    assert outputs[0] == outputs[1]
    assert {"report.json", "per_seed.csv"} <= set(outputs[0])
    report = json.loads(outputs[0]["report.json"])
    assert "wall_clock" not in report and report["kind"] == "mean-vs-formula"


def test_example_configs_parse():
    root = pathlib.Path(__file__).resolve().parent.parent / "configs"
    kinds = {parse_config(p).kind for p in root.glob("*.ini")}
    assert len(kinds) == 11


# command line


def test_cli_pass(tmp_path, capsys):
    path = write_config(tmp_path / "ok.ini", f"""
[experiment]
kind = local-vs-box
lambda = 0.3
mode = box
seeds = 0-2
output_dir = {tmp_path / 'out'}
""")
    assert main(["run", path]) == 0
    assert "[PASS]" in capsys.readouterr().out
    assert (tmp_path / "out" / "local-vs-box" / "report.json").exists()


def test_cli_fail(tmp_path, capsys):
    path = write_config(tmp_path / "bad.ini", f"""
[experiment]
kind = mean-vs-formula
lambda = 0.25
n = 8
seeds = 1
burn_in = 100
horizon = 2000
output_dir = {tmp_path / 'out'}

[mean-vs-formula]
target = 7
""")
    assert main(["run", path]) == 1
    out = capsys.readouterr().out
    assert "[FAIL] mean" in out and f"iqnet run {path} --seeds 1" in out


def test_cli_config_errors(tmp_path, capsys):
    path = write_config(tmp_path / "typo.ini", "[experiment]\nkind = loynes\nlambda = 0.2\nlambda_rate = 1\n")
    assert main(["run", path]) == 2
    err = capsys.readouterr().err
    assert "PARSE_ERROR" in err and "line 4" in err and "lambda_rate" in err
    path = write_config(tmp_path / "super.ini", "[experiment]\nkind = mean-vs-formula\nlambda = 0.5\n")
    assert main(["run", path]) == 2
    assert "SEMANTIC_ERROR" in capsys.readouterr().err


def test_cli_fluid_rejects_other_kinds(tmp_path, capsys):
    path = write_config(tmp_path / "m.ini", "[experiment]\nkind = mean-vs-formula\nlambda = 0.2\n")
    assert main(["fluid", path]) == 2


def test_cli_dump_driving(capsys):
    assert main(["dump-driving", "--seed", "3", "--lam", "0.5", "--sites", "0;1", "--t0", "0", "--t1", "5"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "time,queue,kind,mark"
    rows = [l.split(",") for l in lines[1:]]
    assert rows and all(r[2] in ("arrival", "departure") for r in rows)
    assert all((r[3] == "") == (r[2] == "arrival") for r in rows)
    times = [float(r[0]) for r in rows]
    assert times == sorted(times) and 0 <= times[0] and times[-1] < 5


def test_cli_dump_driving_is_deterministic(capsys):
    main(["dump-driving", "--seed", "9", "--block", "4"])
    first = capsys.readouterr().out
    main(["dump-driving", "--seed", "9", "--block", "4"])
    assert capsys.readouterr().out == first


def test_cli_dump_schedule(capsys):
    assert main(["dump-schedule", "--seed", "1", "--T", "2"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "block,start,end,size"
    sizes = [int(l.split(",")[3]) for l in lines[1:]]
    assert sizes == sorted(sizes, reverse=True)


def test_cli_verify_unknown_criterion(capsys):
    assert main(["verify", "--only", "99"]) == 2
    assert "99" in capsys.readouterr().err
