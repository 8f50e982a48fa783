import csv
import json
import subprocess
import sys

import pytest

from diagself.cli import main
from diagself.config import config_from_dict, config_to_dict
from diagself.dsl import parse_text
from diagself.engine import ConfigError

REFERENCE = {"seed": 42, "capacity": 16, "generations": 20, "experiment": "arithmetic",
             "start": 1, "step": 1}


def write_config(tmp_path, **changes):
    cfg = dict(REFERENCE, **changes)
    for k in [k for k, v in changes.items() if v is None]:
        del cfg[k]
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg))
    return path


def run_cli(*argv):
    return main([str(a) for a in argv])


# -- config ---------------------------------------------------------------------------------

def test_config_round_trip():
    cfg = config_from_dict(dict(REFERENCE, alpha="1/4", epsilon_explore=0.5))
    assert config_from_dict(config_to_dict(cfg)) == cfg


@pytest.mark.parametrize("missing", ["seed", "capacity", "generations", "experiment"])
def test_missing_required_key(missing):
    d = dict(REFERENCE)
    del d[missing]
    with pytest.raises(ConfigError) as info:
        config_from_dict(d)
    assert info.value.key == missing


@pytest.mark.parametrize("key,value", [
    ("capcity", 3), ("capacity", "16"), ("alpha", "one"), ("experiment", "chess"),
    ("constant", "(lit"), ("theta", [-1]), ("step_back_mode", "Erase"), ("capacity", True),
    ("reward_wrong", 1),
])
def test_bad_values_name_the_key(key, value):
    with pytest.raises(ConfigError) as info:
        config_from_dict(dict(REFERENCE, **{key: value}))
    assert info.value.key == key


def test_experiment_parameters():
    cfg = config_from_dict(dict(REFERENCE, experiment="address_copy",
                                template="(pair (lit 3) (lit 0))", theta=[0], vary=[1]))
    assert cfg.experiment.template == parse_text("(pair (lit 3) (lit 0))")
    assert cfg.experiment.theta == (0,)


# -- run ------------------------------------------------------------------------------------

def test_run_writes_three_files(tmp_path, capsys):
    out = tmp_path / "out"
    assert run_cli("run", "--config", write_config(tmp_path), "--out", out) == 0
    assert {p.name for p in out.iterdir()} == {"events.jsonl", "metrics.csv", "report.json"}
    with open(out / "metrics.csv") as f:
        rows = list(csv.reader(f))
    assert rows[0] == ["generation", "pop", "mean_points", "punishments", "diag_success"]
    assert len(rows) - 1 == 20
    report = json.loads((out / "report.json").read_text())
    assert report["generations_executed"] == 20
    assert report["config"]["seed"] == 42


def test_event_lines_are_ordered_and_parse(tmp_path):
    out = tmp_path / "out"
    run_cli("run", "--config", write_config(tmp_path), "--out", out)
    keys = []
    for line in (out / "events.jsonl").read_text().splitlines():
        rec = json.loads(line)
        keys.append((rec["generation"], rec["organism"], rec["step"]))
        if "code" in rec:
            parse_text(rec["code"])
    assert keys == sorted(keys)
    assert len(keys) == len(set(keys))


def test_run_is_byte_identical(tmp_path):
    cfg = write_config(tmp_path)
    run_cli("run", "--config", cfg, "--out", tmp_path / "a")
    run_cli("run", "--config", cfg, "--out", tmp_path / "b")
    for name in ("events.jsonl", "metrics.csv", "report.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_seed_override(tmp_path):
    cfg = write_config(tmp_path)
    run_cli("run", "--config", cfg, "--out", tmp_path / "a")
    run_cli("run", "--config", cfg, "--seed", 7, "--out", tmp_path / "b")
    assert json.loads((tmp_path / "b" / "report.json").read_text())["config"]["seed"] == 7
    assert (tmp_path / "a" / "events.jsonl").read_bytes() != (tmp_path / "b" / "events.jsonl").read_bytes()


def test_missing_capacity_exit_1(tmp_path, capsys):
    assert run_cli("run", "--config", write_config(tmp_path, capacity=None), "--out", tmp_path) == 1
    assert "capacity" in capsys.readouterr().err


def test_extinction_exit_2(tmp_path):
    cfg = write_config(tmp_path, death_threshold=0, reward_correct=-1)
    assert run_cli("run", "--config", cfg, "--out", tmp_path / "o") == 2
    assert (tmp_path / "o" / "events.jsonl").exists()


def test_unreadable_config(tmp_path, capsys):
    assert run_cli("run", "--config", tmp_path / "nope.json", "--out", tmp_path) == 1
    bad = tmp_path / "bad.json"
    bad.write_text("{\n  \"seed\": 1,\n}")
    assert run_cli("run", "--config", bad, "--out", tmp_path) == 1
    assert "line 3" in capsys.readouterr().err


# -- diag -------------------------------------------------------------------------------------

def diag(tmp_path, text, *args):
    f = tmp_path / "seq.txt"
    f.write_text(text)
    return run_cli("diag", f, *args)


def test_diag_fit(tmp_path, capsys):
    assert diag(tmp_path, "(lit 1)\n(lit 2)\n(lit 3)\n", "--max-size", 3) == 0
    assert capsys.readouterr().out == "(add (input) (lit 1))\n"


def test_diag_constant(tmp_path, capsys):
    assert diag(tmp_path, "(lit 7)\n(lit 7)\n(lit 7)\n") == 0
    assert capsys.readouterr().out == "(input)\n"


def test_diag_none(tmp_path, capsys):
    assert diag(tmp_path, "(lit 1)\n(lit 2)\n(lit 1)\n(lit 3)\n") == 3
    assert capsys.readouterr().out == "none\n"


def test_diag_separate(tmp_path, capsys):
    text = "(pair (lit 1) (lit 2))\n---\n(lit 3)\n"
    assert diag(tmp_path, text, "--mode", "separate") == 0
    assert capsys.readouterr().out == "(islit (input))\n"


def test_diag_parse_error_has_line(tmp_path, capsys):
    assert diag(tmp_path, "(lit 1)\n(lit 2\n") == 1
    assert "line 2" in capsys.readouterr().err


def test_diag_separate_needs_divider(tmp_path):
    assert diag(tmp_path, "(lit 1)\n", "--mode", "separate") == 1


# -- eval ---------------------------------------------------------------------------------------

def test_eval(capsys):
    assert run_cli("eval", "(add (input) (lit 1))", "(lit 4)") == 0
    assert capsys.readouterr().out == "(lit 5)\n"


def test_eval_fuel(capsys):
    assert run_cli("eval", "(add (add (lit 1) (lit 1)) (lit 1))", "(lit 0)", "--fuel", 1) == 0
    assert capsys.readouterr().out == "FuelExhausted\n"


def test_eval_bad_text(capsys):
    assert run_cli("eval", "(add (input)", "(lit 0)") == 1
    assert "position 12" in capsys.readouterr().err


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "diagself", "eval", "(mul (input) (input))", "(lit 3)"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and proc.stdout == "(lit 9)\n"
