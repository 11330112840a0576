import json
from pathlib import Path

import pytest

from mmtlearn.cli import format_trace, load_model, main
from mmtlearn.gmmt import Gmmt, fddi_station, gmmt_to_mmt, renaming_example
from mmtlearn.mmt import Mmt
from mmtlearn.models import fig1, fig2_hypothesis, fig4_hypothesis, mealy
from mmtlearn.timed import TimedWord, run_timed_input
from mmtlearn.zones import build_zone_mmt, is_complete, symbolic_equiv

MODELS = Path(__file__).resolve().parent.parent / "models"


def model(name):
    return str(MODELS / name)


@pytest.mark.parametrize("name, make", [
    ("fig1.json", fig1), ("fig2_hypothesis.json", fig2_hypothesis), ("fig4_hypothesis.json", fig4_hypothesis),
    ("one_state.json", lambda: mealy(1)),
])
def test_bundled_models_match_generators(name, make):
    assert (MODELS / name).read_text() == make().to_json()


@pytest.mark.parametrize("name, make", [("fig9.gmmt.json", renaming_example), ("fddi1.gmmt.json", fddi_station)])
def test_bundled_generalized_models_match_generators(name, make):
    assert (MODELS / name).read_text() == make().to_json()


def test_learn_writes_model_stats_and_dot(tmp_path, capsys):
    out, stats, dot = tmp_path / "h.json", tmp_path / "s.json", tmp_path / "h.dot"
    code = main(["learn", model("fig1.json"), "-o", str(out), "--stats", str(stats), "--dot", str(dot)])
    assert code == 0
    h = Mmt.from_json(out.read_text())
    assert symbolic_equiv(fig1(), h) is None
    s = json.loads(stats.read_text())
    assert set(s) == {"oq", "wq", "eq", "ms", "rounds", "hypothesis_states"}
    assert s["hypothesis_states"] == len(h.states)
    assert dot.read_text().startswith("digraph")
    assert json.loads(capsys.readouterr().err.strip().splitlines()[-1]) == s


def test_learn_prints_model_to_stdout(capsys):
    assert main(["learn", model("one_state.json"), "--no-timing"]) == 0
    captured = capsys.readouterr()
    assert len(Mmt.from_json(captured.out).states) == 1
    assert json.loads(captured.err)["eq"] == 1


def test_learn_accepts_generalized_models(tmp_path):
    out = tmp_path / "h.json"
    assert main(["learn", model("fddi1.gmmt.json"), "-o", str(out), "--no-timing"]) == 0
    assert symbolic_equiv(gmmt_to_mmt(fddi_station()), Mmt.from_json(out.read_text())) is None


def test_learn_is_reproducible(tmp_path):
    files = []
    for k in range(2):
        out, stats = tmp_path / f"h{k}.json", tmp_path / f"s{k}.json"
        assert main(["learn", model("fig1.json"), "-o", str(out), "--stats", str(stats), "--no-timing"]) == 0
        files.append((out.read_bytes(), stats.read_bytes()))
    assert files[0] == files[1]
    assert json.loads(files[0][1])["ms"] == 0


def test_learn_round_limit(tmp_path, capsys):
    stats = tmp_path / "s.json"
    assert main(["learn", model("fig1.json"), "--max-rounds", "1", "--stats", str(stats)]) == 2
    assert json.loads(stats.read_text())["rounds"] == 1
    assert "error" in capsys.readouterr().err


def test_learn_verbose(capsys):
    main(["learn", model("fig1.json"), "-v", "--no-timing"])
    assert "round 1" in capsys.readouterr().err


def test_check(capsys):
    assert main(["check", model("fig1.json"), model("fig1.json")]) == 0
    assert "equivalent" in capsys.readouterr().err
    assert main(["check", model("fig1.json"), model("fig2_hypothesis.json")]) == 1
    assert capsys.readouterr().err.strip() == "counterexample (missing-in-B): i i i to[2,3]"


def test_check_against_converted_model(tmp_path):
    out = tmp_path / "c.json"
    assert main(["convert", model("fig9.gmmt.json"), "-o", str(out)]) == 0
    assert main(["check", str(out), model("fig9.gmmt.json")]) == 0


@pytest.mark.parametrize("name, word, trace", [
    ("fig1.json", "0.5 i 1 i 3.5", "1/2 i/o 1 i/o' 1 to[x]/o 2 to[y]/o 1/2"),
    ("fig1.json", "", "0"),
    ("fddi1.gmmt.json", "1 TT 30", "1 TT/BS 20 to[x1]/ES+RT 10"),
])
def test_simulate(name, word, trace, capsys):
    assert main(["simulate", model(name), "--timed-word", word]) == 0
    assert capsys.readouterr().out.strip() == trace


def test_simulate_verbose_shows_configurations(capsys):
    main(["simulate", model("fig1.json"), "--timed-word", "0.5 i 1", "-v"])
    err = capsys.readouterr().err
    assert "q0" in err and "delay" in err


def test_format_trace_matches_run():
    run = run_timed_input(fig1(), TimedWord.parse("2 i"))
    assert format_trace(run) == "2 i/o 0"


def test_zone(tmp_path):
    out = tmp_path / "z.json"
    assert main(["zone", model("fig1.json"), "-o", str(out)]) == 0
    z = Mmt.from_json(out.read_text())
    assert z == build_zone_mmt(fig1()) and len(z.states) == 6


@pytest.mark.parametrize("name, states", [("fig9.gmmt.json", 7), ("fddi1.gmmt.json", 9)])
def test_convert(name, states, tmp_path, capsys):
    out = tmp_path / "c.json"
    assert main(["convert", model(name), "-o", str(out)]) == 0
    m = Mmt.from_json(out.read_text())
    assert len(m.states) == states and m.validate() == []
    assert capsys.readouterr().err.strip() == f"{states} states"


def test_random_single_state(capsys):
    assert main(["random", "--states", "1", "--timers", "0"]) == 0
    assert len(Mmt.from_json(capsys.readouterr().out).states) == 1


def test_random_is_seeded(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for p in (a, b):
        assert main(["random", "--states", "5", "--timers", "2", "--seed", "7", "-o", str(p)]) == 0
    assert a.read_bytes() == b.read_bytes()
    m = Mmt.from_json(a.read_text())
    assert m.validate() == [] and is_complete(m)


@pytest.mark.parametrize("argv", [
    ["random", "--states", "0", "--timers", "1"],
    ["simulate", "MODEL", "--timed-word", "1 z"],
    ["simulate", "MODEL", "--timed-word", "-1 i"],
])
def test_invalid_arguments_exit_3(argv):
    argv = [model("fig1.json") if a == "MODEL" else a for a in argv]
    assert main(argv) == 3


@pytest.mark.parametrize("content", ["{not json", '{"timers": []}', None])
def test_invalid_model_files_exit_3(content, tmp_path, capsys):
    path = tmp_path / "bad.json"
    if content is None:
        d = fig1().to_dict()
        d["transitions"] = d["transitions"][1:]
        content = json.dumps(d)
    path.write_text(content)
    assert main(["learn", str(path)]) == 3
    assert capsys.readouterr().err.startswith("error:")


def test_invalid_generalized_model_exit_3(tmp_path):
    d = renaming_example().to_dict()
    d["transitions"][0]["update"]["start"] = None
    path = tmp_path / "bad.gmmt.json"
    path.write_text(json.dumps(d))
    assert main(["convert", str(path)]) == 3
    assert main(["check", str(path), model("fig1.json")]) == 3


def test_missing_file_exit_3():
    assert main(["zone", "/nonexistent/model.json"]) == 3


def test_load_model_can_skip_completeness(tmp_path):
    d = fig1().to_dict()
    d["transitions"] = d["transitions"][1:]
    path = tmp_path / "partial.json"
    path.write_text(json.dumps(d))
    assert not is_complete(load_model(str(path), require_complete=False))
