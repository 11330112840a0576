from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mmtlearn.cli import format_trace
from mmtlearn.mmt import Input, Run, Timeout, enumerate_runs
from mmtlearn.models import fig1, mealy, random_mmt
from mmtlearn.timed import (
    Config, DelayConstraintSystem, IncompleteMachine, TimedWord, constraints_of, is_feasible,
    run_timed_input, run_timed_word, synth_transparent, timed_step,
)
from mmtlearn.zones import build_zone_mmt

from oracles import fig1_extended, grid_feasible

i, tx, ty = Input("i"), Timeout("x"), Timeout("y")


def run_of(m, text):
    return m.run(m.initial, TimedWord.parse(text).symbols)


@pytest.mark.parametrize("conf, e, expected", [
    (Config("q1", {"x": F(1)}), i, Config("q2", {"x": F(1), "y": F(3)})),
    (Config("q0", {}), F(7), Config("q0", {})),
    (Config("q2", {"x": F(1), "y": F(3)}), tx, None),
    (Config("q1", {"x": F(1)}), F(2), None),
    (Config("q1", {"x": F(0)}), tx, Config("q1", {"x": F(2)})),
])
def test_timed_step(m1, conf, e, expected):
    assert timed_step(m1, conf, e) == expected


def test_parse_and_print_timed_word():
    w = TimedWord.parse("0.5 i 1 i 3/2")
    assert w.delays == (F(1, 2), F(1), F(3, 2))
    assert str(w) == "1/2 i 1 i 3/2"
    assert TimedWord.parse("i to[x]").delays == (0, 0, 0)
    with pytest.raises(ValueError):
        TimedWord.parse("-1 i")


def test_example_timed_run(m1):
    rho = run_timed_word(m1, TimedWord.parse("0.5 i 1 i 1 to[x] 2 to[y] 0"))
    assert rho.last == Config("q0", {})
    assert rho.untime().states() == ["q0", "q1", "q2", "q3", "q0"]
    assert run_timed_word(m1, TimedWord.parse("0")).last == Config("q0", {})
    assert run_timed_word(m1, TimedWord.parse("0.5 i 3 i 0")) is None


def test_timed_run_replays_its_own_word(m1):
    rho = run_timed_word(m1, TimedWord.parse("0.5 i 1 i 1 to[x] 2 to[y] 0"))
    assert run_timed_word(m1, rho.timed_word()) == rho


def test_run_timed_input_loops_on_x(m1):
    rho = run_timed_input(m1, TimedWord.parse("0.5 i 4"))
    assert format_trace(rho) == "1/2 i/o 2 to[x]/o 2 to[x]/o 0"
    assert sum(e for e, _ in rho.events if isinstance(e, F)) == F(9, 2)


def test_run_timed_input_matches_example(m1):
    rho = run_timed_input(m1, TimedWord.parse("0.5 i 1 i 3.5"))
    assert rho.untime().word == (i, i, tx, ty)
    assert format_trace(rho) == "1/2 i/o 1 i/o' 1 to[x]/o 2 to[y]/o 1/2"


def test_run_timed_input_delay_only(m1):
    rho = run_timed_input(m1, TimedWord.parse("5"))
    assert rho.untime() == Run("q0") and rho.last == Config("q0", {})


def test_run_timed_input_rejects_timeouts_and_incomplete(m1):
    with pytest.raises(ValueError):
        run_timed_input(m1, TimedWord.parse("1 to[x] 1"))
    from mmtlearn.models import fig2_hypothesis
    partial = fig2_hypothesis()
    del partial.delta[("t1", Timeout("y1"))]
    with pytest.raises(IncompleteMachine):
        run_timed_input(partial, TimedWord.parse("1 i 5"))


def test_constraints_of_spanning_sum(m1):
    system = constraints_of(m1, run_of(m1, "i i to[x]"))
    assert (3, 1, 2) in system.equalities
    assert system.distinct_fraction == [1, 2]


def test_constraints_of_empty_run(m1):
    system = constraints_of(m1, Run("q0"))
    assert system.size == 2
    assert [(b.left, b.right, b.constant, b.strict) for b in system.bounds] == [(0, 1, 0, True)]


@pytest.mark.parametrize("text, expected", [("i i to[x]", True), ("i i to[y]", False), ("", True),
                                            ("i i to[x] to[y]", True), ("i to[x] to[x] i", True)])
def test_feasibility_examples(text, expected):
    m = fig1_extended()
    r = run_of(m, text)
    assert is_feasible(m, r) is expected
    assert grid_feasible(m, r) is expected


def test_missing_edge_means_no_run(m1):
    assert run_of(m1, "i i to[y]") is None


def test_race_free_system_of_infeasible_run():
    m = fig1_extended()
    assert not constraints_of(m, run_of(m, "i i to[y]")).satisfiable()


def test_feasibility_needs_initial_state(m1):
    with pytest.raises(ValueError):
        is_feasible(m1, Run("q1"))


@pytest.mark.parametrize("make, census", [(fig1, (84, 84)), (fig1_extended, (100, 84))])
def test_feasibility_agrees_with_grid_oracle_up_to_six(make, census):
    m = make()
    runs = list(enumerate_runs(m, m.initial, 6))
    verdicts = [is_feasible(m, r) for r in runs]
    assert verdicts == [grid_feasible(m, r) for r in runs]
    # (runs, feasible runs), frozen from the grid oracle
    assert (len(runs), sum(verdicts)) == census


def test_zero_delay_race_is_feasible_only_without_race_freedom():
    # y starts after x with the same constant yet must expire first: only a zero delay works
    from mmtlearn.mmt import Mmt, Start, Transition
    delta = {
        ("a", Input("i")): Transition("b", "o", Start("x", 1)),
        ("b", Input("i")): Transition("c", "o", Start("y", 1)),
        ("c", Timeout("y")): Transition("d", "o"),
        ("d", Timeout("x")): Transition("a", "o"),
    }
    m = Mmt(["x", "y"], ["i"], ["o"], "abcd", "a", {"b": ["x"], "c": ["x", "y"], "d": ["x"]}, delta)
    r = m.run("a", [Input("i"), Input("i"), Timeout("y"), Timeout("x")])
    assert is_feasible(m, r)
    assert grid_feasible(m, r)
    assert not is_feasible(m, r, race_free=True)
    assert synth_transparent(m, r) is None


def test_synth_transparent_example(m1):
    r = run_of(m1, "i i to[x] to[y]")
    rho = synth_transparent(m1, r)
    assert rho.untime() == r and rho.is_race_free() and rho.is_transparent()
    assert run_timed_word(m1, rho.timed_word()) == rho
    ext = fig1_extended()
    assert synth_transparent(ext, run_of(ext, "i i to[y]")) is None


def test_synth_transparent_empty_run(m1):
    rho = synth_transparent(m1, Run("q0"))
    assert rho.untime() == Run("q0")
    assert all(d > 0 for d in rho.timed_word().delays)


def test_distinct_fractions_are_enforced():
    # inputs forced to integer-spaced times by a chain of timeouts must still be separated
    m = mealy(1)
    r = m.run(m.initial, [Input("a")] * 5)
    rho = synth_transparent(m, r)
    assert rho.is_transparent() and rho.is_race_free()


def test_earliest_solution_is_minimal():
    system = DelayConstraintSystem(3)
    system.add(0, 1, -1)  # s1 >= 1
    system.add(1, 2, 0, strict=True)  # s2 > s1
    s = system.earliest_solution()
    assert s[0] == 0 and s[1] == 1 and 1 < s[2] <= 2
    assert system.holds(s)


def test_unsatisfiable_strict_cycle():
    system = DelayConstraintSystem(2)
    system.add(0, 1, 0, strict=True)
    system.add(1, 0, 0)
    assert not system.satisfiable() and system.earliest_solution() is None


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 5), st.integers(1, 2), st.integers(0, 10_000))
def test_feasibility_oracle_on_random_machines(n, k, seed):
    m = random_mmt(n, k, 1, seed=seed)
    for r in enumerate_runs(m, m.initial, 4):
        assert is_feasible(m, r) == grid_feasible(m, r)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 5), st.integers(1, 2), st.integers(0, 10_000))
def test_synthesis_on_random_zone_machines(n, k, seed):
    z = build_zone_mmt(random_mmt(n, k, 1, seed=seed))
    for r in enumerate_runs(z, z.initial, 4):
        if not is_feasible(z, r, race_free=True):
            continue
        rho = synth_transparent(z, r)
        assert rho is not None
        assert rho.untime() == r and rho.is_race_free() and rho.is_transparent()


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.fractions(0, 5, max_denominator=4), st.sampled_from(["i"])), max_size=5),
       st.fractions(0, 5, max_denominator=4))
def test_run_timed_input_preserves_inputs_and_duration(pairs, tail):
    m = fig1()
    w = TimedWord(tuple(d for d, _ in pairs) + (tail,), tuple(Input(a) for _, a in pairs))
    rho = run_timed_input(m, w)
    assert [s.action for s in rho.untime().steps if isinstance(s.action, Input)] == list(w.symbols)
    assert sum(e for e, _ in rho.events if isinstance(e, F)) == sum(w.delays)
    assert run_timed_word(m, rho.timed_word()) is not None
