from fractions import Fraction as F
from itertools import product

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mmtlearn.mmt import Input, Mmt, Timeout, enumerate_runs
from mmtlearn.models import fig1, fig2_hypothesis, fig4_hypothesis, mealy, random_mmt
from mmtlearn.timed import is_feasible
from mmtlearn.zones import (
    IncompleteError, Zone, build_zone_mmt, enabled, is_complete, symbolic_equiv,
    zone_assign, zone_down, zone_restrict, zone_timeout,
)

from oracles import fig1_extended

STEP = F(1, 4)
CAP = 4


def grid(timers):
    values = [k * STEP for k in range(int(CAP / STEP) + 1)]
    return [dict(zip(timers, v)) for v in product(values, repeat=len(timers))]


def members(z):
    return {tuple(sorted(v.items())) for v in grid(z.timers) if z.contains(v)}


# grid-set oracle: a zone is a set of valuations on the grid


def o_assign(points, x, c):
    return {tuple(sorted({**dict(p), x: F(c)}.items())) for p in points}


def o_down(points):
    out = set()
    for p in points:
        v = dict(p)
        lo = min(v.values(), default=0)
        k = 0
        while k * STEP <= lo:
            out.add(tuple(sorted((x, t - k * STEP) for x, t in v.items())))
            k += 1
    return out


def o_restrict(points, keep):
    return {tuple((x, t) for x, t in p if x in keep) for p in points}


def o_timeout(points, x):
    return {p for p in points if dict(p)[x] == 0}


def zone_of(pairs):
    z = Zone.unit()
    for x, c in pairs:
        z = zone_assign(z, x, c)
    return z


def test_down_examples():
    assert zone_down(Zone.unit()) == Zone.unit()
    z = zone_down(zone_of([("x", 2)]))
    assert z.contains({"x": 0}) and z.contains({"x": 2}) and not z.contains({"x": F(5, 2)})
    z = zone_down(zone_of([("x", 1), ("y", 3)]))
    assert z.contains({"x": F(1, 2), "y": F(5, 2)})
    assert not z.contains({"x": F(1, 2), "y": 3})
    assert not z.contains({"x": F(3, 2), "y": F(7, 2)})


def test_restrict_examples():
    z = zone_down(zone_of([("x", 1), ("y", 3)]))
    r = zone_restrict(z, {"x"})
    assert r.timers == ("x",) and r.contains({"x": 1}) and not r.contains({"x": F(5, 4)})
    assert zone_restrict(z, set()) == Zone.unit()
    assert zone_restrict(Zone.empty(("x",)), set()).is_empty()


def test_assign_examples():
    assert zone_assign(Zone.unit(), "x", 2) == zone_of([("x", 2)])
    down = zone_down(zone_of([("x", 1)]))
    z = zone_assign(down, "y", 3)
    assert z.contains({"x": F(1, 2), "y": 3}) and not z.contains({"x": F(1, 2), "y": 2})
    assert zone_assign(down, "x", 2) == zone_of([("x", 2)])


def test_timeout_examples():
    z = zone_timeout(zone_down(zone_of([("x", 2)])), "x")
    assert members(z) == {(("x", F(0)),)}
    assert zone_timeout(zone_of([("x", 2)]), "x").is_empty()
    # 0 <= x <= y <= 1
    xy = zone_down(zone_assign(zone_down(zone_of([("x", 1)])), "y", 1))
    assert all(dict(p)["x"] <= dict(p)["y"] <= 1 for p in members(xy))
    assert members(zone_timeout(xy, "y")) == {(("x", F(0)), ("y", F(0)))}


def test_timeout_of_unknown_timer():
    with pytest.raises(KeyError):
        zone_timeout(Zone.unit(), "x")


ops = st.lists(st.one_of(
    st.tuples(st.just("assign"), st.sampled_from("xyz"), st.integers(1, 3)),
    st.tuples(st.just("down")),
    st.tuples(st.just("restrict"), st.sets(st.sampled_from("xyz"))),
    st.tuples(st.just("timeout"), st.sampled_from("xyz")),
), max_size=8)


@settings(max_examples=150, deadline=None)
@given(ops)
def test_zone_ops_agree_with_grid_oracle(program):
    z, points = Zone.unit(), {()}
    for op in program:
        if op[0] == "assign":
            z, points = zone_assign(z, op[1], op[2]), o_assign(points, op[1], op[2])
        elif op[0] == "down":
            z, points = zone_down(z), o_down(points)
        elif op[0] == "restrict":
            z, points = zone_restrict(z, op[1]), o_restrict(points, op[1])
        elif op[1] in z.timers:
            z, points = zone_timeout(z, op[1]), o_timeout(points, op[1])
        assert z.is_empty() == (not points)
        if points:
            assert members(z) == points
            assert z.max_constant() <= 3


def test_fig1_zone_machine(m1):
    z = build_zone_mmt(m1)
    assert len(z.states) == 6
    assert z.validate() == [] and is_complete(z)
    (q2,) = [q for q in z.states if z.origin[q][0] == "q2"]
    assert Timeout("x") in z.actions(q2) and Timeout("y") not in z.actions(q2)


def test_zone_runs_are_exactly_the_feasible_runs():
    m = fig1_extended()
    z = build_zone_mmt(m)
    zone_words = {r.word for r in enumerate_runs(z, z.initial, 6)}
    feasible = {r.word for r in enumerate_runs(m, m.initial, 6) if is_feasible(m, r)}
    assert zone_words == feasible


def test_timerless_machine_is_copied():
    m = mealy(3, inputs=("a", "b"), outputs=("o", "p"))
    z = build_zone_mmt(m)
    assert len(z.states) == 3
    assert all(zone == Zone.unit() for _, zone in z.origin.values())
    assert symbolic_equiv(m, z) is None


@pytest.mark.parametrize("q, expected", [("q2", {"x"}), ("q0", set()), ("q3", {"x", "y"}),
                                         ("q1", {"x"}), ("q5", {"y"})])
def test_enabled(m1, q, expected):
    assert enabled(m1, q) == expected


def test_is_complete(m1):
    assert is_complete(m1)
    partial = fig1()
    del partial.delta[("q3", Timeout("y"))]
    assert not is_complete(partial)
    with pytest.raises(IncompleteError):
        build_zone_mmt(partial)
    assert is_complete(mealy(1))


def test_symbolic_equiv_examples(m1):
    assert symbolic_equiv(m1, m1) is None
    cex = symbolic_equiv(m1, fig2_hypothesis())
    assert cex is not None and str(cex.word[-1]).startswith("to[")
    assert symbolic_equiv(m1, fig4_hypothesis()) is None
    assert symbolic_equiv(fig4_hypothesis(), m1) is None


def test_frozen_fig2_counterexample(m1):
    cex = symbolic_equiv(m1, fig2_hypothesis())
    assert (" ".join(map(str, cex.word)), cex.kind) == ("i i i to[2,3]", "missing-in-B")


def test_constant_mismatch_is_caught():
    a = mealy(1)
    from mmtlearn.mmt import Start, Transition
    def one_timer(c):
        delta = {("s", Input("a")): Transition("t", "o", Start("x", c)),
                 ("t", Input("a")): Transition("t", "o"),
                 ("t", Timeout("x")): Transition("s", "o")}
        return Mmt(["x"], ["a"], ["o"], ["s", "t"], "s", {"t": ["x"]}, delta)
    cex = symbolic_equiv(one_timer(1), one_timer(2))
    assert cex is not None and cex.kind.startswith("missing")
    assert symbolic_equiv(a, a) is None


machines = st.tuples(st.integers(1, 6), st.integers(0, 2), st.integers(1, 2), st.integers(0, 10_000))


@settings(max_examples=40, deadline=None)
@given(machines)
def test_zone_machine_is_equivalent_and_feasible(params):
    m = random_mmt(*params[:3], seed=params[3])
    z = build_zone_mmt(m)
    assert symbolic_equiv(m, z) is None and symbolic_equiv(z, m) is None
    assert all(is_feasible(z, r) for r in enumerate_runs(z, z.initial, 5))
    top = max((t.update.constant for t in m.delta.values() if t.update), default=0)
    assert all(zone.max_constant() <= top for _, zone in z.origin.values())


@settings(max_examples=60, deadline=None)
@given(machines, machines)
def test_counterexamples_separate_the_machines(pa, pb):
    a = random_mmt(*pa[:3], seed=pa[3])
    b = random_mmt(pb[0], pb[1], pa[2], seed=pb[3])
    cex = symbolic_equiv(a, b)
    back = symbolic_equiv(b, a)
    assert (cex is None) == (back is None)
    if cex is not None:
        za, zb = build_zone_mmt(a), build_zone_mmt(b)
        assert za.output_word(cex.word) != zb.output_word(cex.word)
