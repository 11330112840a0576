"""Reference machines and a seeded random generator."""

from __future__ import annotations

import random

from .mmt import Input, Mmt, Start, Timeout, Transition


def _mmt(timers, inputs, states, active, edges, initial=None):
    delta = {}
    outputs = []
    for src, action, dst, out, upd in edges:
        delta[(src, action)] = Transition(dst, out, None if upd is None else Start(*upd))
        if out not in outputs:
            outputs.append(out)
    return Mmt(timers, inputs, outputs, states, initial or states[0], active, delta)


def fig1() -> Mmt:
    """Six-state machine over one input ``i`` and timers ``x``, ``y``."""
    i, tx, ty = Input("i"), Timeout("x"), Timeout("y")
    states = ["q0", "q1", "q2", "q3", "q4", "q5"]
    active = {"q0": [], "q1": ["x"]}
    active.update({q: ["x", "y"] for q in states[2:]})
    edges = [
        ("q0", i, "q1", "o", ("x", 2)),
        ("q1", i, "q2", "o'", ("y", 3)),
        ("q1", tx, "q1", "o", ("x", 2)),
        ("q2", i, "q3", "o'", ("x", 2)),
        ("q2", tx, "q3", "o", ("x", 2)),
        ("q3", i, "q4", "o'", ("x", 2)),
        ("q3", tx, "q5", "o", ("x", 2)),
        ("q3", ty, "q0", "o", None),
        ("q4", i, "q4", "o'", ("x", 2)),
        ("q4", tx, "q5", "o", ("x", 2)),
        ("q4", ty, "q0", "o", None),
        ("q5", i, "q5", "o'", ("x", 2)),
        ("q5", ty, "q0", "o", None),
    ]
    return _mmt(["x", "y"], ["i"], states, active, edges)


def fig2_hypothesis() -> Mmt:
    """Two-state hypothesis folded from a small tree of ``fig1``; not equivalent to it."""
    i, t1 = Input("i"), Timeout("y1")
    edges = [
        ("t0", i, "t1", "o", ("y1", 2)),
        ("t1", i, "t1", "o'", None),
        ("t1", t1, "t1", "o", ("y1", 2)),
    ]
    return _mmt(["y1"], ["i"], ["t0", "t1"], {"t0": [], "t1": ["y1"]}, edges)


def fig4_hypothesis() -> Mmt:
    """Five-state machine symbolically equivalent to ``fig1``."""
    i, t1, t2 = Input("i"), Timeout("y1"), Timeout("y2")
    active = {"t0": [], "t1": ["y1"], "t3": ["y1", "y2"], "t6": ["y1", "y2"], "t9": ["y2"]}
    edges = [
        ("t0", i, "t1", "o", ("y1", 2)),
        ("t1", i, "t3", "o'", ("y2", 3)),
        ("t1", t1, "t1", "o", ("y1", 2)),
        ("t3", i, "t6", "o'", ("y1", 2)),
        ("t3", t1, "t6", "o", ("y1", 2)),
        ("t6", i, "t6", "o'", ("y1", 2)),
        ("t6", t1, "t9", "o", None),
        ("t6", t2, "t0", "o", None),
        ("t9", i, "t9", "o'", None),
        ("t9", t2, "t0", "o", None),
    ]
    return _mmt(["y1", "y2"], ["i"], ["t0", "t1", "t3", "t6", "t9"], active, edges)


def mealy(states: int = 1, inputs=("a",), outputs=("o",)) -> Mmt:
    """Timerless cyclic Mealy machine: input k moves to the next state with output k mod |O|."""
    names = [f"s{k}" for k in range(states)]
    edges = []
    for n, q in enumerate(names):
        for k, a in enumerate(inputs):
            edges.append((q, Input(a), names[(n + k) % states], outputs[(n + k) % len(outputs)], None))
    m = _mmt([], list(inputs), names, {}, edges)
    return Mmt([], m.inputs, list(outputs), m.states, m.initial, {}, m.delta)


def random_mmt(states: int, timers: int, inputs: int, seed: int = 0, max_constant: int = 3) -> Mmt:
    """A well-formed machine where every state defines every input and every active timeout.

    Timeouts are defined for every active timer, so the result is complete
    whatever the enabled sets turn out to be. Unreachable states are kept;
    callers usually pass the result through the zone construction.
    """
    if states < 1 or timers < 0 or inputs < 1:
        raise ValueError("need at least one state and one input")
    rng = random.Random(seed)
    names = [f"q{k}" for k in range(states)]
    timer_names = [f"x{k + 1}" for k in range(timers)]
    input_names = [chr(ord("a") + k) if inputs <= 26 else f"i{k}" for k in range(inputs)]
    output_names = ["o0", "o1"]
    active = {names[0]: frozenset()}
    for q in names[1:]:
        active[q] = frozenset(x for x in timer_names if rng.random() < 0.5)

    def pick_transition(src: frozenset, timeout: str | None):
        # targets whose active set fits, possibly by starting one timer
        options = []
        for q in names:
            dst = active[q]
            if timeout is None:
                if dst <= src:
                    options.append((q, None))
                for x in sorted(dst):
                    if dst - {x} <= src:
                        options.append((q, x))
            else:
                kept = src - {timeout}
                if dst <= kept:
                    options.append((q, None))
                if timeout in dst and dst - {timeout} <= kept:
                    options.append((q, timeout))
        q, x = rng.choice(options)
        upd = None if x is None else Start(x, rng.randint(1, max_constant))
        return Transition(q, rng.choice(output_names), upd)

    delta = {}
    for q in names:
        for a in input_names:
            delta[(q, Input(a))] = pick_transition(active[q], None)
        for x in timer_names:
            if x in active[q]:
                delta[(q, Timeout(x))] = pick_transition(active[q], x)
    used = sorted({t.output for t in delta.values()})
    return Mmt(timer_names, input_names, used, names, names[0], active, delta)


def ambiguous_renaming() -> Mmt:
    """Machine where ``j`` from the start may equally be folded onto the ``x`` or the ``y`` loop.

    The ``x``-only and ``y``-only states behave alike up to renaming, which can
    make a learner's timer equivalence put two co-active timers together.
    """
    i, j, tx, ty = Input("i"), Input("j"), Timeout("x"), Timeout("y")
    active = {"q0": [], "q1": ["x"], "q2": ["x", "y"], "q3": ["x"], "q4": ["y"]}
    edges = [
        ("q0", i, "q1", "o", ("x", 2)),
        ("q0", j, "q4", "o", ("y", 1)),
        ("q1", i, "q2", "o", ("y", 1)),
        ("q1", j, "q1", "o", None),
        ("q1", tx, "q1", "o", ("x", 2)),
        ("q2", i, "q2", "o", None),
        ("q2", j, "q2", "o", None),
        ("q2", tx, "q3", "o", ("x", 1)),
        ("q2", ty, "q4", "o", ("y", 1)),
        ("q3", i, "q3", "o", None),
        ("q3", j, "q3", "o", None),
        ("q3", tx, "q3", "o", ("x", 1)),
        ("q4", i, "q4", "o", None),
        ("q4", j, "q4", "o", None),
        ("q4", ty, "q4", "o", ("y", 1)),
    ]
    return _mmt(["x", "y"], ["i", "j"], list(active), active, edges)
