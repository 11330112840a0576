"""Generalized MMTs whose transitions rename timers, and their conversion to plain MMTs."""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from .mmt import Action, Input, Mmt, Start, Timeout, Transition
from .timed import Config, as_time
from .zones import IncompleteError, is_complete


@dataclass(frozen=True)
class UpdateFn:
    """Values of the target's active timers: copied from a source timer (``renames``) or one ``start``."""

    renames: tuple[tuple[str, str], ...] = ()
    start: Optional[Start] = None

    @classmethod
    def of(cls, renames: dict | None = None, start: Optional[Start] = None) -> "UpdateFn":
        return cls(tuple(sorted((renames or {}).items())), start)

    @property
    def rename_map(self) -> dict[str, str]:
        return dict(self.renames)

    def domain(self) -> set[str]:
        dom = {dst for dst, _ in self.renames}
        if self.start is not None:
            dom.add(self.start.timer)
        return dom

    def __str__(self) -> str:
        parts = [f"{d}:={s}" for d, s in self.renames if d != s]
        if self.start is not None:
            parts.append(f"{self.start.timer}:={self.start.constant}")
        return ", ".join(parts) or "id"


@dataclass(frozen=True)
class GTransition:
    target: str
    output: str
    update: UpdateFn = field(default_factory=UpdateFn)


class Gmmt:
    def __init__(self, timers, inputs, outputs, states, initial, active, delta: dict[tuple[str, Action], GTransition]):
        self.timers = tuple(timers)
        self.inputs = tuple(inputs)
        self.outputs = tuple(outputs)
        self.states = tuple(states)
        self.initial = initial
        self.active = {q: frozenset(active.get(q, ())) for q in self.states}
        self.delta = dict(delta)
        self._order = [Input(i) for i in self.inputs] + [Timeout(x) for x in self.timers]

    def __repr__(self) -> str:
        return f"Gmmt(states={len(self.states)}, timers={list(self.timers)})"

    def actions(self, q: str) -> list[Action]:
        return [a for a in self._order if (q, a) in self.delta]

    def validate(self) -> list[str]:
        problems = []
        if self.initial not in self.active:
            return [f"initial state {self.initial!r} is not a state"]
        if self.active[self.initial]:
            problems.append(f"initial state has active timer(s) {sorted(self.active[self.initial])}")
        for (q, a), t in self.delta.items():
            where = f"{q} --{a}--> {t.target}"
            if q not in self.active or t.target not in self.active:
                problems.append(f"{where}: unknown state")
                continue
            u = t.update
            renames = u.rename_map
            if len(renames) != len(u.renames):
                problems.append(f"{where}: timer renamed twice")
            if u.start is not None and u.start.timer in renames:
                problems.append(f"{where}: {u.start.timer} is both started and renamed")
            if u.domain() != self.active[t.target]:
                problems.append(f"{where}: update domain {sorted(u.domain())} differs from active timers "
                                f"{sorted(self.active[t.target])}")
            sources = list(renames.values())
            if len(set(sources)) != len(sources):
                problems.append(f"{where}: update is not injective")
            if not set(sources) <= self.active[q]:
                problems.append(f"{where}: renames inactive timers {sorted(set(sources) - self.active[q])}")
            if isinstance(a, Timeout):
                if a.timer not in self.active[q]:
                    problems.append(f"{where}: timeout of inactive timer {a.timer}")
                if a.timer in sources:
                    problems.append(f"{where}: the expiring timer {a.timer} is copied")
            if t.output not in self.outputs:
                problems.append(f"{where}: undeclared output {t.output!r}")
        return problems

    def to_dict(self) -> dict:
        trans = []
        for q in self.states:
            for a in self.actions(q):
                t = self.delta[(q, a)]
                action = {"input": a.symbol} if isinstance(a, Input) else {"timeout": a.timer}
                start = t.update.start
                update = {
                    "renames": dict(t.update.renames),
                    "start": None if start is None else {"timer": start.timer, "value": start.constant},
                }
                trans.append({"from": q, "action": action, "to": t.target, "output": t.output, "update": update})
        return {
            "timers": list(self.timers),
            "inputs": list(self.inputs),
            "outputs": list(self.outputs),
            "states": [{"id": q, "active": sorted(self.active[q])} for q in self.states],
            "initial": self.initial,
            "transitions": trans,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Gmmt":
        delta = {}
        for t in d["transitions"]:
            act = t["action"]
            a: Action = Input(act["input"]) if "input" in act else Timeout(act["timeout"])
            u = t.get("update") or {}
            s = u.get("start")
            start = None if s is None else Start(s["timer"], int(s["value"]))
            key = (t["from"], a)
            if key in delta:
                raise ValueError(f"duplicate transition for {t['from']} on {a}")
            delta[key] = GTransition(t["to"], t["output"], UpdateFn.of(u.get("renames"), start))
        states = [s["id"] for s in d["states"]]
        active = {s["id"]: s.get("active", []) for s in d["states"]}
        return cls(d["timers"], d["inputs"], d["outputs"], states, d["initial"], active, delta)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "Gmmt":
        return cls.from_dict(json.loads(text))


def is_gmmt_dict(d: dict) -> bool:
    return any(isinstance(t.get("update"), dict) and "renames" in t["update"] for t in d.get("transitions", []))


def validate_gmmt(g: Gmmt) -> list[str]:
    return g.validate()


def gmmt_step(g: Gmmt, c: Config, e) -> Optional[Config]:
    """Delay or discrete step; a discrete step copies renamed values and sets the started one."""
    if isinstance(e, (Input, Timeout)):
        if isinstance(e, Timeout) and c.val.get(e.timer) != 0:
            return None
        t = g.delta.get((c.state, e))
        if t is None:
            return None
        val = {dst: c.val[src] for dst, src in t.update.renames}
        if t.update.start is not None:
            val[t.update.start.timer] = Fraction(t.update.start.constant)
        return Config(t.target, val)
    d = as_time(e)
    if any(v < d for v in c.val.values()):
        return None
    return Config(c.state, {x: v - d for x, v in c.val.items()})


def _state_name(q: str, mu: dict[str, str]) -> str:
    if not mu:
        return q
    return f"{q}[{','.join(f'{x}={p}' for x, p in sorted(mu.items()))}]"


def gmmt_to_mmt(g: Gmmt, check_complete: bool = True) -> Mmt:
    """Equivalent MMT over a timer pool ``x1..xn`` whose states remember the current renaming.

    Fresh timers take the lowest free pool index, which makes the result canonical.
    """
    n = max((len(xs) for xs in g.active.values()), default=0)
    pool = [f"x{k}" for k in range(1, n + 1)]
    start = (g.initial, ())
    names = {start: _state_name(g.initial, {})}
    queue = deque([start])
    order = [start]
    delta = {}
    while queue:
        key = queue.popleft()
        q, mu_items = key
        mu = dict(mu_items)
        for a in g.actions(q):
            t = g.delta[(q, a)]
            carried = {dst: mu[src] for dst, src in t.update.renames}
            st = t.update.start
            if isinstance(a, Input):
                act: Action = a
                if st is None:
                    update = None
                else:
                    fresh = next(p for p in pool if p not in carried.values())
                    carried[st.timer] = fresh
                    update = Start(fresh, st.constant)
            else:
                act = Timeout(mu[a.timer])
                if st is None:
                    update = None
                else:
                    carried[st.timer] = mu[a.timer]
                    update = Start(mu[a.timer], st.constant)
            nxt = (t.target, tuple(sorted(carried.items())))
            if nxt not in names:
                names[nxt] = _state_name(t.target, carried)
                order.append(nxt)
                queue.append(nxt)
            delta[(names[key], act)] = Transition(names[nxt], t.output, update)
    states = [names[k] for k in order]
    active = {names[k]: [p for _, p in k[1]] for k in order}
    m = Mmt(pool, g.inputs, g.outputs, states, states[0], active, delta)
    if check_complete and not is_complete(m):
        raise IncompleteError("generalized machine is not complete")
    return m


# reference generalized machines

def _g(timers, inputs, active, edges, initial):
    delta, outputs = {}, []
    for src, action, dst, out, renames, start in edges:
        upd = UpdateFn.of(renames, None if start is None else Start(*start))
        delta[(src, action)] = GTransition(dst, out, upd)
        if out not in outputs:
            outputs.append(out)
    return Gmmt(timers, inputs, outputs, list(active), initial, active, delta)


def renaming_example() -> Gmmt:
    """Five-location machine whose input loop copies ``x`` into ``y`` before restarting ``x``."""
    i, tx, ty = Input("i"), Timeout("x"), Timeout("y")
    active = {"q0": [], "q1": ["x"], "q2": ["y"], "q3": ["x", "y"], "q4": ["y"]}
    edges = [
        ("q0", i, "q1", "o", {}, ("x", 2)),
        ("q1", tx, "q2", "o", {}, ("y", 2)),
        ("q1", i, "q3", "o", {"x": "x"}, ("y", 1)),
        ("q2", i, "q2", "o", {}, ("y", 2)),
        ("q2", ty, "q2", "o", {}, ("y", 2)),
        ("q3", i, "q3", "o", {"y": "x"}, ("x", 2)),
        ("q3", tx, "q4", "o", {}, ("y", 1)),
        ("q3", ty, "q4", "o", {}, ("y", 1)),
        ("q4", i, "q4", "o", {}, ("y", 1)),
        ("q4", ty, "q4", "o", {}, ("y", 1)),
    ]
    return _g(["x", "y"], ["i"], active, edges, "q0")


def fddi_station(sa: int = 20, ttrt: int = 100, idle_output: str = "void") -> Gmmt:
    """One token-ring station with synchronous allocation ``sa`` and target rotation ``ttrt``.

    Inputs the protocol does not expect are completed with identity self-loops
    emitting ``idle_output``.
    """
    tt, ea, tx, ty = Input("TT"), Input("EA"), Timeout("x"), Timeout("y")
    active = {"Idle": [], "Idlex": ["x"], "STy": ["y"], "STxy": ["x", "y"], "ATxy": ["x", "y"]}
    edges = [
        ("Idle", tt, "STy", "BS", {}, ("y", sa)),
        ("Idlex", tx, "Idle", "o", {}, None),
        ("Idlex", tt, "STxy", "BS", {"x": "x"}, ("y", sa)),
        ("STy", ty, "Idlex", "ES+RT", {}, ("x", ttrt)),
        ("STxy", tx, "STy", "o", {"y": "y"}, None),
        ("STxy", ty, "ATxy", "ES+BA", {"x": "x"}, ("y", ttrt)),
        ("ATxy", tx, "Idlex", "EA+RT", {"x": "y"}, None),
        ("ATxy", ea, "Idlex", "RT", {"x": "y"}, None),
    ]
    defined = {(e[0], e[1]) for e in edges}
    for q, timers in active.items():
        for a in (tt, ea):
            if (q, a) not in defined:
                edges.append((q, a, q, idle_output, {x: x for x in timers}, None))
    return _g(["x", "y"], ["TT", "EA"], active, edges, "Idle")
