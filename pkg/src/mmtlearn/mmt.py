"""Mealy machines with timers: data model, validation, runs and symbolic words."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Sequence, Union


@dataclass(frozen=True, order=True)
class Input:
    symbol: str

    def __str__(self) -> str:
        return self.symbol


@dataclass(frozen=True, order=True)
class Timeout:
    timer: str

    def __str__(self) -> str:
        return f"to[{self.timer}]"


Action = Union[Input, Timeout]


@dataclass(frozen=True)
class Start:
    """Update that (re)starts ``timer`` with the integer ``constant``."""

    timer: str
    constant: int

    def __post_init__(self):
        if not isinstance(self.constant, int) or self.constant < 1:
            raise ValueError(f"timer constant must be a positive integer, got {self.constant!r}")

    def __str__(self) -> str:
        return f"({self.timer},{self.constant})"


Update = Optional[Start]


@dataclass(frozen=True)
class Transition:
    target: str
    output: str
    update: Update = None


@dataclass(frozen=True)
class Step:
    action: Action
    output: str
    update: Update
    target: str


@dataclass(frozen=True)
class Run:
    start: str
    steps: tuple[Step, ...] = ()

    @property
    def end(self) -> str:
        return self.steps[-1].target if self.steps else self.start

    @property
    def word(self) -> tuple[Action, ...]:
        return tuple(s.action for s in self.steps)

    @property
    def outputs(self) -> tuple[str, ...]:
        return tuple(s.output for s in self.steps)

    def states(self) -> list[str]:
        return [self.start] + [s.target for s in self.steps]

    def __len__(self) -> int:
        return len(self.steps)


@dataclass(frozen=True, order=True)
class TimeoutRef:
    """Symbolic timeout of the timer (re)started with ``constant`` at 1-based position ``index``."""

    constant: int
    index: int

    def __str__(self) -> str:
        return f"to[{self.constant},{self.index}]"


SymbolicAction = Union[Input, TimeoutRef]
SymbolicWord = tuple[SymbolicAction, ...]


def format_symbolic(word: Iterable[SymbolicAction]) -> str:
    return " ".join(str(a) for a in word)


def parse_symbolic(text: str) -> SymbolicWord:
    """Parse the whitespace format ``i i to[2,1] to[3,2]``."""
    word = []
    for tok in text.split():
        if tok.startswith("to[") and tok.endswith("]"):
            c, j = tok[3:-1].split(",")
            word.append(TimeoutRef(int(c), int(j)))
        else:
            word.append(Input(tok))
    return tuple(word)


class UncausedTimeout(ValueError):
    pass


class Mmt:
    """A deterministic Mealy machine with timers.

    ``active`` maps each state to its set of active timers and ``delta`` maps
    ``(state, action)`` pairs to transitions. Instances are treated as immutable.
    """

    def __init__(
        self,
        timers: Sequence[str],
        inputs: Sequence[str],
        outputs: Sequence[str],
        states: Sequence[str],
        initial: str,
        active: dict[str, Iterable[str]],
        delta: dict[tuple[str, Action], Transition],
    ):
        self.timers = tuple(timers)
        self.inputs = tuple(inputs)
        self.outputs = tuple(outputs)
        self.states = tuple(states)
        self.initial = initial
        self.active = {q: frozenset(active.get(q, ())) for q in self.states}
        self.delta = dict(delta)
        self._timer_rank = {x: k for k, x in enumerate(self.timers)}
        self._order = [Input(i) for i in self.inputs] + [Timeout(x) for x in self.timers]

    def __repr__(self) -> str:
        return f"Mmt(states={len(self.states)}, timers={list(self.timers)}, inputs={list(self.inputs)})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, Mmt):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    def sorted_timers(self, timers: Iterable[str]) -> list[str]:
        return sorted(timers, key=lambda x: self._timer_rank.get(x, len(self._timer_rank)))

    def action_order(self) -> list[Action]:
        return list(self._order)

    def actions(self, q: str) -> list[Action]:
        """Actions defined in ``q``, inputs first, then timeouts in timer order."""
        return [a for a in self._order if (q, a) in self.delta]

    def transitions(self) -> Iterator[tuple[str, Action, Transition]]:
        for q in self.states:
            for a in self.actions(q):
                yield q, a, self.delta[(q, a)]

    def step(self, q: str, a: Action) -> Optional[Transition]:
        if q not in self.active:
            raise KeyError(f"unknown state {q!r}")
        return self.delta.get((q, a))

    def run(self, q: str, word: Iterable[Action]) -> Optional[Run]:
        if q not in self.active:
            raise KeyError(f"unknown state {q!r}")
        steps = []
        cur = q
        for a in word:
            t = self.delta.get((cur, a))
            if t is None:
                return None
            steps.append(Step(a, t.output, t.update, t.target))
            cur = t.target
        return Run(q, tuple(steps))

    def validate(self) -> list[str]:
        """List every well-formedness violation; an empty list means valid."""
        problems = []
        if self.initial not in self.active:
            return [f"initial state {self.initial!r} is not a state"]
        if self.active[self.initial]:
            problems.append(f"initial state has active timer(s) {sorted(self.active[self.initial])}")
        known = set(self.timers)
        names = set(self.states)
        if known & names:
            problems.append(f"identifiers used both as timer and state: {sorted(known & names)}")
        for q, xs in self.active.items():
            if not xs <= known:
                problems.append(f"state {q!r} has undeclared active timers {sorted(xs - known)}")
        for (q, a), t in self.delta.items():
            where = f"{q} --{a}--> {t.target}"
            if q not in self.active or t.target not in self.active:
                problems.append(f"{where}: unknown state")
                continue
            if isinstance(a, Input) and a.symbol not in self.inputs:
                problems.append(f"{where}: undeclared input")
            if t.output not in self.outputs:
                problems.append(f"{where}: undeclared output {t.output!r}")
            src, dst = self.active[q], self.active[t.target]
            u = t.update
            if u is not None and u.timer not in known:
                problems.append(f"{where}: update of undeclared timer {u.timer!r}")
            if isinstance(a, Timeout):
                if a.timer not in src:
                    problems.append(f"{where}: timeout of inactive timer {a.timer}")
                if u is not None and u.timer != a.timer:
                    problems.append(f"{where}: timeout transition may only restart {a.timer}")
            kept = dst - {u.timer} if u is not None else dst
            if not kept <= src:
                problems.append(f"{where}: timers {sorted(kept - src)} become active without being started")
        return problems

    # symbolic words

    def symbolic_of(self, r: Run) -> SymbolicWord:
        causes: dict[str, tuple[int, int]] = {}
        word: list[SymbolicAction] = []
        for k, s in enumerate(r.steps, start=1):
            if isinstance(s.action, Timeout):
                x = s.action.timer
                if x not in causes:
                    raise UncausedTimeout(f"timeout of {x} at position {k} has no preceding start")
                c, j = causes[x]
                word.append(TimeoutRef(c, j))
            else:
                word.append(s.action)
            if s.update is not None:
                causes[s.update.timer] = (s.update.constant, k)
            for x in [x for x in causes if x not in self.active[s.target]]:
                del causes[x]
        return tuple(word)

    def run_of_symbolic(self, sw: Sequence[SymbolicAction]) -> Optional[Run]:
        q = self.initial
        causes: dict[tuple[int, int], str] = {}
        steps = []
        for k, sa in enumerate(sw, start=1):
            if isinstance(sa, TimeoutRef):
                x = causes.get((sa.constant, sa.index))
                if x is None:
                    return None
                a: Action = Timeout(x)
            else:
                a = sa
            t = self.delta.get((q, a))
            if t is None:
                return None
            steps.append(Step(a, t.output, t.update, t.target))
            if t.update is not None:
                causes = {key: y for key, y in causes.items() if y != t.update.timer}
                causes[(t.update.constant, k)] = t.update.timer
            live = self.active[t.target]
            causes = {key: y for key, y in causes.items() if y in live}
            q = t.target
        return Run(self.initial, tuple(steps))

    def output_word(self, sw: Sequence[SymbolicAction]) -> Optional[tuple[str, ...]]:
        r = self.run_of_symbolic(sw)
        return None if r is None else r.outputs

    # serialization

    def to_dict(self) -> dict:
        trans = []
        for q, a, t in self.transitions():
            action = {"input": a.symbol} if isinstance(a, Input) else {"timeout": a.timer}
            update = None if t.update is None else {"timer": t.update.timer, "value": t.update.constant}
            trans.append({"from": q, "action": action, "to": t.target, "output": t.output, "update": update})
        return {
            "timers": list(self.timers),
            "inputs": list(self.inputs),
            "outputs": list(self.outputs),
            "states": [{"id": q, "active": self.sorted_timers(self.active[q])} for q in self.states],
            "initial": self.initial,
            "transitions": trans,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Mmt":
        delta = {}
        for t in d["transitions"]:
            act = t["action"]
            a: Action = Input(act["input"]) if "input" in act else Timeout(act["timeout"])
            u = t.get("update")
            upd = None if u is None else Start(u["timer"], int(u["value"]))
            key = (t["from"], a)
            if key in delta:
                raise ValueError(f"duplicate transition for {t['from']} on {a}")
            delta[key] = Transition(t["to"], t["output"], upd)
        states = [s["id"] for s in d["states"]]
        active = {s["id"]: s.get("active", []) for s in d["states"]}
        return cls(d["timers"], d["inputs"], d["outputs"], states, d["initial"], active, delta)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "Mmt":
        return cls.from_dict(json.loads(text))

    def to_dot(self, name: str = "mmt") -> str:
        lines = [f"digraph {name} {{", "  rankdir=LR;", '  __start [shape=point];']
        for q in self.states:
            timers = ",".join(self.sorted_timers(self.active[q]))
            lines.append(f'  "{q}" [label="{q}\\n{{{timers}}}"];')
        lines.append(f'  __start -> "{self.initial}";')
        for q, a, t in self.transitions():
            lines.append(f'  "{q}" -> "{t.target}" [label="{edge_label(a, t.output, t.update)}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


def edge_label(a: Action, output: str, update: Update) -> str:
    u = "⊥" if update is None else str(update)
    return f"{a}/{output}, {u}"


def enumerate_runs(m: Mmt, q: str, depth: int) -> Iterator[Run]:
    """All runs from ``q`` of length at most ``depth``, shortest first."""
    frontier = [Run(q)]
    yield frontier[0]
    for _ in range(depth):
        nxt = []
        for r in frontier:
            for a in m.actions(r.end):
                t = m.delta[(r.end, a)]
                nr = Run(r.start, r.steps + (Step(a, t.output, t.update, t.target),))
                nxt.append(nr)
                yield nr
        frontier = nxt
