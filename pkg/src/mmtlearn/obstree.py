"""Observation tree built from symbolic queries: matchings, run copying, apartness and replay."""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Optional

from .mmt import Action, Input, Start, SymbolicAction, Timeout, TimeoutRef
from .teacher import TeacherContractError

Matching = dict  # timer -> timer, injective

ROOT = 0


def timer_of(node: int) -> str:
    return f"x{node}"


def owner_of(timer: str) -> int:
    return int(timer[1:])


@dataclass(frozen=True)
class Apart:
    """Evidence that two nodes differ: the run ``word`` from the first node and its copy."""

    word: tuple[Action, ...]
    case: str  # structural, outputs, constants, sizes or enabled
    end: int
    copy_end: int


DONE = "DONE"
APART = "APART"
ACTIVE = "ACTIVE"


@dataclass(frozen=True)
class ReplayOutcome:
    kind: str
    verdict: Optional[Apart] = None
    end: Optional[int] = None

    def __str__(self) -> str:
        return self.kind if self.verdict is None else f"{self.kind}({self.verdict.case})"


class ObsTree:
    """Tree-shaped MMT grown by output and wait queries.

    Node ``n`` owns the timer ``x{n}``, started only by its incoming input
    edge. An edge update of ``None`` is a wildcard: symbolic queries reveal a
    start when it later expires but never confirm that nothing was started.
    """

    def __init__(self, teacher, inputs: Iterable[str]):
        self.teacher = teacher
        self.inputs = tuple(inputs)
        self._input_rank = {i: k for k, i in enumerate(self.inputs)}
        self.parent: list[Optional[int]] = [None]
        self.action: list[Optional[Action]] = [None]
        self.output: list[Optional[str]] = [None]
        self.update: list[Optional[Start]] = [None]
        self.children: list[dict[Action, int]] = [{}]
        self.active: list[set[str]] = [set()]
        self.explored: list[bool] = [False]
        self.depth: list[int] = [0]
        self.activations: list[tuple[int, str]] = []
        self.version = 0

    def __len__(self) -> int:
        return len(self.parent)

    # structure

    def _add(self, q: int, a: Action, output: str) -> int:
        if a in self.children[q]:
            raise ValueError(f"node {q} already has a {a} edge")
        n = len(self.parent)
        self.parent.append(q)
        self.action.append(a)
        self.output.append(output)
        self.update.append(None)
        self.children.append({})
        self.active.append(set())
        self.explored.append(False)
        self.depth.append(self.depth[q] + 1)
        self.children[q][a] = n
        self.version += 1
        return n

    def action_key(self, a: Action):
        if isinstance(a, Input):
            return (0, self._input_rank.get(a.symbol, len(self._input_rank)), "")
        return (1, owner_of(a.timer), "")

    def ordered_children(self, q: int) -> list[int]:
        return [self.children[q][a] for a in sorted(self.children[q], key=self.action_key)]

    def path(self, q: int) -> list[int]:
        nodes = []
        while q is not None:
            nodes.append(q)
            q = self.parent[q]
        return nodes[::-1]

    def path_between(self, p: int, q: int) -> list[int]:
        """Nodes after ``p`` down to ``q``; ``q`` must be a descendant of ``p`` (or ``p`` itself)."""
        nodes = []
        while q != p:
            if q is None:
                raise ValueError(f"{q} is not below {p}")
            nodes.append(q)
            q = self.parent[q]
        return nodes[::-1]

    def is_ancestor(self, a: int, b: int) -> bool:
        while b is not None and self.depth[b] >= self.depth[a]:
            if b == a:
                return True
            b = self.parent[b]
        return False

    def word_between(self, p: int, q: int) -> tuple[Action, ...]:
        return tuple(self.action[n] for n in self.path_between(p, q))

    def symbolic_word(self, q: int) -> tuple[SymbolicAction, ...]:
        causes: dict[str, tuple[int, int]] = {}
        word: list[SymbolicAction] = []
        for k, n in enumerate(self.path(q)[1:], start=1):
            a = self.action[n]
            if isinstance(a, Timeout):
                c, j = causes[a.timer]
                word.append(TimeoutRef(c, j))
            else:
                word.append(a)
            u = self.update[n]
            if u is not None:
                causes[u.timer] = (u.constant, k)
        return tuple(word)

    def step(self, q: int, a: Action) -> Optional[int]:
        return self.children[q].get(a)

    def enabled(self, q: int) -> set[str]:
        return {a.timer for a in self.children[q] if isinstance(a, Timeout)}

    # queries

    def extend_input(self, q: int, i: str) -> int:
        a = Input(i)
        if a in self.children[q]:
            raise ValueError(f"node {q} already has an {i} edge")
        outs = self.teacher.oq(self.symbolic_word(q) + (a,))
        if outs is None:
            raise TeacherContractError(f"input {i} refused after node {q}")
        return self._add(q, a, outs[-1])

    def input_child(self, q: int, i: str) -> int:
        n = self.children[q].get(Input(i))
        return self.extend_input(q, i) if n is None else n

    def _activate(self, n: int, x: str):
        if x not in self.active[n]:
            self.active[n].add(x)
            self.activations.append((n, x))
            self.version += 1

    def explore(self, q: int):
        """Wait query at ``q``: learn its timeouts, their outputs and the starts causing them."""
        if self.explored[q]:
            return
        par = self.parent[q]
        if par is not None and not self.explored[par]:
            raise ValueError(f"cannot explore node {q} before its parent {par}")
        answer = self.teacher.wq(self.symbolic_word(q))
        if answer is None:
            raise TeacherContractError(f"wait query refused at node {q}")
        path = self.path(q)
        for (c, j), out in sorted(answer.items(), key=lambda kv: (-kv[0][1], kv[0][0])):
            if not 1 <= j < len(path):
                raise TeacherContractError(f"wait query at node {q} names step {j}")
            nj = path[j]
            a = self.action[nj]
            x = timer_of(nj) if isinstance(a, Input) else a.timer
            known = self.update[nj]
            if known is None:
                self.update[nj] = Start(x, c)
                self.version += 1
            elif known != Start(x, c):
                raise TeacherContractError(f"step {j} towards node {q} started {known}, now ({x},{c})")
            child = self.children[q].get(Timeout(x))
            if child is None:
                self._add(q, Timeout(x), out)
            elif self.output[child] != out:
                raise TeacherContractError(f"timeout of {x} at node {q} changed output")
            for n in path[j:]:
                self._activate(n, x)
        self.explored[q] = True
        self.version += 1

    def ensure_explored(self, q: int):
        for n in self.path(q):
            self.explore(n)

    # timers and matchings

    def timer_apart(self, x: str, y: str) -> bool:
        """Whether distinct timers ``x`` and ``y`` are active together somewhere.

        Each timer is active only on a path below its owner, so the deeper
        owner decides.
        """
        if x == y:
            return False
        a, b = owner_of(x), owner_of(y)
        if self.depth[a] > self.depth[b]:
            a, b, x, y = b, a, y, x
        return y in self.active[b] and x in self.active[b] and self.is_ancestor(a, b)

    def is_valid(self, m: Matching) -> bool:
        return not any(self.timer_apart(x, y) for x, y in m.items())

    def sorted_timers(self, timers: Iterable[str]) -> list[str]:
        return sorted(timers, key=owner_of)

    def maximal_matchings(self, p: int, q: int) -> list[Matching]:
        left, right = self.sorted_timers(self.active[p]), self.sorted_timers(self.active[q])
        if len(left) <= len(right):
            return [dict(zip(left, image)) for image in itertools.permutations(right, len(left))]
        return [dict(zip(pre, right)) for pre in itertools.permutations(left, len(right))]

    def _copy_step(self, mm: Matching, b: int, n: int) -> Optional[tuple[int, Matching]]:
        a = self.action[n]
        if isinstance(a, Timeout):
            if a.timer not in mm:
                return None
            b2 = self.children[b].get(Timeout(mm[a.timer]))
            return None if b2 is None else (b2, mm)
        b2 = self.children[b].get(a)
        if b2 is None:
            return None
        return b2, {**mm, timer_of(n): timer_of(b2)}

    def copy_run(self, m: Matching, q: int, p: int, end: int) -> Optional[tuple[list[int], Matching]]:
        """Copy the run from ``p`` to ``end`` at ``q`` under ``m``; the copied nodes and extended matching."""
        mm = dict(m)
        b = q
        nodes = []
        for n in self.path_between(p, end):
            res = self._copy_step(mm, b, n)
            if res is None:
                return None
            b, mm = res
            nodes.append(b)
        return nodes, mm

    # apartness

    def _case(self, a: int, b: int, mm: Matching, has_step: bool, behavioral_only: bool) -> Optional[str]:
        if has_step:
            if self.output[a] != self.output[b]:
                return "outputs"
            ua, ub = self.update[a], self.update[b]
            if ua is not None and ub is not None and ua.constant != ub.constant:
                return "constants"
        if self.explored[a] and self.explored[b]:
            ea, eb = self.enabled(a), self.enabled(b)
            if len(ea) != len(eb):
                return "sizes"
            for x, y in mm.items():
                if (x in ea) != (y in eb):
                    return "enabled"
        if not behavioral_only and not self.is_valid(mm):
            return "structural"
        return None

    def check_apart(self, m: Matching, p: int, q: int, behavioral_only: bool = False) -> Optional[Apart]:
        """First witness, breadth-first over runs already in the tree, that ``p`` and ``q`` differ under ``m``."""
        queue = deque([(p, q, dict(m), ())])
        while queue:
            a, b, mm, word = queue.popleft()
            case = self._case(a, b, mm, bool(word), behavioral_only)
            if case is not None:
                return Apart(word, case, a, b)
            for n in self.ordered_children(a):
                res = self._copy_step(mm, b, n)
                if res is not None:
                    queue.append((n, res[0], res[1], word + (self.action[n],)))
        return None

    def apart_by(self, m: Matching, p: int, q: int, word: Iterable[Action],
                 behavioral_only: bool = False) -> Optional[str]:
        """The apartness case that ``word`` (a run from ``p``) witnesses, if any."""
        a, b, mm = p, q, dict(m)
        word = tuple(word)
        for k, act in enumerate(word):
            n = self.children[a].get(act)
            if n is None:
                return None
            res = self._copy_step(mm, b, n)
            if res is None:
                return None
            a, (b, mm) = n, res
        return self._case(a, b, mm, bool(word), behavioral_only)

    # replay

    def spanning_end(self, p: int, x: str) -> Optional[int]:
        """Shallowest node below ``p`` entered by the timeout of ``x`` with ``x`` active all the way."""
        queue = deque([p])
        while queue:
            n = queue.popleft()
            if x not in self.active[n]:
                continue
            for c in self.ordered_children(n):
                if self.action[c] == Timeout(x):
                    return c
                queue.append(c)
        return None

    def replay(self, m: Matching, q: int, p: int, end: int) -> ReplayOutcome:
        """Grow the copy of the run ``p → end`` at ``q`` under ``m`` until done, apart, or a new timer shows up."""
        nodes = self.path_between(p, end)
        fresh = set()
        cut = len(nodes)
        for k, n in enumerate(nodes):
            a = self.action[n]
            if isinstance(a, Timeout) and a.timer not in m and a.timer not in fresh:
                cut = k
                break
            if isinstance(a, Input):
                fresh.add(timer_of(n))
        sizes = (len(self.active[p]), len(self.active[q]))

        def grew():
            return (len(self.active[p]), len(self.active[q])) != sizes

        self.ensure_explored(p)
        self.ensure_explored(q)
        if grew():
            return ReplayOutcome(ACTIVE)
        verdict = self.check_apart(m, p, q)
        if verdict is not None:
            return ReplayOutcome(APART, verdict)
        b, mm = q, dict(m)
        for n in nodes[:cut]:
            self.explore(n)
            a = self.action[n]
            if isinstance(a, Input):
                b2 = self.input_child(b, a.symbol)
            else:
                b2 = self.children[b].get(Timeout(mm[a.timer]))
            if b2 is None:
                verdict = self.check_apart(m, p, q)
                if verdict is not None:
                    return ReplayOutcome(APART, verdict)
                raise TeacherContractError(f"cannot copy {a} at node {b}")
            self.explore(b2)
            if isinstance(a, Input):
                mm[timer_of(n)] = timer_of(b2)
            b = b2
            if grew():
                return ReplayOutcome(ACTIVE, end=b)
            verdict = self.check_apart(m, p, q)
            if verdict is not None:
                return ReplayOutcome(APART, verdict)
        if cut == len(nodes):
            return ReplayOutcome(DONE, end=b)
        verdict = self.check_apart(m, p, q)
        if verdict is not None:
            return ReplayOutcome(APART, verdict)
        return ReplayOutcome(ACTIVE, end=b)

    # debugging

    def to_dot(self, basis: Iterable[int] = ()) -> str:
        basis = set(basis)
        lines = ["digraph tree {", "  rankdir=LR;"]
        for n in range(len(self)):
            timers = ",".join(self.sorted_timers(self.active[n]))
            style = ', style=filled, fillcolor="#dddddd"' if n in basis else ""
            shape = "doublecircle" if self.explored[n] else "circle"
            lines.append(f'  t{n} [label="t{n}\\n{{{timers}}}", shape={shape}{style}];')
        for n in range(1, len(self)):
            u = self.update[n]
            label = f"{self.action[n]}/{self.output[n]}" + ("" if u is None else f", {u}")
            lines.append(f'  t{self.parent[n]} -> t{n} [label="{label}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"
