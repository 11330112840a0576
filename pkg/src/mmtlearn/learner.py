"""Apartness-based active learning of MMTs from symbolic queries."""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from typing import Optional, TextIO, Union

from .gmmt import GTransition, Gmmt, UpdateFn, gmmt_to_mmt
from .mmt import Input, Mmt, Start, SymbolicWord, Timeout, TimeoutRef, Transition
from .obstree import ACTIVE, APART, DONE, ROOT, Matching, ObsTree, owner_of, timer_of
from .teacher import QueryStats, Teacher, TeacherContractError


@dataclass
class LearnConfig:
    max_rounds: int = 50
    seed: int = 0
    verbose: bool = False
    log: Optional[TextIO] = field(default=None, repr=False)  # stderr when unset


@dataclass
class LearnResult:
    model: Mmt
    stats: QueryStats
    rounds: int
    used_gmmt: bool = False

    @property
    def hypothesis_states(self) -> int:
        return len(self.model.states)

    def stats_dict(self) -> dict:
        d = self.stats.to_dict()
        d["rounds"] = self.rounds
        d["hypothesis_states"] = self.hypothesis_states
        return d


class RoundLimitExceeded(RuntimeError):
    def __init__(self, message: str, stats: QueryStats, rounds: int, hypothesis: Optional[Mmt]):
        super().__init__(message)
        self.stats = stats
        self.rounds = rounds
        self.hypothesis = hypothesis


class LearningStuck(RuntimeError):
    """A counterexample was processed without any observable progress."""


def inverse(m: Matching) -> Matching:
    return {y: x for x, y in m.items()}


class _Classes:
    def __init__(self):
        self.parent: dict[str, str] = {}

    def find(self, x: str) -> str:
        self.parent.setdefault(x, x)
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, x: str, y: str):
        rx, ry = self.find(x), self.find(y)
        if rx != ry:
            if owner_of(rx) > owner_of(ry):
                rx, ry = ry, rx
            self.parent[ry] = rx


class Learner:
    """Basis, frontier and compatible pairs over an observation tree."""

    def __init__(self, teacher: Teacher, inputs, config: Optional[LearnConfig] = None):
        self.teacher = teacher
        self.config = config or LearnConfig()
        self.tree = ObsTree(teacher, inputs)
        self.basis: list[int] = [ROOT]
        self.chosen: dict[int, tuple[int, Matching]] = {}
        self._seen_activations = 0
        self._dead_ends: dict = {}
        self._apart: set = set()
        self._not_apart: dict = {}
        self._compat: dict = {}

    # bookkeeping

    def frontier(self) -> list[int]:
        basis = set(self.basis)
        return sorted(c for p in self.basis for c in self.tree.children[p].values() if c not in basis)

    def is_apart(self, m: Matching, p: int, r: int) -> bool:
        # apartness survives tree growth, so positive answers are kept for good
        key = (p, r, tuple(sorted(m.items())))
        if key in self._apart:
            return True
        if self._not_apart.get(key) == self.tree.version:
            return False
        if self.tree.check_apart(m, p, r) is not None:
            self._apart.add(key)
            return True
        self._not_apart[key] = self.tree.version
        return False

    def compat(self, r: int) -> list[tuple[int, Matching]]:
        t = self.tree
        pairs = []
        for p in self.basis:
            cached = self._compat.get((p, r))
            if cached is None or cached[0] != t.version:
                cached = (t.version, [(p, m) for m in t.maximal_matchings(p, r) if not self.is_apart(m, p, r)])
                self._compat[(p, r)] = cached
            pairs.extend(cached[1])
        return pairs

    def _seismic(self) -> bool:
        new = self.tree.activations[self._seen_activations:]
        self._seen_activations = len(self.tree.activations)
        basis = set(self.basis)
        if any(n in basis for n, _ in new) and self.basis != [ROOT]:
            self._log(f"  seismic: basis reset after new active timer(s) {new}")
            self.basis = [ROOT]
            return True
        return False

    def _log(self, msg: str):
        if self.config.verbose:
            print(msg, file=self.config.log or sys.stderr)

    # refinement

    def refine(self):
        t = self.tree
        while True:
            if self._seismic():
                continue
            for n in self.basis + self.frontier():
                t.ensure_explored(n)
            if self._seismic():
                continue
            completed = False
            for p in self.basis:
                for i in t.inputs:
                    if Input(i) not in t.children[p]:
                        t.extend_input(p, i)
                        completed = True
            if completed:
                continue
            frontier = self.frontier()
            lonely = next((r for r in frontier if not self.compat(r)), None)
            if lonely is not None:
                self.basis.append(lonely)
                continue
            compats = {r: self.compat(r) for r in frontier}
            if self._minimize_counts(frontier, compats):
                continue
            if self._minimize_pairs(frontier, compats):
                continue
            return compats

    def _minimize_counts(self, frontier, compats) -> bool:
        t = self.tree
        for r in frontier:
            for p, m in compats[r]:
                if len(t.active[p]) > len(t.active[r]):
                    x = t.sorted_timers(t.active[p] - set(m))[0]
                    outcome = t.replay(m, r, p, t.spanning_end(p, x))
                elif len(t.active[p]) < len(t.active[r]):
                    y = t.sorted_timers(t.active[r] - set(m.values()))[0]
                    outcome = t.replay(inverse(m), p, r, t.spanning_end(r, y))
                else:
                    continue
                self._log(f"  equalize t{p}/t{r}: {outcome}")
                if outcome.kind == DONE:
                    raise TeacherContractError("replay of a spanning run of an unmatched timer completed")
                return True
        return False

    def _minimize_pairs(self, frontier, compats) -> bool:
        t = self.tree
        for r in frontier:
            pairs = compats[r]
            for a in range(len(pairs)):
                for b in range(len(pairs)):
                    (p, mu), (q, nu) = pairs[a], pairs[b]
                    if p == q:
                        continue
                    key = (r, p, tuple(sorted(mu.items())), q, tuple(sorted(nu.items())))
                    if self._dead_ends.get(key) == t.version:
                        continue
                    back = inverse(nu)
                    m = {x: back[y] for x, y in mu.items() if y in back}
                    witness = t.check_apart(m, p, q, behavioral_only=True)
                    if witness is None:
                        continue
                    end = witness.end
                    if witness.case == "constants":
                        started = t.update[end].timer
                        end = t.spanning_end(end, started) or end
                    before = t.version
                    outcome = t.replay(mu, r, p, end)
                    self._log(f"  separate t{p}/t{q} at t{r}: {outcome}")
                    if outcome.kind != DONE or self.compat(r) != pairs:
                        return True
                    # a completed replay that separates nothing is not retried until the tree changes again
                    self._dead_ends[key] = t.version
                    if t.version != before:
                        return True
        return False

    # hypotheses

    def build_hypothesis(self, compats=None) -> Union[Mmt, Gmmt]:
        t = self.tree
        frontier = self.frontier()
        if compats is None:
            compats = {r: self.compat(r) for r in frontier}
        self.chosen = {}
        for r in frontier:
            if not compats[r]:
                raise ValueError(f"frontier node t{r} has no compatible basis node")
            self.chosen[r] = compats[r][0]
        classes = _Classes()
        timers = set()
        for n in self.basis + frontier:
            for x in t.active[n]:
                classes.find(x)
                timers.add(x)
        for r, (p, m) in self.chosen.items():
            for x, y in m.items():
                classes.union(x, y)
        groups: dict[str, list[str]] = {}
        for x in t.sorted_timers(timers):
            groups.setdefault(classes.find(x), []).append(x)
        valid = all(not t.timer_apart(x, y) for g in groups.values() for x in g for y in g)
        return self._as_mmt(groups, classes) if valid else self._as_gmmt()

    def _target(self, c: int) -> int:
        return c if c in set(self.basis) else self.chosen[c][0]

    def _as_mmt(self, groups, classes) -> Mmt:
        t = self.tree
        reps = sorted(groups, key=owner_of)
        name = {rep: f"y{k}" for k, rep in enumerate(reps, start=1)}

        def cls(x):
            return name[classes.find(x)]

        delta = {}
        outputs = []
        for p in self.basis:
            for c in t.ordered_children(p):
                a = t.action[c]
                act = Timeout(cls(a.timer)) if isinstance(a, Timeout) else a
                u = t.update[c]
                update = None if u is None or u.timer not in t.active[c] else Start(cls(u.timer), u.constant)
                delta[(f"t{p}", act)] = Transition(f"t{self._target(c)}", t.output[c], update)
                if t.output[c] not in outputs:
                    outputs.append(t.output[c])
        states = [f"t{p}" for p in self.basis]
        active = {f"t{p}": {cls(x) for x in t.active[p]} for p in self.basis}
        return Mmt([name[r] for r in reps], t.inputs, outputs, states, states[0], active, delta)

    def _as_gmmt(self) -> Gmmt:
        t = self.tree
        basis = set(self.basis)
        delta = {}
        outputs = []
        timers = set()
        for p in self.basis:
            timers |= t.active[p]
            for c in t.ordered_children(p):
                u = t.update[c]
                started = u if u is not None and u.timer in t.active[c] else None
                if c in basis:
                    target = c
                    renames = {x: x for x in t.active[c] if started is None or x != started.timer}
                    start = started
                else:
                    target, m = self.chosen[c]
                    renames, start = {}, None
                    for y, z in m.items():
                        if started is not None and z == started.timer:
                            start = Start(y, started.constant)
                        else:
                            renames[y] = z
                delta[(f"t{p}", t.action[c])] = GTransition(f"t{target}", t.output[c], UpdateFn.of(renames, start))
                if t.output[c] not in outputs:
                    outputs.append(t.output[c])
        states = [f"t{p}" for p in self.basis]
        active = {f"t{p}": t.active[p] for p in self.basis}
        return Gmmt(t.sorted_timers(timers), t.inputs, outputs, states, states[0], active, delta)

    # counterexamples

    def _materialize(self, sw: SymbolicWord) -> int:
        """Add the run of ``sw`` (or its longest prefix in the target language) to the tree."""
        t = self.tree
        q = ROOT
        t.explore(q)
        for sa in sw:
            if isinstance(sa, TimeoutRef):
                path = t.path(q)
                if sa.index >= len(path):
                    break
                nj = path[sa.index]
                a = t.action[nj]
                x = timer_of(nj) if isinstance(a, Input) else a.timer
                nxt = t.children[q].get(Timeout(x))
                if nxt is None or t.update[nj] != Start(x, sa.constant):
                    break
                q = nxt
            else:
                q = t.input_child(q, sa.symbol)
            t.explore(q)
        return q

    def _snapshot(self):
        return len(self.tree.activations)

    def _progressed(self, snap) -> bool:
        t = self.tree
        watched = set(self.basis) | set(self.chosen)
        if any(n in watched for n, _ in t.activations[snap:]):
            return True
        return any(self.is_apart(m, p, r) for r, (p, m) in self.chosen.items())

    def process_counterexample(self, sw: SymbolicWord) -> bool:
        """Replay the counterexample through the folds of the last hypothesis until something gives."""
        t = self.tree
        snap = self._snapshot()
        end = self._materialize(sw)
        if self._progressed(snap):
            return True
        basis = set(self.basis)
        for _ in range(len(sw) + 1):
            frontier_node = next((n for n in t.path(end) if n not in basis), None)
            if frontier_node is None:
                break
            p, m = self.chosen[frontier_node]
            outcome = t.replay(inverse(m), p, frontier_node, end)
            self._log(f"  counterexample replay t{frontier_node} at t{p}: {outcome}")
            if self._progressed(snap):
                return True
            if outcome.kind != DONE:
                break
            end = outcome.end
        return self._progressed(snap)

    # main loop

    def learn(self) -> LearnResult:
        hypothesis = None
        for rnd in range(1, self.config.max_rounds + 1):
            compats = self.refine()
            raw = self.build_hypothesis(compats)
            hypothesis = gmmt_to_mmt(raw, check_complete=False) if isinstance(raw, Gmmt) else raw
            cex = self.teacher.eq(hypothesis)
            self._log(f"round {rnd}: basis={len(self.basis)} frontier={len(self.chosen)} "
                      f"tree={len(self.tree)} oq={self.teacher.oq_count} wq={self.teacher.wq_count} "
                      f"eq={self.teacher.eq_count} -> {'yes' if cex is None else cex}")
            if cex is None:
                return LearnResult(hypothesis, self.teacher.stats(), rnd, isinstance(raw, Gmmt))
            if not self.process_counterexample(cex.word):
                raise LearningStuck(f"no progress from counterexample {cex}")
        raise RoundLimitExceeded(f"no equivalent hypothesis within {self.config.max_rounds} rounds",
                                 self.teacher.stats(), self.config.max_rounds, hypothesis)


def learn(model_or_teacher, config: Optional[LearnConfig] = None) -> LearnResult:
    teacher = model_or_teacher if isinstance(model_or_teacher, Teacher) else Teacher(model_or_teacher)
    return Learner(teacher, teacher.target.inputs, config).learn()
