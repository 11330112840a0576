"""Zones over timer valuations, the zone machine of a complete MMT, and symbolic equivalence."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from .mmt import Action, Input, Mmt, Run, Step, SymbolicWord, Timeout, Transition

# Bounds use the usual integer encoding: 2c + 1 for "<= c", 2c for "< c".
INF = 1 << 62
LE_ZERO = 1


def bound(c: int, strict: bool = False) -> int:
    return 2 * c + (0 if strict else 1)


def bound_value(raw: int) -> tuple[int, bool]:
    """``(constant, strict)`` of a raw bound."""
    return raw >> 1, not raw & 1


def add_bounds(a: int, b: int) -> int:
    if a >= INF or b >= INF:
        return INF
    return a + b - ((a | b) & 1)


class Zone:
    """A convex set of valuations over ``timers``, stored as a canonical difference-bound matrix.

    Entry ``[i][j]`` bounds ``v_i - v_j`` where index 0 is the constant zero.
    """

    __slots__ = ("timers", "matrix")

    def __init__(self, timers: Sequence[str], matrix: list[list[int]], canonical: bool = False):
        self.timers = tuple(timers)
        self.matrix = matrix
        if not canonical:
            self._close()

    @classmethod
    def unit(cls) -> "Zone":
        """The zone ``{∅}`` holding only the empty valuation."""
        return cls((), [[LE_ZERO]], canonical=True)

    @classmethod
    def universe(cls, timers: Sequence[str]) -> "Zone":
        n = len(timers) + 1
        matrix = [[INF] * n for _ in range(n)]
        for i in range(n):
            matrix[i][i] = LE_ZERO
            matrix[0][i] = LE_ZERO
        return cls(timers, matrix)

    @classmethod
    def empty(cls, timers: Sequence[str] = ()) -> "Zone":
        n = len(timers) + 1
        matrix = [[INF] * n for _ in range(n)]
        matrix[0][0] = bound(-1)
        return cls(timers, matrix, canonical=True)

    def _close(self):
        m = self.matrix
        n = len(m)
        for k in range(n):
            mk = m[k]
            for i in range(n):
                mik = m[i][k]
                if mik >= INF:
                    continue
                mi = m[i]
                for j in range(n):
                    s = add_bounds(mik, mk[j])
                    if s < mi[j]:
                        mi[j] = s
        if any(m[i][i] < LE_ZERO for i in range(n)):
            for row in m:
                row[:] = [INF] * n
            m[0][0] = bound(-1)

    def is_empty(self) -> bool:
        return self.matrix[0][0] < LE_ZERO

    def __bool__(self) -> bool:
        return not self.is_empty()

    def _key(self):
        if self.is_empty():
            return (self.timers, None)
        return (self.timers, tuple(map(tuple, self.matrix)))

    def __eq__(self, other) -> bool:
        return isinstance(other, Zone) and self._key() == other._key()

    def __hash__(self) -> int:
        return hash(self._key())

    def index(self, x: str) -> int:
        return self.timers.index(x) + 1

    def copy(self) -> "Zone":
        return Zone(self.timers, [row[:] for row in self.matrix], canonical=True)

    def contains(self, valuation: dict) -> bool:
        if set(valuation) != set(self.timers) or self.is_empty():
            return False
        vals = [Fraction(0)] + [Fraction(valuation[x]) for x in self.timers]
        if any(v < 0 for v in vals):
            return False
        for i, row in enumerate(self.matrix):
            for j, raw in enumerate(row):
                if raw >= INF:
                    continue
                c, strict = bound_value(raw)
                diff = vals[i] - vals[j]
                if diff > c or (strict and diff == c):
                    return False
        return True

    def upper(self, x: str) -> tuple[int, bool] | None:
        raw = self.matrix[self.index(x)][0]
        return None if raw >= INF else bound_value(raw)

    def max_constant(self) -> int:
        finite = [abs(bound_value(r)[0]) for row in self.matrix for r in row if r < INF]
        return max(finite, default=0)

    def __str__(self) -> str:
        if self.is_empty():
            return "false"
        if not self.timers:
            return "{∅}"
        names = ("0",) + self.timers
        parts = []
        n = len(names)
        for i in range(1, n):
            lo = self.matrix[0][i]
            hi = self.matrix[i][0]
            lo_c, lo_s = bound_value(lo)
            text = f"{-lo_c}{'<' if lo_s else '≤'}{names[i]}"
            if hi < INF:
                hi_c, hi_s = bound_value(hi)
                text += f"{'<' if hi_s else '≤'}{hi_c}"
            parts.append(text)
        for i in range(1, n):
            for j in range(1, n):
                raw = self.matrix[i][j]
                if i != j and raw < INF:
                    implied = add_bounds(self.matrix[i][0], self.matrix[0][j])
                    if raw < implied:
                        c, s = bound_value(raw)
                        parts.append(f"{names[i]}-{names[j]}{'<' if s else '≤'}{c}")
        return " ∧ ".join(parts)

    def __repr__(self) -> str:
        return f"Zone({self})"


def zone_down(z: Zone) -> Zone:
    """Valuations reachable backwards in time: ``{κ - d | κ ∈ z, d ≤ min κ}``."""
    if z.is_empty():
        return z
    m = [row[:] for row in z.matrix]
    n = len(m)
    for i in range(1, n):
        low = LE_ZERO
        for j in range(1, n):
            if m[j][i] < low:
                low = m[j][i]
        m[0][i] = low
    return Zone(z.timers, m)


def zone_restrict(z: Zone, keep: Iterable[str]) -> Zone:
    keep = set(keep)
    if z.is_empty():
        return Zone.empty(tuple(x for x in z.timers if x in keep))
    idx = [0] + [k + 1 for k, x in enumerate(z.timers) if x in keep]
    timers = tuple(z.timers[k - 1] for k in idx[1:])
    return Zone(timers, [[z.matrix[i][j] for j in idx] for i in idx], canonical=True)


def zone_assign(z: Zone, x: str, c: int, order: Optional[Sequence[str]] = None) -> Zone:
    """Pin ``x`` to ``c``; a fresh ``x`` is inserted following ``order`` (appended otherwise)."""
    if z.is_empty():
        return z
    if x in z.timers:
        timers = z.timers
    elif order is not None:
        rank = {y: k for k, y in enumerate(order)}
        timers = tuple(sorted(z.timers + (x,), key=lambda y: rank.get(y, len(rank))))
    else:
        timers = z.timers + (x,)
    old = {y: z.index(y) for y in z.timers if y != x}
    n = len(timers) + 1
    new_idx = {y: k + 1 for k, y in enumerate(timers)}
    m = [[INF] * n for _ in range(n)]
    m[0][0] = LE_ZERO
    for y, i in old.items():
        ni = new_idx[y]
        m[ni][0] = z.matrix[i][0]
        m[0][ni] = z.matrix[0][i]
        for w, j in old.items():
            m[ni][new_idx[w]] = z.matrix[i][j]
    xi = new_idx[x]
    m[xi][xi] = LE_ZERO
    m[xi][0] = bound(c)
    m[0][xi] = bound(-c)
    for y in old:
        yi = new_idx[y]
        m[xi][yi] = add_bounds(bound(c), m[0][yi])
        m[yi][xi] = add_bounds(m[yi][0], bound(-c))
    return Zone(timers, m, canonical=True)


def zone_timeout(z: Zone, x: str) -> Zone:
    """Intersection with ``x = 0``."""
    if x not in z.timers:
        raise KeyError(f"timer {x} is not in the zone")
    m = [row[:] for row in z.matrix]
    i = z.index(x)
    m[i][0] = min(m[i][0], LE_ZERO)
    return Zone(z.timers, m)


# zone machine

class IncompleteError(ValueError):
    pass


class ZoneMmt(Mmt):
    """An MMT whose states are reachable ``(state, zone)`` pairs of another machine."""

    def __init__(self, *args, origin: dict[str, tuple[str, Zone]], **kwargs):
        super().__init__(*args, **kwargs)
        self.origin = origin


def _explore_zones(m: Mmt):
    """Reachable zone states with their transitions, plus any completeness gaps met on the way."""
    initial = (m.initial, Zone.unit())
    names = {initial: f"{m.initial}@0"}
    serial = {m.initial: 1}
    order = [initial]
    edges = {}
    gaps = []
    queue = deque([initial])
    while queue:
        q, z = queue.popleft()
        src = names[(q, z)]
        for a in m.action_order():
            if isinstance(a, Timeout):
                if a.timer not in m.active[q]:
                    continue
                zt = zone_timeout(z, a.timer)
                if zt.is_empty():
                    continue
            else:
                zt = z
            t = m.delta.get((q, a))
            if t is None:
                gaps.append((q, a))
                continue
            if t.update is not None:
                zt = zone_assign(zt, t.update.timer, t.update.constant, order=m.timers)
            nxt = (t.target, zone_down(zone_restrict(zt, m.active[t.target])))
            if nxt not in names:
                k = serial.get(t.target, 0)
                serial[t.target] = k + 1
                names[nxt] = f"{t.target}@{k}"
                order.append(nxt)
                queue.append(nxt)
            edges[(src, a)] = Transition(names[nxt], t.output, t.update)
    return names, order, edges, gaps


def build_zone_mmt(m: Mmt, check_complete: bool = True) -> ZoneMmt:
    """Reachable zone machine; all of its runs are feasible."""
    if isinstance(m, ZoneMmt):
        return m
    names, order, edges, gaps = _explore_zones(m)
    if check_complete and gaps:
        q, a = gaps[0]
        raise IncompleteError(f"machine is not complete: {q} does not define {a}")
    states = [names[s] for s in order]
    active = {names[s]: m.active[s[0]] for s in order}
    origin = {names[s]: s for s in order}
    return ZoneMmt(m.timers, m.inputs, m.outputs, states, states[0], active, edges, origin=origin)


def enabled_map(m: Mmt) -> dict[str, frozenset[str]]:
    """Enabled timers of every reachable state of ``m``."""
    names, order, edges, _ = _explore_zones(m)
    result: dict[str, set[str]] = {}
    for q, z in order:
        en = result.setdefault(q, set())
        for x in m.active[q]:
            if not zone_timeout(z, x).is_empty():
                en.add(x)
    return {q: frozenset(xs) for q, xs in result.items()}


def enabled(m: Mmt, q: str) -> frozenset[str]:
    if q not in m.active:
        raise KeyError(f"unknown state {q!r}")
    return enabled_map(m).get(q, frozenset())


def is_complete(m: Mmt) -> bool:
    """Every state defines every input, and every reachable state every enabled timeout."""
    for q in m.states:
        for i in m.inputs:
            if (q, Input(i)) not in m.delta:
                return False
    return not _explore_zones(m)[3]


# symbolic equivalence

@dataclass(frozen=True)
class Counterexample:
    word: SymbolicWord
    kind: str  # "missing-in-A", "missing-in-B" or "output-mismatch"

    def __str__(self) -> str:
        from .mmt import format_symbolic

        return f"{self.kind}: {format_symbolic(self.word) or 'ε'}"


def _successor_pairs(pairs, ta: Transition, tb: Optional[Transition], za: Mmt, zb: Mmt):
    ua, ub = ta.update, tb.update
    started = {u.timer for u in (ua,) if u is not None}, {u.timer for u in (ub,) if u is not None}
    kept = set()
    for xa, xb, tainted in pairs:
        if xa in started[0] or xb in started[1]:
            continue
        if xa in za.active[ta.target] and xb in zb.active[tb.target]:
            kept.add((xa, xb, tainted))
    if ua is not None and ub is not None:
        if ua.timer in za.active[ta.target] and ub.timer in zb.active[tb.target]:
            kept.add((ua.timer, ub.timer, ua.constant != ub.constant))
    return frozenset(kept)


def symbolic_equiv(a: Mmt, b: Mmt, check_complete: bool = True) -> Optional[Counterexample]:
    """``None`` when ``a`` and ``b`` accept the same symbolic words with the same outputs.

    Otherwise a shortest counterexample found by breadth-first search over
    the product of both zone machines, in the fixed action order.
    """
    za = build_zone_mmt(a, check_complete)
    zb = build_zone_mmt(b, check_complete)
    inputs = list(za.inputs) + [i for i in zb.inputs if i not in za.inputs]
    start = (za.initial, zb.initial, frozenset())
    parent: dict = {start: None}
    queue = deque([start])

    def trail(node) -> list[tuple[Action, Action]]:
        acts = []
        while parent[node] is not None:
            node, pair = parent[node]
            acts.append(pair)
        return acts[::-1]

    def witness(node, side: int, last: Action, kind: str) -> Counterexample:
        machine = za if side == 0 else zb
        word = [p[side] for p in trail(node)] + [last]
        run = machine.run(machine.initial, word)
        return Counterexample(machine.symbolic_of(run), kind)

    while queue:
        node = queue.popleft()
        qa, qb, pairs = node
        moves = []
        for i in inputs:
            act = Input(i)
            ta, tb = za.delta.get((qa, act)), zb.delta.get((qb, act))
            if ta is None and tb is None:
                continue
            if tb is None:
                return witness(node, 0, act, "missing-in-B")
            if ta is None:
                return witness(node, 1, act, "missing-in-A")
            moves.append((act, act, ta, tb))
        partner_a = {xa: (xb, t) for xa, xb, t in pairs}
        partner_b = {xb: (xa, t) for xa, xb, t in pairs}
        for x in za.timers:
            ta = za.delta.get((qa, Timeout(x)))
            if ta is None:
                continue
            xb, tainted = partner_a.get(x, (None, True))
            tb = None if tainted else zb.delta.get((qb, Timeout(xb)))
            if tb is None:
                return witness(node, 0, Timeout(x), "missing-in-B")
            moves.append((Timeout(x), Timeout(xb), ta, tb))
        for y in zb.timers:
            tb = zb.delta.get((qb, Timeout(y)))
            if tb is None:
                continue
            xa, tainted = partner_b.get(y, (None, True))
            if tainted or (qa, Timeout(xa)) not in za.delta:
                return witness(node, 1, Timeout(y), "missing-in-A")
        for act_a, act_b, ta, tb in moves:
            if ta.output != tb.output:
                return witness(node, 0, act_a, "output-mismatch")
            nxt = (ta.target, tb.target, _successor_pairs(pairs, ta, tb, za, zb))
            if nxt not in parent:
                parent[nxt] = (node, (act_a, act_b))
                queue.append(nxt)
    return None
