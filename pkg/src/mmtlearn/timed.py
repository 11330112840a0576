"""Timed semantics: configurations, timed runs, delay constraints and transparent runs."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import floor
from typing import Optional, Sequence, Union

from .mmt import Action, Input, Mmt, Run, Step, Timeout

Delay = Fraction
Event = Union[Fraction, Step]


@dataclass(frozen=True)
class Config:
    state: str
    val: dict = field(default_factory=dict)

    def __hash__(self):
        return hash((self.state, tuple(sorted(self.val.items()))))

    def __str__(self) -> str:
        vals = ", ".join(f"{x}={v}" for x, v in sorted(self.val.items()))
        return f"({self.state}, {{{vals}}})"


def as_time(value) -> Fraction:
    """Exact rational from an int, Fraction, or a decimal/``p/q`` string."""
    t = Fraction(value)
    if t < 0:
        raise ValueError(f"negative delay {value!r}")
    return t


@dataclass(frozen=True)
class TimedWord:
    """Alternating delays and symbols; ``len(delays) == len(symbols) + 1``."""

    delays: tuple[Fraction, ...]
    symbols: tuple[Action, ...]

    def __post_init__(self):
        if len(self.delays) != len(self.symbols) + 1:
            raise ValueError("a timed word starts and ends with a delay")

    def __len__(self) -> int:
        return len(self.symbols)

    def __str__(self) -> str:
        parts = [_fmt_time(self.delays[0])]
        for a, d in zip(self.symbols, self.delays[1:]):
            parts += [str(a), _fmt_time(d)]
        return " ".join(parts)

    @classmethod
    def parse(cls, text: str) -> "TimedWord":
        """Parse ``0.5 i 1 i 3``; delays may be decimals or ``p/q``, timeouts ``to[x]``.

        Missing delays between consecutive symbols (or at either end) default to 0.
        """
        delays, symbols = [], []
        pending = Fraction(0)
        for tok in text.split():
            if _is_number(tok):
                pending += as_time(tok)
                continue
            delays.append(pending)
            pending = Fraction(0)
            if tok.startswith("to[") and tok.endswith("]"):
                symbols.append(Timeout(tok[3:-1]))
            else:
                symbols.append(Input(tok))
        delays.append(pending)
        return cls(tuple(delays), tuple(symbols))

    @property
    def start_times(self) -> list[Fraction]:
        times, now = [], Fraction(0)
        for d in self.delays[:-1]:
            now += d
            times.append(now)
        return times


def _is_number(tok: str) -> bool:
    try:
        Fraction(tok)
    except (ValueError, ZeroDivisionError):
        return False
    return True


def _fmt_time(t: Fraction) -> str:
    return str(t.numerator) if t.denominator == 1 else f"{t.numerator}/{t.denominator}"


@dataclass(frozen=True)
class TimedRun:
    """A first configuration followed by alternating delays and discrete steps with their configurations."""

    first: Config
    events: tuple[tuple[Event, Config], ...] = ()

    @property
    def last(self) -> Config:
        return self.events[-1][1] if self.events else self.first

    def untime(self) -> Run:
        return Run(self.first.state, tuple(e for e, _ in self.events if isinstance(e, Step)))

    def timed_word(self) -> TimedWord:
        delays, symbols = [Fraction(0)], []
        for e, _ in self.events:
            if isinstance(e, Step):
                symbols.append(e.action)
                delays.append(Fraction(0))
            else:
                delays[-1] += e
        return TimedWord(tuple(delays), tuple(symbols))

    def is_race_free(self) -> bool:
        """Positive delays around every action, and a zero timer only right before its own timeout."""
        word = self.timed_word()
        if any(d <= 0 for d in word.delays):
            return False
        before = self.first
        for e, conf in self.events:
            if isinstance(e, Step):
                zero = {x for x, v in before.val.items() if v == 0}
                expected = {e.action.timer} if isinstance(e.action, Timeout) else set()
                if zero != expected:
                    return False
            before = conf
        return all(v != 0 for v in self.last.val.values())

    def is_transparent(self) -> bool:
        word = self.timed_word()
        fracs = [t - floor(t) for t, a in zip(word.start_times, word.symbols) if isinstance(a, Input)]
        return len(fracs) == len(set(fracs))


def timed_step(m: Mmt, c: Config, e) -> Optional[Config]:
    """One delay (a number) or discrete (an action) transition from ``c``."""
    if isinstance(e, (Input, Timeout)):
        if isinstance(e, Timeout) and c.val.get(e.timer) != 0:
            return None
        t = m.delta.get((c.state, e))
        if t is None:
            return None
        val = {y: c.val[y] for y in m.active[t.target] if y in c.val}
        if t.update is not None and t.update.timer in m.active[t.target]:
            val[t.update.timer] = Fraction(t.update.constant)
        if set(val) != m.active[t.target]:
            return None
        return Config(t.target, val)
    d = as_time(e)
    if any(v < d for v in c.val.values()):
        return None
    return Config(c.state, {x: v - d for x, v in c.val.items()})


def _discrete(m: Mmt, c: Config, a: Action) -> Optional[tuple[Step, Config]]:
    nxt = timed_step(m, c, a)
    if nxt is None:
        return None
    t = m.delta[(c.state, a)]
    return Step(a, t.output, t.update, t.target), nxt


def run_timed_word(m: Mmt, w: TimedWord, start: Optional[Config] = None) -> Optional[TimedRun]:
    conf = start or Config(m.initial, {})
    first = conf
    events: list[tuple[Event, Config]] = []
    for k, d in enumerate(w.delays):
        conf = timed_step(m, conf, d)
        if conf is None:
            return None
        events.append((Fraction(d), conf))
        if k < len(w.symbols):
            res = _discrete(m, conf, w.symbols[k])
            if res is None:
                return None
            events.append(res)
            conf = res[1]
    return TimedRun(first, tuple(events))


class IncompleteMachine(ValueError):
    pass


def run_timed_input(m: Mmt, w: TimedWord) -> TimedRun:
    """Read an input-only timed word, firing each timeout as its timer reaches zero.

    Simultaneous expirations fire oldest (re)start first, then by timer
    declaration order; only non race-avoiding words ever hit that tie.
    """
    if any(not isinstance(a, Input) for a in w.symbols):
        raise ValueError("run_timed_input expects a word over inputs only")
    conf = Config(m.initial, {})
    first = conf
    events: list[tuple[Event, Config]] = []
    started: dict[str, Fraction] = {}
    rank = {x: k for k, x in enumerate(m.timers)}
    now = Fraction(0)

    def advance(d: Fraction):
        nonlocal conf
        conf = Config(conf.state, {x: v - d for x, v in conf.val.items()})
        if events and not isinstance(events[-1][0], Step):
            prev, _ = events.pop()
            events.append((prev + d, conf))
        else:
            events.append((d, conf))

    def fire(a: Action):
        nonlocal conf
        res = _discrete(m, conf, a)
        if res is None:
            raise IncompleteMachine(f"{conf.state} does not define {a}")
        step, conf = res
        events.append((step, conf))
        if step.update is not None:
            started[step.update.timer] = now
        for x in [x for x in started if x not in conf.val]:
            del started[x]

    for k, d in enumerate(w.delays):
        remaining = as_time(d)
        while True:
            if not conf.val:
                break
            low = min(conf.val.values())
            if low > remaining:
                break
            due = [x for x, v in conf.val.items() if v == low]
            x = min(due, key=lambda y: (started.get(y, now), rank.get(y, 0)))
            advance(low)
            now += low
            remaining -= low
            fire(Timeout(x))
        advance(remaining)
        now += remaining
        if k < len(w.symbols):
            fire(w.symbols[k])
    return TimedRun(first, tuple(events))


# delay constraints

@dataclass(frozen=True)
class Bound:
    """``s[left] - s[right] <= constant`` (``<`` when strict)."""

    left: int
    right: int
    constant: int
    strict: bool = False


@dataclass
class DelayConstraintSystem:
    """Difference constraints over prefix sums ``s_0 = 0, s_1 .. s_{n+1}`` of the delays."""

    size: int
    bounds: list[Bound] = field(default_factory=list)
    equalities: list[tuple[int, int, int]] = field(default_factory=list)
    distinct_fraction: list[int] = field(default_factory=list)

    def add(self, left: int, right: int, constant: int, strict: bool = False):
        self.bounds.append(Bound(left, right, constant, strict))

    def add_equal(self, left: int, right: int, constant: int):
        self.add(left, right, constant)
        self.add(right, left, -constant)
        self.equalities.append((left, right, constant))

    def _distances(self):
        # weights are pairs (c, e) standing for c + e*eps with eps > 0 infinitesimal
        n = self.size
        inf = None
        dist = [[inf] * n for _ in range(n)]
        for k in range(n):
            dist[k][k] = (0, 0)
        for b in self.bounds:
            w = (b.constant, -1 if b.strict else 0)
            cur = dist[b.right][b.left]
            if cur is None or w < cur:
                dist[b.right][b.left] = w
        for k in range(n):
            dk = dist[k]
            for i in range(n):
                dik = dist[i][k]
                if dik is None:
                    continue
                di = dist[i]
                for j in range(n):
                    if dk[j] is None:
                        continue
                    w = (dik[0] + dk[j][0], dik[1] + dk[j][1])
                    if di[j] is None or w < di[j]:
                        di[j] = w
        return dist

    def satisfiable(self) -> bool:
        dist = self._distances()
        return all(dist[k][k] >= (0, 0) for k in range(self.size))

    def earliest_solution(self) -> Optional[list[Fraction]]:
        """Pointwise-minimal prefix sums with ``s_0 = 0``, made concrete by a small positive epsilon."""
        dist = self._distances()
        if any(dist[k][k] < (0, 0) for k in range(self.size)):
            return None
        sym = []
        for k in range(self.size):
            d = dist[k][0]
            if d is None:
                return None
            sym.append((-d[0], -d[1]))
        eps = Fraction(1)
        for b in self.bounds:
            a = sym[b.left][0] - sym[b.right][0]
            e = sym[b.left][1] - sym[b.right][1]
            if a < b.constant and e > 0:
                eps = min(eps, Fraction(b.constant - a, e) / 2)
        return [Fraction(v) + e * eps for v, e in sym]

    def slack(self, s: Sequence[Fraction]) -> Fraction:
        """Smallest gap left by the strict constraints at ``s``."""
        gaps = [b.constant - (s[b.left] - s[b.right]) for b in self.bounds if b.strict]
        return min(gaps, default=Fraction(1))

    def holds(self, s: Sequence[Fraction]) -> bool:
        for b in self.bounds:
            diff = s[b.left] - s[b.right]
            if diff > b.constant or (b.strict and diff == b.constant):
                return False
        return True


def constraints_of(m: Mmt, r: Run, race_free: bool = True) -> DelayConstraintSystem:
    """Delay constraints whose solutions are exactly the timings of ``r``.

    With ``race_free`` all delays are positive and no timer sits at zero
    except right before its own timeout; otherwise the plain timed semantics
    (zero delays and simultaneous expirations allowed) is encoded.
    """
    n = len(r.steps)
    system = DelayConstraintSystem(n + 2)
    running: dict[str, tuple[int, int]] = {}
    for k, st in enumerate(r.steps, start=1):
        system.add(k - 1, k, 0, strict=race_free)
        for x, (j, c) in running.items():
            if st.action == Timeout(x):
                system.add_equal(k, j, c)
            else:
                system.add(k, j, c, strict=race_free)
        if isinstance(st.action, Timeout):
            if st.action.timer not in running:
                raise ValueError(f"timeout of {st.action.timer} at step {k} without a running timer")
        else:
            system.distinct_fraction.append(k)
        if st.update is not None:
            running[st.update.timer] = (k, st.update.constant)
        running = {x: jc for x, jc in running.items() if x in m.active[st.target]}
    system.add(n, n + 1, 0, strict=race_free)
    for x, (j, c) in running.items():
        system.add(n + 1, j, c, strict=race_free)
    return system


def is_feasible(m: Mmt, r: Run, race_free: bool = False) -> bool:
    """Whether some timed run untimes to ``r`` (a race-free one when ``race_free``)."""
    if r.start != m.initial:
        raise ValueError("feasibility is defined for runs from the initial state")
    try:
        system = constraints_of(m, r, race_free=race_free)
    except ValueError:
        return False
    return system.satisfiable()


def synth_transparent(m: Mmt, r: Run) -> Optional[TimedRun]:
    """A race-free timed run for ``r`` whose inputs start at pairwise distinct fractional times."""
    system = constraints_of(m, r, race_free=True)
    s = system.earliest_solution()
    if s is None:
        return None
    # inputs anchor rigid blocks: every equality ties a timeout to the step that started its timer
    block = list(range(system.size))

    def root(k):
        while block[k] != k:
            k = block[k]
        return k

    for left, right, _ in system.equalities:
        block[root(left)] = root(right)
    step = system.slack(s) / (2 * (system.size + 1))
    shift = [Fraction(0)] * system.size
    used: set[Fraction] = set()
    for k in system.distinct_fraction:
        base = s[k]
        for t in range(system.size + 1):
            cand = base + t * step
            fr = cand - floor(cand)
            if fr not in used:
                used.add(fr)
                shift[root(k)] = t * step
                break
    s = [v + shift[root(k)] for k, v in enumerate(s)]
    if not system.holds(s):
        return None
    delays = tuple(s[k] - s[k - 1] for k in range(1, system.size))
    word = TimedWord(delays, r.word)
    rho = run_timed_word(m, word)
    if rho is None or rho.untime() != r:
        return None
    return rho
