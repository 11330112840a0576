"""Symbolic query oracle over a hidden target machine, with query accounting."""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

from .mmt import Mmt, SymbolicAction, Timeout
from .zones import Counterexample, build_zone_mmt, symbolic_equiv


@dataclass
class QueryStats:
    oq: int = 0
    wq: int = 0
    eq: int = 0
    ms: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


class TeacherContractError(RuntimeError):
    """A query answer contradicts what the learner already knows."""


class Teacher:
    """Answers output, wait and equivalence queries for the zone machine of ``model``."""

    def __init__(self, model: Mmt):
        self.target = build_zone_mmt(model)
        self.oq_count = 0
        self.wq_count = 0
        self.eq_count = 0
        self._started = time.perf_counter()

    def oq(self, sw: Sequence[SymbolicAction]) -> Optional[tuple[str, ...]]:
        self.oq_count += 1
        return self.target.output_word(sw)

    def wq(self, sw: Sequence[SymbolicAction]) -> Optional[dict[tuple[int, int], str]]:
        """Causes ``(c, j)`` of every timer that can expire after ``sw``, each with its timeout output.

        The outputs ride along with the answer and are not counted as output queries.
        """
        self.wq_count += 1
        run = self.target.run_of_symbolic(sw)
        if run is None:
            return None
        causes: dict[str, tuple[int, int]] = {}
        for k, st in enumerate(run.steps, start=1):
            if st.update is not None:
                causes[st.update.timer] = (st.update.constant, k)
            causes = {x: ck for x, ck in causes.items() if x in self.target.active[st.target]}
        answer = {}
        for x, ck in causes.items():
            t = self.target.delta.get((run.end, Timeout(x)))
            if t is not None:
                answer[ck] = t.output
        return answer

    def eq(self, hypothesis) -> Optional[Counterexample]:
        """``None`` when the hypothesis is symbolically equivalent to the target."""
        from .gmmt import Gmmt, gmmt_to_mmt

        self.eq_count += 1
        if isinstance(hypothesis, Gmmt):
            hypothesis = gmmt_to_mmt(hypothesis, check_complete=False)
        # hypotheses may leave some reachable timeouts undefined; that difference is itself a counterexample
        return symbolic_equiv(self.target, hypothesis, check_complete=False)

    def stats(self) -> QueryStats:
        ms = int((time.perf_counter() - self._started) * 1000)
        return QueryStats(self.oq_count, self.wq_count, self.eq_count, ms)
