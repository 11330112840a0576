"""Active learning of Mealy machines with timers from symbolic queries."""

from .mmt import Input, Mmt, Run, Start, Step, Timeout, TimeoutRef, Transition

__all__ = ["Input", "Mmt", "Run", "Start", "Step", "Timeout", "TimeoutRef", "Transition"]
