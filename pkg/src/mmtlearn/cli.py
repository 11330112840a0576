"""Command line: learn, check, simulate, zone, convert and random."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional

from .gmmt import Gmmt, gmmt_to_mmt, is_gmmt_dict
from .learner import LearnConfig, Learner, RoundLimitExceeded
from .mmt import Mmt, Step
from .models import random_mmt
from .teacher import Teacher
from .timed import IncompleteMachine, TimedWord, _fmt_time, run_timed_input
from .zones import IncompleteError, build_zone_mmt, is_complete, symbolic_equiv

EXIT_OK, EXIT_INEQUIVALENT, EXIT_LIMIT, EXIT_INVALID = 0, 1, 2, 3


class InvalidInput(Exception):
    pass


def load_model(path: str, require_complete: bool = True) -> Mmt:
    """Read an MMT or generalized MMT file; the latter is converted."""
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise InvalidInput(f"{path}: {e}") from e
    try:
        if is_gmmt_dict(data):
            g = Gmmt.from_dict(data)
            problems = g.validate()
            if problems:
                raise InvalidInput(f"{path}: " + "; ".join(problems))
            m = gmmt_to_mmt(g, check_complete=False)
        else:
            m = Mmt.from_dict(data)
    except (KeyError, TypeError, ValueError) as e:
        raise InvalidInput(f"{path}: malformed model ({e})") from e
    problems = m.validate()
    if problems:
        raise InvalidInput(f"{path}: " + "; ".join(problems))
    if require_complete and not is_complete(m):
        raise InvalidInput(f"{path}: model is not complete")
    return m


def _emit(text: str, out: Optional[str]):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _write_dot(m: Mmt, path: Optional[str]):
    if path:
        Path(path).write_text(m.to_dot())


def cmd_learn(args) -> int:
    target = load_model(args.model)
    config = LearnConfig(max_rounds=args.max_rounds, seed=args.seed, verbose=args.verbose)
    teacher = Teacher(target)
    try:
        result = Learner(teacher, teacher.target.inputs, config).learn()
    except RoundLimitExceeded as e:
        print(f"error: {e}", file=sys.stderr)
        if args.stats:
            stats = e.stats.to_dict() | {"rounds": e.rounds, "hypothesis_states": None}
            if args.no_timing:
                stats["ms"] = 0
            Path(args.stats).write_text(json.dumps(stats) + "\n")
        return EXIT_LIMIT
    stats = result.stats_dict()
    if args.no_timing:
        stats["ms"] = 0
    _emit(result.model.to_json(), args.out)
    _write_dot(result.model, args.dot)
    line = json.dumps(stats)
    if args.stats:
        Path(args.stats).write_text(line + "\n")
    print(line, file=sys.stderr)
    return EXIT_OK


def cmd_check(args) -> int:
    a, b = load_model(args.a), load_model(args.b)
    cex = symbolic_equiv(a, b)
    if cex is None:
        print("equivalent", file=sys.stderr)
        return EXIT_OK
    word = " ".join(str(x) for x in cex.word)
    print(f"counterexample ({cex.kind}): {word}", file=sys.stderr)
    return EXIT_INEQUIVALENT


def format_trace(run) -> str:
    parts = []
    for e, conf in run.events:
        parts.append(f"{e.action}/{e.output}" if isinstance(e, Step) else _fmt_time(e))
    return " ".join(parts)


def cmd_simulate(args) -> int:
    m = load_model(args.model)
    try:
        word = TimedWord.parse(args.timed_word)
    except ValueError as e:
        raise InvalidInput(f"bad timed word: {e}") from e
    try:
        run = run_timed_input(m, word)
    except (ValueError, IncompleteMachine) as e:
        raise InvalidInput(str(e)) from e
    print(format_trace(run))
    if args.verbose:
        print(run.first, file=sys.stderr)
        for e, conf in run.events:
            label = f"{e.action}/{e.output}" if isinstance(e, Step) else f"delay {_fmt_time(e)}"
            print(f"  {label:<16} {conf}", file=sys.stderr)
    return EXIT_OK


def cmd_zone(args) -> int:
    m = load_model(args.model)
    z = build_zone_mmt(m)
    _emit(z.to_json(), args.out)
    _write_dot(z, args.dot)
    return EXIT_OK


def cmd_convert(args) -> int:
    try:
        g = Gmmt.from_json(Path(args.model).read_text())
    except (OSError, KeyError, TypeError, ValueError) as e:
        raise InvalidInput(f"{args.model}: {e}") from e
    problems = g.validate()
    if problems:
        raise InvalidInput(f"{args.model}: " + "; ".join(problems))
    try:
        m = gmmt_to_mmt(g)
    except IncompleteError as e:
        raise InvalidInput(f"{args.model}: {e}") from e
    _emit(m.to_json(), args.out)
    _write_dot(m, args.dot)
    print(f"{len(m.states)} states", file=sys.stderr)
    return EXIT_OK


def cmd_random(args) -> int:
    if args.states < 1 or args.timers < 0 or args.inputs < 1:
        raise InvalidInput("need --states >= 1, --timers >= 0 and --inputs >= 1")
    m = build_zone_mmt(random_mmt(args.states, args.timers, args.inputs, seed=args.seed, max_constant=args.max_constant))
    _emit(m.to_json(), args.out)
    _write_dot(m, args.dot)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mmtlearn", description="Learn and analyse Mealy machines with timers.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out=True):
        if out:
            p.add_argument("-o", "--out", help="write the model here instead of stdout")
            p.add_argument("--dot", help="also write a DOT rendering to this file")
        p.add_argument("-v", "--verbose", action="store_true")

    p = sub.add_parser("learn", help="learn a machine equivalent to a target model")
    p.add_argument("model")
    p.add_argument("--stats", help="write query statistics JSON here")
    p.add_argument("--max-rounds", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-timing", action="store_true", help="record ms as 0 for reproducible stats")
    common(p)
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("check", help="symbolic equivalence of two models")
    p.add_argument("a")
    p.add_argument("b")
    common(p, out=False)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("simulate", help="run a timed input word")
    p.add_argument("model")
    p.add_argument("--timed-word", required=True, help='e.g. "0.5 i 1 i 3.5"')
    common(p, out=False)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("zone", help="zone machine of a model")
    p.add_argument("model")
    common(p)
    p.set_defaults(func=cmd_zone)

    p = sub.add_parser("convert", help="convert a generalized MMT")
    p.add_argument("model")
    common(p)
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("random", help="generate a random complete machine")
    p.add_argument("--states", type=int, required=True)
    p.add_argument("--timers", type=int, required=True)
    p.add_argument("--inputs", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-constant", type=int, default=3)
    common(p)
    p.set_defaults(func=cmd_random)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InvalidInput as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
