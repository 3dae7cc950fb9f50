"""Command-line front end.

Exit codes: 0 success, attacker exists or attacker verified; 2 no
attacker exists or attacker not verified; 3 indeterminate (resource cap);
1 input or validation error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .attack import build_attacked_supervisor, build_transformed_plant, plant_to_json
from .automata import compose, format_json, load, observer_with_beliefs
from .bipartite import bipartize, bipartize_attacked
from .constraints import load_constraints, validate_attacker, validate_supervisor
from .errors import CovertSynthError, ResourceLimitExceeded, ValidationError
from .synthesis import Goal, Verdict, synthesize
from .verify import check_covert, check_damage_nonblocking, check_damage_reachable

log = logging.getLogger("covertsynth")

EXIT_OK, EXIT_ERROR, EXIT_NEGATIVE, EXIT_INDETERMINATE = 0, 1, 2, 3


def _emit(text: str, out) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _instance(args):
    """Plant, supervisor, damage automaton and constraints, from --dir or explicit files."""
    base = Path(args.dir) if args.dir else None

    def pick(value, default):
        if value:
            return Path(value)
        if base is None:
            raise CovertSynthError(f"missing input: pass --{default.split('.')[0]} or --dir")
        return base / default

    g = load(pick(args.plant, "plant.json"))
    s = load(pick(args.supervisor, "supervisor.json"))
    h = load(pick(args.damage, "damage.json"))
    cc, ac = load_constraints(pick(args.constraints, "constraints.json"))
    return g, s, h, cc, ac


def _constraints(args):
    if args.constraints:
        return load_constraints(args.constraints)
    if args.dir:
        return load_constraints(Path(args.dir) / "constraints.json")
    raise CovertSynthError("missing input: pass --constraints or --dir")


def cmd_validate(args) -> int:
    cc, ac = _constraints(args)
    a = load(args.automaton)
    if args.role == "supervisor":
        cc.check(a.alphabet)
        report = validate_supervisor(a, cc)
    else:
        report = validate_attacker(a, ac, eavesdrop=args.eavesdrop)
    _emit(format_json({"role": args.role, **report.to_dict()}), args.out)
    return EXIT_OK if report else EXIT_ERROR


def cmd_compose(args) -> int:
    automata = [load(p) for p in args.automata]
    result, _ = compose(*automata)
    _emit(result.to_json(), args.out)
    return EXIT_OK


def cmd_observe(args) -> int:
    a = load(args.automaton)
    visible = set(args.events or [])
    if args.constraints:
        cc, ac = load_constraints(args.constraints)
        visible |= ac.attacker_observable if args.attacker else cc.observable
    obs, beliefs = observer_with_beliefs(a, visible & a.alphabet)
    extra = {"beliefs": {n: sorted(beliefs[n]) for n in sorted(beliefs)}}
    _emit(obs.to_json(**extra), args.out)
    return EXIT_OK


def cmd_attacked_sup(args) -> int:
    cc, ac = _constraints(args)
    _emit(build_attacked_supervisor(load(args.supervisor), cc, ac).to_json(), args.out)
    return EXIT_OK


def cmd_bipartize(args) -> int:
    cc, ac = _constraints(args)
    s = load(args.supervisor)
    bt = bipartize_attacked(s, cc, ac) if args.attacked else bipartize(s, cc)
    _emit(bt.to_json(), args.out)
    return EXIT_OK


def cmd_transform(args) -> int:
    tp = build_transformed_plant(*_instance(args), eavesdrop=args.eavesdrop, elide_monitor=args.elide_monitor)
    _emit(plant_to_json(tp), args.out)
    return EXIT_OK


def _verdict_code(verdict: Verdict) -> int:
    return {Verdict.EXISTS: EXIT_OK, Verdict.NONE: EXIT_NEGATIVE}.get(verdict, EXIT_INDETERMINATE)


def cmd_synth(args) -> int:
    result = synthesize(*_instance(args), goal=args.goal, eavesdrop=args.eavesdrop, elide=args.elide_monitor)
    report = dict(result.report)
    if result.attacker is not None and args.out:
        Path(args.out).write_text(result.attacker.to_json())
        report["attacker_file"] = args.out
    _emit(format_json(report), args.report)
    return _verdict_code(result.verdict)


def cmd_verify(args) -> int:
    g, s, h, cc, ac = _instance(args)
    a = load(args.attacker)
    covert = check_covert(g, s, a, h, cc, ac, args.eavesdrop)
    reached = check_damage_reachable if Goal(args.goal) is Goal.REACHABLE else check_damage_nonblocking
    ok = covert.covert and reached(g, s, a, h, cc, ac, args.eavesdrop)
    report = {
        "verdict": "verified" if ok else "unverified",
        "goal": Goal(args.goal).value,
        "eavesdrop": args.eavesdrop,
        "covert": covert.covert,
        "sizes": {"plant": len(g.states), "attacker": len(a.states)},
        "attacker_file": args.attacker,
        "witness": covert.witness,
    }
    _emit(format_json(report), args.out)
    return EXIT_OK if ok else EXIT_NEGATIVE


def cmd_resilient(args) -> int:
    result = synthesize(*_instance(args), goal=args.goal, eavesdrop=args.eavesdrop, elide=args.elide_monitor)
    status = {Verdict.EXISTS: "vulnerable", Verdict.NONE: "resilient"}.get(result.verdict, "indeterminate")
    _emit(format_json(dict(result.report, status=status)), args.out)
    return _verdict_code(result.verdict)


def _instance_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("-d", "--dir", help="directory holding plant.json, supervisor.json, damage.json, constraints.json")
    p.add_argument("--plant")
    p.add_argument("--supervisor")
    p.add_argument("--damage")
    p.add_argument("--constraints")


def _game_args(p: argparse.ArgumentParser, elide: bool = True) -> None:
    p.add_argument("--goal", choices=[g.value for g in Goal], default=Goal.REACHABLE.value)
    p.add_argument("--eavesdrop", action="store_true", help="attacker also observes control commands")
    if elide:
        p.add_argument("--elide-monitor", choices=["auto", "on", "off"], default="auto")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="covertsynth", description="Covert actuator attacker synthesis")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a supervisor or attacker against its constraints")
    p.add_argument("automaton")
    p.add_argument("--role", choices=["supervisor", "attacker"], default="supervisor")
    p.add_argument("--constraints")
    p.add_argument("-d", "--dir")
    p.add_argument("--eavesdrop", action="store_true")
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("compose", help="synchronous product of automata")
    p.add_argument("automata", nargs="+")
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_compose)

    p = sub.add_parser("observe", help="observer automaton over a set of visible events")
    p.add_argument("automaton")
    p.add_argument("-e", "--events", nargs="*", help="visible events")
    p.add_argument("--constraints", help="take the supervisor's (or --attacker's) observable events")
    p.add_argument("--attacker", action="store_true")
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_observe)

    p = sub.add_parser("attacked-sup", help="enablement-attacked supervisor")
    p.add_argument("supervisor")
    p.add_argument("--constraints")
    p.add_argument("-d", "--dir")
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_attacked_sup)

    p = sub.add_parser("bipartize", help="split supervisor states into command and reaction states")
    p.add_argument("supervisor")
    p.add_argument("--constraints")
    p.add_argument("-d", "--dir")
    p.add_argument("--attacked", action="store_true", help="bipartize the attacked supervisor")
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_bipartize)

    p = sub.add_parser("transform", help="transformed plant for attacker synthesis")
    _instance_args(p)
    p.add_argument("--eavesdrop", action="store_true")
    p.add_argument("--elide-monitor", choices=["auto", "on", "off"], default="auto")
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("synth", help="synthesize a covert attacker")
    _instance_args(p)
    _game_args(p)
    p.add_argument("-o", "--out", help="attacker file, written only when one exists")
    p.add_argument("--report", help="report file (default stdout)")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("verify", help="check a given attacker by definition")
    _instance_args(p)
    _game_args(p, elide=False)
    p.add_argument("--attacker", required=True)
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("resilient", help="decide whether the supervisor resists every covert attacker")
    _instance_args(p)
    _game_args(p)
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_resilient)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        print(format_json(exc.report.to_dict()), file=sys.stderr, end="")
        return EXIT_ERROR
    except ResourceLimitExceeded as exc:
        print(f"indeterminate: {exc}", file=sys.stderr)
        return EXIT_INDETERMINATE
    except (CovertSynthError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
