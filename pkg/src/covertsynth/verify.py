"""Definition-level checks of a given attacker, resilience verification and
the brute-force oracle used to cross-examine the synthesizer.

The checkers build the attacked closed loop directly as
``G || S^A || monitor || A || H`` and never touch the belief game.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import NamedTuple

from .attack import build_attacked_supervisor, halt_name, monitor_with_beliefs, build_transformed_plant
from .automata import (
    Automaton,
    complete_with_sink,
    compose,
    is_complete,
    is_nonblocking,
    marked_nonempty,
    shortest_trace,
)
from .bipartite import bipartize_attacked
from .constraints import AttackConstraint, ControlConstraint, validate_attacker, validate_supervisor
from .errors import AutomatonError, ResourceLimitExceeded, ValidationError
from .synthesis import Goal, Verdict, synthesize


class TooLargeToEnumerate(ResourceLimitExceeded):
    """Instance exceeds the brute-force enumeration bounds."""


class CovertResult(NamedTuple):
    covert: bool
    witness: list | None


def _loop_components(g, s, h, cc, ac, eavesdrop):
    """Everything in the attacked closed loop except the attacker."""
    if not (g.alphabet == s.alphabet == h.alphabet):
        raise AutomatonError("plant, supervisor and damage automaton must share one alphabet")
    cc.check(g.alphabet)
    ac.check(g.alphabet, cc)
    report = validate_supervisor(s, cc)
    if not report:
        raise ValidationError("supervisor violates its control constraint", report)
    if not is_complete(h):
        h = complete_with_sink(h)
    if eavesdrop:
        bt = bipartize_attacked(s, cc, ac)
        sup, halt = bt.automaton, bt.halt
    else:
        sup = build_attacked_supervisor(s, cc, ac)
        halt = halt_name(s.states)
    mon, beliefs = monitor_with_beliefs(g, s, cc)
    return g, sup, mon, h, halt, beliefs


def _close_loop(components, a, ac, eavesdrop, gamma_visible):
    g, sup, mon, h, halt, beliefs = components
    report = validate_attacker(a, ac, eavesdrop=eavesdrop, gamma_visible=gamma_visible)
    if not report:
        raise ValidationError("attacker violates its attack constraint", report)
    if a.alphabet != sup.alphabet:
        raise AutomatonError("attacker alphabet must match the (bipartite) supervisor's alphabet")
    wm = h.marked
    loop, parts = compose(g, sup, mon, a, h, marked=lambda c: c[4] in wm)
    bad = frozenset(
        n for n, (q, x, d, y, w) in parts.items() if (x == halt or not beliefs[d]) and w not in wm
    )
    return loop, bad


def attacked_loop(g: Automaton, s: Automaton, a: Automaton, h: Automaton, cc: ControlConstraint,
                  ac: AttackConstraint, eavesdrop: bool = False,
                  gamma_visible: bool = True) -> tuple[Automaton, frozenset]:
    """The attacked closed loop with damage tracking, and its covertness-violating states."""
    return _close_loop(_loop_components(g, s, h, cc, ac, eavesdrop), a, ac, eavesdrop, gamma_visible)


def _judge(loop, bad, goal) -> bool:
    if shortest_trace(loop, bad) is not None:
        return False
    if Goal(goal) is Goal.REACHABLE:
        return marked_nonempty(loop)
    return is_nonblocking(loop)[0]


def check_covert(g, s, a, h, cc, ac, eavesdrop=False, gamma_visible=True) -> CovertResult:
    """Covert iff no detected-without-damage state is reachable; otherwise a shortest witness."""
    loop, bad = attacked_loop(g, s, a, h, cc, ac, eavesdrop, gamma_visible)
    trace = shortest_trace(loop, bad)
    return CovertResult(trace is None, trace)


def check_damage_nonblocking(g, s, a, h, cc, ac, eavesdrop=False, gamma_visible=True) -> bool:
    # covertness is checked separately by check_covert
    loop, _ = attacked_loop(g, s, a, h, cc, ac, eavesdrop, gamma_visible)
    return is_nonblocking(loop)[0]


def check_damage_reachable(g, s, a, h, cc, ac, eavesdrop=False, gamma_visible=True) -> bool:
    loop, _ = attacked_loop(g, s, a, h, cc, ac, eavesdrop, gamma_visible)
    return marked_nonempty(loop)


def check_attacker(g, s, a, h, cc, ac, goal, eavesdrop=False, gamma_visible=True) -> tuple[bool, list | None]:
    """Covertness plus the goal; returns (success, covertness witness or None)."""
    loop, bad = attacked_loop(g, s, a, h, cc, ac, eavesdrop, gamma_visible)
    witness = shortest_trace(loop, bad)
    if witness is not None:
        return False, witness
    return _judge(loop, bad, goal), None


RESILIENT, VULNERABLE, INDETERMINATE = "resilient", "vulnerable", "indeterminate"


@dataclass
class ResilienceResult:
    status: str
    attacker: Automaton | None
    report: dict


def verify_resilience(g, s, h, cc, ac, goal=Goal.REACHABLE, eavesdrop=False, **kwargs) -> ResilienceResult:
    """A supervisor is resilient when no successful covert attacker exists."""
    result = synthesize(g, s, h, cc, ac, goal=goal, eavesdrop=eavesdrop, **kwargs)
    status = {Verdict.EXISTS: VULNERABLE, Verdict.NONE: RESILIENT}.get(result.verdict, INDETERMINATE)
    report = dict(result.report, status=status)
    return ResilienceResult(status, result.attacker, report)


# brute-force oracle -----------------------------------------------------------


def brute_force_exists(g, s, h, cc, ac, goal=Goal.REACHABLE, eavesdrop=False, max_nodes: int = 12,
                       max_decisions: int = 16, history_depth: int = 0, gamma_visible: bool = True,
                       max_checks: int = 5_000) -> bool:
    """Enumerate every attacker of a bounded class and check each by definition.

    With ``history_depth == 0`` the class is all positional belief
    strategies: one decision per set of plant states consistent with the
    attacker's observations. With ``history_depth = k`` the attacker may
    instead key its decisions on the exact observation sequence for the
    first ``k`` observations, reverting to beliefs afterwards.

    Raises ``TooLargeToEnumerate`` when the instance exceeds the bounds.
    """
    tp = build_transformed_plant(g, s, h, cc, ac, eavesdrop=eavesdrop, elide_monitor="off")
    p = tp.automaton
    visible = ac.attacker_observable | (tp.gamma if gamma_visible else frozenset())
    invisible = p.alphabet - visible
    attackable = sorted(ac.attackable)
    decisions = [frozenset(c) for r in range(len(attackable) + 1) for c in itertools.combinations(attackable, r)]
    if len(decisions) > max_decisions:
        raise TooLargeToEnumerate(f"{len(decisions)} decisions exceed {max_decisions}")

    def on(ev, d):
        return ev not in ac.attackable or ev in d

    def closure(belief, d):
        seen = set(belief)
        stack = list(seen)
        while stack:
            st = stack.pop()
            for ev, dst in p.out(st).items():
                if ev in invisible and on(ev, d) and dst not in seen:
                    seen.add(dst)
                    stack.append(dst)
        return seen

    def moves(belief, d):
        cl = closure(belief, d)
        out = {}
        for ev in sorted(visible):
            if on(ev, d):
                img = frozenset(p.out(st)[ev] for st in cl if ev in p.out(st))
                if img:
                    out[ev] = img
        return out

    root = frozenset({p.initial})
    seen = {root}
    frontier = [root]
    while frontier:
        b = frontier.pop()
        for d in decisions:
            for nb in moves(b, d).values():
                if nb not in seen:
                    seen.add(nb)
                    if len(seen) > max_nodes:
                        raise TooLargeToEnumerate(f"more than {max_nodes} beliefs")
                    frontier.append(nb)

    def key(history, belief):
        return ("h", history) if len(history) < history_depth else ("b", belief)

    components = _loop_components(g, s, h, cc, ac, eavesdrop)
    root_key = key((), root)
    checks = 0

    def layout(assign):
        """Reachable attacker states under ``assign`` in BFS order, with their moves."""
        order = [root_key]
        info = {root_key: ((), root)}
        succ = {}
        i = 0
        while i < len(order):
            k = order[i]
            i += 1
            if k not in assign:
                continue
            history, belief = info[k]
            succ[k] = {}
            for ev, nb in moves(belief, assign[k]).items():
                nk = key(history + (ev,), nb)
                succ[k][ev] = nk
                if nk not in info:
                    info[nk] = (history + (ev,), nb)
                    order.append(nk)
        return order, succ, info

    def attacker(order, succ, assign):
        names = {k: f"y{i}" for i, k in enumerate(order)}
        transitions = {}
        for k in order:
            d = assign[k]
            for ev in p.alphabet:
                if on(ev, d):
                    nxt = succ[k].get(ev) if ev in visible else None
                    transitions[(names[k], ev)] = names[nxt] if nxt is not None else names[k]
        return Automaton(names.values(), p.alphabet, transitions, names[root_key], names.values(), "A")

    def search(assign):
        nonlocal checks
        order, succ, info = layout(assign)
        pending = [k for k in order if k not in assign]
        if not pending:
            checks += 1
            if checks > max_checks:
                raise TooLargeToEnumerate(f"more than {max_checks} candidate attackers")
            a = attacker(order, succ, assign)
            return _judge(*_close_loop(components, a, ac, eavesdrop, gamma_visible), goal)
        k = pending[0]
        belief = info[k][1]
        tried = set()
        for d in decisions:
            if closure(belief, d) & tp.bad:
                # the closure is reachable under any completion
                continue
            # decisions that execute the same attackable edges from the same
            # closure induce the same closed loop
            cl = frozenset(closure(belief, d))
            used = frozenset((st, ev) for st in cl for ev in d if ev in p.out(st))
            sig = (cl, used, tuple(sorted(moves(belief, d).items())))
            if sig in tried:
                continue
            tried.add(sig)
            assign[k] = d
            if search(assign):
                return True
            del assign[k]
        return False

    return search({})
