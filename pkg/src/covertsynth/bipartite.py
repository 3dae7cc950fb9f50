"""Supervisor bipartization: control commands reified as observable events.

Each supervisor state ``x`` is split into a command state ``x_com``, whose
only move emits the command event ``CMD{...}`` naming the enabled set, and
a reaction state ``x`` that follows the plant's events.
"""
from __future__ import annotations

from dataclasses import dataclass
from types import MappingProxyType
from typing import Mapping

from .automata import Automaton, fresh_name
from .constraints import GAMMA_PREFIX, AttackConstraint, ControlConstraint, validate_supervisor
from .errors import AutomatonError, ValidationError

COMMAND, REACTION, HALT = "command", "reaction", "halt"


def gamma_event(enabled) -> str:
    return GAMMA_PREFIX + "{" + ",".join(sorted(enabled)) + "}"


def enabled_set(s: Automaton, x: str) -> frozenset:
    return frozenset(s.out(x))


def _check_reserved(s: Automaton) -> None:
    clash = sorted(e for e in s.alphabet if e.startswith(GAMMA_PREFIX))
    if clash:
        raise AutomatonError(f"event names {clash} use the reserved prefix {GAMMA_PREFIX!r}")


def gamma_alphabet(s: Automaton) -> frozenset:
    """Distinct command events over all supervisor states."""
    _check_reserved(s)
    return frozenset(gamma_event(enabled_set(s, x)) for x in s.states)


@dataclass(frozen=True, eq=False)
class BipartiteSupervisor:
    automaton: Automaton
    kinds: Mapping
    base: Mapping
    halt: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "kinds", MappingProxyType(dict(self.kinds)))
        object.__setattr__(self, "base", MappingProxyType(dict(self.base)))

    @property
    def command_states(self) -> frozenset:
        return frozenset(s for s, k in self.kinds.items() if k == COMMAND)

    @property
    def reaction_states(self) -> frozenset:
        return frozenset(s for s, k in self.kinds.items() if k == REACTION)

    @property
    def gamma(self) -> frozenset:
        return frozenset(e for e in self.automaton.alphabet if e.startswith(GAMMA_PREFIX))

    def to_json(self) -> str:
        return self.automaton.to_json(state_kinds={s: self.kinds[s] for s in sorted(self.kinds)})


def _command_names(s: Automaton) -> dict:
    suffix = "_com"
    while any(x + suffix in s.states for x in s.states):
        suffix = "_" + suffix
    return {x: x + suffix for x in s.states}


def bipartize(s: Automaton, cc: ControlConstraint) -> BipartiteSupervisor:
    report = validate_supervisor(s, cc)
    if not report:
        raise ValidationError("supervisor violates its control constraint", report)
    _check_reserved(s)
    com = _command_names(s)
    transitions = {}
    for x in s.states:
        transitions[(com[x], gamma_event(enabled_set(s, x)))] = x
        for ev, dst in s.out(x).items():
            # unobservable moves are self-loops by observability
            transitions[(x, ev)] = dst if ev not in cc.observable else com[dst]
    states = set(s.states) | set(com.values())
    alphabet = s.alphabet | gamma_alphabet(s)
    kinds = {x: REACTION for x in s.states} | {c: COMMAND for c in com.values()}
    base = {x: x for x in s.states} | {c: x for x, c in com.items()}
    bt = Automaton(states, alphabet, transitions, com[s.initial], states, f"BT({s.name})" if s.name else "BT")
    return BipartiteSupervisor(bt, kinds, base)


def bipartize_attacked(s: Automaton, cc: ControlConstraint, ac: AttackConstraint) -> BipartiteSupervisor:
    """Enablement-attacked bipartite supervisor; command states stay untouched."""
    bt = bipartize(s, cc)
    ac.check(s.alphabet, cc)
    a = bt.automaton
    halt = fresh_name("x_halt", a.states)
    transitions = dict(a.transitions)
    for x in sorted(bt.reaction_states):
        for ev in sorted(ac.attackable):
            if a.defined(x, ev):
                continue
            transitions[(x, ev)] = x if ev not in cc.observable else halt
    states = a.states | {halt}
    attacked = Automaton(states, a.alphabet, transitions, a.initial, states, a.name + "^A")
    return BipartiteSupervisor(attacked, dict(bt.kinds) | {halt: HALT}, dict(bt.base) | {halt: None}, halt)


def merge_command_states(bt: BipartiteSupervisor) -> Automaton:
    """Quotient merging every ``x_com`` into ``x`` and erasing command events."""
    a = bt.automaton
    sigma = a.alphabet - bt.gamma

    def merged(state):
        b = bt.base[state]
        return state if b is None else b

    transitions = {}
    for (src, ev), dst in a.transitions.items():
        if ev in sigma:
            transitions[(merged(src), ev)] = merged(dst)
    states = {merged(x) for x in a.states}
    return Automaton(states, sigma, transitions, merged(a.initial), states, a.name)
