"""Attacked supervisor, supervisor-belief monitor and the transformed plant.

The transformed plant composes the plant, the enablement-attacked
supervisor, the monitor tracking the supervisor's belief over ``X x Q``
and the damage automaton. A synthesized attacker acts on it as an ordinary
partial-observation supervisor that must avoid ``bad`` states.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from types import MappingProxyType
from typing import Mapping, NamedTuple

from .automata import (
    Automaton,
    compose,
    complete_with_sink,
    fresh_name,
    is_complete,
    observer_with_beliefs,
)
from .bipartite import bipartize_attacked
from .constraints import AttackConstraint, ControlConstraint, validate_supervisor
from .errors import AutomatonError, ElisionError, InvariantViolation, ValidationError


class ElisionVerdict(str, enum.Enum):
    # No attackable event is hidden from the supervisor.
    NO_HIDDEN_ATTACKABLE = "by_theorem3"
    # Checked on the full product: the plant never leaves the monitor's image.
    MONITOR_NEVER_DESYNCED = "by_situation2"
    NOT_ELIDABLE = "not_elidable"


ELIDE_MODES = ("auto", "on", "off")


def halt_name(states) -> str:
    return fresh_name("x_halt", states)


def _require_valid_supervisor(s, cc):
    report = validate_supervisor(s, cc)
    if not report:
        raise ValidationError("supervisor violates its control constraint", report)


def build_attacked_supervisor(s: Automaton, cc: ControlConstraint, ac: AttackConstraint) -> Automaton:
    """Enablement-attacked supervisor with a fresh halting state.

    Attackable events left undefined by the supervisor become self-loops
    when unobservable and edges into the halting state when observable.
    """
    _require_valid_supervisor(s, cc)
    ac.check(s.alphabet, cc)
    halt = halt_name(s.states)
    transitions = dict(s.transitions)
    for x in sorted(s.states):
        for ev in sorted(ac.attackable):
            if not s.defined(x, ev):
                transitions[(x, ev)] = x if ev not in cc.observable else halt
    states = s.states | {halt}
    return Automaton(states, s.alphabet, transitions, s.initial, states, f"{s.name}^A" if s.name else "S^A")


def monitor_with_beliefs(g: Automaton, s: Automaton, cc: ControlConstraint) -> tuple[Automaton, dict]:
    """Monitor automaton plus, per state, its belief as ``(x, q)`` pairs."""
    _require_valid_supervisor(s, cc)
    loop, parts = compose(s, g)
    mon, beliefs = observer_with_beliefs(loop, cc.observable & loop.alphabet)
    pairs = {name: frozenset(parts[m] for m in members) for name, members in beliefs.items()}
    return mon.renamed("monitor"), pairs


def build_monitor(g: Automaton, s: Automaton, cc: ControlConstraint) -> Automaton:
    return monitor_with_beliefs(g, s, cc)[0]


def relax_damage_for_uncontrollables(h: Automaton, cc: ControlConstraint) -> Automaton:
    """Also mark every state that reaches a marked state by uncontrollable events alone."""
    uc = cc.uncontrollable(h.alphabet)
    pred = {w: set() for w in h.states}
    for (src, ev), dst in h.transitions.items():
        if ev in uc:
            pred[dst].add(src)
    marked = set(h.marked)
    stack = list(marked)
    while stack:
        w = stack.pop()
        for p in pred[w]:
            if p not in marked:
                marked.add(p)
                stack.append(p)
    return h.with_marked(marked)


class PlantRole(NamedTuple):
    """Components of a transformed-plant state; ``belief`` is None when the monitor is elided."""

    q: str
    x: str
    belief: frozenset | None
    w: str


@dataclass(frozen=True, eq=False)
class TransformedPlant:
    automaton: Automaton
    bad: frozenset
    roles: Mapping
    halt: str
    eavesdrop: bool
    elided: bool
    elision: str
    gamma: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "roles", MappingProxyType(dict(self.roles)))

    @property
    def marked(self) -> frozenset:
        return self.automaton.marked

    @property
    def sigma(self) -> frozenset:
        return self.automaton.alphabet - self.gamma


def _check_alphabets(g, s, h):
    if not (g.alphabet == s.alphabet == h.alphabet):
        raise AutomatonError("plant, supervisor and damage automaton must share one alphabet")


def _compose_plant(g, s, h, cc, ac, eavesdrop, with_monitor, elision) -> TransformedPlant:
    if eavesdrop:
        bt = bipartize_attacked(s, cc, ac)
        sup, halt, base = bt.automaton, bt.halt, bt.base
        gamma = bt.gamma
    else:
        sup = build_attacked_supervisor(s, cc, ac)
        halt = halt_name(s.states)
        base = {x: x for x in s.states}
        gamma = frozenset()
    wm = h.marked
    if with_monitor:
        mon, beliefs = monitor_with_beliefs(g, s, cc)
        automaton, parts = compose(g, sup, mon, h, marked=lambda c: c[3] in wm)
        roles = {n: PlantRole(c[0], c[1], beliefs[c[2]], c[3]) for n, c in parts.items()}
    else:
        automaton, parts = compose(g, sup, h, marked=lambda c: c[2] in wm)
        roles = {n: PlantRole(c[0], c[1], None, c[2]) for n, c in parts.items()}
    bad = set()
    for n, r in roles.items():
        detected = r.x == halt or (r.belief is not None and not r.belief)
        if detected and r.w not in wm:
            bad.add(n)
        if r.belief:
            # the supervisor always knows its own state
            if {x for x, _ in r.belief} != {base[r.x]}:
                raise InvariantViolation(f"monitor belief of {n} disagrees with supervisor state {r.x}")
    automaton = automaton.renamed("P")
    return TransformedPlant(automaton, frozenset(bad), roles, halt, eavesdrop, not with_monitor, elision, gamma)


def _prepare(g, s, h, cc, ac):
    _check_alphabets(g, s, h)
    cc.check(g.alphabet)
    ac.check(g.alphabet, cc)
    _require_valid_supervisor(s, cc)
    return h if is_complete(h) else complete_with_sink(h)


def monitor_elidable(g: Automaton, s: Automaton, h: Automaton, cc: ControlConstraint,
                     ac: AttackConstraint) -> ElisionVerdict:
    """Decide whether the monitor component can be dropped from the transformed plant."""
    h = _prepare(g, s, h, cc, ac)
    if not (cc.unobservable(g.alphabet) & ac.attackable):
        return ElisionVerdict.NO_HIDDEN_ATTACKABLE
    full = _compose_plant(g, s, h, cc, ac, False, True, ElisionVerdict.NOT_ELIDABLE.value)
    p = full.automaton
    for n in sorted(p.states):
        r = full.roles[n]
        if not r.belief:
            continue
        image = {q for _, q in r.belief}
        for ev in p.out(n):
            if ev in cc.observable and not any(g.defined(q, ev) for q in image):
                return ElisionVerdict.NOT_ELIDABLE
    return ElisionVerdict.MONITOR_NEVER_DESYNCED


def build_transformed_plant(g: Automaton, s: Automaton, h: Automaton, cc: ControlConstraint,
                            ac: AttackConstraint, eavesdrop: bool = False,
                            elide_monitor: str = "auto") -> TransformedPlant:
    """Compose plant, attacked supervisor, monitor and damage automaton.

    ``elide_monitor``: ``"auto"`` drops the monitor whenever that is sound,
    ``"on"`` insists on dropping it (``ElisionError`` if unsound), ``"off"``
    always keeps it. An incomplete ``h`` is completed with an unmarked sink.
    """
    if elide_monitor not in ELIDE_MODES:
        raise ValueError(f"elide_monitor must be one of {ELIDE_MODES}, got {elide_monitor!r}")
    h = _prepare(g, s, h, cc, ac)
    if elide_monitor == "off":
        return _compose_plant(g, s, h, cc, ac, eavesdrop, True, "off")
    verdict = monitor_elidable(g, s, h, cc, ac)
    if verdict is ElisionVerdict.NOT_ELIDABLE:
        if elide_monitor == "on":
            raise ElisionError("monitor cannot be elided: an observable event can leave the monitor's image")
        return _compose_plant(g, s, h, cc, ac, eavesdrop, True, verdict.value)
    return _compose_plant(g, s, h, cc, ac, eavesdrop, False, verdict.value)


def plant_to_json(tp: TransformedPlant) -> str:
    roles = {}
    for n in sorted(tp.roles):
        r = tp.roles[n]
        roles[n] = {
            "q": r.q,
            "x": r.x,
            "belief": None if r.belief is None else sorted([x, q] for x, q in r.belief),
            "w": r.w,
        }
    return tp.automaton.to_json(bad=sorted(tp.bad), elision=tp.elision, eavesdrop=tp.eavesdrop, roles=roles)

