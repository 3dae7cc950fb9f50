"""Control and attack constraints, and the structural checks they impose."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .automata import Automaton
from .errors import AutomatonError, ConstraintError

GAMMA_PREFIX = "CMD"


def is_gamma(event: str) -> bool:
    return event.startswith(GAMMA_PREFIX + "{") and event.endswith("}")


@dataclass(frozen=True)
class ControlConstraint:
    """Supervisor's controllable and observable sub-alphabets."""

    controllable: frozenset
    observable: frozenset

    def __post_init__(self):
        object.__setattr__(self, "controllable", frozenset(self.controllable))
        object.__setattr__(self, "observable", frozenset(self.observable))

    def uncontrollable(self, alphabet) -> frozenset:
        return frozenset(alphabet) - self.controllable

    def unobservable(self, alphabet) -> frozenset:
        return frozenset(alphabet) - self.observable

    def check(self, alphabet) -> None:
        stray = (self.controllable | self.observable) - frozenset(alphabet)
        if stray:
            raise ConstraintError(f"control constraint mentions events outside the alphabet: {sorted(stray)}")


@dataclass(frozen=True)
class AttackConstraint:
    """Attacker's observable and attackable sub-alphabets."""

    attacker_observable: frozenset
    attackable: frozenset

    def __post_init__(self):
        object.__setattr__(self, "attacker_observable", frozenset(self.attacker_observable))
        object.__setattr__(self, "attackable", frozenset(self.attackable))

    def check(self, alphabet, cc: ControlConstraint | None = None) -> None:
        stray = (self.attacker_observable | self.attackable) - frozenset(alphabet)
        if stray:
            raise ConstraintError(f"attack constraint mentions events outside the alphabet: {sorted(stray)}")
        if cc is not None:
            if not self.attackable <= cc.controllable:
                extra = sorted(self.attackable - cc.controllable)
                raise ConstraintError(f"attackable events must be controllable: {extra}")
            if not self.attacker_observable <= cc.observable:
                extra = sorted(self.attacker_observable - cc.observable)
                raise ConstraintError(f"attacker-observable events must be supervisor-observable: {extra}")


def constraints_to_dict(cc: ControlConstraint, ac: AttackConstraint) -> dict:
    return {
        "controllable": sorted(cc.controllable),
        "observable": sorted(cc.observable),
        "attackable": sorted(ac.attackable),
        "attacker_observable": sorted(ac.attacker_observable),
    }


def constraints_from_dict(data) -> tuple[ControlConstraint, AttackConstraint]:
    try:
        cc = ControlConstraint(data["controllable"], data["observable"])
        ac = AttackConstraint(data.get("attacker_observable", []), data.get("attackable", []))
    except (KeyError, TypeError) as exc:
        raise AutomatonError(f"bad constraint file: {exc}") from None
    return cc, ac


def load_constraints(path) -> tuple[ControlConstraint, AttackConstraint]:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise AutomatonError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    try:
        return constraints_from_dict(data)
    except AutomatonError as exc:
        raise AutomatonError(f"{path}: {exc}") from None


@dataclass(frozen=True)
class ValidityReport:
    """Outcome of a structural check; ``violations`` holds ``(state, event, rule)``."""

    violations: tuple = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok

    def to_dict(self) -> dict:
        return {
            "valid": self.ok,
            "violations": [{"state": s, "event": e, "rule": r} for s, e, r in self.violations],
        }


def _check_rules(a: Automaton, must_define, self_loop_only, names) -> ValidityReport:
    bad = []
    for x in sorted(a.states):
        out = a.out(x)
        for ev in sorted(must_define):
            if ev not in out:
                bad.append((x, ev, names[0]))
        for ev in sorted(self_loop_only):
            if ev in out and out[ev] != x:
                bad.append((x, ev, names[1]))
    return ValidityReport(tuple(bad))


def validate_supervisor(s: Automaton, cc: ControlConstraint) -> ValidityReport:
    """Every uncontrollable event is defined everywhere and every defined
    unobservable event is a self-loop."""
    cc.check(s.alphabet)
    return _check_rules(s, cc.uncontrollable(s.alphabet), cc.unobservable(s.alphabet),
                        ("controllability", "observability"))


def validate_attacker(a: Automaton, ac: AttackConstraint, eavesdrop: bool = False,
                      gamma_visible: bool = True) -> ValidityReport:
    """Check an attacker against its attack constraint.

    With ``eavesdrop`` the alphabet may carry command events; they are
    unattackable and visible to the attacker unless ``gamma_visible`` is off.
    """
    gamma = frozenset(e for e in a.alphabet if is_gamma(e)) if eavesdrop else frozenset()
    sigma = a.alphabet - gamma
    ac.check(sigma)
    invisible = sigma - ac.attacker_observable
    if not gamma_visible:
        invisible |= gamma
    return _check_rules(a, a.alphabet - ac.attackable, invisible,
                        ("A-controllability", "A-observability"))
