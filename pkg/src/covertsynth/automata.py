"""Deterministic partial automata and the generic operations on them.

States and events are plain strings. Composite states produced by
:func:`product` are named ``"(left,right)"`` and belief states produced by
:func:`observer` are named ``"{s1,s2,...}"`` with members sorted, so every
construction is deterministic and reruns are byte-identical.
"""
from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

from .errors import AutomatonError

EMPTY_BELIEF = "{}"


@dataclass(frozen=True, eq=False)
class Automaton:
    """A (partial) deterministic finite automaton.

    ``transitions`` maps ``(state, event)`` to the successor state. The
    instance is immutable; construction validates every reference.
    """

    states: frozenset
    alphabet: frozenset
    transitions: Mapping
    initial: str
    marked: frozenset = frozenset()
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "states", frozenset(self.states))
        object.__setattr__(self, "alphabet", frozenset(self.alphabet))
        object.__setattr__(self, "marked", frozenset(self.marked))
        object.__setattr__(self, "transitions", MappingProxyType(dict(self.transitions)))
        if self.initial not in self.states:
            raise AutomatonError(f"initial state {self.initial!r} is not a declared state")
        stray = self.marked - self.states
        if stray:
            raise AutomatonError(f"marked states not declared: {sorted(stray)}")
        for (src, event), dst in self.transitions.items():
            if src not in self.states or dst not in self.states:
                raise AutomatonError(f"transition ({src!r}, {event!r}, {dst!r}) uses an undeclared state")
            if event not in self.alphabet:
                raise AutomatonError(f"transition ({src!r}, {event!r}, {dst!r}) uses an undeclared event")

    def __eq__(self, other):
        if not isinstance(other, Automaton):
            return NotImplemented
        return (
            self.states == other.states
            and self.alphabet == other.alphabet
            and dict(self.transitions) == dict(other.transitions)
            and self.initial == other.initial
            and self.marked == other.marked
        )

    __hash__ = None

    @cached_property
    def _out(self) -> dict:
        out = {s: {} for s in self.states}
        for (src, event), dst in self.transitions.items():
            out[src][event] = dst
        return out

    def out(self, state: str) -> Mapping[str, str]:
        """Outgoing transitions of ``state`` as an ``event -> successor`` map."""
        return self._out[state]

    def step(self, state, event):
        return self._out[state].get(event)

    def defined(self, state, event) -> bool:
        return event in self._out[state]

    def sorted_events(self) -> list:
        return sorted(self.alphabet)

    def with_marked(self, marked) -> "Automaton":
        return Automaton(self.states, self.alphabet, self.transitions, self.initial, marked, self.name)

    def renamed(self, name: str) -> "Automaton":
        return Automaton(self.states, self.alphabet, self.transitions, self.initial, self.marked, name)

    # serialization ---------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "alphabet": sorted(self.alphabet),
            "states": sorted(self.states),
            "initial": self.initial,
            "marked": sorted(self.marked),
            "transitions": sorted([src, ev, dst] for (src, ev), dst in self.transitions.items()),
        }

    def to_json(self, **extra) -> str:
        payload = self.to_dict()
        payload.update(extra)
        return format_json(payload)

    @classmethod
    def from_dict(cls, data: Mapping) -> "Automaton":
        try:
            states = data["states"]
            alphabet = data["alphabet"]
            initial = data["initial"]
            raw = data["transitions"]
        except KeyError as exc:
            raise AutomatonError(f"missing key {exc.args[0]!r}") from None
        transitions = {}
        for triple in raw:
            if len(triple) != 3:
                raise AutomatonError(f"transition {triple!r} is not a [src, event, dst] triple")
            src, ev, dst = triple
            if (src, ev) in transitions:
                raise AutomatonError(f"duplicate transition for ({src!r}, {ev!r})")
            transitions[(src, ev)] = dst
        for ev in alphabet:
            if not isinstance(ev, str) or not ev:
                raise AutomatonError(f"event names must be non-empty strings, got {ev!r}")
        if len(set(alphabet)) != len(alphabet) or len(set(states)) != len(states):
            raise AutomatonError("duplicate state or event names")
        return cls(states, alphabet, transitions, initial, data.get("marked", []), data.get("name", ""))

    @classmethod
    def from_json(cls, text: str, source: str = "<string>") -> "Automaton":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise AutomatonError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
        try:
            return cls.from_dict(data)
        except AutomatonError as exc:
            raise AutomatonError(f"{source}: {exc}") from None


def format_json(payload: Mapping) -> str:
    """Stable, diff-friendly JSON: one line per transition or mapping entry."""
    lines = []
    for key, value in payload.items():
        head = f"  {json.dumps(key)}: "
        if isinstance(value, list) and value and all(isinstance(v, list) for v in value):
            body = ",\n".join("    " + json.dumps(v) for v in value)
            lines.append(head + "[\n" + body + "\n  ]")
        elif isinstance(value, dict) and value:
            body = ",\n".join(f"    {json.dumps(k)}: {json.dumps(v)}" for k, v in value.items())
            lines.append(head + "{\n" + body + "\n  }")
        else:
            lines.append(head + json.dumps(value))
    return "{\n" + ",\n".join(lines) + "\n}\n"


def load(path) -> Automaton:
    path = Path(path)
    return Automaton.from_json(path.read_text(), source=str(path))


def dump(automaton: Automaton, path, **extra) -> None:
    Path(path).write_text(automaton.to_json(**extra))


# naming ----------------------------------------------------------------------


def pair_name(parts: Sequence[str]) -> str:
    return "(" + ",".join(parts) + ")"


def belief_name(members: Iterable[str]) -> str:
    return "{" + ",".join(sorted(members)) + "}"


def fresh_name(base: str, taken) -> str:
    name = base
    while name in taken:
        name += "'"
    return name


def _register(names: dict, name: str, key) -> None:
    if names.setdefault(name, key) != key:
        raise AutomatonError(f"state name collision on {name!r}; avoid ',', '(', ')', '{{', '}}' in state names")


# operations ------------------------------------------------------------------


def compose(*automata: Automaton, marked=None) -> tuple[Automaton, dict]:
    """Reachable synchronous product of any number of automata.

    Returns the product and a map from each product state to the tuple of
    component states. An event is enabled iff every component whose
    alphabet contains it defines it. ``marked`` optionally overrides the
    default marking (all components marked) with a predicate on the
    component tuple.
    """
    if not automata:
        raise AutomatonError("compose needs at least one automaton")
    alphabet = frozenset().union(*(a.alphabet for a in automata))
    events = sorted(alphabet)
    owners = {ev: [i for i, a in enumerate(automata) if ev in a.alphabet] for ev in events}
    start = tuple(a.initial for a in automata)
    names: dict = {}
    parts = {}
    transitions = {}
    queue = deque([start])
    seen = {start}
    while queue:
        cur = queue.popleft()
        src = pair_name(cur)
        _register(names, src, cur)
        parts[src] = cur
        for ev in events:
            nxt = list(cur)
            for i in owners[ev]:
                dst = automata[i].step(cur[i], ev)
                if dst is None:
                    break
                nxt[i] = dst
            else:
                nxt = tuple(nxt)
                transitions[(src, ev)] = pair_name(nxt)
                if nxt not in seen:
                    seen.add(nxt)
                    queue.append(nxt)
    if marked is None:
        keep = {n for n, c in parts.items() if all(s in a.marked for s, a in zip(c, automata))}
    else:
        keep = {n for n, c in parts.items() if marked(c)}
    result = Automaton(parts.keys(), alphabet, transitions, pair_name(start), keep,
                       "||".join(a.name or "?" for a in automata))
    return result, parts


def product(a1: Automaton, a2: Automaton) -> Automaton:
    """Reachable part of ``a1 || a2``; shared events synchronize, private ones interleave."""
    return compose(a1, a2)[0]


def _check_states(a: Automaton, states) -> frozenset:
    states = frozenset(states)
    unknown = states - a.states
    if unknown:
        raise AutomatonError(f"unknown states {sorted(unknown)}")
    return states


def _check_events(a: Automaton, events) -> frozenset:
    events = frozenset(events)
    unknown = events - a.alphabet
    if unknown:
        raise AutomatonError(f"unknown events {sorted(unknown)}")
    return events


def unobservable_reach(a: Automaton, hidden, start) -> frozenset:
    """States reachable from ``start`` through strings over ``hidden`` only."""
    hidden = _check_events(a, hidden)
    reach = set(_check_states(a, start))
    stack = list(reach)
    while stack:
        s = stack.pop()
        for ev, dst in a.out(s).items():
            if ev in hidden and dst not in reach:
                reach.add(dst)
                stack.append(dst)
    return frozenset(reach)


def observer_with_beliefs(a: Automaton, visible) -> tuple[Automaton, dict]:
    """Observer automaton together with the belief (state set) behind each state."""
    visible = _check_events(a, visible)
    hidden = a.alphabet - visible
    events = sorted(a.alphabet)
    start = unobservable_reach(a, hidden, {a.initial})
    names: dict = {}
    beliefs = {}
    transitions = {}
    queue = deque([start])
    seen = {start}
    while queue:
        cur = queue.popleft()
        src = belief_name(cur)
        _register(names, src, cur)
        beliefs[src] = cur
        if not cur:
            continue
        for ev in events:
            if ev not in visible:
                transitions[(src, ev)] = src
                continue
            img = {a.step(s, ev) for s in cur} - {None}
            nxt = unobservable_reach(a, hidden, img)
            transitions[(src, ev)] = belief_name(nxt)
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    obs = Automaton(beliefs.keys(), a.alphabet, transitions, belief_name(start), beliefs.keys(),
                    f"P({a.name})" if a.name else "observer")
    return obs, beliefs


def observer(a: Automaton, visible) -> Automaton:
    """Natural-projection observer of ``a`` over its full alphabet.

    Visible events move between unobservable-reach closed beliefs (possibly
    into the empty belief ``"{}"``, which has no outgoing transitions);
    hidden events self-loop. Only reachable beliefs are built.
    """
    return observer_with_beliefs(a, visible)[0]


def reachable_states(a: Automaton) -> frozenset:
    seen = {a.initial}
    stack = [a.initial]
    while stack:
        s = stack.pop()
        for dst in a.out(s).values():
            if dst not in seen:
                seen.add(dst)
                stack.append(dst)
    return frozenset(seen)


def coreachable_states(a: Automaton, targets=None) -> frozenset:
    """States from which ``targets`` (default: marked states) can be reached."""
    targets = a.marked if targets is None else frozenset(targets)
    pred = {s: set() for s in a.states}
    for (src, _), dst in a.transitions.items():
        pred[dst].add(src)
    seen = set(targets)
    stack = list(seen)
    while stack:
        s = stack.pop()
        for p in pred[s]:
            if p not in seen:
                seen.add(p)
                stack.append(p)
    return frozenset(seen)


def reachable_part(a: Automaton) -> Automaton:
    keep = reachable_states(a)
    transitions = {k: v for k, v in a.transitions.items() if k[0] in keep}
    return Automaton(keep, a.alphabet, transitions, a.initial, a.marked & keep, a.name)


def is_nonblocking(a: Automaton) -> tuple[bool, str | None]:
    """Whether every reachable state can reach a marked state.

    On failure the second item is the first offending state in sorted order.
    """
    bad = sorted(reachable_states(a) - coreachable_states(a))
    return (not bad, bad[0] if bad else None)


def marked_nonempty(a: Automaton) -> bool:
    return bool(reachable_states(a) & a.marked)


def is_complete(a: Automaton) -> bool:
    return all(len(a.out(s)) == len(a.alphabet) for s in a.states)


def complete_with_sink(a: Automaton, sink: str = "sink") -> Automaton:
    """Route every undefined ``(state, event)`` to a fresh unmarked sink."""
    sink = fresh_name(sink, a.states)
    states = a.states | {sink}
    transitions = dict(a.transitions)
    for s in states:
        for ev in a.alphabet:
            transitions.setdefault((s, ev), sink)
    return Automaton(states, a.alphabet, transitions, a.initial, a.marked, a.name)


def project_string(s: Sequence[str], visible) -> list:
    visible = frozenset(visible)
    return [ev for ev in s if ev in visible]


def shortest_trace(a: Automaton, targets) -> list | None:
    """Breadth-first shortest event sequence from the initial state into ``targets``."""
    targets = frozenset(targets)
    parent = {a.initial: None}
    queue = deque([a.initial])
    while queue:
        s = queue.popleft()
        if s in targets:
            trace = []
            while parent[s] is not None:
                s, ev = parent[s]
                trace.append(ev)
            return trace[::-1]
        for ev in sorted(a.out(s)):
            dst = a.out(s)[ev]
            if dst not in parent:
                parent[dst] = (s, ev)
                queue.append(dst)
    return None


def canonical_form(a: Automaton) -> tuple:
    """Relabeling-invariant signature of the reachable part.

    Two automata have equal canonical forms iff their reachable parts are
    isomorphic (same alphabet, same marking pattern).
    """
    index = {a.initial: 0}
    order = [a.initial]
    i = 0
    while i < len(order):
        s = order[i]
        i += 1
        for ev in sorted(a.out(s)):
            dst = a.out(s)[ev]
            if dst not in index:
                index[dst] = len(order)
                order.append(dst)
    edges = tuple(sorted((index[s], ev, index[d]) for s in order for ev, d in a.out(s).items()))
    marks = tuple(sorted(index[s] for s in order if s in a.marked))
    return (tuple(sorted(a.alphabet)), len(order), edges, marks)


def isomorphic(a: Automaton, b: Automaton) -> bool:
    return canonical_form(a) == canonical_form(b)


def universal(alphabet, name: str = "universal", state: str = "u0") -> Automaton:
    """One marked state with a self-loop on every event."""
    alphabet = frozenset(alphabet)
    return Automaton({state}, alphabet, {(state, ev): state for ev in alphabet}, state, {state}, name)
