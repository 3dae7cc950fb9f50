"""Attacker synthesis as partial-observation supervisor synthesis.

The attacker is treated as a supervisor over the transformed plant whose
controllable events are the attackable ones and whose observable events
are the attacker-observable ones (plus command events when eavesdropping).
The arena is a belief game: a control node is the set of plant states
consistent with what the attacker has seen, a decision fixes which
attackable events are enabled until the next observation.
"""
from __future__ import annotations

import enum
import itertools
import logging
import os
import time
from collections import deque
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping

from .attack import TransformedPlant, build_transformed_plant
from .automata import Automaton, compose, is_nonblocking
from .constraints import AttackConstraint, ControlConstraint
from .errors import ResourceLimitExceeded

log = logging.getLogger(__name__)

DEFAULT_GAME_CAP = 10**6
DEFAULT_SEARCH_CAP = 10**7
NODE_CAP_ENV = "COVERTSYNTH_NODE_CAP"


class Goal(str, enum.Enum):
    REACHABLE = "reachable"
    NONBLOCKING = "nonblocking"


class Verdict(str, enum.Enum):
    EXISTS = "exists"
    NONE = "none"
    INDETERMINATE = "indeterminate"


def resource_caps() -> tuple[int, int]:
    """(game node cap, search node cap), both overridden by ``COVERTSYNTH_NODE_CAP``."""
    raw = os.environ.get(NODE_CAP_ENV)
    if raw:
        cap = int(raw)
        return cap, cap
    return DEFAULT_GAME_CAP, DEFAULT_SEARCH_CAP


def decision_key(d) -> tuple:
    return (-len(d), tuple(sorted(d)))


def enumerate_decisions(ac: AttackConstraint) -> list:
    """Every subset of attackable events to enable, most permissive first.

    Unattackable events (command events included) are always enabled, so a
    decision is identified by the attackable events it enables.
    """
    events = sorted(ac.attackable)
    subsets = [frozenset(c) for r in range(len(events) + 1) for c in itertools.combinations(events, r)]
    return sorted(subsets, key=decision_key)


@dataclass(frozen=True)
class DecisionEdge:
    """Result of committing to one decision at a control node.

    ``closure`` is the observation node: every plant state reachable by
    enabled events the attacker cannot see. ``successors`` maps each
    visible enabled event executable from the closure to the next control node.
    """

    closure: frozenset
    successors: Mapping


@dataclass(frozen=True, eq=False)
class InformationGame:
    beliefs: tuple
    decisions: tuple
    edges: Mapping
    alphabet: frozenset
    visible: frozenset
    attackable: frozenset
    allowed: Mapping
    initial: int = 0

    def __post_init__(self):
        object.__setattr__(self, "edges", MappingProxyType(dict(self.edges)))
        object.__setattr__(self, "allowed", MappingProxyType({n: tuple(d) for n, d in self.allowed.items()}))

    @property
    def empty(self) -> bool:
        return not self.allowed.get(self.initial)

    def edge(self, node: int, decision: int) -> DecisionEdge:
        return self.edges[(node, decision)]

    def enabled(self, event: str, decision: int) -> bool:
        return event not in self.attackable or event in self.decisions[decision]


def _closure(p: Automaton, start, invisible, attackable, decision) -> frozenset:
    seen = set(start)
    stack = list(seen)
    while stack:
        s = stack.pop()
        for ev, dst in p.out(s).items():
            if ev in invisible and (ev not in attackable or ev in decision) and dst not in seen:
                seen.add(dst)
                stack.append(dst)
    return frozenset(seen)


def build_game(tp: TransformedPlant, ac: AttackConstraint, gamma_visible: bool = True,
               node_cap: int | None = None) -> InformationGame:
    """Reachable belief game over ``tp`` under every decision sequence."""
    if node_cap is None:
        node_cap = resource_caps()[0]
    p = tp.automaton
    visible = ac.attacker_observable | (tp.gamma if gamma_visible else frozenset())
    invisible = p.alphabet - visible
    attackable = ac.attackable
    visible_sorted = sorted(visible)
    decisions = tuple(enumerate_decisions(ac))
    root = frozenset({p.initial})
    index = {root: 0}
    beliefs = [root]
    edges = {}
    i = 0
    while i < len(beliefs):
        belief = beliefs[i]
        for k, d in enumerate(decisions):
            closure = _closure(p, belief, invisible, attackable, d)
            successors = {}
            for ev in visible_sorted:
                if ev in attackable and ev not in d:
                    continue
                img = frozenset(p.out(s)[ev] for s in closure if ev in p.out(s))
                if not img:
                    continue
                if img not in index:
                    if len(beliefs) >= node_cap:
                        raise ResourceLimitExceeded(f"belief game exceeds {node_cap} nodes")
                    index[img] = len(beliefs)
                    beliefs.append(img)
                successors[ev] = index[img]
            edges[(i, k)] = DecisionEdge(closure, MappingProxyType(successors))
        i += 1
    allowed = {n: tuple(range(len(decisions))) for n in range(len(beliefs))}
    return InformationGame(tuple(beliefs), decisions, edges, p.alphabet, visible, attackable, allowed)


def prune_safety(game: InformationGame, tp: TransformedPlant) -> InformationGame:
    """Greatest fixpoint of decisions that can never lead into ``tp.bad``.

    Any choice among the surviving decisions, node by node, yields a closed
    loop that avoids the bad states.
    """
    allowed = {
        n: [d for d in ds if not (game.edge(n, d).closure & tp.bad)]
        for n, ds in game.allowed.items()
    }
    changed = True
    while changed:
        changed = False
        for n, ds in allowed.items():
            keep = [d for d in ds if all(allowed.get(m) for m in game.edge(n, d).successors.values())]
            if len(keep) != len(ds):
                allowed[n] = keep
                changed = True
    allowed = {n: ds for n, ds in allowed.items() if ds}
    return InformationGame(game.beliefs, game.decisions, game.edges, game.alphabet, game.visible,
                           game.attackable, allowed, game.initial)


@dataclass(frozen=True, eq=False)
class AttackerStrategy:
    """Decision per control node, on the nodes reachable under the strategy itself."""

    game: InformationGame
    choice: Mapping
    order: tuple = field(default=())

    def decision(self, node: int) -> frozenset:
        return self.game.decisions[self.choice[node]]


def _reachable_order(game: InformationGame, choice: Mapping) -> list:
    order = [game.initial]
    seen = {game.initial}
    i = 0
    while i < len(order):
        n = order[i]
        i += 1
        if n not in choice:
            continue
        edge = game.edge(n, choice[n])
        for ev in sorted(edge.successors):
            m = edge.successors[ev]
            if m not in seen:
                seen.add(m)
                order.append(m)
    return order


def complete_strategy(game: InformationGame, fixed: Mapping) -> AttackerStrategy:
    """Strategy taking ``fixed`` decisions where given and the first allowed one elsewhere."""
    choice = {}
    order = [game.initial]
    seen = {game.initial}
    i = 0
    while i < len(order):
        n = order[i]
        i += 1
        choice[n] = fixed[n] if n in fixed else game.allowed[n][0]
        edge = game.edge(n, choice[n])
        for ev in sorted(edge.successors):
            m = edge.successors[ev]
            if m not in seen:
                seen.add(m)
                order.append(m)
    return AttackerStrategy(game, MappingProxyType(choice), tuple(order))


def check_damage_reachable_exists(safe_game: InformationGame, tp: TransformedPlant) -> AttackerStrategy | None:
    """Breadth-first search of the safe game for a closure containing a marked state."""
    if safe_game.empty:
        return None
    parent = {safe_game.initial: None}
    queue = deque([safe_game.initial])
    while queue:
        n = queue.popleft()
        for d in safe_game.allowed[n]:
            edge = safe_game.edge(n, d)
            if edge.closure & tp.marked:
                fixed = {n: d}
                step = parent[n]
                while step is not None:
                    prev, prev_d = step
                    fixed[prev] = prev_d
                    step = parent[prev]
                return complete_strategy(safe_game, fixed)
            for ev in sorted(edge.successors):
                m = edge.successors[ev]
                if m not in parent:
                    parent[m] = (n, d)
                    queue.append(m)
    return None


def _viable(game: InformationGame, assign: Mapping, tp: TransformedPlant) -> bool:
    """Whether every closed-loop state on assigned nodes can still reach a
    marked state, or leave into an unassigned node whose choice is open."""
    p = tp.automaton
    invisible = game.alphabet - game.visible
    pred: dict = {}
    goal = set()
    states = set()
    for n, d in assign.items():
        edge = game.edge(n, d)
        for s in edge.closure:
            states.add((n, s))
            if s in tp.marked:
                goal.add((n, s))
            for ev, dst in p.out(s).items():
                if not game.enabled(ev, d):
                    continue
                if ev in invisible:
                    tgt = (n, dst)
                else:
                    m = edge.successors[ev]
                    tgt = (m, dst)
                    if m not in assign:
                        goal.add((n, s))
                        continue
                pred.setdefault(tgt, set()).add((n, s))
    seen = set(goal)
    stack = list(goal)
    while stack:
        v = stack.pop()
        for u in pred.get(v, ()):
            if u not in seen:
                seen.add(u)
                stack.append(u)
    return len(seen) == len(states)


def _distinct_decisions(game: InformationGame, allowed: Mapping) -> dict:
    """Keep the first decision of each group with identical closure and successors.

    The union of a group stays in the group and decisions come most
    permissive first, so the kept one enables a superset of the others'
    edges over the same states and can only help coreachability.
    """
    out = {}
    for n, ds in allowed.items():
        seen = set()
        keep = []
        for d in ds:
            edge = game.edge(n, d)
            sig = (edge.closure, tuple(sorted(edge.successors.items())))
            if sig not in seen:
                seen.add(sig)
                keep.append(d)
        out[n] = keep
    return out


def _prune_doomed(game: InformationGame, tp: TransformedPlant) -> InformationGame:
    """Drop decisions whose closure holds a state that cannot reach a marked
    state even if every later node picks its most helpful decision."""
    p = tp.automaton
    invisible = game.alphabet - game.visible
    allowed = _distinct_decisions(game, game.allowed)
    while True:
        pred: dict = {}
        goal = []
        for n, ds in allowed.items():
            for d in ds:
                edge = game.edge(n, d)
                for s in edge.closure:
                    c = (n, d, s)
                    if s in tp.marked:
                        goal.append(c)
                    for ev, dst in p.out(s).items():
                        if not game.enabled(ev, d):
                            continue
                        if ev in invisible:
                            pred.setdefault((n, d, dst), []).append(c)
                        else:
                            m = edge.successors[ev]
                            for d2 in allowed.get(m, ()):
                                pred.setdefault((m, d2, dst), []).append(c)
        alive = set(goal)
        stack = list(goal)
        while stack:
            v = stack.pop()
            for u in pred.get(v, ()):
                if u not in alive:
                    alive.add(u)
                    stack.append(u)
        new = {}
        for n, ds in allowed.items():
            keep = [d for d in ds if all((n, d, s) in alive for s in game.edge(n, d).closure)]
            if keep:
                new[n] = keep
        changed = True
        while changed:
            changed = False
            for n, ds in list(new.items()):
                keep = [d for d in ds if all(m in new for m in game.edge(n, d).successors.values())]
                if len(keep) != len(ds):
                    changed = True
                    if keep:
                        new[n] = keep
                    else:
                        del new[n]
        if new == allowed:
            break
        allowed = new
    return InformationGame(game.beliefs, game.decisions, game.edges, game.alphabet, game.visible,
                           game.attackable, allowed, game.initial)


def closed_loop(strategy: AttackerStrategy, tp: TransformedPlant) -> Automaton:
    attacker = extract_attacker(strategy)
    loop, _ = compose(attacker, tp.automaton, marked=lambda c: c[1] in tp.marked)
    return loop


def check_damage_nonblocking_exists(safe_game: InformationGame, tp: TransformedPlant,
                                    search_cap: int | None = None) -> AttackerStrategy | None:
    """Exhaustive backtracking over positional strategies on the safe game.

    Decisions that cannot help, or whose closure cannot reach a marked
    state under any continuation, are dropped first. Nodes are assigned in
    breadth-first order of reachability under the partial assignment;
    decisions are tried most permissive first. Partial
    assignments whose fixed part already blocks are cut. A complete
    assignment is accepted iff the attacker composed with the plant is
    nonblocking.
    """
    if search_cap is None:
        search_cap = resource_caps()[1]
    if safe_game.empty:
        return None
    game = _prune_doomed(safe_game, tp)
    if game.empty:
        return None
    assign: dict = {}
    stack: list = []
    visited = 0

    def next_unassigned():
        for n in _reachable_order(game, assign):
            if n not in assign:
                return n
        return None

    def backtrack() -> bool:
        while stack:
            frame = stack[-1]
            frame[1] += 1
            n, i = frame
            if i < len(game.allowed[n]):
                assign[n] = game.allowed[n][i]
                return True
            del assign[n]
            stack.pop()
        return False

    n = next_unassigned()
    stack.append([n, 0])
    assign[n] = game.allowed[n][0]
    while True:
        visited += 1
        if visited > search_cap:
            raise ResourceLimitExceeded(f"strategy search exceeds {search_cap} nodes")
        if _viable(game, assign, tp):
            n = next_unassigned()
            if n is not None:
                stack.append([n, 0])
                assign[n] = game.allowed[n][0]
                continue
            strategy = complete_strategy(game, assign)
            if is_nonblocking(closed_loop(strategy, tp))[0]:
                return strategy
        if not backtrack():
            return None


def extract_attacker(strategy: AttackerStrategy, name: str = "A") -> Automaton:
    """Attacker automaton with one state per control node of ``strategy``.

    Enabled events the attacker cannot see self-loop; enabled visible
    events move to the successor node, or self-loop when the plant cannot
    execute them there. Disabled attackable events stay undefined.
    """
    game = strategy.game
    names = {n: f"y{i}" for i, n in enumerate(strategy.order)}
    events = sorted(game.alphabet)
    transitions = {}
    for n in strategy.order:
        d = strategy.choice[n]
        edge = game.edge(n, d)
        src = names[n]
        for ev in events:
            if not game.enabled(ev, d):
                continue
            if ev in game.visible and ev in edge.successors:
                transitions[(src, ev)] = names[edge.successors[ev]]
            else:
                transitions[(src, ev)] = src
    states = names.values()
    return Automaton(states, game.alphabet, transitions, names[game.initial], states, name)


@dataclass
class SynthesisResult:
    verdict: Verdict
    attacker: Automaton | None
    report: dict
    plant: TransformedPlant | None = None
    strategy: AttackerStrategy | None = None
    timings: dict = field(default_factory=dict)

    @property
    def exists(self) -> bool:
        return self.verdict is Verdict.EXISTS


def synthesize(g: Automaton, s: Automaton, h: Automaton, cc: ControlConstraint, ac: AttackConstraint,
               goal: Goal | str = Goal.REACHABLE, eavesdrop: bool = False, elide: str = "auto",
               gamma_visible: bool = True, game_cap: int | None = None,
               search_cap: int | None = None) -> SynthesisResult:
    """Decide whether a covert attacker achieving ``goal`` exists and build one.

    ``gamma_visible=False`` hides command events from an eavesdropping
    attacker, which must reproduce the non-eavesdropping verdicts.
    Resource caps turn into an ``indeterminate`` verdict, never ``none``.
    """
    goal = Goal(goal)
    caps = resource_caps()
    game_cap = caps[0] if game_cap is None else game_cap
    search_cap = caps[1] if search_cap is None else search_cap
    timings = {}
    t0 = time.perf_counter()
    tp = build_transformed_plant(g, s, h, cc, ac, eavesdrop=eavesdrop, elide_monitor=elide)
    timings["transform"] = time.perf_counter() - t0
    report = {
        "verdict": None,
        "goal": goal.value,
        "eavesdrop": eavesdrop,
        "elision": tp.elision,
        "sizes": {"plant": len(g.states), "transformed": len(tp.automaton.states), "game_nodes": None},
        "attacker_file": None,
    }
    strategy = None
    try:
        t0 = time.perf_counter()
        game = build_game(tp, ac, gamma_visible=gamma_visible, node_cap=game_cap)
        report["sizes"]["game_nodes"] = len(game.beliefs)
        safe = prune_safety(game, tp)
        timings["game"] = time.perf_counter() - t0
        t0 = time.perf_counter()
        if goal is Goal.REACHABLE:
            strategy = check_damage_reachable_exists(safe, tp)
        else:
            strategy = check_damage_nonblocking_exists(safe, tp, search_cap=search_cap)
        timings["search"] = time.perf_counter() - t0
    except ResourceLimitExceeded as exc:
        log.warning("synthesis indeterminate: %s", exc)
        report["verdict"] = Verdict.INDETERMINATE.value
        report["reason"] = str(exc)
        return SynthesisResult(Verdict.INDETERMINATE, None, report, tp, None, timings)
    verdict = Verdict.EXISTS if strategy is not None else Verdict.NONE
    report["verdict"] = verdict.value
    attacker = extract_attacker(strategy) if strategy is not None else None
    log.debug("synthesis %s in %s", verdict.value, timings)
    return SynthesisResult(verdict, attacker, report, tp, strategy, timings)
