import pytest
from hypothesis import given, settings

from covertsynth.automata import Automaton, universal
from covertsynth.constraints import AttackConstraint
from covertsynth.errors import ValidationError
from covertsynth.synthesis import Goal, synthesize
from covertsynth.verify import (
    INDETERMINATE,
    RESILIENT,
    VULNERABLE,
    TooLargeToEnumerate,
    attacked_loop,
    brute_force_exists,
    check_attacker,
    check_covert,
    check_damage_nonblocking,
    check_damage_reachable,
    verify_resilience,
)

from instances import random_instance, toy
from strategies import seeds


def supervisor_mimic(inst):
    """Attacker enabling attackable events exactly where the supervisor does.
    Needs every supervisor-observable event to be attacker-observable."""
    s, ac = inst.s, inst.ac
    transitions = {}
    for x in s.states:
        for ev in s.alphabet:
            if ev in ac.attackable and not s.defined(x, ev):
                continue
            transitions[(x, ev)] = s.step(x, ev) if ev in ac.attacker_observable and s.defined(x, ev) else x
    return Automaton(s.states, s.alphabet, transitions, s.initial, s.states, "mimic")


def test_mimic_attacker_is_covert_on_toy1():
    t = toy("toy1")
    mimic = supervisor_mimic(t)
    assert check_covert(*t.args[:2], mimic, *t.args[2:]).covert


def test_toy1_synthesized_attacker_passes_every_check():
    t = toy("toy1")
    a = synthesize(*t.args).attacker
    assert check_covert(*t.args[:2], a, *t.args[2:]) == (True, None)
    assert check_damage_nonblocking(*t.args[:2], a, *t.args[2:])
    assert check_damage_reachable(*t.args[:2], a, *t.args[2:])


def test_hand_built_toy1_attacker():
    t = toy("toy1")
    # disable b until a is observed, then enable it
    a = Automaton({"y0", "y1"}, {"a", "b"}, {("y0", "a"): "y1", ("y1", "a"): "y1", ("y1", "b"): "y1"}, "y0",
                  {"y0", "y1"})
    assert check_attacker(*t.args[:2], a, *t.args[2:], "nonblocking") == (True, None)


def test_toy3_always_enable_b_is_caught():
    t = toy("toy3")
    a = universal(t.g.alphabet)
    result = check_covert(*t.args[:2], a, *t.args[2:])
    assert not result.covert
    assert result.witness == ["a", "b"]
    assert check_attacker(*t.args[:2], a, *t.args[2:], "reachable") == (False, ["a", "b"])


def test_toy2_trivial_attacker_fails_both_goals():
    t = toy("toy2")
    a = universal(t.g.alphabet)
    assert check_covert(*t.args[:2], a, *t.args[2:]).covert
    assert not check_damage_nonblocking(*t.args[:2], a, *t.args[2:])
    assert not check_damage_reachable(*t.args[:2], a, *t.args[2:])


def test_everything_damaging_accepts_covert_attackers():
    t = toy("toy1")
    h = t.h.with_marked(t.h.states)
    a = universal(t.g.alphabet)
    assert check_damage_nonblocking(t.g, t.s, a, h, t.cc, t.ac)
    assert check_damage_reachable(t.g, t.s, a, h, t.cc, t.ac)


def test_eavesdropping_witness_includes_commands():
    t = toy("toy3")
    a = universal(synthesize(*toy("toy1").args, eavesdrop=True).attacker.alphabet)
    result = check_covert(*t.args[:2], a, *t.args[2:], eavesdrop=True)
    assert result.witness == ["CMD{a}", "a", "CMD{}", "b"]


def test_invalid_attacker_rejected():
    t = toy("toy1")
    a = Automaton({"y0"}, {"a", "b"}, {("y0", "b"): "y0"}, "y0")
    with pytest.raises(ValidationError):
        check_covert(*t.args[:2], a, *t.args[2:])


def test_attacked_loop_marks_by_damage_only():
    t = toy("toy1")
    loop, bad = attacked_loop(*t.args[:2], universal(t.g.alphabet), *t.args[2:])
    assert len(loop.marked) == 1 and not bad


@pytest.mark.parametrize("goal", ["reachable", "nonblocking"])
def test_resilience_examples(goal):
    assert verify_resilience(*toy("toy2").args, goal=goal).status == RESILIENT
    vulnerable = verify_resilience(*toy("toy1").args, goal=goal)
    assert vulnerable.status == VULNERABLE and vulnerable.attacker is not None
    assert verify_resilience(*toy("toy1").args, goal=goal, game_cap=1).status == INDETERMINATE


def test_nothing_attackable_and_no_damage_is_resilient():
    t = toy("toy3")
    ac = AttackConstraint({"a", "b"}, set())
    assert verify_resilience(t.g, t.s, t.h, t.cc, ac).status == RESILIENT


# brute-force oracle ----------------------------------------------------------


def test_brute_force_examples():
    assert brute_force_exists(*toy("toy1").args, goal="reachable")
    assert not brute_force_exists(*toy("toy2").args, goal="reachable")
    assert not brute_force_exists(*toy("toy2").args, goal="nonblocking")


@given(seeds)
@settings(max_examples=40, deadline=None)
def test_brute_force_without_attack_surface_checks_unattacked_loop(seed):
    inst = random_instance(seed)
    g, s, h, cc, _ = inst.args
    ac = AttackConstraint(inst.ac.attacker_observable, frozenset())
    for goal in Goal:
        expected = check_attacker(g, s, universal(g.alphabet), h, cc, ac, goal)[0]
        assert brute_force_exists(g, s, h, cc, ac, goal, max_nodes=200) == expected


def test_brute_force_bounds():
    with pytest.raises(TooLargeToEnumerate):
        brute_force_exists(*toy("toy1").args, max_nodes=1)
    with pytest.raises(TooLargeToEnumerate):
        brute_force_exists(*toy("toy1").args, max_decisions=1)


@given(seeds)
@settings(max_examples=60, deadline=None)
def test_history_dependent_attackers_add_nothing(seed):
    # falsification attempt: attackers keyed on their first observations
    inst = random_instance(seed, max_q=3, max_x=3, max_w=2, max_events=3)
    for goal in Goal:
        for eavesdrop in (False, True):
            try:
                deep = brute_force_exists(*inst.args, goal=goal, eavesdrop=eavesdrop, history_depth=2)
            except TooLargeToEnumerate:
                continue
            assert deep == synthesize(*inst.args, goal=goal, eavesdrop=eavesdrop).exists
