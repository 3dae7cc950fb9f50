"""Synthesis and verification of covert actuator attackers on supervised
discrete-event systems."""
from .attack import (
    ElisionVerdict,
    TransformedPlant,
    build_attacked_supervisor,
    build_monitor,
    build_transformed_plant,
    monitor_elidable,
    relax_damage_for_uncontrollables,
)
from .automata import Automaton, observer, product, unobservable_reach
from .bipartite import bipartize, bipartize_attacked, gamma_alphabet
from .constraints import AttackConstraint, ControlConstraint, validate_attacker, validate_supervisor
from .synthesis import Goal, Verdict, synthesize
from .verify import check_covert, check_damage_nonblocking, check_damage_reachable, verify_resilience

__version__ = "0.1.0"
