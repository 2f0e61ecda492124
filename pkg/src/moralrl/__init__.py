"""Reinforcement learning with blame derived from actual causation.

Structural causal models (:mod:`moralrl.scm`, :mod:`moralrl.dsl`), actual
cause search (:mod:`moralrl.causes`), time-to-event blame estimators
(:mod:`moralrl.blame`), agents and the camping environment, and an
experiment runner behind the ``moralrl`` command.
"""
from .causes import enumerate_actual_causes, find_witness, is_actual_cause
from .dsl import camping_model, load_model, parse_formula, parse_model
from .scm import CausalModel, PrimitiveEvent, evaluate, intervene, satisfies

__version__ = "0.1.0"

__all__ = [
    "CausalModel",
    "PrimitiveEvent",
    "camping_model",
    "enumerate_actual_causes",
    "evaluate",
    "find_witness",
    "intervene",
    "is_actual_cause",
    "load_model",
    "parse_formula",
    "parse_model",
    "satisfies",
]
