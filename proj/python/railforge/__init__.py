"""Python interface to the railforge solver core.

All functions accept and return plain dicts/lists; the heavy lifting happens
in the `_railforge` extension, which exchanges JSON text.
"""

import json as _json

from . import _railforge as _core

__all__ = [
    "validate",
    "solve",
    "oracle",
    "evaluate",
    "generate",
    "sufficient_services",
    "load_instance",
]


def load_instance(path):
    """Read an instance file and return it as a dict."""
    with open(path, "r", encoding="utf-8") as handle:
        return _json.load(handle)


def _dump(instance):
    return instance if isinstance(instance, str) else _json.dumps(instance)


def validate(instance):
    """Diagnostics for an instance dict; empty list means valid."""
    return _json.loads(_core.validate(_dump(instance)))


def solve(instance, seed=0, config=None, multistart=1):
    """Run the simulated-annealing solver; returns the solution document."""
    config_json = _json.dumps(config) if config else ""
    return _json.loads(_core.solve(_dump(instance), seed, config_json, multistart))


def oracle(instance, max_designs=1_000_000, max_assignments=1_000_000, config=None):
    """Exhaustive optimum for tiny instances; returns a solution document."""
    config_json = _json.dumps(config) if config else ""
    return _json.loads(_core.oracle(_dump(instance), max_designs, max_assignments, config_json))


def evaluate(instance, design, config=None):
    """Route a hand-built design and return its energy breakdown and flows."""
    config_json = _json.dumps(config) if config else ""
    return _json.loads(_core.evaluate(_dump(instance), _dump(design), config_json))


def generate(yards=6, line_density=0.15, demand_density=0.5, capacity_factor=1.5, seed=1):
    """Random connected instance as a dict; deterministic per seed."""
    return _json.loads(_core.generate(yards, line_density, demand_density, capacity_factor, seed))


def sufficient_services(instance):
    """Ordered pairs whose demand alone justifies a direct service."""
    return [tuple(p) for p in _json.loads(_core.sufficient_services(_dump(instance)))]
