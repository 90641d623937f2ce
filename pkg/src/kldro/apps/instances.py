"""JSON instance files for the two applications.

Numbers may be JSON numbers or exact rationals written as strings ``"p/q"``.

Newsvendor::

    {"problem": "newsvendor",
     "costs": {"c": 1, "c_b": 2, "c_h": 1},
     "demand": {"support": [5], "probs": [1]},
     "epsilon": 0.3}                      # or "theta": 0.1 (scaled by max_kl)

Facility location (``t`` may replace ``locations``; ``demands`` and the
robustness level are optional and only needed to solve)::

    {"problem": "ufl",
     "costs": {"f": [10, 5, 10]},
     "locations": {"customers": ["1/36", ...], "facilities": ["1/6", "1/2", "5/6"]},
     "demands": [{"support": [...], "probs": [...]}, ...],
     "epsilons": [...]}                   # or "theta": 0.05

Either kind accepts an optional ``"constraints"`` list of extra first-stage
rows ``{"coeffs": [...], "sense": "<=" | ">=" | "==", "rhs": r}``.

The bundled ``line_ufl.json`` holds the twelve-customer line instance.
"""
from __future__ import annotations

import json
from fractions import Fraction
from importlib import resources
from pathlib import Path

import numpy as np

from ..kl import EmpiricalDistribution, max_kl
from ..robust import LinearConstraint
from .newsvendor import NewsvendorInstance
from .ufl import UflInstance, build_line_ufl_instance

__all__ = [
    "InstanceError",
    "parse_number",
    "load_instance",
    "instance_from_dict",
    "load_ufl_skeleton",
    "ufl_to_dict",
    "newsvendor_to_dict",
    "LINE_UFL_FILE",
]

LINE_UFL_FILE = "line_ufl.json"


class InstanceError(ValueError):
    pass


def parse_number(v, where: str) -> Fraction:
    if isinstance(v, bool):
        raise InstanceError(f"{where}: expected a number, got a boolean")
    try:
        if isinstance(v, str):
            return Fraction(v.strip())
        if isinstance(v, (int, float)):
            return Fraction(v)
    except (ValueError, ZeroDivisionError):
        pass
    raise InstanceError(f"{where}: expected a number or 'p/q' string, got {v!r}")


def _floats(values, where):
    if not isinstance(values, list):
        raise InstanceError(f"{where}: expected a list")
    return np.array([float(parse_number(v, f"{where}[{k}]")) for k, v in enumerate(values)])


def _field(data, key, where):
    if not isinstance(data, dict) or key not in data:
        raise InstanceError(f"{where}: missing field '{key}'")
    return data[key]


def _distribution(data, where) -> EmpiricalDistribution:
    support = _floats(_field(data, "support", where), f"{where}.support")
    probs = _floats(_field(data, "probs", where), f"{where}.probs")
    try:
        return EmpiricalDistribution(support, probs)
    except ValueError as err:
        raise InstanceError(f"{where}: {err}") from None


def _constraints(data, n):
    rows = data.get("constraints", [])
    if not isinstance(rows, list):
        raise InstanceError("constraints: expected a list")
    out = []
    for k, row in enumerate(rows):
        where = f"constraints[{k}]"
        coeffs = _floats(_field(row, "coeffs", where), f"{where}.coeffs")
        if coeffs.size != n:
            raise InstanceError(f"{where}.coeffs: expected {n} entries, got {coeffs.size}")
        rhs = float(parse_number(_field(row, "rhs", where), f"{where}.rhs"))
        try:
            out.append(LinearConstraint(coeffs, _field(row, "sense", where), rhs))
        except ValueError as err:
            raise InstanceError(f"{where}.sense: {err}") from None
    return tuple(out)


def _level(data, dist, where):
    if "epsilon" in data and "theta" in data:
        raise InstanceError(f"{where}: give either epsilon or theta, not both")
    if "theta" in data:
        return float(parse_number(data["theta"], f"{where}.theta")) * max_kl(dist)
    return float(parse_number(data.get("epsilon", 0), f"{where}.epsilon"))


def instance_from_dict(data: dict):
    kind = _field(data, "problem", "instance")
    costs = _field(data, "costs", "instance")
    try:
        if kind == "newsvendor":
            demand = _distribution(_field(data, "demand", "instance"), "demand")
            vals = {k: float(parse_number(_field(costs, k, "costs"), f"costs.{k}")) for k in ("c", "c_b", "c_h")}
            return NewsvendorInstance(demand=demand, epsilon=_level(data, demand, "instance"),
                                      constraints=_constraints(data, 1), **vals)
        if kind == "ufl":
            return _ufl_from_dict(data, costs)
    except InstanceError:
        raise
    except ValueError as err:
        raise InstanceError(f"instance: {err}") from None
    raise InstanceError(f"instance.problem: expected 'newsvendor' or 'ufl', got {kind!r}")


def _ufl_from_dict(data, costs) -> UflInstance:
    f = _floats(_field(costs, "f", "costs"), "costs.f")
    cust = fac = None
    if "t" in data:
        rows = data["t"]
        if not isinstance(rows, list) or not rows:
            raise InstanceError("t: expected a nonempty list of rows")
        t = np.array([_floats(r, f"t[{i}]") for i, r in enumerate(rows)])
    else:
        loc = _field(data, "locations", "instance")
        cust = tuple(parse_number(v, f"locations.customers[{k}]")
                     for k, v in enumerate(_field(loc, "customers", "locations")))
        fac = tuple(parse_number(v, f"locations.facilities[{k}]")
                    for k, v in enumerate(_field(loc, "facilities", "locations")))
        t = np.array([[float(abs(a - b)) for b in fac] for a in cust])
    inst = UflInstance(f, t, customer_locations=cust, facility_locations=fac,
                       constraints=_constraints(data, f.size))
    if "demands" not in data:
        return inst
    demands = [_distribution(d, f"demands[{i}]") for i, d in enumerate(data["demands"])]
    if "theta" in data:
        theta = float(parse_number(data["theta"], "theta"))
        eps = [theta * max_kl(d) for d in demands]
    elif "epsilons" in data:
        eps = list(_floats(data["epsilons"], "epsilons"))
    else:
        eps = [0.0] * len(demands)
    return inst.with_demands(demands, eps)


def load_instance(path):
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as err:
        raise InstanceError(f"{path}: line {err.lineno} column {err.colno}: {err.msg}") from None
    try:
        return instance_from_dict(data)
    except InstanceError as err:
        raise InstanceError(f"{path}: {err}") from None


def load_ufl_skeleton(source: str = "line") -> UflInstance:
    if source == "line":
        return build_line_ufl_instance()
    inst = load_instance(source)
    if not isinstance(inst, UflInstance):
        raise InstanceError(f"{source}: not a facility location instance")
    return inst


def _num(x) -> object:
    if isinstance(x, Fraction):
        return str(x) if x.denominator != 1 else int(x)
    return float(x)


def _dist_dict(d: EmpiricalDistribution) -> dict:
    return {"support": [float(v) for v in d.support], "probs": [float(v) for v in d.probs]}


def _constraint_dicts(cons) -> list:
    return [{"coeffs": list(c.coeffs), "sense": c.sense, "rhs": c.rhs} for c in cons]


def ufl_to_dict(inst: UflInstance) -> dict:
    out = {"problem": "ufl", "costs": {"f": [float(v) for v in inst.f]}}
    if inst.customer_locations is not None:
        out["locations"] = {
            "customers": [_num(v) for v in inst.customer_locations],
            "facilities": [_num(v) for v in inst.facility_locations],
        }
    else:
        out["t"] = inst.t.tolist()
    if inst.demands:
        out["demands"] = [_dist_dict(d) for d in inst.demands]
        out["epsilons"] = [float(e) for e in inst.epsilons]
    if inst.constraints:
        out["constraints"] = _constraint_dicts(inst.constraints)
    return out


def newsvendor_to_dict(inst: NewsvendorInstance) -> dict:
    out = {
        "problem": "newsvendor",
        "costs": {"c": inst.c, "c_b": inst.c_b, "c_h": inst.c_h},
        "demand": _dist_dict(inst.demand),
        "epsilon": inst.epsilon,
    }
    if inst.constraints:
        out["constraints"] = _constraint_dicts(inst.constraints)
    return out


def line_ufl_text() -> str:
    return resources.files("kldro.apps").joinpath(LINE_UFL_FILE).read_text()
