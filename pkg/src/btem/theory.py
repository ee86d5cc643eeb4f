"""Recovery-guarantee condition checker and theoretical domain boundaries.

Evaluates the constants and the four sufficient conditions under which
the two-round fit provably lands within epsilon*q of the oracle mean,
plus the three standalone technical conditions used by the supporting
concentration arguments.  All checks report value, bound, and slack so
callers can see how close a parameter set is to the guaranteed regime.
"""

import dataclasses
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

from .em import initial_cluster_count
from .errors import NonpositiveB, ParameterError

__all__ = [
    "TheoryParams",
    "ConditionCheck",
    "ConditionReport",
    "BoundaryPoint",
    "separation_rate",
    "deviation_cap",
    "recovery_conditions",
    "technical_conditions",
    "domain_boundary",
]

_INT_FIELDS = ("n", "m", "k")


@dataclass(frozen=True)
class TheoryParams:
    """Parameter set the guarantee is stated over."""

    n: int
    m: int
    k: int
    q: float
    c: float
    w_min: float
    delta: float = 0.1
    epsilon: float = 0.1

    def __post_init__(self):
        for name in _INT_FIELDS:
            v = getattr(self, name)
            if v != int(v) or v < 1:
                raise ParameterError(f"{name} must be a positive integer")
        if not 0.0 < self.q < 0.5:
            raise ParameterError("noise level must lie in (0, 1/2)")
        if not 0.0 < self.c <= 1.0:
            raise ParameterError("separation must lie in (0, 1]")
        if not 0.0 < self.w_min <= 1.0:
            raise ParameterError("smallest weight must lie in (0, 1]")
        for name in ("delta", "epsilon"):
            if not 0.0 < getattr(self, name) < 1.0:
                raise ParameterError(f"{name} must lie in (0, 1)")


@dataclass(frozen=True)
class ConditionCheck:
    name: str
    satisfied: bool
    value: float
    bound: float
    slack: float  # value minus bound; positive means satisfied with room


def _jsonable(x):
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    return x


@dataclass(frozen=True)
class ConditionReport:
    conditions: tuple
    satisfied: bool
    init_count: int
    weight_threshold: float
    reason: Optional[str] = None

    def as_dict(self):
        return {
            "satisfied": self.satisfied,
            "init_count": self.init_count,
            "weight_threshold": self.weight_threshold,
            "reason": self.reason,
            "conditions": [
                {
                    "name": c.name,
                    "satisfied": c.satisfied,
                    "value": _jsonable(c.value),
                    "bound": _jsonable(c.bound),
                    "slack": _jsonable(c.slack),
                }
                for c in self.conditions
            ],
        }


def separation_rate(q):
    """Exponential rate constant governing misclassification mass:
    (1/2)(1-2q) * ln(1 / ((1-q)(4q+sqrt(q)))).

    Positive only while (1-q)(4q+sqrt(q)) < 1, roughly q < 0.2007;
    beyond that the guarantee machinery does not apply.
    """
    if not 0.0 < q < 0.5:
        raise ParameterError("noise level must lie in (0, 1/2)")
    inner = (1.0 - q) * (4.0 * q + math.sqrt(q))
    if inner >= 1.0:
        raise NonpositiveB(f"noise level {q} too large for a positive rate")
    return -0.5 * (1.0 - 2.0 * q) * math.log(inner)


def deviation_cap(q, c, l, n):
    """Relative-deviation cap used by the dimension condition.

    Three-way minimum; the third term can go negative when the
    separation is too small against the noise, which callers must check.
    """
    s = 1.0 - 2.0 * q
    rq = math.sqrt(q)
    second = (c * s * s / 2.0) / (c * s * s + 2.0 * (1.0 - q) * (q + rq))
    third_num = 3.0 * c * s / 4.0 - 2.0 * q - 4.0 * math.sqrt(6.0 * q * l / n)
    third = third_num / (c * s + q + rq)
    return min(0.25, second, third)


def _init_count_check(p):
    raw = (4.0 / p.w_min) * math.log(2.0 / (p.delta * p.w_min))
    l, w_threshold = initial_cluster_count(p.w_min, p.delta)
    # satisfied by construction: the fit derives l from the same formula
    return ConditionCheck("init-count", True, float(l), raw, l - raw), l, w_threshold


def _sample_size_bound(p, l):
    return max(8.0 * l,
               16.0 * math.log(p.n),
               (8.0 / p.w_min) * math.log(12.0 * p.k / p.delta))


def _separation_bound(p, l, B):
    s = 1.0 - 2.0 * p.q
    first = (4.0 / (p.n * B)) * math.log(5.0 * p.n / (p.epsilon * p.w_min))
    second = (max(3.0 * s, 2.0) / (3.0 * s)) * (
        4.0 * p.q + 8.0 * math.sqrt(6.0 * p.q * l / p.n))
    third = math.log(16.0 * l / min(6.0 * p.n * p.q, 1.0)) / (p.n * B * s)
    return max(first, second, third)


def _dimension_bound(p, l):
    E = deviation_cap(p.q, p.c, l, p.n)
    if E <= 0.0:
        return math.inf
    first = (3.0 / (min(p.c, 0.5) * E * E)) * math.log(
        12.0 * (p.m + 1) ** 2 / p.delta)
    return max(first, 6.0 * p.k / p.delta)


def recovery_conditions(p):
    """Check the four sufficient conditions of the recovery guarantee.

    Returns a ConditionReport; when the rate constant is non-positive the
    noise-dependent conditions are unsatisfiable and the report carries a
    reason instead of finite bounds.
    """
    c1, l, w_threshold = _init_count_check(p)
    m_bound = _sample_size_bound(p, l)
    c2 = ConditionCheck("sample-size", p.m >= m_bound, float(p.m), m_bound,
                        p.m - m_bound)
    reason = None
    try:
        B = separation_rate(p.q)
    except NonpositiveB as exc:
        reason = str(exc)
        c3 = ConditionCheck("separation", False, p.c, math.inf, -math.inf)
        c4 = ConditionCheck("dimension", False, float(p.n), math.inf, -math.inf)
    else:
        c_bound = _separation_bound(p, l, B)
        c3 = ConditionCheck("separation", p.c > c_bound, p.c, c_bound,
                            p.c - c_bound)
        n_bound = _dimension_bound(p, l)
        c4 = ConditionCheck("dimension", p.n > n_bound, float(p.n), n_bound,
                            p.n - n_bound)
    conditions = (c1, c2, c3, c4)
    return ConditionReport(conditions, all(c.satisfied for c in conditions),
                           l, w_threshold, reason)


def technical_conditions(p):
    """The three standalone technical conditions (a subset of the
    machinery behind the main guarantee), reported the same way."""
    l, w_threshold = initial_cluster_count(p.w_min, p.delta)
    s = 1.0 - 2.0 * p.q
    reason = None
    try:
        B = separation_rate(p.q)
    except NonpositiveB as exc:
        reason = str(exc)
        t1 = ConditionCheck("separation-mass", False, p.n * p.c, math.inf,
                            -math.inf)
    else:
        bound1 = math.log(16.0 * l / min(6.0 * p.n * p.q, 1.0)) / (B * s)
        t1 = ConditionCheck("separation-mass", p.n * p.c > bound1,
                            p.n * p.c, bound1, p.n * p.c - bound1)
    bound2 = max(16.0 * math.log(p.n), 8.0 * l)
    t2 = ConditionCheck("sample-size", p.m > bound2, float(p.m), bound2,
                        p.m - bound2)
    bound3 = max(1.0, 2.0 / (3.0 * s)) * (
        4.0 * p.q + 8.0 * math.sqrt(6.0 * p.q * l / p.n))
    t3 = ConditionCheck("separation", p.c > bound3, p.c, bound3, p.c - bound3)
    conditions = (t1, t2, t3)
    return ConditionReport(conditions, all(c.satisfied for c in conditions),
                           l, w_threshold, reason)


class BoundaryPoint(NamedTuple):
    value: float  # axis-1 grid value
    threshold: Optional[float]  # smallest satisfying axis-2 value, or None


def _with_axis(params, name, value):
    if name in _INT_FIELDS:
        if value != int(value):
            raise ParameterError(f"{name} grid values must be integers")
        value = int(value)
    return dataclasses.replace(params, **{name: value})


def domain_boundary(free_axes, grid, fixed, include_technical=False):
    """Trace the guaranteed-domain boundary over a 2-axis grid.

    For each value of the first axis, scan the second axis upward and
    report the smallest grid value where all conditions hold (None when
    none does).  The scan is exhaustive, not bisection: the separation
    condition is not monotone in every parameter, so no ordering of the
    satisfied set is assumed.

    Parameters
    ----------
    free_axes : (str, str)
        Names of the two scanned TheoryParams fields.
    grid : (sequence, sequence)
        Strictly ascending grid values for each axis.
    fixed : TheoryParams
        Values for every other field.
    include_technical : bool
        Also require the technical conditions.

    Returns
    -------
    list of BoundaryPoint
    """
    name1, name2 = free_axes
    values1, values2 = grid
    names = {f.name for f in dataclasses.fields(TheoryParams)}
    if name1 not in names or name2 not in names or name1 == name2:
        raise ParameterError(f"free axes must be two distinct fields, "
                             f"got {(name1, name2)}")
    for vals in (values1, values2):
        if len(vals) == 0 or any(b <= a for a, b in zip(vals, vals[1:])):
            raise ParameterError("grid values must be strictly ascending")

    out = []
    for v1 in values1:
        partial = _with_axis(fixed, name1, v1)
        found = None
        for v2 in values2:
            p = _with_axis(partial, name2, v2)
            ok = recovery_conditions(p).satisfied
            if ok and include_technical:
                ok = technical_conditions(p).satisfied
            if ok:
                found = v2
                break
        out.append(BoundaryPoint(v1, found))
    return out
