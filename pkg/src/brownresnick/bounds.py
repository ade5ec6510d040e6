"""Closed-form approximation-error bounds for the five generators.

Every generator truncates a Poisson point process after k paths; the
probability that the truncated field differs from the exact one anywhere on
[-b, b] splits into three parts:

  * conditional  - error probability given the "good" events below,
  * low_event    - the running minimum C_k of the approximation is too low,
  * high_event   - the k-th point X_k is still too high.

Symbol conventions follow one canonical reading throughout: C means c(k),
x means x(k), and the window edge written o in some displays means b for
method 3 and v for method 4 (the only readings consistent with each
bound's own preconditions).  Each evaluator is a pure function of its
arguments and raises DomainError naming the violated precondition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import AsymmetricShifts, DomainError

_SQRT2 = math.sqrt(2.0)
_SQRT2PI = math.sqrt(2.0 * math.pi)
_SHIFT_TOL = 1e-9
_LATTICE_TOL = 1e-9


def std_normal_cdf(x: float) -> float:
    """Standard normal CDF via erfc; absolute error below 1e-12."""
    return 0.5 * math.erfc(-x / _SQRT2)


def _clip_probability(p: float) -> float:
    # lower bounds of probabilities outside [0, 1] carry no information
    return min(max(p, 0.0), 1.0)


def excursion_bound(lam: float, t_u: float, t_o: float, C: float, x: float) -> float:
    """Bound for P(some point below x, its path exceeds C on [t_u, t_o]).

    Evaluates, for each side of the interval,

        lam * e^-C * (2|t| / (C - x)) * e^(|t|/2)
            * (1 - Phi((C - x - |t|) / sqrt(|t|))),

    with a side of zero length contributing 0.
    """
    if lam <= 0.0:
        raise DomainError(f"intensity must be > 0, got {lam}")
    if not (t_u <= 0.0 <= t_o):
        raise DomainError(f"need t_u <= 0 <= t_o, got t_u={t_u}, t_o={t_o}")
    if not C > x:
        raise DomainError(f"need C > x, got C={C}, x={x}")

    def one_sided(t_abs: float) -> float:
        if t_abs == 0.0:
            return 0.0
        tail = 1.0 - std_normal_cdf((C - x - t_abs) / math.sqrt(t_abs))
        return lam * math.exp(-C) * (2.0 * t_abs / (C - x)) * math.exp(t_abs / 2.0) * tail

    return one_sided(abs(t_u)) + one_sided(abs(t_o))


def _require_lattice(value: float, h: float, name: str) -> None:
    ratio = value / h
    if abs(ratio - round(ratio)) > _LATTICE_TOL * max(1.0, abs(ratio)):
        raise DomainError(f"{name}={value} must be an integer multiple of h={h}")


def block_bound(a1: float, h: float, L: float, C: float, sharp: bool = False) -> float:
    """Bound for paths from far-away blocks exceeding level C near their start.

    Blocks start at equidistant points a_1 < a_2 < ... with spacing h; each
    carries a unit-intensity Gumbel point stream, and the path is watched on
    a window of length L on the lattice h*Z.  The sharp variant trades a
    stricter threshold on a_1 for smaller constants.
    """
    if h <= 0.0:
        raise DomainError(f"need h > 0, got {h}")
    if L <= 0.0:
        raise DomainError(f"need L > 0, got {L}")
    _require_lattice(a1, h, "a1")
    _require_lattice(L, h, "L")
    if sharp:
        if not a1 > 16.0 + h:
            raise DomainError(f"sharp variant needs a1 > 16 + h, got a1={a1}, h={h}")
    else:
        if not a1 > 4.0 + h:
            raise DomainError(f"loose variant needs a1 > 4 + h, got a1={a1}, h={h}")

    s = math.sqrt(a1 - h)
    if sharp:
        t1 = math.exp(-s)
        t2 = (25.0 * L / 9.0) * math.sqrt(2.0 * L / math.pi) * math.exp(
            -((s - math.log(s)) ** 2) / (2.0 * L)
        )
        t3 = (8.0 / _SQRT2PI) * (1.0 + 2.0 / (s - 4.0)) * math.exp(-((s - 4.0) ** 2) / 8.0)
        return (2.0 * math.exp(-C) / h) * (t1 + t2 + t3)
    q = math.sqrt(max(a1 - h, 25.0))
    t1 = math.exp(-s / 2.0)
    t2 = (25.0 * L / 9.0) * math.sqrt(2.0 * L / math.pi) * math.exp(
        -((0.3 * s + 0.2 * q - math.log(q / 2.0)) ** 2) / (2.0 * L)
    )
    t3 = (1.0 / _SQRT2PI) * (1.0 + 1.0 / (s - 2.0)) * math.exp(-((s - 2.0) ** 2) / 8.0)
    return (8.0 * math.exp(-C) / h) * (t1 + t2 + t3)


@dataclass(frozen=True)
class ErrorBudget:
    """The three bound components and their sum for one method/parameter set."""

    method: int
    conditional: float
    low_event: float
    high_event: float
    params: dict = field(default_factory=dict)

    @property
    def total(self) -> float:
        return self.conditional + self.low_event + self.high_event

    @property
    def total_clamped(self) -> float:
        return min(self.total, 1.0)

    def as_dict(self) -> dict:
        return {
            "method": self.method,
            "conditional": self.conditional,
            "low_event": self.low_event,
            "high_event": self.high_event,
            "total": self.total,
            "total_clamped": self.total_clamped,
            "params": dict(self.params),
        }


def _log_falling_tail(log_rate: float, k: int, threshold: float) -> float:
    """exp(k' * log_rate terms) / (k-1)! style tails, evaluated in log space."""
    return math.exp(log_rate - math.lgamma(k)) * threshold


def _check_thresholds(c: float, x: float | None, k: int) -> None:
    if k < 1:
        raise DomainError(f"need k >= 1, got {k}")
    if x is None:
        if not c < 0.0:
            raise DomainError(f"need c(k) < 0, got c={c}")
    else:
        if not (x < c < 0.0):
            raise DomainError(f"need x(k) < c(k) < 0, got x={x}, c={c}")


def _mirrored_excursion(width: float, c: float, x: float) -> float:
    """Two-sided excursion bound over [-width, width] at unit intensity."""
    return excursion_bound(1.0, -width, width, c, x)


def _low_event_drifted(width: float, c: float) -> float:
    """1 - (1 - exp(-e^(-c/2))) * (Phi + e^(-c/2) (1 - Phi))^2 for a drifted
    minimum over a window of half-length ``width``."""
    s = math.sqrt(width)
    first = std_normal_cdf(-(c + width) / (2.0 * s))
    second = math.exp(-c / 2.0) * (1.0 - std_normal_cdf(-(c - width) / (2.0 * s)))
    lower = (1.0 - math.exp(-math.exp(-c / 2.0))) * _clip_probability(first + second) ** 2
    return 1.0 - _clip_probability(lower)


def _lattice_minimum_factor(b: float, p: float, c: float) -> float:
    """Shared lattice-minimum factor of the method-3/4 low-event bounds."""
    inner = (
        1.0
        - std_normal_cdf(-c / math.sqrt(8.0 * b) - math.sqrt(b / 2.0))
        - math.exp(-c / 2.0)
        * (1.0 - std_normal_cdf(-c / math.sqrt(8.0 * b) + math.sqrt(b / 2.0)))
    )
    return 1.0 - (4.0 / (1.0 - math.exp(-p / 2.0))) * inner**2


def _bound_method0(b: float, k: int, c: float, x: float) -> tuple[float, float, float]:
    conditional = _mirrored_excursion(b, c, x)
    low = 1.0 - (1.0 - math.exp(-math.exp(-c / 2.0))) * (
        2.0 * std_normal_cdf(-c / (2.0 * math.sqrt(b))) - 1.0
    ) ** 2
    high = _log_falling_tail(-(k - 1) * x, k, 1.0 - math.exp(-math.exp(-x)))
    return conditional, low, high


def _bound_method1(
    b: float, k: int, c: float, x: float, shifts: np.ndarray
) -> tuple[float, float, float]:
    h = np.sort(np.asarray(shifts, dtype=float))
    if h.size < 1:
        raise DomainError("method 1 needs at least one shift")
    if np.max(np.abs(h + h[::-1])) > _SHIFT_TOL * max(1.0, float(np.max(np.abs(h)))):
        raise AsymmetricShifts(
            "the shift set must be symmetric about 0 for the method-1 bound"
        )
    n = h.size
    width = b - float(h[0])
    if width <= 0.0:
        raise DomainError(f"need b - h_1 > 0, got {width}")
    conditional = _mirrored_excursion(width, c, x)
    low = _low_event_drifted(width, c)
    high = _log_falling_tail(
        (k + 1) * math.log(n) - (k - 1) * x, k, 1.0 - math.exp(-math.exp(-n * x))
    )
    return conditional, low, high


def _bound_method2(b: float, k: int, c: float, x: float, v: float) -> tuple[float, float, float]:
    if v <= 0.0:
        raise DomainError(f"need interval half-width v > 0, got {v}")
    # t_o = b - min I for the symmetric interval I = [-v, v]
    t_o = b + v
    conditional = _mirrored_excursion(t_o, c, x)
    low = _low_event_drifted(t_o, c)
    high = _log_falling_tail(-(k - 1) * x, k, 1.0 - math.exp(-math.exp(-x)))
    return conditional, low, high


def _bound_method3(
    b: float, p: float, j_max: int, k: int, c: float, sharp: bool
) -> tuple[float, float, float]:
    if p <= 0.0:
        raise DomainError(f"need p > 0, got {p}")
    _require_lattice(b, p, "b")
    if j_max < 1:
        raise DomainError(f"need j_max >= 1, got {j_max}")
    edge = p * j_max
    threshold = 16.0 if sharp else 4.0
    if not edge > b + threshold:
        raise DomainError(
            f"need p * j_max > b + {threshold:g}"
            f"{' (sharp)' if sharp else ''}, got p*j_max={edge}, b={b}"
        )
    # blocks beyond +/- j_max start at distance p*j_max - b + p from the
    # watched interval; both tails contribute one block_bound each
    conditional = 2.0 * block_bound(edge - b + p, p, 2.0 * b, c, sharp=sharp)
    first = 1.0 - math.exp(
        -((2.0 * b / p + 1.0) / 4.0)
        * math.exp(-c / 2.0)
        * (1.0 - math.exp(-p / 2.0)) ** 2
    )
    low = 1.0 - _clip_probability(first) * _clip_probability(_lattice_minimum_factor(b, p, c))
    high = _log_falling_tail(
        math.log(2.0 * j_max + 1.0) - (k - 1) * c, k, 1.0 - math.exp(-math.exp(-c))
    )
    return conditional, low, high


def _bound_method4(
    b: float, p: float, v: float, lambda_p: float, k: int, c: float, sharp: bool
) -> tuple[float, float, float]:
    if p <= 0.0:
        raise DomainError(f"need p > 0, got {p}")
    if lambda_p <= 0.0:
        raise DomainError(f"need lambda_p > 0, got {lambda_p}")
    _require_lattice(b, p, "b")
    _require_lattice(v, p, "v")
    threshold = 16.0 if sharp else 4.0
    if not v > b + threshold:
        raise DomainError(
            f"need v > b + {threshold:g}{' (sharp)' if sharp else ''}, got v={v}, b={b}"
        )
    pref = (1.0 - math.exp(-p / 2.0)) ** -2 * lambda_p
    if sharp:
        # as printed for this method: the middle term carries 1/(s - 4),
        # not the 2/(s - 4) of the generic sharp block bound
        s = math.sqrt(v - b)
        bracket = (
            math.exp(-s)
            + (8.0 / _SQRT2PI) * (1.0 + 1.0 / (s - 4.0)) * math.exp(-((s - 4.0) ** 2) / 8.0)
            + (100.0 * math.sqrt(b**3) / (9.0 * math.sqrt(math.pi)))
            * math.exp(-((s - math.log(s)) ** 2) / (4.0 * b))
        )
        conditional = 16.0 * math.exp(-c) * pref * bracket
    else:
        conditional = 8.0 * p * pref * block_bound(v - b + p, p, 2.0 * b, c, sharp=False)

    first = 1.0 - math.exp(-lambda_p * (2.0 * b + p) * math.exp(-c / 2.0))
    mid_tail = 1.0 - math.exp(-math.exp(-(v - b) * lambda_p * c))
    middle = 1.0 - _log_falling_tail(
        k * math.log(2.0 * (v - b) * lambda_p) - (k - 1) * c / 2.0, k, mid_tail
    )
    low = 1.0 - (
        _clip_probability(first)
        * _clip_probability(middle)
        * _clip_probability(_lattice_minimum_factor(b, p, c))
    )
    high_tail = 1.0 - math.exp(-math.exp(-(2.0 * v + p) * lambda_p * c))
    high = _log_falling_tail(
        k * math.log((2.0 * v + p) * lambda_p) - (k - 1) * c, k, high_tail
    )
    return conditional, low, high


def method_error_bound(
    method: int,
    *,
    b: float,
    k: int,
    c: float,
    x: float | None = None,
    shifts=None,
    v: float | None = None,
    p: float | None = None,
    j_max: int | None = None,
    lambda_p: float | None = None,
    sharp: bool = False,
) -> ErrorBudget:
    """Evaluate the three-part error budget for one generator.

    Methods 0-2 take both thresholds c(k) and x(k); methods 3 and 4 use the
    single threshold c(k).  The sharp flag switches the conditional
    component of methods 3 and 4 to the sharp variant; it does not alter
    the other components.
    """
    if b <= 0.0:
        raise DomainError(f"need b > 0, got {b}")
    params = {"b": b, "k": k, "c": c, "sharp": sharp}
    if method == 0:
        _check_thresholds(c, x, k)
        parts = _bound_method0(b, k, c, x)
        params["x"] = x
    elif method == 1:
        _check_thresholds(c, x, k)
        if shifts is None:
            raise DomainError("method 1 needs the shift set")
        parts = _bound_method1(b, k, c, x, shifts)
        params.update(x=x, shifts=list(np.sort(np.asarray(shifts, dtype=float))))
    elif method == 2:
        _check_thresholds(c, x, k)
        if v is None:
            raise DomainError("method 2 needs the interval half-width v")
        parts = _bound_method2(b, k, c, x, v)
        params.update(x=x, v=v)
    elif method == 3:
        _check_thresholds(c, None, k)
        if p is None or j_max is None:
            raise DomainError("method 3 needs p and j_max")
        parts = _bound_method3(b, p, j_max, k, c, sharp)
        params.update(p=p, j_max=j_max)
    elif method == 4:
        _check_thresholds(c, None, k)
        if p is None or v is None or lambda_p is None:
            raise DomainError("method 4 needs p, v and lambda_p")
        parts = _bound_method4(b, p, v, lambda_p, k, c, sharp)
        params.update(p=p, v=v, lambda_p=lambda_p)
    else:
        raise DomainError(f"unknown method id {method}")
    conditional, low, high = parts
    return ErrorBudget(
        method=method, conditional=conditional, low_event=low, high_event=high, params=params
    )
