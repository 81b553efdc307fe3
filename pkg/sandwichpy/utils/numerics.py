"""
sandwichpy Numerics
Deterministic scalar search helpers.
"""

import math
from typing import Callable, Tuple

from .errors import ValidationError

INV_PHI = (math.sqrt(5) - 1) / 2  # 1 / phi
INV_PHI_SQUARE = (3 - math.sqrt(5)) / 2  # 1 / phi^2


def golden_section_minimize(f: Callable[[float], float], a: float, b: float, tol: float = 1e-5) -> Tuple[float, float]:
    """
    Golden-section search for the minimum of a unimodal function on [a, b].

    The bracket endpoints are also evaluated, so a minimum sitting exactly on
    a bound is returned exactly.

    Args:
        f: Objective
        a: Lower bound
        b: Upper bound
        tol: Final bracket width

    Returns:
        (x_min, f(x_min))
    """
    if tol <= 0:
        raise ValidationError(f"Tolerance must be positive, got {tol}")
    a, b = min(a, b), max(a, b)
    h = b - a
    if h <= tol:
        x = 0.5 * (a + b)
        return x, f(x)

    n = int(math.ceil(math.log(tol / h) / math.log(INV_PHI)))

    c = a + INV_PHI_SQUARE * h
    d = a + INV_PHI * h
    yc = f(c)
    yd = f(d)
    lo, hi = a, b

    for _ in range(n - 1):
        if yc < yd:
            b = d
            d = c
            yd = yc
            h = INV_PHI * h
            c = a + INV_PHI_SQUARE * h
            yc = f(c)
        else:
            a = c
            c = d
            yc = yd
            h = INV_PHI * h
            d = a + INV_PHI * h
            yd = f(d)

    x_in = c if yc < yd else d
    candidates = [(min(yc, yd), x_in), (f(lo), lo), (f(hi), hi)]
    # strict comparison keeps the interior point on ties
    best_f, best_x = candidates[0]
    for fx, x in candidates[1:]:
        if fx < best_f:
            best_f, best_x = fx, x
    return best_x, best_f


def central_difference(f: Callable[[float], float], x: float, step: float) -> float:
    """Symmetric first derivative estimate."""
    return (f(x + step) - f(x - step)) / (2.0 * step)
