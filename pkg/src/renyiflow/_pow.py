"""Fast elementwise powers for the rational exponents the flows use.

np.power with a fractional exponent is ~10x slower than a sqrt/cbrt chain
and sits on the solver's hot path, so the common p values get special cases.
"""
from __future__ import annotations

from typing import Callable

import numpy as np


def pow_fn(p: float) -> Callable[[np.ndarray], np.ndarray]:
    if p == 1.0:
        return lambda u: u
    if p == 2.0:
        return lambda u: u * u
    if p == 3.0:
        return lambda u: u * u * u
    if p == 1.5:
        return lambda u: u * np.sqrt(u)
    if p == 0.5:
        return np.sqrt
    if p == 0.25:
        return lambda u: np.sqrt(np.sqrt(u))
    if p == 0.75:
        return lambda u: np.sqrt(u) * np.sqrt(np.sqrt(u))
    if abs(p - 2.0 / 3.0) < 1e-14:
        return lambda u: np.cbrt(u * u)
    if abs(p - 1.0 / 3.0) < 1e-14:
        return np.cbrt
    if abs(p - 1.0 / 6.0) < 1e-14:
        return lambda u: np.cbrt(np.sqrt(u))
    if p == -0.25:
        return lambda u: 1.0 / np.sqrt(np.sqrt(u))
    if abs(p + 1.0 / 3.0) < 1e-14:
        return lambda u: 1.0 / np.cbrt(u)
    if p == -0.5:
        return lambda u: 1.0 / np.sqrt(u)
    if p == -1.0:
        return lambda u: 1.0 / u
    return lambda u: u**p
