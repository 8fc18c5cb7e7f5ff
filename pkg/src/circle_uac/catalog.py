"""Closed-form homeomorphisms used as test subjects and CLI references.

All entries are vectorized, strictly increasing on the real line and fix 0
and 1.  ``periodic`` entries also satisfy H(x + 1) = H(x) + 1 and therefore
lift circle homeomorphisms; ``symmetric`` marks entries whose distortion tends
to 1 uniformly at small scales (smooth with derivative bounded away from 0 on
the region the tests sample).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class CatalogMap:
    name: str
    func: Callable[[np.ndarray], np.ndarray]
    periodic: bool
    symmetric: bool
    description: str

    def __call__(self, x):
        return self.func(np.asarray(x, dtype=float))


def _sine(x):
    return x + 0.1 * np.sin(TWO_PI * x)


def _sine_two(x):
    return x + 0.04 * np.sin(2 * TWO_PI * x)


def _cubic(x):
    return 0.5 * (x + x**3)


def _exponential(x):
    return np.expm1(x) / np.expm1(1.0)


def _signed_power(x):
    return np.sign(x) * np.abs(x) ** 1.5


CATALOG = {
    m.name: m
    for m in (
        CatalogMap("sine", _sine, True, True, "x + 0.1 sin(2 pi x)"),
        CatalogMap("sine2", _sine_two, True, True, "x + 0.04 sin(4 pi x)"),
        CatalogMap("cubic", _cubic, False, True, "(x + x^3) / 2"),
        CatalogMap("exp", _exponential, False, True, "(e^x - 1) / (e - 1)"),
        CatalogMap("power", _signed_power, False, False, "sign(x) |x|^1.5, not symmetric at 0"),
    )
}


def identity(x):
    return np.asarray(x, dtype=float)


def affine(slope: float, shift: float):
    if slope <= 0:
        raise ValueError("slope must be positive")

    def A(x):
        return slope * np.asarray(x, dtype=float) + shift

    return A
