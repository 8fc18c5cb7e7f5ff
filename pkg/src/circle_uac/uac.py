"""Numerical certificate that F~ = H~ o P o H~^{-1} is uniformly asymptotically
conformal, where H~ is the Beurling-Ahlfors extension of the conjugacy H.

Nothing here inverts H~.  Because F~^{-n} o H~ = H~ o P^{-n}, the Beltrami
coefficient of F~^{-n} at the image point H~(zeta) is the composition of
mu_H~(zeta / m^n) with mu_H~(zeta), so every quantity is evaluated at
parameter points zeta in the strip and reported at H~(zeta).

Only the upper strip is computed; the lower strip is its reflection.  The
certificate samples a finite schedule of (n, y) pairs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .ba_extension import beltrami_point, make_backend
from .distortion import VanishingProfile
from .errors import FloorViolation, InvariantBreach

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class StripSpec:
    y_max: float
    y_levels: tuple
    x_count: int = 64

    def __post_init__(self):
        ys = np.asarray(self.y_levels, dtype=float)
        if self.y_max <= 0:
            raise ValueError("y_max must be positive")
        if ys.size == 0 or np.any(ys <= 0) or np.any(ys > self.y_max) or np.any(np.diff(ys) >= 0):
            raise ValueError("y_levels must be strictly decreasing within (0, y_max]")
        if self.x_count < 16:
            raise ValueError("x_count must be >= 16")

    @classmethod
    def dyadic(cls, levels: int, x_count: int = 64) -> "StripSpec":
        """y in {1/2, 1/4, ..., 2^-levels}."""
        return cls(0.5, tuple(2.0 ** -np.arange(1, levels + 1)), x_count)

    @property
    def xs(self) -> np.ndarray:
        return np.arange(self.x_count) / self.x_count

    @property
    def ys(self) -> np.ndarray:
        return np.asarray(self.y_levels, dtype=float)

    @property
    def annulus_radius(self) -> float:
        return float(np.exp(-TWO_PI * self.y_max))


def _mu(backend, z):
    z = np.asarray(z, dtype=complex)
    return beltrami_point(backend, z.real, z.imag).mu


def _check_floor(backend, m: int, n_max: int, ys) -> None:
    lowest = float(np.min(ys)) / m**n_max
    if lowest < backend.floor:
        raise FloorViolation(
            f"m^-n y reaches {lowest:.3e}, below the resolution floor {backend.floor:.3e}; "
            "reduce n_max or deepen the conjugacy"
        )


def _resolve_degree(H, m):
    degree = getattr(H, "degree", m)
    if m is None:
        if degree is None:
            raise ValueError("degree m is required for this subject")
        return degree
    if degree != m:
        raise ValueError(f"subject has degree {degree}, got m = {m}")
    return m


def _scaling_grid(H, m, n_max, strip):
    m = _resolve_degree(H, m)
    backend = make_backend(H)
    _check_floor(backend, m, n_max, strip.ys)
    X, Y = np.meshgrid(strip.xs, strip.ys)
    z = X + 1j * Y
    base = _mu(backend, z)
    devs = np.zeros((n_max + 1,) + z.shape)
    for n in range(1, n_max + 1):
        devs[n] = np.abs(_mu(backend, z / m**n) - base)
    return devs


def scaling_table(H, m: int | None, n_max: int, strip: StripSpec) -> np.ndarray:
    """table[n, i] = sup_x |mu(m^-n (x + i y_i)) - mu(x + i y_i)|, n = 0..n_max."""
    return _scaling_grid(H, m, n_max, strip).max(axis=2)


def scaling_deviation(H, m: int | None, n_max: int, strip: StripSpec):
    """Scaling deviations per (n, y), eta_hat(y) = max over n, and the
    pointwise max over n on the (y, x) strip grid.

    Raises
    ------
    FloorViolation
        m^-n_max * min(y) lies below the backend's resolution floor.
    """
    devs = _scaling_grid(H, m, n_max, strip)
    table = devs.max(axis=2)
    eta = VanishingProfile(
        strip.ys, table.max(axis=0), kind="eta_hat", n_max=n_max,
        metadata={"sup": "max over n<=n_max and x of |mu(m^-n z) - mu(z)|"},
    )
    return table, eta, devs.max(axis=0)


def composition_mu_abs(mu_u, mu_v):
    """|mu of G o f^{-1}| from mu_G = mu_u and mu_f = mu_v at the same parameter."""
    return np.abs(mu_u - mu_v) / np.abs(1 - np.conj(mu_v) * mu_u)


def composition_dilatation(H, m: int | None, n: int, sample_params: Sequence[complex]):
    """[(H~(zeta), K_{H~(zeta)}(F~^{-n}))] for each parameter zeta.

    Raises
    ------
    FloorViolation
        Im(zeta)/m^n lies below the resolution floor.
    InvariantBreach
        The composed coefficient reaches modulus 1.
    """
    m = _resolve_degree(H, m)
    if n < 0:
        raise ValueError("n must be >= 0")
    backend = make_backend(H)
    zeta = np.asarray(sample_params, dtype=complex).ravel()
    if np.any(zeta.imag <= 0):
        raise ValueError("sample parameters must lie in the upper half plane")
    _check_floor(backend, m, n, zeta.imag)
    ev = beltrami_point(backend, zeta.real, zeta.imag)
    mu_v = ev.mu
    mu_u = mu_v if n == 0 else _mu(backend, zeta / m**n)
    k = composition_mu_abs(mu_u, mu_v)
    if np.any(k >= 1):
        raise InvariantBreach("composed Beltrami coefficient has modulus >= 1")
    K = (1 + k) / (1 - k)
    images = ev.U + 1j * ev.V
    return [(complex(w), float(kv)) for w, kv in zip(images, K)]


def dilatation_table(H, m: int | None, n_max: int, strip: StripSpec) -> np.ndarray:
    """table[n, i] = sup_x K(F~^{-n}) over parameters x + i y_i."""
    m = _resolve_degree(H, m)
    backend = make_backend(H)
    _check_floor(backend, m, n_max, strip.ys)
    X, Y = np.meshgrid(strip.xs, strip.ys)
    z = X + 1j * Y
    mu_v = _mu(backend, z)
    table = np.ones((n_max + 1, strip.ys.size))
    for n in range(1, n_max + 1):
        k = composition_mu_abs(_mu(backend, z / m**n), mu_v)
        if np.any(k >= 1):
            raise InvariantBreach("composed Beltrami coefficient has modulus >= 1")
        table[n] = ((1 + k) / (1 - k)).max(axis=1)
    return table


def annulus_view(strip_points: Sequence[complex]):
    """x + iy -> (e^{-2 pi y}, 2 pi x mod 2 pi)."""
    z = np.asarray(strip_points, dtype=complex).ravel()
    radius = np.exp(-TWO_PI * z.imag)
    angle = np.mod(TWO_PI * z.real, TWO_PI)
    return [(float(r), float(a)) for r, a in zip(radius, angle)]


@dataclass
class UacReport:
    ys: np.ndarray
    scaling: np.ndarray  # (n_max + 1, len(ys))
    eta_hat: VanishingProfile
    dilatation: np.ndarray  # (n_max + 1, len(ys))
    schedule: list
    passed: bool
    provenance: dict = field(default_factory=dict)
    xs: np.ndarray = field(default_factory=lambda: np.empty(0))
    pointwise: np.ndarray = field(default_factory=lambda: np.empty((0, 0)))

    def __post_init__(self):
        if not (np.all(np.isfinite(self.scaling)) and np.all(np.isfinite(self.dilatation))):
            raise InvariantBreach("non-finite entries in UAC report")
        if np.any(self.dilatation < 1):
            raise InvariantBreach("dilatation below 1")

    def to_dict(self) -> dict:
        return {
            "y": self.ys.tolist(),
            "scaling": self.scaling.tolist(),
            "eta_hat": self.eta_hat.values.tolist(),
            "dilatation": self.dilatation.tolist(),
            "schedule": [[float(y), float(b)] for y, b in self.schedule],
            "pass": self.passed,
            "certified_on": "finite schedule of (n, y) pairs; not a proof of uniformity",
            "provenance": self.provenance,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def annulus_rows(self):
        """(radius, angle, max_n |mu(m^-n z) - mu(z)|) for every strip sample z."""
        X, Y = np.meshgrid(self.xs, self.ys)
        coords = annulus_view((X + 1j * Y).ravel())
        return [(r, a, float(v)) for (r, a), v in zip(coords, self.pointwise.ravel())]


def certify_uac(H, m: int | None, n_max: int, strip: StripSpec, schedule: Sequence[tuple[float, float]], provenance: dict | None = None) -> UacReport:
    """Assemble scaling and dilatation sups and check them against a schedule.

    pass is true iff for every scheduled (y, bound): eta_hat(y) <= bound and
    sup K(F~^{-n}) at height y is <= (1 + bound)/(1 - bound) for every n.
    """
    scaling, eta, pointwise = scaling_deviation(H, m, n_max, strip)
    dil = dilatation_table(H, m, n_max, strip)
    ys = strip.ys
    passed = True
    for y, bound in schedule:
        hits = np.flatnonzero(np.isclose(ys, y, rtol=0, atol=1e-15))
        if hits.size == 0:
            raise ValueError(f"scheduled height {y} is not a strip level")
        i = int(hits[0])
        k_bound = np.inf if bound >= 1 else (1 + bound) / (1 - bound)
        if eta.values[i] > bound or np.any(dil[:, i] > k_bound):
            passed = False
    prov = {"n_max": n_max, "x_count": strip.x_count, "y_max": strip.y_max}
    prov.update(provenance or {})
    if hasattr(H, "depth"):
        prov.setdefault("depth", H.depth)
    return UacReport(
        ys, scaling, eta, dil, [tuple(s) for s in schedule], passed, prov, strip.xs, pointwise
    )
