"""Beurling-Ahlfors extension U + iV of a real homeomorphism H and its
Beltrami coefficient, computed from exact integral identities.

    U(x, y) = (1/2y) int_{x-y}^{x+y} H
    V(x, y) = (1/y) int_x^{x+y} H - (1/y) int_{x-y}^x H

The extension of the identity is the identity and A o H o B extends to
A o (extension of H) o B for affine A, B.  Partial derivatives of U and V are
closed-form in

    L  = H(x) - H(x-y)              R  = H(x+y) - H(x)
    L' = H(x) - mean_{[x-y,x]} H    R' = mean_{[x,x+y]} H - H(x)

so mu never involves numerical differentiation.

Integrals are taken of the deviation g = H - id rather than of H itself, which
keeps L', R' accurate when y is small.
"""

from __future__ import annotations

import csv
import io
import json
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from scipy import integrate

from .conjugacy import ConjugacyMap
from .distortion import SKEW_KS, VanishingProfile, rho_skew
from .errors import FloorViolation, InvariantBreach, QuadratureFailure


class Moments(NamedTuple):
    hx: np.ndarray
    L: np.ndarray
    R: np.ndarray
    Lp: np.ndarray
    Rp: np.ndarray
    U: np.ndarray
    V: np.ndarray


class _Backend:
    """Integration backend bound to one subject H."""

    mode = ""
    floor = 0.0

    def __init__(self, subject):
        self.subject = subject

    def dev(self, x):
        raise NotImplementedError

    def dev_mean(self, a, w):
        raise NotImplementedError

    def check_height(self, y):
        if np.any(y <= 0):
            raise ValueError("y must be positive")
        if np.any(y < self.floor):
            raise FloorViolation(
                f"height {np.min(y):.3e} is below the resolution floor {self.floor:.3e}"
            )

    def moments(self, x, y) -> Moments:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        x, y = np.broadcast_arrays(x, y)
        self.check_height(y)
        gx = self.dev(x)
        gl = self.dev(x - y)
        gr = self.dev(x + y)
        ml = self.dev_mean(x - y, y)
        mr = self.dev_mean(x, y)
        return Moments(
            hx=x + gx,
            L=y + gx - gl,
            R=y + gr - gx,
            Lp=0.5 * y + gx - ml,
            Rp=0.5 * y + mr - gx,
            U=x + 0.5 * (ml + mr),
            V=y + mr - ml,
        )

    def metadata(self) -> dict:
        return {"mode": self.mode, "floor": self.floor}


class PiecewiseLinearBackend(_Backend):
    """Exact integration of a ConjugacyMap via a prefix-sum antiderivative.

    The deviation g = H - id is periodic and piecewise linear on the m-adic
    grid, so cell integrals are trapezoids and the antiderivative is exact up
    to rounding.  Heights below a quarter grid cell are refused.
    """

    mode = "closed_form_piecewise_linear"

    def __init__(self, H: ConjugacyMap):
        super().__init__(H)
        self.nodes = H.grid
        self.g = H.values - self.nodes
        n = H.cells
        cell = 0.5 * (self.g[:-1] + self.g[1:]) / n
        self.prefix = np.concatenate(([0.0], np.cumsum(cell)))
        self.period_integral = self.prefix[-1]
        self.n = n
        self.floor = 1.0 / (4 * n)

    def dev(self, x):
        x = np.asarray(x, dtype=float)
        q = np.floor(x)
        return np.interp(x - q, self.nodes, self.g)

    def antiderivative(self, x):
        """int_0^x g."""
        x = np.asarray(x, dtype=float)
        q = np.floor(x)
        t = x - q
        k = np.minimum((t * self.n).astype(np.int64), self.n - 1)
        gt = np.interp(t, self.nodes, self.g)
        partial = (t - self.nodes[k]) * 0.5 * (self.g[k] + gt)
        return q * self.period_integral + self.prefix[k] + partial

    def dev_mean(self, a, w):
        a = np.asarray(a, dtype=float)
        return (self.antiderivative(a + w) - self.antiderivative(a)) / w


class QuadratureBackend(_Backend):
    """Adaptive Gauss-Kronrod quadrature of g = H - id for callable subjects."""

    mode = "adaptive_quadrature"

    def __init__(self, func, tol: float = 1e-12):
        super().__init__(func)
        if tol <= 0:
            raise ValueError("tol must be positive")
        self.tol = tol

    def dev(self, x):
        x = np.asarray(x, dtype=float)
        return np.asarray(self.subject(x), dtype=float) - x

    def _g(self, s):
        return float(self.subject(np.asarray(s, dtype=float))) - s

    def dev_mean(self, a, w):
        a, w = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(w, dtype=float))
        out = np.empty(a.shape)
        for idx in np.ndindex(a.shape):
            lo, width = float(a[idx]), float(w[idx])
            with warnings.catch_warnings():
                # judged below from the returned error estimate
                warnings.simplefilter("ignore", integrate.IntegrationWarning)
                val, err = integrate.quad(
                    self._g, lo, lo + width, epsabs=self.tol * width, epsrel=self.tol, limit=200
                )
            if not np.isfinite(val) or err > 10 * max(self.tol * width, self.tol * abs(val)):
                raise QuadratureFailure(
                    f"quadrature on [{lo:.6g}, {lo + width:.6g}] reached error {err:.2e}"
                )
            out[idx] = val / width
        return out

    def metadata(self) -> dict:
        return {"mode": self.mode, "floor": self.floor, "quad_tol": self.tol}


class NormalizedBackend(_Backend):
    """Post-composes a backend's subject with the affine map fixing 0 and 1."""

    def __init__(self, inner: _Backend):
        super().__init__(inner.subject)
        self.inner = inner
        self.mode = inner.mode
        self.floor = inner.floor
        h0, h1 = np.asarray(inner.subject(np.array([0.0, 1.0])), dtype=float)
        self.shift = float(h0)
        self.scale = float(h1 - h0)
        if self.scale <= 0:
            raise InvariantBreach("subject is not increasing between 0 and 1")

    def normalized_subject(self, x):
        return (np.asarray(self.inner.subject(x), dtype=float) - self.shift) / self.scale

    def moments(self, x, y) -> Moments:
        mo = self.inner.moments(x, y)
        s, c = self.scale, self.shift
        return Moments(
            hx=(mo.hx - c) / s, L=mo.L / s, R=mo.R / s, Lp=mo.Lp / s, Rp=mo.Rp / s,
            U=(mo.U - c) / s, V=mo.V / s,
        )

    def metadata(self) -> dict:
        return {**self.inner.metadata(), "normalized": True, "shift": self.shift, "scale": self.scale}


def make_backend(subject, quad_tol: float = 1e-12) -> _Backend:
    """Closed-form backend for conjugacy maps, adaptive quadrature otherwise.

    Passing an existing backend returns it unchanged.
    """
    if isinstance(subject, _Backend):
        return subject
    if isinstance(subject, ConjugacyMap):
        return PiecewiseLinearBackend(subject)
    return QuadratureBackend(subject, quad_tol)


def lrl(subject, x, y):
    """(L, R, L', R') at (x, y)."""
    mo = make_backend(subject).moments(x, y)
    return mo.L, mo.R, mo.Lp, mo.Rp


def extend_point(subject, x, y):
    """(U, V) of the extension at x + iy."""
    mo = make_backend(subject).moments(x, y)
    return mo.U, mo.V


def partials(subject, x, y):
    """(U_x, V_x, U_y, V_y) from the closed-form identities."""
    mo = make_backend(subject).moments(x, y)
    y = np.asarray(y, dtype=float)
    return (
        (mo.R + mo.L) / (2 * y),
        (mo.R - mo.L) / y,
        ((mo.R - mo.L) - (mo.Rp - mo.Lp)) / (2 * y),
        ((mo.R + mo.L) - (mo.Rp + mo.Lp)) / y,
    )


@dataclass
class ExtensionValue:
    """Every intermediate of the Beltrami computation at one or more points."""

    x: np.ndarray
    y: np.ndarray
    U: np.ndarray
    V: np.ndarray
    L: np.ndarray
    R: np.ndarray
    Lp: np.ndarray
    Rp: np.ndarray
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    K: np.ndarray
    mu: np.ndarray

    @property
    def rho(self):
        return self.R / self.L

    @property
    def rho_plus(self):
        return self.Rp / self.L

    @property
    def rho_minus(self):
        return self.Lp / self.R

    @property
    def denominator(self):
        """|1 + ia + b - ic|, which exceeds 1 whenever b > 0."""
        return np.abs(1 + 1j * self.a + self.b - 1j * self.c)


def abc_from_moments(L, R, Lp, Rp):
    rho = R / L
    rho_p = Rp / L
    rho_m = Lp / R
    a = 2 * (rho - 1) / (rho + 1)
    b = 2 * (rho + 1 - rho_p - rho * rho_m) / (rho + 1)
    # Sign of rho_p follows from U_y; it is the one that gives c = 0 at the identity.
    c = (rho - 1 - rho_p + rho * rho_m) / (rho + 1)
    return a, b, c


def beltrami_point(subject, x, y, check: bool = True) -> ExtensionValue:
    """Beltrami coefficient via K = (1 + ia)/(b - ic) and mu = (K - 1)/(K + 1).

    Raises
    ------
    InvariantBreach
        b <= 0, |mu| >= 1 or a moment of the wrong sign (with ``check``).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    mo = make_backend(subject).moments(x, y)
    a, b, c = abc_from_moments(mo.L, mo.R, mo.Lp, mo.Rp)
    K = (1 + 1j * a) / (b - 1j * c)
    mu = (1 + 1j * a - b + 1j * c) / (1 + 1j * a + b - 1j * c)
    ev = ExtensionValue(
        *np.broadcast_arrays(x, y), mo.U, mo.V, mo.L, mo.R, mo.Lp, mo.Rp, a, b, c, K, mu
    )
    if check:
        _check_invariants(ev)
    return ev


def _check_invariants(ev: ExtensionValue) -> None:
    if np.any(ev.V <= 0):
        raise InvariantBreach("V <= 0")
    if np.any(ev.L <= 0) or np.any(ev.R <= 0) or np.any(ev.Lp <= 0) or np.any(ev.Rp <= 0):
        raise InvariantBreach("nonpositive L, R, L' or R'; subject is not increasing")
    if np.any(ev.b <= 0):
        raise InvariantBreach("b <= 0")
    if np.any(ev.denominator <= 1):
        raise InvariantBreach("|1 + ia + b - ic| <= 1")
    if np.any(np.abs(ev.mu) >= 1):
        raise InvariantBreach("|mu| >= 1")


def mu_from_partials(Ux, Vx, Uy, Vy):
    """mu = (G_x + i G_y) / (G_x - i G_y) for G = U + iV."""
    Gx = Ux + 1j * Vx
    Gy = Uy + 1j * Vy
    return (Gx + 1j * Gy) / (Gx - 1j * Gy)


@dataclass
class BeltramiField:
    x_grid: np.ndarray
    y_grid: np.ndarray
    mu: np.ndarray  # shape (len(y_grid), len(x_grid))
    subject_id: str = ""
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.mu.shape != (self.y_grid.size, self.x_grid.size):
            raise ValueError("mu shape does not match the grids")
        if np.any(np.abs(self.mu) >= 1):
            raise InvariantBreach("|mu| >= 1 in field")

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "y", "re_mu", "im_mu", "abs_mu"])
        for i, y in enumerate(self.y_grid):
            for j, x in enumerate(self.x_grid):
                m = self.mu[i, j]
                w.writerow([f"{v:.17g}" for v in (x, y, m.real, m.imag, abs(m))])
        return buf.getvalue()

    def metadata_json(self) -> str:
        payload = {
            "subject_id": self.subject_id,
            "x_grid": self.x_grid.tolist(),
            "y_grid": self.y_grid.tolist(),
            **self.metadata,
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _heights(y_values):
    ys = np.asarray(y_values, dtype=float)
    if ys.ndim != 1 or ys.size == 0 or np.any(ys <= 0) or np.any(np.diff(ys) >= 0):
        raise ValueError("y_values must be positive and strictly decreasing")
    return ys


def beltrami_field(subject, x_count: int, y_values: Sequence[float], subject_id: str = "") -> BeltramiField:
    """mu on the grid x = j/x_count (0 <= j < x_count) times y_values."""
    if x_count < 16:
        raise ValueError("x_count must be >= 16")
    backend = make_backend(subject)
    xs = np.arange(x_count) / x_count
    ys = _heights(y_values)
    X, Y = np.meshgrid(xs, ys)
    ev = beltrami_point(backend, X, Y)
    return BeltramiField(xs, ys, ev.mu, subject_id, {"backend": backend.metadata()})


def decay_profile(bf: BeltramiField) -> VanishingProfile:
    """sup over x of |mu| at each height."""
    return VanishingProfile(
        bf.y_grid, np.abs(bf.mu).max(axis=1), kind="decay",
        metadata={"sup": "max over x of |mu(x+iy)|", "subject_id": bf.subject_id},
    )


@dataclass
class CuiComparison:
    skew_gap: VanishingProfile
    mu_gap: VanishingProfile
    min_denominator: float


def cui_compare(subject0, subject1, x_count: int, y_values: Sequence[float], quad_tol: float = 1e-12) -> CuiComparison:
    """Paired gap profiles between two subjects, both normalized to fix 0 and 1.

    skew_gap(y) = sup over x, k in {0.25, 0.5, 0.75, 1} and +-y of
    |rho_0(x, +-y, k) - rho_1(x, +-y, k)|; mu_gap(y) = sup over x of |mu_0 - mu_1|.
    """
    if x_count < 16:
        raise ValueError("x_count must be >= 16")
    b0 = NormalizedBackend(make_backend(subject0, quad_tol))
    b1 = NormalizedBackend(make_backend(subject1, quad_tol))
    xs = np.arange(x_count) / x_count
    ys = _heights(y_values)
    X, Y = np.meshgrid(xs, ys)
    ev0 = beltrami_point(b0, X, Y)
    ev1 = beltrami_point(b1, X, Y)
    min_den = float(min(ev0.denominator.min(), ev1.denominator.min()))
    if min_den <= 1:
        raise InvariantBreach(f"|1 + ia + b - ic| = {min_den} <= 1")
    mu_gap = np.abs(ev0.mu - ev1.mu).max(axis=1)

    skew = np.zeros(X.shape)
    for k in SKEW_KS:
        for sign in (1.0, -1.0):
            r0 = rho_skew(b0.normalized_subject, X, sign * Y, k)
            r1 = rho_skew(b1.normalized_subject, X, sign * Y, k)
            skew = np.maximum(skew, np.abs(r0 - r1))
    meta = {"x_count": x_count}
    return CuiComparison(
        skew_gap=VanishingProfile(ys, skew.max(axis=1), kind="skew_gap", metadata=meta),
        mu_gap=VanishingProfile(ys, mu_gap, kind="mu_gap", metadata=meta),
        min_denominator=min_den,
    )
