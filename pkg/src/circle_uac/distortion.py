"""Quasisymmetric distortion functionals and empirical vanishing profiles.

A "homeomorphism" here is any vectorized, strictly increasing callable on the
real line: a catalog function, a :class:`~circle_uac.conjugacy.ConjugacyMap`,
a :class:`~circle_uac.circle_maps.Lift`, or a :func:`compose` chain of them.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .circle_maps import Lift, inverse_iterate
from .errors import DegenerateDenominator

SKEW_KS = (0.25, 0.5, 0.75, 1.0)
ZETA_MAX_TERMS = 1_000_000

Homeomorphism = Callable[[np.ndarray], np.ndarray]


def compose(*maps: Homeomorphism) -> Homeomorphism:
    """compose(f, g, h)(x) == f(g(h(x)))."""

    def chain(x):
        for f in reversed(maps):
            x = f(x)
        return x

    return chain


def _ratio(num, den):
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    if np.any(den == 0):
        raise DegenerateDenominator("H(x) - H(x - y) vanished; subject is not injective at this scale")
    out = num / den
    return float(out) if out.ndim == 0 else out


def rho(H: Homeomorphism, x, y):
    """(H(x+y) - H(x)) / (H(x) - H(x-y)) for y > 0."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(y <= 0):
        raise ValueError("y must be positive")
    hx = H(x)
    return _ratio(H(x + y) - hx, hx - H(x - y))


def rho_skew(H: Homeomorphism, x, y, k):
    """(H(x+ky) - H(x)) / (H(x) - H(x-y)) for y != 0 and 0 < k <= 1.

    Negative y gives the mirrored ratio used for left-hand distortion.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    k = np.asarray(k, dtype=float)
    if np.any(y == 0):
        raise ValueError("y must be nonzero")
    if np.any(k <= 0) or np.any(k > 1):
        raise ValueError("k must lie in (0, 1]")
    hx = H(x)
    return _ratio(H(x + k * y) - hx, hx - H(x - y))


def zeta(M: float, tail_tol: float = 1e-15) -> float:
    """Upper bound on sup|H(x) - x| over M-quasisymmetric self-maps of [0, 1].

    Sums tau_k = max{(M/(M+1))^k - 2^-k, 2^-k - (1/(M+1))^k} until the
    remainder bound sum_{k>n} ((M/(M+1))^k - (1/(M+1))^k) drops below
    ``tail_tol``, then adds that remainder.  Since every tau_k is nonnegative
    the partial sums increase, so their supremum is the full series.
    """
    if M < 1:
        raise ValueError("M must be >= 1")
    if tail_tol <= 0:
        raise ValueError("tail_tol must be positive")
    q = M / (M + 1.0)
    p = 1.0 / (M + 1.0)
    total = 0.0
    qk, pk, hk = 1.0, 1.0, 1.0
    for _ in range(ZETA_MAX_TERMS):
        qk *= q
        pk *= p
        hk *= 0.5
        total += max(qk - hk, hk - pk)
        tail = qk * q / (1.0 - q) - pk * p / (1.0 - p)
        if tail < tail_tol:
            break
    return total + max(tail, 0.0)


def vartheta(M: float, tail_tol: float = 1e-15) -> float:
    """M - 1 + M * zeta(M): bound on |rho(x, +-y, k) - k| for M-quasisymmetric H."""
    if M < 1:
        raise ValueError("M must be >= 1")
    return M - 1.0 + M * zeta(M, tail_tol)


def estimate_M(H: Homeomorphism, x_samples: Sequence[float], y_samples: Sequence[float]) -> float:
    """Largest max(rho, 1/rho) over the product grid; a lower bound for M."""
    xs = np.asarray(x_samples, dtype=float)
    ys = np.asarray(y_samples, dtype=float)
    if xs.size == 0 or ys.size == 0:
        raise ValueError("sample lists must be nonempty")
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    r = np.asarray(rho(H, X.ravel(), Y.ravel()))
    return float(max(1.0, np.max(np.maximum(r, 1.0 / r))))


def interval_qs_constant(H: Homeomorphism, a: float, b: float, cells: int = 128) -> float:
    """Measured quasisymmetry constant of H restricted to [a, b].

    Uses every symmetric triple of a uniform grid with ``cells`` subdivisions,
    including the full-width triple centred at the midpoint.
    """
    if not b > a:
        raise ValueError("need a < b")
    nodes = np.linspace(a, b, cells + 1)
    h = H(nodes)
    best = 1.0
    for half in range(1, cells // 2 + 1):
        centre = np.arange(half, cells - half + 1)
        num = h[centre + half] - h[centre]
        den = h[centre] - h[centre - half]
        if np.any(den == 0) or np.any(num == 0):
            raise DegenerateDenominator("subject is not injective on the sampled interval")
        r = num / den
        best = max(best, float(np.max(np.maximum(r, 1.0 / r))))
    return best


@dataclass
class VanishingProfile:
    """Sampled sup-deviation y -> value with y strictly decreasing."""

    ys: np.ndarray
    values: np.ndarray
    kind: str = ""
    n_max: int = 0
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.ys = np.asarray(self.ys, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.ys.shape != self.values.shape or self.ys.ndim != 1:
            raise ValueError("ys and values must be 1-d arrays of equal length")
        if np.any(np.diff(self.ys) >= 0):
            raise ValueError("profile heights must be strictly decreasing")
        if not np.all(np.isfinite(self.values)) or np.any(self.values < 0):
            raise ValueError("profile values must be finite and nonnegative")

    @property
    def samples(self) -> list[tuple[float, float]]:
        return list(zip(self.ys.tolist(), self.values.tolist()))

    def is_nonincreasing(self, slack: float = 0.0) -> bool:
        """True when values do not grow as y decreases (up to ``slack``)."""
        return bool(np.all(np.diff(self.values) <= slack))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["y", "value", "n_max", "kind"])
        for y, v in zip(self.ys, self.values):
            w.writerow([f"{y:.17g}", f"{v:.17g}", self.n_max, self.kind])
        return buf.getvalue()


def _check_heights(y_values):
    ys = np.asarray(y_values, dtype=float)
    if ys.ndim != 1 or ys.size == 0 or np.any(ys <= 0):
        raise ValueError("y_values must be a nonempty list of positive heights")
    if np.any(np.diff(ys) >= 0):
        raise ValueError("y_values must be strictly decreasing")
    return ys


def uaa_profile(
    F: Lift,
    n_max: int,
    y_values: Sequence[float],
    x_samples: Sequence[float],
    tol: float = 1e-13,
) -> VanishingProfile:
    """max over n <= n_max and x of |rho_{F^-n}(x, y) - 1|, per y."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    ys = _check_heights(y_values)
    xs = np.asarray(x_samples, dtype=float)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    values = np.zeros(ys.size)
    for n in range(1, n_max + 1):
        inv = lambda v, n=n: inverse_iterate(F, n, v, tol)  # noqa: E731
        dev = np.abs(np.asarray(rho(inv, X.ravel(), Y.ravel())) - 1.0).reshape(X.shape)
        values = np.maximum(values, dev.max(axis=0))
    return VanishingProfile(
        ys, values, kind="uaa", n_max=n_max,
        metadata={"sup": "max over n<=n_max and x of |rho_{F^-n}(x,y)-1|", "tol": tol},
    )


def skew_deviation(H: Homeomorphism, x, y, ks: Sequence[float] = SKEW_KS):
    """max over k in ks and both signs of |rho(x, +-y, k) - k|, elementwise."""
    out = 0.0
    for k in ks:
        for sign in (1.0, -1.0):
            out = np.maximum(out, np.abs(np.asarray(rho_skew(H, x, sign * np.asarray(y), k)) - k))
    return out


def symmetric_profile(
    H: Homeomorphism, y_values: Sequence[float], x_samples: Sequence[float]
) -> VanishingProfile:
    ys = _check_heights(y_values)
    xs = np.asarray(x_samples, dtype=float)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    dev = np.asarray(skew_deviation(H, X.ravel(), Y.ravel())).reshape(X.shape)
    return VanishingProfile(
        ys, dev.max(axis=0), kind="symmetric",
        metadata={"sup": "max over x, k in {0.25,0.5,0.75,1}, +-y of |rho(x,y,k)-k|"},
    )
