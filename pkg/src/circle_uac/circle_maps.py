"""Degree-m circle endomorphisms fixing 1 and their real-line lifts.

Three representations are supported:

* ``power``      -- p(z) = z^m, lift P(x) = m x
* ``blaschke``   -- a ratio of finite Blaschke products
* ``perturbed``  -- lift x -> m x + p(x) with p periodic, sampled on [0, 1]

Every lift satisfies F(0) = 0 and F(x + 1) = F(x) + m; evaluation reduces x to
[0, 1) and restores the integer part, so the commutation relation holds exactly.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import MapSpecError, NoConvergence, NonMonotone, WindingMismatch

TWO_PI = 2.0 * np.pi
FIXED_POINT_TOL = 1e-9
MIN_GRID_POINTS = 2**10
BISECTION_CAP = 200

KINDS = ("power", "blaschke", "perturbed")


def _blaschke_ratio(z, alphas, betas):
    z = np.asarray(z, dtype=complex)
    out = np.ones_like(z)
    for a in alphas:
        out = out * (z - a) / (1.0 - np.conj(a) * z)
    for b in betas:
        out = out * (1.0 - np.conj(b) * z) / (z - b)
    return out


@dataclass(frozen=True)
class CircleEndomorphism:
    """A degree-m covering of the unit circle that fixes 1.

    Use the :meth:`power`, :meth:`blaschke` and :meth:`perturbed` constructors
    rather than filling the fields directly.
    """

    degree: int
    kind: str
    alphas: tuple = ()
    betas: tuple = ()
    perturbation: tuple = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise MapSpecError(f"unknown map kind {self.kind!r}")
        if int(self.degree) != self.degree or self.degree < 2:
            raise MapSpecError(f"degree must be an integer >= 2, got {self.degree}")
        if self.kind == "blaschke":
            self._check_blaschke()
        elif self.kind == "perturbed":
            self._check_perturbed()

    def _check_blaschke(self):
        if any(abs(a) >= 1 for a in self.alphas) or any(abs(b) >= 1 for b in self.betas):
            raise MapSpecError("Blaschke parameters must lie in the open unit disk")
        if len(self.alphas) != len(self.betas) + self.degree:
            raise MapSpecError(
                f"expected {len(self.betas) + self.degree} alphas for degree "
                f"{self.degree} with {len(self.betas)} betas, got {len(self.alphas)}"
            )
        offset = np.angle(self(1.0 + 0j)) / TWO_PI
        if abs(offset) > FIXED_POINT_TOL:
            raise MapSpecError(f"map does not fix 1 (arg f(1)/2pi = {offset:.3e})")
        _sampled_lift(self, MIN_GRID_POINTS)

    def _check_perturbed(self):
        p = np.asarray(self.perturbation, dtype=float)
        if p.ndim != 1 or p.size < 2:
            raise MapSpecError("perturbation needs at least two samples on [0, 1]")
        if not np.all(np.isfinite(p)):
            raise MapSpecError("perturbation samples must be finite")
        if abs(p[0]) > FIXED_POINT_TOL:
            raise MapSpecError(f"perturbation(0) must be 0, got {p[0]:.3e}")
        if abs(p[-1] - p[0]) > FIXED_POINT_TOL:
            raise MapSpecError("perturbation must be periodic: first and last samples differ")
        steps = self.degree / (p.size - 1) + np.diff(p)
        if np.any(steps <= 0):
            raise NonMonotone("m*x + perturbation(x) is not strictly increasing on its grid")

    @classmethod
    def power(cls, degree: int) -> "CircleEndomorphism":
        return cls(degree=degree, kind="power")

    @classmethod
    def blaschke(cls, alphas: Sequence[complex], betas: Sequence[complex] = ()) -> "CircleEndomorphism":
        alphas = tuple(complex(a) for a in alphas)
        betas = tuple(complex(b) for b in betas)
        return cls(degree=len(alphas) - len(betas), kind="blaschke", alphas=alphas, betas=betas)

    @classmethod
    def perturbed(cls, degree: int, samples: Sequence[float]) -> "CircleEndomorphism":
        return cls(degree=degree, kind="perturbed", perturbation=tuple(float(s) for s in samples))

    def __call__(self, z):
        """Evaluate the circle map at points z on the unit circle."""
        z = np.asarray(z, dtype=complex)
        if self.kind == "power":
            return z**self.degree
        if self.kind == "blaschke":
            return _blaschke_ratio(z, self.alphas, self.betas)
        x = np.angle(z) / TWO_PI % 1.0
        return np.exp(1j * TWO_PI * self._perturbed_lift(x))

    def _perturbed_lift(self, t):
        p = np.asarray(self.perturbation, dtype=float)
        nodes = np.linspace(0.0, 1.0, p.size)
        return self.degree * t + np.interp(t, nodes, p)


def _sampled_lift(endo: CircleEndomorphism, n: int) -> np.ndarray:
    """Lift samples at j/n, j = 0..n, checked for winding and monotonicity."""
    grid = np.arange(n + 1) / n
    m = endo.degree
    if endo.kind == "power":
        cache = m * grid
    elif endo.kind == "perturbed":
        cache = endo._perturbed_lift(grid)
    else:
        phase = np.angle(endo(np.exp(1j * TWO_PI * grid)))
        cache = np.unwrap(phase, discont=np.pi) / TWO_PI
        cache = cache - cache[0]
        if abs(cache[-1] - m) > 1e-6:
            raise WindingMismatch(
                f"argument tracking winds {cache[-1]:.6f} times, expected {m}"
            )
        cache[-1] = m
    cache[0] = 0.0
    if np.any(np.diff(cache) <= 0):
        bad = int(np.argmin(np.diff(cache)))
        raise NonMonotone(f"sampled lift decreases near x = {grid[bad]:.6f}")
    return cache


@dataclass(frozen=True, eq=False)
class Lift:
    """Monotone lift F of a circle endomorphism with a sampled cache on [0, 1]."""

    endo: CircleEndomorphism
    cache: np.ndarray = field(repr=False)
    tol: float = 1e-12
    phase_offset: float = 0.0

    @property
    def degree(self) -> int:
        return self.endo.degree

    @property
    def grid(self) -> np.ndarray:
        return np.arange(self.cache.size) / (self.cache.size - 1)

    def __call__(self, x):
        return evaluate(self, x)


def build_lift(endo: CircleEndomorphism, grid_points: int = 2**12, tol: float = 1e-12) -> Lift:
    """Sample the lift of ``endo`` on a uniform grid of ``grid_points`` cells.

    Blaschke lifts are obtained by unwrapping arg f(e^{2 pi i x}) with a jump
    threshold of pi; the total winding must equal the degree.

    Raises
    ------
    NonMonotone
        The sampled lift is not strictly increasing.
    WindingMismatch
        Argument tracking does not close up to the degree.
    """
    if grid_points < MIN_GRID_POINTS:
        raise ValueError(f"grid_points must be >= {MIN_GRID_POINTS}")
    if tol <= 0:
        raise ValueError("tol must be positive")
    cache = _sampled_lift(endo, grid_points)
    cache.setflags(write=False)
    offset = 0.0
    if endo.kind == "blaschke":
        offset = float(np.angle(endo(1.0 + 0j)) / TWO_PI)
    return Lift(endo=endo, cache=cache, tol=tol, phase_offset=offset)


def _unit_eval(F: Lift, t: np.ndarray) -> np.ndarray:
    """F on t in [0, 1)."""
    endo = F.endo
    if endo.kind == "power":
        return endo.degree * t
    if endo.kind == "perturbed":
        return endo._perturbed_lift(t)
    phase = np.angle(endo(np.exp(1j * TWO_PI * t))) / TWO_PI - F.phase_offset
    approx = np.interp(t, F.grid, F.cache)
    return phase + np.round(approx - phase)


def _as_output(arr: np.ndarray, like):
    return float(np.reshape(arr, -1)[0]) if np.ndim(like) == 0 else arr


def evaluate(F: Lift, x):
    """F(x) for scalar or array x."""
    x_arr = np.asarray(x, dtype=float)
    q = np.floor(x_arr)
    out = q * F.degree + _unit_eval(F, x_arr - q)
    return _as_output(out, x)


def _reduce(v: np.ndarray, m: int):
    q = np.floor(v / m)
    r = v - q * m
    low = r < 0
    q[low] -= 1
    r[low] += m
    high = r >= m
    q[high] += 1
    r[high] -= m
    return q, r


def inverse(F: Lift, v, tol: float | None = None):
    """Solve F(u) = v by bracketed bisection.

    The target is reduced to r = v - q*m in [0, m) so that the residual is
    measured at unit scale; the bracket comes from the monotone cache.

    Raises
    ------
    NoConvergence
        The bracket is invalid or the iteration cap is exceeded.
    """
    tol = F.tol if tol is None else tol
    if tol <= 0:
        raise ValueError("tol must be positive")
    m = F.degree
    v_arr = np.atleast_1d(np.asarray(v, dtype=float)).copy()
    q, r = _reduce(v_arr, m)
    if F.endo.kind == "power":
        return _as_output(q + r / m, v)

    n = F.cache.size - 1
    k = np.clip(np.searchsorted(F.cache, r, side="right") - 1, 0, n - 1)
    lo = np.maximum(k - 1, 0) / n
    hi = np.minimum(k + 2, n) / n
    f_lo = evaluate(F, lo) - r
    f_hi = evaluate(F, hi) - r
    if np.any(f_lo > tol) or np.any(f_hi < -tol):
        raise NoConvergence("lift cache does not bracket the target; cache is defective")

    u = np.where(np.abs(f_lo) <= tol, lo, hi)
    done = (np.abs(f_lo) <= tol) | (np.abs(f_hi) <= tol)
    for _ in range(BISECTION_CAP):
        active = np.flatnonzero(~done)
        if active.size == 0:
            break
        a, b = lo[active], hi[active]
        mid = 0.5 * (a + b)
        f_mid = evaluate(F, mid) - r[active]
        conv = np.abs(f_mid) <= tol
        stalled = ~conv & ((mid <= a) | (mid >= b))
        u[active[conv]] = mid[conv]
        if np.any(stalled):
            s = active[stalled]
            closer = np.abs(evaluate(F, lo[s]) - r[s]) <= np.abs(evaluate(F, hi[s]) - r[s])
            u[s] = np.where(closer, lo[s], hi[s])
        done[active[conv | stalled]] = True
        go_right = f_mid < 0
        lo[active[go_right]] = mid[go_right]
        hi[active[~go_right]] = mid[~go_right]
    else:
        if not np.all(done):
            raise NoConvergence(f"bisection exceeded {BISECTION_CAP} iterations")
    return _as_output(q + u, v)


def inverse_iterate(F: Lift, n: int, v, tol: float | None = None):
    """(F^n)^{-1}(v) via n inverse steps, each at tolerance tol / (m n)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    tol = F.tol if tol is None else tol
    step_tol = tol / (F.degree * n)
    u = v
    for _ in range(n):
        u = inverse(F, u, step_tol)
    return u


# -- map specification files -------------------------------------------------

def _parse_complex_list(text: str) -> list[complex]:
    text = text.strip()
    if not text:
        return []
    out = []
    for pair in text.split(";"):
        parts = [p.strip() for p in pair.split(",")]
        if len(parts) != 2:
            raise MapSpecError(f"complex entry {pair!r} is not of the form re,im")
        try:
            out.append(complex(float(parts[0]), float(parts[1])))
        except ValueError as exc:
            raise MapSpecError(f"bad complex entry {pair!r}") from exc
    return out


def parse_map_spec(text: str) -> CircleEndomorphism:
    """Build a map from ``key = value`` lines (``#`` starts a comment)."""
    fields = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        sep = "=" if "=" in line else ":"
        if sep not in line:
            raise MapSpecError(f"cannot parse line {raw!r}")
        key, value = line.split(sep, 1)
        fields[key.strip().lower()] = value.strip()
    kind = fields.get("kind")
    if kind not in KINDS:
        raise MapSpecError(f"kind must be one of {KINDS}, got {kind!r}")
    try:
        degree = int(fields["degree"]) if "degree" in fields else None
    except ValueError as exc:
        raise MapSpecError(f"bad degree {fields['degree']!r}") from exc

    if kind == "power":
        if degree is None:
            raise MapSpecError("power map needs a degree")
        return CircleEndomorphism.power(degree)
    if kind == "blaschke":
        endo = CircleEndomorphism.blaschke(
            _parse_complex_list(fields.get("alphas", "")),
            _parse_complex_list(fields.get("betas", "")),
        )
        if degree is not None and degree != endo.degree:
            raise MapSpecError(f"declared degree {degree} but parameters give {endo.degree}")
        return endo
    if degree is None:
        raise MapSpecError("perturbed map needs a degree")
    try:
        samples = [float(s) for s in fields.get("perturbation_samples", "").split(",") if s.strip()]
    except ValueError as exc:
        raise MapSpecError("perturbation_samples must be a comma-separated real list") from exc
    return CircleEndomorphism.perturbed(degree, samples)


def load_map_spec(path: str | Path) -> CircleEndomorphism:
    return parse_map_spec(Path(path).read_text(encoding="utf-8"))


def format_map_spec(endo: CircleEndomorphism) -> str:
    lines = [f"kind = {endo.kind}", f"degree = {endo.degree}"]
    if endo.kind == "blaschke":
        fmt = lambda zs: ";".join(f"{z.real!r},{z.imag!r}" for z in zs)  # noqa: E731
        lines += [f"alphas = {fmt(endo.alphas)}", f"betas = {fmt(endo.betas)}"]
    elif endo.kind == "perturbed":
        lines.append("perturbation_samples = " + ",".join(repr(p) for p in endo.perturbation))
    return "\n".join(lines) + "\n"


def spec_hash(endo: CircleEndomorphism) -> str:
    return hashlib.sha256(format_map_spec(endo).encode()).hexdigest()
