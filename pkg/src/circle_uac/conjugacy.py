"""The conjugacy H with H(m x) = F(H(x)) on m-adic grids.

H(j/m^n) = a_{j,n} where F^n(a_{j,n}) = j.  Between grid points H is the
monotone piecewise-linear interpolant, extended by H(x + 1) = H(x) + 1.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .circle_maps import Lift, evaluate, inverse_iterate
from .distortion import estimate_M
from .errors import ConsistencyViolation, MapSpecError, MonotonicityViolation


@dataclass(frozen=True)
class MadicGrid:
    degree: int
    depth: int

    @property
    def points(self) -> np.ndarray:
        n = self.degree**self.depth
        return np.arange(n + 1) / n


@dataclass(frozen=True, eq=False)
class ConjugacyMap:
    """Grid images a_{j,n} of the conjugacy at one or more retained levels.

    ``levels[depth]`` is the finest level and drives evaluation; a coarser
    level, when present, was solved independently and serves as a
    consistency check.
    """

    degree: int
    depth: int
    levels: dict = field(repr=False)
    tol: float = 1e-12

    def __post_init__(self):
        for n, vals in self.levels.items():
            _check_level(self.degree, n, vals)
        if self.depth not in self.levels:
            raise ValueError("finest level missing")

    @property
    def values(self) -> np.ndarray:
        return self.levels[self.depth]

    @property
    def cells(self) -> int:
        return self.degree**self.depth

    @property
    def grid(self) -> np.ndarray:
        return MadicGrid(self.degree, self.depth).points

    def level(self, n: int) -> np.ndarray:
        """a_{., n} restricted from the finest level."""
        if not 0 <= n <= self.depth:
            raise ValueError(f"level {n} outside 0..{self.depth}")
        return self.values[:: self.degree ** (self.depth - n)]

    def level_consistency(self) -> float:
        """max |a_{jm^(d-n), d} - a_{j, n}| over independently solved coarse levels."""
        worst = 0.0
        for n, vals in self.levels.items():
            if n != self.depth:
                worst = max(worst, float(np.max(np.abs(self.level(n) - vals))))
        return worst

    def __call__(self, x):
        return evaluate_H(self, x)


def _check_level(m: int, n: int, vals: np.ndarray) -> None:
    if vals.shape != (m**n + 1,):
        raise ValueError(f"level {n} needs {m**n + 1} values, got {vals.shape}")
    if vals[0] != 0.0 or vals[-1] != 1.0:
        raise MonotonicityViolation(f"level {n} endpoints must be exactly 0 and 1")
    if np.any(np.diff(vals) <= 0):
        j = int(np.argmin(np.diff(vals)))
        raise MonotonicityViolation(f"a_{{j,{n}}} out of order at j = {j}; tolerance too loose")


def _solve_level(F: Lift, n: int, tol: float) -> np.ndarray:
    m = F.degree
    j = np.arange(1, m**n, dtype=float)
    a = inverse_iterate(F, n, j, tol) if j.size else np.empty(0)
    vals = np.concatenate(([0.0], np.asarray(a, dtype=float), [1.0]))
    vals.setflags(write=False)
    return vals


def build_conjugacy(F: Lift, depth: int = 10, tol: float = 1e-12) -> ConjugacyMap:
    """Solve F^n(a_{j,n}) = j at levels ``depth`` and ``depth - 1``.

    Each a_{j,n} is an independent n-step inverse solve; the endpoints are
    pinned to 0 and 1.

    Raises
    ------
    NoConvergence
        A root solve failed.
    MonotonicityViolation
        Adjacent grid images are out of order.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    levels = {depth: _solve_level(F, depth, tol)}
    if depth >= 2:
        levels[depth - 1] = _solve_level(F, depth - 1, tol)
    return ConjugacyMap(degree=F.degree, depth=depth, levels=levels, tol=tol)


def evaluate_H(H: ConjugacyMap, x):
    x_arr = np.asarray(x, dtype=float)
    q = np.floor(x_arr)
    out = q + np.interp(x_arr - q, H.grid, H.values)
    return float(out) if np.ndim(x) == 0 else out


def inverse_H(H: ConjugacyMap, v):
    """H^{-1} by swapping the axes of the monotone grid."""
    v_arr = np.asarray(v, dtype=float)
    q = np.floor(v_arr)
    out = q + np.interp(v_arr - q, H.values, H.grid)
    return float(out) if np.ndim(v) == 0 else out


def commutation_residual(H: ConjugacyMap, F: Lift) -> float:
    """max over x = j/m^(n-1) of |F(H(x)) - H(m x)|."""
    m = H.degree
    x = np.arange(m ** (H.depth - 1) + 1) / m ** (H.depth - 1)
    return float(np.max(np.abs(evaluate(F, evaluate_H(H, x)) - evaluate_H(H, m * x))))


def grid_ratio_bound(H: ConjugacyMap) -> float:
    """max of max(r, 1/r) for neighbouring grid-cell ratios over all levels.

    Cells wrap around periodically, so the triple centred at 0 is included.
    """
    worst = 1.0
    for n in range(1, H.depth + 1):
        d = np.diff(H.level(n))
        r = np.append(d[1:] / d[:-1], d[0] / d[-1])
        worst = max(worst, float(np.max(np.maximum(r, 1.0 / r))))
    return worst


@dataclass(frozen=True)
class QsCertificate:
    M_hat: float
    M_prime_bound: float
    M_measured: float
    satisfied: bool


def qs_certificate(H: ConjugacyMap, x_samples=None, y_samples=None) -> QsCertificate:
    """Grid quasisymmetry constant and the multi-scale bound 1 + M + ... + M^m.

    The interpolated map is probed at x_samples (default: 257 uniform points
    on [0, 1]) and at half-octave scales from 1/2 down to one grid cell.
    """
    if H.depth < 3:
        raise ValueError("qs_certificate needs depth >= 3")
    M_hat = grid_ratio_bound(H)
    M_prime = float(sum(M_hat**i for i in range(H.degree + 1)))
    if x_samples is None:
        x_samples = np.linspace(0.0, 1.0, 257)
    if y_samples is None:
        octaves = np.log2(H.cells)
        y_samples = 2.0 ** -np.arange(1.0, octaves + 0.5, 0.5)
    measured = estimate_M(H, x_samples, y_samples)
    return QsCertificate(M_hat, M_prime, measured, bool(measured <= M_prime))


def to_csv(H: ConjugacyMap) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["level", "j", "a"])
    for n in sorted(H.levels):
        for j, a in enumerate(H.levels[n]):
            w.writerow([n, j, f"{a:.17g}"])
    return buf.getvalue()


def from_csv(text: str, degree: int | None = None, consistency_tol: float = 1e-8) -> ConjugacyMap:
    """Reload a persisted conjugacy, revalidating monotonicity and consistency.

    ``degree`` may be omitted when two adjacent levels are retained.
    """
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != ["level", "j", "a"]:
        raise MapSpecError("conjugacy CSV must start with header level,j,a")
    levels: dict[int, list[tuple[int, float]]] = {}
    for row in rows[1:]:
        if not row:
            continue
        n, j, a = int(row[0]), int(row[1]), float(row[2])
        levels.setdefault(n, []).append((j, a))
    arrays = {}
    for n, entries in levels.items():
        entries.sort()
        if [j for j, _ in entries] != list(range(len(entries))):
            raise MapSpecError(f"level {n} has missing or duplicate indices")
        vals = np.array([a for _, a in entries])
        vals.setflags(write=False)
        arrays[n] = vals
    depth = max(arrays)
    if degree is None:
        if depth - 1 not in arrays:
            raise MapSpecError("degree is ambiguous with a single retained level")
        degree = round((arrays[depth].size - 1) / (arrays[depth - 1].size - 1))
    H = ConjugacyMap(degree=degree, depth=depth, levels=arrays)
    dev = H.level_consistency()
    if dev > consistency_tol:
        raise ConsistencyViolation(f"retained levels disagree by {dev:.3e}")
    return H


def save(H: ConjugacyMap, path: str | Path) -> None:
    Path(path).write_text(to_csv(H), encoding="utf-8")


def load(path: str | Path, degree: int | None = None, consistency_tol: float = 1e-8) -> ConjugacyMap:
    return from_csv(Path(path).read_text(encoding="utf-8"), degree, consistency_tol)
