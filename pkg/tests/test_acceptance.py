"""Acceptance criteria 1-9, each at its stated tolerance.

Run ``pytest tests/test_acceptance.py`` (or ``python tests/test_acceptance.py``);
the terminal summary prints one PASS/FAIL line per criterion.
"""

import json
import math

import numpy as np
import pytest

from circle_uac.ba_extension import beltrami_field, beltrami_point, cui_compare, decay_profile, extend_point
from circle_uac.catalog import CATALOG, affine, identity
from circle_uac.cli import COMMANDS, main
from circle_uac.conjugacy import commutation_residual, qs_certificate
from circle_uac.distortion import SKEW_KS, interval_qs_constant, rho_skew, vartheta, zeta
from circle_uac.uac import StripSpec, certify_uac, dilatation_table, scaling_deviation

from conftest import DATA
from test_ba_extension import fd_mu
from test_cli import FAST, snapshot
from test_distortion import zeta_oracle

DYADIC8 = 2.0 ** -np.arange(1, 9)
STRIP_GRID = np.meshgrid(np.arange(64) / 64, DYADIC8)
BASELINE = DATA / "uac_blaschke_a01_depth12.json"


def assert_extension_invariants(ev):
    assert np.all(ev.b > 0)
    assert np.all(ev.denominator > 1)


def crit(n, title):
    return pytest.mark.criterion(n, title)


# 1 -------------------------------------------------------------------------

@crit(1, "identity and affine extensions")
def test_c1_identity_extension_closed_form(power_H12):
    X, Y = STRIP_GRID
    U, V = extend_point(power_H12, X, Y)
    assert np.max(np.abs(U - X)) <= 1e-12
    assert np.max(np.abs(V - Y)) <= 1e-12


@crit(1, "identity and affine extensions")
def test_c1_identity_extension_quadrature():
    X, Y = STRIP_GRID
    U, V = extend_point(identity, X, Y)
    assert np.max(np.abs(U - X)) <= 1e-12
    assert np.max(np.abs(V - Y)) <= 1e-12


@crit(1, "identity and affine extensions")
@pytest.mark.parametrize("H", [identity, affine(2.0, 3.0)], ids=["identity", "2x+3"])
def test_c1_mu_vanishes(H):
    ev = beltrami_point(H, *STRIP_GRID)
    assert ev.mu.shape == (8, 64)
    assert np.max(np.abs(ev.mu)) <= 1e-12
    assert_extension_invariants(ev)


# 2 -------------------------------------------------------------------------

@crit(2, "closed-form mu against finite differences")
def test_c2_derivative_identities():
    H = CATALOG["sine"]
    X, Y = np.meshgrid(np.arange(10) / 10 + 0.03, [0.5, 0.3, 0.2, 0.125, 0.0625])
    X, Y = X.ravel(), Y.ravel()
    assert X.size == 50
    ev = beltrami_point(H, X, Y)
    assert_extension_invariants(ev)
    err3 = np.abs(fd_mu(H, X, Y, 1e-3) - ev.mu)
    err4 = np.abs(fd_mu(H, X, Y, 1e-4) - ev.mu)
    assert np.max(err4) <= 1e-5
    order = math.log10(np.max(err3) / np.max(err4))
    assert order >= 1.8


# 3 -------------------------------------------------------------------------

@crit(3, "(a, b, c) at the identity and b > 0 everywhere")
def test_c3_abc_identity_exact(power_H12):
    for subject in (power_H12, identity):
        ev = beltrami_point(subject, *STRIP_GRID)
        assert np.all(ev.a == 0.0)
        assert np.all(ev.b == 1.0)
        assert np.all(ev.c == 0.0)


@crit(3, "(a, b, c) at the identity and b > 0 everywhere")
def test_c3_denominator_everywhere(blaschke_H12):
    subjects = [*CATALOG.values(), blaschke_H12, affine(2.0, 3.0)]
    for subject in subjects:
        assert_extension_invariants(beltrami_point(subject, *STRIP_GRID))


# 4 -------------------------------------------------------------------------

@crit(4, "zeta bound on normalized catalog maps")
def test_c4_zeta_values():
    assert zeta(1.0) == 0.0
    grid = [1 + 0.1 * i for i in range(21)]
    vals = [zeta(M) for M in grid]
    assert np.all(np.diff(vals) >= 0)
    for M in grid:
        assert zeta(M) == pytest.approx(zeta_oracle(M), abs=1e-12)


@crit(4, "zeta bound on normalized catalog maps")
@pytest.mark.parametrize("name", sorted(CATALOG))
def test_c4_sup_deviation(name):
    H = CATALOG[name]
    assert H(0.0) == 0.0 and H(1.0) == pytest.approx(1.0, abs=1e-15)
    M_hat = interval_qs_constant(H, 0.0, 1.0)
    x = np.linspace(0.0, 1.0, 2**14 + 1)
    assert np.max(np.abs(H(x) - x)) <= zeta_oracle(M_hat) + 1e-9


# 5 -------------------------------------------------------------------------

def _c5_samples(count=1000):
    """Deterministic (map, x, y) triples from additive recurrences."""
    names = sorted(CATALOG)
    i = np.arange(count)
    xs = np.mod(0.5 + i * 0.6180339887498949, 1.0)
    ys = 0.005 + 0.495 * np.mod(i * 0.41421356237309515, 1.0)
    return [(names[j % len(names)], float(x), float(y)) for j, x, y in zip(i, xs, ys)]


@crit(5, "skew distortion bounded by vartheta")
def test_c5_vartheta_bound():
    samples = _c5_samples()
    assert len(samples) == 1000
    for name, x, y in samples:
        H = CATALOG[name]
        bound = vartheta(interval_qs_constant(H, x - y, x + y, cells=64)) + 1e-9
        for k in SKEW_KS:
            for sign in (1.0, -1.0):
                assert abs(rho_skew(H, x, sign * y, k) - k) <= bound, (name, x, y, k, sign)


# 6 -------------------------------------------------------------------------

@crit(6, "conjugacy pipeline")
def test_c6_power_identity(power_H12):
    assert power_H12.depth == 12
    assert np.max(np.abs(power_H12.values - power_H12.grid)) <= 1e-12


@crit(6, "conjugacy pipeline")
def test_c6_blaschke(blaschke_H10, blaschke_lift):
    assert blaschke_H10.tol == 1e-12
    assert commutation_residual(blaschke_H10, blaschke_lift) < 1e-8
    assert blaschke_H10.level_consistency() < 1e-10
    cert = qs_certificate(blaschke_H10)
    assert cert.satisfied and cert.M_measured <= cert.M_prime_bound


# 7 -------------------------------------------------------------------------

SYMMETRIC = sorted(name for name, m in CATALOG.items() if m.symmetric)


@crit(7, "decay and Cui gap profiles nonincreasing")
@pytest.mark.parametrize("name", SYMMETRIC)
def test_c7_decay_profile(name):
    prof = decay_profile(beltrami_field(CATALOG[name], 64, DYADIC8))
    assert prof.is_nonincreasing(1e-10), prof.values


@crit(7, "decay and Cui gap profiles nonincreasing")
def test_c7_cui_identity_vs_sine():
    cmp = cui_compare(identity, CATALOG["sine"], 64, DYADIC8)
    assert cmp.min_denominator > 1
    assert cmp.mu_gap.is_nonincreasing(1e-10), cmp.mu_gap.values
    assert cmp.skew_gap.is_nonincreasing(1e-10), cmp.skew_gap.values


# 8 -------------------------------------------------------------------------

def _assert_close_tree(got, want, path="report"):
    if isinstance(want, dict):
        assert set(got) == set(want), path
        for key in want:
            _assert_close_tree(got[key], want[key], f"{path}.{key}")
    elif isinstance(want, list):
        assert len(got) == len(want), path
        for i, (g, w) in enumerate(zip(got, want)):
            _assert_close_tree(g, w, f"{path}[{i}]")
    elif isinstance(want, float) and not isinstance(want, bool):
        assert abs(got - want) <= 1e-9, (path, got, want)
    else:
        assert got == want, path


@crit(8, "Blaschke UAC report and regression baseline")
def test_c8_uac_pipeline(blaschke_H12):
    strip = StripSpec.dyadic(4, 64)
    table, eta, _ = scaling_deviation(blaschke_H12, 2, 4, strip)
    assert eta.is_nonincreasing()
    assert np.all(table[0] == 0.0)
    assert np.all(dilatation_table(blaschke_H12, 2, 4, strip)[0] == 1.0)


@crit(8, "Blaschke UAC report and regression baseline")
def test_c8_regression_baseline(tmp_path):
    baseline = json.loads(BASELINE.read_text())
    bounds = ",".join(repr(b) for _, b in baseline["schedule"])
    status = main([
        "--command", "uac-check", "--map", str(DATA / "blaschke_a01.txt"), "--depth", "12",
        "--nmax", "4", "--xcount", "64", "--bounds", bounds, "--out", str(tmp_path),
    ])
    assert status == 0
    report = json.loads((tmp_path / "uac_report.json").read_text())
    _assert_close_tree(report, baseline)
    assert report["pass"] is True


# 9 -------------------------------------------------------------------------

@crit(9, "byte-identical CLI reruns")
@pytest.mark.parametrize("command", COMMANDS)
def test_c9_determinism(tmp_path, command):
    a, b = tmp_path / "a", tmp_path / "b"
    args = ["--command", command, *FAST[command]]
    assert main([*args, "--out", str(a)]) == 0
    first = snapshot(a)
    assert main([*args, "--out", str(a)]) == 0
    assert snapshot(a) == first
    # a second directory differs only in the recorded output path
    assert main([*args, "--out", str(b)]) == 0
    second = snapshot(b)
    assert set(second) == set(first)
    for name in first:
        if name != "manifest.json":
            assert second[name] == first[name], name
    ma, mb = json.loads(first["manifest.json"]), json.loads(second["manifest.json"])
    ma["config"].pop("output_dir")
    mb["config"].pop("output_dir")
    assert ma == mb


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q"]))
