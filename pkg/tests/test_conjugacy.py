import numpy as np
import pytest

from circle_uac import conjugacy as conj
from circle_uac.circle_maps import CircleEndomorphism, build_lift, evaluate
from circle_uac.conjugacy import (
    ConjugacyMap,
    MadicGrid,
    build_conjugacy,
    commutation_residual,
    evaluate_H,
    inverse_H,
    qs_certificate,
)
from circle_uac.errors import ConsistencyViolation, MapSpecError, MonotonicityViolation

from test_circle_maps import FINV_HALF


def test_madic_grid():
    pts = MadicGrid(3, 2).points
    assert pts.size == 10
    assert pts[0] == 0.0 and pts[-1] == 1.0
    assert np.all(np.diff(pts) > 0)


@pytest.mark.parametrize("m,depth", [(2, 12), (3, 6), (5, 3)])
def test_power_map_gives_identity(m, depth):
    H = build_conjugacy(build_lift(CircleEndomorphism.power(m)), depth, 1e-12)
    np.testing.assert_allclose(H.values, H.grid, rtol=0, atol=1e-12)
    assert evaluate_H(H, 0.37) == pytest.approx(0.37, abs=1e-12)


def test_blaschke_low_depth_examples(blaschke_lift):
    H1 = build_conjugacy(blaschke_lift, 1, 1e-12)
    assert H1.values[1] == pytest.approx(0.5, abs=1e-12)
    H2 = build_conjugacy(blaschke_lift, 2, 1e-13)
    assert H2.values[1] == pytest.approx(FINV_HALF, abs=1e-12)
    assert evaluate_H(H2, 0.5) == H2.values[2]


def test_integers_are_fixed(blaschke_H10):
    for k in (-3, 0, 1, 5):
        assert evaluate_H(blaschke_H10, float(k)) == k


def test_periodic_extension_is_exact(blaschke_H10):
    # dyadic samples so that x + 1 is representable exactly
    x = np.arange(2**14) / 2**14
    assert np.array_equal(evaluate_H(blaschke_H10, x + 1), evaluate_H(blaschke_H10, x) + 1)


def test_blaschke_commutation(blaschke_H10, blaschke_lift):
    assert commutation_residual(blaschke_H10, blaschke_lift) < 1e-8
    assert blaschke_H10.level_consistency() < 1e-10


def test_power_commutation_is_exact(power_lift, power_H12):
    assert commutation_residual(power_H12, power_lift) <= 1e-15


def test_residual_improves_with_tolerance(blaschke_lift):
    loose = commutation_residual(build_conjugacy(blaschke_lift, 8, 1e-9), blaschke_lift)
    tight = commutation_residual(build_conjugacy(blaschke_lift, 8, 1e-10), blaschke_lift)
    assert tight <= loose


def test_uniqueness_under_refinement(blaschke_H10, blaschke_H12):
    dev = np.max(np.abs(blaschke_H12.level(10) - blaschke_H10.values))
    assert dev <= 10 * blaschke_H10.tol


def test_inverse_grid_map_conjugates_back(blaschke_H10, blaschke_lift):
    m = 2
    x = np.arange(1, 2**9) / 2**9
    back = inverse_H(blaschke_H10, evaluate(blaschke_lift, evaluate_H(blaschke_H10, x)))
    assert np.max(np.abs(back - m * x)) < 1e-8
    assert inverse_H(blaschke_H10, evaluate_H(blaschke_H10, 0.3)) == pytest.approx(0.3, abs=1e-14)


def test_level_lookup(blaschke_H10):
    assert blaschke_H10.level(0).tolist() == [0.0, 1.0]
    assert blaschke_H10.level(1)[1] == pytest.approx(0.5, abs=1e-12)
    with pytest.raises(ValueError):
        blaschke_H10.level(11)


def test_qs_certificate_power(power_H12):
    cert = qs_certificate(power_H12)
    assert cert.M_hat == pytest.approx(1.0, abs=1e-9)
    assert cert.M_prime_bound == pytest.approx(3.0, abs=1e-8)
    assert cert.satisfied


def test_qs_certificate_blaschke(blaschke_H10):
    cert = qs_certificate(blaschke_H10)
    assert 1 < cert.M_hat < 2
    assert cert.satisfied
    assert cert.M_measured <= cert.M_prime_bound


@pytest.mark.parametrize(
    "endo",
    [
        CircleEndomorphism.power(3),
        CircleEndomorphism.blaschke([0.0, 0.3]),
        CircleEndomorphism.blaschke([0.0, 0.05 + 0.02j, 0.05 - 0.02j], [0.02]),
        CircleEndomorphism.perturbed(2, 0.1 * np.sin(2 * np.pi * np.linspace(0, 1, 129))),
    ],
    ids=["power3", "blaschke03", "blaschke_ratio", "perturbed"],
)
def test_qs_certificate_family(endo):
    depth = 6 if endo.degree == 3 else 11
    H = build_conjugacy(build_lift(endo), depth, 1e-12)
    assert qs_certificate(H).satisfied


def test_qs_certificate_needs_depth(blaschke_lift):
    with pytest.raises(ValueError):
        qs_certificate(build_conjugacy(blaschke_lift, 2))


def test_build_rejects_depth_zero(blaschke_lift):
    with pytest.raises(ValueError):
        build_conjugacy(blaschke_lift, 0)


def test_conjugacy_validation():
    with pytest.raises(MonotonicityViolation):
        ConjugacyMap(2, 1, {1: np.array([0.0, 1.2, 1.0])})
    with pytest.raises(MonotonicityViolation):
        ConjugacyMap(2, 1, {1: np.array([0.1, 0.5, 1.0])})
    with pytest.raises(ValueError):
        ConjugacyMap(2, 2, {2: np.array([0.0, 0.5, 1.0])})


def test_csv_round_trip(blaschke_H10, tmp_path):
    path = tmp_path / "h.csv"
    conj.save(blaschke_H10, path)
    text = path.read_text()
    assert text.splitlines()[0] == "level,j,a"
    H = conj.load(path)
    assert H.degree == 2 and H.depth == 10
    for n in blaschke_H10.levels:
        assert np.array_equal(H.levels[n], blaschke_H10.levels[n])
    assert conj.to_csv(H) == text


def test_csv_validation(blaschke_H10):
    text = conj.to_csv(blaschke_H10)
    with pytest.raises(MapSpecError):
        conj.from_csv("a,b,c\n")
    single = "level,j,a\n1,0,0\n1,1,0.5\n1,2,1\n"
    with pytest.raises(MapSpecError):
        conj.from_csv(single)
    assert conj.from_csv(single, degree=2).values[1] == 0.5
    lines = text.splitlines()
    # corrupt one coarse-level value
    idx = next(i for i, line in enumerate(lines) if line.startswith("9,5,"))
    lines[idx] = "9,5," + repr(float(lines[idx].split(",")[2]) + 1e-6)
    with pytest.raises(ConsistencyViolation):
        conj.from_csv("\n".join(lines) + "\n")
    with pytest.raises(MapSpecError):
        conj.from_csv("level,j,a\n1,0,0\n1,2,1\n", degree=2)
