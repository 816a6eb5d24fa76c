import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ncphi4.matrix_basis import (
    CycleSpec,
    PlanePoint,
    TruncationTooLarge,
    corollary_sum,
    f_mn,
    finite_volume_cycle,
    gaussian_limit,
    gaussian_limit_check,
    lemma_sum,
)
from ncphi4.special import laguerre
from ncphi4.two_point import power_law_fit


def rel(a, b):
    return abs(a - b) / abs(b)


def test_f00_is_gaussian():
    y = PlanePoint(0.3, -1.2)
    assert f_mn(0, 0, y, 2.0) == pytest.approx(2 * np.exp(-y.norm**2 / 2.0), rel=1e-15)


def test_f_hermiticity(rng):
    for _ in range(5):
        y = rng.normal(size=2)
        theta = rng.uniform(0.5, 3)
        assert f_mn(2, 5, y, theta) == pytest.approx(np.conj(f_mn(5, 2, y, theta)), rel=1e-13)


def test_f11_vanishes_on_laguerre_root():
    theta = 3.0
    y = PlanePoint(np.sqrt(theta / 2), 0.0)
    assert abs(f_mn(1, 1, y, theta)) < 1e-15


def test_f_matches_direct_formula():
    from math import factorial

    y, theta = PlanePoint(0.4, 0.9), 1.7
    m, n = 3, 6
    direct = (2 * (-1) ** m * np.sqrt(factorial(m) / factorial(n))
              * (np.sqrt(2 / theta) * y.complex) ** (n - m)
              * laguerre(m, n - m, 2 * y.norm**2 / theta) * np.exp(-y.norm**2 / theta))
    assert f_mn(m, n, y, theta) == pytest.approx(direct, rel=1e-13)
    assert f_mn(n, m, (0.4, 0.9), theta) == pytest.approx(np.conj(direct), rel=1e-13)


def test_f_origin_and_guards():
    assert f_mn(3, 3, (0, 0), 1.0) == -2
    assert f_mn(2, 3, (0, 0), 1.0) == 0
    with pytest.raises(OverflowError):
        f_mn(401, 0, (1, 0), 1.0)
    with pytest.raises(ValueError):
        f_mn(1, 1, (1, 0), 0.0)
    with pytest.raises(ValueError):
        f_mn(-1, 1, (1, 0), 1.0)
    assert np.isfinite(f_mn(400, 399, (20.0, 3.0), 1.0))


def test_plane_point():
    y = PlanePoint(0.0, 2.0)
    assert y.norm == 2.0 and y.phase == pytest.approx(np.pi / 2) and y.complex == 2j


def test_lemma_single_cycle_generating_function():
    spec = CycleSpec([0.3], [1.0])
    closed = lemma_sum(spec)
    assert closed == pytest.approx(np.exp(-0.3 / 0.7) / 0.7, rel=1e-15)
    assert rel(lemma_sum(spec, 80), closed) <= 1e-10


def test_lemma_zero_times():
    spec = CycleSpec([0.2, -0.4, 0.3], [0, 0, 0])
    closed = lemma_sum(spec)
    assert closed == pytest.approx(1 / (1 - 0.2 * -0.4 * 0.3), rel=1e-15)
    assert rel(lemma_sum(spec, 40), closed) <= 1e-12


def test_lemma_random_three_cycles(rng):
    for _ in range(3):
        z = rng.uniform(0.1, 0.5, 3) * np.exp(1j * rng.uniform(0, 2 * np.pi, 3))
        spec = CycleSpec(z, rng.uniform(0, 2, 3))
        assert rel(lemma_sum(spec, 60), lemma_sum(spec)) <= 1e-8


def test_lemma_cyclic_invariance(rng):
    spec = CycleSpec(rng.uniform(-0.5, 0.5, 4), rng.uniform(0, 2, 4))
    base = lemma_sum(spec)
    for k in range(1, 4):
        assert lemma_sum(spec.rotated(k)) == pytest.approx(base, rel=1e-13)


def test_truncation_converges_geometrically():
    spec = CycleSpec([0.9, 0.85], [1.0, 0.5])
    closed = lemma_sum(spec)
    e20, e40, e60 = (abs(lemma_sum(spec, m) - closed) for m in (20, 40, 60))
    assert e60 < e40 < e20
    assert e60 / e40 <= 0.9**20
    assert e40 / e20 <= 0.9**20


def test_cycle_spec_validation():
    with pytest.raises(ValueError):
        CycleSpec([1.0], [0.0])
    with pytest.raises(ValueError):
        CycleSpec([0.2, 0.3], [0.0])
    with pytest.raises(ValueError):
        CycleSpec([0.2], [-1.0])
    with pytest.raises(TruncationTooLarge):
        lemma_sum(CycleSpec([0.1] * 4, [0.0] * 4), 60)


def test_corollary_at_origin():
    closed = corollary_sum([0j, 0j], [0.3, 0.4], 2.0)
    assert closed == pytest.approx(4 / (1 - 0.3 * 0.4), rel=1e-15)
    assert rel(corollary_sum([0j, 0j], [0.3, 0.4], 2.0, 40), closed) <= 1e-12


def test_corollary_random_pairs(rng):
    theta = 2.0
    for _ in range(3):
        pts = []
        for _ in range(2):
            rad = np.sqrt(theta) * rng.uniform(0, 1)
            pts.append(PlanePoint(*(rad * np.array([np.cos(ph := rng.uniform(0, 6.3)), np.sin(ph)]))))
        z = rng.uniform(-0.5, 0.5, 2)
        assert rel(corollary_sum(pts, z, theta, 70), corollary_sum(pts, z, theta)) <= 1e-6


def test_corollary_three_points(rng):
    xs = [complex(*v) for v in rng.uniform(-0.8, 0.8, (3, 2))]
    z = rng.uniform(-0.5, 0.5, 3)
    assert rel(corollary_sum(xs, z, 1.5, 45), corollary_sum(xs, z, 1.5)) <= 1e-8


def test_corollary_reduces_to_lemma_by_substitution():
    # with f_mn(x) = 2(-1)^m sqrt(m!/n!) w^(n-m) L_m^(n-m)(|w|^2) e^(-|w|^2/2), w = sqrt(2/theta) x,
    # prod f z^m = 2^J prod (-z_i w_{i-1}/w_i)^m_i L(|w_i|^2) e^(-|w_i|^2/2) up to index shifts
    theta = 2.0
    xs = [0.5 + 0.2j, -0.3 + 0.6j, 0.4 - 0.1j]
    z = [0.3, -0.2, 0.25]
    w = [np.sqrt(2 / theta) * x for x in xs]
    J = 3
    zc = [-z[i] * w[i - 1] / w[i] for i in range(J)]
    t = [abs(wi) ** 2 for wi in w]
    expected = 2**J * np.exp(-sum(t) / 2) * lemma_sum(CycleSpec(zc, t))
    assert corollary_sum(xs, z, theta) == pytest.approx(expected, rel=1e-12)


def test_corollary_validation():
    with pytest.raises(ValueError):
        corollary_sum([0j], [0.2, 0.3], 1.0)
    with pytest.raises(ValueError):
        corollary_sum([0j], [1.2], 1.0)
    with pytest.raises(ValueError):
        corollary_sum([0j], [0.2], 0.0)


def test_gaussian_limit_formula():
    pos = np.array([[0.1, 0.2, 0.0, 0.0], [0.0, -0.3, 0.2, 0.1]])
    xi = pos[0] - pos[1]
    assert gaussian_limit(2, pos, 0.7) == pytest.approx(16 / (8 * 0.49) * np.exp(-xi @ xi / 2.8))
    assert gaussian_limit(3, np.zeros((3, 4)), 1.0) == 0.0


def test_gaussian_limit_check_origin_decreasing():
    devs = gaussian_limit_check(2, np.zeros((2, 4)), 1.0)
    assert np.all(np.diff(devs) < 0)


def test_gaussian_limit_check_generic_positions(rng):
    pos = rng.normal(scale=0.5, size=(2, 4))
    devs = gaussian_limit_check(2, pos, 1.0, volumes=(1e6,))
    assert devs[0] <= 1e-2


@pytest.mark.parametrize("j", [2, 4])
def test_gaussian_limit_rate(j, rng):
    pos = rng.normal(scale=0.5, size=(j, 4))
    vols = (1e2, 1e4, 1e6)
    slope = power_law_fit(np.array(vols), np.array(gaussian_limit_check(j, pos, 0.8, vols)),
                          min_samples=3, min_decades=0).slope
    assert slope == pytest.approx(0.5, abs=0.1)


def test_odd_cycles_vanish_in_the_limit(rng):
    pos = rng.normal(scale=0.5, size=(3, 4))
    vals = gaussian_limit_check(3, pos, 1.0, volumes=(1e2, 1e4, 1e6, 1e8))
    assert np.all(np.diff(vals) < 0)
    assert vals[-1] < 1e-6


def test_finite_volume_validation():
    with pytest.raises(ValueError):
        finite_volume_cycle(2, np.zeros((3, 4)), 1.0, 1e2)
    with pytest.raises(ValueError):
        finite_volume_cycle(2, np.zeros((2, 4)), -1.0, 1e2)


@settings(max_examples=15)
@given(st.lists(st.floats(-0.6, 0.6).filter(lambda v: abs(v) > 1e-3), min_size=2, max_size=3),
       st.lists(st.floats(0, 2), min_size=3, max_size=3))
def test_lemma_truncation_property(z, t):
    spec = CycleSpec(z, t[: len(z)])
    closed = lemma_sum(spec)
    assert abs(lemma_sum(spec, 50) - closed) <= 1e-8 * max(1.0, abs(closed))
