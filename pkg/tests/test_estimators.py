import numpy as np
import pytest

from geflab import estimators as est
from geflab.errors import BudgetTooSmall, InsufficientSignal
from geflab.geometry import lens_area
from geflab.landmarks import LOCALMAX, SADDLE, ZERO, Landmark, LandmarkSet


def synthetic(points_kinds, radius=3.0):
    lms = [Landmark(complex(p), k, 0.0, 0.0) for p, k in points_kinds]
    return LandmarkSet(0j, radius, tuple(l for l in lms if l.kind == ZERO),
                       tuple(l for l in lms if l.kind != ZERO))


def test_tiling_centers_stay_inside_and_are_disjoint():
    cs = est.tiling_centers(0j, 6.0, 0.3)
    assert np.all(np.abs(cs) + 0.3 <= 6.0 + 1e-12)
    d = np.abs(cs[:, None] - cs[None, :]) + np.eye(len(cs)) * 10
    assert d.min() >= 0.7 - 1e-12


def test_normalize_pair_aliases():
    assert est.normalize_pair("c-c+") == "c+c-"
    with pytest.raises(ValueError):
        est.normalize_pair("zq")


def test_continuous_first_values_uniform_pattern():
    # a dense square lattice of zeros with spacing 0.1 has density 100 per unit area
    g = np.arange(-3, 3.0001, 0.1)
    pts = [(complex(x, y), ZERO) for x in g for y in g if abs(complex(x, y)) < 3]
    ls = synthetic(pts)
    v = est.first_values(ls, [0.5], "continuous")[0]
    assert v[0] == pytest.approx(100 * np.pi * 0.25, rel=0.02)
    assert v[1] == 0


def test_continuous_pair_value_for_a_single_pair_far_from_the_edge():
    s, rho, R = 0.2, 0.3, 3.0
    ls = synthetic([(0.1, SADDLE), (0.1 + s, LOCALMAX)], R)
    v = est.pair_values(ls, "cc", [rho], "continuous")[0]
    # two ordered pairs, each weighted by the lens area, averaged over the window B_{R - rho}
    assert v == pytest.approx(2 * lens_area(s, rho) / (np.pi * (R - rho) ** 2), rel=1e-12)
    assert est.pair_values(ls, "c+c-", [rho], "continuous")[0] == pytest.approx(v / 2, rel=1e-12)
    assert est.pair_values(ls, "c+c+", [rho], "continuous")[0] == 0


def test_tiling_and_continuous_agree_on_a_homogeneous_pattern():
    rng = np.random.default_rng(0)
    pts = rng.uniform(-6, 6, (2000, 2)) @ np.array([1, 1j])
    pts = pts[np.abs(pts) < 6]
    ls = synthetic([(p, ZERO) for p in pts], 6.0)
    a = est.pair_values(ls, "zz", [0.5], "tiling")[0]
    b = est.pair_values(ls, "zz", [0.5], "continuous")[0]
    lam = len(pts) / (np.pi * 36)
    expected = (lam * np.pi * 0.25) ** 2
    assert b == pytest.approx(expected, rel=0.15)
    assert a == pytest.approx(expected, rel=0.4)


def test_fit_exponent_exact_power_law():
    r = np.array([0.1, 0.2, 0.3, 0.4, 0.5])
    p = est.RadialProfile("x", tuple(est.ProfileRow(x, 3 * x ** 4, 0.01 * 3 * x ** 4, 10, 10) for x in r))
    f = est.fit_exponent(p)
    assert f.slope == pytest.approx(4.0, abs=1e-10)
    assert f.intercept == pytest.approx(np.log(3), abs=1e-10)
    with pytest.raises(InsufficientSignal):
        est.fit_exponent(p, (0.35, 0.5))


def test_fit_drops_rows_without_signal():
    rows = [est.ProfileRow(0.1, 1e-4, 1e-3, 1, 1)] + [
        est.ProfileRow(x, x ** 6, 0.0, 1, 1) for x in (0.2, 0.3, 0.4, 0.5)]
    f = est.fit_exponent(est.RadialProfile("x", tuple(rows)))
    assert f.n_rows == 4 and f.slope == pytest.approx(6.0)


def test_pair_profile_without_pairs_raises():
    ls = synthetic([(0.0, ZERO)])
    with pytest.raises(BudgetTooSmall):
        est.pair_profile("zz", [0.1, 0.2], [ls])


def test_experiment_validation():
    e = est.PairCountExperiment("c-c+", (0.5, 0.2), 10, 1)
    assert e.pair == "c+c-" and e.radii == (0.2, 0.5)
    with pytest.raises(ValueError):
        est.PairCountExperiment("cc", (1.5,), 10, 1)
    with pytest.raises(ValueError):
        est.PairCountExperiment("cc", (0.5,), 10, 1, placement="random")


def test_corpus_is_independent_of_thread_count():
    a = est.build_corpus(3, 3.0, 5, threads=1)
    b = est.build_corpus(3, 3.0, 5, threads=2)
    assert a == b
