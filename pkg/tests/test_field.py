import math

import numpy as np
import pytest

import oracles
from geflab.errors import OutsideStableDisk, RadiusTooLarge
from geflab.field import (GefEvaluator, bargmann_fock_shift, eval_jet, from_coeffs, load_sample,
                          sample_gef, save_sample, truncation_order, truncation_tail_bound)
from geflab.rng import stream


def test_truncation_policy():
    assert truncation_order(6.0) == 146
    assert truncation_order(1.0) == 61


@pytest.mark.parametrize("N,R", list(oracles.TAIL))
def test_tail_bound_matches_series(N, R):
    assert truncation_tail_bound(N, R) == pytest.approx(oracles.TAIL[(N, R)], rel=1e-10)


def test_tail_bound_is_negligible_at_policy_order():
    for R in (1.0, 6.0, 12.0):
        assert truncation_tail_bound(truncation_order(R), R) * math.exp(-R * R) < 1e-15


def test_radius_cap():
    with pytest.raises(RadiusTooLarge):
        sample_gef(12.5, stream(0, 0))


def test_jet_matches_direct_series():
    s = sample_gef(3.0, stream(5, 0))
    ev = GefEvaluator(s)
    for z in (0.0, 0.7 - 0.2j, -2.1 + 1.9j):
        jet = ev(np.array([z]))
        ref = oracles.series_jet(s.coeffs, z)
        w = math.exp(-abs(z) ** 2 / 2)
        got = [jet.wG[0], jet.wdG[0], jet.wd2G[0], jet.wd3G[0]]
        for g, r in zip(got, ref):
            assert g == pytest.approx(w * r, rel=1e-12, abs=1e-13)


def test_outside_stable_disk():
    ev = GefEvaluator(sample_gef(2.0, stream(0, 1)))
    with pytest.raises(OutsideStableDisk):
        ev(np.array([2.5]))


def test_weighted_F_and_jacobian_identities():
    s = from_coeffs([0.3, 1.0, -0.5j, 0.2])
    z = np.array([0.4 + 0.1j])
    j = eval_jet(s, z)
    assert j.wF[0] == pytest.approx(np.conj(z[0]) * j.wG[0] - j.wdG[0])
    assert j.jac_w[0] == pytest.approx(abs(j.wdF[0]) ** 2 - abs(j.wG[0]) ** 2)


def test_pointwise_variance_is_one():
    ev_pts = np.array([0.0, 1.0 + 1.0j, -2.5])
    vals = np.array([GefEvaluator(sample_gef(3.0, stream(9, i)))(ev_pts).wG for i in range(4000)])
    np.testing.assert_allclose(np.mean(np.abs(vals) ** 2, axis=0), 1.0, atol=0.08)


def test_shift_equals_translated_weighted_modulus():
    # |weighted shifted G|(z) = |weighted G|(z - zeta)
    ev = GefEvaluator(sample_gef(4.0, stream(3, 0)))
    zeta = 0.8 - 0.4j
    sh = bargmann_fock_shift(ev, zeta)
    z = np.array([0.1 + 0.2j, -1.0 + 0.5j])
    np.testing.assert_allclose(np.abs(sh(z).wG), np.abs(ev(z - zeta).wG), rtol=1e-12)
    # the shifted field is again analytic: its weighted derivative satisfies the same identity
    j = sh(z)
    h = 1e-6
    num = (sh(z + h).wG * np.exp(abs(z + h) ** 2 / 2) - sh(z - h).wG * np.exp(abs(z - h) ** 2 / 2)) / (2 * h)
    np.testing.assert_allclose(num * np.exp(-abs(z) ** 2 / 2), j.wdG, rtol=1e-6)


def test_save_load_is_bit_exact(tmp_path):
    s = sample_gef(2.5, stream(4, 2), seed=(4, 2))
    p = tmp_path / "s.csv"
    save_sample(s, p)
    t = load_sample(p)
    assert t.seed == (4, 2) and t.R_max == s.R_max and t.N == s.N
    assert np.array_equal(t.coeffs, s.coeffs)
    assert p.read_text().startswith("# geflab-sample v1")


def test_same_stream_same_sample():
    a = sample_gef(2.0, stream(8, 1))
    b = sample_gef(2.0, stream(8, 1))
    c = sample_gef(2.0, stream(8, 2))
    assert np.array_equal(a.coeffs, b.coeffs) and not np.array_equal(a.coeffs, c.coeffs)
