import math

import numpy as np
import pytest

import oracles
from geflab import kacrice as kr
from geflab.errors import DegenerateDiagonal, SingularConditioning
from geflab.rng import stream


def test_pair_denominators():
    z, w = 0.3 + 0.1j, -0.2j
    s2 = abs(z - w) ** 2
    pref = math.exp(abs(z) ** 2 + abs(w) ** 2)
    assert kr.pair_denominator(z, w, "cc") == pytest.approx(pref * (1 - math.exp(-s2) * (1 - s2) ** 2))
    assert kr.pair_denominator(z, w, "zc") == pytest.approx(pref * (1 - s2 * math.exp(-s2)))
    assert kr.pair_denominator(0.5, 0.5, "zc") == pytest.approx(math.exp(0.5))
    with pytest.raises(DegenerateDiagonal):
        kr.pair_denominator(0.5, 0.5, "cc")


def test_conditioning_floor():
    with pytest.raises(SingularConditioning):
        kr.sigma("c", 5e-5, 10, stream(0, 0))
    with pytest.raises(SingularConditioning):
        kr.conditional_derivative_cov(1e-5)


def test_conditional_cov_frozen_and_limit():
    np.testing.assert_allclose(kr.conditional_derivative_cov(0.5).entries, oracles.COND_HALF, atol=1e-12)
    np.testing.assert_allclose(kr.conditional_derivative_cov(1e-3).entries,
                               oracles.LIMIT_CONDITIONAL, atol=1e-2)


def test_sigma_c_limit():
    m, se = kr.sigma("c", 0.01, 200_000, stream(1, 0))
    assert m / 1e-4 == pytest.approx(oracles.SIGMA_C_OVER_R2, rel=0.05)


def test_sign_partition_is_exact():
    d = kr.sigma_all(0.3, 50_000, stream(1, 1))
    assert d["c"][0] == pytest.approx(d["c+"][0] + d["c-"][0] + d["mixed"][0], rel=1e-12)


def test_rotation_invariance():
    a, ea = kr.sigma("c", 0.25, 200_000, stream(2, 0), rotation=0.0)
    b, eb = kr.sigma("c", 0.25, 200_000, stream(2, 1), rotation=2.0)
    assert abs(a - b) < 4 * math.hypot(ea, eb)


def test_cc_intensity_translation_and_symmetry():
    z, w = 0.2 + 0.1j, -0.15j
    a, ea = kr.cc_intensity("cc", z, w, 200_000, stream(3, 0))
    b, eb = kr.cc_intensity("cc", z + 1 - 1j, w + 1 - 1j, 200_000, stream(3, 1))
    assert abs(a - b) < 4 * math.hypot(ea, eb)
    with pytest.raises(DegenerateDiagonal):
        kr.cc_intensity("cc", z, z, 10, stream(3, 2))


def test_cc_density_near_zero_matches_limit():
    s = 0.02
    q, se = kr.cc_intensity("cc", 0.5j * s, -0.5j * s, 400_000, stream(4, 0))
    assert q == pytest.approx(oracles.CC_DENSITY_AT_ZERO, rel=0.03)


def test_zc_minus_importance_sampler_agrees_with_direct_sampling():
    a, ea = kr.zc_minus_numerator(1.1, 200_000, stream(5, 0))
    b, eb = kr.zc_minus_numerator_plain(1.1, 1_000_000, stream(5, 1))
    assert abs(a - b) < 4 * math.hypot(ea, eb)


def test_zc_intensity_translation():
    z, w = 0.6 + 0.2j, 0.1j
    a, ea = kr.zc_intensity("zc+", z, w, 200_000, stream(6, 0))
    b, eb = kr.zc_intensity("zc+", z - 0.5, w - 0.5, 200_000, stream(6, 1))
    assert abs(a - b) < 4 * math.hypot(ea, eb)


def test_fourth_moment_exact_and_mc():
    exact, (m, se) = kr.fourth_moment_d2G(0.05, 0, 200_000, stream(7, 0))
    assert exact == pytest.approx(8.0, rel=1e-3)
    assert abs(m - exact) < 5 * se


def test_integrate_pair_deterministic_densities():
    assert kr.integrate_pair("cc", 0.2, density=lambda s: np.zeros_like(s)).value == 0.0
    # constant density d gives d * (pi rho^2)^2
    v = kr.integrate_pair("cc", 0.3, density=lambda s: np.full_like(s, 2.0)).value
    assert v == pytest.approx(2.0 * (math.pi * 0.09) ** 2, rel=1e-8)
    rr = np.geomspace(0.05, 0.4, 4)
    vals = [kr.integrate_pair("zc-", r, density=lambda s: s ** 16).value for r in rr]
    assert np.polyfit(np.log(rr), np.log(vals), 1)[0] == pytest.approx(20.0, abs=1e-6)


def test_integrate_pair_cc_small_disk():
    rho = 0.05
    res = kr.integrate_pair("cc", rho, 10_000, stream(8, 0), n_nodes=32)
    ratio = res.value / (5 / 3 * rho * rho) ** 2
    assert ratio == pytest.approx(oracles.CC_RATIO, abs=0.02)
    assert res.quadrature_error < 0.01 * res.value
    assert res.n_nodes == 32 and res.n_draws == 10_000


def test_indicator_closed_forms():
    assert kr.indicator_probability(0.5) == pytest.approx(0.2)
    for z, ref in oracles.ZCM_EXPECTATION.items():
        assert kr.zcm_expectation_closed(z) == pytest.approx(ref, rel=1e-12)
    assert kr.zcm_polar_closed(1.0) == pytest.approx(oracles.ZCM_POLAR_1, rel=1e-12)
    m, se = kr.indicator_mc(0.5, 200_000, stream(9, 0))
    assert abs(m - 0.2) < 5 * se


def test_phi_expectations():
    assert kr.phi_expectation("plus", 0.0, 10, stream(10, 0)) == (0.0, 0.0)
    a, _ = kr.phi_expectation("plus", 0.2, 200_000, stream(10, 1))
    b, _ = kr.phi_expectation("plus", 0.4, 200_000, stream(10, 2))
    assert math.log(b / a) / math.log(2) == pytest.approx(3.0, abs=0.25)
    m, _ = kr.phi_expectation("minus", 0.3, 200_000, stream(10, 3))
    assert 0 <= m < a * 27 / 8


def test_proxy_expansion_small_r():
    rep = kr.proxy_expansion_check(0.01, 100_000, stream(11, 0))
    assert rep.mean_A2 == pytest.approx(8.0, rel=0.05)
    assert rep.p99_plus < 100 and rep.p99_minus < 100


def test_smallball_probe():
    assert kr.smallball_probe(1, 0.0, 10, stream(12, 0)) == (0.0, 0.0)
    ratios = []
    for r in (0.5, 0.05):
        p, _ = kr.smallball_probe(1, r, 200_000, stream(12, 1))
        ratios.append(p / kr.smallball_scale(1, r))
    assert max(ratios) / min(ratios) < 3
    for case in (2, 3):
        p, _ = kr.smallball_probe(case, 0.1, 200_000, stream(12, case))
        assert 0 < p / kr.smallball_scale(case, 0.1) < 3


def test_smallball_monotone_on_common_draws():
    ps = [kr.smallball_probe(1, r, 50_000, stream(13, 0))[0] for r in (0.05, 0.1, 0.2, 0.4)]
    assert all(a <= b for a, b in zip(ps, ps[1:]))
