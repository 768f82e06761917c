import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from geflab.errors import OrderTooHigh
from geflab.kernels import (DerivDescriptor, F_at, G_at, PolyExpKernel, eval_cov, eval_cov_mp,
                            kernel_G, pair_kernel, real_derivative_descriptor)

coords = st.floats(-1.5, 1.5, allow_nan=False)


@settings(max_examples=40, deadline=None)
@given(coords, coords, coords, coords)
def test_F_kernel_matches_closed_form(a, b, c, d):
    z, w = complex(a, b), complex(c, d)
    k = pair_kernel(F_at(z), F_at(w))
    assert k(z, w) == pytest.approx(oracles.cov_F(z, w), rel=1e-12, abs=1e-12)


def test_G_derivative_covariances_at_origin():
    # (G, G', G''/sqrt 2, G'''/sqrt 6) at 0 is a standard vector
    c = eval_cov([G_at(0, k) for k in range(4)]).entries
    np.testing.assert_allclose(c, np.diag([1, 1, 2, 6]), atol=1e-15)


def test_cross_covariance_with_point():
    # E[G(z) conj(G^(k)(0))] = z^k
    z = 0.4 - 0.7j
    for k in range(4):
        v = pair_kernel(G_at(z), G_at(0, k))(z, 0)
        assert v == pytest.approx(z ** k, abs=1e-14)


def test_printed_blocks_reproduced():
    for r in (0.1, 0.5, 1.0):
        descs = [F_at(1j * r), F_at(-1j * r), F_at(0, 1, 0), F_at(0, 0, 2), F_at(0, 0, 3)]
        c = eval_cov(descs).entries
        e1, e2 = np.exp(r * r), np.exp(-r * r) * (1 - 4 * r * r)
        assert c[0, 0] == pytest.approx(e1, abs=1e-12)
        assert c[0, 1] == pytest.approx(e2, abs=1e-12)
        assert c[0, 2] == pytest.approx(1j * r * (1 - r * r), abs=1e-12)
        assert c[1, 3] == pytest.approx(-2 + 5 * r * r - r ** 4, abs=1e-12)
        assert c[1, 4] == pytest.approx(6 * r - 7 * r ** 3 + r ** 5, abs=1e-12)
        np.testing.assert_allclose(c[2:, 2:], [[3, 0, 6j], [0, 10, 0], [-6j, 0, 42]], atol=1e-12)


def test_covariant_and_real_partials_agree():
    # F^{(1,0)} = dF + dbarF and F^{(0,1)} = i(dF - dbarF)
    p = 0.3 + 0.2j
    d, db = DerivDescriptor(("cov", "d"), p), DerivDescriptor(("cov", "db"), p)
    c = eval_cov([F_at(p, 1, 0), F_at(p, 0, 1), d, db]).entries
    T = np.array([[1, 1], [1j, -1j]])
    np.testing.assert_allclose(c[:2, :2], T @ c[2:, 2:] @ T.conj().T, atol=1e-12)


def test_order_cap():
    assert real_derivative_descriptor(2, 2) == ("cov", "dx", "dx", "dy", "dy")
    with pytest.raises(OrderTooHigh):
        real_derivative_descriptor(3, 2)


def test_dump_parse_round_trip():
    k = pair_kernel(F_at(0, 1, 1), F_at(0, 0, 2))
    text = k.dump()
    assert all(" * z^" in line for line in text.splitlines())
    assert PolyExpKernel.parse(text) == k
    assert kernel_G().dump().strip() == "(+1+0j) * z^0 zb^0 wb^0 w^0"


def test_mp_and_float_paths_agree():
    descs = [F_at(0.2j), F_at(-0.2j), F_at(0, 1, 0), F_at(0, 0, 3)]
    with mpmath.workdps(30):
        m = eval_cov_mp(descs, dps=30)
        mm = np.array([[complex(m[i, j]) for j in range(4)] for i in range(4)])
    np.testing.assert_allclose(mm, eval_cov(descs).entries, atol=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.lists(st.tuples(coords, coords, st.integers(0, 2), st.integers(0, 2)), min_size=1, max_size=4))
def test_eval_cov_is_psd(spec):
    descs = [F_at(complex(a, b), m, n) for a, b, m, n in spec]
    c = eval_cov(descs).entries
    w = np.linalg.eigvalsh(c)
    assert w.min() > -1e-8 * max(1.0, w.max())
