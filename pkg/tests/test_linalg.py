import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from geflab.errors import NonFiniteSample, NotPositiveSemidefinite, SingularConditioning
from geflab.linalg import (HermitianCov, cholesky, cholesky_mp, condition_mp, draw,
                           gaussian_regression, jitter_ladder, mc_expectation, regression_blocks,
                           to_numpy)
from geflab.rng import standard_complex, stream


def random_psd(rng, n, rank=None):
    a = standard_complex(rng, (n, rank or n))
    return a @ a.conj().T


def test_hermitian_cov_rejects_asymmetric_and_negative_diagonal():
    with pytest.raises(ValueError):
        HermitianCov([[1, 1j], [1j, 1]])
    with pytest.raises(NotPositiveSemidefinite):
        HermitianCov([[-1.0, 0], [0, 1.0]])
    c = HermitianCov([[2, 1j], [-1j, 2]])
    assert c.n == 2 and not c.entries.flags.writeable


def test_jitter_ladder_starts_at_zero_and_respects_cap():
    assert jitter_ladder(1e-8) == [0.0, 1e-14, 1e-12, 1e-10, 1e-08]


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 6), st.integers(0, 10_000))
def test_cholesky_reconstructs(n, seed):
    rng = np.random.default_rng(seed)
    a = random_psd(rng, n) + 0.1 * np.eye(n)
    f = cholesky(a)
    assert f.jitter_used == 0.0
    np.testing.assert_allclose(f.lower @ f.lower.conj().T, a, atol=1e-10)


def test_cholesky_handles_exact_zero_rows():
    a = np.zeros((3, 3), complex)
    a[0, 0], a[2, 2], a[0, 2], a[2, 0] = 2, 1, 0.5j, -0.5j
    f = cholesky(a)
    np.testing.assert_allclose(f.lower @ f.lower.conj().T, a, atol=1e-14)
    assert np.all(f.lower[1] == 0)


def test_cholesky_fails_on_indefinite():
    with pytest.raises(NotPositiveSemidefinite):
        cholesky(np.array([[1.0, 2.0], [2.0, 1.0]]))


def test_draw_has_requested_covariance():
    a = np.array([[2.0, 0.5 + 0.5j], [0.5 - 0.5j, 1.0]])
    z = draw(cholesky(a), stream(1, 0), 200_000)
    emp = z.T @ z.conj() / len(z)
    np.testing.assert_allclose(emp, a, atol=0.03)
    # circular symmetry: the pseudo-covariance vanishes
    assert np.abs(z.T @ z / len(z)).max() < 0.03


def test_regression_bivariate_closed_form():
    # Var(X | Y = 0) = Vx - |c|^2 / Vy
    a = np.array([[3.0, 1 + 1j], [1 - 1j, 2.0]])
    coef, cov = regression_blocks(a, [0], [1])
    assert cov[0, 0].real == pytest.approx(3 - 2 / 2)
    assert coef[0, 0] == pytest.approx((1 + 1j) / 2)


def test_regression_refuses_ill_conditioned_blocks():
    a = np.array([[1.0, 1.0, 0.3], [1.0, 1.0 + 1e-14, 0.3], [0.3, 0.3, 1.0]])
    with pytest.raises(SingularConditioning):
        gaussian_regression(a, [2], [0, 1])


def test_mp_regression_matches_float_when_well_conditioned():
    rng = np.random.default_rng(3)
    a = random_psd(rng, 5) + np.eye(5)
    _, cov = regression_blocks(a, [3, 4], [0, 1, 2])
    with mpmath.workdps(40):
        m = mpmath.matrix(a.tolist())
        _, cmp_ = condition_mp(m, [3, 4], [0, 1, 2])
    np.testing.assert_allclose(to_numpy(cmp_), cov, atol=1e-10)
    f = cholesky_mp(cmp_)
    np.testing.assert_allclose(f.lower @ f.lower.conj().T, cov, atol=1e-10)


def test_mc_expectation_of_second_moment():
    f = cholesky(np.array([[2.0]]))
    m, se = mc_expectation(lambda z: np.abs(z[:, 0]) ** 2, f, 100_000, stream(2, 0))
    assert abs(m - 2) < 5 * se


def test_mc_expectation_rejects_non_finite():
    f = cholesky(np.array([[1.0]]))
    with pytest.raises(NonFiniteSample):
        mc_expectation(lambda z: np.full(len(z), np.nan), f, 10, stream(0, 0))
