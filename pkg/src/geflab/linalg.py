"""Circularly-symmetric complex Gaussian vectors: factorization, conditioning, sampling."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import mpmath
import numpy as np

from .errors import NonFiniteSample, NotPositiveSemidefinite, SingularConditioning
from .rng import standard_complex
from .stats import Moments

PSD_EPS = 1e-10
COND_CAP = 1e12


@dataclass(frozen=True)
class HermitianCov:
    entries: np.ndarray

    def __post_init__(self):
        a = np.array(self.entries, dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("covariance must be square")
        scale = max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0
        if np.max(np.abs(a - a.conj().T), initial=0.0) > 1e-9 * scale:
            raise ValueError("covariance is not Hermitian")
        a = 0.5 * (a + a.conj().T)
        if np.any(a.diagonal().real < -PSD_EPS * scale):
            raise NotPositiveSemidefinite("negative diagonal entry")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def n(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class CholFactor:
    lower: np.ndarray
    jitter_used: float

    @property
    def n(self) -> int:
        return self.lower.shape[0]


@dataclass(frozen=True)
class ComplexNormalSample:
    values: np.ndarray
    stream_id: str = ""


def jitter_ladder(max_jitter: float) -> list[float]:
    ladder = [0.0]
    j = 1e-14
    while j <= max_jitter * (1 + 1e-12):
        ladder.append(j)
        j *= 100.0
    return ladder


def cholesky(cov: HermitianCov | np.ndarray, max_jitter: float = 1e-8) -> CholFactor:
    """Lower Cholesky factor using the smallest jitter on the ladder that works.

    Exactly singular PSD matrices (a zero row and column) are handled by
    factoring only the nonzero block, so no jitter is needed for them.
    """
    if not isinstance(cov, HermitianCov):
        cov = HermitianCov(cov)
    a = cov.entries
    n = a.shape[0]
    live = np.flatnonzero(np.any(a != 0, axis=1))
    sub = a[np.ix_(live, live)]
    for jit in jitter_ladder(max_jitter):
        try:
            low = np.linalg.cholesky(sub + jit * np.eye(len(live)))
        except np.linalg.LinAlgError:
            continue
        if not np.all(np.isfinite(low)):
            continue
        full = np.zeros((n, n), dtype=complex)
        full[np.ix_(live, live)] = low
        return CholFactor(full, jit)
    raise NotPositiveSemidefinite(
        f"Cholesky failed for every jitter up to {max_jitter:g}")


def draw(factor: CholFactor, rng: np.random.Generator, count: int) -> np.ndarray:
    """count independent rows Z = L xi, shape (count, n)."""
    xi = standard_complex(rng, (count, factor.n))
    return xi @ factor.lower.T


def sample_complex_normal(factor: CholFactor, rng: np.random.Generator,
                          stream_id: str = "") -> ComplexNormalSample:
    return ComplexNormalSample(draw(factor, rng, 1)[0], stream_id)


def _as_array(cov) -> np.ndarray:
    return cov.entries if isinstance(cov, HermitianCov) else np.asarray(cov, dtype=complex)


def regression_blocks(joint, target_idx: Sequence[int], given_idx: Sequence[int],
                      cond_cap: float = COND_CAP):
    """Return (coef, conditional covariance) for targets given the other block.

    coef maps observed given-values g to the conditional mean coef @ g.
    """
    a = _as_array(joint)
    t = list(target_idx)
    g = list(given_idx)
    s11 = a[np.ix_(g, g)]
    s21 = a[np.ix_(t, g)]
    s22 = a[np.ix_(t, t)]
    if len(g) == 0:
        return np.zeros((len(t), 0), dtype=complex), s22.copy()
    cond = np.linalg.cond(s11)
    if not np.isfinite(cond) or cond > cond_cap:
        raise SingularConditioning(f"given block condition number {cond:.3g} exceeds {cond_cap:g}")
    coef = np.linalg.solve(s11.T, s21.T).T
    cond_cov = s22 - coef @ s21.conj().T
    return coef, 0.5 * (cond_cov + cond_cov.conj().T)


def gaussian_regression(joint, target_idx: Sequence[int], given_idx: Sequence[int],
                        cond_cap: float = COND_CAP) -> HermitianCov:
    """Covariance of the targets conditioned on the given variables being zero."""
    return HermitianCov(regression_blocks(joint, target_idx, given_idx, cond_cap)[1])


def gaussian_regression_mp(joint_mp: "mpmath.matrix", target_idx, given_idx,
                           cond_cap: float = COND_CAP, dps: int = 40) -> HermitianCov:
    """Same as gaussian_regression, with the Schur complement formed in mpmath.

    The subtraction loses about log10(cond) digits, which matters when the
    conditional covariance is much smaller than the joint one.
    """
    with mpmath.workdps(dps):
        return _regression_mp(joint_mp, list(target_idx), list(given_idx), cond_cap)


def _regression_mp(joint_mp, t, g, cond_cap):
    s11 = mpmath.matrix([[joint_mp[i, j] for j in g] for i in g])
    s12 = mpmath.matrix([[joint_mp[i, j] for j in t] for i in g])
    s22 = mpmath.matrix([[joint_mp[i, j] for j in t] for i in t])
    as_np = np.array(s11.tolist(), dtype=complex)
    cond = np.linalg.cond(as_np)
    if not np.isfinite(cond) or cond > cond_cap:
        raise SingularConditioning(f"given block condition number {cond:.3g} exceeds {cond_cap:g}")
    c = s22 - s12.H * mpmath.inverse(s11) * s12
    out = np.array([[complex(c[i, j]) for j in range(len(t))] for i in range(len(t))])
    return HermitianCov(0.5 * (out + out.conj().T))


def mc_expectation(f: Callable[[np.ndarray], np.ndarray], factor: CholFactor, n: int,
                   rng: np.random.Generator, batch: int = 200_000) -> tuple[float, float]:
    """Mean and standard error of f over n conditioned draws.

    f takes a (m, dim) array of draws and returns m reals.
    """
    if n < 2:
        raise ValueError("need at least two draws")
    acc = Moments()
    done = 0
    while done < n:
        m = min(batch, n - done)
        vals = np.asarray(f(draw(factor, rng, m)), dtype=float)
        if not np.all(np.isfinite(vals)):
            raise NonFiniteSample("integrand returned a non-finite value")
        acc = acc.merge(Moments.of(vals))
        done += m
    return acc.mean, acc.stderr


def condition_mp(joint_mp: "mpmath.matrix", target_idx, given_idx, cond_cap: float = COND_CAP,
                 dps: int = 50):
    """Conditional mean coefficients and covariance, both as mpmath matrices."""
    t, g = list(target_idx), list(given_idx)
    with mpmath.workdps(dps):
        s22 = mpmath.matrix([[joint_mp[i, j] for j in t] for i in t])
        if not g:
            return mpmath.matrix(len(t), 0), s22
        s11 = mpmath.matrix([[joint_mp[i, j] for j in g] for i in g])
        s12 = mpmath.matrix([[joint_mp[i, j] for j in t] for i in g])
        cond = np.linalg.cond(np.array(s11.tolist(), dtype=complex))
        if not np.isfinite(cond) or cond > cond_cap:
            raise SingularConditioning(
                f"given block condition number {cond:.3g} exceeds {cond_cap:g}")
        coef = s12.H * mpmath.inverse(s11)
        return coef, s22 - coef * s12


def cholesky_mp(cov_mp: "mpmath.matrix", max_jitter: float = 1e-8, dps: int = 50) -> CholFactor:
    """Cholesky in extended precision, cast to float64.

    Rounding the exact factor perturbs samples by about 1e-16 absolute,
    whereas a float64 factorization of a nearly singular matrix perturbs
    its small directions by roughly the square root of that.
    """
    n = cov_mp.rows
    with mpmath.workdps(dps):
        a = mpmath.matrix(n, n)
        for i in range(n):
            for j in range(n):
                a[i, j] = (cov_mp[i, j] + mpmath.conj(cov_mp[j, i])) / 2
        for jit in [0.0, 1e-30, 1e-24, 1e-18] + [j for j in jitter_ladder(max_jitter) if j > 0]:
            try:
                low = mpmath.cholesky(a + jit * mpmath.eye(n))
            except (ValueError, ZeroDivisionError):
                continue
            out = np.array([[complex(low[i, j]) for j in range(n)] for i in range(n)])
            return CholFactor(np.tril(out), float(jit))
    raise NotPositiveSemidefinite(f"Cholesky failed for every jitter up to {max_jitter:g}")


def to_numpy(m: "mpmath.matrix") -> np.ndarray:
    return np.array([[complex(m[i, j]) for j in range(m.cols)] for i in range(m.rows)])
