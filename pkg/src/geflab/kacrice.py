"""Two-point Kac-Rice intensities by Gaussian conditioning and Monte Carlo.

All conditional covariances are formed and factored in extended precision
(mpmath) and only then cast to float64 for sampling; at small separations
the conditioned derivatives are nearly collinear and float64 conditioning
would destroy the quantities being measured.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import mpmath
import numpy as np
from scipy.integrate import quad

from .errors import DegenerateDiagonal, SingularConditioning
from .geometry import lens_area
from .kernels import DerivDescriptor, F_at, G_at, eval_cov_mp
from .linalg import (COND_CAP, CholFactor, HermitianCov, cholesky_mp, condition_mp, draw,
                     to_numpy)
from .rng import standard_complex
from .stats import Moments

R_MIN = 1e-4
DPS = 50
BATCH = 200_000
SIGMA_KINDS = ("c", "c+", "c-", "c+-")
PAIR_KINDS = ("cc", "c+c+", "c-c-", "c+c-", "zc+", "zc-")
# Small-separation limits of the pair densities, used on [0, 2 R_MIN] only.
_DENSITY_AT_ZERO = {"cc": 2 / (3 * np.pi ** 2), "c+c-": 1 / (3 * np.pi ** 2)}


def _dF(p):
    return DerivDescriptor(("cov", "d"), p)


def _dbarF(p):
    return DerivDescriptor(("cov", "db"), p)


def jac_from_partials(f10, f01):
    """Jacobian determinant of a planar map from its x and y partials."""
    return -np.imag(f10 * np.conj(f01))


def pair_denominator(z: complex, w: complex, family: str) -> float:
    """Determinant of the covariance of the conditioning pair."""
    s2 = abs(z - w) ** 2
    pref = np.exp(abs(z) ** 2 + abs(w) ** 2)
    if family == "cc":
        if s2 == 0:
            raise DegenerateDiagonal("critical-critical density is undefined at z = w")
        return float(pref * -np.expm1(np.log1p(-s2) * 2 - s2) if s2 < 1 else
                     pref * (1 - np.exp(-s2) * (1 - s2) ** 2))
    if family == "zc":
        return float(pref * (1 - np.exp(-s2) * s2))
    raise ValueError("family must be 'cc' or 'zc'")


@dataclass(frozen=True)
class Conditioned:
    """A conditioned Gaussian vector ready for sampling."""
    factor: CholFactor
    cov: np.ndarray

    def draw(self, rng, n):
        return draw(self.factor, rng, n)

    def from_normals(self, xi):
        return xi @ self.factor.lower.T


@lru_cache(maxsize=4096)
def conditioned(targets: tuple[DerivDescriptor, ...], given: tuple[DerivDescriptor, ...],
                cond_cap: float = COND_CAP) -> Conditioned:
    with mpmath.workdps(DPS):
        joint = eval_cov_mp(list(given) + list(targets), dps=DPS)
        ng = len(given)
        _, cov = condition_mp(joint, range(ng, ng + len(targets)), range(ng), cond_cap, DPS)
        factor = cholesky_mp(cov, dps=DPS)
    return Conditioned(factor, to_numpy(cov))


def _check_r(r):
    if r < R_MIN:
        raise SingularConditioning(f"r={r:g} is below the conditioning floor {R_MIN:g}")


def _pair_sampler(z, w):
    targets = (F_at(z, 1, 0), F_at(z, 0, 1), F_at(w, 1, 0), F_at(w, 0, 1))
    return conditioned(targets, (F_at(z), F_at(w)))


def _cc_values(kind, j1, j2):
    prod = np.abs(j1 * j2)
    if kind in ("c", "cc"):
        return prod
    if kind in ("c+", "c+c+"):
        return prod * ((j1 > 0) & (j2 > 0))
    if kind in ("c-", "c-c-"):
        return prod * ((j1 < 0) & (j2 < 0))
    if kind in ("c+-", "c+c-"):
        return prod * ((j1 > 0) & (j2 < 0))
    raise ValueError(f"unknown kind {kind!r}")


def _jac_pairs(Z):
    return jac_from_partials(Z[:, 0], Z[:, 1]), jac_from_partials(Z[:, 2], Z[:, 3])


def _mc(fn, n, rng, batch=BATCH):
    acc = Moments()
    done = 0
    while done < n:
        m = min(batch, n - done)
        acc = acc.merge(Moments.of(fn(m)))
        done += m
    return acc.mean, acc.stderr


def sigma(kind: str, r: float, n_draws: int, rng, rotation: float = 0.0) -> tuple[float, float]:
    """Conditional expectation of |jac F(p) jac F(-p)| (with sign indicators), p = i r e^{i rotation}.

    kind: "c" (no indicator), "c+" (both positive), "c-" (both negative),
    "c+-" (positive at p, negative at -p).
    """
    _check_r(r)
    p = 1j * r * np.exp(1j * rotation)
    smp = _pair_sampler(p, -p)
    return _mc(lambda m: _cc_values(kind, *_jac_pairs(smp.draw(rng, m))), n_draws, rng)


def sigma_all(r: float, n_draws: int, rng) -> dict[str, tuple[float, float]]:
    """All sigma kinds on common draws, plus the mixed-sign remainder."""
    _check_r(r)
    smp = _pair_sampler(1j * r, -1j * r)
    accs = {k: Moments() for k in ("c", "c+", "c-", "mixed")}
    done = 0
    while done < n_draws:
        m = min(BATCH, n_draws - done)
        j1, j2 = _jac_pairs(smp.draw(rng, m))
        prod = np.abs(j1 * j2)
        same_pos = (j1 > 0) & (j2 > 0)
        same_neg = (j1 < 0) & (j2 < 0)
        parts = {"c": prod, "c+": prod * same_pos, "c-": prod * same_neg,
                 "mixed": prod * ~(same_pos | same_neg)}
        for k, v in parts.items():
            accs[k] = accs[k].merge(Moments.of(v))
        done += m
    return {k: (a.mean, a.stderr) for k, a in accs.items()}


def conditional_derivative_cov(r: float) -> HermitianCov:
    """Covariance of (F10(0), F02(0), F03(0)) given F(ir) = F(-ir) = 0."""
    _check_r(r)
    c = conditioned((F_at(0, 1, 0), F_at(0, 0, 2), F_at(0, 0, 3)), (F_at(1j * r), F_at(-1j * r)))
    return HermitianCov(c.cov)


# ------------------------------------------------------------------ intensities

def cc_intensity(kind: str, z: complex, w: complex, n_draws: int, rng) -> tuple[float, float]:
    """Second factorial intensity of critical points at (z, w)."""
    if z == w:
        raise DegenerateDiagonal("z = w")
    smp = _pair_sampler(complex(z), complex(w))
    kind = {"cc": "c", "c+c+": "c+", "c-c-": "c-", "c+c-": "c+-"}.get(kind, kind)
    m, se = _mc(lambda k: _cc_values(kind, *_jac_pairs(smp.draw(rng, k))), n_draws, rng)
    den = np.pi ** 2 * pair_denominator(z, w, "cc")
    return m / den, se / den


def _zc_plus_sampler(z, w):
    return conditioned((G_at(z, 1), _dF(w), _dbarF(w)), (G_at(z), F_at(w)))


def zc_plus_numerator(z: complex, w: complex, n_draws: int, rng) -> tuple[float, float]:
    """E[|jac G(z)| |jac F(w)| 1{jac F(w) > 0} | G(z) = F(w) = 0]."""
    smp = _zc_plus_sampler(complex(z), complex(w))

    def f(m):
        Z = smp.draw(rng, m)
        jg = np.abs(Z[:, 0]) ** 2
        jf = np.abs(Z[:, 1]) ** 2 - np.abs(Z[:, 2]) ** 2
        return jg * np.abs(jf) * (jf > 0)
    return _mc(f, n_draws, rng)


@dataclass(frozen=True)
class _ZcMinusModel:
    """Chain factorization X -> W | X -> Y | X, W for X = G(0), W = d2G(0), Y = dG(z)."""
    vX: float
    bW: complex
    vW: float
    gX: complex
    gW: complex
    vY: float


@lru_cache(maxsize=1024)
def _zc_minus_model(z: complex) -> _ZcMinusModel:
    given = [G_at(z), F_at(0)]
    X, W, Y = G_at(0), G_at(0, 2), G_at(z, 1)
    with mpmath.workdps(DPS):
        joint = eval_cov_mp(given + [X, W, Y], dps=DPS)
        _, cx = condition_mp(joint, [2], [0, 1], np.inf, DPS)
        cw_coef, cw = condition_mp(joint, [3], [0, 1, 2], np.inf, DPS)
        cy_coef, cy = condition_mp(joint, [4], [0, 1, 2, 3], np.inf, DPS)
        return _ZcMinusModel(float(mpmath.re(cx[0, 0])), complex(cw_coef[0, 2]),
                             float(mpmath.re(cw[0, 0])), complex(cy_coef[0, 2]),
                             complex(cy_coef[0, 3]), float(mpmath.re(cy[0, 0])))


def _zc_minus_from_uniforms(model: _ZcMinusModel, xi, u1, u2):
    """Importance-sampled draws of |Y|^2 (|X|^2 - |W|^2) 1{|W| < |X|}.

    W is drawn uniformly from the disk |W| < |X| and reweighted by its
    conditional density; the Y factor is replaced by its exact conditional
    mean given (X, W).
    """
    X = np.sqrt(model.vX) * xi
    ax = np.abs(X)
    U = ax * np.sqrt(u1) * np.exp(2j * np.pi * u2)
    dens = np.exp(-np.abs(U - model.bW * X) ** 2 / model.vW) / (np.pi * model.vW)
    weight = np.pi * ax ** 2 * dens
    mY = model.gX * X + model.gW * U
    return weight * (ax ** 2 - np.abs(U) ** 2) * (np.abs(mY) ** 2 + model.vY)


def zc_minus_numerator(z: complex, n_draws: int, rng) -> tuple[float, float]:
    """E[|dG(z)|^2 |jac F(0)| 1{jac F(0) < 0} | G(z) = F(0) = 0]."""
    model = _zc_minus_model(complex(z))

    def f(m):
        return _zc_minus_from_uniforms(model, standard_complex(rng, m), rng.random(m), rng.random(m))
    return _mc(f, n_draws, rng)


def zc_minus_numerator_plain(z: complex, n_draws: int, rng) -> tuple[float, float]:
    """Same expectation by direct conditioned sampling (inefficient at small |z|)."""
    smp = conditioned((G_at(0), G_at(0, 2), G_at(z, 1)), (G_at(z), F_at(0)), np.inf)

    def f(m):
        Z = smp.draw(rng, m)
        jf = np.abs(Z[:, 1]) ** 2 - np.abs(Z[:, 0]) ** 2
        return np.abs(Z[:, 2]) ** 2 * np.abs(jf) * (jf < 0)
    return _mc(f, n_draws, rng)


def zc_intensity(kind: str, z: complex, w: complex, n_draws: int, rng) -> tuple[float, float]:
    """Cross intensity of a zero at z and a critical point of the given sign at w."""
    den = np.pi ** 2 * pair_denominator(z, w, "zc")
    if kind == "zc+":
        m, se = zc_plus_numerator(z, w, n_draws, rng)
        return m / den, se / den
    if kind == "zc-":
        # The intensity is translation invariant, so evaluate it with w moved to 0.
        m, se = zc_minus_numerator(complex(z - w), n_draws, rng)
        den0 = np.pi ** 2 * pair_denominator(z - w, 0, "zc")
        return m / den0, se / den0
    raise ValueError(f"unknown kind {kind!r}")


def pair_intensity(kind: str, z: complex, w: complex, n_draws: int, rng) -> tuple[float, float]:
    if kind in ("zc+", "zc-"):
        return zc_intensity(kind, z, w, n_draws, rng)
    return cc_intensity(kind, z, w, n_draws, rng)


def fourth_moment_d2G(z: complex, w: complex, n_draws: int = 0, rng=None):
    """E[|d2G(w)|^4 | G(z) = F(w) = 0]: exact value, and an MC estimate when n_draws > 0."""
    smp = conditioned((G_at(w, 2),), (G_at(z), F_at(w)))
    v = float(smp.cov[0, 0].real)
    exact = 2 * v * v
    if n_draws <= 0:
        return exact, None
    mc = _mc(lambda m: np.abs(smp.draw(rng, m)[:, 0]) ** 4, n_draws, rng)
    return exact, mc


# ------------------------------------------------------------------ disk integrals

@dataclass(frozen=True)
class PairIntegral:
    value: float
    stderr: float
    quadrature_error: float
    n_nodes: int
    n_draws: int


def _node_density_fn(kind: str, s: float):
    """Map a block of standard normals/uniforms to per-draw density values at separation s."""
    if kind in ("cc", "c+c+", "c-c-", "c+c-"):
        smp = _pair_sampler(0.5j * s, -0.5j * s)
        den = np.pi ** 2 * pair_denominator(0.5j * s, -0.5j * s, "cc")
        sk = {"cc": "c", "c+c+": "c+", "c-c-": "c-", "c+c-": "c+-"}[kind]
        return lambda blk: _cc_values(sk, *_jac_pairs(smp.from_normals(blk["xi"][:, :4]))) / den
    if kind == "zc+":
        smp = _zc_plus_sampler(complex(s), 0j)
        den = np.pi ** 2 * pair_denominator(s, 0, "zc")

        def f(blk):
            Z = smp.from_normals(blk["xi"][:, :3])
            jf = np.abs(Z[:, 1]) ** 2 - np.abs(Z[:, 2]) ** 2
            return np.abs(Z[:, 0]) ** 2 * np.abs(jf) * (jf > 0) / den
        return f
    if kind == "zc-":
        model = _zc_minus_model(complex(s))
        den = np.pi ** 2 * pair_denominator(s, 0, "zc")
        return lambda blk: _zc_minus_from_uniforms(model, blk["xi"][:, 0], blk["u1"], blk["u2"]) / den
    raise ValueError(f"unknown pair kind {kind!r}")


def integrate_pair(kind: str, rho: float, n_draws: int = 0, rng=None, n_nodes: int = 64,
                   density: Callable[[np.ndarray], np.ndarray] | None = None) -> PairIntegral:
    """Expected ordered-pair count in a disk of radius rho from the pair density.

    With a stationary density d(s), the double integral over the disk
    reduces to the integral of d(s) * lens(s) * 2 pi s over 0 < s < 2 rho,
    lens(s) being the area of two radius-rho disks at distance s. The Monte
    Carlo density is evaluated on Gauss-Legendre nodes with common random
    numbers, so the per-draw quadrature sums give the standard error. The
    half-node rule on the same draws supplies the quadrature error estimate.
    """
    if not 0 < rho < 1:
        raise ValueError("rho must lie in (0, 1)")
    lo = 2 * R_MIN
    hi = 2 * rho
    d0 = 0.0 if density is not None else _DENSITY_AT_ZERO.get(kind, 0.0)
    if density is not None:
        d0 = float(density(np.array([lo]))[0])
    tail = d0 * quad(lambda s: lens_area(s, rho) * 2 * np.pi * s, 0, lo)[0]

    def rule(n):
        x, w = np.polynomial.legendre.leggauss(n)
        s = lo + (hi - lo) * (x + 1) / 2
        return s, w * (hi - lo) / 2 * lens_area(s, rho) * 2 * np.pi * s

    s_full, w_full = rule(n_nodes)
    s_half, w_half = rule(max(2, n_nodes // 2))
    if density is not None:
        full = float(np.dot(w_full, density(s_full))) + tail
        half = float(np.dot(w_half, density(s_half))) + tail
        return PairIntegral(full, 0.0, abs(full - half), n_nodes, 0)

    fns_full = [_node_density_fn(kind, s) for s in s_full]
    fns_half = [_node_density_fn(kind, s) for s in s_half]
    acc_full, acc_half = Moments(), Moments()
    done = 0
    while done < n_draws:
        m = min(BATCH // 4, n_draws - done)
        blk = {"xi": standard_complex(rng, (m, 4)), "u1": rng.random(m), "u2": rng.random(m)}
        tot_full = np.zeros(m)
        tot_half = np.zeros(m)
        for wk, fn in zip(w_full, fns_full):
            tot_full += wk * fn(blk)
        for wk, fn in zip(w_half, fns_half):
            tot_half += wk * fn(blk)
        acc_full = acc_full.merge(Moments.of(tot_full))
        acc_half = acc_half.merge(Moments.of(tot_half))
        done += m
    return PairIntegral(acc_full.mean + tail, acc_full.stderr,
                        abs(acc_full.mean - acc_half.mean), n_nodes, n_draws)


# ------------------------------------------------------------------ proxy expansion

@dataclass(frozen=True)
class ProxyReport:
    r: float
    mean_A2: float
    stderr_A2: float
    p99_plus: float
    p99_minus: float
    mean_product: float
    mean_leading: float
    n_draws: int


def proxy_draws(r: float, n: int, rng):
    """Exact jac F(ir), jac F(-ir) and the proxies (A, B) on common conditioned draws."""
    _check_r(r)
    targets = (F_at(1j * r, 1, 0), F_at(1j * r, 0, 1), F_at(-1j * r, 1, 0), F_at(-1j * r, 0, 1),
               F_at(0, 1, 0), F_at(0, 0, 2), F_at(0, 0, 3))
    smp = conditioned(targets, (F_at(1j * r), F_at(-1j * r)))
    Z = smp.draw(rng, n)
    jp = jac_from_partials(Z[:, 0], Z[:, 1])
    jm = jac_from_partials(Z[:, 2], Z[:, 3])
    f10, f02, f03 = Z[:, 4], Z[:, 5], Z[:, 6]
    A = np.imag(f02 * np.conj(f10))
    B = np.abs(f02) ** 2 + np.imag(f03 * np.conj(f10)) / 3
    return jp, jm, A, B


def proxy_expansion_check(r: float, n_draws: int, rng, q: float = 99.0) -> ProxyReport:
    jp, jm, A, B = proxy_draws(r, n_draws, rng)
    res_p = np.abs(jp - r * A - r * r * B) / r ** 3
    res_m = np.abs(jm + r * A - r * r * B) / r ** 3
    a2 = Moments.of(A * A)
    return ProxyReport(r, a2.mean, a2.stderr, float(np.percentile(res_p, q)),
                       float(np.percentile(res_m, q)), float(np.mean(jp * jm)),
                       float(np.mean(r * r * (-A * A + r * r * B * B))), n_draws)


# ------------------------------------------------------------------ standard-normal oracles

def _triples(rng, m):
    return standard_complex(rng, (3, m))


def phi_values(variant: str, r: float, z1, z2, z3):
    a = np.imag(z2 * np.conj(z1))
    b = np.abs(z2) ** 2 + np.imag(z3 * np.conj(z1)) / 3
    sign = {"plus": 1.0, "minus": -1.0}[variant]
    return (-a * a + r * r * b * b) * (np.abs(a) < sign * r * b)


def phi_expectation(variant: str, r: float, n_draws: int, rng) -> tuple[float, float]:
    """E[phi_r] (variant "plus") or E[phi'_r] (variant "minus") over standard triples."""
    if r == 0:
        return 0.0, 0.0
    return _mc(lambda m: phi_values(variant, r, *_triples(rng, m)), n_draws, rng)


def indicator_probability(r: float) -> float:
    """P(|Z1| <= r |Z2|) for independent standard complex normals."""
    return r * r / (1 + r * r)


def indicator_mc(r: float, n_draws: int, rng) -> tuple[float, float]:
    def f(m):
        z = standard_complex(rng, (2, m))
        return (np.abs(z[0]) <= r * np.abs(z[1])).astype(float)
    return _mc(f, n_draws, rng)


def zcm_expectation_closed(zabs: float) -> float:
    """E[|Z2|^2 (a|Z2|^2 - |Z1|^2) 1{|Z1| < sqrt(a)|Z2|}] with a = |z|^6/36."""
    t = zabs ** 6
    return t * t * (54 + t) / (18 * (36 + t) ** 2)


def zcm_polar_closed(zabs: float) -> float:
    """The same integral written in polar radii (k1, k2); equals one quarter of the expectation."""
    t = zabs ** 6
    return t * t * (54 + t) / (72 * (36 + t) ** 2)


def zcm_indicator_mc(zabs: float, n_draws: int, rng) -> tuple[float, float]:
    a = zabs ** 6 / 36

    def f(m):
        z = standard_complex(rng, (2, m))
        n1, n2 = np.abs(z[0]) ** 2, np.abs(z[1]) ** 2
        return n2 * (a * n2 - n1) * (n1 < a * n2)
    return _mc(f, n_draws, rng)


def smallball_probe(case: int, r: float, n_draws: int, rng, eta: float = 0.0) -> tuple[float, float]:
    """Monte Carlo probability of the three small-ball events for standard triples."""
    if r == 0:
        return 0.0, 0.0
    t = r if case == 1 else r ** (2 - eta)

    def f(m):
        z1, z2, z3 = _triples(rng, m)
        a = np.imag(z2 * np.conj(z1))
        if case == 1:
            x = a
        elif case == 2:
            x = a + r * (np.abs(z2) ** 2 + np.imag(z3 * np.conj(z1)) / 3)
        elif case == 3:
            x = a - r * (np.abs(z2) ** 2 - np.imag(z3 * np.conj(z1)) / 3)
        else:
            raise ValueError("case must be 1, 2 or 3")
        return (np.abs(x) < t).astype(float)
    return _mc(f, n_draws, rng)


def smallball_scale(case: int, r: float, eta: float = 0.0) -> float:
    t = r if case == 1 else r ** (2 - eta)
    return t * (1 + abs(np.log(t)))
