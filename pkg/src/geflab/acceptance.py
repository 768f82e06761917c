"""The acceptance suite: numbered criteria, each returning one or more checks.

Every runner takes a `Suite` holding budgets, the master seed and a lazily
built landmark corpus shared by the counting criteria. Runners never raise
on a numeric miss; they return a failed `Check` with the measured value.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import mpmath
import numpy as np

from . import estimators as est
from . import kacrice as kr
from . import spectrogram as sp
from .field import GefEvaluator, sample_gef
from .io import read_corpus, write_corpus
from .kernels import F_at, eval_cov
from .landmarks import LOCALMAX, SADDLE, circle, winding
from .rng import stream


@dataclass(frozen=True)
class Check:
    criterion: int
    name: str
    value: float
    target: str
    passed: bool
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = f"  ({self.detail})" if self.detail else ""
        return f"[{status}] {self.criterion:>2} {self.name}: {self.value:.6g} vs {self.target}{extra}"


@dataclass(frozen=True)
class Budget:
    corpus_samples: int = 1500
    corpus_R: float = 6.0
    sigma_draws: int = 1_000_000
    slope_draws: int = 1_000_000
    pair_draws: int = 50_000
    zc_draws: int = 400_000
    oracle_draws: int = 1_000_000
    phi_draws: int = 2_000_000
    proxy_draws: int = 400_000
    structural_samples: int = 100
    invariance_draws: int = 400_000
    noise_area: float = 1600.0
    noise_realizations: int = 16
    power_points: int = 40_000


def cache_dir() -> Path:
    return Path(os.environ.get("GEFLAB_CACHE", Path.home() / ".cache" / "geflab"))


def cached_corpus(samples: int, R_max: float, seed: int, threads: int = 1,
                  directory: Path | None = None):
    """Landmark corpus for (seed, R_max), reusing any cached corpus with at least `samples` sets.

    Sample i always comes from stream (seed, i), so a prefix of a larger
    corpus is exactly the smaller corpus.
    """
    directory = cache_dir() if directory is None else Path(directory)
    stem = f"corpus-seed{seed}-R{R_max}-n"
    best = None
    if directory.is_dir():
        for p in directory.glob(stem + "*.csv"):
            n = int(p.stem[len(stem):])
            if n >= samples and (best is None or n < best[0]):
                best = (n, p)
    if best is not None:
        return read_corpus(best[1])[:samples]
    corpus = est.build_corpus(samples, R_max, seed, threads)
    directory.mkdir(parents=True, exist_ok=True)
    write_corpus(directory / f"{stem}{samples}.csv", corpus)
    return corpus


@dataclass
class Suite:
    seed: int = 7
    budget: Budget = Budget()
    threads: int = 1
    artifacts: dict = field(default_factory=dict)
    _corpus: list | None = None

    @property
    def corpus(self):
        if self._corpus is None:
            self._corpus = cached_corpus(self.budget.corpus_samples, self.budget.corpus_R,
                                         self.seed, self.threads)
        return self._corpus

    def rng(self, criterion: int, part: int = 0):
        return stream(self.seed, 1000 + criterion, part)


def _within(value, target, tol):
    return abs(value - target) <= tol


# ------------------------------------------------------------------ 1

def reference_blocks(r: float):
    """Closed-form covariance blocks of (F(ir), F(-ir)) and (F10, F02, F03) at 0."""
    e1, e2 = math.exp(r * r), math.exp(-r * r) * (1 - 4 * r * r)
    m1 = np.array([[e1, e2], [e2, e1]], dtype=complex)
    a, b, c = 1j * r * (1 - r * r), -2 + 5 * r * r - r ** 4, -6 * r + 7 * r ** 3 - r ** 5
    m2 = np.array([[a, b, c], [-a, b, -c]])
    m3 = np.array([[3, 0, 6j], [0, 10, 0], [-6j, 0, 42]])
    return m1, m2, m3


def reference_conditional(r: float) -> np.ndarray:
    """Closed-form covariance of (F10, F02, F03)(0) given F(ir) = F(-ir) = 0."""
    with mpmath.workdps(40):
        r = mpmath.mpf(r)
        r2 = r * r
        ex = mpmath.exp(r2)
        dm = mpmath.expm1(2 * r2) + 4 * r2       # -1 + e^{2r^2} + 4r^2
        dp = 2 + mpmath.expm1(2 * r2) - 4 * r2   # 1 + e^{2r^2} - 4r^2
        m11 = 3 - 2 * ex * r2 * (1 - r2) ** 2 / dm
        m22 = 10 - 2 * ex * (2 - 5 * r2 + r2 ** 2) ** 2 / dp
        m33 = 42 - 2 * ex * r2 * (6 - 7 * r2 + r2 ** 2) ** 2 / dm
        m13 = 6 + 2 * ex * r2 * (r2 - 6) * (r2 - 1) ** 2 / dm
        out = np.array([[float(m11), 0, 1j * float(m13)], [0, float(m22), 0],
                        [-1j * float(m13), 0, float(m33)]])
    return out


LIMIT_CONDITIONAL = np.array([[8 / 3, 0, 4j], [0, 6, 0], [-4j, 0, 30]])


def criterion_1(suite: Suite) -> list[Check]:
    worst_blocks = 0.0
    worst_cond = 0.0
    for r in (0.1, 0.5, 1.0):
        descs = [F_at(1j * r), F_at(-1j * r), F_at(0, 1, 0), F_at(0, 0, 2), F_at(0, 0, 3)]
        full = eval_cov(descs).entries
        m1, m2, m3 = reference_blocks(r)
        ref = np.block([[m1, m2], [m2.conj().T, m3]])
        worst_blocks = max(worst_blocks, float(np.abs(full - ref).max()))
        got = kr.conditional_derivative_cov(r).entries
        worst_cond = max(worst_cond, float(np.abs(got - reference_conditional(r)).max()))
    limit_err = float(np.abs(kr.conditional_derivative_cov(1e-3).entries - LIMIT_CONDITIONAL).max())
    return [
        Check(1, "kernel blocks M1, M2, M3 (max abs error)", worst_blocks, "<= 1e-12",
              worst_blocks <= 1e-12),
        Check(1, "conditional covariance vs closed form (max abs error)", worst_cond, "<= 1e-10",
              worst_cond <= 1e-10),
        Check(1, "conditional covariance at r=1e-3 vs limit matrix", limit_err, "<= 1e-2",
              limit_err <= 1e-2),
    ]


# ------------------------------------------------------------------ 2, 4, 5, 6: counting

def criterion_2(suite: Suite) -> list[Check]:
    means, errs = est.estimate_first_moments(1.0, suite.corpus, "continuous")
    out = []
    for g, m, e in zip(est.FIRST, means, errs):
        target = est.FIRST_TARGETS[g]
        rel = abs(m / target - 1)
        out.append(Check(2, f"first moment N{g} in unit disk", m, f"{target:.6g} within 2%",
                         rel <= 0.02, f"stderr {e:.2g}, rel dev {rel:.2%}"))
    return out


def criterion_4(suite: Suite) -> list[Check]:
    rho_c = 0.15
    ratio, se = est.repulsion_factor("cc", rho_c, suite.corpus, "continuous")
    rho_k = 0.05
    pi = kr.integrate_pair("cc", rho_k, suite.budget.pair_draws, suite.rng(4))
    norm = (5 / 3 * rho_k ** 2) ** 2
    kr_ratio = pi.value / norm
    return [
        Check(4, "cc repulsion factor by counting (rho=0.15)", ratio, "0.24 within 0.03",
              _within(ratio, 0.24, 0.03), f"stderr {se:.2g}"),
        Check(4, "cc repulsion factor by Kac-Rice (rho=0.05)", kr_ratio, "0.24 within 0.03",
              _within(kr_ratio, 0.24, 0.03),
              f"stderr {pi.stderr / norm:.2g}, quadrature err {pi.quadrature_error / norm:.2g}"),
    ]


def criterion_5(suite: Suite) -> list[Check]:
    ratio, se = est.repulsion_factor("c+c-", 0.15, suite.corpus, "continuous")
    return [Check(5, "mixed-index factor by counting (rho=0.15)", ratio, "0.75 within 0.08",
                  _within(ratio, 0.75, 0.08), f"stderr {se:.2g}")]


SLOPE_TARGETS = {
    "zz": ((0.3, 0.8), 6.0, 0.4),
    "cc": ((0.1, 0.5), 4.0, 0.3),
    "c+c+": ((0.35, 0.8), 7.0, 0.6),
    "c-c-": ((0.35, 0.8), 7.0, 0.6),
    "zc+": ((0.3, 0.8), 6.0, 0.4),
}


def criterion_6(suite: Suite) -> list[Check]:
    out = []
    for pair, ((lo, hi), target, tol) in SLOPE_TARGETS.items():
        radii = np.geomspace(lo, hi, 6)
        prof = est.pair_profile(pair, radii, suite.corpus, "continuous")
        suite.artifacts[f"profile_{pair}"] = prof
        try:
            fit = est.fit_exponent(prof, (lo, hi))
        except est.InsufficientSignal as e:
            out.append(Check(6, f"{pair} counting slope on [{lo}, {hi}]", float("nan"),
                             f"{target} +- {tol}", False, str(e)))
            continue
        suite.artifacts[f"fit_{pair}"] = fit
        out.append(Check(6, f"{pair} counting slope on [{lo}, {hi}]", fit.slope, f"{target} +- {tol}",
                         _within(fit.slope, target, tol),
                         f"slope stderr {fit.slope_stderr:.2g}, {fit.n_rows} rows"))
    return out


# ------------------------------------------------------------------ 3, 7, 8: Kac-Rice

def criterion_3(suite: Suite) -> list[Check]:
    r = 0.01
    m, se = kr.sigma("c", r, suite.budget.sigma_draws, suite.rng(3))
    v, e = m / r ** 2, se / r ** 2
    tol = max(0.05 * 8, 5 * e)
    return [Check(3, "sigma_c(0.01)/r^2", v, f"8 within {tol:.3g}", _within(v, 8, tol),
                  f"stderr {e:.2g}")]


def _profile_from(label, r, vals):
    rows = tuple(est.ProfileRow(float(x), float(m), float(s), 0, 0) for x, (m, s) in zip(r, vals))
    return est.RadialProfile(label, rows)


def criterion_7(suite: Suite) -> list[Check]:
    out = []
    radii = np.geomspace(0.02, 0.2, 6)
    for part, kind in enumerate(("c+", "c-")):
        rng = suite.rng(7, part)
        prof = _profile_from(f"sigma_{kind}", radii,
                             [kr.sigma(kind, r, suite.budget.slope_draws, rng) for r in radii])
        suite.artifacts[f"sigma_{kind}"] = prof
        fit = est.fit_exponent(prof)
        out.append(Check(7, f"sigma_{kind} slope on [0.02, 0.2]", fit.slope, "5 +- 0.3",
                         _within(fit.slope, 5, 0.3), f"slope stderr {fit.slope_stderr:.2g}"))
    zs = np.geomspace(0.3, 0.8, 6)
    rng = suite.rng(7, 2)
    prof = _profile_from("zc-_integrand", zs, [kr.zc_minus_numerator(z, suite.budget.zc_draws, rng)
                                                for z in zs])
    suite.artifacts["zc-_integrand"] = prof
    fit = est.fit_exponent(prof)
    small = np.array([0.05, 0.1])
    vs = [kr.zc_minus_numerator(z, suite.budget.zc_draws, rng)[0] for z in small]
    local = math.log(vs[1] / vs[0]) / math.log(small[1] / small[0])
    out.append(Check(7, "zc- conditional integrand slope on [0.3, 0.8]", fit.slope, "16 +- 0.5",
                     _within(fit.slope, 16, 0.5),
                     f"slope stderr {fit.slope_stderr:.2g}; local slope on [0.05, 0.1] {local:.3f}"))
    # Area integration adds 4 to the exponent of a power-law density.
    rr = np.geomspace(0.05, 0.4, 5)
    vals = [kr.integrate_pair("zc-", r, density=lambda s: s ** 16).value for r in rr]
    qs = float(np.polyfit(np.log(rr), np.log(vals), 1)[0])
    out.append(Check(7, "quadrature maps an s^16 density to a disk-pair exponent", qs, "20 +- 0.01",
                     _within(qs, 20, 0.01)))
    return out


def criterion_8(suite: Suite) -> list[Check]:
    s = 0.05
    m, se = kr.zc_plus_numerator(s, 0, suite.budget.sigma_draws, suite.rng(8))
    v, e = m / s ** 2, se / s ** 2
    tol = max(0.8, 5 * e)
    exact, mc = kr.fourth_moment_d2G(s, 0, suite.budget.oracle_draws, suite.rng(8, 1))
    return [
        Check(8, "zc+ numerator / |z-w|^2 at 0.05", v, f"8 within {tol:.3g}", _within(v, 8, tol),
              f"stderr {e:.2g}"),
        Check(8, "conditional E|d2G(w)|^4 at 0.05 (exact)", exact, "8 within 5%",
              _within(exact, 8, 0.4)),
        Check(8, "conditional E|d2G(w)|^4 at 0.05 (Monte Carlo)", mc[0], "8 within 5%",
              _within(mc[0], 8, 0.4), f"stderr {mc[1]:.2g}"),
    ]


# ------------------------------------------------------------------ 9, 10, 11: oracles

def criterion_9(suite: Suite) -> list[Check]:
    out = []
    rng = suite.rng(9)
    n = suite.budget.oracle_draws
    for r in (0.25, 0.5, 1.0):
        m, se = kr.indicator_mc(r, n, rng)
        t = kr.indicator_probability(r)
        out.append(Check(9, f"P(|Z1| <= {r}|Z2|)", m, f"{t:.6g} within 5 stderr",
                         abs(m - t) <= 5 * se, f"stderr {se:.2g}"))
    for z in (0.6, 1.0):
        m, se = kr.zcm_indicator_mc(z, n, rng)
        # The polar-radius form of the integral is one quarter of the expectation.
        m, se = m / 4, se / 4
        t = kr.zcm_polar_closed(z)
        out.append(Check(9, f"zc- indicator integral at |z|={z}", m, f"{t:.6g} within 5 stderr",
                         abs(m - t) <= 5 * se, f"stderr {se:.2g}"))
    return out


def criterion_10(suite: Suite) -> list[Check]:
    out = []
    rr = np.geomspace(0.05, 0.5, 6)
    for part, variant in enumerate(("plus", "minus")):
        rng = suite.rng(10, part)
        prof = _profile_from(f"phi_{variant}", rr,
                             [kr.phi_expectation(variant, r, suite.budget.phi_draws, rng) for r in rr])
        suite.artifacts[f"phi_{variant}"] = prof
        fit = est.fit_exponent(prof)
        out.append(Check(10, f"E[phi_r] ({variant}) slope on [0.05, 0.5]", fit.slope, "3 +- 0.2",
                         _within(fit.slope, 3, 0.2), f"slope stderr {fit.slope_stderr:.2g}"))
    return out


def criterion_11(suite: Suite) -> list[Check]:
    rng = suite.rng(11)
    n = suite.budget.proxy_draws
    near = kr.proxy_expansion_check(0.01, n, rng)
    far = kr.proxy_expansion_check(0.1, n, rng)
    hi = max(near.p99_plus, near.p99_minus, far.p99_plus, far.p99_minus)
    lo = min(near.p99_plus, near.p99_minus, far.p99_plus, far.p99_minus)
    ratio = hi / lo
    return [
        Check(11, "E[A^2 | F(+-ir)=0] at r=0.01", near.mean_A2, "8 within 5%",
              _within(near.mean_A2, 8, 0.4), f"stderr {near.stderr_A2:.2g}"),
        Check(11, "spread of r^-3 residual 99th percentiles, r=0.1 vs 0.01", ratio, "<= 3",
              ratio <= 3, f"p99 at 0.1: {far.p99_plus:.3g}/{far.p99_minus:.3g}, "
                          f"at 0.01: {near.p99_plus:.3g}/{near.p99_minus:.3g}"),
    ]


# ------------------------------------------------------------------ 12: structure

def criterion_12(suite: Suite) -> list[Check]:
    corpus = suite.corpus
    n = min(suite.budget.structural_samples, len(corpus))
    zero_mismatch = 0
    index_mismatch = 0
    for i in range(n):
        ls = corpus[i]
        s = sample_gef(suite.budget.corpus_R, stream(suite.seed, i), seed=(suite.seed, i))
        ev = GefEvaluator(s)
        contour = circle(ls.center, ls.radius)
        wz = winding(lambda z: ev(z).wG, contour, n_init=512)
        wf = winding(lambda z: ev(z).wF, contour, n_init=512)
        ncp = sum(1 for lm in ls.criticals if lm.kind == SADDLE)
        ncm = sum(1 for lm in ls.criticals if lm.kind == LOCALMAX)
        zero_mismatch += wz != len(ls.zeros)
        index_mismatch += wf != ncp - ncm
    out = [
        Check(12, "argument principle vs zero search (mismatching samples)", zero_mismatch,
              f"0 of {n}", zero_mismatch == 0),
        Check(12, "winding of F vs saddles minus maxima (mismatching samples)", index_mismatch,
              f"0 of {n}", index_mismatch == 0),
    ]
    nd = suite.budget.invariance_draws
    rng = suite.rng(12)
    a, ea = kr.sigma("c", 0.3, nd, rng, rotation=0.0)
    b, eb = kr.sigma("c", 0.3, nd, rng, rotation=1.1)
    d = abs(a - b) / math.hypot(ea, eb)
    out.append(Check(12, "sigma_c rotation invariance (difference in sigmas)", d, "<= 3", d <= 3))
    z, w, shift = 0.3 + 0.1j, -0.1 + 0.2j, 1.5 - 0.7j
    for kind in ("cc", "c+c-", "zc+", "zc-"):
        a, ea = kr.pair_intensity(kind, z, w, nd, rng)
        b, eb = kr.pair_intensity(kind, z + shift, w + shift, nd, rng)
        d = abs(a - b) / math.hypot(ea, eb)
        out.append(Check(12, f"q_{kind} translation invariance (difference in sigmas)", d, "<= 3",
                         d <= 3, f"q={a:.4g} vs {b:.4g}"))
    return out


# ------------------------------------------------------------------ 13: spectrogram

def criterion_13(suite: Suite) -> list[Check]:
    b = suite.budget
    counts, _, _ = sp.noise_landmark_counts(b.noise_area, b.noise_realizations, suite.rng(13))
    power, pse = sp.mean_power(b.power_points, suite.rng(13, 1))
    rows = sp.compare_to_gef(counts, sp.gef_landmark_counts(suite.corpus))
    suite.artifacts["spectrogram_comparison"] = rows
    out = []
    for row in rows:
        dev = abs(row.noise - row.target) / row.noise_err
        out.append(Check(13, f"white-noise {row.kind} intensity x pi", row.noise * math.pi,
                         f"{row.target * math.pi:.6g} within 3 sigma", dev <= 3,
                         f"{dev:.2f} sigma over area {counts.area:.0f}; "
                         f"GEF {row.gef * math.pi:.4g}, noise-vs-GEF {row.discrepancy_sigma:.2f} sigma"))
    out.append(Check(13, "mean |V|^2 of white noise", power, "1 within 5%", _within(power, 1, 0.05),
                     f"stderr {pse:.2g}"))
    return out


CRITERIA: dict[int, Callable[[Suite], list[Check]]] = {
    1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5,
    6: criterion_6, 7: criterion_7, 8: criterion_8, 9: criterion_9, 10: criterion_10,
    11: criterion_11, 12: criterion_12, 13: criterion_13,
}


def run(suite: Suite, only=None, report: Callable[[Check], None] | None = None) -> list[Check]:
    checks = []
    for k, fn in CRITERIA.items():
        if only and k not in only:
            continue
        for c in fn(suite):
            checks.append(c)
            if report:
                report(c)
    return checks
