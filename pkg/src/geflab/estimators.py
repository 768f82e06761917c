"""Counting estimators: first moments, pair moments, repulsion factors, exponent fits.

Per-sample values are averaged over many test disks of one GEF realization;
standard errors come from the spread of those per-sample means, since
different samples are independent while disks of one sample are not.

Two disk placements are available. "tiling" uses disjoint disks on a square
grid of pitch 2 rho + 0.1. "continuous" averages over every disk center in
the admissible window, which is evaluated exactly from pairwise disk
intersection areas and uses all close pairs of a sample.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree

from .errors import BudgetTooSmall, InsufficientSignal
from .field import sample_gef
from .geometry import disks_intersection_area, lens_area
from .landmarks import LOCALMAX, SADDLE, ZERO, LandmarkSet, SearchParams, find_landmarks
from .rng import stream
from .stats import Moments

PAIRS = ("zz", "cc", "c+c+", "c-c-", "c+c-", "zc", "zc+", "zc-")
_GROUP = {"z": (ZERO,), "c": (SADDLE, LOCALMAX), "c+": (SADDLE,), "c-": (LOCALMAX,)}
_SIDES = {"zz": ("z", "z"), "cc": ("c", "c"), "c+c+": ("c+", "c+"), "c-c-": ("c-", "c-"),
          "c+c-": ("c+", "c-"), "zc": ("z", "c"), "zc+": ("z", "c+"), "zc-": ("z", "c-")}
FIRST = ("z", "c", "c+", "c-")
FIRST_TARGETS = {"z": 1.0, "c": 5 / 3, "c+": 4 / 3, "c-": 1 / 3}
PLACEMENTS = ("tiling", "continuous")


def normalize_pair(pair: str) -> str:
    p = pair.replace("−", "-").replace("'", "")
    p = {"c-c+": "c+c-"}.get(p, p)
    if p not in _SIDES:
        raise ValueError(f"unknown pair {pair!r}; expected one of {', '.join(PAIRS)}")
    return p


@dataclass(frozen=True)
class ProfileRow:
    r: float
    estimate: float
    stderr: float
    n_effective: int
    n_disks: int = 0


@dataclass(frozen=True)
class RadialProfile:
    label: str
    rows: tuple[ProfileRow, ...]

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(sorted(self.rows, key=lambda r: r.r)))

    @property
    def r(self):
        return np.array([row.r for row in self.rows])

    @property
    def estimate(self):
        return np.array([row.estimate for row in self.rows])

    @property
    def stderr(self):
        return np.array([row.stderr for row in self.rows])


@dataclass(frozen=True)
class ExponentFit:
    slope: float
    intercept: float
    slope_stderr: float
    fit_range: tuple[float, float]
    n_rows: int


@dataclass(frozen=True)
class PairCountExperiment:
    pair: str
    radii: tuple[float, ...]
    samples: int
    seed: int
    R_max: float = 6.0
    placement: str = "tiling"

    def __post_init__(self):
        object.__setattr__(self, "pair", normalize_pair(self.pair))
        object.__setattr__(self, "radii", tuple(sorted(float(r) for r in self.radii)))
        if any(not 0 < r < 1 for r in self.radii):
            raise ValueError("radii must lie in (0, 1)")
        if self.placement not in PLACEMENTS:
            raise ValueError(f"placement must be one of {PLACEMENTS}")

    def disks_per_sample(self, rho: float) -> int:
        return len(tiling_centers(0j, self.R_max, rho))


# ------------------------------------------------------------------ corpus

def _one_sample(args):
    master_seed, task, R_max, params = args
    s = sample_gef(R_max, stream(master_seed, task), seed=(master_seed, task))
    return find_landmarks(s, 0j, R_max, params)


def build_corpus(samples: int, R_max: float = 6.0, master_seed: int = 0, threads: int = 1,
                 params: SearchParams = SearchParams(), first_task: int = 0) -> list[LandmarkSet]:
    """Landmark sets of independent samples; task i always uses stream (seed, i)."""
    jobs = [(master_seed, first_task + i, R_max, params) for i in range(samples)]
    if threads <= 1:
        return [_one_sample(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(_one_sample, jobs, chunksize=max(1, samples // (4 * threads))))


# ------------------------------------------------------------------ per-sample values

def tiling_centers(center: complex, radius: float, rho: float, pitch: float | None = None) -> np.ndarray:
    """Disk centers on a square grid, each disk inside B_radius(center)."""
    pitch = 2 * rho + 0.1 if pitch is None else pitch
    lim = radius - rho
    n = int(math.floor(lim / pitch))
    g = np.arange(-n, n + 1) * pitch
    c = (g[None, :] + 1j * g[:, None]).ravel()
    return center + c[np.abs(c) < lim + 1e-12]


def _positions(ls: LandmarkSet, group: str) -> np.ndarray:
    return ls.positions(_GROUP[group])


def _window(ls: LandmarkSet, rho: float) -> tuple[complex, float]:
    return ls.center, ls.radius - rho


def _ball_in_window(p, rho, wc, wr):
    """|B_rho(p) intersected with the window| for an array of points."""
    p = np.asarray(p, complex)
    out = np.full(p.shape, np.pi * rho * rho)
    edge = np.abs(p - wc) + rho > wr
    for k in np.flatnonzero(edge):
        out[k] = disks_intersection_area([p[k], wc], [rho, wr])
    return out


def first_values(ls: LandmarkSet, radii: Sequence[float], placement: str = "tiling"):
    """Per-sample mean counts, shape (len(radii), 4) in the order z, c, c+, c-."""
    out = np.zeros((len(radii), len(FIRST)))
    for a, rho in enumerate(radii):
        if placement == "tiling":
            cs = tiling_centers(ls.center, ls.radius, rho)
            for b, g in enumerate(FIRST):
                p = _positions(ls, g)
                out[a, b] = (np.abs(cs[:, None] - p[None, :]) < rho).sum() / len(cs) if len(p) else 0
        else:
            wc, wr = _window(ls, rho)
            area = np.pi * wr * wr
            for b, g in enumerate(FIRST):
                p = _positions(ls, g)
                out[a, b] = _ball_in_window(p, rho, wc, wr).sum() / area if len(p) else 0
    return out


def _ordered_pairs(pa, pb, same, dmax):
    """Index pairs (i, j), i in a and j in b, i != j when same, closer than dmax."""
    if len(pa) == 0 or len(pb) == 0:
        return np.zeros((0, 2), int)
    ta = cKDTree(np.column_stack([pa.real, pa.imag]))
    if same:
        prs = ta.query_pairs(dmax, output_type="ndarray")
        return np.concatenate([prs, prs[:, ::-1]]) if len(prs) else np.zeros((0, 2), int)
    tb = cKDTree(np.column_stack([pb.real, pb.imag]))
    lists = ta.query_ball_tree(tb, dmax)
    rows = [(i, j) for i, js in enumerate(lists) for j in js]
    return np.array(rows, int).reshape(-1, 2)


def pair_values(ls: LandmarkSet, pair: str, radii: Sequence[float], placement: str = "tiling"):
    """Per-sample mean of the ordered-pair count in a disk, one entry per radius."""
    ga, gb = _SIDES[normalize_pair(pair)]
    same = ga == gb
    pa, pb = _positions(ls, ga), _positions(ls, gb)
    out = np.zeros(len(radii))
    for a, rho in enumerate(radii):
        if placement == "tiling":
            cs = tiling_centers(ls.center, ls.radius, rho)
            na = (np.abs(cs[:, None] - pa[None, :]) < rho).sum(1) if len(pa) else np.zeros(len(cs))
            nb = (np.abs(cs[:, None] - pb[None, :]) < rho).sum(1) if len(pb) else np.zeros(len(cs))
            out[a] = np.mean(na * (na - 1) if same else na * nb)
            continue
        wc, wr = _window(ls, rho)
        prs = _ordered_pairs(pa, pb, same, 2 * rho)
        if len(prs) == 0:
            continue
        x, y = pa[prs[:, 0]], pb[prs[:, 1]]
        w = lens_area(np.abs(x - y), rho)
        edge = np.maximum(np.abs(x - wc), np.abs(y - wc)) + rho > wr
        for k in np.flatnonzero(edge):
            w[k] = disks_intersection_area([x[k], y[k], wc], [rho, rho, wr])
        out[a] = w.sum() / (np.pi * wr * wr)
    return out


def _n_disks(corpus, rho, placement):
    if placement == "tiling":
        return sum(len(tiling_centers(ls.center, ls.radius, rho)) for ls in corpus)
    return int(sum((ls.radius - rho) ** 2 / rho ** 2 for ls in corpus))


# ------------------------------------------------------------------ estimators

def estimate_first_moments(rho: float, corpus: Sequence[LandmarkSet], placement: str = "tiling"):
    """Means and standard errors of (Nz, Nc, Nc+, Nc-) in a disk of radius rho."""
    if not 0 < rho <= 1:
        raise ValueError("rho must lie in (0, 1]")
    vals = np.array([first_values(ls, [rho], placement)[0] for ls in corpus])
    return tuple(Moments.of(vals[:, b]).mean for b in range(4)), \
        tuple(Moments.of(vals[:, b]).stderr for b in range(4))


def pair_profile(pair: str, radii: Sequence[float], corpus: Sequence[LandmarkSet],
                 placement: str = "tiling") -> RadialProfile:
    pair = normalize_pair(pair)
    radii = sorted(radii)
    vals = np.array([pair_values(ls, pair, radii, placement) for ls in corpus])
    if len(vals) == 0 or not np.any(vals > 0):
        raise BudgetTooSmall(f"no {pair} pairs observed at any radius")
    rows = []
    for a, rho in enumerate(radii):
        m = Moments.of(vals[:, a])
        rows.append(ProfileRow(rho, m.mean, m.stderr, m.n, _n_disks(corpus, rho, placement)))
    return RadialProfile(pair, tuple(rows))


def estimate_pair_moment(exp: PairCountExperiment, corpus: Sequence[LandmarkSet] | None = None,
                         threads: int = 1) -> RadialProfile:
    if corpus is None:
        corpus = build_corpus(exp.samples, exp.R_max, exp.seed, threads)
    return pair_profile(exp.pair, exp.radii, corpus[: exp.samples], exp.placement)


def repulsion_factor(pair: str, rho: float, corpus: Sequence[LandmarkSet],
                     placement: str = "tiling") -> tuple[float, float]:
    """Second moment over the product of first moments, with a delta-method stderr."""
    pair = normalize_pair(pair)
    if pair not in ("cc", "c+c-"):
        raise ValueError("repulsion factor is defined for cc and c+c-")
    ga, gb = _SIDES[pair]
    ia, ib = FIRST.index(ga), FIRST.index(gb)
    second = np.array([pair_values(ls, pair, [rho], placement)[0] for ls in corpus])
    first = np.array([first_values(ls, [rho], placement)[0] for ls in corpus])
    a, b = first[:, ia], first[:, ib]
    ma, mb, ms = a.mean(), b.mean(), second.mean()
    if ma == 0 or mb == 0:
        raise BudgetTooSmall("no landmarks observed")
    ratio = ms / (ma * mb)
    lin = second / (ma * mb) - ratio * (a / ma + b / mb)
    return float(ratio), float(lin.std(ddof=1) / np.sqrt(len(lin)))


def fit_exponent(p: RadialProfile, fit_range: tuple[float, float] | None = None,
                 min_rows: int = 4) -> ExponentFit:
    """Weighted least squares of log(estimate) on log(r), weights from relative stderr."""
    lo, hi = fit_range if fit_range is not None else (-np.inf, np.inf)
    r, y, se = p.r, p.estimate, p.stderr
    use = (r >= lo - 1e-12) & (r <= hi + 1e-12) & (y > 0) & (y > 3 * se)
    if use.sum() < min_rows:
        raise InsufficientSignal(f"{int(use.sum())} usable rows, need {min_rows}")
    x = np.log(r[use])
    ly = np.log(y[use])
    rel = se[use] / y[use]
    if np.all(rel == 0):
        w = np.ones_like(x)
    else:
        w = 1.0 / np.maximum(rel, 1e-12 * np.max(rel)) ** 2
    X = np.column_stack([np.ones_like(x), x])
    A = X.T @ (w[:, None] * X)
    beta = np.linalg.solve(A, X.T @ (w * ly))
    cov = np.linalg.inv(A)
    slope_se = float(np.sqrt(cov[1, 1])) if np.any(rel > 0) else 0.0
    used = r[use]
    return ExponentFit(float(beta[1]), float(beta[0]), slope_se,
                       (float(used.min()), float(used.max())), int(use.sum()))
