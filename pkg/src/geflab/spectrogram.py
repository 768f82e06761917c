"""Gaussian-window STFT of discretized complex white noise, and its grid landmarks.

Convention: Vf(x, xi) = (2/pi)^(1/4) * sum_k f_k exp(-(t_k - x)^2) exp(-2i t_k xi) dt.
A pure tone exp(2i t xi0) therefore peaks at xi = xi0. A landmark found at
grid coordinates (x, xi) corresponds to the GEF point z = x - i xi.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GridOutsideSignal
from .rng import standard_complex

WINDOW_CUT = 6.0
_NORM = (2 / np.pi) ** 0.25
TARGET_INTENSITY = {"zeros": 1 / np.pi, "saddles": 4 / (3 * np.pi), "maxima": 1 / (3 * np.pi)}


@dataclass(frozen=True)
class NoiseSignal:
    dt: float
    samples: np.ndarray
    t0: float
    seed: tuple = ()

    @property
    def t(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(len(self.samples))

    @property
    def t_end(self) -> float:
        return self.t0 + self.dt * (len(self.samples) - 1)


def sample_white_noise(span: float, dt: float, rng, seed: tuple = ()) -> NoiseSignal:
    """Complex white noise on [-6, span + 6]; each sample has variance 1/dt."""
    if dt > 0.05:
        raise ValueError("dt must be at most 0.05")
    n = int(math.ceil((span + 2 * WINDOW_CUT) / dt)) + 1
    return NoiseSignal(dt, standard_complex(rng, n) / math.sqrt(dt), -WINDOW_CUT, tuple(seed))


@dataclass(frozen=True)
class SpectrogramGrid:
    x: np.ndarray
    xi: np.ndarray
    values: np.ndarray  # complex V, shape (len(xi), len(x))
    normalized: bool = True

    @property
    def magnitude(self) -> np.ndarray:
        return np.abs(self.values)

    @property
    def spacing(self) -> float:
        return float(max(np.diff(self.x).max(initial=0), np.diff(self.xi).max(initial=0)))


def stft_gauss(f: NoiseSignal, x, xi) -> SpectrogramGrid:
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    if x.min() - WINDOW_CUT < f.t0 - 1e-9 or x.max() + WINDOW_CUT > f.t_end + 1e-9:
        raise GridOutsideSignal("grid x-range needs 6 window widths of signal on each side")
    out = np.empty((len(xi), len(x)), dtype=complex)
    ntap = int(math.floor(WINDOW_CUT / f.dt + 1e-9))
    for j, xv in enumerate(x):
        c = int(round((xv - f.t0) / f.dt))
        lo, hi = max(c - ntap - 1, 0), min(c + ntap + 2, len(f.samples))
        t = f.t0 + f.dt * np.arange(lo, hi)
        keep = np.abs(t - xv) <= WINDOW_CUT
        t = t[keep]
        taps = f.samples[lo:hi][keep] * np.exp(-(t - xv) ** 2)
        out[:, j] = np.exp(-2j * np.outer(xi, t)) @ taps
    return SpectrogramGrid(x, xi, _NORM * f.dt * out)


# ------------------------------------------------------------------ landmarks

@dataclass
class GridLandmarks:
    minima: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))
    maxima: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))
    saddles: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))
    area: float = 0.0

    def counts(self) -> dict:
        return {"zeros": len(self.minima), "saddles": len(self.saddles), "maxima": len(self.maxima)}


def _neighbours(a):
    """Stack of the 8 neighbours of every interior point."""
    n, m = a.shape
    return np.stack([a[1 + di:n - 1 + di, 1 + dj:m - 1 + dj]
                     for di in (-1, 0, 1) for dj in (-1, 0, 1) if di or dj])


# Least-squares quadratic a + b u + c v + d u^2 + e u v + f v^2 on the 3x3 stencil,
# in units of the grid spacing.
_U, _V = np.meshgrid([-1.0, 0.0, 1.0], [-1.0, 0.0, 1.0])
_DESIGN = np.column_stack([np.ones(9), _U.ravel(), _V.ravel(), _U.ravel() ** 2,
                           (_U * _V).ravel(), _V.ravel() ** 2])
_FIT = np.linalg.pinv(_DESIGN)


def _quadratic_fits(a):
    n, m = a.shape
    stencil = np.stack([a[1 + di:n - 1 + di, 1 + dj:m - 1 + dj]
                        for di in (-1, 0, 1) for dj in (-1, 0, 1)], axis=-1)
    return stencil @ _FIT.T  # (..., 6) coefficients


def _stationary_offset(coef):
    """Stationary point of each fitted quadratic (grid units) and its Hessian determinant."""
    b, c, d, e, f = (coef[..., k] for k in range(1, 6))
    det = 4 * d * f - e * e
    with np.errstate(divide="ignore", invalid="ignore"):
        u = (-2 * f * b + e * c) / det
        v = (e * b - 2 * d * c) / det
    return u, v, det


def extract_grid_landmarks(sg: SpectrogramGrid) -> GridLandmarks:
    """Minima, maxima and saddles of |V|^2 on the interior of the grid.

    Extrema use a strict 8-neighbour comparison. A saddle is recorded in the
    cell whose half-open square contains the stationary point of the local
    quadratic fit, when that fit has a negative Hessian determinant.
    """
    if sg.spacing > 0.15:
        raise ValueError("grid spacing must be at most 0.15")
    s = np.abs(sg.values) ** 2
    if s.shape[0] < 3 or s.shape[1] < 3:
        return GridLandmarks()
    core = s[1:-1, 1:-1]
    nb = _neighbours(s)
    is_min = np.all(core < nb, axis=0)
    is_max = np.all(core > nb, axis=0)
    coef = _quadratic_fits(s)
    u, v, det = _stationary_offset(coef)
    inside = (u >= -0.5) & (u < 0.5) & (v >= -0.5) & (v < 0.5)
    is_sad = inside & (det < 0)
    dx = sg.x[1] - sg.x[0]
    dxi = sg.xi[1] - sg.xi[0]
    X, XI = np.meshgrid(sg.x[1:-1], sg.xi[1:-1])

    def pos(mask, refine=True):
        uu = np.clip(np.nan_to_num(u[mask]), -0.5, 0.5) if refine else 0
        vv = np.clip(np.nan_to_num(v[mask]), -0.5, 0.5) if refine else 0
        return (X[mask] + uu * dx) + 1j * (XI[mask] + vv * dxi)

    area = (sg.x[-2] - sg.x[1] + dx) * (sg.xi[-2] - sg.xi[1] + dxi)
    return GridLandmarks(pos(is_min), pos(is_max), pos(is_sad), float(area))


def to_gef_coordinates(points) -> np.ndarray:
    """Map spectrogram landmarks (x + i xi) to GEF coordinates z = x - i xi."""
    return np.conj(np.asarray(points, dtype=complex))


# ------------------------------------------------------------------ comparison

@dataclass(frozen=True)
class LandmarkCounts:
    area: float
    counts: dict


@dataclass(frozen=True)
class ComparisonRow:
    kind: str
    noise: float
    noise_err: float
    gef: float
    gef_err: float
    target: float
    discrepancy_sigma: float

    @property
    def flagged(self) -> bool:
        return self.discrepancy_sigma > 3


def _intensity(c: LandmarkCounts, kind: str):
    n = c.counts.get(kind, 0)
    # Poisson counting error; conservative for the repulsive point processes involved.
    return n / c.area, math.sqrt(max(n, 1)) / c.area


def compare_to_gef(noise: LandmarkCounts | None, gef: LandmarkCounts | None) -> list[ComparisonRow]:
    if noise is None or gef is None or noise.area == 0 or gef.area == 0:
        return []
    rows = []
    for kind, target in TARGET_INTENSITY.items():
        a, ea = _intensity(noise, kind)
        b, eb = _intensity(gef, kind)
        rows.append(ComparisonRow(kind, a, ea, b, eb, target, abs(a - b) / math.hypot(ea, eb)))
    return rows


def noise_landmark_counts(area: float, n_realizations: int, rng, dt: float = 0.02,
                          delta: float = 0.1) -> tuple[LandmarkCounts, float, float]:
    """Grid landmark counts over square windows of the given total area.

    Returns the counts plus the mean and standard error of |V|^2 across
    realizations.
    """
    side = math.sqrt(area / n_realizations)
    counts = {"zeros": 0, "saddles": 0, "maxima": 0}
    total = 0.0
    power = []
    for _ in range(n_realizations):
        f = sample_white_noise(side + 2 * delta, dt, rng)
        x = np.arange(0.0, side + 2 * delta + 1e-9, delta)
        xi = np.arange(0.0, side + 2 * delta + 1e-9, delta)
        sg = stft_gauss(f, x, xi)
        lm = extract_grid_landmarks(sg)
        for k, v in lm.counts().items():
            counts[k] += v
        total += lm.area
        power.append(np.mean(np.abs(sg.values) ** 2))
    power = np.array(power)
    se = float(power.std(ddof=1) / math.sqrt(len(power))) if len(power) > 1 else float("nan")
    return LandmarkCounts(total, counts), float(power.mean()), se


def mean_power(n_points: int, rng, dt: float = 0.02, pitch: float = 1.5,
               n_xi: int = 16) -> tuple[float, float]:
    """Mean of |V|^2 and its standard error from widely spaced grid points.

    Points sit `pitch` apart in both directions so that neighbouring values
    are nearly uncorrelated (correlation exp(-pitch^2)); the error comes from
    batch means over x-columns.
    """
    n_x = max(2, -(-n_points // n_xi))
    f = sample_white_noise(pitch * (n_x - 1), dt, rng)
    x = pitch * np.arange(n_x)
    xi = pitch * (np.arange(n_xi) - n_xi / 2)
    col = np.mean(np.abs(stft_gauss(f, x, xi).values) ** 2, axis=0)
    return float(col.mean()), float(col.std(ddof=1) / math.sqrt(len(col)))


def gef_landmark_counts(corpus) -> LandmarkCounts:
    from .landmarks import LOCALMAX, SADDLE
    counts = {"zeros": 0, "saddles": 0, "maxima": 0}
    area = 0.0
    for ls in corpus:
        counts["zeros"] += len(ls.zeros)
        counts["saddles"] += sum(1 for lm in ls.criticals if lm.kind == SADDLE)
        counts["maxima"] += sum(1 for lm in ls.criticals if lm.kind == LOCALMAX)
        area += math.pi * ls.radius ** 2
    return LandmarkCounts(area, counts)
