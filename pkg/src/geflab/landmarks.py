"""Zeros of G and of F (critical points of G) inside a disk.

Search: Newton from a square seed grid, deduplication, then a winding
safety net. The disk is tiled by polar sectors whose winding numbers are
computed independently of Newton; wherever a sector's winding disagrees with
the landmarks found inside it, that sector is reseeded more densely.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.spatial import cKDTree

from .errors import DiskOutOfBounds, SearchBudgetExceeded
from .field import GefEvaluator, GefSample, WeightedJet

ZERO, SADDLE, LOCALMAX, DEGENERATE = "zero", "saddle", "localmax", "degenerate"
KINDS = (ZERO, SADDLE, LOCALMAX, DEGENERATE)


@dataclass(frozen=True)
class SearchParams:
    h_seed: float = 0.25
    h_seed_c: float = 0.2
    tol_accept: float = 1e-9
    tol_jac: float = 1e-12
    dedup_radius: float = 1e-6
    max_iter: int = 60
    step_cap: float = 0.5
    check_cell: float = 1.0
    max_rounds: int = 3


@dataclass(frozen=True)
class Landmark:
    position: complex
    kind: str
    jac_w: float
    residual: float


@dataclass(frozen=True)
class LandmarkSet:
    center: complex
    radius: float
    zeros: tuple[Landmark, ...]
    criticals: tuple[Landmark, ...]
    diagnostics: dict = field(default_factory=dict, compare=False)

    def positions(self, kinds=KINDS) -> np.ndarray:
        pts = [lm.position for lm in self.zeros + self.criticals if lm.kind in kinds]
        return np.array(pts, dtype=complex)


class CountStats(NamedTuple):
    nz: int
    nc: int
    ncp: int
    ncm: int
    ndeg: int


def classify(jet: WeightedJet, tol_jac: float = 1e-12):
    """Kind of a critical point from the sign of the weighted Jacobian of F."""
    jac = np.asarray(jet.jac_w, dtype=float)
    kind = np.where(jac > tol_jac, SADDLE, np.where(jac < -tol_jac, LOCALMAX, DEGENERATE))
    return (str(kind), float(jac)) if kind.ndim == 0 else (kind, jac)


# ---------------------------------------------------------------- Newton

def _zero_step(jet: WeightedJet) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        return -jet.wG / jet.wdG


def _critical_step(jet: WeightedJet) -> np.ndarray:
    """Solve a d + b conj(d) = -F for the planar Newton step d.

    Falls back to the least-squares (pseudo-inverse) step where the real
    Jacobian is singular, which drives seeds onto degenerate zero curves.
    """
    a, b, c = jet.wdF, jet.wG, -jet.wF
    den = np.abs(a) ** 2 - np.abs(b) ** 2
    scale = np.abs(a) ** 2 + np.abs(b) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        step = (np.conj(a) * c - b * np.conj(c)) / den
    bad = ~(np.abs(den) > 1e-10 * scale) | ~np.isfinite(step)
    if np.any(bad):
        col_x = (a + b)[bad]
        col_y = (1j * (a - b))[bad]
        rhs = c[bad]
        J = np.stack([np.stack([col_x.real, col_y.real], -1),
                      np.stack([col_x.imag, col_y.imag], -1)], -2)
        sol = np.einsum("kij,kj->ki", np.linalg.pinv(J, rcond=1e-10),
                        np.stack([rhs.real, rhs.imag], -1))
        step[bad] = sol[:, 0] + 1j * sol[:, 1]
    return step


def _residual(jet: WeightedJet, critical: bool) -> np.ndarray:
    return np.abs(jet.wF if critical else jet.wG)


def newton(evaluator, seeds: np.ndarray, critical: bool, params: SearchParams,
           keep_within: tuple[complex, float]):
    """Run damped Newton from every seed; return (points, residuals, n_failed)."""
    center, reach = keep_within
    z = np.asarray(seeds, dtype=complex).copy()
    alive = np.ones(z.shape, bool)
    done = np.zeros(z.shape, bool)
    stable = evaluator.R_max
    step_fn = _critical_step if critical else _zero_step
    # Iterates overshooting the stable disk are pulled back to its edge a few
    # times, so points just inside the boundary stay reachable.
    edge = stable * (1 - 1e-9)
    pulls = np.zeros(z.shape, int)
    for _ in range(params.max_iter):
        idx = np.flatnonzero(alive & ~done)
        if idx.size == 0:
            break
        jet = evaluator(z[idx])
        step = step_fn(jet)
        ok = np.isfinite(step)
        mag = np.abs(np.where(ok, step, 0))
        step = np.where(mag > params.step_cap, step * params.step_cap / np.maximum(mag, 1e-300), step)
        znew = z[idx] + np.where(ok, step, 0)
        over = np.abs(znew) > edge
        pulls[idx[over]] += 1
        znew = np.where(over, znew * (edge / np.maximum(np.abs(znew), 1e-300)), znew)
        out = (~ok) | (np.abs(znew - center) > reach) | (pulls[idx] > 5)
        alive[idx[out]] = False
        keep = idx[~out]
        z[keep] = znew[~out]
        conv = (mag[~out] < 1e-13 * (1 + np.abs(znew[~out])))
        done[keep[conv]] = True
    idx = np.flatnonzero(alive)
    if idx.size == 0:
        return np.zeros(0, complex), np.zeros(0), int(z.size)
    res = _residual(evaluator(z[idx]), critical)
    good = res < params.tol_accept
    return z[idx][good], res[good], int(z.size - good.sum())


def dedup(points: np.ndarray, residuals: np.ndarray, radius: float):
    """Merge points closer than radius, keeping the lowest-residual representative."""
    if len(points) == 0:
        return points, residuals, 0
    order = np.argsort(residuals, kind="stable")
    pts = points[order]
    xy = np.column_stack([pts.real, pts.imag])
    tree = cKDTree(xy)
    taken = np.zeros(len(pts), bool)
    keep = []
    for i in range(len(pts)):
        if taken[i]:
            continue
        keep.append(i)
        taken[tree.query_ball_point(xy[i], radius)] = True
    keep = np.array(keep)
    return pts[keep], residuals[order][keep], int(len(pts) - len(keep))


def seed_grid(center: complex, radius: float, h: float, offset: complex = 0j) -> np.ndarray:
    n = int(np.ceil(radius / h)) + 1
    g = np.arange(-n, n + 1) * h
    zz = (g[None, :] + 1j * g[:, None]).ravel() + center + offset
    return zz[np.abs(zz - center) <= radius + 1e-12]


# ---------------------------------------------------------------- winding

def winding(values_on, contour, n_init: int = 64, max_depth: int = 30):
    """Winding number of a non-vanishing field around a closed contour.

    contour maps parameters in [0, 1) to points; values_on maps points to
    complex field values. Segments whose phase increment exceeds pi/4 are
    bisected until every increment is below it. Returns None when the
    contour could not be resolved (a zero sits on it).
    """
    t = np.linspace(0.0, 1.0, n_init + 1)
    v = values_on(contour(t[:-1]))
    v = np.append(v, v[0])
    for _ in range(max_depth):
        dphi = np.angle(v[1:] / v[:-1])
        bad = ~(np.abs(dphi) < np.pi / 4)
        if not np.any(bad):
            total = dphi.sum() / (2 * np.pi)
            k = int(np.rint(total))
            return k if abs(total - k) < 1e-6 else None
        mids = 0.5 * (t[:-1][bad] + t[1:][bad])
        vm = values_on(contour(mids))
        t = np.concatenate([t, mids])
        v = np.concatenate([v, vm])
        order = np.argsort(t, kind="stable")
        t, v = t[order], v[order]
    return None


def circle(center: complex, radius: float):
    return lambda t: center + radius * np.exp(2j * np.pi * t)


@dataclass(frozen=True)
class Sector:
    """Annular sector of a polar check grid; r0 == 0 marks the central disk."""
    center: complex
    r0: float
    r1: float
    th0: float
    th1: float

    def contains(self, pts: np.ndarray) -> np.ndarray:
        d = pts - self.center
        rr = np.abs(d)
        if self.r0 == 0.0:
            return rr < self.r1
        ang = np.mod(np.angle(d) - self.th0, 2 * np.pi)
        return (rr > self.r0) & (rr < self.r1) & (ang < self.th1 - self.th0)

    def edge_distance(self, pts: np.ndarray) -> np.ndarray:
        d = pts - self.center
        rr = np.abs(d)
        out = np.abs(rr - self.r1)
        if self.r0 > 0.0:
            out = np.minimum(out, np.abs(rr - self.r0))
            for th in (self.th0, self.th1):
                out = np.minimum(out, np.abs(np.imag(d * np.exp(-1j * th))))
        return out

    def contour(self):
        if self.r0 == 0.0:
            return circle(self.center, self.r1)
        c, r0, r1, a, b = self.center, self.r0, self.r1, self.th0, self.th1
        lens = np.array([r1 * (b - a), r1 - r0, r0 * (b - a), r1 - r0])
        cum = np.concatenate([[0.0], np.cumsum(lens) / lens.sum()])

        def path(t):
            t = np.asarray(t, float)
            k = np.clip(np.searchsorted(cum, t, side="right") - 1, 0, 3)
            u = (t - cum[k]) / (cum[k + 1] - cum[k])
            outer = c + r1 * np.exp(1j * (a + (b - a) * u))
            down = c + (r1 - (r1 - r0) * u) * np.exp(1j * b)
            inner = c + r0 * np.exp(1j * (b - (b - a) * u))
            up = c + (r0 + (r1 - r0) * u) * np.exp(1j * a)
            return np.choose(k, [outer, down, inner, up])
        return path

    def cover(self) -> tuple[complex, float]:
        """A disk (center, radius) containing the sector."""
        if self.r0 == 0.0:
            return self.center, self.r1
        rim = self.contour()(np.linspace(0, 1, 33))
        mid = rim.mean()
        return complex(mid), float(np.abs(rim - mid).max())


def polar_sectors(center: complex, rc: float, cell: float, angle_off: float,
                  radial_jitter: float) -> list[Sector]:
    K = max(1, int(round(rc / cell)))
    radii = [rc * (k + (radial_jitter if 0 < k < K else 0.0)) / K for k in range(K + 1)]
    out = [Sector(center, 0.0, radii[1], 0.0, 2 * np.pi)]
    for k in range(1, K):
        n = max(2, int(np.ceil(2 * np.pi * radii[k + 1] / cell)))
        for j in range(n):
            th0 = angle_off + 2 * np.pi * j / n
            out.append(Sector(center, radii[k], radii[k + 1], th0, th0 + 2 * np.pi / n))
    return out


def check_layout(center: complex, rc: float, cell: float, points: np.ndarray,
                 min_gap: float = 1e-5) -> list[Sector]:
    """Polar sectors whose edges stay at least min_gap away from every point."""
    sectors = []
    for k in range(64):
        sectors = polar_sectors(center, rc, cell, 2 * np.pi * ((0.1 + 0.6180339887 * k) % 1.0),
                                0.3 * (((0.37 + 0.7548776662 * k) % 1.0) - 0.5))
        if len(points) == 0 or all(np.all(s.edge_distance(points) > min_gap) for s in sectors):
            return sectors
    return sectors


def _field_values(evaluator, critical: bool):
    if critical:
        return lambda z: evaluator(z).wF
    return lambda z: evaluator(z).wG


def _charge(kinds, critical: bool):
    if not critical:
        return np.ones(len(kinds), int)
    return np.where(kinds == SADDLE, 1, np.where(kinds == LOCALMAX, -1, 0))


# ---------------------------------------------------------------- search

class _Search:
    """One landmark family (zeros or criticals) in one disk."""

    def __init__(self, evaluator, center, radius, critical, params):
        self.ev = evaluator
        self.center = complex(center)
        self.radius = float(radius)
        self.critical = critical
        self.p = params
        self.h = params.h_seed_c if critical else params.h_seed
        self.reach = self.radius + 2 * self.h
        self.points = np.zeros(0, complex)
        self.res = np.zeros(0)
        self.failed = 0
        self.merged = 0

    def seed(self, seeds):
        seeds = seeds[np.abs(seeds) <= self.ev.R_max]
        pts, res, failed = newton(self.ev, seeds, self.critical, self.p, (self.center, self.reach))
        self.failed += failed
        allp = np.concatenate([self.points, pts])
        allr = np.concatenate([self.res, res])
        self.points, self.res, m = dedup(allp, allr, self.p.dedup_radius)
        self.merged += m

    def kinds(self):
        if not self.critical:
            return np.full(len(self.points), ZERO), np.zeros(len(self.points))
        if len(self.points) == 0:
            return np.zeros(0, dtype="<U10"), np.zeros(0)
        kind, jac = classify(self.ev(self.points), self.p.tol_jac)
        return np.atleast_1d(kind), np.atleast_1d(jac)

    def check_radius(self):
        rr = np.abs(self.points - self.center)
        for shrink in (1e-7, 1e-4, 3e-4, 1e-3, 3e-3):
            rc = self.radius - shrink
            if np.all(np.abs(rr - rc) > 1e-5):
                return rc
        return self.radius - 1e-2

    def mismatches(self):
        """Sectors whose winding number disagrees with the charge found inside."""
        kinds, _ = self.kinds()
        if self.critical and np.any(kinds == DEGENERATE):
            return [], 1  # winding of F is undefined across a curve of zeros
        charge = _charge(kinds, self.critical)
        values = _field_values(self.ev, self.critical)
        bad, unresolved = [], 0
        for sec in check_layout(self.center, self.check_radius(), self.p.check_cell, self.points):
            w = winding(values, sec.contour())
            if w is None:
                unresolved += 1
            elif w != int(charge[sec.contains(self.points)].sum()):
                bad.append(sec)
        return bad, unresolved

    def run(self):
        self.seed(seed_grid(self.center, self.radius + self.h, self.h))
        for rnd in range(self.p.max_rounds + 1):
            bad, unresolved = self.mismatches()
            if not bad:
                return rnd, unresolved
            if rnd == self.p.max_rounds:
                break
            hh = self.h / (3 ** (rnd + 1))
            for sec in bad:
                c, r = sec.cover()
                self.seed(seed_grid(c, r + hh, hh, offset=0.5 * hh * (1 + 1j)))
        raise SearchBudgetExceeded(
            f"{len(bad)} sector(s) still disagree with the winding check after "
            f"{self.p.max_rounds} reseeding rounds")

    def landmarks(self, limit):
        kinds, jac = self.kinds()
        keep = np.abs(self.points - self.center) < limit
        out = [Landmark(complex(p), str(k), float(j) if self.critical else 0.0, float(r))
               for p, k, j, r, kp in zip(self.points, kinds, jac, self.res, keep) if kp]
        return tuple(sorted(out, key=lambda lm: (lm.position.real, lm.position.imag)))


def _as_evaluator(s):
    return GefEvaluator(s) if isinstance(s, GefSample) else s


def _validate_disk(ev, center, radius):
    if abs(center) + radius > ev.R_max * (1 + 1e-12):
        raise DiskOutOfBounds(f"disk |c|={abs(center):.3g}, r={radius} leaves the stable disk")


def find_landmarks(s, center: complex = 0j, radius: float | None = None,
                   params: SearchParams = SearchParams()) -> LandmarkSet:
    """Zeros and critical points of one sample (or evaluator) in B_radius(center)."""
    ev = _as_evaluator(s)
    radius = ev.R_max - abs(center) if radius is None else radius
    _validate_disk(ev, center, radius)
    zs = _Search(ev, center, radius, False, params)
    cs = _Search(ev, center, radius, True, params)
    rz, uz = zs.run()
    rc, uc = cs.run()
    limit = radius + params.dedup_radius
    zeros = zs.landmarks(limit)
    crits = cs.landmarks(limit)
    coincide = 0
    if zeros and crits:
        tz = cKDTree(np.array([[lm.position.real, lm.position.imag] for lm in zeros]))
        cxy = np.array([[lm.position.real, lm.position.imag] for lm in crits])
        coincide = int(sum(len(x) for x in tz.query_ball_point(cxy, params.dedup_radius)))
    diag = {
        "newton_failures": zs.failed + cs.failed,
        "dedup_merges": zs.merged + cs.merged,
        "reseed_rounds": max(rz, rc),
        "unresolved_windings": uz + uc,
        "zero_critical_coincidences": coincide,
    }
    return LandmarkSet(complex(center), float(radius), zeros, crits, diag)


def find_zeros(s, center: complex = 0j, radius: float | None = None,
               params: SearchParams = SearchParams()) -> list[Landmark]:
    ev = _as_evaluator(s)
    radius = ev.R_max - abs(center) if radius is None else radius
    _validate_disk(ev, center, radius)
    zs = _Search(ev, center, radius, False, params)
    zs.run()
    return list(zs.landmarks(radius + params.dedup_radius))


def find_critical_points(s, center: complex = 0j, radius: float | None = None,
                         params: SearchParams = SearchParams()) -> list[Landmark]:
    ev = _as_evaluator(s)
    radius = ev.R_max - abs(center) if radius is None else radius
    _validate_disk(ev, center, radius)
    cs = _Search(ev, center, radius, True, params)
    cs.run()
    return list(cs.landmarks(radius + params.dedup_radius))


def count_stats(ls: LandmarkSet, center: complex, rho: float) -> CountStats:
    """Landmark counts strictly inside B_rho(center)."""
    if abs(center - ls.center) + rho > ls.radius + 1e-12:
        raise DiskOutOfBounds(f"B_{rho}({center}) is not inside the searched disk")
    inside = lambda lm: abs(lm.position - center) < rho  # noqa: E731
    nz = sum(1 for lm in ls.zeros if inside(lm))
    kinds = [lm.kind for lm in ls.criticals if inside(lm)]
    ncp = kinds.count(SADDLE)
    ncm = kinds.count(LOCALMAX)
    ndeg = kinds.count(DEGENERATE)
    return CountStats(nz, ncp + ncm, ncp, ncm, ndeg)
