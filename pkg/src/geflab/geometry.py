"""Exact areas of intersections of disks."""
from __future__ import annotations

import numpy as np


def lens_area(s, rho: float):
    """Area of B_rho(0) intersected with B_rho(s) for separations s (0 beyond 2 rho)."""
    s = np.asarray(s, dtype=float)
    x = np.clip(s / (2 * rho), 0.0, 1.0)
    out = 2 * rho * rho * np.arccos(x) - 0.5 * s * np.sqrt(np.maximum(4 * rho * rho - s * s, 0.0))
    return np.where(s < 2 * rho, out, 0.0)


def disks_intersection_area(centers, radii) -> float:
    """Area of the intersection of several disks, by Green's theorem on the boundary arcs."""
    c = np.asarray(centers, dtype=complex)
    r = np.asarray(radii, dtype=float)
    k = len(c)
    # Nested or disjoint cases first.
    for i in range(k):
        for j in range(k):
            if i != j and abs(c[i] - c[j]) >= r[i] + r[j]:
                return 0.0
    inside_all = [all(abs(c[i] - c[j]) + r[i] <= r[j] for j in range(k) if j != i) for i in range(k)]
    if any(inside_all):
        i = int(np.argmin(np.where(inside_all, r, np.inf)))
        return float(np.pi * r[i] ** 2)
    total = 0.0
    for i in range(k):
        cuts = [0.0, 2 * np.pi]
        for j in range(k):
            if j == i:
                continue
            d = abs(c[j] - c[i])
            if d == 0 or d >= r[i] + r[j] or d <= abs(r[i] - r[j]):
                continue
            base = np.angle(c[j] - c[i])
            half = np.arccos((r[i] ** 2 + d * d - r[j] ** 2) / (2 * r[i] * d))
            cuts += [(base - half) % (2 * np.pi), (base + half) % (2 * np.pi)]
        cuts = np.sort(cuts)
        for a, b in zip(cuts[:-1], cuts[1:]):
            if b - a <= 0:
                continue
            mid = c[i] + r[i] * np.exp(1j * 0.5 * (a + b))
            if all(abs(mid - c[j]) < r[j] for j in range(k) if j != i):
                x0, y0 = c[i].real, c[i].imag
                total += 0.5 * (r[i] ** 2 * (b - a) + x0 * r[i] * (np.sin(b) - np.sin(a))
                                - y0 * r[i] * (np.cos(b) - np.cos(a)))
    return float(total)
