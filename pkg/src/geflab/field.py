"""Truncated GEF realizations and their weighted jets.

Every public value carries the Gaussian weight exp(-|z|^2/2); raw values of
G overflow long before the working radius matters.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import gammainc

from .errors import OutsideStableDisk, RadiusTooLarge
from .rng import standard_complex

R_CAP = 12.0
CHUNK = 4096
SAMPLE_SCHEMA = "geflab-sample v1"


def truncation_order(R_max: float) -> int:
    return int(math.ceil(R_max * R_max + 10 * R_max + 50))


def truncation_tail_bound(N: int, R: float) -> float:
    """Sum over n > N of R^(2n)/n!, bounding E|G - G_N|^2 on the disk of radius R."""
    x = R * R
    if x == 0.0:
        return 0.0
    # The regularized lower incomplete gamma P(N+1, x) equals e^-x times the tail sum.
    return float(gammainc(N + 1, x) * math.exp(x))


@dataclass(frozen=True)
class GefSample:
    coeffs: np.ndarray
    R_max: float
    seed: tuple = ()

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex)
        if not np.all(np.isfinite(c)):
            raise ValueError("non-finite coefficient")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def N(self) -> int:
        return len(self.coeffs) - 1


def sample_gef(R_max: float, rng: np.random.Generator, seed: tuple = ()) -> GefSample:
    if not 0 < R_max <= R_CAP:
        raise RadiusTooLarge(f"R_max={R_max} outside (0, {R_CAP}]")
    N = truncation_order(R_max)
    return GefSample(standard_complex(rng, N + 1), float(R_max), tuple(seed))


def from_coeffs(coeffs, R_max: float = 1.0) -> GefSample:
    """Deterministic sample with given leading coefficients, zero-padded to the policy length."""
    c = np.zeros(truncation_order(R_max) + 1, dtype=complex)
    c[: len(coeffs)] = coeffs
    return GefSample(c, float(R_max))


@dataclass(frozen=True)
class WeightedJet:
    """Weighted values at `point`; arrays broadcast with point."""
    point: np.ndarray
    wG: np.ndarray
    wdG: np.ndarray
    wd2G: np.ndarray
    wd3G: np.ndarray

    @property
    def wF(self):
        return np.conj(self.point) * self.wG - self.wdG

    @property
    def wdF(self):
        return np.conj(self.point) * self.wdG - self.wd2G

    @property
    def wdbarF(self):
        return self.wG

    @property
    def jac_w(self):
        """Weighted Jacobian |dF|^2 - |dbarF|^2 of F."""
        return np.abs(self.wdF) ** 2 - np.abs(self.wG) ** 2


def _basis(z: np.ndarray, N: int) -> np.ndarray:
    """t_n(z) = exp(-|z|^2/2) z^n / sqrt(n!) for n = 0..N, shape z.shape + (N+1,)."""
    steps = z[..., None] / np.sqrt(np.arange(1, N + 1))
    t = np.empty(z.shape + (N + 1,), dtype=complex)
    t[..., 0] = np.exp(-0.5 * np.abs(z) ** 2)
    t[..., 1:] = steps
    return np.cumprod(t, axis=-1)


class GefEvaluator:
    """Evaluates weighted jets of one sample inside its stable disk."""

    def __init__(self, sample: GefSample):
        self.sample = sample
        self.R_max = sample.R_max
        xi = sample.coeffs
        n = np.arange(len(xi), dtype=float)
        # Coefficient vectors of the k-th derivative in the shifted basis t_{n-k}.
        self._dcoef = [xi]
        fall = np.ones_like(n)
        for k in range(1, 4):
            fall = fall * np.maximum(n - (k - 1), 0)
            self._dcoef.append((xi * np.sqrt(fall))[k:])

    def __call__(self, z) -> WeightedJet:
        z = np.asarray(z, dtype=complex)
        if np.any(np.abs(z) > self.R_max * (1 + 1e-12)):
            raise OutsideStableDisk(f"|z| exceeds R_max={self.R_max}")
        N = self.sample.N
        flat = z.ravel()
        vals = [np.empty(flat.shape, complex) for _ in range(4)]
        for lo in range(0, flat.size, CHUNK):
            t = _basis(flat[lo: lo + CHUNK], N)
            for k, c in enumerate(self._dcoef):
                vals[k][lo: lo + CHUNK] = t[:, : N + 1 - k] @ c
        return WeightedJet(z, *(v.reshape(z.shape) for v in vals))


def eval_jet(s: GefSample, z) -> WeightedJet:
    return GefEvaluator(s)(z)


class ShiftedEvaluator:
    """Jets of the Bargmann-Fock shift exp(-|zeta|^2/2 + z conj(zeta)) f(z - zeta)."""

    def __init__(self, base, zeta: complex):
        self.base = base
        self.zeta = complex(zeta)
        self.R_max = base.R_max

    def __call__(self, z) -> WeightedJet:
        z = np.asarray(z, dtype=complex)
        zeta = self.zeta
        zc = np.conj(zeta)
        j = self.base(z - zeta)
        p = np.exp(1j * np.imag(z * zc))
        wG = p * j.wG
        wdG = p * (zc * j.wG + j.wdG)
        wd2G = p * (zc**2 * j.wG + 2 * zc * j.wdG + j.wd2G)
        wd3G = p * (zc**3 * j.wG + 3 * zc**2 * j.wdG + 3 * zc * j.wd2G + j.wd3G)
        return WeightedJet(z, wG, wdG, wd2G, wd3G)


def bargmann_fock_shift(evaluator, zeta: complex) -> ShiftedEvaluator:
    return ShiftedEvaluator(evaluator, zeta)


def save_sample(s: GefSample, path) -> None:
    """Text form: schema line, header fields, then one `re,im` row per coefficient.

    Floats are written with repr, which round-trips every double exactly.
    """
    lines = [f"# {SAMPLE_SCHEMA}",
             f"# seed={','.join(str(int(x)) for x in s.seed)}",
             f"# N={s.N}",
             f"# R_max={float(s.R_max)!r}",
             "re,im"]
    lines += [f"{float(c.real)!r},{float(c.imag)!r}" for c in s.coeffs]
    Path(path).write_text("\n".join(lines) + "\n")


def load_sample(path) -> GefSample:
    text = Path(path).read_text().splitlines()
    if text[0] != f"# {SAMPLE_SCHEMA}":
        raise ValueError(f"{path}: unknown sample schema {text[0]!r}")
    head = dict(line[2:].split("=", 1) for line in text[1:4])
    seed = tuple(int(x) for x in head["seed"].split(",") if x)
    rows = [line.split(",") for line in text[5:] if line]
    coeffs = np.array([complex(float(a), float(b)) for a, b in rows])
    if len(coeffs) != int(head["N"]) + 1:
        raise ValueError(f"{path}: coefficient count does not match N")
    return GefSample(coeffs, float(head["R_max"]), seed)
