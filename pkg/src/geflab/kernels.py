"""Exact covariance kernels of derivative functionals of the GEF.

A kernel is a polynomial in (z, zb, wb, w) times exp(z * wb), where the
first argument z belongs to the left functional and w to the conjugated
right one. Differentiating keeps that shape, so every covariance used in
the package reduces to sparse coefficient arithmetic.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Mapping

import mpmath
import numpy as np

from .errors import OrderTooHigh
from .linalg import HermitianCov

MAX_ORDER = 4

Mono = tuple[int, int, int, int]  # powers of z, zb, wb, w


@dataclass(frozen=True)
class PolyExpKernel:
    coeffs: Mapping[Mono, complex] = field(default_factory=dict)

    def __post_init__(self):
        clean = {m: complex(c) for m, c in self.coeffs.items() if c != 0}
        object.__setattr__(self, "coeffs", dict(sorted(clean.items())))

    def __add__(self, other: "PolyExpKernel") -> "PolyExpKernel":
        out = dict(self.coeffs)
        for m, c in other.coeffs.items():
            out[m] = out.get(m, 0) + c
        return PolyExpKernel(out)

    def scale(self, a: complex) -> "PolyExpKernel":
        return PolyExpKernel({m: a * c for m, c in self.coeffs.items()})

    def __eq__(self, other):
        return isinstance(other, PolyExpKernel) and self.coeffs == other.coeffs

    def __hash__(self):
        return hash(tuple(self.coeffs.items()))

    def __call__(self, z, w):
        """Evaluate at numpy-broadcastable or mpmath points."""
        if isinstance(z, (mpmath.mpc, mpmath.mpf)) or isinstance(w, (mpmath.mpc, mpmath.mpf)):
            z, w = mpmath.mpc(z), mpmath.mpc(w)
            zb, wb = mpmath.conj(z), mpmath.conj(w)
            poly = mpmath.mpc(0)
            for (a, b, c, d), k in self.coeffs.items():
                poly += mpmath.mpc(k) * z**a * zb**b * wb**c * w**d
            return poly * mpmath.exp(z * wb)
        z = np.asarray(z, dtype=complex)
        w = np.asarray(w, dtype=complex)
        zb, wb = np.conj(z), np.conj(w)
        poly = np.zeros(np.broadcast(z, w).shape, dtype=complex)
        for (a, b, c, d), k in self.coeffs.items():
            poly = poly + k * z**a * zb**b * wb**c * w**d
        out = poly * np.exp(z * wb)
        return out[()] if out.ndim == 0 else out

    def dump(self) -> str:
        """One monomial per line: `c * z^a zb^b wb^c w^d`."""
        lines = []
        for (a, b, c, d), k in self.coeffs.items():
            lines.append(f"({k.real:+.17g}{k.imag:+.17g}j) * z^{a} zb^{b} wb^{c} w^{d}")
        return "\n".join(lines)

    @classmethod
    def parse(cls, text: str) -> "PolyExpKernel":
        out = {}
        for line in text.strip().splitlines():
            coef, mono = line.split(" * ")
            powers = tuple(int(tok.split("^")[1]) for tok in mono.split())
            out[powers] = out.get(powers, 0) + complex(coef.strip())
        return cls(out)


def kernel_G() -> PolyExpKernel:
    return PolyExpKernel({(0, 0, 0, 0): 1})


# Elementary rules on one side. exp(z wb) depends on z (first side) and on wb
# (second side), which is what the extra shifted terms below account for.

def _d_z(k):
    out = {}
    for (a, b, c, d), v in k.coeffs.items():
        if a:
            out[(a - 1, b, c, d)] = out.get((a - 1, b, c, d), 0) + a * v
        out[(a, b, c + 1, d)] = out.get((a, b, c + 1, d), 0) + v
    return PolyExpKernel(out)


def _d_zb(k):
    out = {}
    for (a, b, c, d), v in k.coeffs.items():
        if b:
            out[(a, b - 1, c, d)] = out.get((a, b - 1, c, d), 0) + b * v
    return PolyExpKernel(out)


def _mul_zb(k):
    return PolyExpKernel({(a, b + 1, c, d): v for (a, b, c, d), v in k.coeffs.items()})


def _d_wb(k):
    out = {}
    for (a, b, c, d), v in k.coeffs.items():
        if c:
            out[(a, b, c - 1, d)] = out.get((a, b, c - 1, d), 0) + c * v
        out[(a + 1, b, c, d)] = out.get((a + 1, b, c, d), 0) + v
    return PolyExpKernel(out)


def _d_w(k):
    out = {}
    for (a, b, c, d), v in k.coeffs.items():
        if d:
            out[(a, b, c, d - 1)] = out.get((a, b, c, d - 1), 0) + d * v
    return PolyExpKernel(out)


def _mul_w(k):
    return PolyExpKernel({(a, b, c, d + 1): v for (a, b, c, d), v in k.coeffs.items()})


# Primitive operator names: "d" (holomorphic derivative), "db" (antiholomorphic
# derivative), "zb" (multiply by the conjugate coordinate).
_FIRST = {"d": _d_z, "db": _d_zb, "zb": _mul_zb}
# On the second side the kernel carries conj(f(w)), so each operator acts conjugated.
_SECOND = {"d": _d_wb, "db": _d_w, "zb": _mul_w}

# Composite operators as linear combinations of primitive words.
COMPOSITE = {
    "d": [(1, ("d",))],
    "db": [(1, ("db",))],
    "zb": [(1, ("zb",))],
    "cov": [(1, ("zb",)), (-1, ("d",))],
    "dx": [(1, ("d",)), (1, ("db",))],
    "dy": [(1j, ("d",)), (-1j, ("db",))],
}


def expand(ops: Iterable[str]) -> list[tuple[complex, tuple[str, ...]]]:
    """Expand an operator list (applied left to right) into primitive words."""
    terms: dict[tuple[str, ...], complex] = {(): 1}
    for op in ops:
        new: dict[tuple[str, ...], complex] = {}
        for word, c in terms.items():
            for c2, prim in COMPOSITE[op]:
                key = word + prim
                new[key] = new.get(key, 0) + c * c2
        terms = new
    return [(c, w) for w, c in terms.items() if c != 0]


def apply_operator(k: PolyExpKernel, side: str, op: str) -> PolyExpKernel:
    """Apply op to the first or second functional of the kernel."""
    rules = _FIRST if side == "first" else _SECOND
    out = PolyExpKernel()
    for c, word in expand([op]):
        kk = k
        for prim in word:
            kk = rules[prim](kk)
        if side == "second":
            c = np.conj(c)
        out = out + kk.scale(c)
    return out


@lru_cache(maxsize=None)
def word_kernel(left: tuple[str, ...], right: tuple[str, ...]) -> PolyExpKernel:
    """Kernel E[(left word applied to G)(z) * conj((right word applied to G)(w))]."""
    k = kernel_G()
    for prim in left:
        k = _FIRST[prim](k)
    for prim in right:
        k = _SECOND[prim](k)
    return k


@dataclass(frozen=True)
class DerivDescriptor:
    """A derivative functional of G at a point: ops are applied to G left to right."""
    ops: tuple[str, ...]
    point: complex = 0j

    def at(self, point) -> "DerivDescriptor":
        return DerivDescriptor(self.ops, point)

    def terms(self):
        return expand(self.ops)


def real_derivative_descriptor(m: int, n: int, max_order: int = MAX_ORDER) -> tuple[str, ...]:
    """Operator list for F^{(m,n)}, F being the covariant derivative of G."""
    if m < 0 or n < 0:
        raise ValueError("orders must be non-negative")
    if m + n > max_order:
        raise OrderTooHigh(f"order {m + n} exceeds cap {max_order}")
    return ("cov",) + ("dx",) * m + ("dy",) * n


def G_at(point=0j, k: int = 0) -> DerivDescriptor:
    """k-th holomorphic derivative of G."""
    return DerivDescriptor(("d",) * k, point)


def F_at(point=0j, m: int = 0, n: int = 0) -> DerivDescriptor:
    """Real partial derivative F^{(m,n)}."""
    return DerivDescriptor(real_derivative_descriptor(m, n), point)


def pair_kernel(left: DerivDescriptor, right: DerivDescriptor) -> PolyExpKernel:
    out = PolyExpKernel()
    for a, wl in left.terms():
        for b, wr in right.terms():
            out = out + word_kernel(wl, wr).scale(a * np.conj(b))
    return out


def eval_cov(descs: list[DerivDescriptor]) -> HermitianCov:
    """Covariance matrix of the listed functionals."""
    n = len(descs)
    out = np.zeros((n, n), dtype=complex)
    for i, j in itertools.combinations_with_replacement(range(n), 2):
        v = pair_kernel(descs[i], descs[j])(descs[i].point, descs[j].point)
        out[i, j] = v
        out[j, i] = np.conj(v)
    for i in range(n):
        out[i, i] = out[i, i].real
    return HermitianCov(out)


def eval_cov_mp(descs: list[DerivDescriptor], dps: int = 40) -> "mpmath.matrix":
    """eval_cov in extended precision; returns an mpmath matrix."""
    n = len(descs)
    with mpmath.workdps(dps):
        out = mpmath.matrix(n, n)
        for i, j in itertools.combinations_with_replacement(range(n), 2):
            zi = mpmath.mpc(descs[i].point)
            zj = mpmath.mpc(descs[j].point)
            v = pair_kernel(descs[i], descs[j])(zi, zj)
            out[i, j] = v
            out[j, i] = mpmath.conj(v)
        for i in range(n):
            out[i, i] = mpmath.re(out[i, i])
    return out
