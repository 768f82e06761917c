"""Reference values computed independently of the package.

Closed forms are re-derived here by hand or evaluated with mpmath directly;
frozen numbers were produced once with 30-digit mpmath and pasted in.
"""
import math

import mpmath as mp
import numpy as np

# E[F(z) conj F(w)] for F = conj(z) G - dG.
def cov_F(z, w):
    return (1 - abs(z - w) ** 2) * np.exp(z * np.conj(w))


def series_jet(coeffs, z, dps=40):
    """G, G', G'', G''' of sum c_n z^n / sqrt(n!) by direct mpmath summation."""
    with mp.workdps(dps):
        z = mp.mpc(z)
        out = []
        for k in range(4):
            s = mp.mpc(0)
            for n in range(k, len(coeffs)):
                c = coeffs[n]
                if c == 0:
                    continue
                s += mp.mpc(c.real, c.imag) * mp.ff(n, k) * z ** (n - k) / mp.sqrt(mp.factorial(n))
            out.append(complex(s))
    return out


# Sum over n > N of R^(2n)/n! (mpmath nsum, 30 digits).
TAIL = {(20, 2.0): 1.04995434289630759433e-07, (50, 3.0): 3.61330785022443638009e-18}

# Conditional covariance of (F10, F02, F03)(0) given F(+-0.5i) = 0, from the
# printed blocks by 30-digit mpmath regression.
COND_HALF = np.array([[2.78096227976116738080, 0, 4.74053310862671243963j],
                      [0, 8.97173959110103575989, 0],
                      [-4.74053310862671243963j, 0, 34.758065374603596527]])

LIMIT_CONDITIONAL = np.array([[8 / 3, 0, 4j], [0, 6, 0], [-4j, 0, 30]])

LENS_01_01 = 0.0122836969860875684554  # lens area, s = 0.1, rho = 0.1

# E[|Z2|^2 (a|Z2|^2 - |Z1|^2) 1{|Z1| < sqrt(a)|Z2|}], a = |z|^6/36
ZCM_EXPECTATION = {0.6: 5.03015495430170625297e-06, 1.0: 2.23196169142115088061e-03}
# The same integrand integrated over polar radii (k1, k2): one quarter of the above.
ZCM_POLAR_1 = 5.5799042285528772015e-04

# Small-separation limits.
SIGMA_C_OVER_R2 = 8.0
CC_DENSITY_AT_ZERO = 2 / (3 * math.pi ** 2)
CC_RATIO = 6 / 25


def gef_zero_pair_correlation(r):
    """Normalized two-point function of GEF zeros (intensity 1/pi) at distance r."""
    t = r * r / 2
    s, c = math.sinh(t), math.cosh(t)
    return ((s * s + t * t) * c - 2 * t * s) / s ** 3


def lens_mc(s, rho, n, rng):
    pts = (rng.random((n, 2)) * 2 - 1) * rho
    z = pts[:, 0] + 1j * pts[:, 1]
    inside = (np.abs(z) < rho) & (np.abs(z - s) < rho)
    return inside.mean() * 4 * rho * rho
