"""Associated Legendre functions and spherical-harmonic point evaluation.

Conventions: Condon-Shortley phase inside ``P_l^m`` (``P_1^1(x) =
-sqrt(1-x^2)``), harmonics normalised as ``Y_l^m = sqrt((l-m)!/(2*pi*(l+m)!))
* exp(i*m*phi) * P_l^m(cos(theta))``, so that ``sqrt(l+1/2) * Y_l^m`` is an
orthonormal family for the measure ``d(cos(theta)) dphi``.  Negative orders
use ``P_l^{-m} = (-1)^m (l-m)!/(l+m)! P_l^m``, equivalently ``Y_l^{-m} =
(-1)^m conj(Y_l^m)``.
"""

from __future__ import annotations

import math

import numpy as np

from .expansions import as_index, as_point
from .report import BoundReport

SH_SUP_BOUND = 1.0 / math.sqrt(2.0 * math.pi)


def assoc_legendre(l: int, m: int, x):
    """Associated Legendre function ``P_l^m(x)`` for ``m >= 0``.

    Ascending-degree three-term recurrence seeded with ``P_m^m(x) =
    (-1)^m (2m-1)!! (1-x^2)^(m/2)``.  Accepts scalar or array ``x`` with
    ``|x| <= 1``; returns 0 when ``m > l``.
    """
    if m < 0:
        raise ValueError("assoc_legendre requires m >= 0")
    if l < 0:
        raise ValueError("assoc_legendre requires l >= 0")
    x = np.asarray(x, dtype=np.float64)
    if np.any(np.abs(x) > 1.0):
        raise ValueError("argument out of range: |x| > 1")
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    if m > l:
        out = np.zeros_like(x)
        return float(out[0]) if scalar else out

    s = np.sqrt(np.maximum(1.0 - x * x, 0.0))
    pmm = np.ones_like(x)
    for k in range(1, m + 1):
        pmm *= -(2 * k - 1) * s
    if l == m:
        return float(pmm[0]) if scalar else pmm
    pm1 = x * (2 * m + 1) * pmm
    if l == m + 1:
        return float(pm1[0]) if scalar else pm1
    for deg in range(m + 2, l + 1):
        pmm, pm1 = pm1, (x * (2 * deg - 1) * pm1 - (deg + m - 1) * pmm) / (deg - m)
    return float(pm1[0]) if scalar else pm1


def _amplitude(l: int, m: int) -> float:
    # sqrt((l-m)!/(2*pi*(l+m)!)) via log-gamma, stable to high degree
    return math.exp(
        0.5 * (math.lgamma(l - m + 1) - math.lgamma(l + m + 1))
        - 0.5 * math.log(2.0 * math.pi)
    )


def sh_eval(idx, p) -> complex:
    """Spherical harmonic ``Y_l^m`` at a point."""
    idx = as_index(idx)
    p = as_point(p)
    l, m = idx.l, idx.m
    mu = abs(m)
    x = min(1.0, max(-1.0, math.cos(p.theta)))
    val = _amplitude(l, mu) * assoc_legendre(l, mu, x)
    if m < 0:
        val *= (-1) ** mu
    return val * complex(math.cos(m * p.phi), math.sin(m * p.phi))


def orthonormal_sh_eval(idx, p) -> complex:
    """Orthonormal basis function ``sqrt(l+1/2) * Y_l^m`` at a point."""
    idx = as_index(idx)
    return math.sqrt(idx.l + 0.5) * sh_eval(idx, p)


def orthonormal_legendre_table(lmax: int, x) -> np.ndarray:
    """Table ``N[i, l, m]`` of orthonormal-harmonic magnitudes for ``m >= 0``.

    ``N[i, l, m] * exp(i*m*phi)`` equals ``sqrt(l+1/2) * Y_l^m(theta, phi)``
    at ``x_i = cos(theta)``; for negative orders multiply by ``(-1)^m``.
    Fully-normalised recurrence, stable for degrees well beyond the plain
    ``P_l^m`` overflow point.
    """
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if np.any(np.abs(x) > 1.0):
        raise ValueError("argument out of range: |x| > 1")
    n = x.size
    N = np.zeros((n, lmax + 1, lmax + 1))
    s = np.sqrt(np.maximum(1.0 - x * x, 0.0))
    N[:, 0, 0] = 1.0 / math.sqrt(4.0 * math.pi)
    for m in range(1, lmax + 1):
        N[:, m, m] = -math.sqrt((2 * m + 1) / (2.0 * m)) * s * N[:, m - 1, m - 1]
    for m in range(lmax + 1):
        if m + 1 <= lmax:
            N[:, m + 1, m] = math.sqrt(2 * m + 3.0) * x * N[:, m, m]
        for l in range(m + 2, lmax + 1):
            a = math.sqrt((4.0 * l * l - 1.0) / (l * l - m * m))
            b = math.sqrt(((l - 1.0) ** 2 - m * m) / (4.0 * (l - 1.0) ** 2 - 1.0))
            N[:, l, m] = a * (x * N[:, l - 1, m] - b * N[:, l - 2, m])
    return N


def uniform_bound_check(lmax: int, grid_density: int = 2048) -> BoundReport:
    """Scan ``max |Y_l^m|`` over a dense theta grid against ``1/sqrt(2*pi)``.

    The supremum is attained (``m = 0`` at the poles), so the margin is zero
    up to roundoff; the report tolerance absorbs that.
    """
    if lmax < 0:
        raise ValueError("lmax must be >= 0")
    theta = np.linspace(0.0, math.pi, grid_density)
    N = orthonormal_legendre_table(lmax, np.cos(theta))
    degs = np.arange(lmax + 1, dtype=np.float64)
    # |Y_l^m| = N[l, m] / sqrt(l + 1/2); phase factors drop out of the modulus
    scaled = np.abs(N) / np.sqrt(degs + 0.5)[None, :, None]
    worst = float(scaled.max())
    return BoundReport(
        check="uniform_sup_bound",
        anchor="|Y_l^m(theta,phi)| <= 1/sqrt(2*pi)",
        lhs=worst,
        rhs=SH_SUP_BOUND,
        tol=1e-12,
        lmax=lmax,
        details={"grid_density": int(grid_density)},
    )
