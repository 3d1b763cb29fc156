"""Multiplication and derivative operators, harmonic products, PDE check.

Every operator here exists in two channels: a banded coefficient map, and an
independent pointwise quadrature oracle (``pointwise_multiply_oracle``).  For
``cos(theta)`` and ``sin(theta)*exp(+-i*phi)`` the two provably coincide and
their agreement is a test.  The ``1/sin(theta)`` and ``d/dtheta`` maps are
*formal* coefficient recurrences: their order-``m`` bookkeeping drops a
compensating ``exp(+-i*phi)`` phase, so they are banded analogues rather than
pointwise multiplications; the gap is measured, not hidden.
"""

from __future__ import annotations

import math

import numpy as np

from .algebra import CoefficientOperator, ComposedOperator, DomainError, Operator, ShiftRule, _sq
from .expansions import HarmonicExpansion, as_index, degree_order_arrays, flat_index
from .legendre import sh_eval
from .transform import SampledField, analyze, make_grid, synthesize


def cos_theta_op() -> CoefficientOperator:
    """Multiplication by ``cos(theta)`` as a banded map (dl = +-1, dm = 0)."""
    return CoefficientOperator(
        "cosTheta",
        (
            ShiftRule(+1, 0, lambda l, m: _sq((l + m + 1) * (l - m + 1)) / (2 * l + 1)),
            ShiftRule(-1, 0, lambda l, m: _sq((l + m) * (l - m)) / (2 * l + 1)),
        ),
    )


def sin_exp_op(sign: int) -> CoefficientOperator:
    """Multiplication by ``sin(theta)*exp(sign*i*phi)`` (dl = +-1, dm = sign).

    Amplitudes follow from the degree recurrences of ``sqrt(1-x^2) P_l^m``
    with the transferred phase tracked, so the map is pointwise-correct.
    """
    if sign == +1:
        rules = (
            ShiftRule(+1, +1, lambda l, m: -_sq((l + m + 1) * (l + m + 2)) / (2 * l + 1)),
            ShiftRule(-1, +1, lambda l, m: _sq((l - m) * (l - m - 1)) / (2 * l + 1)),
        )
        return CoefficientOperator("sinExp+", rules)
    if sign == -1:
        rules = (
            ShiftRule(+1, -1, lambda l, m: _sq((l - m + 1) * (l - m + 2)) / (2 * l + 1)),
            ShiftRule(-1, -1, lambda l, m: -_sq((l + m) * (l + m - 1)) / (2 * l + 1)),
        )
        return CoefficientOperator("sinExp-", rules)
    raise ValueError("sign must be +1 or -1")


def _require_no_axisymmetric_part(f: HarmonicExpansion) -> None:
    ls, ms = degree_order_arrays(f.lmax)
    bad = (ms == 0) & (np.abs(f.coeffs) > 0.0)
    if bad.any():
        l = int(ls[np.nonzero(bad)[0][0]])
        raise DomainError(
            f"1/sin(theta) map undefined on m=0 modes; found nonzero ({l},0)"
        )


def inv_sin_op_literal() -> CoefficientOperator:
    """Formal ``1/sin(theta)`` map (dl = +1, dm = +-1), amplitude ``-1/(2m)``.

    Defined only on expansions with no ``m = 0`` component (the termwise
    amplitude is singular there, and ``Y_l^0 / sin(theta)`` is not square
    integrable).  This is a coefficient recurrence, not a pointwise
    multiplication: the two branches drop opposite ``exp(-+i*phi)`` phases.
    """

    def up_plus(l, m):
        a = np.zeros(l.shape, dtype=np.float64)
        nz = m != 0
        a[nz] = -_sq((l[nz] + m[nz] + 1) * (l[nz] + m[nz] + 2)) / (2.0 * m[nz])
        return a

    def up_minus(l, m):
        a = np.zeros(l.shape, dtype=np.float64)
        nz = m != 0
        a[nz] = -_sq((l[nz] - m[nz] + 1) * (l[nz] - m[nz] + 2)) / (2.0 * m[nz])
        return a

    return CoefficientOperator(
        "invSinLit",
        (ShiftRule(+1, +1, up_plus), ShiftRule(+1, -1, up_minus)),
        precondition=_require_no_axisymmetric_part,
    )


def dtheta_op_literal() -> CoefficientOperator:
    """Formal ``d/dtheta`` map (dl = 0, dm = +-1).

    Amplitudes ``-(1/2) sqrt((l+m)(l-m+1))`` toward ``m-1`` and
    ``+(1/2) sqrt((l-m)(l+m+1))`` toward ``m+1``; the pointwise derivative
    carries extra ``exp(+-i*phi)`` phases on the shifted terms.
    """
    return CoefficientOperator(
        "dThetaLit",
        (
            ShiftRule(0, -1, lambda l, m: -0.5 * _sq((l + m) * (l - m + 1))),
            ShiftRule(0, +1, lambda l, m: 0.5 * _sq((l - m) * (l + m + 1))),
        ),
    )


def dphi_op() -> CoefficientOperator:
    """``d/dphi``: diagonal multiplication by ``i*m``."""
    return CoefficientOperator(
        "dPhi",
        (ShiftRule(0, 0, lambda l, m: 1j * np.asarray(m, dtype=np.float64)),),
    )


def exp_iphi_composite() -> Operator:
    """Formal ``exp(i*phi)`` as ``(1/sin) o (sin(theta) exp(i*phi))``.

    Band-limited in, band-limited out, unlike true ``exp(i*phi)``
    multiplication; the inner factor shifts every order up by one, so the
    ``m = 0`` domain condition falls on inputs with an ``m = -1`` component.
    """
    return ComposedOperator(inv_sin_op_literal(), sin_exp_op(+1))


# ---------------------------------------------------------------------------
# pointwise quadrature oracle

def pointwise_multiply_oracle(
    f: HarmonicExpansion,
    multiplier,
    out_lmax: int,
    grid_lmax: int | None = None,
) -> HarmonicExpansion:
    """Coefficients of ``multiplier(theta, phi) * f`` via sample-space quadrature.

    Independent verification channel for the banded maps: synthesise, multiply
    samples, re-analyse.  ``multiplier`` is vectorised over ``(theta, phi)``
    arrays.  The default grid is exact whenever the product is band-limited at
    ``out_lmax``.
    """
    if grid_lmax is None:
        grid_lmax = max(out_lmax, f.lmax) + 1
    grid = make_grid(grid_lmax)
    field = synthesize(f.with_lmax(grid_lmax), grid)
    tt, pp = np.meshgrid(grid.theta, grid.phi, indexing="ij")
    product = SampledField(grid, field.samples * multiplier(tt, pp))
    return analyze(product, out_lmax)


# ---------------------------------------------------------------------------
# Clebsch-Gordan coefficients and the harmonic product law

def _logfact(n: int) -> float:
    return math.lgamma(n + 1)


def clebsch_gordan(l1: int, m1: int, l2: int, m2: int, L: int, M: int) -> float:
    """Coupling coefficient ``<l1 m1 l2 m2 | L M>`` for integer momenta.

    Single-sum closed form evaluated with log-factorials.  Out-of-domain
    arguments give 0; the all-zero-order case with ``l1+l2+L`` odd is exactly
    0 by parity and short-circuited.
    """
    if M != m1 + m2:
        return 0.0
    if L < abs(l1 - l2) or L > l1 + l2 or abs(M) > L:
        return 0.0
    if abs(m1) > l1 or abs(m2) > l2:
        return 0.0
    if m1 == 0 and m2 == 0 and (l1 + l2 + L) % 2 == 1:
        return 0.0
    log_pref = 0.5 * (
        math.log(2.0 * L + 1.0)
        + _logfact(l1 + l2 - L)
        + _logfact(l1 - l2 + L)
        + _logfact(-l1 + l2 + L)
        - _logfact(l1 + l2 + L + 1)
        + _logfact(L + M)
        + _logfact(L - M)
        + _logfact(l1 - m1)
        + _logfact(l1 + m1)
        + _logfact(l2 - m2)
        + _logfact(l2 + m2)
    )
    k_min = max(0, l2 - L - m1, l1 - L + m2)
    k_max = min(l1 + l2 - L, l1 - m1, l2 + m2)
    total = 0.0
    for k in range(k_min, k_max + 1):
        log_term = (
            _logfact(k)
            + _logfact(l1 + l2 - L - k)
            + _logfact(l1 - m1 - k)
            + _logfact(l2 + m2 - k)
            + _logfact(L - l2 + m1 + k)
            + _logfact(L - l1 - m2 + k)
        )
        total += (-1.0) ** k * math.exp(log_pref - log_term)
    return total


def sh_product(idx1, idx2) -> HarmonicExpansion:
    """Expansion (orthonormal basis) of the pointwise product of two harmonics.

    ``Y_{l1}^{m1} Y_{l2}^{m2}`` couples into orders ``M = m1 + m2`` and degrees
    ``|l1-l2| <= L <= l1+l2``, weighted by ``1/sqrt(2*pi)`` times the two
    coupling coefficients.
    """
    idx1 = as_index(idx1)
    idx2 = as_index(idx2)
    l1, m1 = idx1.l, idx1.m
    l2, m2 = idx2.l, idx2.m
    M = m1 + m2
    out_lmax = l1 + l2
    coeffs = np.zeros((out_lmax + 1) ** 2, dtype=np.complex128)
    for L in range(max(abs(l1 - l2), abs(M)), out_lmax + 1):
        parity = clebsch_gordan(l1, 0, l2, 0, L, 0)
        if parity == 0.0:
            continue
        weight = parity * clebsch_gordan(l1, m1, l2, m2, L, M)
        coeffs[flat_index(L, M)] = weight / math.sqrt(2.0 * math.pi) / math.sqrt(L + 0.5)
    return HarmonicExpansion(out_lmax, coeffs)


# ---------------------------------------------------------------------------
# eigenvalue equation check by finite differences

def pde_residual(idx, h: float, points=None) -> float:
    """Max residual of the angular Laplacian eigen-equation on one harmonic.

    Central second-order differences of the point evaluator; default sample
    points sit well inside ``theta in [pi/3, 2*pi/3]`` (the equation's
    coefficients are singular at the poles, and the pole-exclusion zone must
    be at least ``10*h``).
    """
    idx = as_index(idx)
    if not 0.0 < h < 0.1:
        raise ValueError("step must satisfy 0 < h < 0.1")
    if points is None:
        thetas = np.linspace(math.pi / 3.0, 2.0 * math.pi / 3.0, 5)
        phis = np.linspace(0.0, 2.0 * math.pi, 4, endpoint=False) + 0.37
        points = [(t, p) for t in thetas for p in phis]
    eig = float(idx.l * (idx.l + 1))
    worst = 0.0
    for theta, phi in points:
        if min(theta, math.pi - theta) < 10.0 * h:
            raise ValueError("sample point closer to a pole than 10*h")
        phi = phi % (2.0 * math.pi)

        def Y(t, p):
            return sh_eval(idx, (t, p % (2.0 * math.pi)))

        y0 = Y(theta, phi)
        d2_theta = (Y(theta + h, phi) - 2.0 * y0 + Y(theta - h, phi)) / (h * h)
        d1_theta = (Y(theta + h, phi) - Y(theta - h, phi)) / (2.0 * h)
        d2_phi = (Y(theta, phi + h) - 2.0 * y0 + Y(theta, phi - h)) / (h * h)
        residual = (
            d2_theta
            + d1_theta / math.tan(theta)
            + d2_phi / (math.sin(theta) ** 2)
            + eig * y0
        )
        worst = max(worst, abs(residual))
    return worst
