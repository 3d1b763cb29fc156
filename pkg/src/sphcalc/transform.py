"""Quadrature grids and analysis/synthesis transforms on the sphere.

The grid is Gauss-Legendre in ``x = cos(theta)`` crossed with equispaced
``phi``; a grid built for degree ``lmax`` integrates products of two
band-limited functions of degree ``lmax`` exactly (up to roundoff), which
makes analyse/synthesise an exact round trip on band-limited data.
"""

from __future__ import annotations

import math

import numpy as np

from .expansions import (
    HarmonicExpansion,
    as_point,
    degree_order_arrays,
)
from .legendre import orthonormal_legendre_table
from .report import BoundReport


class GridTooCoarseError(ValueError):
    """Grid exactness below what the requested operation needs."""


class FieldFileError(ValueError):
    """Malformed sampled-field document."""


def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes (ascending) and weights on [-1, 1].

    Newton iteration on the degree-``n`` Legendre polynomial, converged to
    1e-15 in the node update.
    """
    if n < 1:
        raise ValueError("need at least one node")
    k = np.arange(1, n + 1, dtype=np.float64)
    x = np.cos(math.pi * (k - 0.25) / (n + 0.5))
    for _ in range(100):
        p_prev = np.ones_like(x)
        p = x.copy()
        for deg in range(2, n + 1):
            p, p_prev = ((2 * deg - 1) * x * p - (deg - 1) * p_prev) / deg, p
        if n == 1:
            p, p_prev = x.copy(), np.ones_like(x)
        dp = n * (x * p - p_prev) / (x * x - 1.0)
        dx = p / dp
        x -= dx
        if np.max(np.abs(dx)) < 1e-15:
            break
    p_prev = np.ones_like(x)
    p = x.copy()
    for deg in range(2, n + 1):
        p, p_prev = ((2 * deg - 1) * x * p - (deg - 1) * p_prev) / deg, p
    if n == 1:
        p_prev = np.ones_like(x)
    dp = n * (x * p - p_prev) / (x * x - 1.0)
    w = 2.0 / ((1.0 - x * x) * dp * dp)
    order = np.argsort(x)
    return x[order], w[order]


class SphereGrid:
    """Gauss-Legendre x equispaced-phi product grid declared for ``lmax``."""

    __slots__ = ("lmax", "x", "w", "theta", "phi", "_tables")

    def __init__(self, lmax: int, x, w, phi):
        self.lmax = int(lmax)
        self.x = np.asarray(x, dtype=np.float64)
        self.w = np.asarray(w, dtype=np.float64)
        self.phi = np.asarray(phi, dtype=np.float64)
        self.theta = np.arccos(np.clip(self.x, -1.0, 1.0))
        self._tables = {}
        if abs(self.w.sum() - 2.0) > 1e-13:
            raise ValueError("quadrature weights must sum to 2")
        if np.any(np.diff(self.x) <= 0.0):
            raise ValueError("nodes must be strictly increasing")
        if self.n_theta < self.lmax + 1 or self.n_phi < 2 * self.lmax + 1:
            raise ValueError("grid too small for its declared lmax")

    @property
    def n_theta(self) -> int:
        return self.x.size

    @property
    def n_phi(self) -> int:
        return self.phi.size

    def basis_table(self, lmax: int) -> np.ndarray:
        """Cached orthonormal Legendre table at the theta nodes."""
        if lmax not in self._tables:
            self._tables[lmax] = orthonormal_legendre_table(lmax, self.x)
        return self._tables[lmax]

    def __repr__(self):
        return f"SphereGrid(lmax={self.lmax}, n_theta={self.n_theta}, n_phi={self.n_phi})"


def make_grid(lmax: int) -> SphereGrid:
    """Minimal exact grid for degree ``lmax``: ``lmax+1`` x ``2*lmax+2`` nodes."""
    if lmax < 0:
        raise ValueError("lmax must be >= 0")
    x, w = gauss_legendre(lmax + 1)
    n_phi = 2 * lmax + 2
    phi = 2.0 * math.pi * np.arange(n_phi) / n_phi
    return SphereGrid(lmax, x, w, phi)


class SampledField:
    """Complex samples on a sphere grid, indexed ``[theta_node, phi_node]``."""

    __slots__ = ("grid", "samples")

    def __init__(self, grid: SphereGrid, samples):
        arr = np.asarray(samples, dtype=np.complex128)
        if arr.shape != (grid.n_theta, grid.n_phi):
            raise ValueError(
                f"sample table shape {arr.shape} does not match grid "
                f"({grid.n_theta}, {grid.n_phi})"
            )
        self.grid = grid
        self.samples = arr


def _phase_matrix(grid: SphereGrid, lmax: int) -> np.ndarray:
    mvals = np.arange(-lmax, lmax + 1)
    return np.exp(1j * np.outer(mvals, grid.phi))


def synthesize(f: HarmonicExpansion, grid: SphereGrid) -> SampledField:
    """Evaluate the expansion on the grid.

    Separable evaluation: the theta-dependent part is accumulated per order
    ``m``, then phased across the phi nodes by direct summation; cubic cost
    in the degree, which is the intended envelope at desk scale.
    """
    if grid.lmax < f.lmax:
        raise GridTooCoarseError(f"grid lmax={grid.lmax} < expansion lmax={f.lmax}")
    L = f.lmax
    N = grid.basis_table(L)
    C = f.to_matrix()
    G = np.zeros((grid.n_theta, 2 * L + 1), dtype=np.complex128)
    for m in range(L + 1):
        block = N[:, m:, m]
        G[:, L + m] = block @ C[m:, L + m]
        if m > 0:
            G[:, L - m] = (-1) ** m * (block @ C[m:, L - m])
    samples = G @ _phase_matrix(grid, L)
    return SampledField(grid, samples)


def analyze(field: SampledField, lmax: int) -> HarmonicExpansion:
    """Coefficients by quadrature against the orthonormal basis functions.

    Exact (to roundoff) whenever the field is band-limited at a degree the
    grid resolves.
    """
    grid = field.grid
    if grid.lmax < lmax:
        raise GridTooCoarseError(f"grid lmax={grid.lmax} < requested lmax={lmax}")
    L = lmax
    scale = 2.0 * math.pi / grid.n_phi
    H = scale * (field.samples @ _phase_matrix(grid, L).conj().T)
    N = grid.basis_table(L)
    wH = grid.w[:, None] * H
    C = np.zeros((L + 1, 2 * L + 1), dtype=np.complex128)
    for m in range(L + 1):
        block = N[:, m:, m]
        C[m:, L + m] = block.T @ wH[:, L + m]
        if m > 0:
            C[m:, L - m] = (-1) ** m * (block.T @ wH[:, L - m])
    ls, ms = degree_order_arrays(L)
    return HarmonicExpansion(L, C[ls, L + ms])


def basis_point_values(lmax: int, p) -> np.ndarray:
    """Flat array of the orthonormal basis functions at one point."""
    p = as_point(p)
    N = orthonormal_legendre_table(lmax, np.array([math.cos(p.theta)]))[0]
    ls, ms = degree_order_arrays(lmax)
    mags = N[ls, np.abs(ms)] * np.where(ms < 0, (-1.0) ** np.abs(ms), 1.0)
    return mags * np.exp(1j * ms * p.phi)


def point_eval(f: HarmonicExpansion, p) -> complex:
    """Evaluate the expansion at a single point (finite coefficient sum)."""
    return complex(basis_point_values(f.lmax, p) @ f.coeffs)


def inner_product(f: HarmonicExpansion, g: HarmonicExpansion) -> complex:
    """Coefficient-side pairing, conjugate-linear in the first argument."""
    lmax = max(f.lmax, g.lmax)
    return complex(np.vdot(f.with_lmax(lmax).coeffs, g.with_lmax(lmax).coeffs))


def quadrature_integral(field: SampledField) -> complex:
    """Integral of the samples against the product measure."""
    scale = 2.0 * math.pi / field.grid.n_phi
    return complex(scale * (field.grid.w @ field.samples.sum(axis=1)))


def quadrature_inner_product(fa: SampledField, fb: SampledField) -> complex:
    if fa.grid is not fb.grid and (
        fa.grid.n_theta != fb.grid.n_theta or fa.grid.n_phi != fb.grid.n_phi
    ):
        raise ValueError("fields live on different grids")
    scale = 2.0 * math.pi / fa.grid.n_phi
    inner = np.einsum("ij,ij->i", fa.samples.conj(), fb.samples)
    return complex(scale * (fa.grid.w @ inner))


def orthonormality_check(lmax: int) -> BoundReport:
    """Gram matrix of the orthonormal basis by quadrature, against identity.

    The phi factor of every Gram entry is itself computed by the trapezoid
    sum, so the reported deviation is the true quadrature deviation.
    """
    if lmax < 0:
        raise ValueError("lmax must be >= 0")
    grid = make_grid(lmax)
    N = grid.basis_table(lmax)
    ls, ms = degree_order_arrays(lmax)
    K = ls.size
    # T[i, k] = magnitude part of basis function k at theta node i
    T = N[:, ls, np.abs(ms)] * np.where(ms < 0, (-1.0) ** np.abs(ms), 1.0)[None, :]
    theta_gram = T.T @ (grid.w[:, None] * T)
    scale = 2.0 * math.pi / grid.n_phi
    mvals = np.arange(-lmax, lmax + 1)
    phases = np.exp(1j * np.outer(mvals, grid.phi))
    phi_gram = scale * (phases.conj() @ phases.T)  # [m + lmax, m' + lmax]
    gram = theta_gram * phi_gram[np.ix_(ms + lmax, ms + lmax)]
    dev = float(np.max(np.abs(gram - np.eye(K))))
    return BoundReport(
        check="orthonormality",
        anchor="integral of conj(Y_l^m) (l+1/2) Y_l'^m' over the sphere = delta_ll' delta_mm'",
        lhs=dev,
        rhs=1e-10,
        lmax=lmax,
    )


def completeness_kernel(lmax: int, p, q) -> complex:
    """Truncated reproducing kernel ``sum e_{l,m}(p) conj(e_{l,m}(q))``.

    Concentrates toward a delta in ``(cos(theta), phi)`` as ``lmax`` grows;
    the diagonal value is exactly ``(lmax+1)^2 / (4*pi)``.
    """
    return complex(np.vdot(basis_point_values(lmax, q), basis_point_values(lmax, p)))


# ---------------------------------------------------------------------------
# sampled-field document I/O: '#' metadata header, then theta,phi,re,im rows

def save_field(field: SampledField, path) -> None:
    grid = field.grid
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# grid lmax={grid.lmax} n_theta={grid.n_theta} n_phi={grid.n_phi}\n")
        fh.write("# columns theta,phi,re,im\n")
        for i in range(grid.n_theta):
            for j in range(grid.n_phi):
                v = field.samples[i, j]
                fh.write(
                    f"{float(grid.theta[i])!r},{float(grid.phi[j])!r},"
                    f"{float(v.real)!r},{float(v.imag)!r}\n"
                )


def load_field(path) -> SampledField:
    lmax = None
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                for token in line[1:].split():
                    if token.startswith("lmax="):
                        lmax = int(token[5:])
                continue
            parts = line.split(",")
            if len(parts) != 4:
                raise FieldFileError(f"{path}:{lineno}: expected 4 fields, got {len(parts)}")
            try:
                rows.append(tuple(float(t) for t in parts))
            except ValueError as exc:
                raise FieldFileError(f"{path}:{lineno}: bad number: {line!r}") from exc
    if lmax is None:
        raise FieldFileError(f"{path}: missing grid metadata header")
    grid = make_grid(lmax)
    if len(rows) != grid.n_theta * grid.n_phi:
        raise FieldFileError(
            f"{path}: expected {grid.n_theta * grid.n_phi} rows, got {len(rows)}"
        )
    samples = np.zeros((grid.n_theta, grid.n_phi), dtype=np.complex128)
    for k, (theta, phi, re, im) in enumerate(rows):
        i, j = divmod(k, grid.n_phi)
        if abs(theta - grid.theta[i]) > 1e-9 or abs(phi - grid.phi[j]) > 1e-9:
            raise FieldFileError(f"{path}: row {k} nodes do not match the declared grid")
        samples[i, j] = re + 1j * im
    return SampledField(grid, samples)
