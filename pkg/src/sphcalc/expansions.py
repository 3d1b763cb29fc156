"""Coefficient tables, graded norms and decay diagnostics.

An expansion stores one complex coefficient per index pair ``(l, m)`` with
``0 <= l <= lmax`` and ``|m| <= l``, taken with respect to the orthonormal
basis functions ``sqrt(l+1/2) * Y_l^m``.  The graded norm of order ``n``
weights coefficient ``(l, m)`` by ``(l + |m| + 1)^n``; the ``n = 0`` member is
the plain Hilbert norm.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

BASIS_TAG = "sqrt(l+1/2)Y"

_FLOAT_MAX_LOG = math.log(np.finfo(np.float64).max)


class CoefficientFileError(ValueError):
    """Malformed or inconsistent coefficient document."""


@dataclass(frozen=True)
class HarmonicIndex:
    """Degree/order pair with ``|m| <= l``."""

    l: int
    m: int

    def __post_init__(self):
        if self.l < 0:
            raise ValueError(f"degree must be >= 0, got l={self.l}")
        if abs(self.m) > self.l:
            raise ValueError(f"order out of range: |m|={abs(self.m)} > l={self.l}")


@dataclass(frozen=True)
class SpherePoint:
    """Point on the unit sphere, ``theta`` in [0, pi], ``phi`` in [0, 2*pi)."""

    theta: float
    phi: float

    def __post_init__(self):
        if not 0.0 <= self.theta <= math.pi:
            raise ValueError(f"theta out of range [0, pi]: {self.theta}")
        if not 0.0 <= self.phi < 2.0 * math.pi:
            raise ValueError(f"phi out of range [0, 2*pi): {self.phi}")


def as_index(idx) -> HarmonicIndex:
    if isinstance(idx, HarmonicIndex):
        return idx
    l, m = idx
    return HarmonicIndex(int(l), int(m))


def as_point(p) -> SpherePoint:
    if isinstance(p, SpherePoint):
        return p
    theta, phi = p
    return SpherePoint(float(theta), float(phi))


def flat_index(l, m):
    """Position of ``(l, m)`` in the flat triangular layout ``l*l + l + m``."""
    return l * l + l + m


@lru_cache(maxsize=None)
def degree_order_arrays(lmax: int) -> tuple[np.ndarray, np.ndarray]:
    """Arrays ``(ls, ms)`` listing every stored index pair in flat order."""
    ls = np.concatenate([np.full(2 * l + 1, l, dtype=np.int64) for l in range(lmax + 1)])
    ms = np.concatenate([np.arange(-l, l + 1, dtype=np.int64) for l in range(lmax + 1)])
    ls.flags.writeable = False
    ms.flags.writeable = False
    return ls, ms


class HarmonicExpansion:
    """Immutable triangular table of complex coefficients up to ``lmax``."""

    __slots__ = ("lmax", "coeffs")

    def __init__(self, lmax: int, coeffs):
        if lmax < 0:
            raise ValueError("lmax must be >= 0")
        arr = np.asarray(coeffs, dtype=np.complex128)
        size = (lmax + 1) ** 2
        if arr.shape != (size,):
            raise ValueError(f"expected {size} coefficients for lmax={lmax}, got shape {arr.shape}")
        if not np.all(np.isfinite(arr.view(np.float64))):
            raise ValueError("coefficients must be finite")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "lmax", lmax)
        object.__setattr__(self, "coeffs", arr)

    def __setattr__(self, name, value):
        raise AttributeError("HarmonicExpansion is immutable")

    @classmethod
    def zeros(cls, lmax: int) -> "HarmonicExpansion":
        return cls(lmax, np.zeros((lmax + 1) ** 2, dtype=np.complex128))

    @classmethod
    def unit(cls, l: int, m: int, lmax: int | None = None) -> "HarmonicExpansion":
        """Basis expansion with a single coefficient 1 at ``(l, m)``."""
        idx = HarmonicIndex(l, m)
        lmax = idx.l if lmax is None else lmax
        if lmax < idx.l:
            raise ValueError("lmax too small for requested index")
        c = np.zeros((lmax + 1) ** 2, dtype=np.complex128)
        c[flat_index(idx.l, idx.m)] = 1.0
        return cls(lmax, c)

    @classmethod
    def from_dict(cls, lmax: int, entries: dict) -> "HarmonicExpansion":
        c = np.zeros((lmax + 1) ** 2, dtype=np.complex128)
        for (l, m), value in entries.items():
            idx = HarmonicIndex(l, m)
            if idx.l > lmax:
                raise ValueError(f"entry ({l},{m}) exceeds lmax={lmax}")
            c[flat_index(idx.l, idx.m)] = value
        return cls(lmax, c)

    def __getitem__(self, lm) -> complex:
        idx = as_index(lm)
        if idx.l > self.lmax:
            return 0.0 + 0.0j
        return complex(self.coeffs[flat_index(idx.l, idx.m)])

    def items(self):
        ls, ms = degree_order_arrays(self.lmax)
        for l, m, c in zip(ls, ms, self.coeffs):
            yield (int(l), int(m)), complex(c)

    def with_lmax(self, lmax: int) -> "HarmonicExpansion":
        """Zero-padded copy; truncation is refused."""
        if lmax < self.lmax:
            raise ValueError("refusing to truncate; pad target below current lmax")
        if lmax == self.lmax:
            return self
        c = np.zeros((lmax + 1) ** 2, dtype=np.complex128)
        c[: self.coeffs.size] = self.coeffs
        return HarmonicExpansion(lmax, c)

    def to_matrix(self) -> np.ndarray:
        """Rectangular view ``C[l, lmax + m]``, zero outside the triangle."""
        L = self.lmax
        C = np.zeros((L + 1, 2 * L + 1), dtype=np.complex128)
        ls, ms = degree_order_arrays(L)
        C[ls, L + ms] = self.coeffs
        return C

    def __add__(self, other: "HarmonicExpansion") -> "HarmonicExpansion":
        lmax = max(self.lmax, other.lmax)
        a = self.with_lmax(lmax)
        b = other.with_lmax(lmax)
        return HarmonicExpansion(lmax, a.coeffs + b.coeffs)

    def __sub__(self, other: "HarmonicExpansion") -> "HarmonicExpansion":
        return self + (-1.0) * other

    def __mul__(self, scalar) -> "HarmonicExpansion":
        return HarmonicExpansion(self.lmax, self.coeffs * complex(scalar))

    __rmul__ = __mul__

    def allclose(self, other: "HarmonicExpansion", atol=1e-12, rtol=0.0) -> bool:
        lmax = max(self.lmax, other.lmax)
        return np.allclose(
            self.with_lmax(lmax).coeffs, other.with_lmax(lmax).coeffs, atol=atol, rtol=rtol
        )

    def __repr__(self):
        nrm = float(np.linalg.norm(self.coeffs))
        return f"HarmonicExpansion(lmax={self.lmax}, |f|={nrm:.6g})"


@dataclass(frozen=True)
class NormProfile:
    """Sequence of graded norms for orders ``0..N``."""

    values: tuple[float, ...]

    @property
    def N(self) -> int:
        return len(self.values) - 1


@dataclass(frozen=True)
class DecayEstimate:
    """Least-squares decay exponent of ``max_m |c_{l,m}|`` against ``l+1``."""

    exponent: float
    residual: float
    verdict: str


RAPID_DECAY = "rapid-decay"
SLOW_DECAY = "slow-decay"
INCONCLUSIVE = "inconclusive"


def _check_norm_order(f: HarmonicExpansion, n: int) -> None:
    if n < 0:
        raise ValueError(f"norm order must be >= 0, got n={n}")
    # largest weight present is (2*lmax + 1); reject orders whose weights overflow
    wmax = 2 * f.lmax + 1
    if 2 * n * math.log(wmax) > _FLOAT_MAX_LOG:
        raise OverflowError(f"norm order n={n} overflows at lmax={f.lmax}")


def graded_norm(f: HarmonicExpansion, n: int) -> float:
    """Norm of order ``n``: sqrt of sum of ``(l+|m|+1)^(2n) |c_{l,m}|^2``."""
    _check_norm_order(f, n)
    ls, ms = degree_order_arrays(f.lmax)
    w = (ls + np.abs(ms) + 1).astype(np.float64)
    mag2 = f.coeffs.real**2 + f.coeffs.imag**2
    return float(np.sqrt(np.sum(w ** (2 * n) * mag2)))


def hilbert_norm(f: HarmonicExpansion) -> float:
    """Plain coefficient two-norm; equal to ``graded_norm(f, 0)``."""
    return graded_norm(f, 0)


def norm_profile(f: HarmonicExpansion, N: int) -> NormProfile:
    if N < 0:
        raise ValueError("N must be >= 0")
    return NormProfile(tuple(graded_norm(f, n) for n in range(N + 1)))


def estimate_decay(
    f: HarmonicExpansion,
    rapid_exponent: float = 4.0,
    residual_threshold: float = 1.0,
) -> DecayEstimate:
    """Fit ``log max_m |c_{l,m}| ~ -s * log(l+1)`` and classify the decay.

    Verdict is ``rapid-decay`` when the fitted exponent reaches
    ``rapid_exponent`` with an acceptable fit, ``slow-decay`` when the fit is
    acceptable but the exponent is below the threshold, and ``inconclusive``
    for degenerate inputs (coefficients vanishing beyond l=0, too few usable
    degrees) or a residual above ``residual_threshold``.
    """
    if f.lmax < 4:
        raise ValueError("decay fit needs lmax >= 4")
    C = np.abs(f.to_matrix())
    peaks = C.max(axis=1)
    usable = peaks > 0.0
    if usable.sum() < 3 or not usable[1:].any():
        return DecayEstimate(float("nan"), float("nan"), INCONCLUSIVE)
    ldeg = np.arange(f.lmax + 1)[usable]
    logw = np.log(ldeg + 1.0)
    logp = np.log(peaks[usable])
    slope, intercept = np.polyfit(logw, logp, 1)
    resid = float(np.sqrt(np.mean((logp - (slope * logw + intercept)) ** 2)))
    s = -float(slope)
    if resid > residual_threshold:
        return DecayEstimate(s, resid, INCONCLUSIVE)
    verdict = RAPID_DECAY if s >= rapid_exponent else SLOW_DECAY
    return DecayEstimate(s, resid, verdict)


# ---------------------------------------------------------------------------
# coefficient document I/O (single JSON document, canonical (l, m) ordering)

def save_expansion(f: HarmonicExpansion, path) -> None:
    records = [
        {"l": l, "m": m, "re": c.real, "im": c.imag} for (l, m), c in f.items()
    ]
    doc = {"lmax": f.lmax, "basis": BASIS_TAG, "coefficients": records}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def load_expansion(path) -> HarmonicExpansion:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise CoefficientFileError(f"{path}: not valid JSON: {exc}") from exc
    for key in ("lmax", "basis", "coefficients"):
        if key not in doc:
            raise CoefficientFileError(f"{path}: missing field {key!r}")
    if doc["basis"] != BASIS_TAG:
        raise CoefficientFileError(
            f"{path}: basis {doc['basis']!r} does not match {BASIS_TAG!r}"
        )
    lmax = int(doc["lmax"])
    if lmax < 0:
        raise CoefficientFileError(f"{path}: lmax must be >= 0")
    size = (lmax + 1) ** 2
    coeffs = np.zeros(size, dtype=np.complex128)
    seen = np.zeros(size, dtype=bool)
    for k, rec in enumerate(doc["coefficients"]):
        try:
            l, m = int(rec["l"]), int(rec["m"])
            value = float(rec["re"]) + 1j * float(rec["im"])
        except (KeyError, TypeError, ValueError) as exc:
            raise CoefficientFileError(f"{path}: bad record #{k}: {rec!r}") from exc
        if l < 0 or l > lmax or abs(m) > l:
            raise CoefficientFileError(f"{path}: record #{k} index ({l},{m}) out of range")
        pos = flat_index(l, m)
        if seen[pos]:
            raise CoefficientFileError(f"{path}: duplicate entry for ({l},{m})")
        seen[pos] = True
        coeffs[pos] = value
    if not seen.all():
        ls, ms = degree_order_arrays(lmax)
        missing = int(np.argmin(seen))
        raise CoefficientFileError(
            f"{path}: missing entry for ({ls[missing]},{ms[missing]})"
        )
    return HarmonicExpansion(lmax, coeffs)
