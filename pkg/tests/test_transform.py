import math

import numpy as np
import pytest

from sphcalc import (
    GridTooCoarseError,
    HarmonicExpansion,
    SampledField,
    analyze,
    completeness_kernel,
    gauss_legendre,
    hilbert_norm,
    inner_product,
    load_field,
    make_grid,
    orthonormal_sh_eval,
    orthonormality_check,
    point_eval,
    quadrature_inner_product,
    save_field,
    synthesize,
)
from sphcalc.bounds import random_expansion
from sphcalc.expansions import degree_order_arrays, flat_index
from sphcalc.transform import FieldFileError


def test_gauss_legendre_small_closed_forms():
    x, w = gauss_legendre(1)
    np.testing.assert_allclose(x, [0.0], atol=1e-15)
    np.testing.assert_allclose(w, [2.0], atol=1e-15)
    x, w = gauss_legendre(2)
    np.testing.assert_allclose(x, [-1 / math.sqrt(3), 1 / math.sqrt(3)], atol=1e-15)
    np.testing.assert_allclose(w, [1.0, 1.0], atol=1e-15)


@pytest.mark.parametrize("n", [3, 7, 16, 33, 65])
def test_gauss_legendre_against_numpy(n):
    x, w = gauss_legendre(n)
    xr, wr = np.polynomial.legendre.leggauss(n)
    np.testing.assert_allclose(x, xr, atol=1e-14)
    np.testing.assert_allclose(w, wr, atol=1e-14)
    assert abs(w.sum() - 2.0) < 1e-13


def test_make_grid_shape():
    grid = make_grid(0)
    assert grid.n_theta == 1 and grid.n_phi == 2
    grid = make_grid(16)
    assert grid.n_theta == 17 and grid.n_phi == 34
    assert abs(grid.w.sum() - 2.0) < 1e-13


def test_synthesize_constants():
    grid = make_grid(4)
    f = HarmonicExpansion.unit(0, 0, 4)
    field = synthesize(f, grid)
    np.testing.assert_allclose(field.samples, 1 / math.sqrt(4 * math.pi), atol=1e-15)

    zero = synthesize(HarmonicExpansion.zeros(4), grid)
    np.testing.assert_allclose(zero.samples, 0.0)

    g = HarmonicExpansion.unit(1, 0, 4)
    field = synthesize(g, grid)
    expected = math.sqrt(3 / (4 * math.pi)) * np.cos(grid.theta)[:, None]
    np.testing.assert_allclose(field.samples, np.broadcast_to(expected + 0j, field.samples.shape), atol=1e-14)


def test_analyze_constants():
    grid = make_grid(3)
    const = SampledField(grid, np.full((grid.n_theta, grid.n_phi), 1 / math.sqrt(4 * math.pi), dtype=complex))
    f = analyze(const, 3)
    assert f[(0, 0)] == pytest.approx(1.0, abs=1e-13)
    others = f.coeffs.copy()
    others[0] = 0.0
    assert np.max(np.abs(others)) < 1e-13

    cosf = SampledField(grid, (math.sqrt(3 / (4 * math.pi)) * np.cos(grid.theta))[:, None] * np.ones(grid.n_phi) + 0j)
    g = analyze(cosf, 3)
    assert g[(1, 0)] == pytest.approx(1.0, abs=1e-13)


@pytest.mark.parametrize("lmax", [4, 16, 64])
def test_round_trip(lmax):
    f = random_expansion((1, lmax), lmax, decay=2.0)
    grid = make_grid(lmax)
    back = analyze(synthesize(f, grid), lmax)
    assert np.max(np.abs(back.coeffs - f.coeffs)) <= 1e-12


def test_transforms_are_linear():
    grid = make_grid(8)
    f = random_expansion(21, 8, decay=1.0)
    g = random_expansion(22, 8, decay=1.0)
    a, b = 1.7, -0.4 + 2.1j
    combo = synthesize(a * f + b * g, grid)
    parts = a * synthesize(f, grid).samples + b * synthesize(g, grid).samples
    np.testing.assert_allclose(combo.samples, parts, atol=1e-12)


def test_point_eval_matches_synthesize():
    f = random_expansion(3, 10, decay=1.5)
    grid = make_grid(10)
    field = synthesize(f, grid)
    for i, j in [(0, 0), (4, 7), (10, 21)]:
        p = (grid.theta[i], grid.phi[j])
        assert point_eval(f, p) == pytest.approx(complex(field.samples[i, j]), abs=1e-13)


def test_point_eval_pinned():
    f = HarmonicExpansion.unit(0, 0)
    assert point_eval(f, (0.3, 1.1)) == pytest.approx(1 / math.sqrt(4 * math.pi))
    g = HarmonicExpansion.unit(1, 1)
    assert point_eval(g, (0.0, 0.0)) == 0.0


def test_inner_product_orthonormality():
    e11 = HarmonicExpansion.unit(1, 1)
    e21 = HarmonicExpansion.unit(2, 1)
    assert inner_product(e11, e11) == 1.0
    assert inner_product(e11, e21) == 0.0


def test_inner_product_against_quadrature():
    f = random_expansion(31, 10, decay=1.5)
    g = random_expansion(32, 10, decay=1.5)
    grid = make_grid(10)
    quad = quadrature_inner_product(synthesize(f, grid), synthesize(g, grid))
    assert inner_product(f, g) == pytest.approx(quad, rel=1e-11, abs=1e-11)
    # conjugate-linear first slot
    assert inner_product(2j * f, g) == pytest.approx(-2j * inner_product(f, g))
    assert inner_product(f, g) == pytest.approx(np.conj(inner_product(g, f)))


def test_parseval_random():
    for trial in range(10):
        f = random_expansion((4, trial), 16, decay=2.0)
        field = synthesize(f, make_grid(16))
        quad = quadrature_inner_product(field, field).real
        coeff = hilbert_norm(f) ** 2
        assert abs(quad - coeff) <= 1e-10 * coeff


def test_orthonormality_small():
    r = orthonormality_check(1)
    assert r.lhs <= 1e-12
    r = orthonormality_check(8)
    assert r.passed


def test_completeness_kernel_values():
    p = (0.7, 1.2)
    q = (2.1, 4.0)
    assert completeness_kernel(0, p, q) == pytest.approx(1 / (4 * math.pi))
    # diagonal closed form (L+1)^2 / (4 pi), monotone in L
    prev = 0.0
    for L in (2, 4, 8, 16):
        value = completeness_kernel(L, p, p).real
        assert value == pytest.approx((L + 1) ** 2 / (4 * math.pi), rel=1e-12)
        assert value > prev
        prev = value


def test_completeness_kernel_reproduces_band_limited():
    L = 6
    grid = make_grid(L)
    p = (0.9, 2.2)
    kernel_at_p = np.array(
        [[completeness_kernel(L, p, (t, f)) for f in grid.phi] for t in grid.theta]
    )
    for (l, m) in [(0, 0), (3, -2), (6, 5)]:
        e_field = synthesize(HarmonicExpansion.unit(l, m, L), grid)
        integrand = SampledField(grid, kernel_at_p * e_field.samples)
        from sphcalc import quadrature_integral

        value = quadrature_integral(integrand)
        assert value == pytest.approx(complex(orthonormal_sh_eval((l, m), p)), abs=1e-10)


def test_real_field_symmetry():
    lmax = 10
    grid = make_grid(lmax)
    rng = np.random.default_rng(77)
    field = SampledField(grid, rng.standard_normal((grid.n_theta, grid.n_phi)) + 0j)
    c = analyze(field, lmax)
    ls, ms = degree_order_arrays(lmax)
    mirrored = np.empty_like(c.coeffs)
    mirrored[flat_index(ls, ms)] = ((-1.0) ** ms) * np.conj(c.coeffs[flat_index(ls, -ms)])
    assert np.max(np.abs(c.coeffs - mirrored)) <= 1e-12


def test_grid_too_coarse_errors():
    f = random_expansion(5, 8, decay=1.0)
    with pytest.raises(GridTooCoarseError):
        synthesize(f, make_grid(4))
    field = synthesize(f, make_grid(8))
    with pytest.raises(GridTooCoarseError):
        analyze(field, 9)


def test_concurrent_reads_are_deterministic():
    # expansions/grids are immutable; one shared grid driven from many
    # threads must reproduce the single-thread result bit-for-bit
    from concurrent.futures import ThreadPoolExecutor

    lmax = 16
    grid = make_grid(lmax)
    f = random_expansion(99, lmax, decay=1.5)
    reference = synthesize(f, grid).samples

    def round_trip(_):
        field = synthesize(f, grid)
        return field.samples, analyze(field, lmax).coeffs

    with ThreadPoolExecutor(max_workers=8) as pool:
        results = list(pool.map(round_trip, range(16)))
    for samples, coeffs in results:
        np.testing.assert_array_equal(samples, reference)
        np.testing.assert_array_equal(coeffs, results[0][1])


def test_field_file_round_trip(tmp_path):
    f = random_expansion(6, 5, decay=1.0)
    field = synthesize(f, make_grid(5))
    path = tmp_path / "field.csv"
    save_field(field, path)
    loaded = load_field(path)
    np.testing.assert_allclose(loaded.samples, field.samples, atol=1e-15)
    assert loaded.grid.lmax == 5


def test_field_file_errors(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("# grid lmax=1 n_theta=2 n_phi=4\n1.0,2.0,3.0\n")
    with pytest.raises(FieldFileError, match=":2"):
        load_field(path)
    path.write_text("0.1,0.2,0.3,0.4\n")
    with pytest.raises(FieldFileError, match="metadata"):
        load_field(path)
