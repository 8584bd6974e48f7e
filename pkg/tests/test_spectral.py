import numpy as np
import pytest

from fracvi import (ScalarField, SpectralError, VectorField, build_grid,
                    frac_divergence, frac_gradient, frac_laplacian, inner,
                    kernel_gradient_oracle,
                    kernel_gradient_pv_limit, lp_norm_vec, multiplier_table,
                    normalization_constant, riesz_potential, sample, zeros)
from fracvi.stability import band_limited_field

from oracles import GAUSS_HALF_GRADIENT, MU_2_HALF


# ---------------------------------------------------------------------------
# normalization constant
# ---------------------------------------------------------------------------

def test_normalization_constant_closed_forms():
    assert normalization_constant(1, 0.0) == pytest.approx(1 / np.pi, rel=1e-14)
    assert normalization_constant(3, 0.0) == pytest.approx(1 / np.pi**2, rel=1e-14)
    assert normalization_constant(2, 0.5) == pytest.approx(MU_2_HALF, rel=1e-14)


def test_normalization_constant_rejects_s_one():
    with pytest.raises(SpectralError):
        normalization_constant(1, 1.0)


# ---------------------------------------------------------------------------
# multiplier table invariants
# ---------------------------------------------------------------------------

def test_multiplier_table_invariants(grid_pi):
    tab1 = multiplier_table(grid_pi, 1.0)
    kap = np.pi * np.fft.fftfreq(grid_pi.N) * grid_pi.N / grid_pi.L
    assert np.allclose(tab1.components[0], 1j * kap)
    tab = multiplier_table(grid_pi, 0.35)
    mags = np.abs(tab.components[0])
    nz = np.abs(kap) > 0
    assert np.allclose(mags[nz], np.abs(kap[nz]) ** 0.35)
    assert tab.components[0].reshape(-1)[0] == 0.0
    # conjugate symmetry m(-k) = conj(m(k)) off the Nyquist mode
    m = tab.components[0]
    for k in range(1, grid_pi.N // 2):
        assert m[-k] == pytest.approx(np.conj(m[k]), rel=1e-14)


# ---------------------------------------------------------------------------
# gradient / divergence / potential / laplacian examples
# ---------------------------------------------------------------------------

def test_gradient_of_constant_vanishes(grid_pi):
    c = sample(grid_pi, lambda x: np.full_like(x, 3.25))
    for s in (0.0, 0.4, 1.0):
        assert np.max(np.abs(frac_gradient(c, s).components[0])) < 1e-13


def test_gradient_sin_is_s_independent(grid_pi):
    u = sample(grid_pi, np.sin)
    x = grid_pi.axis_coords()
    for s in (0.0, 0.25, 0.5, 0.75, 1.0):
        D = frac_gradient(u, s).components[0]
        assert D == pytest.approx(np.cos(x), abs=1e-13)


def test_gradient_sin2x_half_order(grid_pi):
    u = sample(grid_pi, lambda x: np.sin(2 * x))
    x = grid_pi.axis_coords()
    D = frac_gradient(u, 0.5).components[0]
    assert D == pytest.approx(np.sqrt(2) * np.cos(2 * x), abs=1e-12)


def test_divergence_of_gradient_is_minus_laplacian(rng, grid_pi):
    u = band_limited_field(grid_pi, rng)
    for s in (0.2, 0.7, 1.0):
        lhs = frac_divergence(frac_gradient(u, s), s).values
        rhs = -frac_laplacian(u, s).values
        assert np.max(np.abs(lhs - rhs)) < 1e-12


def test_divergence_of_constant_vanishes(grid_pi):
    V = VectorField(grid_pi, [np.full(grid_pi.size, 2.0)])
    assert np.max(np.abs(frac_divergence(V, 0.6).values)) < 1e-13


def test_divergence_of_curl_mode_2d():
    g = build_grid(2, np.pi, 32)
    rng = np.random.default_rng(5)
    phi = band_limited_field(g, rng, kmax=6)
    D = frac_gradient(phi, 1.0)
    curl = VectorField(g, [D.components[1], -D.components[0]])
    div = frac_divergence(curl, 1.0)
    assert np.max(np.abs(div.values)) < 1e-12


def test_riesz_potential_identity_at_zero(rng, grid_pi):
    u = band_limited_field(grid_pi, rng)
    out = riesz_potential(u, 0.0)
    assert np.array_equal(out.values, u.values)


def test_riesz_potential_single_mode(grid_pi):
    u = sample(grid_pi, lambda x: np.sin(2 * x))
    out = riesz_potential(u, 0.5)
    assert out.values == pytest.approx(u.values / np.sqrt(2), abs=1e-13)


def test_riesz_potential_rejects_bad_order(grid_pi):
    with pytest.raises(SpectralError):
        riesz_potential(zeros(grid_pi), 1.0)
    with pytest.raises(SpectralError):
        riesz_potential(zeros(grid_pi), -0.1)


def test_laplacian_examples(grid_pi):
    x = grid_pi.axis_coords()
    u = sample(grid_pi, np.sin)
    for s in (0.0, 0.3, 1.0):
        assert frac_laplacian(u, s).values == pytest.approx(np.sin(x), abs=1e-12)
    u2 = sample(grid_pi, lambda x: np.sin(2 * x))
    assert frac_laplacian(u2, 0.5).values == pytest.approx(2 * np.sin(2 * x),
                                                           abs=1e-12)
    c = sample(grid_pi, lambda x: np.full_like(x, 1.0))
    assert np.max(np.abs(frac_laplacian(c, 0.5).values)) < 1e-13


# ---------------------------------------------------------------------------
# structural identities
# ---------------------------------------------------------------------------

def test_duality_random_fields(rng, grid_pi):
    for s in (0.0, 0.25, 0.5, 0.75, 1.0):
        u = band_limited_field(grid_pi, rng)
        Phi = VectorField(grid_pi, [band_limited_field(grid_pi, rng).values])
        a = inner(u, frac_divergence(Phi, s))
        Du = frac_gradient(u, s)
        b = sum(float(np.dot(p, d)) for p, d in
                zip(Phi.components, Du.components)) * grid_pi.h
        assert abs(a + b) <= 1e-10 * max(abs(a), abs(b), 1e-30)


def test_duality_masked_fields(rng, grid_pi, mask_unit):
    # exact for arbitrary real fields, including sharp masks (Nyquist planes
    # pair off inside the real part)
    from fracvi import apply_mask
    u = apply_mask(band_limited_field(grid_pi, rng), mask_unit)
    Phi = VectorField(grid_pi,
                      [np.where(mask_unit.inside,
                                band_limited_field(grid_pi, rng).values, 0.0)])
    for s in (0.3, 1.0):
        a = inner(u, frac_divergence(Phi, s))
        Du = frac_gradient(u, s)
        b = sum(float(np.dot(p, d)) for p, d in
                zip(Phi.components, Du.components)) * grid_pi.h
        assert abs(a + b) <= 1e-10 * max(abs(a), abs(b), 1e-30)


def test_semigroup_property(rng, grid_pi):
    u = band_limited_field(grid_pi, rng)
    for s, sig in ((0.2, 0.9), (0.5, 0.5), (0.0, 0.6), (0.35, 1.0)):
        Dsig = frac_gradient(u, sig)
        lift = [riesz_potential(ScalarField(grid_pi, c), sig - s).values
                for c in Dsig.components]
        Ds = frac_gradient(u, s)
        for a, b in zip(lift, Ds.components):
            ref = np.max(np.abs(b))
            assert np.max(np.abs(a - b)) <= 1e-12 * max(ref, 1.0)


def test_composition_identity(rng, grid_pi):
    u = band_limited_field(grid_pi, rng)
    for s, r in ((0.3, 0.6), (0.0, 0.0), (1.0, 0.2), (0.5, 0.5)):
        lhs = frac_divergence(frac_gradient(u, r), s).values
        rhs = -frac_laplacian(u, (s + r) / 2.0).values
        assert np.max(np.abs(lhs - rhs)) <= 1e-12 * max(np.max(np.abs(rhs)), 1.0)


def test_s_zero_riesz_involution(rng, grid_pi):
    u = band_limited_field(grid_pi, rng)  # mean-zero by construction
    out = frac_divergence(frac_gradient(u, 0.0), 0.0)
    assert np.max(np.abs(out.values + u.values)) < 1e-12


def test_s_continuity_monotone_dyadic(rng, grid_pi):
    u = band_limited_field(grid_pi, rng)
    sigma = 0.6
    ref = frac_gradient(u, sigma)
    errs = []
    for i in range(1, 7):
        s = sigma - 2.0**-i
        D = frac_gradient(u, s)
        diff = VectorField(grid_pi, [a - b for a, b in
                                     zip(D.components, ref.components)])
        errs.append(lp_norm_vec(diff, 2))
    assert all(errs[i] >= errs[i + 1] for i in range(len(errs) - 1))
    assert errs[-1] < 0.2 * errs[0]


# ---------------------------------------------------------------------------
# kernel quadrature oracle
# ---------------------------------------------------------------------------

def test_kernel_oracle_zero_field():
    g = build_grid(1, 8.0, 512)
    out = kernel_gradient_oracle(zeros(g), 0.5, 0.25, 4 * g.h)
    assert out == pytest.approx(np.zeros(1), abs=1e-15)


def test_kernel_oracle_even_symmetry():
    g = build_grid(1, 8.0, 1024)
    u = sample(g, lambda x: np.exp(-((x - 0.5) ** 2)))  # even about x=0.5
    out = kernel_gradient_oracle(u, 0.4, 0.5, 2 * g.h)
    assert abs(out[0]) < 1e-12


def test_kernel_oracle_rejects_subgrid_eps():
    g = build_grid(1, 8.0, 512)
    with pytest.raises(SpectralError, match="sub-grid"):
        kernel_gradient_oracle(zeros(g), 0.5, 0.25, 0.5 * g.h)


def test_kernel_oracle_gaussian_matches_continuum():
    g = build_grid(1, 16.0, 4096)
    u = sample(g, lambda x: np.exp(-x * x))
    for x, truth in GAUSS_HALF_GRADIENT.items():
        got = kernel_gradient_pv_limit(u, 0.5, x, 4 * g.h)[0]
        assert got == pytest.approx(truth, rel=1e-3)


def test_multiplier_path_matches_continuum():
    g = build_grid(1, 16.0, 4096)
    u = sample(g, lambda x: np.exp(-x * x))
    D = frac_gradient(u, 0.5).components[0]
    for x, truth in GAUSS_HALF_GRADIENT.items():
        i = int(round((x + g.L) / g.h))
        assert D[i] == pytest.approx(truth, rel=1e-3)


def test_spectral_error_on_true_symmetry_break(grid_pi):
    # a complex-asymmetric spectrum away from Nyquist must be rejected;
    # build one by feeding a deliberately broken multiplier application
    from fracvi.spectral import _real_part_odd
    spec = np.zeros(grid_pi.N, dtype=complex)
    spec[3] = 1.0  # no conjugate partner at -3
    with pytest.raises(SpectralError, match="conjugate symmetry"):
        _real_part_odd(spec, 1.0, "test")
