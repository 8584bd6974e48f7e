import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracvi import (GridError, ScalarField, apply_mask, build_grid, full_mask,
                    inner, lp_norm, sample, zeros)
from fracvi.grid import VectorField, dump_field_csv


def test_build_grid_spacing():
    g = build_grid(1, np.pi, 8)
    assert g.h == pytest.approx(np.pi / 4)
    g2 = build_grid(2, 4.0, 128)
    assert g2.size == 128**2
    assert g2.h == pytest.approx(1.0 / 16)


def test_build_grid_rejects_bad_input():
    with pytest.raises(GridError, match="even"):
        build_grid(1, 1.0, 7)
    with pytest.raises(GridError):
        build_grid(4, 1.0, 16)
    with pytest.raises(GridError):
        build_grid(1, -1.0, 16)
    with pytest.raises(GridError):
        build_grid(1, 1.0, 4)


def test_sample_constant_and_sin():
    g = build_grid(1, np.pi, 64)
    ones = sample(g, lambda x: np.ones_like(x))
    assert np.all(ones.values == 1.0)
    f = sample(g, np.sin)
    assert f.values == pytest.approx(np.sin(g.axis_coords()))


def test_sample_singular_reports_location():
    g = build_grid(1, 2.0, 16)  # contains x = 0
    with pytest.raises(GridError, match="non-finite"):
        with np.errstate(divide="ignore"):
            sample(g, lambda x: 1.0 / x)


def test_lp_norm_box_measure():
    g = build_grid(1, np.pi, 64)
    ones = sample(g, lambda x: np.ones_like(x))
    assert lp_norm(ones, 2) == pytest.approx(np.sqrt(2 * np.pi), rel=1e-14)
    assert lp_norm(zeros(g), 3.7) == 0.0


def test_lp_norm_sin_discrete_orthogonality():
    # trig modes are exactly integrated by the uniform grid
    g = build_grid(1, np.pi, 64)
    f = sample(g, np.sin)
    assert lp_norm(f, 2) == pytest.approx(np.sqrt(np.pi), rel=1e-14)


def test_lp_norm_rejects_p_below_one():
    g = build_grid(1, 1.0, 16)
    with pytest.raises(GridError):
        lp_norm(zeros(g), 0.5)


@settings(max_examples=25, deadline=None)
@given(c=st.one_of(st.just(0.0),
                   st.floats(-50, 50).filter(lambda c: abs(c) > 1e-6)),
       seed=st.integers(0, 2**16))
def test_lp_norm_homogeneity(c, seed):
    g = build_grid(1, 2.0, 32)
    vals = np.random.default_rng(seed).standard_normal(g.size)
    f = ScalarField(g, vals)
    cf = ScalarField(g, c * vals)
    for p in (1, 2, 3.5, np.inf):
        assert lp_norm(cf, p) == pytest.approx(abs(c) * lp_norm(f, p),
                                               rel=1e-12, abs=1e-300)


def test_inner_symmetry_bilinearity(rng, grid_pi):
    a = ScalarField(grid_pi, rng.standard_normal(grid_pi.size))
    b = ScalarField(grid_pi, rng.standard_normal(grid_pi.size))
    c = ScalarField(grid_pi, rng.standard_normal(grid_pi.size))
    assert inner(a, b) == pytest.approx(inner(b, a), rel=1e-12)
    lin = ScalarField(grid_pi, 2.0 * a.values + 3.0 * b.values)
    assert inner(lin, c) == pytest.approx(2 * inner(a, c) + 3 * inner(b, c),
                                          rel=1e-12)


def test_apply_mask_idempotent_contraction(rng, grid_pi, mask_unit):
    f = ScalarField(grid_pi, rng.standard_normal(grid_pi.size))
    m1 = apply_mask(f, mask_unit)
    m2 = apply_mask(m1, mask_unit)
    assert np.array_equal(m1.values, m2.values)
    for p in (1, 2, np.inf):
        assert lp_norm(m1, p) <= lp_norm(f, p) + 1e-15


def test_apply_mask_full_box_identity(rng, grid_pi):
    f = ScalarField(grid_pi, rng.standard_normal(grid_pi.size))
    assert np.array_equal(apply_mask(f, full_mask(grid_pi)).values, f.values)


def test_mask_indicator(grid_pi, mask_unit):
    ones = sample(grid_pi, lambda x: np.ones_like(x))
    ind = apply_mask(ones, mask_unit)
    assert np.array_equal(ind.values, mask_unit.inside.astype(float))


def test_empty_mask_rejected(grid_pi):
    from fracvi.grid import DomainMask
    with pytest.raises(GridError, match="interior"):
        DomainMask(grid_pi, np.zeros(grid_pi.size, dtype=bool))


def test_nonfinite_field_rejected(grid_pi):
    vals = np.zeros(grid_pi.size)
    vals[3] = np.nan
    with pytest.raises(GridError, match="non-finite"):
        ScalarField(grid_pi, vals)


def test_vector_field_component_count(grid_pi):
    with pytest.raises(GridError):
        VectorField(grid_pi, [np.zeros(grid_pi.size), np.zeros(grid_pi.size)])


def test_csv_dump_format(tmp_path, grid_pi):
    f = sample(grid_pi, np.cos)
    path = tmp_path / "f.csv"
    dump_field_csv(f, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "index,x1,value"
    assert len(lines) == grid_pi.size + 1
    first = lines[1].split(",")
    assert first[0] == "0"
    assert float(first[1]) == pytest.approx(-np.pi)
