import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wavess.basis import BasisSpec, TensorIndex, build_basis
from wavess.design import (
    Design,
    cdf_discrepancy,
    gen_data,
    make_grid_design,
    make_midpoint_grid,
    riemann_gap,
    sample_uniform_design,
)
from wavess.funcspace import CoefficientField


def test_grid_coordinates():
    d = make_grid_design(5, 1)
    np.testing.assert_allclose(d.points[:, 0], [0.0, 0.25, 0.5, 0.75, 1.0])
    d2 = make_grid_design(3, 2)
    assert d2.n == 9 and d2.d == 2
    with pytest.raises(ValueError):
        make_grid_design(1, 1)


def test_midpoint_coordinates():
    d = make_midpoint_grid(4, 1)
    np.testing.assert_allclose(d.points[:, 0], [1 / 8, 3 / 8, 5 / 8, 7 / 8])


def test_design_rejects_out_of_range():
    with pytest.raises(ValueError):
        Design(np.array([[0.5], [1.2]]), "grid")


def test_cdf_discrepancy_two_point():
    # points {0, 1}: G_n jumps at 0 to 1/2; max gap 1/2
    d = Design(np.array([[0.0], [1.0]]), "grid")
    assert abs(cdf_discrepancy(d) - 0.5) < 1e-12


def test_cdf_discrepancy_midpoint():
    # midpoint grid m=4: sup |G_n - x| = 1/8
    assert abs(cdf_discrepancy(make_midpoint_grid(4, 1)) - 0.125) < 1e-12


def test_cdf_discrepancy_decay():
    vals = [cdf_discrepancy(make_midpoint_grid(m, 1))
            for m in (8, 16, 32)]
    np.testing.assert_allclose(vals, [1 / 16, 1 / 32, 1 / 64])


def test_cdf_discrepancy_2d():
    d = make_midpoint_grid(4, 2)
    v = cdf_discrepancy(d)
    assert 0 < v < 0.25


def test_cdf_discrepancy_guard():
    d = sample_uniform_design(50, 4, np.random.default_rng(0))
    with pytest.raises(ValueError):
        cdf_discrepancy(d)
    assert cdf_discrepancy(d, bound_only=True, mc_samples=200) >= 0.0


def test_riemann_gap_quadratic():
    # x^2 on the 10-interval grid: |mean - 1/3| = 1/60
    gap, ratio = riemann_gap(lambda x: x[:, 0] ** 2, make_grid_design(11, 1))
    assert abs(gap - 1 / 60) < 1e-9
    assert np.isfinite(ratio) and ratio > 0
    # 10-point grid (9 intervals) gives 1/54
    gap9, _ = riemann_gap(lambda x: x[:, 0] ** 2, make_grid_design(10, 1))
    assert abs(gap9 - 1 / 54) < 1e-9


def test_riemann_gap_2d():
    gap, ratio = riemann_gap(
        lambda x: x[:, 0] * x[:, 1], make_midpoint_grid(16, 2))
    assert gap < 1e-2
    assert np.isfinite(ratio)


def test_gen_data_noise_free():
    basis = build_basis(BasisSpec(family="haar", base_level=(1,)))
    truth = CoefficientField.zero((1,), (3,))
    truth.set(TensorIndex((0,), (0,)), 1.0)
    design = make_midpoint_grid(8, 1)
    ds = gen_data(truth, basis, design, 0.0, np.random.default_rng(0))
    want = np.array([np.sqrt(2) if x < 0.5 else 0.0
                     for x in design.points[:, 0]])
    np.testing.assert_allclose(ds.y, want)


def test_dataset_csv_roundtrip(tmp_path):
    basis = build_basis(BasisSpec(family="haar", base_level=(1,)))
    truth = CoefficientField.zero((1,), (3,))
    design = make_midpoint_grid(4, 1)
    ds = gen_data(truth, basis, design, 1.0, np.random.default_rng(1), seed=1)
    path = tmp_path / "data.csv"
    ds.to_csv(str(path))
    rows = path.read_text().strip().splitlines()
    assert rows[0] == "x_1,y"
    assert len(rows) == 5
    assert (tmp_path / "data.csv.json").exists()


@given(st.integers(0, 10 ** 6))
@settings(max_examples=20, deadline=None)
def test_uniform_design_in_cube(seed):
    rng = np.random.default_rng(seed)
    d = sample_uniform_design(20, 2, rng, seed)
    assert d.points.shape == (20, 2)
    assert d.points.min() >= 0.0 and d.points.max() <= 1.0


@given(st.integers(2, 6))
@settings(max_examples=10, deadline=None)
def test_grid_discrepancy_order(mexp):
    # midpoint grids have discrepancy exactly 1/(2m) in d=1
    m = 2 ** mexp
    assert abs(cdf_discrepancy(make_midpoint_grid(m, 1)) - 1 / (2 * m)) < 1e-12
