import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wavess.basis import (
    BasisSpec,
    TensorIndex,
    build_basis,
    daubechies_filter,
    eval_1d,
    eval_tensor,
    index_range,
    inner_product_1d,
    inner_product_tensor,
)


@pytest.fixture(scope="module")
def haar():
    return build_basis(BasisSpec(family="haar", base_level=(1,)))


@pytest.fixture(scope="module")
def d4():
    return build_basis(BasisSpec(family="daubechies", p=2, boundary="cdv",
                                 cascade_depth=12, base_level=(3,)))


def test_daubechies_filter_p2_matches_reference():
    h = daubechies_filter(2)
    s3 = math.sqrt(3)
    ref = np.array([1 + s3, 3 + s3, 3 - s3, 1 - s3]) / (4 * math.sqrt(2))
    assert np.allclose(h, ref, atol=1e-12)


def test_daubechies_filter_moment_conditions():
    for p in (2, 3, 4):
        h = daubechies_filter(p)
        assert len(h) == 2 * p
        assert abs(h.sum() - math.sqrt(2)) < 1e-10
        assert abs(float(h @ h) - 1.0) < 1e-10
        # even-shift orthogonality
        for m in range(1, p):
            assert abs(float(h[2 * m:] @ h[:len(h) - 2 * m])) < 1e-10
        # vanishing moments of the conjugate filter
        g = np.array([(-1.0) ** k * h[len(h) - 1 - k]
                      for k in range(len(h))])
        for mom in range(p):
            assert abs(sum(g[k] * k ** mom for k in range(len(g)))) < 1e-7


def test_spec_validation():
    with pytest.raises(ValueError):
        BasisSpec(family="coiflet")
    with pytest.raises(ValueError):
        BasisSpec(family="daubechies", p=1)
    with pytest.raises(ValueError):
        BasisSpec(family="daubechies", p=2, cascade_depth=3)
    with pytest.raises(ValueError):
        # cdv D4 needs base level >= 3
        BasisSpec(family="daubechies", p=2, boundary="cdv", base_level=(2,))


def test_eta_values():
    assert BasisSpec(family="haar").eta == 0
    assert BasisSpec(family="daubechies", p=2).eta == 1


def test_haar_closed_form(haar):
    x = np.array([0.1, 0.3, 0.6, 0.9])
    # father at level 1: 2^{1/2} phi(2x - k)
    np.testing.assert_allclose(eval_1d(haar, "father", 1, 0, x),
                               [math.sqrt(2), math.sqrt(2), 0, 0])
    np.testing.assert_allclose(eval_1d(haar, "father", 1, 1, x),
                               [0, 0, math.sqrt(2), math.sqrt(2)])
    # mother at level 1
    np.testing.assert_allclose(eval_1d(haar, "mother", 1, 0, x),
                               [math.sqrt(2), -math.sqrt(2), 0, 0])


def test_haar_deep_levels_are_exact(haar):
    # closed-form evaluation has no resolution cap
    v = eval_1d(haar, "mother", 12, 5, np.array([(5 + 0.25) / 4096.0]))
    assert abs(v[0] - 2.0 ** 6) < 1e-12


def test_haar_orthonormality_quadrature(haar):
    funcs = [("father", 1, k) for k in range(2)]
    for j in range(1, 4):
        funcs += [("mother", j, k) for k in range(2 ** j)]
    for a, fa in enumerate(funcs):
        for b in range(a, len(funcs)):
            ip = inner_product_1d(haar, fa, funcs[b])
            target = 1.0 if a == b else 0.0
            assert abs(ip - target) < 1e-10, (fa, funcs[b])


def test_d4_polynomial_reproduction(d4):
    # eta = 1: constants and linears lie in the scaling span; project by
    # fine quadrature and compare the reconstruction
    grid = np.linspace(0.0, 1.0, 2 ** 14 + 1)
    w = np.full(grid.size, 1.0 / 2 ** 14)
    w[0] = w[-1] = 0.5 / 2 ** 14
    x = np.linspace(0.0, 1.0, 513)
    for f in (lambda t: np.ones_like(t), lambda t: t):
        recon = np.zeros_like(x)
        for k in range(8):
            vals = eval_1d(d4, "father", 3, k, grid)
            c = float(np.sum(w * f(grid) * vals))
            recon += c * eval_1d(d4, "father", 3, k, x)
        np.testing.assert_allclose(recon, f(x), atol=1e-3)


def test_d4_orthonormality_sample(d4):
    funcs = [("father", 3, k) for k in range(8)]
    funcs += [("mother", 3, k) for k in range(8)]
    funcs += [("mother", 4, k) for k in range(16)]
    G = np.array([[inner_product_1d(d4, f1, f2) for f2 in funcs]
                  for f1 in funcs])
    assert np.max(np.abs(G - np.eye(len(funcs)))) < 1e-4


def test_d4_derivative_of_linear_span(d4):
    # the scaling span contains f(x)=x exactly; although each atom is rough,
    # the r=1 evaluations of the expansion must telescope to f' = 1 at nodes
    grid = np.linspace(0.0, 1.0, 2 ** 14 + 1)
    w = np.full(grid.size, 1.0 / 2 ** 14)
    w[0] = w[-1] = 0.5 / 2 ** 14
    x = np.arange(1, 512) / 512.0
    recon = np.zeros_like(x)
    for k in range(8):
        c = float(np.sum(w * grid * eval_1d(d4, "father", 3, k, grid)))
        recon += c * eval_1d(d4, "father", 3, k, x, r=1)
    assert np.max(np.abs(recon - 1.0)) < 1e-3


def test_derivative_rejections(haar, d4):
    with pytest.raises(ValueError):
        eval_1d(haar, "mother", 2, 0, 0.3, r=1)
    with pytest.raises(ValueError):
        eval_1d(d4, "mother", 4, 0, 0.3, r=2)


def test_p_gt_2_falls_back_to_periodic():
    b = build_basis(BasisSpec(family="daubechies", p=3, boundary="cdv",
                              cascade_depth=12, base_level=(3,)))
    assert b.periodic_fallback
    assert b.spec.boundary == "periodic"


def test_index_range_layout():
    order = index_range((2,), (4,))
    # father block first (j = N-1), then mothers by level
    assert order[0] == TensorIndex((1,), (0,))
    assert order[3] == TensorIndex((1,), (3,))
    levels = [idx.j[0] for idx in order[4:]]
    assert levels == [2] * 4 + [3] * 8
    assert len(order) == 16


def test_index_range_tensor_counts():
    order = index_range((1, 1), (2, 2))
    # per axis: 2 father + 2 mothers -> 16 tensor indices
    assert len(order) == 16
    assert len(set(order)) == 16


@given(st.integers(1, 3), st.integers(0, 7), st.floats(0.0, 1.0))
@settings(max_examples=60, deadline=None)
def test_haar_values_are_scaled_signs(j, k, x):
    basis = build_basis(BasisSpec(family="haar", base_level=(1,)))
    if k >= 2 ** j:
        k %= 2 ** j
    v = eval_1d(basis, "mother", j, k, np.array([x]))[0]
    assert v in (0.0, 2.0 ** (j / 2.0), -2.0 ** (j / 2.0))


def test_eval_tensor_factorizes(haar):
    idx = TensorIndex((1, 2), (1, 3))
    basis2 = build_basis(BasisSpec(family="haar", base_level=(1, 1)))
    x = (0.7, 0.9)
    v = eval_tensor(basis2, idx, x)
    v1 = eval_1d(basis2, "mother", 1, 1, x[0])
    v2 = eval_1d(basis2, "mother", 2, 3, x[1])
    assert abs(v - v1 * v2) < 1e-12


def test_inner_product_tensor_factorizes(haar):
    basis2 = build_basis(BasisSpec(family="haar", base_level=(1, 1)))
    i1 = TensorIndex((1, 1), (0, 1))
    i2 = TensorIndex((1, 2), (0, 3))
    ip = inner_product_tensor(basis2, i1, i2)
    # first axes identical (norm 1), second axes orthogonal
    assert abs(ip) < 1e-10
    assert abs(inner_product_tensor(basis2, i1, i1) - 1.0) < 1e-10
