import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dwfmm.kernels import FAMILIES, KernelSpec, kernel_eval, transported_eval


@pytest.mark.parametrize("family", FAMILIES)
def test_unit_diagonal(family):
    k = KernelSpec(family, 0.7)
    x = np.array([0.1, 0.2, 0.3])
    assert kernel_eval(k, x, x) == 1.0
    assert np.all(np.diag(k.matrix(np.eye(3), np.eye(3))) == 1.0)


def test_exponential_at_one_length_scale():
    k = KernelSpec("exponential", 0.5)
    assert kernel_eval(k, [0.0, 0.0], [0.3, 0.4]) == pytest.approx(np.exp(-1.0), rel=1e-15)


def test_family_formulas():
    r, s = 0.6, 0.3
    x, y = np.zeros(1), np.array([r])
    assert kernel_eval(KernelSpec("gaussian", s), x, y) == pytest.approx(np.exp(-((r / s) ** 2)))
    assert kernel_eval(KernelSpec("inverse_multiquadric", s), x, y) == pytest.approx(
        1 / np.sqrt(1 + (r / s) ** 2)
    )


def test_invalid_specs():
    with pytest.raises(ValueError):
        KernelSpec("exponential", 0.0)
    with pytest.raises(ValueError):
        KernelSpec("matern", 1.0)
    with pytest.raises(ValueError):
        kernel_eval(KernelSpec(), [0.0], [0.0, 1.0])


@pytest.mark.parametrize("family", FAMILIES)
def test_symmetry_bitwise(family, rng):
    k = KernelSpec(family, 0.4)
    x, y = rng.random((100, 5)), rng.random((100, 5))
    a = [kernel_eval(k, u, v) for u, v in zip(x, y)]
    b = [kernel_eval(k, v, u) for u, v in zip(x, y)]
    assert a == b
    assert np.array_equal(k.matrix(x, y), k.matrix(y, x).T)


@pytest.mark.parametrize("family", FAMILIES)
def test_positive_definite_spot_check(family, rng):
    x = rng.random((50, 3))
    K = KernelSpec(family, 0.5).matrix(x, x)
    assert np.linalg.eigvalsh(K).min() >= -1e-10


@pytest.mark.parametrize("family", FAMILIES)
@given(r=st.floats(0.0, 5.0), dr=st.floats(1e-3, 5.0))
def test_strictly_decreasing(family, r, dr):
    # range kept where exp(-s^2) is still a normal double
    k = KernelSpec(family, 1.0)
    assert k.from_distance(r + dr) < k.from_distance(r)


def test_transported_identity_scaling(rng):
    k = KernelSpec("exponential", 0.3)
    x, y = rng.random(4), rng.random(4)
    assert transported_eval(k, np.ones(4), x, y) == kernel_eval(k, x, y)
    assert transported_eval(k, rng.random(4), x, x) == 1.0


def test_transported_collapsed_dimension():
    k = KernelSpec("gaussian", 0.8)
    x, y = np.array([0.1, 0.9]), np.array([0.4, 0.2])
    expected = np.exp(-((2 * 0.3 / 0.8) ** 2))
    assert transported_eval(k, [2.0, 0.0], x, y) == pytest.approx(expected, rel=1e-14)


def test_with_sigma_keeps_family():
    k = KernelSpec("gaussian", 1.0, smoothness=(1.0, 2.0)).with_sigma(0.1)
    assert (k.family, k.sigma, k.smoothness) == ("gaussian", 0.1, (1.0, 2.0))
