import math

import numpy as np
import pytest

from mtuda.data import UnlabeledDataset
from mtuda.kernel import KernelError, KernelSpec, gram, kernel_row, median_bandwidth

EXP_MINUS_2 = 0.1353352832366127  # math.exp(-2), evaluated by hand as e^-2


def ds(*cols):
    return UnlabeledDataset(np.array(cols, dtype=float).T)


def test_linear_orthonormal():
    g = gram(ds((1, 0)), ds((0, 1)), KernelSpec("linear", jitter=0.0))
    np.testing.assert_array_equal(g.k_full, [[1, 0], [0, 1]])


def test_gaussian_identical_points():
    g = gram(ds((0.3, 0.4)), ds((0.3, 0.4)), KernelSpec("gaussian", 1.0, jitter=0.0))
    np.testing.assert_array_equal(g.k_full, np.ones((2, 2)))


def test_gaussian_hand_value():
    g = gram(ds((0, 0)), ds((0, 2)), KernelSpec("gaussian", 1.0, jitter=0.0))
    assert g.k_full[0, 1] == pytest.approx(EXP_MINUS_2, rel=1e-12)
    assert EXP_MINUS_2 == pytest.approx(math.exp(-2))


def test_blocks_and_jitter():
    s, t = ds((0, 0), (1, 0)), ds((0, 1), (2, 2), (1, 1))
    g = gram(s, t, KernelSpec("linear"))
    assert g.k_source.shape == (2, 5) and g.k_target.shape == (3, 5)
    np.testing.assert_array_equal(g.k_source, g.k_full[:2])
    np.testing.assert_array_equal(g.k_target, g.k_full[2:])
    raw = np.hstack([s.features, t.features])
    raw = raw.T @ raw
    assert g.jitter == pytest.approx(1e-8 * np.trace(raw) / 5)
    np.testing.assert_allclose(g.k_full - g.jitter * np.eye(5), raw, atol=1e-14)


def test_errors():
    with pytest.raises(KernelError, match="dimension"):
        gram(ds((0, 0)), ds((0, 0, 0)), KernelSpec("linear"))
    with pytest.raises(KernelError, match="identical"):
        gram(ds((1, 1)), ds((1, 1)), KernelSpec("gaussian"))
    with pytest.raises(KernelError):
        KernelSpec("gaussian", -1.0)


def test_median_bandwidth():
    X = np.array([[0.0, 3.0, 0.0, 0.0], [0.0, 0.0, 4.0, 0.0]])
    # nonzero distances: 3, 4, 5, 3, 4  (the duplicate pair at 0 is excluded)
    assert median_bandwidth(X) == 4.0


@pytest.mark.parametrize("kind", ["linear", "gaussian"])
def test_symmetry_and_psd_random(kind, rng):
    for _ in range(50):
        X = rng.normal(size=(3, 10))
        g = gram(UnlabeledDataset(X[:, :4]), UnlabeledDataset(X[:, 4:]), KernelSpec(kind, jitter=0.0))
        K = g.k_full
        assert np.max(np.abs(K - K.T)) == 0.0
        ev = np.linalg.eigvalsh(K)
        assert ev[0] >= -1e-8 * ev[-1]
        if kind == "gaussian":
            assert np.all(np.diag(K) == 1.0)


@pytest.mark.parametrize("kind", ["linear", "gaussian"])
def test_kernel_row_reproduces_gram(kind, rng):
    X = rng.normal(size=(4, 7))
    g = gram(UnlabeledDataset(X[:, :3]), UnlabeledDataset(X[:, 3:]), KernelSpec(kind))
    for i in range(7):
        row = kernel_row(X[:, i], g, g.features)
        expected = g.k_full[i] - g.jitter * (np.arange(7) == i)
        np.testing.assert_allclose(row, expected, rtol=0, atol=1e-12)


def test_kernel_row_examples():
    g = gram(ds((0, 0)), ds((3, 1)), KernelSpec("linear"))
    np.testing.assert_array_equal(kernel_row(np.zeros(2), g), [0.0, 0.0])
    g1 = gram(ds((0, 0)), ds((5, 5)), KernelSpec("gaussian", 0.5))
    assert kernel_row(np.array([0.0, 1.0]), g1)[0] == pytest.approx(EXP_MINUS_2, rel=1e-12)
    assert kernel_row(np.array([5.0, 5.0]), g1)[1] == 1.0
    with pytest.raises(KernelError):
        kernel_row(np.zeros(3), g)
