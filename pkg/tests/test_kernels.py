import numpy as np
import pytest
from scipy import integrate

from frdkit.exceptions import InvalidBandwidthError, InvalidInputError
from frdkit.kernels import KernelKind, evaluate, evaluate_scaled

ALL_KINDS = list(KernelKind)


@pytest.mark.parametrize('kind,u,expected', [
    (KernelKind.TRIANGULAR, 0.0, 1.0),
    (KernelKind.UNIFORM, 0.5, 0.5),
    (KernelKind.TRIANGULAR, 1.0, 0.0),
    (KernelKind.EPANECHNIKOV, 0.0, 0.75),
    (KernelKind.UNIFORM, 1.0, 0.5),
    (KernelKind.EPANECHNIKOV, 1.0, 0.0),
    (KernelKind.UNIFORM, 1.0001, 0.0),
    (KernelKind.TRIANGULAR, -0.25, 0.75),
])
def test_evaluate(kind, u, expected):
    assert evaluate(kind, u) == expected


def test_evaluate_array():
    u = np.array([-2.0, -0.5, 0.0, 0.5, 2.0])
    np.testing.assert_array_equal(
        evaluate(KernelKind.TRIANGULAR, u), [0.0, 0.5, 1.0, 0.5, 0.0])
    assert isinstance(evaluate('uniform', 0.2), float)


@pytest.mark.parametrize('kind', ALL_KINDS)
def test_symmetric_and_bounded(kind):
    u = np.linspace(0.0, 1.5, 301)
    np.testing.assert_array_equal(evaluate(kind, u), evaluate(kind, -u))
    assert evaluate(kind, u).max() <= kind.max_weight
    assert evaluate(kind, 0.0) == kind.max_weight
    assert np.all(evaluate(kind, np.array([1.01, 3.0, -7.0])) == 0.0)


@pytest.mark.parametrize('kind', ALL_KINDS)
def test_integrates_to_one(kind):
    total, _ = integrate.quad(
        lambda u: evaluate(kind, u), -1.0, 1.0, points=[0.0],
        epsabs=1e-12, epsrel=1e-12)
    assert abs(total - 1.0) < 1e-8


def test_names():
    assert KernelKind.from_name('Triangular') is KernelKind.TRIANGULAR
    assert KernelKind.from_name(' UNIFORM ') is KernelKind.UNIFORM
    assert KernelKind.from_name(KernelKind.EPANECHNIKOV) is \
        KernelKind.EPANECHNIKOV


@pytest.mark.parametrize('name', ['gaussian', 'Normal', 'cauchy'])
def test_unbounded_kernels_rejected(name):
    with pytest.raises(InvalidInputError) as exc_info:
        KernelKind.from_name(name)
    assert 'unbounded support' in str(exc_info.value)


def test_unknown_kernel():
    with pytest.raises(InvalidInputError) as exc_info:
        KernelKind.from_name('biweight')
    assert exc_info.value.category == 'invalid-input'


@pytest.mark.parametrize('u', [np.nan, np.inf, -np.inf])
def test_non_finite_argument(u):
    with pytest.raises(InvalidInputError):
        evaluate(KernelKind.UNIFORM, u)
    with pytest.raises(InvalidInputError):
        evaluate(KernelKind.UNIFORM, np.array([0.0, u]))


@pytest.mark.parametrize('kind,x,x0,h,expected', [
    (KernelKind.UNIFORM, 0.3, 0.0, 1.0, 0.5),
    (KernelKind.TRIANGULAR, 2.0, 0.0, 1.0, 0.0),
    (KernelKind.TRIANGULAR, 0.25, 0.0, 0.5, 0.5),
    (KernelKind.EPANECHNIKOV, 41.0, 40.0, 2.0, 0.5625),
])
def test_evaluate_scaled(kind, x, x0, h, expected):
    assert evaluate_scaled(kind, x, x0, h) == pytest.approx(
        expected, abs=1e-15)


@pytest.mark.parametrize('h', [0.0, -1.0, np.inf, np.nan])
def test_evaluate_scaled_bad_bandwidth(h):
    with pytest.raises(InvalidBandwidthError) as exc_info:
        evaluate_scaled(KernelKind.UNIFORM, 0.1, 0.0, h)
    assert isinstance(exc_info.value, InvalidInputError)
    assert exc_info.value.category == 'invalid-bandwidth'
