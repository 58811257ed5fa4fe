"""Second-order kernels with compact support on [-1, 1]"""

import enum

import numpy as np

from .exceptions import InvalidBandwidthError, InvalidInputError

# Kernels people ask for that we deliberately don't support
_UNBOUNDED_KERNELS = {'gaussian', 'normal', 'logistic', 'cauchy'}


class KernelKind(enum.Enum):
    TRIANGULAR = 'triangular'
    UNIFORM = 'uniform'
    EPANECHNIKOV = 'epanechnikov'

    @classmethod
    def from_name(cls, name):
        """Look up a kernel by its case-insensitive name."""
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower()
        if key in _UNBOUNDED_KERNELS:
            raise InvalidInputError(
                'Kernel "{name}" has unbounded support; only triangular, '
                'uniform and epanechnikov are available'.format(name=name))
        try:
            return cls(key)
        except ValueError:
            raise InvalidInputError(
                'Unknown kernel "{name}"'.format(name=name)) from None

    @property
    def max_weight(self):
        """The kernel's supremum, K(0)."""
        return _MAX_WEIGHT[self]


_MAX_WEIGHT = {
    KernelKind.TRIANGULAR: 1.0,
    KernelKind.UNIFORM: 0.5,
    KernelKind.EPANECHNIKOV: 0.75,
}


def evaluate(kind, u):
    """Evaluate K(u) for a scalar or an array of scaled distances.

    Weights vanish outside [-1, 1]. At |u| = 1 the uniform kernel is 1/2 and
    the other two are 0.
    """
    kind = KernelKind.from_name(kind)
    scalar = np.ndim(u) == 0
    u = np.asarray(u, dtype=float)
    if not np.all(np.isfinite(u)):
        raise InvalidInputError('Kernel argument must be finite')

    a = np.abs(u)
    inside = a <= 1.0
    if kind is KernelKind.UNIFORM:
        k = np.where(inside, 0.5, 0.0)
    elif kind is KernelKind.TRIANGULAR:
        k = np.where(inside, 1.0 - a, 0.0)
    else:
        k = np.where(inside, 0.75 * (1.0 - u * u), 0.0)

    return float(k) if scalar else k


def evaluate_scaled(kind, x, x0, h):
    """Evaluate K_h(x - x0) = K((x - x0) / h)."""
    check_bandwidth(h)
    return evaluate(kind, (np.asarray(x, dtype=float) - x0) / h
                    if np.ndim(x) else (float(x) - x0) / h)


def check_bandwidth(h):
    if not (np.isfinite(h) and h > 0):
        raise InvalidBandwidthError(
            'Bandwidth must be positive and finite, got {h}'.format(h=h))
