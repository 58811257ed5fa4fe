"""Bandwidth rules: fixed values, a rule of thumb, and externally supplied
per-cutoff values"""

import numpy as np
from scipy import stats

from .exceptions import (
    InsufficientSampleError, InvalidBandwidthError, InvalidInputError)
from .kernels import check_bandwidth

ROT_CONSTANT = 1.84
# Bandwidths are nudged out by this factor so the k-th point is inside
_FLOOR_SLACK = 1.0 + 1e-6


class BandwidthRule(object):
    """Base class for bandwidth rules."""

    name = None

    def select(self, sample, x0, p=1, kernel=None):
        raise NotImplementedError

    def describe(self):
        return self.name

    def __eq__(self, other):
        return type(self) is type(other) and vars(self) == vars(other)

    def __hash__(self):
        return hash((type(self).__name__, self.describe()))

    def __repr__(self):
        return '{cls}({desc})'.format(
            cls=type(self).__name__, desc=self.describe())


class Fixed(BandwidthRule):
    name = 'fixed'

    def __init__(self, h):
        check_bandwidth(h)
        self.h = float(h)

    def select(self, sample, x0, p=1, kernel=None):
        return self.h

    def describe(self):
        return repr(self.h)


def min_side_bandwidth(x, x0, count):
    """Smallest h that puts ``count`` points on each side of ``x0``."""
    above = np.sort(x[x >= x0] - x0)
    below = np.sort(x0 - x[x < x0])
    if len(above) < count or len(below) < count:
        raise InsufficientSampleError(
            'Need {count} points on each side of the cutoff, found {a} above '
            'and {b} below'.format(count=count, a=len(above), b=len(below)))
    return max(above[count - 1], below[count - 1]) * _FLOOR_SLACK


class RuleOfThumb(BandwidthRule):
    """h = 1.84 sigma n^(-1/5) with sigma = min(std(x), IQR(x) / 1.349),
    widened if needed so each side has 2(p + 1) points."""

    name = 'rot'

    def __init__(self, constant=ROT_CONSTANT):
        if not constant > 0:
            raise InvalidInputError('Rule-of-thumb constant must be positive')
        self.constant = float(constant)

    def select(self, sample, x0, p=1, kernel=None):
        x = sample.x
        n = len(x)
        if n < 2:
            raise InsufficientSampleError(
                'Rule of thumb needs at least 2 observations')
        sigma = min(np.std(x, ddof=1), stats.iqr(x) / 1.349)
        if not sigma > 0:
            raise InsufficientSampleError(
                'Running variable has no spread; can\'t pick a bandwidth')
        h = self.constant * sigma * n ** -0.2
        return float(max(h, min_side_bandwidth(x, x0, 2 * (p + 1))))

    def describe(self):
        return self.name


class External(BandwidthRule):
    """Bandwidths computed elsewhere, looked up by cutoff."""

    name = 'external'

    def __init__(self, values):
        self.values = {}
        for cutoff, h in dict(values).items():
            check_bandwidth(float(h))
            self.values[float(cutoff)] = float(h)

    def select(self, sample, x0, p=1, kernel=None):
        for cutoff, h in self.values.items():
            if np.isclose(cutoff, x0, rtol=0.0, atol=1e-12):
                return h
        raise InvalidBandwidthError(
            'No external bandwidth given for cutoff {}'.format(x0))

    def describe(self):
        return 'external'


def parse_bandwidth(value):
    """Turn a CLI/config value into a rule: a number, ``"rot"`` or
    ``{"external": {"values": {cutoff: h}}}``."""
    if isinstance(value, BandwidthRule):
        return value
    if isinstance(value, dict):
        try:
            values = value['external']['values']
        except (KeyError, TypeError):
            raise InvalidInputError(
                'Bandwidth mapping must look like '
                '{"external": {"values": {...}}}') from None
        return External(values)
    if isinstance(value, str):
        if value.strip().lower() in {'rot', 'rule-of-thumb'}:
            return RuleOfThumb()
        try:
            value = float(value)
        except ValueError:
            raise InvalidBandwidthError(
                'Bandwidth must be a number or "rot", got {!r}'.format(
                    value)) from None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise InvalidBandwidthError(
            'Bandwidth must be a number or "rot", got {!r}'.format(value))
    return Fixed(value)


def select(rule, sample, x0, p=1, kernel=None):
    return parse_bandwidth(rule).select(sample, x0, p=p, kernel=kernel)
