"""
frdkit
======

Fuzzy regression discontinuity estimation with lambda-class estimators
"""

__version__ = '0.3.1'

from .estimators import FitConfig, estimate  # noqa: E402
from .exceptions import FrdError  # noqa: E402
from .inference import VarianceSpec, infer  # noqa: E402
from .localpoly import Sample, frd_standard  # noqa: E402

__all__ = [
    'FitConfig',
    'FrdError',
    'Sample',
    'VarianceSpec',
    'estimate',
    'frd_standard',
    'infer',
]
