"""One-sided local polynomial regression and the standard FRD estimator"""

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .exceptions import (
    DegenerateDenominatorError, IllConditionedDesignError,
    InsufficientSampleError, InvalidInputError, PreconditionError)
from .kernels import KernelKind, check_bandwidth, evaluate_scaled

# Smallest eigenvalue of S allowed, relative to trace(S)
CONDITIONING_TOLERANCE = 1e-10
# |tau_D| below this is reported in the result flags
NEAR_ZERO_DENOMINATOR = 1e-8
# |tau_D| below this can't be divided by at all
DEGENERATE_DENOMINATOR = 1e-13

FLAG_NEAR_ZERO = 'near_zero_denominator'
FLAG_SHARP = 'sharp_design'


class Sample(object):
    """Observed (running variable, outcome, treatment) triples, with an
    optional matrix of exogenous covariates (one column per covariate)."""

    def __init__(self, x, y, d, w=None):
        self.x = np.asarray(x, dtype=float).ravel()
        self.y = np.asarray(y, dtype=float).ravel()
        self.d = np.asarray(d, dtype=float).ravel()

        n = len(self.x)
        if n == 0:
            raise InvalidInputError('Sample must contain at least one row')
        if len(self.y) != n or len(self.d) != n:
            raise InvalidInputError(
                'x, y and d must have equal lengths (got {}, {}, {})'.format(
                    n, len(self.y), len(self.d)))
        if not (np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.y))):
            raise InvalidInputError('x and y must be finite')
        if not np.all((self.d == 0.0) | (self.d == 1.0)):
            raise InvalidInputError('Treatment values must be exactly 0 or 1')

        if w is not None:
            w = np.asarray(w, dtype=float)
            if w.ndim == 1:
                w = w[:, None]
            if w.ndim != 2 or w.shape[0] != n:
                raise InvalidInputError(
                    'Covariate matrix must have {n} rows'.format(n=n))
            if not np.all(np.isfinite(w)):
                raise InvalidInputError('Covariates must be finite')
        self.w = w

    def __len__(self):
        return len(self.x)

    @property
    def n(self):
        return len(self.x)

    def subset(self, idx):
        """A new sample holding only the given rows."""
        return Sample(
            self.x[idx], self.y[idx], self.d[idx],
            None if self.w is None else self.w[idx])


@dataclass(frozen=True)
class EffectiveSample:
    """Indices of the bandwidth window, split at the cutoff.

    The plus side is [x0, x0 + h] and the minus side is [x0 - h, x0).
    """
    idx_plus: np.ndarray
    idx_minus: np.ndarray

    @property
    def n_plus(self):
        return len(self.idx_plus)

    @property
    def n_minus(self):
        return len(self.idx_minus)

    @property
    def n_h(self):
        return self.n_plus + self.n_minus


@dataclass(frozen=True)
class SideFit:
    """Kernel weights, effective weights and moment matrices for one side.

    ``scaled_moment_matrix`` is S built on (x - x0)/h; conditioning checks,
    solves and Schur complements use it so that fits don't depend on the
    units of the running variable.
    """
    kernel_weights: np.ndarray
    weights: np.ndarray
    moment_matrix: np.ndarray
    min_eigenvalue: float
    scaled_moment_matrix: np.ndarray

    def estimate(self, values):
        """Boundary value of the local polynomial fit of ``values``."""
        kw = self.kernel_weights * self.weights
        return float(np.dot(kw, values) / kw.sum())

    @property
    def schur_complement(self):
        return schur_complement(self.scaled_moment_matrix)


@dataclass(frozen=True)
class EstimateResult:
    """A point estimate together with its ratio decomposition."""
    tau_hat: float
    numerator: float
    denominator: float
    tau_y_std: float
    tau_d_std: float
    gamma_tilde: float
    n_plus: int
    n_minus: int
    lambda_used: float
    flags: frozenset = field(default_factory=frozenset)

    @property
    def n_h(self):
        return self.n_plus + self.n_minus

    @property
    def near_zero_denominator(self):
        return FLAG_NEAR_ZERO in self.flags


@dataclass(frozen=True)
class StandardParts:
    """The four boundary estimates behind the standard estimator."""
    mu_plus: float
    mu_minus: float
    pi_plus: float
    pi_minus: float
    fit_plus: SideFit
    fit_minus: SideFit
    effective: EffectiveSample

    @property
    def tau_y(self):
        return self.mu_plus - self.mu_minus

    @property
    def tau_d(self):
        return self.pi_plus - self.pi_minus


def split_effective(sample, x0, h):
    """Partition the rows of ``sample`` that fall within ``h`` of ``x0``."""
    check_bandwidth(h)
    u = sample.x - x0
    plus = (u >= 0.0) & (u <= h)
    minus = (u < 0.0) & (u >= -h)
    return EffectiveSample(
        idx_plus=np.flatnonzero(plus), idx_minus=np.flatnonzero(minus))


def design_vector(x, x0, p):
    """[1, (x - x0), ..., (x - x0)^p]; one row per element if x is an array."""
    if p < 0:
        raise InvalidInputError('Polynomial order must be >= 0')
    if np.ndim(x) == 0:
        return np.vander([float(x) - x0], p + 1, increasing=True)[0]
    return np.vander(np.asarray(x, dtype=float) - x0, p + 1, increasing=True)


def schur_complement(s):
    """S_00 - R' U^-1 R for S = [[S_00, R'], [R, U]] (just S_00 when p = 0)."""
    s = np.asarray(s, dtype=float)
    if s.shape[0] == 1:
        return float(s[0, 0])
    r = s[1:, 0]
    try:
        correction = r @ linalg.solve(s[1:, 1:], r, assume_a='pos')
    except linalg.LinAlgError as ex:
        raise IllConditionedDesignError(
            'Moment matrix block is singular ({error})'.format(
                error=str(ex))) from None
    return float(s[0, 0] - correction)


def harmonic_gamma(g_plus, g_minus):
    """Combine the two one-sided Schur complements into G+ G- / (G+ + G-)."""
    if not (g_plus > 0 and g_minus > 0):
        raise IllConditionedDesignError(
            'Schur complements must be positive (got {:.3g} and {:.3g})'.format(
                g_plus, g_minus))
    return g_plus * g_minus / (g_plus + g_minus)


def _min_eigenvalue(s):
    min_eig = float(np.linalg.eigvalsh(s)[0])
    if not min_eig > CONDITIONING_TOLERANCE * np.trace(s):
        raise IllConditionedDesignError(
            'Moment matrix is ill-conditioned (min eigenvalue {:.3g}, '
            'trace {:.3g})'.format(min_eig, np.trace(s)))
    return min_eig


def _weighted_gram(hm, k):
    s = (hm * k[:, None]).T @ hm
    return 0.5 * (s + s.T)


def _side_design(x, x0, h, p, kernel, side):
    x = np.asarray(x, dtype=float)
    k = evaluate_scaled(kernel, x, x0, h)
    support = np.count_nonzero(k > 0)
    if support < p + 1:
        raise InsufficientSampleError(
            'Need at least {need} observations with positive kernel weight '
            '{side} the cutoff, found {found}'.format(
                need=p + 1, side=side, found=support))
    hs = design_vector((x - x0) / h, 0.0, p)
    s_scaled = _weighted_gram(hs, k)
    return k, hs, s_scaled, _min_eigenvalue(s_scaled)


def moment_matrix(x, x0, h, p, kernel, side='on one side of'):
    """S = sum_i K_h(x_i - x0) H_i H_i' over one side of the cutoff.

    Conditioning is judged on the same sum over (x - x0)/h.
    """
    k = _side_design(x, x0, h, p, kernel, side)[0]
    return _weighted_gram(design_vector(np.asarray(x, dtype=float), x0, p), k)


def side_weights(x, x0, h, p, kernel, side='on one side of'):
    """Effective weights w_i = e1' S^-1 H_i for one side of the cutoff."""
    k, hs, s_scaled, min_eig = _side_design(x, x0, h, p, kernel, side)
    e1 = np.zeros(p + 1)
    e1[0] = 1.0
    try:
        # e1' S^-1 H_i is the same on the scaled design
        a = linalg.cho_solve(linalg.cho_factor(s_scaled), e1)
    except linalg.LinAlgError as ex:
        raise IllConditionedDesignError(
            'Moment matrix is not positive definite ({error})'.format(
                error=str(ex))) from None
    hm = design_vector(np.asarray(x, dtype=float), x0, p)
    return SideFit(
        kernel_weights=k, weights=hs @ a,
        moment_matrix=_weighted_gram(hm, k), min_eigenvalue=min_eig,
        scaled_moment_matrix=s_scaled)


def boundary_estimate(x, values, x0, h, p, kernel, side='on one side of'):
    """Local polynomial estimate at the cutoff from one side's data."""
    return side_weights(x, x0, h, p, kernel, side=side).estimate(values)


def standard_parts(sample, x0, h, p, kernel=KernelKind.TRIANGULAR):
    """Run the four one-sided regressions without forming the ratio."""
    kernel = KernelKind.from_name(kernel)
    es = split_effective(sample, x0, h)
    xp, xm = sample.x[es.idx_plus], sample.x[es.idx_minus]
    fit_plus = side_weights(xp, x0, h, p, kernel, side='above')
    fit_minus = side_weights(xm, x0, h, p, kernel, side='below')
    return StandardParts(
        mu_plus=fit_plus.estimate(sample.y[es.idx_plus]),
        mu_minus=fit_minus.estimate(sample.y[es.idx_minus]),
        pi_plus=fit_plus.estimate(sample.d[es.idx_plus]),
        pi_minus=fit_minus.estimate(sample.d[es.idx_minus]),
        fit_plus=fit_plus, fit_minus=fit_minus, effective=es)


def check_treatment_variation(d_plus, d_minus):
    """Check there are treated and untreated units on both sides.

    A sharp design embedded in the fuzzy model (treatment constant on each
    side, different across sides) is allowed; returns True in that case.
    """
    if len(d_plus) == 0 or len(d_minus) == 0:
        raise InsufficientSampleError('Both sides of the cutoff need data')
    plus_const = d_plus.min() == d_plus.max()
    minus_const = d_minus.min() == d_minus.max()
    if plus_const and minus_const and d_plus[0] != d_minus[0]:
        return True
    for side, const in (('above', plus_const), ('below', minus_const)):
        if const:
            raise PreconditionError(
                'No treatment variation {side} the cutoff within the '
                'bandwidth window'.format(side=side))
    return False


def frd_standard(sample, x0, h, p=1, kernel=KernelKind.TRIANGULAR,
                 flag_threshold=NEAR_ZERO_DENOMINATOR):
    """The standard FRD estimator: ratio of the outcome and treatment jumps
    from four separate local polynomial regressions."""
    parts = standard_parts(sample, x0, h, p, kernel)
    fp, fm, es = parts.fit_plus, parts.fit_minus, parts.effective
    pos_plus = fp.kernel_weights > 0
    pos_minus = fm.kernel_weights > 0

    flags = set()
    if check_treatment_variation(sample.d[es.idx_plus][pos_plus],
                                 sample.d[es.idx_minus][pos_minus]):
        flags.add(FLAG_SHARP)

    tau_y, tau_d = parts.tau_y, parts.tau_d
    if abs(tau_d) < DEGENERATE_DENOMINATOR:
        raise DegenerateDenominatorError(
            'Treatment jump is zero to machine precision ({:.3g})'.format(
                tau_d))
    if abs(tau_d) < flag_threshold:
        flags.add(FLAG_NEAR_ZERO)

    return EstimateResult(
        tau_hat=tau_y / tau_d, numerator=tau_y, denominator=tau_d,
        tau_y_std=tau_y, tau_d_std=tau_d,
        gamma_tilde=harmonic_gamma(fp.schur_complement, fm.schur_complement),
        n_plus=int(np.count_nonzero(pos_plus)),
        n_minus=int(np.count_nonzero(pos_minus)),
        lambda_used=1.0, flags=frozenset(flags))
