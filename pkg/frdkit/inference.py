"""Variances, t statistics and confidence intervals for lambda-class fits"""

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import stats

from .exceptions import (
    DegenerateDenominatorError, DegenerateVarianceError,
    InsufficientSampleError, InvalidInputError)


class VarianceFlavor(enum.Enum):
    HOMOSKEDASTIC = 'homoskedastic'
    HC0 = 'hc0'
    HC1 = 'hc1'

    @classmethod
    def from_name(cls, name):
        if isinstance(name, cls):
            return name
        try:
            return cls(str(name).strip().lower())
        except ValueError:
            raise InvalidInputError(
                'Unknown variance flavor "{name}" (choose from {names})'.format(
                    name=name, names=', '.join(f.value for f in cls))) from None


class CritLaw(enum.Enum):
    NORMAL = 'normal'
    # Student t with n_h degrees of freedom
    STUDENT_T = 't'

    @classmethod
    def from_name(cls, name):
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower().replace('-', '_')
        if key in {'t', 'student_t', 'studentt', 'student'}:
            return cls.STUDENT_T
        if key in {'normal', 'z', 'gaussian'}:
            return cls.NORMAL
        raise InvalidInputError(
            'Unknown critical-value law "{name}"'.format(name=name))


@dataclass(frozen=True)
class VarianceSpec:
    """How to estimate the error covariance. ``cluster_ids`` has one entry
    per row of the weighted data."""
    flavor: VarianceFlavor = VarianceFlavor.HC1
    cluster_ids: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(
            self, 'flavor', VarianceFlavor.from_name(self.flavor))
        if self.cluster_ids is not None:
            object.__setattr__(
                self, 'cluster_ids', np.asarray(self.cluster_ids).ravel())
            if self.flavor is VarianceFlavor.HOMOSKEDASTIC:
                raise InvalidInputError(
                    'Clustered errors need the hc0 or hc1 flavor')

    @property
    def clustered(self):
        return self.cluster_ids is not None

    def restrict(self, rows):
        """The same spec with cluster ids narrowed to the given rows of the
        full sample."""
        if self.cluster_ids is None:
            return self
        return VarianceSpec(self.flavor, self.cluster_ids[rows])


@dataclass(frozen=True)
class ConfidenceInterval:
    lo: float
    hi: float
    level: float
    crit_law: CritLaw

    @property
    def center(self):
        return 0.5 * (self.lo + self.hi)

    def contains(self, value):
        return self.lo <= value <= self.hi


@dataclass(frozen=True)
class Inference:
    """Everything needed to report a fit: V^, its standard error, the t test
    against ``tau_null`` and the confidence interval."""
    estimate: float
    variance: float
    std_error: float
    t_stat: float
    p_value: float
    tau_null: float
    ci: ConfidenceInterval
    flavor: VarianceFlavor


def _residual_dof(wd):
    dof = wd.n_h - wd.n_controls - 1
    if dof <= 0:
        raise InsufficientSampleError(
            'No residual degrees of freedom (n_h = {n_h} with {k} '
            'regressors)'.format(n_h=wd.n_h, k=wd.n_controls + 1))
    return dof


def residuals(wd, tau_hat):
    """Weighted residuals y~ - V~ delta^ - d~ tau^, with delta^ the least
    squares coefficients of (y~ - d~ tau^) on V~."""
    target = wd.y_t - wd.d_t * tau_hat
    delta, *_ = np.linalg.lstsq(wd.v_t, target, rcond=None)
    return target - wd.v_t @ delta


def sandwich_variance(wd, gamma, lam, tau_hat, spec=None):
    """Finite-sample variance of the lambda-class estimate.

    The numerator is D~'P Omega P D~ with P the projection on M Z~, which
    collapses to c^2 (M Z~)' Omega (M Z~) with c = Z~'M D~ / G~. The
    denominator is the lambda-class denominator, squared.
    """
    spec = spec or VarianceSpec()
    if not (0.0 <= lam <= 1.0):
        raise InvalidInputError(
            'lambda must lie in [0, 1], got {lam}'.format(lam=lam))
    if not gamma > 0:
        raise InvalidInputError('G~ must be positive, got {}'.format(gamma))

    n_h = wd.n_h
    dof = _residual_dof(wd)

    q, _ = np.linalg.qr(wd.v_t)
    zr = wd.z_t - q @ (q.T @ wd.z_t)
    dr = wd.d_t - q @ (q.T @ wd.d_t)
    z_m_d = float(zr @ wd.d_t)
    c = z_m_d / gamma

    denominator = lam * z_m_d ** 2 / gamma + (1.0 - lam) * float(dr @ dr)
    if not denominator > 0:
        raise DegenerateDenominatorError(
            'Lambda-class denominator is not positive ({:.3g})'.format(
                denominator))

    u = residuals(wd, tau_hat)
    if spec.clustered:
        ids = spec.cluster_ids
        if len(ids) != n_h:
            raise InvalidInputError(
                'Need {n_h} cluster ids, got {got}'.format(
                    n_h=n_h, got=len(ids)))
        _, groups = np.unique(ids, return_inverse=True)
        n_groups = groups.max() + 1
        if n_groups < 2:
            raise InsufficientSampleError(
                'Clustered errors need at least 2 clusters in the window')
        scores = np.bincount(groups, weights=zr * u, minlength=n_groups)
        meat = float(scores @ scores)
        if spec.flavor is VarianceFlavor.HC1:
            k = wd.n_controls + 1
            meat *= (n_groups / (n_groups - 1.0)) * (n_h - 1.0) / (n_h - k)
    elif spec.flavor is VarianceFlavor.HOMOSKEDASTIC:
        meat = float(u @ u) / dof * float(zr @ zr)
    else:
        meat = float((zr * zr) @ (u * u))
        if spec.flavor is VarianceFlavor.HC1:
            meat *= n_h / dof

    return c * c * meat / denominator ** 2


def variance_lambda(wd, gamma, lam, tau_hat, spec=None):
    """V^ on the sqrt(n_h) scale used by the t statistic and the interval,
    i.e. n_h times the finite-sample variance."""
    return wd.n_h * sandwich_variance(wd, gamma, lam, tau_hat, spec=spec)


def t_stat(tau_hat, tau_null, v_hat, n_h):
    """T = sqrt(n_h) (tau^ - tau_null) / sqrt(V^)."""
    if not v_hat > 0:
        raise DegenerateVarianceError(
            'Can\'t form a t statistic with V^ = {}'.format(v_hat))
    return float(np.sqrt(n_h) * (tau_hat - tau_null) / np.sqrt(v_hat))


def _check_level(level):
    if not (0.0 < level < 1.0):
        raise InvalidInputError(
            'Confidence level must lie in (0, 1), got {}'.format(level))


def critical_value(level, crit_law, n_h):
    """Two-sided critical value at the given coverage level."""
    _check_level(level)
    q = 1.0 - (1.0 - level) / 2.0
    if CritLaw.from_name(crit_law) is CritLaw.NORMAL:
        return float(stats.norm.ppf(q))
    return float(stats.t.ppf(q, df=n_h))


def p_value(t, crit_law, n_h):
    if CritLaw.from_name(crit_law) is CritLaw.NORMAL:
        return float(2.0 * stats.norm.sf(abs(t)))
    return float(2.0 * stats.t.sf(abs(t), df=n_h))


def confidence_interval(tau_hat, v_hat, n_h, level=0.95,
                        crit_law=CritLaw.STUDENT_T):
    """tau^ -/+ crit sqrt(V^ / n_h)."""
    _check_level(level)
    if not v_hat >= 0:
        raise InvalidInputError(
            'Variance must be nonnegative, got {}'.format(v_hat))
    crit_law = CritLaw.from_name(crit_law)
    half = critical_value(level, crit_law, n_h) * np.sqrt(v_hat / n_h)
    return ConfidenceInterval(
        lo=float(tau_hat - half), hi=float(tau_hat + half), level=level,
        crit_law=crit_law)


def infer(fit, spec=None, level=0.95, crit_law=CritLaw.STUDENT_T,
          tau_null=0.0):
    """Standard error, test and interval for a fit from
    :func:`frdkit.estimators.estimate`."""
    spec = spec or VarianceSpec()
    result, wd = fit.result, fit.data
    n_h = wd.n_h
    v_hat = variance_lambda(
        wd, result.gamma_tilde, result.lambda_used, result.tau_hat, spec)
    ci = confidence_interval(result.tau_hat, v_hat, n_h, level, crit_law)

    if v_hat > 0:
        t = t_stat(result.tau_hat, tau_null, v_hat, n_h)
        p = p_value(t, ci.crit_law, n_h)
    else:
        t = p = float('nan')

    return Inference(
        estimate=result.tau_hat, variance=v_hat,
        std_error=float(np.sqrt(v_hat / n_h)), t_stat=t, p_value=p,
        tau_null=tau_null, ci=ci, flavor=spec.flavor)
