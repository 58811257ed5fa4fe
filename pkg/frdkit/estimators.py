"""The weighted-IV form of the FRD estimator and the lambda-class family.

Every estimator here works on the kernel-weighted effective sample

    Y~ = V~ delta + D~ tau + U~,    instrument Z~ = K^1/2 1{x >= x0},

where V~ holds a common intercept and separate polynomial slopes on each
side of the cutoff. The lambda-class estimator is evaluated through its
expanded form

    tau_lambda = (lam G tau_Y tau_D + (1 - lam) D~'M Y~)
                 / (lam G tau_D^2 + (1 - lam) D~'M D~)

with M the residual maker of V~. It only needs scalars and one least-squares
residual vector, never an n_h x n_h projection matrix.
"""

import dataclasses
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .exceptions import (
    CollinearCovariatesError, DegenerateDenominatorError,
    InsufficientSampleError, InvalidInputError, NoIdentificationError,
    PreconditionError)
from .kernels import KernelKind, evaluate_scaled
from .localpoly import (
    DEGENERATE_DENOMINATOR, FLAG_NEAR_ZERO, FLAG_SHARP,
    NEAR_ZERO_DENOMINATOR, EstimateResult, check_treatment_variation,
    harmonic_gamma, schur_complement, split_effective, standard_parts)

# D~'M D~ at or below this fraction of D~'D~ means no residual variation
IDENTIFICATION_TOLERANCE = 1e-12


@dataclass(frozen=True)
class WeightedData:
    """Square-root kernel weighted effective sample.

    ``rows`` are the indices of the original sample (only rows with strictly
    positive kernel weight), and ``plus`` marks the rows at or above the
    cutoff. Once covariates have been partialled out, ``y_t``, ``d_t`` and
    ``z_t`` hold residuals and ``n_partialled`` counts the covariates used.
    The polynomial columns of ``v_t`` are in units of (x - x0)/h.
    """
    y_t: np.ndarray
    d_t: np.ndarray
    z_t: np.ndarray
    v_t: np.ndarray
    w_t: Optional[np.ndarray]
    rows: np.ndarray
    plus: np.ndarray
    sqrt_k: np.ndarray
    p: int
    n_partialled: int = 0

    @property
    def n_h(self):
        return len(self.rows)

    @property
    def n_plus(self):
        return int(np.count_nonzero(self.plus))

    @property
    def n_minus(self):
        return self.n_h - self.n_plus

    @property
    def n_controls(self):
        """Number of exogenous regressors partialled out (V columns plus
        covariates)."""
        return self.v_t.shape[1] + self.n_partialled


@dataclass(frozen=True)
class IvParts:
    tau_y: float
    tau_d: float
    gamma: float


def _annihilate(a, *vectors):
    """Residuals of each vector after least squares on the columns of a."""
    q, _ = np.linalg.qr(a)
    return [v - q @ (q.T @ v) for v in vectors]


def weighted_transform(sample, es, x0, h, p, kernel):
    """Build the kernel-weighted regression data for the effective sample."""
    kernel = KernelKind.from_name(kernel)
    rows = np.sort(np.concatenate([es.idx_plus, es.idx_minus]))
    k = evaluate_scaled(kernel, sample.x[rows], x0, h)
    keep = k > 0
    rows, k = rows[keep], k[keep]

    u = (sample.x[rows] - x0) / h
    plus = u >= 0.0
    if not plus.any() or plus.all():
        raise PreconditionError(
            'Both sides of the cutoff need observations with positive '
            'kernel weight')

    z = plus.astype(float)
    columns = [np.ones_like(u)]
    for j in range(1, p + 1):
        uj = u ** j
        columns.append(z * uj)
        columns.append((1.0 - z) * uj)
    v = np.column_stack(columns)

    sk = np.sqrt(k)
    w_t = None
    if sample.w is not None:
        w_t = sample.w[rows] * sk[:, None]

    return WeightedData(
        y_t=sample.y[rows] * sk, d_t=sample.d[rows] * sk, z_t=z * sk,
        v_t=v * sk[:, None], w_t=w_t, rows=rows, plus=plus, sqrt_k=sk, p=p)


def gamma_tilde(s_plus, s_minus, p=None):
    """G+ G- / (G+ + G-) from the Schur complements of both moment
    matrices."""
    s_plus = np.atleast_2d(np.asarray(s_plus, dtype=float))
    s_minus = np.atleast_2d(np.asarray(s_minus, dtype=float))
    if s_plus.shape != s_minus.shape or (
            p is not None and s_plus.shape != (p + 1, p + 1)):
        raise InvalidInputError(
            'Moment matrices must both be {p1}x{p1}'.format(
                p1='(p+1)' if p is None else p + 1))
    return harmonic_gamma(schur_complement(s_plus), schur_complement(s_minus))


def iv_parts(wd):
    """Decompose the IV form into G~ = Z~'MZ~, tau_D = Z~'MD~/G~ and
    tau_Y = Z~'MY~/G~ (M annihilates V~ and any covariates)."""
    zr, = _annihilate(wd.v_t, wd.z_t)
    gamma = float(zr @ zr)
    if not gamma > 0:
        raise PreconditionError('Instrument has no variation left over')
    return IvParts(
        tau_y=float(zr @ wd.y_t) / gamma, tau_d=float(zr @ wd.d_t) / gamma,
        gamma=gamma)


def tau_iv(wd):
    """IV estimator of tau in the weighted model with instrument Z~."""
    parts = iv_parts(wd)
    if abs(parts.tau_d) < DEGENERATE_DENOMINATOR:
        raise DegenerateDenominatorError(
            'Z~\'M D~ is zero to machine precision')
    return parts.tau_y / parts.tau_d


def lambda_from_psi(psi, n_h, p):
    """Lambda(psi) = 1 - psi / (n_h - 2(p + 1))."""
    dof = n_h - 2 * (p + 1)
    if dof <= 0:
        raise InsufficientSampleError(
            'Lambda(psi) needs n_h > 2(p+1) = {}, got n_h = {}'.format(
                2 * (p + 1), n_h))
    if not (0.0 <= psi <= dof):
        raise InvalidInputError(
            'psi must lie in [0, {dof}], got {psi}'.format(dof=dof, psi=psi))
    return 1.0 - psi / dof


def tau_lambda(wd, tau_y, tau_d, gamma, lam):
    """Lambda-class estimator from the standard estimator's numerator and
    denominator, G~, and the residual quadratic forms in D~."""
    if not (0.0 <= lam <= 1.0):
        raise InvalidInputError(
            'lambda must lie in [0, 1], got {lam}'.format(lam=lam))

    flags = set()
    if abs(tau_d) < NEAR_ZERO_DENOMINATOR:
        flags.add(FLAG_NEAR_ZERO)

    if lam < 1.0:
        dr, = _annihilate(wd.v_t, wd.d_t)
        d_m_d = float(dr @ dr)
        if d_m_d <= IDENTIFICATION_TOLERANCE * float(wd.d_t @ wd.d_t):
            raise NoIdentificationError(
                'Treatment lies in the span of the polynomial controls; '
                'lambda < 1 is not identified')
        d_m_y = float(dr @ wd.y_t)
    else:
        if abs(tau_d) < DEGENERATE_DENOMINATOR:
            raise DegenerateDenominatorError(
                'Treatment jump is zero to machine precision ({:.3g})'.format(
                    tau_d))
        d_m_d = d_m_y = 0.0

    numerator = lam * gamma * tau_y * tau_d + (1.0 - lam) * d_m_y
    denominator = lam * gamma * tau_d ** 2 + (1.0 - lam) * d_m_d
    return EstimateResult(
        tau_hat=numerator / denominator, numerator=numerator,
        denominator=denominator, tau_y_std=tau_y, tau_d_std=tau_d,
        gamma_tilde=gamma, n_plus=wd.n_plus, n_minus=wd.n_minus,
        lambda_used=float(lam), flags=frozenset(flags))


def partial_out_covariates(wd):
    """Replace Y~, D~ and Z~ with residuals from a regression on [V~ W~].

    All-zero covariate columns are dropped first.
    """
    if wd.w_t is None:
        raise InvalidInputError('There are no covariates to partial out')
    w = wd.w_t[:, np.linalg.norm(wd.w_t, axis=0) > 0]
    q = np.hstack([wd.v_t, w])
    if w.shape[1] and np.linalg.matrix_rank(q) < q.shape[1]:
        raise CollinearCovariatesError(
            'Covariates are collinear with the local polynomial regressors')
    y, d, z = _annihilate(q, wd.y_t, wd.d_t, wd.z_t)
    return dataclasses.replace(
        wd, y_t=y, d_t=d, z_t=z, w_t=None, n_partialled=w.shape[1])


@dataclass(frozen=True)
class LambdaConfig:
    """Either a raw lambda in [0, 1] or a psi for the Lambda(psi) rule."""
    lam: Optional[float] = None
    psi: Optional[float] = None

    def __post_init__(self):
        if (self.lam is None) == (self.psi is None):
            raise InvalidInputError('Give exactly one of lambda and psi')
        if self.lam is not None and not (0.0 <= self.lam <= 1.0):
            raise InvalidInputError(
                'lambda must lie in [0, 1], got {}'.format(self.lam))
        if self.psi is not None and not self.psi >= 0.0:
            raise InvalidInputError(
                'psi must be nonnegative, got {}'.format(self.psi))

    def resolve(self, n_h, p):
        """The lambda to use for an effective sample of size n_h."""
        if self.lam is not None:
            return float(self.lam)
        return lambda_from_psi(self.psi, n_h, p)


@dataclass(frozen=True)
class FitConfig:
    """Which estimator to run: polynomial order, kernel and lambda rule.

    The cutoff and bandwidth are given at fit time.
    """
    name: str = 'lambda4'
    p: int = 1
    kernel: KernelKind = KernelKind.UNIFORM
    lam: Optional[float] = None
    psi: Optional[float] = 4.0

    def __post_init__(self):
        object.__setattr__(self, 'kernel', KernelKind.from_name(self.kernel))
        if int(self.p) != self.p or self.p < 0:
            raise InvalidInputError(
                'Polynomial order must be a nonnegative integer')
        object.__setattr__(self, 'p', int(self.p))
        # Validates lam/psi
        self.lambda_config

    @property
    def lambda_config(self):
        return LambdaConfig(lam=self.lam, psi=self.psi)

    @classmethod
    def preset(cls, name):
        try:
            kwargs = PRESETS[name.strip().lower()]
        except KeyError:
            raise InvalidInputError(
                'Unknown estimator "{name}" (choose from {names})'.format(
                    name=name, names=', '.join(sorted(PRESETS)))) from None
        return cls(name=name.strip().lower(), **kwargs)

    @classmethod
    def from_value(cls, value):
        """Build from a preset name or a ``{name, p, kernel, lambda|psi}``
        mapping."""
        if isinstance(value, cls):
            return value
        if isinstance(value, str):
            return cls.preset(value)
        if not isinstance(value, dict):
            raise InvalidInputError(
                'Estimator must be a name or a mapping, got {!r}'.format(value))
        unknown = set(value) - {'name', 'p', 'kernel', 'lambda', 'psi'}
        if unknown:
            raise InvalidInputError(
                'Unknown estimator keys: {}'.format(', '.join(sorted(unknown))))
        base = {}
        if value.get('name', '').lower() in PRESETS:
            base = dict(PRESETS[value['name'].lower()])
        if 'lambda' in value or 'psi' in value:
            base['lam'] = value.get('lambda')
            base['psi'] = value.get('psi')
        for key in ('p', 'kernel'):
            if key in value:
                base[key] = value[key]
        name = value.get('name') or 'custom'
        return cls(name=name, **base)


PRESETS = {
    'standard': {'kernel': KernelKind.TRIANGULAR, 'lam': 1.0, 'psi': None},
    'iv': {'kernel': KernelKind.UNIFORM, 'lam': 1.0, 'psi': None},
    'lambda4': {'kernel': KernelKind.UNIFORM, 'lam': None, 'psi': 4.0},
    'lambda1': {'kernel': KernelKind.UNIFORM, 'lam': None, 'psi': 1.0},
    'ols': {'kernel': KernelKind.UNIFORM, 'lam': 0.0, 'psi': None},
}


@dataclass(frozen=True)
class Fit:
    """An estimate plus the weighted data it was computed from."""
    result: EstimateResult
    data: WeightedData
    config: FitConfig
    x0: float
    h: float


def estimate(sample, x0, h, config=None, partial_covariates=True):
    """Fit one estimator at cutoff ``x0`` with bandwidth ``h``."""
    config = config or FitConfig()
    p, kernel = config.p, config.kernel

    es = split_effective(sample, x0, h)
    wd = weighted_transform(sample, es, x0, h, p, kernel)
    d_rows = sample.d[wd.rows]
    sharp = check_treatment_variation(d_rows[wd.plus], d_rows[~wd.plus])

    if sample.w is not None and partial_covariates:
        wd = partial_out_covariates(wd)
        parts = iv_parts(wd)
        tau_y, tau_d, gamma = parts.tau_y, parts.tau_d, parts.gamma
    else:
        sp = standard_parts(sample, x0, h, p, kernel)
        tau_y, tau_d = sp.tau_y, sp.tau_d
        gamma = gamma_tilde(
            sp.fit_plus.scaled_moment_matrix,
            sp.fit_minus.scaled_moment_matrix, p)

    lam = config.lambda_config.resolve(wd.n_h, p)
    result = tau_lambda(wd, tau_y, tau_d, gamma, lam)
    if sharp:
        result = dataclasses.replace(result, flags=result.flags | {FLAG_SHARP})
    return Fit(result=result, data=wd, config=config, x0=x0, h=h)
