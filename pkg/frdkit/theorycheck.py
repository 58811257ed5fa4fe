"""Numerical checks of the finite-sample results behind the estimators.

Three kinds of checks live here:

* truncated multinomial and binomial laws (the counts of treated units on
  each side of the cutoff, conditional on both sides having enough of them)
* mirror-image samples, on which the standard treatment jump is exactly 0
* probes of how much mass the standard denominator puts near zero

Functions decorated with :func:`expose_check` are also available on the
command line as ``frdkit theory <name>``.
"""

import functools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import special, stats

from .bandwidth import parse_bandwidth
from .estimators import FitConfig
from .exceptions import FrdError, InvalidInputError
from .kernels import KernelKind
from .localpoly import Sample, standard_parts
from .simlab import DgpSpec, draw_sample, make_rng, replicate

# Probabilities may miss summing to 1 by rounding
_PROB_SLACK = 1e-12


def expose_check(func):
    """This decorator makes a function into a command-line check."""
    func.__frdkit_check__ = True
    return func


def list_checks():
    """Names of the exposed checks, as typed on the command line."""
    return sorted(
        name.replace('_', '-') for name, func in globals().items()
        if callable(func) and getattr(func, '__frdkit_check__', False))


def get_check(name):
    func = globals().get(name.replace('-', '_'))
    if func is None or not getattr(func, '__frdkit_check__', False):
        raise InvalidInputError('Invalid check "{name}"'.format(name=name))
    return func


@dataclass(frozen=True)
class TruncatedMultinomialSpec:
    """Counts (n0, n1, n2) ~ Multinomial(n; p0, p1, p2) conditioned on
    n1 > alpha1 and n2 > alpha2. ``alpha = -1`` means no truncation."""
    n: int
    p1: float
    p2: float
    alpha1: int = -1
    alpha2: int = -1

    def __post_init__(self):
        for name in ('n', 'alpha1', 'alpha2'):
            value = getattr(self, name)
            if int(value) != value:
                raise InvalidInputError('{} must be an integer'.format(name))
            object.__setattr__(self, name, int(value))
        if self.n < 0:
            raise InvalidInputError('n must be nonnegative')
        if not (0.0 <= self.p1 <= 1.0 and 0.0 <= self.p2 <= 1.0 and
                self.p1 + self.p2 <= 1.0 + _PROB_SLACK):
            raise InvalidInputError(
                'Need p1, p2 >= 0 with p1 + p2 <= 1 (got {}, {})'.format(
                    self.p1, self.p2))
        if self.alpha1 < -1 or self.alpha2 < -1:
            raise InvalidInputError('Truncation thresholds must be >= -1')
        if self.alpha1 + self.alpha2 > self.n:
            raise InvalidInputError(
                'alpha1 + alpha2 must not exceed n = {}'.format(self.n))

    @property
    def p0(self):
        return max(0.0, 1.0 - self.p1 - self.p2)

    @property
    def truncated(self):
        return self.alpha1 > -1 or self.alpha2 > -1

    def probabilities(self, cell):
        """(p_cell, p_other) for cell 1 or 2."""
        if cell == 1:
            return self.p1, self.p2
        if cell == 2:
            return self.p2, self.p1
        raise InvalidInputError('Cell must be 1 or 2, got {}'.format(cell))

    def threshold(self, cell):
        return self.alpha1 if cell == 1 else self.alpha2


def _conditional_tail(spec, cell, m):
    """P(other cell > its threshold | this cell = m)."""
    p_i, p_j = spec.probabilities(cell)
    alpha_j = spec.threshold(2 if cell == 1 else 1)
    q = min(1.0, p_j / (1.0 - p_i)) if p_i < 1.0 else 0.0
    return stats.binom.sf(alpha_j, spec.n - m, q)


def truncation_constant(spec):
    """kappa = P(n1 > alpha1, n2 > alpha2); 1 without truncation."""
    if not spec.truncated:
        return 1.0
    m = np.arange(spec.alpha1 + 1, spec.n + 1)
    terms = stats.binom.pmf(m, spec.n, spec.p1) * _conditional_tail(spec, 1, m)
    kappa = min(1.0, math.fsum(terms))
    if not kappa > 0:
        raise InvalidInputError(
            'The truncation event has probability zero')
    return kappa


def in_support(spec, n1, n2):
    return n1 > spec.alpha1 and n2 > spec.alpha2 and n1 + n2 <= spec.n


def truncated_multinomial_pmf(spec, n1, n2, kappa=None):
    """P(n1, n2 | n1 > alpha1, n2 > alpha2), computed in log space."""
    if int(n1) != n1 or int(n2) != n2:
        raise InvalidInputError('Counts must be integers')
    n1, n2 = int(n1), int(n2)
    if not in_support(spec, n1, n2):
        return 0.0
    kappa = truncation_constant(spec) if kappa is None else kappa
    n0 = spec.n - n1 - n2
    log_p = (special.gammaln(spec.n + 1) - special.gammaln(n0 + 1) -
             special.gammaln(n1 + 1) - special.gammaln(n2 + 1) +
             special.xlogy(n0, spec.p0) + special.xlogy(n1, spec.p1) +
             special.xlogy(n2, spec.p2))
    return float(np.exp(log_p) / kappa)


def truncated_binomial_marginal(spec, cell, m, kappa=None):
    """P(n_cell = m | n1 > alpha1, n2 > alpha2)."""
    p_i, _ = spec.probabilities(cell)
    if int(m) != m:
        raise InvalidInputError('Counts must be integers')
    m = int(m)
    if not (spec.threshold(cell) < m <= spec.n):
        return 0.0
    kappa = truncation_constant(spec) if kappa is None else kappa
    weight = _conditional_tail(spec, cell, m)
    return float(stats.binom.pmf(m, spec.n, p_i) * weight / kappa)


def make_symmetric_sample(m, offsets, d_pattern, x0=0.0, y=None):
    """A 2m-point sample mirrored about ``x0``: row i sits at x0 + offset_i
    and row i + m at x0 - offset_i, with the same treatment."""
    offsets = np.asarray(offsets, dtype=float).ravel()
    d_pattern = np.asarray(d_pattern, dtype=float).ravel()
    if m < 1 or len(offsets) != m or len(d_pattern) != m:
        raise InvalidInputError(
            'Need m >= 1 offsets and m treatment values (m = {})'.format(m))
    if not np.all(np.isfinite(offsets)) or np.any(offsets <= 0):
        raise InvalidInputError('Offsets must be positive and finite')
    if not np.all((d_pattern == 0) | (d_pattern == 1)):
        raise InvalidInputError('Treatment pattern must be 0s and 1s')
    if d_pattern.min() == d_pattern.max():
        raise InvalidInputError(
            'Treatment pattern needs both treated and untreated units')

    x = np.concatenate([x0 + offsets, x0 - offsets])
    d = np.concatenate([d_pattern, d_pattern])
    if y is None:
        y = d + np.concatenate([offsets, -offsets])
    return Sample(x, y, d)


@dataclass(frozen=True)
class DenominatorProbe:
    eps: tuple
    probability: tuple
    ci_lo: tuple
    ci_hi: tuple
    kept: int
    excluded: int
    level: float

    def to_dict(self):
        return {
            'kept': self.kept, 'excluded': self.excluded, 'level': self.level,
            'rows': [
                {'eps': e, 'probability': p, 'ci_lo': lo, 'ci_hi': hi}
                for e, p, lo, hi in zip(
                    self.eps, self.probability, self.ci_lo, self.ci_hi)
            ],
        }


def _probe_replication(spec, config, rule, seed, rep):
    sample = draw_sample(spec, seed, rep)
    try:
        h = rule.select(sample, spec.x0, p=config.p)
        return standard_parts(
            sample, spec.x0, h, config.p, config.kernel).tau_d
    except FrdError:
        return float('nan')


def denominator_probe(spec, config='standard', reps=10000, seed=0,
                      eps_grid=(0.01, 0.02, 0.05, 0.1, 0.2),
                      bandwidth='rot', workers=None, level=0.95):
    """Share of replications with |standard denominator| < eps, with exact
    (Clopper-Pearson) intervals. Replications where the one-sided fits
    can't be formed are excluded and counted."""
    if reps < 1000:
        raise InvalidInputError('A probe needs at least 1000 replications')
    eps_grid = tuple(sorted(float(e) for e in eps_grid))
    if not eps_grid or eps_grid[0] <= 0:
        raise InvalidInputError('eps values must be positive')

    config = FitConfig.from_value(config)
    task = functools.partial(
        _probe_replication, spec, config, parse_bandwidth(bandwidth), seed)
    tau_d = np.abs(np.array(replicate(task, reps, workers=workers)))
    kept = tau_d[np.isfinite(tau_d)]
    if kept.size == 0:
        raise InvalidInputError('No replication produced a denominator')

    probability, ci_lo, ci_hi = [], [], []
    for eps in eps_grid:
        k = int(np.count_nonzero(kept < eps))
        ci = stats.binomtest(k, kept.size).proportion_ci(
            confidence_level=level, method='exact')
        probability.append(k / kept.size)
        ci_lo.append(float(ci.low))
        ci_hi.append(float(ci.high))

    return DenominatorProbe(
        eps=eps_grid, probability=tuple(probability), ci_lo=tuple(ci_lo),
        ci_hi=tuple(ci_hi), kept=int(kept.size),
        excluded=int(reps - kept.size), level=level)


@dataclass(frozen=True)
class DiscretePmf:
    support: tuple
    probabilities: np.ndarray

    @property
    def atom_at_zero(self):
        for value, prob in zip(self.support, self.probabilities):
            if value == 0:
                return float(prob)
        return 0.0

    def to_dict(self):
        return {
            'atom_at_zero': self.atom_at_zero,
            'pmf': [
                {'value': float(v), 'exact': str(v), 'probability': p}
                for v, p in zip(self.support, self.probabilities)
            ],
        }


def local_constant_denominator_pmf(n_plus, n_minus, pi_plus, pi_minus):
    """Exact law of K+/n+ - K-/n- with K+ ~ Bin(n+, pi+) and
    K- ~ Bin(n-, pi-): the uniform-kernel local-constant treatment jump
    for given side counts."""
    if n_plus < 1 or n_minus < 1:
        raise InvalidInputError('Both sides need at least one observation')
    for name, p in (('pi_plus', pi_plus), ('pi_minus', pi_minus)):
        if not 0.0 <= p <= 1.0:
            raise InvalidInputError('{} must lie in [0, 1]'.format(name))

    k_plus = np.arange(n_plus + 1)
    k_minus = np.arange(n_minus + 1)
    f_plus = stats.binom.pmf(k_plus, n_plus, pi_plus)
    f_minus = stats.binom.pmf(k_minus, n_minus, pi_minus)

    terms = {}
    for a in k_plus:
        if f_plus[a] == 0:
            continue
        for b in k_minus:
            if f_minus[b] == 0:
                continue
            value = Fraction(int(a), n_plus) - Fraction(int(b), n_minus)
            terms.setdefault(value, []).append(f_plus[a] * f_minus[b])

    support = tuple(sorted(terms))
    return DiscretePmf(
        support=support,
        probabilities=np.array([math.fsum(terms[v]) for v in support]))


# Command-line checks. Keep the parameters to simple types; the CLI builds
# its options from these signatures.

@expose_check
def multinomial(n: int, p1: float, p2: float, alpha1: int = -1,
                alpha2: int = -1, n1: int = None, n2: int = None):
    """Truncated multinomial pmf at (n1, n2), or over its whole support."""
    spec = TruncatedMultinomialSpec(n, p1, p2, alpha1, alpha2)
    kappa = truncation_constant(spec)
    if n1 is not None and n2 is not None:
        return {'kappa': kappa, 'n1': n1, 'n2': n2,
                'probability': truncated_multinomial_pmf(spec, n1, n2, kappa)}

    rows = [
        {'n1': a, 'n2': b,
         'probability': truncated_multinomial_pmf(spec, a, b, kappa)}
        for a in range(spec.alpha1 + 1, n + 1)
        for b in range(spec.alpha2 + 1, n - a + 1)
    ]
    return {'kappa': kappa, 'pmf': rows,
            'total': math.fsum(r['probability'] for r in rows)}


@expose_check
def marginal(n: int, p1: float, p2: float, alpha1: int = -1,
             alpha2: int = -1, cell: int = 1):
    """Marginal pmf of one cell of a truncated multinomial."""
    spec = TruncatedMultinomialSpec(n, p1, p2, alpha1, alpha2)
    kappa = truncation_constant(spec)
    rows = [
        {'m': m,
         'probability': truncated_binomial_marginal(spec, cell, m, kappa)}
        for m in range(spec.threshold(cell) + 1, n + 1)
    ]
    return {'kappa': kappa, 'cell': cell, 'pmf': rows,
            'total': math.fsum(r['probability'] for r in rows)}


@expose_check
def symmetry(m: int = 6, p: int = 1, kernel: str = 'triangular',
             seed: int = 0, x0: float = 0.0):
    """Treatment jump on a random mirror-image sample (should be 0)."""
    kernel = KernelKind.from_name(kernel)
    if m < max(2, p + 1):
        raise InvalidInputError(
            'Need m >= max(2, p + 1) points per side, got {}'.format(m))
    rng = make_rng(seed)
    offsets = rng.uniform(0.05, 0.95, m)
    pattern = rng.integers(0, 2, m)
    pattern[:2] = (0, 1)
    sample = make_symmetric_sample(m, offsets, pattern, x0=x0)
    parts = standard_parts(sample, x0, 1.0, p, kernel)
    return {'m': m, 'p': p, 'kernel': kernel.value,
            'pi_plus': parts.pi_plus, 'pi_minus': parts.pi_minus,
            'tau_d': parts.tau_d}


@expose_check
def probe(design: str = 'lee', pi_rule: str = 'pi1', pi_plus: float = 0.6,
          x_law: str = 'normal', n: int = 300, estimator: str = 'standard',
          reps: int = 10000, seed: int = 0, eps: str = '0.01,0.02,0.05,0.1',
          bandwidth: str = 'rot', workers: int = None):
    """Share of simulated standard denominators within eps of zero."""
    try:
        eps_grid = [float(e) for e in eps.split(',') if e.strip()]
    except ValueError:
        raise InvalidInputError(
            'eps must be a comma-separated list of numbers') from None
    spec = DgpSpec(design=design, pi_rule=pi_rule, pi_plus=pi_plus,
                   x_law=x_law, n=n)
    result = denominator_probe(
        spec, estimator, reps=reps, seed=seed, eps_grid=eps_grid,
        bandwidth=bandwidth, workers=workers)
    out = result.to_dict()
    out['dgp'] = spec.to_dict()
    return out


@expose_check
def discrete_pmf(n_plus: int, n_minus: int, pi_plus: float, pi_minus: float):
    """Exact pmf of the local-constant treatment jump."""
    return local_constant_denominator_pmf(
        n_plus, n_minus, pi_plus, pi_minus).to_dict()
