"""Monte Carlo laboratory for FRD estimators.

The data generating processes are the piecewise quintic designs calibrated
to the US House elections data (``lee``) and to the Head Start data
(``ludwig``), combined with three treatment-assignment rules and three laws
for the running variable.

Every replication draws from its own Philox stream keyed by
``(seed, replication)``, and replications are cut into fixed-size chunks, so
results are bitwise identical whatever the number of worker processes.
"""

import enum
import functools
import itertools
import json
import os
from collections import Counter
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import asdict, dataclass, field
from operator import itemgetter
from typing import NamedTuple, Optional

import numpy as np
import pandas as pd
from scipy import stats

from ._utils import (
    default_workers, echo, echo_failed, echo_ok, json_encode, versions)
from .bandwidth import parse_bandwidth
from .estimators import FitConfig, estimate
from .exceptions import (
    EmptySummaryError, FrdError, InvalidInputError, InvariantViolation)
from .inference import CritLaw, VarianceFlavor, VarianceSpec, infer
from .localpoly import Sample

CHUNK_SIZE = 200
DEFAULT_SIGMA_U2 = 0.09


def _from_name(cls, name, aliases=None):
    if isinstance(name, cls):
        return name
    key = str(name).strip().lower()
    key = (aliases or {}).get(key, key)
    try:
        return cls(key)
    except ValueError:
        raise InvalidInputError(
            'Unknown {what} "{name}" (choose from {names})'.format(
                what=cls.__name__, name=name,
                names=', '.join(m.value for m in cls))) from None


class Design(enum.Enum):
    LEE = 'lee'
    LUDWIG = 'ludwig'

    @classmethod
    def from_name(cls, name):
        return _from_name(cls, name)


class AssignmentRule(enum.Enum):
    PI1 = 'pi1'
    PI2 = 'pi2'
    PI3 = 'pi3'

    @classmethod
    def from_name(cls, name):
        return _from_name(cls, name)


class RunningLaw(enum.Enum):
    STD_NORMAL = 'normal'
    UNIFORM_SYM = 'uniform'
    SCALED_BETA = 'beta'

    @classmethod
    def from_name(cls, name):
        return _from_name(cls, name, aliases={
            'std_normal': 'normal', 'stdnormal': 'normal',
            'uniform_sym': 'uniform', 'scaled_beta': 'beta',
        })


# Coefficients of 1, x, ..., x^5 below and above the cutoff at 0
_COEFFICIENTS = {
    Design.LEE: (
        (0.48, 1.27, 7.18, 20.21, 21.54, 7.33),
        (0.48, 0.84, -3.00, 7.99, -9.01, 3.56),
    ),
    Design.LUDWIG: (
        (3.70, 2.99, 3.28, 1.45, 0.22, 0.03),
        (3.70, 18.49, -54.80, 74.30, -45.02, 9.83),
    ),
}

DEFAULT_TAU = {
    Design.LEE: 0.04,
    Design.LUDWIG: -3.44,
}


def m_eval(kind, x):
    """The design's regression function m(x), split at 0."""
    below, above = _COEFFICIENTS[Design.from_name(kind)]
    scalar = np.ndim(x) == 0
    x = np.asarray(x, dtype=float)
    poly = np.polynomial.polynomial.polyval
    m = np.where(x < 0.0, poly(x, below), poly(x, above))
    return float(m) if scalar else m


def _check_pi_plus(pi_plus):
    if not (0.5 < pi_plus <= 1.0):
        raise InvalidInputError(
            'pi_plus must lie in (0.5, 1], got {}'.format(pi_plus))


def pi_eval(kind, x, pi_plus):
    """Treatment probability pi(x) under one of the assignment rules.

    pi_minus is 1 - pi_plus, so the jump at 0 is 2 pi_plus - 1.
    """
    kind = AssignmentRule.from_name(kind)
    _check_pi_plus(pi_plus)
    pi_minus = 1.0 - pi_plus
    scalar = np.ndim(x) == 0
    x = np.asarray(x, dtype=float)

    if kind is AssignmentRule.PI1:
        pi = np.where(x < 0.0, pi_minus, pi_plus)
    elif kind is AssignmentRule.PI2:
        pi = np.select(
            [x < -1.0, x < 0.0, x < 1.0],
            [np.clip(pi_minus * (x + 1.0), 0.0, 1.0),
             pi_minus * x + pi_minus,
             pi_minus * x + pi_plus],
            default=1.0)
    else:
        # Clamp the argument; the value is flat there anyway
        xc = np.clip(x, -700.0, 700.0)
        pi = np.where(
            x < 0.0, pi_minus * np.exp(0.2 * xc),
            pi_plus + pi_minus * (1.0 - np.exp(-0.2 * xc)))

    if np.any(pi < 0.0) or np.any(pi > 1.0):
        raise InvariantViolation(
            'Assignment probability left [0, 1] under {}'.format(kind.value))
    return float(pi) if scalar else pi


@dataclass(frozen=True)
class DgpSpec:
    design: Design = Design.LEE
    pi_rule: AssignmentRule = AssignmentRule.PI1
    pi_plus: float = 0.9
    x_law: RunningLaw = RunningLaw.STD_NORMAL
    n: int = 300
    sigma_u2: float = DEFAULT_SIGMA_U2
    tau: Optional[float] = None
    x0: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, 'design', Design.from_name(self.design))
        object.__setattr__(
            self, 'pi_rule', AssignmentRule.from_name(self.pi_rule))
        object.__setattr__(self, 'x_law', RunningLaw.from_name(self.x_law))
        _check_pi_plus(self.pi_plus)
        if int(self.n) != self.n or self.n < 1:
            raise InvalidInputError(
                'Sample size must be a positive integer, got {}'.format(
                    self.n))
        object.__setattr__(self, 'n', int(self.n))
        if not self.sigma_u2 >= 0:
            raise InvalidInputError('sigma_u2 must be nonnegative')
        if self.x0 != 0.0:
            raise InvalidInputError('The simulation designs have x0 = 0')

    @property
    def pi_minus(self):
        return 1.0 - self.pi_plus

    @property
    def pi_jump(self):
        return self.pi_plus - self.pi_minus

    @property
    def tau_true(self):
        return DEFAULT_TAU[self.design] if self.tau is None else self.tau

    @property
    def label(self):
        return '{d}/{r}/pi0={j:.2f}/{law}/n={n}'.format(
            d=self.design.value, r=self.pi_rule.value, j=self.pi_jump,
            law=self.x_law.value, n=self.n)

    def to_dict(self):
        return {
            'design': self.design.value, 'pi_rule': self.pi_rule.value,
            'pi_plus': self.pi_plus, 'pi_jump': self.pi_jump,
            'x_law': self.x_law.value, 'n': self.n,
            'sigma_u2': self.sigma_u2, 'tau': self.tau_true,
        }


def make_rng(seed, rep=0):
    """Philox generator keyed by (seed, rep); each key is its own stream."""
    if seed < 0 or rep < 0:
        raise InvalidInputError('Seeds and replication indices must be >= 0')
    key = ((int(seed) % 2 ** 64) << 64) | (int(rep) % 2 ** 64)
    return np.random.Generator(np.random.Philox(key=key))


def draw_running(law, n, rng):
    law = RunningLaw.from_name(law)
    if law is RunningLaw.STD_NORMAL:
        return rng.standard_normal(n)
    if law is RunningLaw.UNIFORM_SYM:
        return rng.uniform(-1.0, 1.0, n)
    # Beta(2, 4) as a ratio of gammas, mapped onto [-1, 1]
    g1 = rng.standard_gamma(2.0, n)
    g2 = rng.standard_gamma(4.0, n)
    return 2.0 * g1 / (g1 + g2) - 1.0


def draw_sample(spec, seed, rep=0):
    """Draw one sample of size ``spec.n``: y = m(x) + tau d + u."""
    rng = make_rng(seed, rep)
    x = draw_running(spec.x_law, spec.n, rng)
    d = (rng.random(spec.n) < pi_eval(spec.pi_rule, x, spec.pi_plus))
    u = rng.standard_normal(spec.n) * np.sqrt(spec.sigma_u2)
    d = d.astype(float)
    y = m_eval(spec.design, x) + spec.tau_true * d + u
    return Sample(x, y, d)


@dataclass(frozen=True)
class CiConfig:
    level: float = 0.95
    crit_law: CritLaw = CritLaw.STUDENT_T
    variance: VarianceFlavor = VarianceFlavor.HC1

    def __post_init__(self):
        if not (0.0 < self.level < 1.0):
            raise InvalidInputError(
                'Confidence level must lie in (0, 1), got {}'.format(
                    self.level))
        object.__setattr__(self, 'crit_law', CritLaw.from_name(self.crit_law))
        object.__setattr__(
            self, 'variance', VarianceFlavor.from_name(self.variance))


class RepOutcome(NamedTuple):
    """One estimator on one replication. ``failure`` holds the error
    category when the replication was degenerate."""
    tau_hat: float = float('nan')
    tau_d: float = float('nan')
    lo: float = float('nan')
    hi: float = float('nan')
    near_zero: bool = False
    failure: Optional[str] = None


def fit_replication(spec, configs, rule, ci, seed, rep):
    """Draw replication ``rep`` and fit every estimator with one common
    bandwidth."""
    sample = draw_sample(spec, seed, rep)
    try:
        h = rule.select(sample, spec.x0, p=max(c.p for c in configs))
    except FrdError as ex:
        return tuple(RepOutcome(failure=ex.category) for _ in configs)

    outcomes = []
    for config in configs:
        try:
            fit = estimate(sample, spec.x0, h, config)
            lo = hi = float('nan')
            if ci is not None:
                inf = infer(
                    fit, VarianceSpec(ci.variance), ci.level, ci.crit_law,
                    tau_null=spec.tau_true)
                lo, hi = inf.ci.lo, inf.ci.hi
        except FrdError as ex:
            outcomes.append(RepOutcome(failure=ex.category))
            continue
        outcomes.append(RepOutcome(
            tau_hat=fit.result.tau_hat, tau_d=fit.result.tau_d_std,
            lo=lo, hi=hi, near_zero=fit.result.near_zero_denominator))
    return tuple(outcomes)


def _run_chunk(task, start, stop):
    return [task(rep) for rep in range(start, stop)]


def replicate(task, reps, workers=None, chunk_size=CHUNK_SIZE):
    """Evaluate ``task(rep)`` for rep in [0, reps), in rep order.

    ``task`` must be picklable when more than one worker is used.
    """
    if reps < 1:
        raise InvalidInputError('Need at least one replication')
    workers = default_workers() if workers is None else int(workers)
    chunks = [(start, min(start + chunk_size, reps))
              for start in range(0, reps, chunk_size)]

    if workers <= 1 or len(chunks) == 1:
        return [out for start, stop in chunks
                for out in _run_chunk(task, start, stop)]

    results = []
    with ProcessPoolExecutor(max_workers=workers) as executor:
        future_to_start = {}
        for start, stop in chunks:
            future = executor.submit(_run_chunk, task, start, stop)
            future_to_start[future] = start

        for future in as_completed(future_to_start):
            results.append((future_to_start[future], future.result()))

    return [out for _, chunk in sorted(results, key=itemgetter(0))
            for out in chunk]


def metrics(estimates, tau_true, intervals=None, mad='classical'):
    """Location, spread and coverage of a vector of estimates.

    ``mad`` picks what the ``mad`` entry measures: ``classical`` is the
    median absolute deviation from the median, ``truth`` from tau_true.
    Both are returned regardless.
    """
    est = np.asarray(estimates, dtype=float)
    if est.size == 0:
        raise InvalidInputError('Need at least one estimate')
    if mad not in {'classical', 'truth'}:
        raise InvalidInputError(
            'mad must be "classical" or "truth", got {!r}'.format(mad))

    err = est - tau_true
    median = np.median(est)
    mad_classical = float(np.median(np.abs(est - median)))
    mad_truth = float(np.median(np.abs(err)))
    out = {
        'median_bias': float(median - tau_true),
        'mean_bias': float(np.mean(err)),
        'rmse': float(np.sqrt(np.mean(err ** 2))),
        'mad': mad_classical if mad == 'classical' else mad_truth,
        'mad_classical': mad_classical,
        'mad_about_truth': mad_truth,
        'coverage': float('nan'),
        'mean_length': float('nan'),
    }
    if intervals is not None:
        iv = np.asarray(intervals, dtype=float).reshape(-1, 2)
        if len(iv) != est.size:
            raise InvalidInputError('Need one interval per estimate')
        lo, hi = iv[:, 0], iv[:, 1]
        out['coverage'] = float(
            100.0 * np.mean((lo <= tau_true) & (tau_true <= hi)))
        out['mean_length'] = float(np.mean(hi - lo))
    return out


@dataclass(frozen=True)
class McSummary:
    estimator: str
    dgp: DgpSpec
    median_bias: float
    mad: float
    mad_classical: float
    mad_about_truth: float
    rmse: float
    mean_bias: float
    coverage: float
    mean_length: float
    ci_level: float
    reps_requested: int
    reps_completed: int
    reps_flagged_degenerate: int
    reps_near_zero: int
    seed: int
    failures: dict = field(default_factory=dict)

    def to_row(self):
        row = self.dgp.to_dict()
        row.update({
            'estimator': self.estimator,
            'median_bias': self.median_bias, 'mad': self.mad,
            'mad_classical': self.mad_classical,
            'mad_about_truth': self.mad_about_truth, 'rmse': self.rmse,
            'mean_bias': self.mean_bias, 'coverage': self.coverage,
            'mean_length': self.mean_length, 'ci_level': self.ci_level,
            'reps_requested': self.reps_requested,
            'reps_completed': self.reps_completed,
            'reps_flagged_degenerate': self.reps_flagged_degenerate,
            'reps_near_zero': self.reps_near_zero, 'seed': self.seed,
        })
        return row


def _unique_configs(estimators):
    configs = [FitConfig.from_value(e) for e in estimators]
    if not configs:
        raise InvalidInputError('Need at least one estimator')
    names = [c.name for c in configs]
    dupes = sorted(n for n, k in Counter(names).items() if k > 1)
    if dupes:
        raise InvalidInputError(
            'Estimator names must be unique: {}'.format(', '.join(dupes)))
    return configs


def run_mc(spec, estimators, ci=None, reps=1000, seed=0, workers=None,
           bandwidth='rot', mad='classical', chunk_size=CHUNK_SIZE):
    """Simulate ``reps`` samples from ``spec`` and summarise each estimator.

    Replications where an estimator hits a degenerate case are left out of
    that estimator's metrics and counted instead.
    """
    configs = _unique_configs(estimators)
    ci = CiConfig() if ci is None else ci
    task = functools.partial(
        fit_replication, spec, tuple(configs), parse_bandwidth(bandwidth), ci,
        seed)
    outcomes = replicate(task, reps, workers=workers, chunk_size=chunk_size)

    summaries = []
    for j, config in enumerate(configs):
        column = [rep[j] for rep in outcomes]
        kept = [o for o in column if o.failure is None]
        if not kept:
            raise EmptySummaryError(
                'Every replication of {label} was degenerate for '
                'estimator {name}'.format(label=spec.label, name=config.name))
        m = metrics(
            [o.tau_hat for o in kept], spec.tau_true,
            [(o.lo, o.hi) for o in kept], mad=mad)
        summaries.append(McSummary(
            estimator=config.name, dgp=spec, ci_level=ci.level,
            reps_requested=reps, reps_completed=len(kept),
            reps_flagged_degenerate=reps - len(kept),
            reps_near_zero=sum(o.near_zero for o in kept), seed=seed,
            failures=dict(sorted(Counter(
                o.failure for o in column if o.failure).items())),
            **m))
    return summaries


@dataclass(frozen=True)
class SamplingDistribution:
    """Raw estimates and their errors tau_hat - tau (NaN where degenerate),
    with tail diagnostics. The normal and Cauchy references are centred at
    0 and calibrated on ``reference``, so they sit on the axis of
    ``errors``."""
    dgp: DgpSpec
    estimates: dict
    errors: dict
    reference: str
    normal_scale: float
    cauchy_scale: float
    diagnostics: dict
    grid: np.ndarray
    normal_density: np.ndarray
    cauchy_density: np.ndarray

    def to_dict(self):
        return {
            'dgp': self.dgp.to_dict(), 'reference': self.reference,
            'normal_scale': self.normal_scale,
            'cauchy_scale': self.cauchy_scale,
            'diagnostics': self.diagnostics,
        }


ABS_QUANTILES = (50.0, 90.0, 99.0, 99.9)


def tail_diagnostics(estimates, tau_true):
    est = np.asarray(estimates, dtype=float)
    est = est[np.isfinite(est)]
    if est.size == 0:
        return {'kept': 0, 'excess_kurtosis': float('nan'),
                'abs_quantiles': {}, 'max_abs_error': float('nan')}
    err = np.abs(est - tau_true)
    return {
        'kept': int(est.size),
        'excess_kurtosis': float(stats.kurtosis(est)),
        'abs_quantiles': {
            '{:g}'.format(q): float(v)
            for q, v in zip(ABS_QUANTILES, np.percentile(err, ABS_QUANTILES))
        },
        'max_abs_error': float(err.max()),
    }


def sampling_distribution(spec, estimators=('lambda4', 'lambda1', 'standard'),
                          reps=10000, seed=0, workers=None, bandwidth='rot',
                          reference='lambda4', grid_points=201):
    """Estimates and errors tau_hat - tau_true for every replication, plus
    reference densities on the error axis: a normal with the reference
    estimator's variance, and a Cauchy located at 0 with scale IQR / 2 of
    the same vector."""
    if reps < 100:
        raise InvalidInputError(
            'A sampling distribution needs at least 100 replications')
    configs = _unique_configs(estimators)
    names = [c.name for c in configs]
    if reference not in names:
        raise InvalidInputError(
            'Reference estimator {!r} is not among the estimators'.format(
                reference))

    task = functools.partial(
        fit_replication, spec, tuple(configs), parse_bandwidth(bandwidth),
        None, seed)
    outcomes = replicate(task, reps, workers=workers)
    estimates = {
        name: np.array([rep[j].tau_hat for rep in outcomes])
        for j, name in enumerate(names)
    }
    errors = {name: v - spec.tau_true for name, v in estimates.items()}

    ref = errors[reference]
    ref = ref[np.isfinite(ref)]
    if ref.size < 2:
        raise EmptySummaryError(
            'Too few usable replications of the reference estimator')
    normal_scale = float(np.sqrt(np.var(ref)))
    cauchy_scale = float(stats.iqr(ref) / 2.0)

    half_width = max(4.0 * normal_scale, 10.0 * cauchy_scale)
    grid = np.linspace(-half_width, half_width, grid_points)
    return SamplingDistribution(
        dgp=spec, estimates=estimates, errors=errors, reference=reference,
        normal_scale=normal_scale, cauchy_scale=cauchy_scale,
        diagnostics={name: tail_diagnostics(v, spec.tau_true)
                     for name, v in estimates.items()},
        grid=grid,
        normal_density=stats.norm.pdf(grid, scale=normal_scale),
        cauchy_density=stats.cauchy.pdf(grid, scale=cauchy_scale))


_TALLY_METRICS = {
    'median_bias': lambda s: abs(s.median_bias),
    'mad': lambda s: s.mad,
    'rmse': lambda s: s.rmse,
    'coverage': lambda s: abs(s.coverage - 100.0 * s.ci_level),
    'mean_length': lambda s: s.mean_length,
}


def tally_best(summaries):
    """Count, per metric, how often each estimator is best across
    configurations (ties all count as wins)."""
    by_dgp = {}
    for s in summaries:
        by_dgp.setdefault(s.dgp, []).append(s)

    tally = {}
    for metric, key in _TALLY_METRICS.items():
        wins = Counter({s.estimator: 0 for s in summaries})
        for group in by_dgp.values():
            values = [(key(s), s.estimator) for s in group
                      if np.isfinite(key(s))]
            if not values:
                continue
            best = min(v for v, _ in values)
            wins.update(name for v, name in values if v == best)
        tally[metric] = dict(sorted(wins.items()))
    return tally


_CONFIG_KEYS = {
    'design', 'pi_rule', 'pi_plus', 'x_law', 'n', 'reps', 'seed',
    'estimators', 'bandwidth', 'ci', 'sigma_u2', 'tau', 'workers', 'mad',
}
_CI_KEYS = {'level', 'crit_law', 'variance'}
_GRID_KEYS = ('design', 'pi_rule', 'pi_plus', 'x_law', 'n')


def _as_list(value):
    return list(value) if isinstance(value, (list, tuple)) else [value]


@dataclass(frozen=True)
class SimConfig:
    """A declarative simulation grid. Any of the grid keys can be a list;
    the grid is their cartesian product in the order design, pi_rule,
    pi_plus, x_law, n."""
    design: tuple = ('lee',)
    pi_rule: tuple = ('pi1',)
    pi_plus: tuple = (0.9,)
    x_law: tuple = ('normal',)
    n: tuple = (300,)
    reps: int = 1000
    seed: int = 0
    estimators: tuple = ('standard', 'lambda4', 'lambda1')
    bandwidth: object = 'rot'
    ci: CiConfig = field(default_factory=CiConfig)
    sigma_u2: float = DEFAULT_SIGMA_U2
    tau: Optional[float] = None
    workers: Optional[int] = None
    mad: str = 'classical'

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise InvalidInputError('Simulation config must be a JSON object')
        unknown = set(data) - _CONFIG_KEYS
        if unknown:
            raise InvalidInputError(
                'Unknown config keys: {}'.format(', '.join(sorted(unknown))))
        kwargs = {k: tuple(_as_list(data[k])) for k in _GRID_KEYS if k in data}
        for key in ('reps', 'seed', 'bandwidth', 'sigma_u2', 'tau',
                    'workers', 'mad'):
            if key in data:
                kwargs[key] = data[key]
        if 'estimators' in data:
            kwargs['estimators'] = tuple(_as_list(data['estimators']))
        if 'ci' in data:
            ci = data['ci']
            if not isinstance(ci, dict) or set(ci) - _CI_KEYS:
                raise InvalidInputError(
                    'ci must be an object with keys {}'.format(
                        ', '.join(sorted(_CI_KEYS))))
            kwargs['ci'] = CiConfig(**ci)
        config = cls(**kwargs)
        config.validate()
        return config

    def validate(self):
        if int(self.reps) != self.reps or self.reps < 1:
            raise InvalidInputError('reps must be a positive integer')
        if int(self.seed) != self.seed or self.seed < 0:
            raise InvalidInputError('seed must be a nonnegative integer')
        _unique_configs(self.estimators)
        parse_bandwidth(self.bandwidth)
        if self.mad not in {'classical', 'truth'}:
            raise InvalidInputError(
                'mad must be "classical" or "truth", got {!r}'.format(
                    self.mad))
        self.grid()

    def grid(self):
        return [
            DgpSpec(design=d, pi_rule=r, pi_plus=pp, x_law=law, n=n,
                    sigma_u2=self.sigma_u2, tau=self.tau)
            for d, r, pp, law, n in itertools.product(
                self.design, self.pi_rule, self.pi_plus, self.x_law, self.n)
        ]

    def to_dict(self):
        data = asdict(self)
        data['ci'] = {
            'level': self.ci.level, 'crit_law': self.ci.crit_law.value,
            'variance': self.ci.variance.value,
        }
        data['estimators'] = [
            asdict(FitConfig.from_value(e)) for e in self.estimators]
        for e in data['estimators']:
            e['kernel'] = e['kernel'].value
        data['bandwidth'] = (
            self.bandwidth if isinstance(self.bandwidth, (str, int, float))
            else repr(parse_bandwidth(self.bandwidth)))
        del data['workers']
        return data


def load_config(path):
    try:
        with open(path, 'r') as f:
            data = json.load(f)
    except (OSError, ValueError) as ex:
        raise InvalidInputError(
            'Can\'t read simulation config {path}: {error}'.format(
                path=path, error=str(ex))) from None
    return SimConfig.from_dict(data)


def run_grid(config, workers=None, verbose=False):
    """Run every configuration of the grid; one summary per (configuration,
    estimator)."""
    workers = config.workers if workers is None else workers
    summaries = []
    for spec in config.grid():
        if verbose:
            echo('Simulating {label} ... '.format(label=spec.label))
        try:
            summaries.extend(run_mc(
                spec, config.estimators, ci=config.ci, reps=config.reps,
                seed=config.seed, workers=workers, bandwidth=config.bandwidth,
                mad=config.mad))
        except FrdError:
            if verbose:
                echo_failed()
            raise
        if verbose:
            echo_ok()
    return summaries


SUMMARY_COLUMNS = (
    'design', 'pi_rule', 'pi_plus', 'pi_jump', 'x_law', 'n', 'sigma_u2',
    'tau', 'estimator', 'median_bias', 'mad', 'mad_classical',
    'mad_about_truth', 'rmse', 'mean_bias', 'coverage', 'mean_length',
    'ci_level', 'reps_requested', 'reps_completed', 'reps_flagged_degenerate',
    'reps_near_zero', 'seed',
)


def write_results(summaries, out_dir, config=None):
    """Write results.csv (one row per configuration and estimator) and
    results.json (the same plus metadata and win counts)."""
    os.makedirs(out_dir, exist_ok=True)
    frame = pd.DataFrame(
        [s.to_row() for s in summaries], columns=list(SUMMARY_COLUMNS))
    csv_path = os.path.join(out_dir, 'results.csv')
    frame.to_csv(csv_path, index=False)

    rows = []
    for s in summaries:
        row = s.to_row()
        row['failures'] = s.failures
        rows.append(row)
    payload = {
        'metadata': {
            'versions': versions(),
            'config': None if config is None else config.to_dict(),
        },
        'summaries': rows,
        'tally_best': tally_best(summaries),
    }
    json_path = os.path.join(out_dir, 'results.json')
    with open(json_path, 'w') as f:
        f.write(json_encode(payload, pretty=True) + '\n')
    return csv_path, json_path


def write_sampling_distribution(dist, out_dir, seed=None):
    """estimates.csv and errors.csv (one column per estimator),
    reference.csv (grid and reference densities on the error axis) and
    summary.json."""
    os.makedirs(out_dir, exist_ok=True)
    pd.DataFrame(dist.estimates).to_csv(
        os.path.join(out_dir, 'estimates.csv'), index_label='rep')
    pd.DataFrame(dist.errors).to_csv(
        os.path.join(out_dir, 'errors.csv'), index_label='rep')
    pd.DataFrame({
        'grid': dist.grid, 'normal_density': dist.normal_density,
        'cauchy_density': dist.cauchy_density,
    }).to_csv(os.path.join(out_dir, 'reference.csv'), index=False)
    payload = dist.to_dict()
    payload['metadata'] = {'versions': versions(), 'seed': seed}
    with open(os.path.join(out_dir, 'summary.json'), 'w') as f:
        f.write(json_encode(payload, pretty=True) + '\n')
