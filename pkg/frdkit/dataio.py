"""Reading datasets, running estimators over cutoffs and bandwidths, and
writing the results"""

import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import pandas as pd

from ._utils import json_encode, versions
from .bandwidth import parse_bandwidth
from .estimators import FitConfig, estimate
from .exceptions import (
    DataFormatError, FrdError, InvalidInputError, MissingColumnError,
    NonBinaryTreatmentError)
from .inference import CritLaw, VarianceSpec, infer
from .localpoly import Sample, split_effective

RESULT_COLUMNS = (
    'cutoff', 'h', 'n_h', 'estimator', 'estimate', 'std_error', 'ci_lo',
    'ci_hi', 'lambda', 'status', 'reason',
)


@dataclass(frozen=True)
class DatasetSchema:
    """Which CSV columns hold the running variable, outcome, treatment,
    covariates and (optionally) cluster ids. Rows missing any of them are
    dropped."""
    x: str
    y: str
    d: str
    w: tuple = ()
    cluster: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, 'w', tuple(self.w or ()))
        names = self.columns
        if not all(isinstance(n, str) and n for n in names):
            raise InvalidInputError('Column names must be non-empty strings')
        if len(set(names)) != len(names):
            raise InvalidInputError('A column can only play one role')

    @property
    def numeric_columns(self):
        return (self.x, self.y, self.d) + self.w

    @property
    def columns(self):
        cluster = () if self.cluster is None else (self.cluster,)
        return self.numeric_columns + cluster


@dataclass(frozen=True)
class LoadedData:
    sample: Sample
    schema: DatasetSchema
    cluster_ids: Optional[np.ndarray] = None
    dropped: int = 0


def load_csv(path, schema):
    """Read a CSV with a header row into a :class:`LoadedData`."""
    try:
        frame = pd.read_csv(path, float_precision='round_trip')
    except (OSError, UnicodeDecodeError, pd.errors.ParserError,
            pd.errors.EmptyDataError) as ex:
        raise DataFormatError(
            'Can\'t read {path}: {error}'.format(
                path=path, error=str(ex))) from None

    missing = [c for c in schema.columns if c not in frame.columns]
    if missing:
        raise MissingColumnError(
            'Missing column(s) in {path}: {cols}'.format(
                path=path, cols=', '.join(missing)))

    frame = frame[list(schema.columns)].copy()
    for col in schema.numeric_columns:
        raw = frame[col]
        values = pd.to_numeric(raw, errors='coerce')
        bad = values.isna() & raw.notna()
        if bad.any():
            row = int(np.flatnonzero(bad.to_numpy())[0])
            raise DataFormatError(
                'Column "{col}" has a non-numeric value {value!r} on data '
                'row {row}'.format(col=col, value=raw.iloc[row], row=row + 1))
        frame[col] = values.astype(float)

    n_before = len(frame)
    frame = frame.dropna()
    dropped = n_before - len(frame)
    if frame.empty:
        raise DataFormatError(
            'No complete rows left in {path}'.format(path=path))

    numeric = frame[list(schema.numeric_columns)].to_numpy()
    if not np.all(np.isfinite(numeric)):
        raise DataFormatError('Numeric columns must be finite')

    d = frame[schema.d].to_numpy()
    if not np.all((d == 0.0) | (d == 1.0)):
        bad_values = sorted(set(d[(d != 0.0) & (d != 1.0)].tolist()))
        raise NonBinaryTreatmentError(
            'Treatment column "{col}" must be 0 or 1, found {values}'.format(
                col=schema.d, values=', '.join(
                    '{:g}'.format(v) for v in bad_values[:5])))

    w = frame[list(schema.w)].to_numpy() if schema.w else None
    sample = Sample(
        frame[schema.x].to_numpy(), frame[schema.y].to_numpy(), d, w)
    clusters = None
    if schema.cluster is not None:
        clusters = frame[schema.cluster].to_numpy()
    return LoadedData(
        sample=sample, schema=schema, cluster_ids=clusters, dropped=dropped)


def write_sample_csv(sample, path, schema=None, cluster_ids=None):
    """Write a sample as CSV; floats are written in round-trip form."""
    if schema is None:
        w_names = () if sample.w is None else tuple(
            'w{}'.format(j + 1) for j in range(sample.w.shape[1]))
        schema = DatasetSchema(
            'x', 'y', 'd', w=w_names,
            cluster=None if cluster_ids is None else 'cluster')
    columns = {schema.x: sample.x, schema.y: sample.y, schema.d: sample.d}
    for j, name in enumerate(schema.w):
        columns[name] = sample.w[:, j]
    if schema.cluster is not None:
        if cluster_ids is None:
            raise InvalidInputError('Schema names a cluster column but no '
                                    'cluster ids were given')
        columns[schema.cluster] = cluster_ids
    pd.DataFrame(columns).to_csv(path, index=False)
    return path


@dataclass(frozen=True)
class CellResult:
    """One (cutoff, bandwidth, estimator) cell. Missing cells keep NaNs
    and say why in ``reason``."""
    cutoff: float
    h: float
    n_h: int
    estimator: str
    estimate: float = float('nan')
    std_error: float = float('nan')
    ci_lo: float = float('nan')
    ci_hi: float = float('nan')
    lam: float = float('nan')
    status: str = 'ok'
    reason: str = ''

    @property
    def ok(self):
        return self.status == 'ok'

    def to_row(self):
        return {
            'cutoff': self.cutoff, 'h': self.h, 'n_h': self.n_h,
            'estimator': self.estimator, 'estimate': self.estimate,
            'std_error': self.std_error, 'ci_lo': self.ci_lo,
            'ci_hi': self.ci_hi, 'lambda': self.lam, 'status': self.status,
            'reason': self.reason,
        }


@dataclass(frozen=True)
class CutoffRun:
    cutoff: float
    bandwidths: tuple
    estimators: tuple
    cells: list = field(default_factory=list)
    # Observations within h of the cutoff, per bandwidth
    windows: dict = field(default_factory=dict)

    def table(self):
        return pd.DataFrame(
            [c.to_row() for c in self.cells], columns=list(RESULT_COLUMNS))

    def wide_table(self):
        """One row per bandwidth rule: h, the window size, and the estimate
        and interval of every estimator. Rules that resolve to the same h
        keep their own rows."""
        rows = []
        k = len(self.estimators)
        for i, h in enumerate(self.bandwidths):
            row = {'h': h, 'n_h': self.windows.get(h, 0)}
            for cell in self.cells[i * k:(i + 1) * k]:
                row[cell.estimator] = cell.estimate
                row[cell.estimator + '_ci_lo'] = cell.ci_lo
                row[cell.estimator + '_ci_hi'] = cell.ci_hi
            rows.append(row)
        columns = ['h', 'n_h']
        for name in self.estimators:
            columns += [name, name + '_ci_lo', name + '_ci_hi']
        return pd.DataFrame(rows, columns=columns)


def _window_size(sample, cutoff, h):
    if not np.isfinite(h):
        return 0
    return split_effective(sample, cutoff, h).n_h


def _fit_cell(sample, cutoff, h, config, spec, level, crit_law):
    try:
        fit = estimate(sample, cutoff, h, config)
        inf = infer(fit, spec.restrict(fit.data.rows), level, crit_law)
    except FrdError as ex:
        return CellResult(
            cutoff=cutoff, h=h, n_h=_window_size(sample, cutoff, h),
            estimator=config.name, status='missing',
            reason='{}: {}'.format(ex.category, ex))
    return CellResult(
        cutoff=cutoff, h=h, n_h=fit.data.n_h, estimator=config.name,
        estimate=inf.estimate, std_error=inf.std_error, ci_lo=inf.ci.lo,
        ci_hi=inf.ci.hi, lam=fit.result.lambda_used)


def run_cutoffs(sample, cutoffs, bandwidths, estimators, level=0.95,
                crit_law=CritLaw.STUDENT_T, variance=None):
    """Fit every estimator at every cutoff and bandwidth.

    ``bandwidths`` may mix fixed values and rules; a rule is resolved per
    cutoff. ``variance`` carries cluster ids for the whole sample, if any.
    Failures are recorded as missing cells.
    """
    configs = [FitConfig.from_value(e) for e in estimators]
    if not configs or not cutoffs or not bandwidths:
        raise InvalidInputError(
            'Need at least one cutoff, bandwidth and estimator')
    names = [c.name for c in configs]
    if len(set(names)) != len(names):
        raise InvalidInputError('Estimator names must be unique')
    rules = [parse_bandwidth(b) for b in bandwidths]
    spec = variance or VarianceSpec()
    if spec.clustered and len(spec.cluster_ids) != sample.n:
        raise InvalidInputError(
            'Need one cluster id per observation ({} != {})'.format(
                len(spec.cluster_ids), sample.n))
    p_max = max(c.p for c in configs)

    runs = []
    for cutoff in sorted(float(c) for c in cutoffs):
        cells, hs, windows = [], [], {}
        for rule in rules:
            try:
                h = float(rule.select(sample, cutoff, p=p_max))
            except FrdError as ex:
                h = float('nan')
                cells.extend(
                    CellResult(cutoff=cutoff, h=h, n_h=0, estimator=c.name,
                               status='missing',
                               reason='{}: {}'.format(ex.category, ex))
                    for c in configs)
                hs.append(h)
                continue
            hs.append(h)
            windows[h] = _window_size(sample, cutoff, h)
            cells.extend(
                _fit_cell(sample, cutoff, h, c, spec, level, crit_law)
                for c in configs)
        runs.append(CutoffRun(
            cutoff=cutoff, bandwidths=tuple(hs), estimators=tuple(names),
            cells=cells, windows=windows))
    return runs


def write_results(runs, out_dir, metadata=None):
    """Write results.csv (long form, fixed columns), results.json, and one
    wide table per cutoff."""
    os.makedirs(out_dir, exist_ok=True)
    frames = [run.table() for run in runs]
    flat = (pd.concat(frames, ignore_index=True) if frames
            else pd.DataFrame(columns=list(RESULT_COLUMNS)))
    csv_path = os.path.join(out_dir, 'results.csv')
    flat.to_csv(csv_path, index=False)

    payload = {
        'metadata': dict(metadata or {}, versions=versions()),
        'runs': [],
    }
    for run in runs:
        wide = run.wide_table()
        wide.to_csv(os.path.join(
            out_dir, 'cutoff_{:.17g}.csv'.format(run.cutoff)), index=False)
        payload['runs'].append({
            'cutoff': run.cutoff,
            'cells': [c.to_row() for c in run.cells],
        })
    json_path = os.path.join(out_dir, 'results.json')
    with open(json_path, 'w') as f:
        f.write(json_encode(payload, pretty=True) + '\n')
    return csv_path, json_path
