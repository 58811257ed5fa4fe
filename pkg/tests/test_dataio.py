import json
import os

import numpy as np
import pandas as pd
import pytest

from frdkit.dataio import (
    RESULT_COLUMNS, DatasetSchema, load_csv, run_cutoffs, write_results,
    write_sample_csv)
from frdkit.exceptions import (
    DataFormatError, InvalidInputError, MissingColumnError,
    NonBinaryTreatmentError)
from frdkit.inference import VarianceSpec
from frdkit.localpoly import Sample
from frdkit.simlab import make_rng

SCHEMA = DatasetSchema('x', 'y', 'd')


def _write(temp_dir, text, name='data.csv'):
    path = os.path.join(temp_dir, name)
    with open(path, 'w') as f:
        f.write(text)
    return path


def _enrolment_sample(seed=0, n=600, cutoffs=(40.0,), first_stage=0.6):
    """Class-size style data: treatment probability jumps at each cutoff."""
    rng = make_rng(seed)
    x = rng.uniform(0.0, 160.0, n)
    above = np.zeros(n)
    for c in cutoffs:
        above += x >= c
    pi = np.clip(0.2 + first_stage * (above % 2), 0.0, 1.0)
    d = (rng.random(n) < pi).astype(float)
    w = rng.standard_normal(n)
    y = 70.0 + 0.05 * x - 2.0 * d + 0.5 * w + rng.standard_normal(n)
    return Sample(x, y, d, w)


def test_schema():
    schema = DatasetSchema('x', 'y', 'd', w=['w1', 'w2'], cluster='school')
    assert schema.w == ('w1', 'w2')
    assert schema.numeric_columns == ('x', 'y', 'd', 'w1', 'w2')
    assert schema.columns[-1] == 'school'
    with pytest.raises(InvalidInputError):
        DatasetSchema('x', 'y', 'x')
    with pytest.raises(InvalidInputError):
        DatasetSchema('x', 'y', 'd', cluster='y')
    with pytest.raises(InvalidInputError):
        DatasetSchema('x', '', 'd')


def test_load_drops_incomplete_rows(temp_dir):
    path = _write(temp_dir, 'x,y,d,note\n0.5,1.0,1,a\n-0.5,,0,b\n0.2,3.5,0,\n')
    loaded = load_csv(path, SCHEMA)
    assert loaded.dropped == 1
    assert loaded.sample.n == 2
    np.testing.assert_array_equal(loaded.sample.x, [0.5, 0.2])
    np.testing.assert_array_equal(loaded.sample.y, [1.0, 3.5])
    assert loaded.sample.w is None
    assert loaded.cluster_ids is None


def test_load_errors(temp_dir):
    path = _write(temp_dir, 'x,y,d\n0.5,1.0,1\n-0.5,2.0,2\n')
    with pytest.raises(NonBinaryTreatmentError) as exc_info:
        load_csv(path, SCHEMA)
    assert '2' in str(exc_info.value)
    assert exc_info.value.exit_code == 6

    path = _write(temp_dir, 'x,y\n0.5,1.0\n')
    with pytest.raises(MissingColumnError) as exc_info:
        load_csv(path, SCHEMA)
    assert exc_info.value.category == 'missing-column'
    assert 'd' in str(exc_info.value)

    path = _write(temp_dir, 'x,y,d\n0.5,1.0,1\n0.7,high,0\n')
    with pytest.raises(DataFormatError) as exc_info:
        load_csv(path, SCHEMA)
    assert 'row 2' in str(exc_info.value)

    path = _write(temp_dir, 'x,y,d\n0.5,,1\n')
    with pytest.raises(DataFormatError):
        load_csv(path, SCHEMA)

    path = _write(temp_dir, '')
    with pytest.raises(DataFormatError):
        load_csv(path, SCHEMA)

    with pytest.raises(DataFormatError):
        load_csv(os.path.join(temp_dir, 'missing.csv'), SCHEMA)


def test_round_trip_is_exact(temp_dir):
    rng = make_rng(3)
    n = 50
    sample = Sample(rng.standard_normal(n) * 1e3, rng.standard_normal(n) / 7,
                    rng.integers(0, 2, n), rng.standard_normal((n, 2)))
    clusters = rng.integers(0, 5, n)
    path = write_sample_csv(sample, os.path.join(temp_dir, 's.csv'),
                            cluster_ids=clusters)

    schema = DatasetSchema('x', 'y', 'd', w=('w1', 'w2'), cluster='cluster')
    loaded = load_csv(path, schema)
    np.testing.assert_array_equal(loaded.sample.x, sample.x)
    np.testing.assert_array_equal(loaded.sample.y, sample.y)
    np.testing.assert_array_equal(loaded.sample.d, sample.d)
    np.testing.assert_array_equal(loaded.sample.w, sample.w)
    np.testing.assert_array_equal(loaded.cluster_ids, clusters)
    assert loaded.dropped == 0

    with pytest.raises(InvalidInputError):
        write_sample_csv(sample, os.path.join(temp_dir, 't.csv'),
                         schema=schema)


def test_sharp_rule_estimators_agree():
    rng = make_rng(4)
    x = rng.uniform(20.0, 60.0, 400)
    d = (x >= 40.0).astype(float)
    y = 5.0 + 0.1 * x + 3.0 * d + 0.5 * rng.standard_normal(400)
    estimators = [{'name': 'std_u', 'kernel': 'uniform', 'lambda': 1},
                  'lambda4', 'lambda1']
    run, = run_cutoffs(Sample(x, y, d), [40.0], [4.0, 6.0, 8.0, 10.0],
                       estimators)
    assert run.estimators == ('std_u', 'lambda4', 'lambda1')
    assert len(run.cells) == 12
    by_h = {}
    for cell in run.cells:
        assert cell.ok
        by_h.setdefault(cell.h, []).append(cell.estimate)
    for values in by_h.values():
        assert max(values) - min(values) < 1e-6


def test_missing_cells_keep_the_schema():
    x = np.array([-0.1, -0.05, 0.05, 0.1, -3.0, 3.0])
    d = np.array([0.0, 1.0, 1.0, 0.0, 0.0, 1.0])
    sample = Sample(x, x + d, d)
    run, = run_cutoffs(sample, [0.0], [0.15, 'rot'], ['lambda4', 'standard'])

    tiny = [c for c in run.cells if c.h == 0.15]
    assert [c.status for c in tiny] == ['missing', 'missing']
    assert tiny[0].n_h == 4
    assert tiny[0].reason.startswith('insufficient-sample: ')
    assert np.isnan(tiny[0].estimate)

    table = run.table()
    assert list(table.columns) == list(RESULT_COLUMNS)
    assert len(table) == 4
    # The rule of thumb can't put 4 points on each side
    rot = table[table['h'].isna()]
    assert list(rot['status']) == ['missing', 'missing']
    assert rot['reason'].str.startswith('insufficient-sample').all()

    wide = run.wide_table()
    assert list(wide.columns) == [
        'h', 'n_h', 'lambda4', 'lambda4_ci_lo', 'lambda4_ci_hi',
        'standard', 'standard_ci_lo', 'standard_ci_hi']
    assert len(wide) == 2


def test_run_cutoffs_over_several_cutoffs():
    sample = _enrolment_sample(cutoffs=(40.0, 80.0, 120.0), n=3000)
    runs = run_cutoffs(sample, [120.0, 40.0, 80.0], [10.0, 14.0],
                       ['standard', 'lambda4', 'iv'], level=0.9)
    assert [r.cutoff for r in runs] == [40.0, 80.0, 120.0]
    for run in runs:
        assert run.bandwidths == (10.0, 14.0)
        for cell in run.cells:
            assert cell.ok, cell.reason
            assert cell.ci_lo < cell.estimate < cell.ci_hi
            assert cell.n_h == run.windows[cell.h]
        lam4 = [c for c in run.cells if c.estimator == 'lambda4']
        assert all(0.0 < c.lam < 1.0 for c in lam4)


def test_run_cutoffs_with_clusters():
    sample = _enrolment_sample(n=800)
    clusters = np.arange(800) // 4
    runs = run_cutoffs(sample, [40.0], [12.0], ['lambda4'],
                       variance=VarianceSpec('hc1', clusters))
    cell, = runs[0].cells
    assert cell.ok
    plain, = run_cutoffs(sample, [40.0], [12.0], ['lambda4'])[0].cells
    assert cell.estimate == plain.estimate
    assert cell.std_error != plain.std_error

    with pytest.raises(InvalidInputError):
        run_cutoffs(sample, [40.0], [12.0], ['lambda4'],
                    variance=VarianceSpec('hc1', clusters[:10]))


def test_run_cutoffs_rejects_bad_requests():
    sample = _enrolment_sample()
    with pytest.raises(InvalidInputError):
        run_cutoffs(sample, [], [10.0], ['lambda4'])
    with pytest.raises(InvalidInputError):
        run_cutoffs(sample, [40.0], [10.0], ['lambda4', 'lambda4'])
    with pytest.raises(InvalidInputError):
        run_cutoffs(sample, [40.0], ['wide'], ['lambda4'])


def test_write_results_is_deterministic(temp_dir):
    sample = _enrolment_sample()
    runs = run_cutoffs(sample, [40.0], [10.0, 'rot'], ['standard', 'lambda4'])
    first = os.path.join(temp_dir, 'a')
    second = os.path.join(temp_dir, 'b')
    write_results(runs, first, metadata={'data': 'fixture'})
    csv_path, json_path = write_results(
        runs, second, metadata={'data': 'fixture'})

    for name in ('results.csv', 'results.json', 'cutoff_40.csv'):
        with open(os.path.join(first, name), 'rb') as f:
            a = f.read()
        with open(os.path.join(second, name), 'rb') as f:
            b = f.read()
        assert a == b

    flat = pd.read_csv(csv_path)
    assert list(flat.columns) == list(RESULT_COLUMNS)
    assert len(flat) == 4
    with open(json_path) as f:
        payload = json.load(f)
    assert payload['metadata']['data'] == 'fixture'
    assert 'frdkit' in payload['metadata']['versions']
    assert payload['runs'][0]['cutoff'] == 40.0
    assert len(payload['runs'][0]['cells']) == 4


def test_wide_table_keeps_one_row_per_rule():
    sample = _enrolment_sample()
    run, = run_cutoffs(sample, [40.0], [10.0, 'rot', 10],
                       ['standard', 'lambda4'])
    assert run.bandwidths[0] == run.bandwidths[2] == 10.0

    wide = run.wide_table()
    assert len(wide) == 3
    assert list(wide['h'])[0] == list(wide['h'])[2] == 10.0
    first, second, third = wide.to_dict('records')
    for name in ('standard', 'lambda4'):
        assert first[name] == third[name]
        assert first[name + '_ci_lo'] == third[name + '_ci_lo']
    np.testing.assert_array_equal(
        [second['standard'], second['lambda4']],
        [c.estimate for c in run.cells[2:4]])


def test_close_cutoffs_get_their_own_files(temp_dir):
    sample = _enrolment_sample(n=1200)
    runs = run_cutoffs(sample, [40.0000002, 40.0000001, 40.0], [12.0],
                       ['lambda4'])
    write_results(runs, temp_dir)
    names = sorted(n for n in os.listdir(temp_dir)
                   if n.startswith('cutoff_'))
    assert len(names) == 3
    assert 'cutoff_40.csv' in names
    for run in runs:
        frame = pd.read_csv(os.path.join(
            temp_dir, 'cutoff_{:.17g}.csv'.format(run.cutoff)))
        assert len(frame) == 1
        assert frame['lambda4'][0] == pytest.approx(run.cells[0].estimate)
