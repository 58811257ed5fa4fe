import math
from fractions import Fraction

import numpy as np
import pytest
from scipy import stats

from frdkit.exceptions import DegenerateDenominatorError, InvalidInputError
from frdkit.kernels import KernelKind
from frdkit.localpoly import frd_standard, standard_parts
from frdkit.simlab import DgpSpec, make_rng
from frdkit.theorycheck import (
    TruncatedMultinomialSpec, denominator_probe, discrete_pmf, get_check,
    in_support, list_checks, local_constant_denominator_pmf,
    make_symmetric_sample, marginal, multinomial, symmetry,
    truncated_binomial_marginal, truncated_multinomial_pmf,
    truncation_constant)

SPECS = [
    TruncatedMultinomialSpec(6, 1 / 3, 1 / 3, 1, 1),
    TruncatedMultinomialSpec(20, 0.3, 0.5, 3, 2),
    TruncatedMultinomialSpec(15, 0.1, 0.2, -1, 4),
    TruncatedMultinomialSpec(12, 0.4, 0.6, 2, 2),
]


def _support(spec):
    return [(a, b) for a in range(spec.n + 1) for b in range(spec.n + 1 - a)
            if in_support(spec, a, b)]


def _plain_multinomial(spec, a, b):
    return stats.multinomial.pmf(
        [spec.n - a - b, a, b], spec.n, [spec.p0, spec.p1, spec.p2])


@pytest.mark.parametrize('kwargs', [
    {'n': 5, 'p1': 0.7, 'p2': 0.5},
    {'n': 5, 'p1': -0.1, 'p2': 0.5},
    {'n': 5, 'p1': 0.2, 'p2': 0.2, 'alpha1': 3, 'alpha2': 3},
    {'n': 5, 'p1': 0.2, 'p2': 0.2, 'alpha1': -2},
    {'n': 5.5, 'p1': 0.2, 'p2': 0.2},
    {'n': -1, 'p1': 0.2, 'p2': 0.2},
])
def test_spec_validation(kwargs):
    with pytest.raises(InvalidInputError):
        TruncatedMultinomialSpec(**kwargs)


def test_untruncated_is_plain_multinomial():
    spec = TruncatedMultinomialSpec(8, 0.25, 0.35)
    assert not spec.truncated
    assert truncation_constant(spec) == 1.0
    for a, b in [(0, 0), (2, 3), (8, 0), (4, 4)]:
        assert truncated_multinomial_pmf(spec, a, b) == pytest.approx(
            _plain_multinomial(spec, a, b), rel=1e-12)
    for m in range(9):
        assert truncated_binomial_marginal(spec, 1, m) == pytest.approx(
            stats.binom.pmf(m, 8, 0.25), rel=1e-12, abs=1e-300)


@pytest.mark.parametrize('spec', SPECS)
def test_pmf_normalizes(spec):
    kappa = truncation_constant(spec)
    assert 0.0 < kappa <= 1.0
    total = math.fsum(truncated_multinomial_pmf(spec, a, b, kappa)
                      for a, b in _support(spec))
    assert abs(total - 1.0) < 1e-12


@pytest.mark.parametrize('spec', SPECS)
def test_kappa_matches_enumeration(spec):
    brute = math.fsum(_plain_multinomial(spec, a, b) for a, b in _support(spec))
    assert truncation_constant(spec) == pytest.approx(brute, rel=1e-12)


def test_brute_force_value():
    spec = SPECS[0]
    pairs = _support(spec)
    assert len(pairs) == 6
    weights = {pair: _plain_multinomial(spec, *pair) for pair in pairs}
    expected = weights[(2, 2)] / sum(weights.values())
    assert truncated_multinomial_pmf(spec, 2, 2) == pytest.approx(
        expected, rel=1e-12)
    assert truncated_multinomial_pmf(spec, 1, 2) == 0.0
    assert truncated_multinomial_pmf(spec, 4, 3) == 0.0
    with pytest.raises(InvalidInputError):
        truncated_multinomial_pmf(spec, 2.5, 2)


@pytest.mark.parametrize('spec', SPECS)
@pytest.mark.parametrize('cell', [1, 2])
def test_marginal_matches_joint(spec, cell):
    total = 0.0
    for m in range(spec.n + 1):
        if cell == 1:
            joint = math.fsum(truncated_multinomial_pmf(spec, m, b)
                              for b in range(spec.n + 1 - m))
        else:
            joint = math.fsum(truncated_multinomial_pmf(spec, a, m)
                              for a in range(spec.n + 1 - m))
        got = truncated_binomial_marginal(spec, cell, m)
        assert got == pytest.approx(joint, rel=1e-10, abs=1e-15)
        total += got
    assert abs(total - 1.0) < 1e-12
    with pytest.raises(InvalidInputError):
        truncated_binomial_marginal(spec, 3, 1)


def test_large_n_stays_finite():
    spec = TruncatedMultinomialSpec(10000, 0.3, 0.3, 2900, 2900)
    kappa = truncation_constant(spec)
    assert 0.0 < kappa <= 1.0
    value = truncated_multinomial_pmf(spec, 3000, 3000, kappa)
    assert 0.0 < value < 1.0
    assert truncated_binomial_marginal(spec, 1, 3000, kappa) > value


def test_symmetric_sample_by_hand():
    sample = make_symmetric_sample(2, [0.1, 0.2], [1, 0])
    np.testing.assert_allclose(sample.x, [0.1, 0.2, -0.1, -0.2])
    np.testing.assert_array_equal(sample.d, [1, 0, 1, 0])
    np.testing.assert_allclose(sample.y, [1.1, 0.2, 0.9, -0.2])

    shifted = make_symmetric_sample(2, [0.1, 0.2], [1, 0], x0=5.0)
    np.testing.assert_allclose(shifted.x, [5.1, 5.2, 4.9, 4.8])


@pytest.mark.parametrize('kind', list(KernelKind))
@pytest.mark.parametrize('p', [0, 1, 2])
def test_symmetric_sample_has_zero_jump(kind, p):
    offsets = np.array([0.05, 0.2, 0.33, 0.5, 0.61, 0.9])
    pattern = [1, 0, 0, 1, 1, 0]
    sample = make_symmetric_sample(6, offsets, pattern, x0=1.5)
    assert abs(standard_parts(sample, 1.5, 1.0, p, kind).tau_d) < 1e-10


def test_perturbed_symmetry_breaks():
    offsets = np.array([0.05, 0.2, 0.33, 0.5, 0.61, 0.9])
    sample = make_symmetric_sample(6, offsets, [1, 0, 0, 1, 1, 0])
    sample.x[0] += 1e-3
    tau_d = standard_parts(sample, 0.0, 1.0, 1, KernelKind.TRIANGULAR).tau_d
    assert abs(tau_d) > 1e-8


def _random_mirrored(rng, dyadic):
    m = int(rng.integers(8, 21))
    pattern = rng.permutation(np.arange(m) % 2)
    if dyadic:
        # Grid values keep x0 +/- offset exact, so both sides mirror bitwise
        h = 2.0 ** int(rng.integers(-3, 4))
        x0 = int(rng.integers(-128, 129)) / 8.0
        offsets = h * (rng.choice(60, m, replace=False) + 1) / 64.0
    else:
        h = float(np.exp(rng.uniform(np.log(0.5), np.log(5.0))))
        x0 = float(rng.uniform(-2.0, 2.0))
        offsets = h * rng.uniform(0.05, 0.95, m)
    return make_symmetric_sample(m, offsets, pattern, x0=x0), x0, h


@pytest.mark.parametrize('kind', list(KernelKind))
@pytest.mark.parametrize('p', [0, 1, 2])
def test_mirrored_samples_are_degenerate(kind, p):
    rng = make_rng(31, 10 * p + list(KernelKind).index(kind))
    for _ in range(100):
        sample, x0, h = _random_mirrored(rng, dyadic=True)
        assert standard_parts(sample, x0, h, p, kind).tau_d == 0.0
        with pytest.raises(DegenerateDenominatorError):
            frd_standard(sample, x0, h, p, kind)

    for _ in range(100):
        sample, x0, h = _random_mirrored(rng, dyadic=False)
        assert abs(standard_parts(sample, x0, h, p, kind).tau_d) < 1e-10
        try:
            result = frd_standard(sample, x0, h, p, kind)
        except DegenerateDenominatorError:
            continue
        assert result.near_zero_denominator


@pytest.mark.parametrize('args', [
    (2, [0.1, 0.2], [1, 1]),
    (2, [0.1, -0.2], [1, 0]),
    (2, [0.1], [1, 0]),
    (0, [], []),
    (2, [0.1, 0.2], [1, 2]),
])
def test_symmetric_sample_errors(args):
    with pytest.raises(InvalidInputError):
        make_symmetric_sample(*args)


def test_discrete_denominator_pmf():
    pmf = local_constant_denominator_pmf(1, 1, 0.6, 0.4)
    assert pmf.support == (Fraction(-1), Fraction(0), Fraction(1))
    np.testing.assert_allclose(pmf.probabilities, [0.16, 0.48, 0.36])
    assert pmf.atom_at_zero == pytest.approx(0.48)

    pmf = local_constant_denominator_pmf(4, 6, 0.7, 0.3)
    assert math.fsum(pmf.probabilities) == pytest.approx(1.0, abs=1e-12)
    mean = math.fsum(float(v) * p
                     for v, p in zip(pmf.support, pmf.probabilities))
    assert mean == pytest.approx(0.4, abs=1e-12)
    assert Fraction(1, 12) in pmf.support

    assert local_constant_denominator_pmf(3, 3, 1.0, 0.0).atom_at_zero == 0.0
    with pytest.raises(InvalidInputError):
        local_constant_denominator_pmf(0, 3, 0.5, 0.5)
    with pytest.raises(InvalidInputError):
        local_constant_denominator_pmf(3, 3, 1.5, 0.5)


def test_denominator_probe():
    spec = DgpSpec(pi_plus=0.6, n=300)
    result = denominator_probe(
        spec, reps=1000, seed=3, workers=1,
        eps_grid=(0.5, 0.05, float('inf')))
    assert result.eps == (0.05, 0.5, float('inf'))
    assert result.kept + result.excluded == 1000
    assert list(result.probability) == sorted(result.probability)
    assert result.probability[-1] == 1.0
    for p, lo, hi in zip(result.probability, result.ci_lo, result.ci_hi):
        assert lo <= p <= hi
    rows = result.to_dict()['rows']
    assert [r['eps'] for r in rows] == [0.05, 0.5, float('inf')]


def test_denominator_probe_errors():
    with pytest.raises(InvalidInputError):
        denominator_probe(DgpSpec(), reps=999)
    with pytest.raises(InvalidInputError):
        denominator_probe(DgpSpec(), reps=1000, eps_grid=(0.0, 0.1))
    with pytest.raises(InvalidInputError):
        denominator_probe(DgpSpec(), reps=1000, eps_grid=())


@pytest.mark.slow
def test_weak_first_stage_puts_mass_near_zero():
    result = denominator_probe(
        DgpSpec(pi_plus=0.6, n=300), reps=10000, seed=0, eps_grid=(0.05,))
    assert result.ci_lo[0] > 0.0


def test_checks_are_exposed():
    assert list_checks() == [
        'discrete-pmf', 'marginal', 'multinomial', 'probe', 'symmetry']
    assert get_check('discrete-pmf') is discrete_pmf
    assert get_check('symmetry') is symmetry
    for name in ('truncation-constant', 'nope'):
        with pytest.raises(InvalidInputError) as exc_info:
            get_check(name)
        assert 'Invalid check' in str(exc_info.value)


def test_check_outputs():
    out = multinomial(n=6, p1=1 / 3, p2=1 / 3, alpha1=1, alpha2=1)
    assert len(out['pmf']) == 6
    assert out['total'] == pytest.approx(1.0, abs=1e-12)
    out = multinomial(n=6, p1=1 / 3, p2=1 / 3, n1=2, n2=2)
    assert out['kappa'] == 1.0
    assert out['probability'] == pytest.approx(90 / 729)

    out = marginal(n=10, p1=0.3, p2=0.3, alpha1=1, alpha2=1, cell=2)
    assert out['cell'] == 2
    assert out['pmf'][0]['m'] == 2
    assert out['total'] == pytest.approx(1.0, abs=1e-12)

    out = symmetry(m=8, p=2, kernel='epanechnikov', seed=5, x0=-1.0)
    assert abs(out['tau_d']) < 1e-10
    assert out['pi_plus'] == pytest.approx(out['pi_minus'], abs=1e-10)
    with pytest.raises(InvalidInputError):
        symmetry(m=2, p=2)

    out = discrete_pmf(n_plus=2, n_minus=2, pi_plus=0.5, pi_minus=0.5)
    assert out['atom_at_zero'] == pytest.approx(6 / 16)
    assert out['pmf'][0]['exact'] == '-1'
