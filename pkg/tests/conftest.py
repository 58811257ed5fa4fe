import os
import posixpath
import shutil
import subprocess
import sys
import tempfile
import textwrap
from collections import namedtuple

import numpy as np
import pytest

from frdkit.localpoly import Sample

BASE_DIR = posixpath.realpath(posixpath.dirname(posixpath.dirname(__file__)))


def pytest_runtest_setup(item):
    is_slow = item.get_closest_marker('slow') is not None
    if is_slow and not os.environ.get('FRDKIT_SLOW'):
        pytest.skip('set FRDKIT_SLOW=1 to run desk-scale simulations')


def _make_temp_dir():
    return posixpath.realpath(tempfile.mkdtemp(prefix='frdkit_pytest_'))


@pytest.fixture(scope='function')
def temp_dir(request):
    path = _make_temp_dir()

    def teardown():
        shutil.rmtree(path)

    request.addfinalizer(teardown)

    return path


def random_instance(rng, n_plus, n_minus, x0=0.0, covariates=0,
                    first_stage=0.6):
    """A sample with every point strictly inside the window h = 1 around x0,
    and treated and untreated units on both sides."""
    u_plus = rng.uniform(0.0, 0.95, n_plus)
    u_minus = -rng.uniform(0.02, 0.95, n_minus)
    u = np.concatenate([u_plus, u_minus])
    pi_minus = 0.5 * (1.0 - first_stage)
    pi = np.where(u >= 0, pi_minus + first_stage, pi_minus)
    d = (rng.random(len(u)) < pi).astype(float)
    d[:2] = (1.0, 0.0)
    d[n_plus:n_plus + 2] = (0.0, 1.0)
    w = None
    y = 1.0 + u + 0.5 * u ** 2 + 0.7 * d + 0.3 * rng.standard_normal(len(u))
    if covariates:
        w = rng.standard_normal((len(u), covariates))
        y = y + w @ np.linspace(0.5, 1.0, covariates)
    return Sample(x0 + u, y, d, w)


@pytest.fixture(scope='function')
def instance():
    """Factory for random FRD samples (see :func:`random_instance`)."""
    return random_instance


PyScriptResult = namedtuple(
    'PyScriptResult', ['stdout', 'stderr', 'pid', 'returncode'])


class PyScript(object):

    def __init__(self, code):
        self.dirname = _make_temp_dir()
        self.basename = 'script.py'
        self.path = posixpath.join(self.dirname, self.basename)
        with open(self.path, 'wb') as f:
            f.write(textwrap.dedent(code.lstrip('\n')).encode('utf-8'))

        self.process = None

    def start(self, *args):
        if self.process is not None:
            raise RuntimeError(
                'Process already started (PID {})'.format(self.process.pid))

        subenv = os.environ.copy()
        subenv['PYTHONUNBUFFERED'] = 'x'
        subenv['PYTHONPATH'] = os.pathsep.join(
            p for p in (BASE_DIR, subenv.get('PYTHONPATH')) if p)

        self.process = subprocess.Popen(
            [sys.executable, self.path] + list(args), cwd=self.dirname,
            env=subenv, stdout=subprocess.PIPE, stderr=subprocess.PIPE)

        return self.process

    def join(self):
        stdout, stderr = self.process.communicate()
        result = PyScriptResult(
            stdout, stderr, self.process.pid, self.process.returncode)
        self.process = None
        return result

    def run(self, *args):
        self.start(*args)
        return self.join()

    def teardown(self):
        if self.process is not None:
            self.process.kill()
            self.process.communicate()
        shutil.rmtree(self.dirname)


@pytest.fixture(scope='function')
def pyscript(request):
    pfs = []

    def factory(code):
        pf = PyScript(code)
        pfs.append(pf)
        return pf

    def teardown():
        for pf in pfs:
            pf.teardown()

    request.addfinalizer(teardown)

    return factory
