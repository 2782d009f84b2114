import importlib
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mimo_secrecy import _pykernels, kernels

compiled = pytest.mark.skipif("compiled" not in kernels.available_backends(),
                              reason="compiled kernels not built")

arrays = st.lists(st.tuples(st.floats(0.0, 10.0), st.floats(0.01, 5.0)),
                  min_size=1, max_size=8)


@pytest.fixture
def restore_backend():
    name = kernels.backend()
    yield
    kernels.use_backend(name)


def test_python_backend_selectable(restore_backend):
    kernels.use_backend("python")
    assert kernels.backend() == "python"
    assert kernels.secular_sum([4.0], [1.0], 1.0) == pytest.approx(1.0)


def test_unknown_backend():
    with pytest.raises(ValueError):
        kernels.use_backend("fortran")


def test_env_var_forces_fallback():
    code = "from mimo_secrecy import kernels; print(kernels.backend())"
    env = dict(os.environ, MIMO_SECRECY_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env,
                         capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def test_secular_root_single_term():
    # 4 / (x + 1)^2 = 1  ->  x = 1
    for mod in (_pykernels,):
        x = mod.secular_root(np.array([4.0]), np.array([1.0]), 1.0, 1e-12, 1e-15)
        assert x == pytest.approx(1.0, rel=1e-12)


def test_rational_root_single_term():
    # 1 + 1 / (1 - mu)^2 = 5  ->  mu = 1/2
    x = _pykernels.rational_root(np.array([1.0]), np.array([1.0]), 1.0, 5.0,
                                 0.0, 1.0 - 1e-9, 1e-14)
    assert x == pytest.approx(0.5, rel=1e-12)


@compiled
@settings(max_examples=50, deadline=None)
@given(arrays, st.floats(0.1, 3.0))
def test_backends_agree_secular(terms, target):
    from mimo_secrecy import _ckernels
    w = np.array([t[0] for t in terms])
    s = np.array([t[1] for t in terms])
    assert _ckernels.secular_sum(w, s, 0.3) == pytest.approx(_pykernels.secular_sum(w, s, 0.3), rel=1e-14)
    if _pykernels.secular_sum(w, s, 1e-12) <= target:
        return
    a = _pykernels.secular_root(w, s, target, 1e-12, 1e-13)
    b = _ckernels.secular_root(w, s, target, 1e-12, 1e-13)
    assert a == pytest.approx(b, rel=1e-10, abs=1e-12)
    assert _pykernels.secular_sum(w, s, a) == pytest.approx(target, rel=1e-10)


@compiled
@settings(max_examples=50, deadline=None)
@given(arrays, st.floats(0.0, 2.0), st.floats(0.1, 3.0))
def test_backends_agree_rational(terms, const, excess):
    from mimo_secrecy import _ckernels
    a = np.array([t[0] for t in terms]) + 0.01
    lam = np.array([t[1] for t in terms])
    hi = (1.0 / lam.max()) * (1 - 1e-9)
    target = const + a.sum() + excess
    x = _pykernels.rational_root(a, lam, const, target, 0.0, hi, 1e-12)
    y = _ckernels.rational_root(a, lam, const, target, 0.0, hi, 1e-12)
    assert x == pytest.approx(y, rel=1e-10)
    assert _ckernels.rational_value(a, lam, const, x) == pytest.approx(target, rel=1e-9)


def test_benchmark_script_runs():
    root = os.path.dirname(os.path.dirname(__file__))
    script = os.path.join(root, "benchmarks", "bench_kernels.py")
    out = subprocess.run([sys.executable, script, "--quick"], capture_output=True,
                         text=True, check=True)
    assert "python" in out.stdout
