from __future__ import annotations

import importlib.util
from pathlib import Path

import numpy as np
import pytest

from riskcal import kernels

needs_ext = pytest.mark.skipif(not kernels.compiled_available(), reason="extension not built")


@pytest.fixture
def restore_backend():
    before = kernels.backend_name()
    yield
    kernels.set_backend(before)


def test_default_prefers_compiled():
    assert kernels.backend_name() == ("compiled" if kernels.compiled_available() else "python")


def test_switching(restore_backend):
    kernels.set_backend("python")
    assert kernels.backend_name() == "python"
    with pytest.raises(ValueError):
        kernels.set_backend("fortran")


def test_python_backend_end_to_end(restore_backend):
    from riskcal.bounds import ucb_wsr

    x = np.random.default_rng(2).beta(1, 9, 400)
    kernels.set_backend("python")
    py = ucb_wsr(x, 0.1).value
    if kernels.compiled_available():
        kernels.set_backend("compiled")
        assert ucb_wsr(x, 0.1).value == pytest.approx(py, abs=1e-9)


@needs_ext
def test_betting_fractions_agree():
    x = np.random.default_rng(3).random(300)
    np.testing.assert_allclose(kernels._compiled.betting_fractions(x, 0.1),
                               kernels._kernels_py.betting_fractions(x, 0.1), rtol=1e-12)


@needs_ext
def test_long_sequence_no_underflow():
    # thousands of shrinking factors would underflow a plain product
    x = np.r_[np.ones(5000), np.zeros(20_000)]
    a = kernels._compiled.wsr_ucb_rows(x[None, :].copy(), 0.1)
    b = kernels._kernels_py.wsr_ucb_rows(x[None, :].copy(), 0.1)
    assert a[0][0] == pytest.approx(b[0][0], abs=1e-9)


@needs_ext
def test_benchmark_smoke(capsys, restore_backend):
    path = Path(__file__).parents[1] / "benchmarks" / "bench_kernels.py"
    spec = importlib.util.spec_from_file_location("bench_kernels", path)
    mod = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(mod)
    assert mod.main(["--reps", "3", "--n", "50", "--mask", "16", "--repeat", "1"]) == 0
    out = capsys.readouterr().out
    assert "wsr_ucb_rows" in out and "label_components" in out
