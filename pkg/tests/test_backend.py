import pathlib
import subprocess
import sys

import numpy as np
import pytest

from admot import _backend, _kernels


def test_default_is_numba(monkeypatch):
    monkeypatch.delenv("ADMOT_BACKEND", raising=False)
    assert _backend.active_backend() == "numba"


@pytest.mark.parametrize("value,expected", [("numpy", "numpy"), (" NumPy ", "numpy"),
                                            ("numba", "numba")])
def test_env_flag(monkeypatch, value, expected):
    monkeypatch.setenv("ADMOT_BACKEND", value)
    assert _backend.active_backend() == expected
    assert _backend.pick({"numpy": 1, "numba": 2}) == {"numpy": 1, "numba": 2}[expected]


def test_env_flag_rejects_unknown(monkeypatch):
    monkeypatch.setenv("ADMOT_BACKEND", "cuda")
    with pytest.raises(ValueError):
        _backend.active_backend()


def test_explicit_backend_overrides_env(monkeypatch):
    monkeypatch.setenv("ADMOT_BACKEND", "numpy")
    assert _backend.pick({"numpy": 1, "numba": 2}, "numba") == 2


def test_kernel_tables_complete():
    for table in (_kernels.ADMM_IMPLS, _kernels.GRID_SCAN_IMPLS, _kernels.GRID_SPREAD_IMPLS):
        assert set(table) == set(_backend.BACKENDS)


def test_numpy_backend_end_to_end():
    code = ("import numpy as np; from admot.bpdn import SolverProblem, convex_opt; "
            "s = convex_opt(SolverProblem(np.array([[1., 1., 1.], [1., 2., 3.]]), "
            "np.array([1., 3.]), 0.0)); print(repr(s.x_star.round(4).tolist()))")
    out = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True,
                         env={"ADMOT_BACKEND": "numpy", "PATH": ""}, check=True)
    assert np.allclose(eval(out.stdout), [0.0, 0.0, 1.0], atol=1e-3)


def test_benchmark_script_runs():
    root = pathlib.Path(__file__).resolve().parents[1]
    out = subprocess.run([sys.executable, str(root / "benchmarks" / "bench_backends.py"),
                          "--repeat", "1", "--n", "32", "--m", "16", "--grid-step", "0.1"],
                         capture_output=True, text=True, check=True)
    lines = out.stdout.splitlines()
    assert lines[0].split()[0] == "kernel" and len(lines) == 3
