import os
import subprocess
import sys

import numpy as np
import pytest

SCRIPT = r"""
import sys
import numpy as np
from layerlab import _accel
from layerlab.analysis import build_profiles
from layerlab.interval import solve_full
from layerlab.model import ModelParams

p = ModelParams(epsilon=2.0**-5, T=0.01)
ps = build_profiles(p, 32)
tr = solve_full(p, ps.data, ps.stepper)
np.savez(sys.argv[1], backend=_accel.BACKEND, u=tr.u, v=tr.v, ou=ps.outer.u, ov=ps.outer.v,
         phi1=ps.outer.phi1, v1=ps.outer.v1, lv0=ps.left.v0, lv1=ps.left.v1, lphi2=ps.left.phi2)
"""


def run(backend, path):
    env = dict(os.environ, LAYERLAB_BACKEND=backend)
    subprocess.run([sys.executable, "-c", SCRIPT, str(path)], env=env, check=True, timeout=600)
    return np.load(path)


@pytest.fixture(scope="module")
def both(tmp_path_factory):
    d = tmp_path_factory.mktemp("backends")
    return run("numba", d / "a.npz"), run("numpy", d / "b.npz")


def test_backend_flag(both):
    a, b = both
    assert str(a["backend"]) == "numba" and str(b["backend"]) == "numpy"


@pytest.mark.parametrize("key", ["u", "v", "ou", "ov", "phi1", "v1", "lv0", "lv1", "lphi2"])
def test_backends_agree(both, key):
    a, b = both
    scale = max(np.abs(a[key]).max(), 1e-300)
    assert np.abs(a[key] - b[key]).max() <= 1e-10 * scale


def test_bad_backend_name():
    env = dict(os.environ, LAYERLAB_BACKEND="fortran")
    res = subprocess.run([sys.executable, "-c", "import layerlab"], env=env, capture_output=True, text=True)
    assert res.returncode != 0 and "LAYERLAB_BACKEND" in res.stderr
