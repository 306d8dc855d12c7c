import os
import subprocess
import sys

import pytest

SNIPPET = """
import numpy as np
from surfnet._accel import backend_name
from surfnet.density import Extent, KdeParams, kernel_sums
pts = np.array([[0.0, 0.0], [250.0, 100.0]])
print(backend_name(), repr(float(kernel_sums(pts, KdeParams(600.0, extent=Extent(-700, -700, 900, 800))).values.sum())))
"""


def _run(flag):
    env = dict(os.environ)
    env.pop("SURFNET_DISABLE_NUMBA", None)
    if flag is not None:
        env["SURFNET_DISABLE_NUMBA"] = flag
    out = subprocess.run([sys.executable, "-c", SNIPPET], env=env, capture_output=True, text=True, check=True)
    return out.stdout.split()


def test_env_flag_selects_numpy_backend():
    name_off, total_off = _run("1")
    name_on, total_on = _run(None)
    assert name_off == "numpy"
    assert name_on in ("numba", "numpy")
    assert float(total_off) == pytest.approx(float(total_on), rel=1e-12)
