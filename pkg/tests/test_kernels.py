import os
import subprocess
import sys

import numpy as np
import pytest

from qtraj import _fallback, kernels
from qtraj.maps import DEGENERATE_NORM_SQ
from qtraj.presets import EXAMPLE_IDS, example_setup
from qtraj.records import RngStream
from qtraj.trajectory import FineStepper

compiled = pytest.mark.skipif("cython" not in kernels.backends(), reason="extension not built")


def args_for(example, steps, seed=0):
    s = example_setup(example)
    st = FineStepper(s, 1e-4)
    xi = RngStream(seed, 0).normal(steps)
    psi = np.ascontiguousarray(s.initial_state, dtype=np.complex128)
    return st, psi, xi


def loop_reference(psi, c, a0, a1, a2, xi, dt):
    """Plain-Python transcription of one fine bin."""
    psi = psi.copy()
    ys = []
    for x in xi:
        mu = 2 * (psi.conj() @ c @ psi).real
        y = mu + x / np.sqrt(dt)
        ys.append(y)
        psi = (a0 + y * a1 + y * y * a2) @ psi
        psi = psi / np.linalg.norm(psi)
    return psi, np.array(ys)


@pytest.mark.parametrize("example", EXAMPLE_IDS)
def test_fallback_matches_reference(example):
    st, psi, xi = args_for(example, 200)
    out, y, status = _fallback.evolve_fine_bin(psi, st.c, st.a0, st.a1, st.a2, xi, st.dt, DEGENERATE_NORM_SQ)
    ref, ry = loop_reference(psi, st.c, st.a0, st.a1, st.a2, xi, st.dt)
    assert status == 0
    assert np.allclose(out, ref, atol=1e-13)
    assert np.allclose(y, ry, atol=1e-10)


@compiled
@pytest.mark.parametrize("example", EXAMPLE_IDS)
def test_backends_agree(example):
    st, psi, xi = args_for(example, 2000, seed=3)
    mods = kernels.backends()
    a = mods["cython"].evolve_fine_bin(psi, st.c, st.a0, st.a1, st.a2, xi, st.dt, DEGENERATE_NORM_SQ)
    b = mods["python"].evolve_fine_bin(psi, st.c, st.a0, st.a1, st.a2, xi, st.dt, DEGENERATE_NORM_SQ)
    assert a[2] == b[2] == 0
    assert np.max(np.abs(a[0] - b[0])) < 1e-12
    assert np.max(np.abs(a[1] - b[1])) < 1e-9 * np.max(np.abs(b[1]))
    ra = mods["cython"].apply_fine_record(psi, st.a0, st.a1, st.a2, b[1], DEGENERATE_NORM_SQ)
    rb = mods["python"].apply_fine_record(psi, st.a0, st.a1, st.a2, b[1], DEGENERATE_NORM_SQ)
    assert np.max(np.abs(ra[0] - rb[0])) < 1e-12


@pytest.mark.parametrize("name", list(kernels.backends()))
def test_degenerate_status(name):
    mod = kernels.backends()[name]
    z = np.zeros((2, 2), complex)
    psi = np.array([1, 0], complex)
    # a0 kills the state on the second sample
    a0 = np.array([[0, 0], [1, 0]], complex)
    out, status = mod.apply_fine_record(psi, a0, z, z, np.zeros(4), 1e-30)
    assert status == 2
    _, _, status = mod.evolve_fine_bin(psi, z, a0, z, z, np.zeros(4), 1e-4, 1e-30)
    assert status == 2


def test_replay_reproduces_evolution():
    st, psi, xi = args_for("spin32-lowering", 500)
    out, y, _ = st.evolve(psi, xi)
    back, status = st.replay(psi, y)
    assert status == 0
    assert np.allclose(back, out, atol=1e-14)


def test_backend_selection_env():
    env = dict(os.environ, QTRAJ_PURE_PYTHON="1")
    code = "import qtraj; print(qtraj.BACKEND, sorted(qtraj.kernels.backends()))"
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.split()[0] == "python"
    assert "'cython'" not in out.stdout


@compiled
def test_default_backend_is_compiled():
    if os.environ.get("QTRAJ_PURE_PYTHON", "") not in ("", "0"):
        pytest.skip("pure backend forced")
    assert kernels.BACKEND == "cython"
