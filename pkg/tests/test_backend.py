"""Compiled and pure-python kernels must agree bit-for-bit in semantics."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from elastocal.backend import BACKEND, _chain_py

try:
    from elastocal.backend import _chain
except ImportError:
    _chain = None

needs_compiled = pytest.mark.skipif(_chain is None, reason="compiled backend absent")


def random_args(rng, n=6, k=3):
    links = rng.uniform(0, 1, (n, 4))
    links[:, 0] = np.abs(links[:, 0])
    links[:, 2] = np.abs(links[:, 2])
    base = np.eye(4)
    base[:3, 3] = rng.normal(0, 0.3, 3)
    tool = np.eye(4)
    tool[:3, 3] = rng.normal(0, 0.1, 3)
    angles = rng.uniform(-np.pi, np.pi, n)
    offsets = rng.normal(0, 0.1, (k, 3))
    return links, base, tool, angles, offsets


@needs_compiled
def test_fk_agrees():
    rng = np.random.default_rng(1)
    for _ in range(25):
        args = random_args(rng)
        T_c, mk_c = _chain.fk_pose_markers(*args)
        T_p, mk_p = _chain_py.fk_pose_markers(*args)
        assert_allclose(T_c, T_p, atol=1e-14)
        assert_allclose(mk_c, mk_p, atol=1e-14)


@needs_compiled
def test_jacobians_agree():
    rng = np.random.default_rng(2)
    for _ in range(25):
        args = random_args(rng)
        T_c, mk_c, J_c = _chain.fk_jacobians(*args)
        T_p, mk_p, J_p = _chain_py.fk_jacobians(*args)
        assert_allclose(T_c, T_p, atol=1e-14)
        assert_allclose(mk_c, mk_p, atol=1e-14)
        assert_allclose(J_c, J_p, atol=1e-13)


@needs_compiled
def test_readonly_inputs_accepted():
    rng = np.random.default_rng(3)
    args = list(random_args(rng))
    for arr in args:
        arr.flags.writeable = False
    _chain.fk_jacobians(*args)


def test_backend_reports_identity():
    assert BACKEND in ("compiled", "python")
