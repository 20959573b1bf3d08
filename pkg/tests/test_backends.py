"""The compiled kernels must agree with the pure-python reference."""
import numpy as np
import pytest

import artifact
import artifact._kernels_py as kpy

kcy = pytest.importorskip("artifact._kernels_cy")


def test_backend_name_valid():
    assert artifact.BACKEND in ("python", "cython")


def test_lambert_w0_agreement():
    y = np.concatenate([np.logspace(-12, 12, 5000), [0.0, -np.exp(-1.0)]])
    a = kpy.lambert_w0(y.copy())
    b = kcy.lambert_w0(y.copy())
    np.testing.assert_allclose(a, b, rtol=5e-15, atol=5e-15)


def test_lambert_w0_agreement_near_branch_point():
    # the root is sqrt-sensitive to y here, so the two compilation modes
    # can drift apart at the conditioning limit, not beyond it
    y = -np.exp(-1.0) + np.logspace(-10, -0.5, 200)
    a = kpy.lambert_w0(y.copy())
    b = kcy.lambert_w0(y.copy())
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-9)


def test_lambert_w_exp_agreement():
    u = np.linspace(-700.0, 5000.0, 4000)
    a = kpy.lambert_w_exp(u.copy())
    b = kcy.lambert_w_exp(u.copy())
    np.testing.assert_allclose(a, b, rtol=5e-15)


@pytest.mark.parametrize("eta", [0.5, 1.0, 5.0, 100.0])
def test_crra_log_z_agreement(eta):
    rhs = np.linspace(-200.0, 200.0, 3001)
    a = kpy.crra_log_z(rhs.copy(), eta, 2.0 / 9.0, 1.0 / 3.0)
    b = kcy.crra_log_z(rhs.copy(), eta, 2.0 / 9.0, 1.0 / 3.0)
    np.testing.assert_allclose(a, b, rtol=2e-14, atol=2e-14)


def test_package_dispatch_consistent():
    """The public wrappers route to whichever backend loaded."""
    y = np.logspace(-3, 3, 100)
    expected = (kcy if artifact.BACKEND == "cython" else kpy).lambert_w0(y.copy())
    np.testing.assert_array_equal(artifact.lambert_w0(y), expected)
