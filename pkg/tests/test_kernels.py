"""Compiled and numpy kernels: agreement with each other and with closed forms."""
import importlib

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wavelab import _fallback, kernels


def _backends():
    out = [pytest.param(_fallback, id="numpy")]
    try:
        out.append(pytest.param(importlib.import_module("wavelab._core"), id="cython"))
    except ImportError:
        out.append(pytest.param(None, id="cython", marks=pytest.mark.skip(reason="extension not built")))
    return out


@pytest.fixture(params=_backends())
def backend(request):
    return request.param


class TestPolyEval:
    def test_single_monomial(self, backend):
        derivs = np.array([[1.0, 2.0, -3.0], [0.5, 1.0, 2.0]])
        alphas = np.array([[2, 1]], dtype=np.int_)
        out = backend.poly_eval(derivs, alphas, np.array([3.0]))
        np.testing.assert_allclose(out, 3.0 * derivs[0] ** 2 * derivs[1])

    def test_sum_of_terms(self, backend):
        rng = np.random.default_rng(0)
        derivs = rng.standard_normal((4, 50))
        alphas = np.array([[3, 0, 0, 0], [1, 1, 1, 0], [0, 0, 1, 2]], dtype=np.int_)
        coeffs = np.array([1.5, -2.0, 0.25])
        expected = sum(c * np.prod(derivs ** a[:, None], axis=0) for a, c in zip(alphas, coeffs))
        np.testing.assert_allclose(backend.poly_eval(derivs, alphas, coeffs), expected, rtol=1e-13)

    def test_no_terms_gives_zero(self, backend):
        derivs = np.ones((2, 5))
        out = backend.poly_eval(derivs, np.zeros((0, 2), dtype=np.int_), np.zeros(0))
        np.testing.assert_array_equal(out, np.zeros(5))


class TestCumulativeQuadrature:
    def test_exact_on_cubics(self, backend):
        h = 0.1
        t = np.arange(12) * h
        g = (1 - 2 * t + 3 * t**2 - t**3)[:, None].astype(complex)
        exact = t - t**2 + t**3 - t**4 / 4
        out = backend.cumulative_quadrature(np.ascontiguousarray(g), h)
        keep = np.arange(12) != 1
        np.testing.assert_allclose(out[keep, 0].real, exact[keep], atol=1e-14)

    def test_first_interval_exact_on_quadratics(self, backend):
        h = 0.25
        t = np.arange(4) * h
        g = (2 - t + 5 * t**2)[:, None].astype(complex)
        out = backend.cumulative_quadrature(np.ascontiguousarray(g), h)
        assert out[1, 0].real == pytest.approx(2 * h - h**2 / 2 + 5 * h**3 / 3, abs=1e-15)

    def test_fourth_order_on_cosine(self, backend):
        errs = []
        for J in (16, 32, 64):
            h = 2.0 / J
            t = np.arange(J + 1) * h
            out = backend.cumulative_quadrature(np.ascontiguousarray(np.cos(3 * t)[:, None].astype(complex)), h)
            errs.append(np.max(np.abs(out[:, 0].real - np.sin(3 * t) / 3)))
        rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
        assert np.all(rates > 3.6)

    def test_needs_three_samples(self):
        with pytest.raises(ValueError):
            _fallback.cumulative_quadrature(np.zeros((2, 1), dtype=complex), 0.1)


class TestBackendsAgree:
    @settings(max_examples=25, deadline=None)
    @given(J=st.integers(2, 40), M=st.integers(1, 9), seed=st.integers(0, 2**32 - 1))
    def test_quadrature_agrees(self, J, M, seed):
        core = pytest.importorskip("wavelab._core")
        rng = np.random.default_rng(seed)
        g = rng.standard_normal((J + 1, M)) + 1j * rng.standard_normal((J + 1, M))
        np.testing.assert_allclose(core.cumulative_quadrature(g, 0.3), _fallback.cumulative_quadrature(g, 0.3),
                                   rtol=1e-12, atol=1e-13)

    @settings(max_examples=25, deadline=None)
    @given(nvar=st.integers(1, 4), k=st.integers(2, 6), seed=st.integers(0, 2**32 - 1))
    def test_poly_agrees(self, nvar, k, seed):
        core = pytest.importorskip("wavelab._core")
        rng = np.random.default_rng(seed)
        derivs = rng.standard_normal((nvar, 33))
        alphas = rng.multinomial(k, np.full(nvar, 1.0 / nvar), size=3).astype(np.int_)
        coeffs = rng.standard_normal(3)
        np.testing.assert_allclose(core.poly_eval(derivs, alphas, coeffs), _fallback.poly_eval(derivs, alphas, coeffs),
                                   rtol=1e-12, atol=1e-12)


def test_backend_flag_is_reported():
    assert kernels.BACKEND in ("cython", "numpy")


def test_wrapper_reshapes_stacks():
    g = np.ones((5, 2, 3), dtype=complex)
    out = kernels.cumulative_quadrature(g, 0.5)
    assert out.shape == (5, 2, 3)
    np.testing.assert_allclose(out[:, 1, 2].real, 0.5 * np.arange(5))
