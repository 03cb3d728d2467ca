"""Pure-numpy versions of the compiled kernels in ``_core.pyx``.

Both implementations share signatures and must agree to round-off; the test
suite checks this whenever the extension is built.
"""
import numpy as np


def poly_eval(derivs, alphas, coeffs):
    """Evaluate ``sum_t c_t prod_i derivs[i]**alphas[t, i]`` pointwise.

    ``derivs`` has shape ``(n_vars, n_points)``; returns shape ``(n_points,)``.
    """
    derivs = np.asarray(derivs, dtype=np.float64)
    alphas = np.asarray(alphas, dtype=np.int64)
    out = np.zeros(derivs.shape[1])
    powers = {}
    for term, c in zip(alphas, coeffs):
        prod = np.full(derivs.shape[1], float(c))
        for i, a in enumerate(term):
            if a == 0:
                continue
            key = (i, int(a))
            if key not in powers:
                powers[key] = derivs[i] ** int(a)
            prod *= powers[key]
        out += prod
    return out


def cumulative_quadrature(values, h):
    """Running integral ``I[j] = int_0^{t_j} g`` along axis 0, fourth order.

    Composite Simpson at even ``j``; Simpson up to ``j-3`` plus the 3/8 rule at
    odd ``j >= 3``; the quadratic-interpolant rule on the first interval.
    ``values`` is complex with shape ``(J+1, M)`` and ``J >= 2``.
    """
    g = np.asarray(values, dtype=np.complex128)
    J = g.shape[0] - 1
    if J < 2:
        raise ValueError("need at least three time samples")
    out = np.zeros_like(g)
    pair = (h / 3.0) * (g[0:J - 1:2] + 4.0 * g[1:J:2] + g[2:J + 1:2])
    out[2::2] = np.cumsum(pair, axis=0)
    out[1] = (h / 12.0) * (5.0 * g[0] + 8.0 * g[1] - g[2])
    if J >= 3:
        tail = (3.0 * h / 8.0) * (g[0:J - 2:2] + 3.0 * g[1:J - 1:2] + 3.0 * g[2:J:2] + g[3:J + 1:2])
        out[3::2] = out[0:J - 2:2] + tail
    return out
