"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5]

Each kernel is checked for agreement between backends before timing.
"""
import argparse
import timeit

import numpy as np

from wavelab import _fallback

try:
    from wavelab import _core
except ImportError:
    _core = None


def cases(rng):
    # cubic and quintic products on a padded 3D grid, Duhamel integrals for a 32^3 run
    derivs3 = rng.standard_normal((4, 48 ** 3))
    alphas3 = np.array([[3, 0, 0, 0], [1, 2, 0, 0], [1, 0, 1, 1]], dtype=np.int_)
    derivs1 = rng.standard_normal((2, 1536))
    alphas1 = np.array([[5, 0], [3, 2], [1, 4]], dtype=np.int_)
    coeffs = np.array([1.0, -0.5, 2.0])
    values = rng.standard_normal((129, 32 * 32 * 17)) + 1j * rng.standard_normal((129, 32 * 32 * 17))
    return {
        "poly_eval 3D cubic (4 x 48^3)": ("poly_eval", (derivs3, alphas3, coeffs)),
        "poly_eval 1D quintic (2 x 1536)": ("poly_eval", (derivs1, alphas1, coeffs)),
        "cumulative_quadrature (129 x 17408)": ("cumulative_quadrature", (values, 0.0625)),
    }


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    if _core is None:
        print("compiled extension not built; only the numpy backend is available")
    rng = np.random.default_rng(0)
    print(f"{'kernel':40s} {'numpy [ms]':>12s} {'cython [ms]':>12s} {'speedup':>8s}")
    for label, (name, call_args) in cases(rng).items():
        fb = getattr(_fallback, name)
        t_fb = min(timeit.repeat(lambda: fb(*call_args), number=1, repeat=args.repeat))
        if _core is None:
            print(f"{label:40s} {t_fb * 1e3:12.2f} {'-':>12s} {'-':>8s}")
            continue
        core = getattr(_core, name)
        np.testing.assert_allclose(core(*call_args), fb(*call_args), rtol=1e-12, atol=1e-12)
        t_core = min(timeit.repeat(lambda: core(*call_args), number=1, repeat=args.repeat))
        print(f"{label:40s} {t_fb * 1e3:12.2f} {t_core * 1e3:12.2f} {t_fb / t_core:8.2f}")


if __name__ == "__main__":
    main()
