"""Compiled kernels vs the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat N]

Times each kernel on the workloads the optimisers actually issue (8-PAM on
the default Gauss-Hermite rule, 16-QAM on its 2-D product rule, simplex
projections of length 16) plus one end-to-end probability optimisation
per backend in a subprocess with ``LIFIWIFI_BACKEND`` set.
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from lifiwifi import _pykernels
from lifiwifi.constellation import make_pam, make_qam
from lifiwifi.quadrature import QuadratureSpec
from lifiwifi.rate import LinkPhysics, link_model

try:
    from lifiwifi import _ckernels
except ImportError:
    _ckernels = None

END_TO_END = """
import time
from lifiwifi import kernels
from lifiwifi.constellation import make_pam
from lifiwifi.probopt import pgd_optimize
from lifiwifi.rate import LinkPhysics
c = make_pam(8, 1.0, 0.5, 0.5)
t0 = time.perf_counter()
for q in (1.0, 10.0, 100.0):
    pgd_optimize(c, q, LinkPhysics(1.0, 1.0, 1.0))
print(kernels.BACKEND, time.perf_counter() - t0)
"""


def mixture_case(c, q):
    rng = np.random.default_rng(0)
    model = link_model(c, q, LinkPhysics(1.0, 1.0, 1.0))
    z, w = QuadratureSpec().nodes(model.dim)
    p = rng.dirichlet(np.ones(c.size))
    return (*model.exponents(), z, w, p)


def workloads():
    pam = mixture_case(make_pam(8, 1.0), 2.0)
    qam = mixture_case(make_qam(16, 1.0), 2.0)
    v = np.random.default_rng(1).normal(size=16)
    A = np.abs(make_qam(16, 1.0).points)[None, :] ** 2
    return {
        "mixture_logsum 8-PAM": lambda k: k.mixture_logsum(*pam, grad=True),
        "mixture_logsum 16-QAM": lambda k: k.mixture_logsum(*qam, grad=True),
        "simplex_project n=16": lambda k: k.simplex_project(v),
        "capped_simplex_project n=16": lambda k: k.capped_simplex_project(v, A, np.array([0.6])),
    }


def best_of(fn, repeat):
    timer = timeit.Timer(fn)
    number, _ = timer.autorange()
    return min(timer.repeat(repeat, number)) / number


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    print(f"{'kernel':32s} {'numpy':>12s} {'cython':>12s} {'speedup':>8s}")
    for name, fn in workloads().items():
        t_py = best_of(lambda: fn(_pykernels), args.repeat)
        if _ckernels is None:
            print(f"{name:32s} {t_py * 1e6:10.1f}us {'n/a':>12s}")
            continue
        t_c = best_of(lambda: fn(_ckernels), args.repeat)
        print(f"{name:32s} {t_py * 1e6:10.1f}us {t_c * 1e6:10.1f}us {t_py / t_c:7.1f}x")

    print("\nend to end: three capped 8-PAM projected-gradient runs")
    for backend in ("python", "cython"):
        env = dict(os.environ, LIFIWIFI_BACKEND=backend)
        out = subprocess.run([sys.executable, "-c", END_TO_END], env=env, check=True,
                             capture_output=True, text=True).stdout.split()
        print(f"  requested {backend:7s} -> ran {out[0]:7s} {float(out[1]):8.3f} s")


if __name__ == "__main__":
    main()
