"""Time the compiled Jacobi kernel against the pure-Python fallback.

    python benchmarks/bench_jacobi.py [--sizes 4 8 16 32] [--repeat 20]
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from coherence_kit import _jacobi_py

try:
    from coherence_kit import _jacobi
except ImportError:
    _jacobi = None


def random_hermitian(n: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    g = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return (g + g.conj().T) / 2


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[4, 8, 16, 32])
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args(argv)

    kernels = {"python": _jacobi_py.jacobi_eigh}
    if _jacobi is not None:
        kernels["cython"] = _jacobi.jacobi_eigh
    else:
        print("compiled kernel not built; timing the fallback only")

    print(f"{'n':>4} {'backend':>8} {'ms/call':>10} {'max|w-eigh|':>12} {'speedup':>8}")
    for n in args.sizes:
        a = random_hermitian(n, n)
        ref = np.linalg.eigvalsh(a)
        times = {}
        for name, fn in kernels.items():
            reps = max(1, args.repeat // (10 if name == "python" and n > 16 else 1))
            times[name] = min(timeit.repeat(lambda: fn(a), number=1, repeat=reps)) * 1e3
            w = fn(a)[0]
            speed = times["python"] / times[name] if name != "python" else 1.0
            print(f"{n:>4} {name:>8} {times[name]:>10.3f} {np.max(np.abs(w - ref)):>12.2e} {speed:>8.1f}")


if __name__ == "__main__":
    main()
