"""Compare the compiled and pure-Python kernels on identical inputs.

    python benchmarks/bench_kernels.py [--repeat N]

Each kernel is checked for identical output before it is timed.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from histmark import _pykernels

try:
    from histmark import _ckernels
except ImportError:  # extension not built
    _ckernels = None


def _points(n: int, size: int, seed: int):
    rng = np.random.default_rng(seed)
    return rng.integers(0, size, n).astype(np.int64), rng.integers(0, size, n).astype(np.int64)


def _plane(side: int, seed: int):
    rng = np.random.default_rng(seed)
    values = rng.uniform(-0.5, 255.49, side * side)
    return values, np.floor(values + 0.5).astype(np.int64)


def _cases():
    for n in (1_000, 5_000):
        rows, cols = _points(n, 512, n)
        yield f"cluster_labels n={n}", "cluster_labels", lambda rows=rows, cols=cols: (rows, cols, 16)
    for side in (64, 256):
        values, levels = _plane(side, side)

        def args(values=values, levels=levels):
            return values.copy(), levels.copy(), 128, 134, values.size // 256

        yield f"transfer {side}x{side}", "transfer", args


def _run(mod, name, make_args):
    args = make_args()
    out = getattr(mod, name)(*args)
    return out, args


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if _ckernels is None:
        print("compiled kernels not built; only the pure-Python backend is available")
    print(f"{'case':28s} {'python ms':>10s} {'cython ms':>10s} {'speed-up':>9s}")
    for label, name, make_args in _cases():
        timings = {}
        for tag, mod in (("python", _pykernels), ("cython", _ckernels)):
            if mod is None:
                continue
            timer = timeit.Timer(lambda mod=mod: _run(mod, name, make_args))
            timings[tag] = min(timer.repeat(args.repeat, 1)) * 1e3
        if _ckernels is not None:
            (py_out, py_args), (c_out, c_args) = _run(_pykernels, name, make_args), _run(_ckernels, name, make_args)
            same = np.array_equal(np.asarray(py_out), np.asarray(c_out)) and all(
                np.array_equal(a, b) for a, b in zip(py_args[:2], c_args[:2])
            )
            if not same:
                raise SystemExit(f"{label}: backends disagree")
            speed = f"{timings['python'] / timings['cython']:8.1f}x"
            print(f"{label:28s} {timings['python']:10.2f} {timings['cython']:10.2f} {speed:>9s}")
        else:
            print(f"{label:28s} {timings['python']:10.2f} {'-':>10s} {'-':>9s}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
