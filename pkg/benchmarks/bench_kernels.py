"""Time the compiled and numpy kernel backends on representative workloads.

    python benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import time

import numpy as np

from lncdis import _kernels, cnn, gbdt


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def workloads(backend):
    rng = np.random.default_rng(0)
    X = rng.random((1500, 64))
    y = (X[:, 0] + X[:, 1] * X[:, 2] > 0.7).astype(float)
    g, h = gbdt.grad_hess(np.full(len(y), 0.5), y)
    idx = gbdt.presort(X)
    tree = gbdt.FlatTree.from_node(gbdt.build_tree(X, g, h, gbdt.GbdtConfig(max_depth=8), backend=backend))
    cfg = gbdt.GbdtConfig(num_trees=20, max_depth=8)

    def with_backend(fn):
        def run():
            saved = _kernels.backend
            _kernels.backend = backend
            try:
                fn()
            finally:
                _kernels.backend = saved

        return run

    return {
        "split search (1500x64)": lambda: backend.best_split(X, g, h, idx, 1.0, 0.0, 1.0),
        "tree predict (1500x64)": lambda: tree.predict(X, backend),
        "boost 20 trees": lambda: gbdt.train(X, y, cfg, backend=backend),
        "cnn epoch (256 pairs)": with_backend(
            lambda: cnn.train(cnn.NetworkSpec((2, 140)), cnn.TrainConfig(epochs=1), rng.random((256, 2, 140)), np.arange(256) % 2)
        ),
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=7)
    args = parser.parse_args()
    names = sorted(_kernels.BACKENDS)
    results = {n: {k: best_of(fn, args.repeat) for k, fn in workloads(_kernels.get(n)).items()} for n in names}
    tasks = list(results[names[0]])
    print(f"{'workload':<28}" + "".join(f"{n:>12}" for n in names) + ("     speedup" if len(names) == 2 else ""))
    for task in tasks:
        row = f"{task:<28}" + "".join(f"{results[n][task] * 1e3:>10.2f}ms" for n in names)
        if len(names) == 2:
            row += f"{results['python'][task] / results['compiled'][task]:>11.1f}x"
        print(row)
    print("convolution uses the numpy (BLAS) kernel on both backends")
    if "compiled" not in names:
        print("compiled backend not built; only the numpy fallback was timed")


if __name__ == "__main__":
    main()
