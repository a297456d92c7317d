"""Time the compiled kernels against the pure-Python ones.

    python3 benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import timeit

import numpy as np

from terlab import branchspace, kernels, largeness, ter, trees


def perm_index(pt, perm):
    w = pt.n ** np.arange(pt.n - 1, -1, -1)
    return int(np.searchsorted(pt.codes, int(np.dot(perm, w))))


def cases():
    tree = trees.full_tree([4, 4, 4], limits=(2,))
    rel = ter.block_ter(tree)
    tables = branchspace.suitability_tables(tree, rel, 1)
    fams = np.random.default_rng(0).integers(0, 2 ** 63, size=20000, dtype=np.uint64)
    pt = largeness.PermutationTable(6)
    gens = np.array([perm_index(pt, (1, 0, 2, 3, 4, 5)), perm_index(pt, (1, 2, 3, 4, 5, 0))], dtype=np.int64)
    big = trees.full_tree([4, 4, 4, 2], limits=(2,))
    split = ter.dense_split(ter.block_ter(big), 2).ter
    arrays = ter._arrays(split) + (big.height,)
    return {
        "disputes": lambda: kernels.disputes(*arrays),
        "reduce_masks": lambda: branchspace.reduce_many(tables, fams),
        "group_closure": lambda: kernels.group_closure(pt.table, gens, pt.ident),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    runs = cases()
    print(f"{'kernel':<15}" + "".join(f"{b:>12}" for b in sorted(kernels.BACKENDS)) + "     speedup")
    for name, fn in runs.items():
        times = {}
        for b in sorted(kernels.BACKENDS):
            kernels.use(b)
            times[b] = min(timeit.repeat(fn, number=1, repeat=args.repeat))
        row = f"{name:<15}" + "".join(f"{times[b] * 1e3:>10.2f}ms" for b in sorted(times))
        if "cython" in times:
            row += f"  {times['python'] / times['cython']:>8.1f}x"
        print(row)
    kernels.use("cython" if "cython" in kernels.BACKENDS else "python")


if __name__ == "__main__":
    main()
