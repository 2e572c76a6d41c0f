"""Compare the compiled kernels with the numpy fallback.

    python benchmarks/bench_kernels.py --sizes 200 400 --trials 3
"""
import argparse

from ruqlp.bench import kernel_benchmark


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", type=int, nargs="+", default=[200, 400])
    parser.add_argument("--trials", type=int, default=3)
    args = parser.parse_args()
    rows = kernel_benchmark(args.sizes, args.trials)
    print(f"{'kernel':<16}{'n':>6}{'compiled_s':>14}{'python_s':>14}{'ratio':>9}")
    cells = {}
    for r in rows:
        cells.setdefault((r["kernel"], r["n"]), {})[r["backend"]] = r["median_s"]
    for (kernel, n), times in cells.items():
        comp = times.get("compiled")
        py = times["python"]
        ratio = f"{py / comp:9.1f}" if comp else f"{'n/a':>9}"
        comp_s = f"{comp:14.4f}" if comp else f"{'n/a':>14}"
        print(f"{kernel:<16}{n:>6}{comp_s}{py:14.4f}{ratio}")


if __name__ == "__main__":
    main()
