"""Wall-clock comparison of the randomized factorizations.

Trial ``t`` of every method sees the same matrix (seed ``seed + t``) and
the same sketch seed, so timing differences come from the algorithms
alone.  Only the factorization call is timed.  The median over trials is
the headline number; the mean is reported as well.
"""
import csv
import statistics
import time
from contextlib import nullcontext
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
from threadpoolctl import threadpool_limits

from . import _backend
from .errors import ConfigurationError, RuqlpError
from .matcore import frobenius_norm
from .matgen import NAMED, gen_dense, gen_sparse, named_matrix
from .randfact import METHODS, SketchConfig, decompose, reconstruct

TRIAL_HEADER = ("method", "family", "n", "d", "q", "trial", "seconds")
SUMMARY_HEADER = ("method", "family", "n", "d", "q", "median_s", "mean_s",
                  "speedup_vs_rsvd", "speedup_vs_corutv", "speedup_vs_rptsod")
SPEEDUP_COLUMNS = (("rsvd", "speedup_vs_rsvd"), ("cor_utv", "speedup_vs_corutv"),
                   ("rp_tsod", "speedup_vs_rptsod"))
BENCH_FAMILIES = ("gaussian_dense", "gaussian_sparse") + tuple(sorted(NAMED))
SPARSE_DENSITY = 0.1
PARITY_FACTOR = 10.0


@dataclass
class BenchRecord:
    """All trials of one method on one (family, n, d, q) cell."""

    method: str
    family: str
    n: int
    d: int
    q: int
    threads: Optional[int]
    times: List[float] = field(default_factory=list)
    errors: List[float] = field(default_factory=list)
    failures: List[str] = field(default_factory=list)
    parity_ok: bool = True
    speedup_vs: Dict[str, float] = field(default_factory=dict)

    @property
    def failed(self):
        return bool(self.failures)

    @property
    def median_s(self):
        return statistics.median(self.times) if self.times else float("nan")

    @property
    def mean_s(self):
        return statistics.fmean(self.times) if self.times else float("nan")

    def key(self):
        return (self.family, self.n, self.d, self.q)


def bench_matrix(family, n, seed):
    if family == "gaussian_dense":
        return gen_dense(n, seed)
    if family == "gaussian_sparse":
        return gen_sparse(n, SPARSE_DENSITY, seed)
    if family in NAMED:
        return named_matrix(family, n=n, k=min(16, n - 1), seed=seed)
    raise ConfigurationError(f"unknown benchmark family {family!r}; choose from {BENCH_FAMILIES}")


def sample_count(n, d_ratio):
    d = int(round(d_ratio * n))
    if d < 2 or d > n:
        raise ConfigurationError(f"d = round({d_ratio} * {n}) = {d} must lie in [2, n]")
    return d


def _limits(threads):
    return threadpool_limits(limits=threads) if threads is not None else nullcontext()


def _attach_speedups(records):
    cells = {}
    for r in records:
        cells.setdefault(r.key(), []).append(r)
    for group in cells.values():
        for r in group:
            for other in group:
                if r.times and other.times:
                    r.speedup_vs[other.method] = other.median_s / r.median_s


def run_benchmark(families, sizes, d_ratio, q_values, methods, trials, seed=0,
                  threads=1, warmup=True, timer=time.perf_counter):
    """Time each method over ``trials`` matrices per (family, n, q).

    ``threads=None`` leaves the BLAS thread pools alone; an integer caps
    them during the run.  A failing trial is recorded in ``failures`` and
    the run moves on.
    """
    if trials < 1:
        raise ConfigurationError("trials must be at least 1")
    unknown = [m for m in methods if m not in METHODS]
    if unknown:
        raise ConfigurationError(f"unknown methods {unknown}; choose from {METHODS}")
    records = []
    if not methods:
        return records
    with _limits(threads):
        for family in families:
            for n in sizes:
                d = sample_count(n, d_ratio)
                cell = {(m, q): BenchRecord(m, family, n, d, q, threads)
                        for q in q_values for m in methods}
                warmed = set()
                for t in range(trials):
                    a = bench_matrix(family, n, seed + t)
                    scale = frobenius_norm(a)
                    for q in q_values:
                        config = SketchConfig(k=d, p=0, q=q, seed=seed + t)
                        trial_errors = {}
                        for m in methods:
                            rec = cell[(m, q)]
                            if warmup and (m, q) not in warmed:
                                warmed.add((m, q))
                                try:
                                    decompose(a, m, config)
                                except (RuqlpError, np.linalg.LinAlgError):
                                    pass
                            try:
                                start = timer()
                                factors = decompose(a, m, config)
                                elapsed = timer() - start
                            except (RuqlpError, np.linalg.LinAlgError) as exc:
                                rec.failures.append(f"trial {t}: {exc}")
                                continue
                            rec.times.append(elapsed)
                            err = frobenius_norm(a - reconstruct(factors)) / scale
                            rec.errors.append(err)
                            trial_errors[m] = err
                        _check_parity(cell, q, trial_errors)
                records.extend(cell.values())
    _attach_speedups(records)
    return records


def _check_parity(cell, q, trial_errors):
    """Flag methods whose error exceeds ``PARITY_FACTOR`` times the best one."""
    if not trial_errors:
        return
    ceiling = PARITY_FACTOR * max(min(trial_errors.values()), np.finfo(float).eps)
    for m, err in trial_errors.items():
        if err > ceiling:
            cell[(m, q)].parity_ok = False


def write_trials_csv(records, stream):
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(TRIAL_HEADER)
    for r in records:
        for t, seconds in enumerate(r.times):
            writer.writerow([r.method, r.family, r.n, r.d, r.q, t, format(seconds, ".9f")])


def write_summary_csv(records, stream):
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(SUMMARY_HEADER)
    for r in records:
        speedups = [format(r.speedup_vs[m], ".6f") if m in r.speedup_vs else ""
                    for m, _ in SPEEDUP_COLUMNS]
        median = format(r.median_s, ".9f") if r.times else ""
        mean = format(r.mean_s, ".9f") if r.times else ""
        writer.writerow([r.method, r.family, r.n, r.d, r.q, median, mean, *speedups])


# ---------------------------------------------------------------- kernels


def kernel_benchmark(sizes=(200, 400), trials=3, seed=0):
    """Median seconds of each kernel under the compiled and the numpy backend.

    Returns a list of dicts; compiled entries are absent when the
    extension is not built.
    """
    backends = [("python", _backend.python_kernels)]
    if _backend.compiled_kernels is not None:
        backends.insert(0, ("compiled", _backend.compiled_kernels))
    rng = np.random.Generator(np.random.Philox(seed))
    rows = []
    with _limits(1):
        for n in sizes:
            a = rng.standard_normal((2 * n, n))
            square = np.asfortranarray(rng.standard_normal((n, n)))
            tol = np.sqrt(n) * np.finfo(float).eps

            def qr(kern):
                kern.householder_qr(np.array(a, order="F"), False)

            def pqr(kern):
                kern.householder_qr(np.array(a, order="F"), True)

            def jac(kern):
                kern.jacobi_sweeps(np.array(square, order="F"),
                                   np.eye(n, order="F"), tol, 60)

            for kernel, fn in (("householder_qr", qr), ("pivoted_qr", pqr),
                               ("jacobi_sweeps", jac)):
                for name, kern in backends:
                    times = []
                    for _ in range(trials):
                        start = time.perf_counter()
                        fn(kern)
                        times.append(time.perf_counter() - start)
                    rows.append({"kernel": kernel, "backend": name, "n": n,
                                 "median_s": statistics.median(times)})
    return rows
