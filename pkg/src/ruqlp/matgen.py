"""Test matrices and Matrix Market I/O.

Every generator is a pure function of its parameters and a 64-bit seed.
Random orthonormal factors come from the QR of a Gaussian matrix with
a nonnegative ``R`` diagonal, which makes them Haar distributed.
"""
import math
import os
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import MatrixMarketError, ValidationError
from .matcore import as_matrix, qr_unpivoted, spectral_norm

FAMILIES = ("lowrank_noise", "polydecay", "gaussian_dense", "gaussian_sparse", "file")

# (mu) for the named low-rank-plus-noise matrices and (z) for the decays
NAMED = {
    "LowRankLargeGap": ("lowrank_noise", {"mu": 0.005}),
    "LowRankMediumGap": ("lowrank_noise", {"mu": 0.01}),
    "LowRankSlowDecay": ("polydecay", {"z": 1.0}),
    "LowRankFastDecay": ("polydecay", {"z": 2.0}),
}


def _streams(seed, count):
    seq = np.random.SeedSequence(seed)
    return [np.random.Generator(np.random.Philox(s)) for s in seq.spawn(count)]


def _check_size(n, k=None):
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 1:
        raise ValidationError(f"n must be a positive integer, got {n!r}")
    if k is not None and not (isinstance(k, (int, np.integer)) and 1 <= k < n):
        raise ValidationError(f"k must satisfy 1 <= k < n = {n}, got {k!r}")


def random_orthonormal(n, rng):
    """Haar-distributed n-by-n orthogonal matrix."""
    return qr_unpivoted(rng.standard_normal((n, n))).q


def _with_spectrum(sigma, rng_u, rng_v):
    n = len(sigma)
    u = random_orthonormal(n, rng_u)
    v = random_orthonormal(n, rng_v)
    return (u * sigma) @ v.T


def lowrank_spectrum(n, k):
    """Linear ramp from 1 to 1e-10 over n entries, zeroed after entry k."""
    sigma = np.linspace(1.0, 1e-10, n)
    sigma[k:] = 0.0
    return sigma


def gen_lowrank_noise(n, k, mu, seed=0):
    """Exact rank-k matrix plus Gaussian noise of spectral norm ``mu * sigma_k``."""
    _check_size(n, k)
    if not (math.isfinite(mu) and mu >= 0):
        raise ValidationError(f"mu must be finite and nonnegative, got {mu!r}")
    rng_u, rng_v, rng_noise = _streams(seed, 3)
    sigma = lowrank_spectrum(n, k)
    a = _with_spectrum(sigma, rng_u, rng_v)
    noise = rng_noise.standard_normal((n, n))
    if mu > 0:
        a += (mu * sigma[k - 1] / spectral_norm(noise)) * noise
    return a


def polydecay_spectrum(n, k, z):
    """k ones followed by 2^-z, 3^-z, ..., (n-k+1)^-z."""
    return np.concatenate([np.ones(k), np.arange(2, n - k + 2, dtype=np.float64) ** -z])


def gen_polydecay(n, k, z, seed=0):
    _check_size(n, k)
    if not (math.isfinite(z) and z > 0):
        raise ValidationError(f"z must be positive, got {z!r}")
    rng_u, rng_v, _ = _streams(seed, 3)
    return _with_spectrum(polydecay_spectrum(n, k, z), rng_u, rng_v)


def gen_dense(n, seed=0):
    """Square standard Gaussian matrix."""
    _check_size(n)
    return _streams(seed, 1)[0].standard_normal((n, n))


def gen_sparse(n, density, seed=0):
    """``round(density * n^2)`` Gaussian entries at distinct uniform positions."""
    _check_size(n)
    if not (0.0 < density <= 1.0):
        raise ValidationError(f"density must lie in (0, 1], got {density!r}")
    rng = _streams(seed, 1)[0]
    count = int(round(density * n * n))
    a = np.zeros((n, n))
    flat = rng.choice(n * n, size=count, replace=False)
    values = rng.standard_normal(count)
    # a standard normal draw of exactly 0.0 has probability zero; keep the count honest
    values[values == 0.0] = np.finfo(np.float64).tiny
    a.ravel()[flat] = values
    return a


_REQUIRED = {
    "lowrank_noise": ("n", "k", "mu"),
    "polydecay": ("n", "k", "z"),
    "gaussian_dense": ("n",),
    "gaussian_sparse": ("n", "density"),
    "file": ("path",),
}


@dataclass(frozen=True)
class MatrixSpec:
    family: str
    n: Optional[int] = None
    k: Optional[int] = None
    mu: Optional[float] = None
    z: Optional[float] = None
    density: Optional[float] = None
    path: Optional[str] = None
    seed: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValidationError(f"unknown family {self.family!r}; choose from {FAMILIES}")
        needed = _REQUIRED[self.family]
        for name in ("n", "k", "mu", "z", "density", "path"):
            present = getattr(self, name) is not None
            if name in needed and not present:
                raise ValidationError(f"family {self.family} needs {name}")
            if name not in needed and present:
                raise ValidationError(f"family {self.family} does not take {name}")

    def describe(self):
        parts = [self.family]
        for name in ("n", "k", "mu", "z", "density"):
            value = getattr(self, name)
            if value is not None:
                parts.append(f"{name}={value}")
        return " ".join(parts)


def generate(spec):
    """Materialize a :class:`MatrixSpec`."""
    if spec.family == "lowrank_noise":
        return gen_lowrank_noise(spec.n, spec.k, spec.mu, spec.seed)
    if spec.family == "polydecay":
        return gen_polydecay(spec.n, spec.k, spec.z, spec.seed)
    if spec.family == "gaussian_dense":
        return gen_dense(spec.n, spec.seed)
    if spec.family == "gaussian_sparse":
        return gen_sparse(spec.n, spec.density, spec.seed)
    return load_matrix_market(spec.path)


def named_matrix(name, n=800, k=16, seed=0):
    """One of the four named test families at size n with split k."""
    if name not in NAMED:
        raise ValidationError(f"unknown matrix {name!r}; choose from {sorted(NAMED)}")
    family, params = NAMED[name]
    return generate(MatrixSpec(family=family, n=n, k=k, seed=seed, **params))


# ---------------------------------------------------------------- Matrix Market


def _data_lines(stream, start):
    for lineno, line in enumerate(stream, start=start):
        text = line.strip()
        if text and not text.startswith("%"):
            yield lineno, text.split()


def _number(token, lineno, kind=float):
    try:
        value = kind(token)
    except ValueError:
        raise MatrixMarketError(f"cannot parse {token!r} as {kind.__name__}", lineno) from None
    if kind is float and not math.isfinite(value):
        raise MatrixMarketError(f"non-finite value {token!r}", lineno)
    return value


def read_matrix_market(stream):
    """Parse Matrix Market text (``real general``, coordinate or array)."""
    banner = stream.readline()
    words = banner.strip().split()
    if len(words) != 5 or words[0] != "%%MatrixMarket" or words[1].lower() != "matrix":
        raise MatrixMarketError("missing '%%MatrixMarket matrix ...' banner", 1)
    layout, field, symmetry = (w.lower() for w in words[2:])
    if layout not in ("coordinate", "array"):
        raise MatrixMarketError(f"unsupported layout {layout!r}", 1)
    if field != "real":
        raise MatrixMarketError(f"unsupported field {field!r}; only real is read", 1)
    if symmetry != "general":
        raise MatrixMarketError(f"unsupported symmetry {symmetry!r}; only general is read", 1)

    lines = _data_lines(stream, start=2)
    try:
        lineno, size = next(lines)
    except StopIteration:
        raise MatrixMarketError("missing size line", 2) from None
    expected = 3 if layout == "coordinate" else 2
    if len(size) != expected:
        raise MatrixMarketError(f"size line needs {expected} integers", lineno)
    dims = [_number(t, lineno, int) for t in size]
    if min(dims[:2]) < 1 or dims[-1] < 0:
        raise MatrixMarketError("dimensions must be positive", lineno)
    m, n = dims[0], dims[1]
    a = np.zeros((m, n))

    if layout == "array":
        values = []
        for lineno, tokens in lines:
            if len(tokens) != 1:
                raise MatrixMarketError("array entries hold one value per line", lineno)
            values.append(_number(tokens[0], lineno))
        if len(values) != m * n:
            raise MatrixMarketError(f"expected {m * n} values, found {len(values)}", lineno)
        return np.array(values).reshape((m, n), order="F")

    nnz = dims[2]
    seen = set()
    count = 0
    for lineno, tokens in lines:
        if len(tokens) != 3:
            raise MatrixMarketError("coordinate entries need 'row col value'", lineno)
        i = _number(tokens[0], lineno, int)
        j = _number(tokens[1], lineno, int)
        if not (1 <= i <= m and 1 <= j <= n):
            raise MatrixMarketError(f"index ({i}, {j}) outside {m}x{n}", lineno)
        if (i, j) in seen:
            raise MatrixMarketError(f"duplicate entry ({i}, {j})", lineno)
        seen.add((i, j))
        a[i - 1, j - 1] = _number(tokens[2], lineno)
        count += 1
    if count != nnz:
        raise MatrixMarketError(f"header promises {nnz} entries, found {count}", None)
    return a


def load_matrix_market(path):
    if not os.path.isfile(path):
        raise FileNotFoundError(path)
    with open(path, "r", encoding="ascii", errors="replace") as fh:
        return read_matrix_market(fh)


def write_matrix_market(path, a, comment=None):
    """Write nonzeros in coordinate format, column by column, 17 significant digits."""
    a = as_matrix(a)
    rows, cols = np.nonzero(a.T)
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("%%MatrixMarket matrix coordinate real general\n")
        if comment:
            for line in comment.splitlines():
                fh.write(f"% {line}\n")
        fh.write(f"{a.shape[0]} {a.shape[1]} {len(rows)}\n")
        for j, i in zip(rows, cols):
            fh.write(f"{i + 1} {j + 1} {a[i, j]:.17g}\n")


def write_dense_csv(path, a):
    """Row-major dense dump without a header, for eyeballing."""
    a = as_matrix(a)
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        for row in a:
            fh.write(",".join(format(x, ".17g") for x in row) + "\n")
