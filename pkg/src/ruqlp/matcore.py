"""Dense factorization primitives: Householder QR (plain and column
pivoted), one-sided Jacobi SVD, orthonormal bases and matrix norms.

Matrices are plain float64 numpy arrays.  Every routine validates its
input with :func:`as_matrix` and never mutates it.  The heavy loops live in
``ruqlp._kernels`` (compiled) or ``ruqlp._pykernels`` (numpy fallback);
see ``ruqlp._backend``.
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _backend
from .errors import ConvergenceError, EmptyBasisError, ValidationError

EPS = np.finfo(np.float64).eps
# entries below this (relative to a unit-scaled matrix) are flushed to zero
# before Jacobi so squared column norms never underflow
FLUSH = np.sqrt(np.finfo(np.float64).tiny)
MAX_JACOBI_SWEEPS = 60


@dataclass(frozen=True)
class QrFactors:
    """``a[:, perm] = q @ r`` (``perm`` is None for the unpivoted case)."""

    q: np.ndarray
    r: np.ndarray
    perm: Optional[np.ndarray] = None


@dataclass(frozen=True)
class SvdFactors:
    """Thin SVD ``a = u @ diag(sigma) @ v.T`` with ``sigma`` non-increasing."""

    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray

    def truncate(self, rank):
        """Best rank-``rank`` approximation built from the leading triplets."""
        return (self.u[:, :rank] * self.sigma[:rank]) @ self.v[:, :rank].T


def as_matrix(a, name="matrix"):
    """Return ``a`` as a finite, non-empty 2-D float64 array."""
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2:
        raise ValidationError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValidationError(f"{name} must have at least one row and column, got {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValidationError(f"{name} contains NaN or Inf entries")
    return arr


def _power_of_two_scale(a):
    """Exponent e with max|a| * 2**-e in [0.5, 1); keeps squares in range."""
    top = float(np.max(np.abs(a))) if a.size else 0.0
    return np.frexp(top)[1] if top > 0.0 else 0


def _scaled_copy(a):
    e = _power_of_two_scale(a)
    return np.asfortranarray(np.ldexp(a, -e)), e


def _householder(a, pivot, complete=False):
    a = as_matrix(a)
    m, n = a.shape
    packed, e = _scaled_copy(a)
    tau, perm = _backend.kernels.householder_qr(packed, pivot)
    rows = m if complete else min(m, n)
    q = _backend.kernels.form_q(packed, tau, rows)
    r = np.ldexp(np.triu(packed[:rows, :]), e)
    return QrFactors(q=q, r=r, perm=perm)


def qr_unpivoted(a, mode="reduced"):
    """Householder QR with a nonnegative diagonal in ``r``.

    ``mode="reduced"`` gives ``q`` of shape (m, min(m, n)); ``"complete"``
    gives the full m-by-m orthogonal factor and an m-by-n ``r``.
    """
    if mode not in ("reduced", "complete"):
        raise ValidationError(f"unknown QR mode {mode!r}")
    return _householder(a, pivot=False, complete=mode == "complete")


def qr_pivoted(a):
    """Householder QR with column pivoting (largest remaining column first).

    Ties go to the smallest original column index.  ``perm[i]`` is the
    original index of column ``i`` of ``q @ r``.
    """
    return _householder(a, pivot=True)


def complete_basis(u):
    """Orthonormal basis of the orthogonal complement of ``range(u)``.

    ``u`` must have orthonormal columns; the result has ``m - u.shape[1]``
    columns.
    """
    u = np.asarray(u, dtype=np.float64)
    m, r = u.shape
    if r == 0:
        return np.eye(m)
    full = qr_unpivoted(u, mode="complete").q
    return full[:, r:]


def _jacobi(a, compute_uv, max_sweeps):
    m, n = a.shape
    packed, e = _scaled_copy(a)
    tau, perm = _backend.kernels.householder_qr(packed, True)
    g = np.asfortranarray(np.triu(packed[:n, :]).T)
    g[np.abs(g) < FLUSH] = 0.0
    j = np.eye(n, order="F") if compute_uv else np.empty((n, 0), order="F")
    tol = max(np.sqrt(n), 1.0) * EPS
    sweeps = _backend.kernels.jacobi_sweeps(g, j, tol, max_sweeps)
    if sweeps < 0:
        raise ConvergenceError("one-sided Jacobi did not converge", max_sweeps)
    norms = np.linalg.norm(g, axis=0)
    order = np.argsort(-norms, kind="stable")
    norms = norms[order]
    sigma = np.ldexp(norms, e)
    if not compute_uv:
        return sigma, None, None
    u = _backend.kernels.form_q(packed, tau, n) @ j[:, order]
    g = g[:, order]
    xhat = np.zeros((n, n))
    live = norms > 0
    xhat[:, live] = g[:, live] / norms[live]
    if not live.all():
        xhat[:, ~live] = complete_basis(xhat[:, live])
    v = np.empty((n, n))
    v[perm, :] = xhat
    return sigma, u, v


def svd(a, max_sweeps=MAX_JACOBI_SWEEPS):
    """Thin SVD by one-sided Jacobi after a column-pivoted QR.

    The rotations act on the columns of ``R.T``; for ``m < n`` the
    transpose is factorized and the factors swapped.
    """
    a = as_matrix(a)
    if a.shape[0] < a.shape[1]:
        f = svd(a.T, max_sweeps)
        return SvdFactors(u=f.v, sigma=f.sigma, v=f.u)
    sigma, u, v = _jacobi(a, True, max_sweeps)
    return SvdFactors(u=u, sigma=sigma, v=v)


def singular_values(a, max_sweeps=MAX_JACOBI_SWEEPS):
    """Singular values only (no vector accumulation), non-increasing."""
    a = as_matrix(a)
    if a.shape[0] < a.shape[1]:
        a = a.T
    return _jacobi(a, False, max_sweeps)[0]


def rank_tolerance(shape, sigma_max):
    """Singular values at or below this are treated as zero."""
    return max(shape) * EPS * sigma_max


def orth(a):
    """Orthonormal basis for ``range(a)`` from its left singular vectors.

    Columns are ordered by decreasing singular value; directions with
    singular value at or below ``max(m, n) * eps * sigma_1`` are dropped.
    """
    a = as_matrix(a)
    f = svd(a)
    if f.sigma[0] == 0.0:
        raise EmptyBasisError("cannot build a basis for an all-zero matrix")
    rank = int(np.count_nonzero(f.sigma > rank_tolerance(a.shape, f.sigma[0])))
    return f.u[:, :rank]


def pinv(a):
    """Moore-Penrose pseudoinverse via :func:`svd` with the rank tolerance."""
    a = as_matrix(a)
    f = svd(a)
    if f.sigma[0] == 0.0:
        return np.zeros(a.shape[::-1])
    keep = f.sigma > rank_tolerance(a.shape, f.sigma[0])
    return (f.v[:, keep] / f.sigma[keep]) @ f.u[:, keep].T


def frobenius_norm(a):
    e = _power_of_two_scale(a)
    b = np.ldexp(a, -e)
    return float(np.ldexp(np.sqrt(np.einsum("ij,ij->", b, b)), e))


def spectral_norm(a, tol=1e-13, check_every=6):
    """Largest singular value.

    Small matrices go through :func:`singular_values`.  Larger ones use
    Golub-Kahan-Lanczos bidiagonalization with full reorthogonalization,
    stopping once the Ritz residual ``beta * |x_last|`` falls below
    ``tol * sigma``; some singular value then lies within that residual
    of the returned estimate, which approaches sigma_1 from below.
    """
    a = as_matrix(a)
    m, n = a.shape
    if min(m, n) <= 48:
        return float(singular_values(a)[0])
    if not a.any():
        return 0.0
    e = _power_of_two_scale(a)
    if e != 0:
        return float(np.ldexp(spectral_norm(np.ldexp(a, -e), tol, check_every), e))
    steps = min(m, n)
    rng = np.random.Generator(np.random.Philox(0x5EED))
    V = np.zeros((n, steps + 1))
    U = np.zeros((m, steps))
    alphas = np.zeros(steps)
    betas = np.zeros(steps)
    v = rng.standard_normal(n)
    V[:, 0] = v / np.linalg.norm(v)
    u = a @ V[:, 0]
    alphas[0] = np.linalg.norm(u)
    if alphas[0] == 0.0:
        # unlucky start inside the null space
        v = rng.standard_normal(n)
        V[:, 0] = v / np.linalg.norm(v)
        u = a @ V[:, 0]
        alphas[0] = np.linalg.norm(u)
    U[:, 0] = u / alphas[0]
    estimate = alphas[0]
    for j in range(steps):
        w = a.T @ U[:, j] - alphas[j] * V[:, j]
        for _ in range(2):
            w -= V[:, : j + 1] @ (V[:, : j + 1].T @ w)
        betas[j] = np.linalg.norm(w)
        last = j + 1 == steps
        if last or betas[j] <= EPS * estimate or (j + 1) % check_every == 0:
            b = np.diag(alphas[: j + 1]) + np.diag(betas[:j], 1)
            f = svd(b)
            estimate = f.sigma[0]
            residual = betas[j] * abs(f.u[-1, 0])
            if last or residual <= tol * estimate:
                return float(estimate)
        V[:, j + 1] = w / betas[j]
        u = a @ V[:, j + 1] - betas[j] * U[:, j]
        for _ in range(2):
            u -= U[:, : j + 1] @ (U[:, : j + 1].T @ u)
        alphas[j + 1] = np.linalg.norm(u)
        if alphas[j + 1] == 0.0:
            b = np.diag(alphas[: j + 2]) + np.diag(betas[: j + 1], 1)
            return float(singular_values(b)[0])
        U[:, j + 1] = u / alphas[j + 1]
    return float(estimate)


def matrix_norm(a, which="frobenius"):
    """``which`` is ``"spectral"`` or ``"frobenius"``."""
    a = as_matrix(a)
    if which == "frobenius":
        return frobenius_norm(a)
    if which == "spectral":
        return spectral_norm(a)
    raise ValidationError(f"unknown norm {which!r}")
