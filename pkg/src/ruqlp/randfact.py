"""Randomized rank-revealing factorizations.

``ru_qlp`` builds ``A ~= Q L P^T`` from one Gaussian sketch, optional power
iteration and two unpivoted QR factorizations.  ``pivoted_qlp`` is the
deterministic two-pivoted-QR variant, and ``randomized_baseline`` runs the
competing methods (randomized SVD, compressed UTV, pivoted two-sided
orthogonal) on top of the same sketching step.

The matrix argument of :func:`pi_orth` and :func:`ru_qlp` may be any
object exposing ``shape``, ``T`` and ``@``; only real ndarrays are
validated.  This lets tests count how often ``A`` is touched.
"""
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigurationError, DegenerateSketchError, ValidationError
from .matcore import SvdFactors, as_matrix, orth, qr_pivoted, qr_unpivoted, svd

COLLAPSE_POLICIES = ("raise", "truncate")
BASELINE_METHODS = ("rsvd", "cor_utv", "rp_tsod")


@dataclass(frozen=True)
class SketchConfig:
    """Sketch parameters: target rank ``k``, oversampling ``p``, power steps ``q``.

    ``ortho_interval`` orthonormalizes every that many half-steps of the
    power iteration (the last one is always orthonormalized).
    ``on_collapse`` decides what happens when the sampled basis loses rank:
    ``"raise"`` stops with :class:`DegenerateSketchError`, ``"truncate"``
    continues with the surviving columns.
    """

    k: int
    p: int = 0
    q: int = 0
    ortho_interval: int = 1
    seed: int = 0
    on_collapse: str = "raise"

    def __post_init__(self):
        for name in ("k", "p", "q", "ortho_interval", "seed"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
                raise ConfigurationError(f"{name} must be an integer, got {value!r}")
        if self.k < 1:
            raise ConfigurationError(f"k must be positive, got {self.k}")
        if self.p < 0 or self.q < 0:
            raise ConfigurationError("p and q must be nonnegative")
        if self.ortho_interval < 1:
            raise ConfigurationError(f"ortho_interval must be >= 1, got {self.ortho_interval}")
        if not 0 <= self.seed < 2**64:
            raise ConfigurationError("seed must fit in 64 unsigned bits")
        if self.on_collapse not in COLLAPSE_POLICIES:
            raise ConfigurationError(f"on_collapse must be one of {COLLAPSE_POLICIES}")

    @property
    def d(self):
        return self.k + self.p

    def check_shape(self, shape):
        m, n = shape
        if self.d > min(m, n):
            raise ConfigurationError(
                f"sample count d = k + p = {self.d} exceeds min(m, n) = {min(m, n)}"
            )


@dataclass(frozen=True)
class QlpFactors:
    """``A ~= q_mat @ l_mat @ p_mat.T`` with ``l_mat`` lower triangular.

    ``r_mat`` is the triangular factor of ``A @ p_bar`` and ``p_bar`` the
    sampled row-space basis; both are kept for bound evaluation, as is the
    Gaussian ``phi``.  Deterministic factorizations leave them ``None``.
    """

    q_mat: np.ndarray
    l_mat: np.ndarray
    p_mat: np.ndarray
    config: Optional[SketchConfig] = None
    phi: Optional[np.ndarray] = field(default=None, repr=False)
    r_mat: Optional[np.ndarray] = field(default=None, repr=False)
    p_bar: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def l_values(self):
        return np.abs(np.diag(self.l_mat))

    def reconstruct(self):
        return self.q_mat @ self.l_mat @ self.p_mat.T


@dataclass(frozen=True)
class UtvFactors:
    """``A ~= u_mat @ t_mat @ v_mat.T`` with ``t_mat`` upper triangular."""

    u_mat: np.ndarray
    t_mat: np.ndarray
    v_mat: np.ndarray
    config: Optional[SketchConfig] = None

    @property
    def t_values(self):
        return np.abs(np.diag(self.t_mat))

    def reconstruct(self):
        return self.u_mat @ self.t_mat @ self.v_mat.T


def reconstruct(factors):
    """Dense approximation carried by any factor object of this package."""
    if isinstance(factors, SvdFactors):
        return factors.truncate(len(factors.sigma))
    return factors.reconstruct()


def value_estimates(factors):
    """Singular-value estimates: sigma, |diag L| or |diag T|."""
    if isinstance(factors, SvdFactors):
        return factors.sigma
    if isinstance(factors, UtvFactors):
        return factors.t_values
    return factors.l_values


def _operand(a):
    return as_matrix(a) if isinstance(a, (np.ndarray, list, tuple)) else a


def sample_gaussian(m, d, seed):
    """Standard normal m-by-d sketch from a Philox stream.

    Column j is the j-th block of m draws, so widening ``d`` keeps the
    earlier columns unchanged.
    """
    rng = np.random.Generator(np.random.Philox(seed))
    return np.asfortranarray(rng.standard_normal((d, m)).T)


def pi_orth(a, phi, q, ortho_interval=1, on_collapse="raise"):
    """Orthonormal n-by-d basis for ``range((A^T A)^q A^T phi)``.

    Half-step 0 forms ``A^T phi``; half-steps 1..2q alternate ``A @`` and
    ``A.T @``.  A half-step is orthonormalized when its index is a multiple
    of ``ortho_interval`` or it is the last one.
    """
    a = _operand(a)
    phi = as_matrix(phi, "phi")
    m, n = a.shape
    if phi.shape[0] != m:
        raise ValidationError(f"phi has {phi.shape[0]} rows, matrix has {m}")
    if phi.shape[1] > n:
        raise ConfigurationError(f"phi has {phi.shape[1]} columns, more than n = {n}")
    if isinstance(q, bool) or q < 0 or ortho_interval < 1:
        raise ConfigurationError("need q >= 0 and ortho_interval >= 1")
    if on_collapse not in COLLAPSE_POLICIES:
        raise ConfigurationError(f"on_collapse must be one of {COLLAPSE_POLICIES}")

    last = 2 * q
    block = np.asarray(a.T @ phi)
    for step in range(last + 1):
        if step > 0:
            block = np.asarray(a @ block) if step % 2 else np.asarray(a.T @ block)
        if step % ortho_interval == 0 or step == last:
            width = block.shape[1]
            block = orth(block)
            if block.shape[1] < width and on_collapse == "raise":
                raise DegenerateSketchError(
                    f"sampled basis dropped from {width} to {block.shape[1]} columns", step
                )
    return block


def _sketch(a, config):
    a = _operand(a)
    config.check_shape(a.shape)
    phi = sample_gaussian(a.shape[0], config.d, config.seed)
    p_bar = pi_orth(a, phi, config.q, config.ortho_interval, config.on_collapse)
    return phi, p_bar, np.asarray(a @ p_bar)


def ru_qlp(a, config):
    """Randomized unpivoted QLP: ``A ~= Q L P^T`` of rank ``config.d``.

    With ``A P_bar = Q R`` and ``R^T = P_tilde R_tilde`` the result is
    ``Q``, ``L = R_tilde^T`` and ``P = P_bar P_tilde``; ``A`` is multiplied
    exactly ``2q + 2`` times.
    """
    phi, p_bar, ap = _sketch(a, config)
    first = qr_unpivoted(ap)
    second = qr_unpivoted(first.r.T)
    return QlpFactors(
        q_mat=first.q,
        l_mat=second.r.T,
        p_mat=p_bar @ second.q,
        config=config,
        phi=phi,
        r_mat=first.r,
        p_bar=p_bar,
    )


def pivoted_qlp(a):
    """Deterministic QLP from two column-pivoted QR factorizations.

    ``A Pi_1 = Q_1 R_1`` and ``R_1^T Pi_2 = P_2 L^T`` give
    ``A = (Q_1 Pi_2) L (Pi_1 P_2)^T``.
    """
    a = as_matrix(a)
    first = qr_pivoted(a)
    second = qr_pivoted(first.r.T)
    q_mat = first.q[:, second.perm]
    p_mat = np.empty_like(second.q)
    p_mat[first.perm, :] = second.q
    return QlpFactors(q_mat=q_mat, l_mat=second.r.T, p_mat=p_mat)


def randomized_baseline(a, method, config):
    """Sketch with :func:`pi_orth`, then factor ``B = A @ P_bar``.

    ``rsvd`` takes the SVD of ``B`` (returns :class:`SvdFactors`),
    ``cor_utv`` a column-pivoted QR (:class:`UtvFactors`), and ``rp_tsod`` a
    pivoted QLP (:class:`QlpFactors`).
    """
    if method not in BASELINE_METHODS:
        raise ValidationError(f"unknown method {method!r}; choose from {BASELINE_METHODS}")
    phi, p_bar, b = _sketch(a, config)
    if method == "rsvd":
        f = svd(b)
        return SvdFactors(u=f.u, sigma=f.sigma, v=p_bar @ f.v)
    if method == "cor_utv":
        f = qr_pivoted(b)
        return UtvFactors(u_mat=f.q, t_mat=f.r, v_mat=p_bar[:, f.perm], config=config)
    f = pivoted_qlp(b)
    return QlpFactors(
        q_mat=f.q_mat, l_mat=f.l_mat, p_mat=p_bar @ f.p_mat, config=config, phi=phi, p_bar=p_bar
    )


METHODS = ("ruqlp",) + BASELINE_METHODS


def decompose(a, method, config):
    """Dispatch by name over every randomized method, ``ruqlp`` included."""
    if method == "ruqlp":
        return ru_qlp(a, config)
    return randomized_baseline(a, method, config)
