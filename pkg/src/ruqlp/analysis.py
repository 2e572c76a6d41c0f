"""Observed accuracy of a QLP factorization and the guarantees it must meet.

Each guarantee becomes a :class:`BoundRow` pairing an observed value with
its bound.  Rows carry a descriptive ``theorem`` tag:

``rank_reveal_r``            singular values of R11 and norms of R22
``rank_reveal_l``            the same for L11, L22 and L
``canonical_angles``         per-index sines of the Q and P subspace angles
``angle_cos_tan``            cosine lower and tangent upper bounds
``subspace_distance``        2-norm and Frobenius norm of the sine vectors
``singular_vector_angles``   angles to individual singular vectors
``low_rank_error``           projection error chains for Q and P
``expected_*``               averages over Gaussian sketches
"""
import csv
import io
import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .errors import DomainError, RankDeficientSketchError, ValidationError
from .matcore import (
    as_matrix,
    complete_basis,
    frobenius_norm,
    pinv,
    rank_tolerance,
    singular_values,
    spectral_norm,
    svd,
)

NORMS = ("spectral", "frobenius")
CSV_HEADER = ("quantity", "index", "norm", "observed", "bound", "satisfied", "theorem")
SLACK = 1e-12
ORTHONORMAL_TOL = 1e-8


def _norm(a, which):
    if a.size == 0:
        return 0.0
    return spectral_norm(a) if which == "spectral" else frobenius_norm(a)


def _vector_norm(values, which):
    if len(values) == 0:
        return 0.0
    return float(np.max(values)) if which == "spectral" else float(np.sqrt(np.sum(values**2)))


# ---------------------------------------------------------------- spectrum


@dataclass(frozen=True)
class SpectrumSummary:
    """Gap ratios of a spectrum split after index ``k``.

    ``delta[i-1] = sigma_{k+1} / sigma_i`` for ``i <= k``;
    ``gamma = sigma_min / sigma_max``; ``tail`` maps a norm name to the
    norm of the trailing singular values.
    """

    sigma: np.ndarray
    k: int
    delta: np.ndarray
    gamma: float
    tail: dict

    @property
    def sigma_k(self):
        return float(self.sigma[self.k - 1])


def summarize_spectrum(sigma, k):
    sigma = np.asarray(sigma, dtype=np.float64)
    if not 1 <= k <= len(sigma):
        raise ValidationError(f"k = {k} outside 1..{len(sigma)}")
    if sigma[k - 1] <= 0.0:
        raise DomainError(f"sigma_{k} is zero, gap ratios are undefined")
    below = sigma[k] if k < len(sigma) else 0.0
    tail = sigma[k:]
    return SpectrumSummary(
        sigma=sigma,
        k=k,
        delta=below / sigma[:k],
        gamma=float(sigma[-1] / sigma[0]),
        tail={"spectral": float(tail.max()) if tail.size else 0.0,
              "frobenius": float(np.sqrt(np.sum(tail**2)))},
    )


# ---------------------------------------------------------------- sketch split


@dataclass(frozen=True)
class SketchPartition:
    """Sketch rotated into the leading (k) and trailing singular directions."""

    phi_hat_1: np.ndarray
    phi_hat_2: np.ndarray
    coupling: float


def _left_complement(u, k, m):
    """Orthonormal basis for the left singular directions after the k-th."""
    rest = u[:, k:]
    if u.shape[1] < m:
        rest = np.hstack([rest, complete_basis(u)])
    return rest


def partition_sketch(a, phi, k, oracle=None):
    """Split ``U^T phi`` after row ``k`` and measure ``||Phi2 pinv(Phi1)||_2``."""
    a = as_matrix(a)
    phi = as_matrix(phi, "phi")
    m = a.shape[0]
    if phi.shape[0] != m:
        raise ValidationError(f"phi has {phi.shape[0]} rows, matrix has {m}")
    if not 1 <= k <= m:
        raise ValidationError(f"k = {k} outside 1..{m}")
    oracle = oracle or svd(a)
    top = oracle.u[:, :k].T @ phi
    if k == m:
        return SketchPartition(top, np.zeros((0, phi.shape[1])), 0.0)
    rest = _left_complement(oracle.u, k, m).T @ phi
    sv = singular_values(top)
    if len(sv) < k or sv[-1] <= rank_tolerance(top.shape, sv[0]):
        raise RankDeficientSketchError(
            f"projected sketch has numerical rank below k = {k}"
        )
    coupling = float(singular_values(rest @ pinv(top))[0])
    return SketchPartition(top, rest, coupling)


# ---------------------------------------------------------------- angles


@dataclass(frozen=True)
class Angles:
    sines: np.ndarray    # ascending
    cosines: np.ndarray  # descending, index-aligned with sines


def _check_orthonormal(x, name):
    gram = x.T @ x
    err = np.abs(gram - np.eye(x.shape[1])).max() if gram.size else 0.0
    if err > ORTHONORMAL_TOL:
        raise ValidationError(f"{name} columns are not orthonormal (max deviation {err:.2e})")


def principal_angles(x, y):
    """Sines and cosines of the principal angles between range(x) and range(y).

    Sines come from ``(I - x x^T) y`` and cosines from ``x^T y``; both
    are accurate where the other loses digits.
    """
    x = as_matrix(x, "x")
    y = as_matrix(y, "y")
    if x.shape[0] != y.shape[0]:
        raise ValidationError("x and y must have the same number of rows")
    _check_orthonormal(x, "x")
    _check_orthonormal(y, "y")
    count = min(x.shape[1], y.shape[1])
    cos = np.clip(singular_values(x.T @ y)[:count], 0.0, 1.0)
    residual = y - x @ (x.T @ y)
    sin = np.clip(np.sort(singular_values(residual))[:count], 0.0, 1.0)
    return Angles(sines=sin, cosines=cos)


def vector_angle_sines(basis, vectors):
    """Sine of the angle between range(basis) and each column of ``vectors``."""
    residual = vectors - basis @ (basis.T @ vectors)
    return np.linalg.norm(residual, axis=0)


# ---------------------------------------------------------------- observations


@dataclass(frozen=True)
class EmpiricalErrors:
    """What one factorization actually achieved (angle arrays have length k)."""

    k: int
    sin_theta: np.ndarray
    cos_theta: np.ndarray
    sin_phi: np.ndarray
    cos_phi: np.ndarray
    sin_q_u: np.ndarray
    sin_p_v: np.ndarray
    l_values: np.ndarray
    err_q: dict
    err_q_rank_k: dict
    err_p: dict
    err_p_rank_k: dict


def _rank_k(b, k):
    f = svd(b)
    return f.truncate(min(k, len(f.sigma)))


def empirical_errors(a, f, k, oracle=None):
    """Angles to the leading singular subspaces and projection errors."""
    a = as_matrix(a)
    if not 1 <= k <= min(f.q_mat.shape[1], f.p_mat.shape[1]):
        raise ValidationError(f"k = {k} exceeds the factor width {f.q_mat.shape[1]}")
    oracle = oracle or svd(a)
    u_k, v_k = oracle.u[:, :k], oracle.v[:, :k]
    q, p = f.q_mat, f.p_mat
    theta = principal_angles(q, u_k)
    phi = principal_angles(p, v_k)

    qta = q.T @ a
    ap = a @ p
    resid = {
        "q": a - q @ qta,
        "q_k": a - q @ _rank_k(qta, k),
        "p": a - ap @ p.T,
        "p_k": a - _rank_k(ap, k) @ p.T,
    }
    norms = {key: {w: _norm(m, w) for w in NORMS} for key, m in resid.items()}
    return EmpiricalErrors(
        k=k,
        sin_theta=theta.sines,
        cos_theta=theta.cosines,
        sin_phi=phi.sines,
        cos_phi=phi.cosines,
        sin_q_u=vector_angle_sines(q, u_k),
        sin_p_v=vector_angle_sines(p, v_k),
        l_values=f.l_values,
        err_q=norms["q"],
        err_q_rank_k=norms["q_k"],
        err_p=norms["p"],
        err_p_rank_k=norms["p_k"],
    )


# ---------------------------------------------------------------- report rows


@dataclass(frozen=True)
class BoundRow:
    """One guarantee.  ``index`` 0 marks an aggregate (norm) quantity.

    ``sense`` is ``"upper"`` (observed must not exceed bound) or
    ``"lower"``.  ``observed`` may be None for a bound not yet paired.
    """

    quantity: str
    index: int
    norm: str
    bound: float
    sense: str
    theorem: str
    observed: Optional[float] = None

    def with_observed(self, value):
        return BoundRow(self.quantity, self.index, self.norm, self.bound, self.sense,
                        self.theorem, float(value))

    @property
    def satisfied(self):
        if self.observed is None:
            return None
        slack = SLACK * max(1.0, abs(self.bound))
        if self.sense == "upper":
            return bool(self.observed <= self.bound + slack)
        return bool(self.observed >= self.bound - slack)


def _fmt(x):
    return "" if x is None else format(float(x), ".17g")


class BoundReport:
    """Ordered collection of :class:`BoundRow` with CSV serialization."""

    def __init__(self, rows=()):
        self.rows: List[BoundRow] = list(rows)

    def __iter__(self):
        return iter(self.rows)

    def __len__(self):
        return len(self.rows)

    def extend(self, rows):
        self.rows.extend(rows)

    def violations(self):
        return [r for r in self.rows if r.satisfied is False]

    @property
    def all_satisfied(self):
        return not self.violations()

    def select(self, theorem=None, quantity=None):
        return [r for r in self.rows
                if (theorem is None or r.theorem == theorem)
                and (quantity is None or r.quantity == quantity)]

    def write_csv(self, stream):
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for r in self.rows:
            sat = r.satisfied
            writer.writerow([r.quantity, r.index, r.norm, _fmt(r.observed), _fmt(r.bound),
                             "" if sat is None else str(sat).lower(), r.theorem])

    def to_csv(self):
        buf = io.StringIO()
        self.write_csv(buf)
        return buf.getvalue()


# ---------------------------------------------------------------- bounds


def _growth(delta_k, gamma, c, num_exp, den_exp):
    return 1.0 + delta_k**num_exp * c / (1.0 + gamma**den_exp * c**2)


def deterministic_bounds(s, c, q):
    """Bounds that hold for every realized sketch with coupling ``c``.

    Returns rows without observations; :func:`verify_run` fills them in.
    """
    if not math.isfinite(c) or c < 0:
        raise ValidationError(f"coupling must be finite and nonnegative, got {c}")
    if q < 0:
        raise ValidationError("q must be nonnegative")
    rows = []
    k, sigma, delta, gamma = s.k, s.sigma, s.delta, s.gamma
    dk = float(delta[-1])
    a4 = 4 * q + 4
    a2 = 4 * q + 2

    for tag, block in (("rank_reveal_r", "r"), ("rank_reveal_l", "l")):
        for i in range(1, k + 1):
            lower = sigma[i - 1] / math.sqrt(1.0 + delta[i - 1] ** a4 * c**2)
            rows.append(BoundRow(f"sigma_{block}11", i, "per-index", lower, "lower", tag))
            rows.append(BoundRow(f"sigma_{block}11_cap", i, "per-index", sigma[i - 1],
                                 "upper", tag))
        for w in NORMS:
            rows.append(BoundRow(f"{block}22", 0, w,
                                 _growth(dk, gamma, c, 2 * q + 1, a4) * s.tail[w],
                                 "upper", tag))
    for i in range(1, k + 1):
        rows.append(BoundRow("sigma_l", i, "per-index", sigma[i - 1], "upper", "rank_reveal_l"))

    for i in range(1, k + 1):
        d = delta[i - 1]
        for name, e_num, e_den in (("theta", 2 * q + 2, a4), ("phi", 2 * q + 1, a2)):
            t = d**e_num * c
            root = math.sqrt(1.0 + d**e_den * c**2)
            rows.append(BoundRow(f"sin_{name}", i, "per-index", t / root, "upper",
                                 "canonical_angles"))
            rows.append(BoundRow(f"cos_{name}", i, "per-index", 1.0 / root, "lower",
                                 "angle_cos_tan"))
            rows.append(BoundRow(f"tan_{name}", i, "per-index", t, "upper", "angle_cos_tan"))

    for w in NORMS:
        for name, e_num, e_den in (("q", 2 * q + 1, a4), ("p", 2 * q, a2)):
            b = dk**e_num * c * s.tail[w] / (s.sigma_k * math.sqrt(1.0 + gamma**e_den * c**2))
            rows.append(BoundRow(f"dist_{name}", 0, w, b, "upper", "subspace_distance"))

    for i in range(1, k + 1):
        d = delta[i - 1]
        for name, e_num, e_den in (("q_u", 2 * q + 2, a4), ("p_v", 2 * q + 1, a2)):
            b = d**e_num * c / math.sqrt(1.0 + gamma**e_den * c**2)
            rows.append(BoundRow(f"sin_{name}", i, "per-index", b, "upper",
                                 "singular_vector_angles"))

    for w in NORMS:
        for name, e_num, e_den in (("q", 2 * q + 1, a4), ("p", 2 * q, a2)):
            b = _growth(dk, gamma, c, e_num, e_den) * s.tail[w]
            rows.append(BoundRow(f"err_{name}_rank_k", 0, w, b, "upper", "low_rank_error"))
    return rows


def expectation_constants(m, k, p):
    """``(omega_1, omega_2, omega, C)`` for averages over Gaussian sketches."""
    if k < 1 or m <= k:
        raise DomainError(f"need 1 <= k < m, got k = {k}, m = {m}")
    if p < 2:
        raise DomainError(f"oversampling p = {p} < 2 leaves sqrt(k / (p - 1)) undefined")
    omega_1 = math.sqrt(m - k) + math.sqrt(k + p) + 7.0
    omega_2 = 4.0 * math.e * math.sqrt(k + p) / (p + 1)
    big_c = math.sqrt(k / (p - 1)) + math.e * math.sqrt((m - k) * (p + k)) / p
    return omega_1, omega_2, omega_1 * omega_2, big_c


def expected_bounds(m, k, p, q, s):
    """Bounds on averages over the Gaussian sketch (no observations)."""
    _, _, omega, big_c = expectation_constants(m, k, p)
    rows = []
    sigma, delta, gamma = s.sigma, s.delta, s.gamma
    dk = float(delta[-1])
    a4, a2 = 4 * q + 4, 4 * q + 2
    for i in range(1, k + 1):
        lower = sigma[i - 1] / math.sqrt(1.0 + delta[i - 1] ** a4 * omega**2)
        rows.append(BoundRow("sigma_r11", i, "per-index", lower, "lower",
                             "expected_rank_reveal"))
    for w in NORMS:
        rows.append(BoundRow("r22", 0, w, (1.0 + big_c * dk ** (2 * q + 1)) * s.tail[w],
                             "upper", "expected_rank_reveal"))
    for i in range(1, k + 1):
        d = delta[i - 1]
        for name, e_num, e_den in (("theta", 2 * q + 2, a4), ("phi", 2 * q + 1, a2)):
            b = d**e_num * omega / math.sqrt(1.0 + d**e_den * omega**2)
            rows.append(BoundRow(f"sin_{name}", i, "per-index", b, "upper",
                                 "expected_canonical_angles"))
    for w in NORMS:
        for name, e_num, e_den in (("q", 2 * q + 1, a4), ("p", 2 * q, a2)):
            b = dk**e_num * omega * s.tail[w] / (s.sigma_k * math.sqrt(1.0 + dk**e_den * omega**2))
            rows.append(BoundRow(f"dist_{name}", 0, w, b, "upper", "expected_subspace_distance"))
    for i in range(1, k + 1):
        d = delta[i - 1]
        for name, e_num, e_den in (("q_u", 2 * q + 2, a4), ("p_v", 2 * q + 1, a2)):
            b = d**e_num * omega / math.sqrt(1.0 + gamma**e_den * omega**2)
            rows.append(BoundRow(f"sin_{name}", i, "per-index", b, "upper",
                                 "expected_singular_vector_angles"))
    for w in NORMS:
        for name, e in (("q", 2 * q + 1), ("p", 2 * q)):
            rows.append(BoundRow(f"err_{name}", 0, w, (1.0 + big_c * dk**e) * s.tail[w],
                                 "upper", "expected_low_rank_error"))
    return rows


# ---------------------------------------------------------------- pairing


def observed_quantities(a, f, k, oracle=None):
    """Map ``(quantity, index, norm)`` to the value a bound row refers to."""
    if f.r_mat is None:
        raise ValidationError("factors carry no R block; run ru_qlp to get one")
    errs = empirical_errors(a, f, k, oracle)
    obs = {}
    blocks = {"r": f.r_mat, "l": f.l_mat}
    for name, mat in blocks.items():
        sv11 = singular_values(mat[:k, :k])
        for i in range(1, k + 1):
            obs[(f"sigma_{name}11", i, "per-index")] = sv11[i - 1]
            obs[(f"sigma_{name}11_cap", i, "per-index")] = sv11[i - 1]
        for w in NORMS:
            obs[(f"{name}22", 0, w)] = _norm(mat[k:, k:], w)
    sv_l = singular_values(f.l_mat)
    for i in range(1, k + 1):
        obs[("sigma_l", i, "per-index")] = sv_l[i - 1]
    for name, sin, cos in (("theta", errs.sin_theta, errs.cos_theta),
                           ("phi", errs.sin_phi, errs.cos_phi)):
        tan = np.where(cos > 0, sin / np.where(cos > 0, cos, 1.0), np.inf)
        for i in range(1, k + 1):
            obs[(f"sin_{name}", i, "per-index")] = sin[i - 1]
            obs[(f"cos_{name}", i, "per-index")] = cos[i - 1]
            obs[(f"tan_{name}", i, "per-index")] = tan[i - 1]
    for w in NORMS:
        obs[("dist_q", 0, w)] = _vector_norm(errs.sin_theta, w)
        obs[("dist_p", 0, w)] = _vector_norm(errs.sin_phi, w)
        obs[("err_q", 0, w)] = errs.err_q[w]
        obs[("err_p", 0, w)] = errs.err_p[w]
        obs[("err_q_rank_k", 0, w)] = errs.err_q_rank_k[w]
        obs[("err_p_rank_k", 0, w)] = errs.err_p_rank_k[w]
    for i in range(1, k + 1):
        obs[("sin_q_u", i, "per-index")] = errs.sin_q_u[i - 1]
        obs[("sin_p_v", i, "per-index")] = errs.sin_p_v[i - 1]
    return obs, errs


def _chain_rows(obs, k):
    """Rows whose bound is itself an observation (ordering guarantees)."""
    rows = []
    for i in range(1, k + 1):
        rows.append(BoundRow("sigma_l_vs_l11", i, "per-index",
                             obs[("sigma_l11", i, "per-index")], "lower", "rank_reveal_l",
                             obs[("sigma_l", i, "per-index")]))
    for w in NORMS:
        for name in ("q", "p"):
            rows.append(BoundRow(f"err_{name}", 0, w, obs[(f"err_{name}_rank_k", 0, w)],
                                 "upper", "low_rank_error", obs[(f"err_{name}", 0, w)]))
    return rows


def verify_run(a, f, oracle=None, k=None):
    """Every per-run guarantee for ``f = ru_qlp(a, config)``, paired with observations."""
    a = as_matrix(a)
    if f.phi is None or f.config is None:
        raise ValidationError("factors do not retain the sketch; use ru_qlp output")
    k = f.config.k if k is None else k
    oracle = oracle or svd(a)
    part = partition_sketch(a, f.phi, k, oracle)
    spec = summarize_spectrum(oracle.sigma, k)
    obs, _ = observed_quantities(a, f, k, oracle)
    report = BoundReport()
    for row in deterministic_bounds(spec, part.coupling, f.config.q):
        report.rows.append(row.with_observed(obs[(row.quantity, row.index, row.norm)]))
    report.extend(_chain_rows(obs, k))
    return report


def average_observations(observations):
    """Entrywise mean of several :func:`observed_quantities` maps."""
    keys = observations[0].keys()
    return {key: float(np.mean([o[key] for o in observations])) for key in keys}


def expected_report(mean_obs, m, k, p, q, s):
    """Pair sketch-averaged observations with the expectation bounds."""
    return BoundReport(
        row.with_observed(mean_obs[(row.quantity, row.index, row.norm)])
        for row in expected_bounds(m, k, p, q, s)
    )
