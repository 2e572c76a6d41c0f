"""Pure numpy versions of the compiled kernels in ``_kernels.pyx``.

Same signatures, same in-place contracts.  The Jacobi routine differs in
pair ordering only: it rotates the disjoint pairs of a round-robin
schedule together so each round is one vectorized update.
"""
import numpy as np

EPS = np.finfo(np.float64).eps
SMALL = 2.0**-300
GROW = 2.0**300


def _nrm2(x, axis=None):
    """2-norm with scaling, so tiny or huge entries do not under/overflow."""
    scale = np.max(np.abs(x), axis=axis, initial=0.0)
    safe = np.where(scale > 0, scale, 1.0)
    y = x / safe
    return scale * np.sqrt(np.sum(y * y, axis=axis))


def householder_qr(a, pivot=False):
    m, n = a.shape
    p = min(m, n)
    tau = np.zeros(p)
    perm = np.arange(n, dtype=np.int64)
    for j in range(p):
        if pivot:
            norms = _nrm2(a[j:, j:], axis=0)
            piv = j + int(np.argmax(norms))
            if piv != j:
                a[:, [j, piv]] = a[:, [piv, j]]
                perm[[j, piv]] = perm[[piv, j]]

        alpha = a[j, j]
        xnorm = float(_nrm2(a[j + 1:, j])) if j + 1 < m else 0.0
        if xnorm == 0.0:
            if alpha >= 0.0:
                continue
            tau[j] = 2.0
            a[j, j] = -alpha
        else:
            beta = np.hypot(alpha, xnorm)
            knt = 0
            while beta < SMALL and knt < 4:
                knt += 1
                a[j + 1:, j] *= GROW
                alpha *= GROW
                xnorm = float(_nrm2(a[j + 1:, j]))
                beta = np.hypot(alpha, xnorm)
            if alpha > 0.0 and xnorm <= EPS * alpha:
                a[j + 1:, j] = 0.0
                a[j, j] = alpha * SMALL**knt
                continue
            if alpha <= 0.0:
                v0 = alpha - beta
            else:
                v0 = -(xnorm / (alpha + beta)) * xnorm
            tau[j] = 2.0 / (1.0 + (xnorm / v0) ** 2)
            a[j + 1:, j] /= v0
            a[j, j] = beta * SMALL**knt

        if j + 1 < n:
            v = np.concatenate(([1.0], a[j + 1:, j]))
            block = a[j:, j + 1:]
            block -= tau[j] * np.outer(v, v @ block)
    return tau, (perm if pivot else None)


def form_q(packed, tau, ncols):
    m = packed.shape[0]
    q = np.zeros((m, ncols), order="F")
    idx = np.arange(min(m, ncols))
    q[idx, idx] = 1.0
    for j in range(min(len(tau), ncols) - 1, -1, -1):
        if tau[j] == 0.0:
            continue
        v = np.concatenate(([1.0], packed[j + 1:, j]))
        block = q[j:, j:]
        block -= tau[j] * np.outer(v, v @ block)
    return q


def _round_robin(n):
    """Rounds of disjoint (i, j) pairs covering every pair exactly once."""
    players = list(range(n)) + ([-1] if n % 2 else [])
    size = len(players)
    rounds = []
    for _ in range(size - 1):
        pairs = [(players[i], players[size - 1 - i]) for i in range(size // 2)]
        pairs = [(min(x, y), max(x, y)) for x, y in pairs if x >= 0 and y >= 0]
        rounds.append((np.array([x for x, _ in pairs]), np.array([y for _, y in pairs])))
        players = [players[0]] + [players[-1]] + players[1:-1]
    return rounds


def jacobi_sweeps(g, v, tol, max_sweeps):
    n = g.shape[1]
    if n < 2 or g.shape[0] == 0:
        return 1
    want_v = v.shape[1] == n and v.shape[0] > 0
    rounds = _round_robin(n)
    for sweep in range(max_sweeps):
        rotations = 0
        for left, right in rounds:
            gi, gj = g[:, left], g[:, right]
            a = np.einsum("ij,ij->j", gi, gi)
            b = np.einsum("ij,ij->j", gj, gj)
            gam = np.einsum("ij,ij->j", gi, gj)
            active = (a > 0) & (b > 0) & (np.abs(gam) > tol * np.sqrt(a) * np.sqrt(b))
            if not active.any():
                continue
            rotations += int(active.sum())
            left, right = left[active], right[active]
            a, b, gam = a[active], b[active], gam[active]
            gi, gj = gi[:, active], gj[:, active]
            zeta = (b - a) / (2.0 * gam)
            with np.errstate(over="ignore"):
                t = np.copysign(1.0, zeta) / (np.abs(zeta) + np.sqrt(1.0 + zeta * zeta))
            huge = np.abs(zeta) > 1e150
            t[huge] = 0.5 / zeta[huge]
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = c * t
            g[:, left] = c * gi - s * gj
            g[:, right] = s * gi + c * gj
            if want_v:
                vi, vj = v[:, left], v[:, right]
                v[:, left] = c * vi - s * vj
                v[:, right] = s * vi + c * vj
        if rotations == 0:
            return sweep + 1
    return -1
