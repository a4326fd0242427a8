"""Hot numeric kernels, JIT-compiled with numba when available.

Two kernels dominate training time: the cyclic coordinate-ascent sweeps of
the box-constrained dual solver, and Lloyd's two-cluster iteration used by
ball splitting. Each has a numba ``@njit`` build and a pure-numpy fallback.
Set ``GBTWIN_DISABLE_NUMBA=1`` to force the numpy path (used by
``benchmarks/kernel_bench.py`` to time both). The two paths perform the same
floating-point updates; results agree to round-off.
"""

import os

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and os.environ.get("GBTWIN_DISABLE_NUMBA", "0").lower() not in (
    "1",
    "true",
    "yes",
)


# ---------------------------------------------------------------------------
# box-constrained QP: maximize sum(alpha) - 0.5 * alpha' Q alpha
# subject to 0 <= alpha <= upper, via cyclic clipped coordinate ascent.
# ---------------------------------------------------------------------------


def _box_qp_sweeps_py(Q, upper, tol, max_sweeps):
    p = Q.shape[0]
    alpha = np.zeros(p)
    grad = np.ones(p)  # gradient of the objective: 1 - Q @ alpha
    sweeps = 0
    residual = np.inf
    while sweeps < max_sweeps:
        sweeps += 1
        for i in range(p):
            qii = Q[i, i]
            lin = grad[i] + qii * alpha[i]  # 1 - sum_{j != i} Q_ij alpha_j
            if qii > 0.0:
                new = lin / qii
                if new < 0.0:
                    new = 0.0
                elif new > upper:
                    new = upper
            else:
                # flat or degenerate direction: objective is linear in alpha_i
                new = upper if lin > 0.0 else 0.0
            step = new - alpha[i]
            if step != 0.0:
                grad -= step * Q[i]
                alpha[i] = new
        residual = _projected_residual_py(grad, alpha, upper)
        if residual <= tol:
            # incremental gradient drifts; confirm against a fresh one
            grad = 1.0 - Q @ alpha
            residual = _projected_residual_py(grad, alpha, upper)
            if residual <= tol:
                break
    return alpha, sweeps, residual


def _projected_residual_py(grad, alpha, upper):
    at_lower = alpha <= 0.0
    at_upper = alpha >= upper
    viol = np.abs(grad)
    viol[at_lower] = np.maximum(grad[at_lower], 0.0)
    viol[at_upper] = np.maximum(-grad[at_upper], 0.0)
    return float(viol.max())


def _box_qp_sweeps_loops(Q, upper, tol, max_sweeps):
    p = Q.shape[0]
    alpha = np.zeros(p)
    grad = np.ones(p)
    sweeps = 0
    residual = np.inf
    while sweeps < max_sweeps:
        sweeps += 1
        for i in range(p):
            qii = Q[i, i]
            lin = grad[i] + qii * alpha[i]
            if qii > 0.0:
                new = lin / qii
                if new < 0.0:
                    new = 0.0
                elif new > upper:
                    new = upper
            else:
                new = upper if lin > 0.0 else 0.0
            step = new - alpha[i]
            if step != 0.0:
                for j in range(p):
                    grad[j] -= step * Q[i, j]
                alpha[i] = new
        residual = 0.0
        for i in range(p):
            g = grad[i]
            if alpha[i] <= 0.0:
                v = g if g > 0.0 else 0.0
            elif alpha[i] >= upper:
                v = -g if g < 0.0 else 0.0
            else:
                v = g if g >= 0.0 else -g
            if v > residual:
                residual = v
        if residual <= tol:
            for i in range(p):
                acc = 1.0
                for j in range(p):
                    acc -= Q[i, j] * alpha[j]
                grad[i] = acc
            residual = 0.0
            for i in range(p):
                g = grad[i]
                if alpha[i] <= 0.0:
                    v = g if g > 0.0 else 0.0
                elif alpha[i] >= upper:
                    v = -g if g < 0.0 else 0.0
                else:
                    v = g if g >= 0.0 else -g
                if v > residual:
                    residual = v
            if residual <= tol:
                break
    return alpha, sweeps, residual


# ---------------------------------------------------------------------------
# Lloyd's iteration with k = 2, fixed initial centroids.
# Returns (assignment, iterations, empty_cluster_flag).
# ---------------------------------------------------------------------------


def _lloyd_two_means_py(X, c0, c1, max_iter):
    n = X.shape[0]
    assign = np.zeros(n, dtype=np.int64)
    c0 = c0.copy()
    c1 = c1.copy()
    for it in range(1, max_iter + 1):
        d0 = ((X - c0) ** 2).sum(axis=1)
        d1 = ((X - c1) ** 2).sum(axis=1)
        new_assign = (d0 > d1).astype(np.int64)  # ties go to cluster 0
        n1 = int(new_assign.sum())
        if n1 == 0 or n1 == n:
            return new_assign, it, True
        if it > 1 and np.array_equal(new_assign, assign):
            return new_assign, it, False
        assign = new_assign
        c0 = X[assign == 0].mean(axis=0)
        c1 = X[assign == 1].mean(axis=0)
    return assign, max_iter, False


def _lloyd_two_means_loops(X, c0, c1, max_iter):
    n, m = X.shape
    assign = np.zeros(n, dtype=np.int64)
    c0 = c0.copy()
    c1 = c1.copy()
    for it in range(1, max_iter + 1):
        changed = False
        n1 = 0
        for i in range(n):
            d0 = 0.0
            d1 = 0.0
            for j in range(m):
                t0 = X[i, j] - c0[j]
                d0 += t0 * t0
                t1 = X[i, j] - c1[j]
                d1 += t1 * t1
            a = 1 if d0 > d1 else 0
            n1 += a
            if it == 1 or a != assign[i]:
                changed = True
            assign[i] = a
        if n1 == 0 or n1 == n:
            return assign, it, True
        if not changed:
            return assign, it, False
        for j in range(m):
            c0[j] = 0.0
            c1[j] = 0.0
        for i in range(n):
            if assign[i] == 0:
                for j in range(m):
                    c0[j] += X[i, j]
            else:
                for j in range(m):
                    c1[j] += X[i, j]
        n0 = n - n1
        for j in range(m):
            c0[j] /= n0
            c1[j] /= n1
    return assign, max_iter, False


if HAVE_NUMBA:
    _box_qp_sweeps_nb = njit(cache=True)(_box_qp_sweeps_loops)
    _lloyd_two_means_nb = njit(cache=True)(_lloyd_two_means_loops)
else:  # pragma: no cover
    _box_qp_sweeps_nb = _box_qp_sweeps_loops
    _lloyd_two_means_nb = _lloyd_two_means_loops


def box_qp_sweeps(Q, upper, tol, max_sweeps):
    """Run coordinate-ascent sweeps; returns (alpha, sweeps, kkt_residual)."""
    Q = np.ascontiguousarray(Q, dtype=np.float64)
    if USE_NUMBA:
        return _box_qp_sweeps_nb(Q, float(upper), float(tol), int(max_sweeps))
    return _box_qp_sweeps_py(Q, float(upper), float(tol), int(max_sweeps))


def lloyd_two_means(X, c0, c1, max_iter=100):
    """Two-cluster Lloyd iteration from fixed starting centroids.

    Returns (assignment, iterations, empty_cluster). ``empty_cluster`` is set
    when one cluster captures every point, which callers must handle.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    c0 = np.ascontiguousarray(c0, dtype=np.float64)
    c1 = np.ascontiguousarray(c1, dtype=np.float64)
    if USE_NUMBA:
        return _lloyd_two_means_nb(X, c0, c1, int(max_iter))
    return _lloyd_two_means_py(X, c0, c1, int(max_iter))
