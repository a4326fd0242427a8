"""Numerical core: ridge-regularized SPD solves and the box-constrained dual.

``ridge_factorize`` Cholesky-factors A'A + delta*I once so that many right
hand sides can be solved cheaply. ``solve_box_qp`` maximizes
``sum(alpha) - 0.5 * alpha' Q alpha`` over the box ``0 <= alpha <= upper``
with cyclic clipped coordinate ascent and certifies the result through the
projected-gradient KKT residual.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from . import _kernels

DEFAULT_TOL = 1e-8
DEFAULT_MAX_SWEEPS = 10_000
DEFAULT_DELTA = 1e-5


class NumericalError(Exception):
    """A linear-algebra or optimization step failed beyond recovery."""


@dataclass(frozen=True)
class RidgeGram:
    source: np.ndarray  # r x c
    delta: float
    factor: tuple  # scipy cho_factor output for source'source + delta*I

    @property
    def c(self) -> int:
        return self.source.shape[1]


def ridge_factorize(A, delta: float) -> RidgeGram:
    """Cholesky factorization of A'A + delta*I for repeated solves."""
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2:
        raise ValueError("A must be a 2-D matrix")
    if not np.all(np.isfinite(A)):
        raise NumericalError("cannot factorize a matrix with non-finite entries")
    if delta <= 0:
        raise ValueError(f"ridge delta must be positive, got {delta}")
    gram = A.T @ A + delta * np.eye(A.shape[1])
    try:
        factor = cho_factor(gram, lower=True)
    except np.linalg.LinAlgError as exc:
        cond = float(np.linalg.cond(gram))
        raise NumericalError(
            f"ridge factorization failed (condition estimate {cond:.3e}); "
            f"delta={delta} is too small for this matrix"
        ) from exc
    return RidgeGram(source=A, delta=float(delta), factor=factor)


def solve_spd(g: RidgeGram, rhs):
    """Solve (A'A + delta*I) x = rhs for one or many right-hand sides."""
    rhs = np.asarray(rhs, dtype=np.float64)
    if rhs.shape[0] != g.c:
        raise ValueError(f"rhs has {rhs.shape[0]} rows, expected {g.c}")
    return cho_solve(g.factor, rhs)


@dataclass(frozen=True)
class BoxQP:
    """maximize alpha'1 - 0.5 alpha'Q alpha  s.t.  0 <= alpha <= upper."""

    Q: np.ndarray
    upper: float

    def __post_init__(self):
        Q = np.asarray(self.Q, dtype=np.float64)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
            raise ValueError("Q must be square")
        if not np.all(np.isfinite(Q)):
            raise NumericalError("Q contains non-finite entries")
        scale = max(1.0, float(np.abs(Q).max()))
        if float(np.abs(Q - Q.T).max()) > 1e-8 * scale:
            raise NumericalError("Q is not symmetric")
        Q = np.ascontiguousarray((Q + Q.T) / 2.0)
        if float(Q.diagonal().min()) < -1e-10:
            raise NumericalError("Q has a negative diagonal entry; not PSD")
        if self.upper <= 0:
            raise ValueError(f"box bound must be positive, got {self.upper}")
        Q.setflags(write=False)
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "upper", float(self.upper))

    @property
    def p(self) -> int:
        return self.Q.shape[0]


@dataclass(frozen=True)
class QPSolution:
    alpha: np.ndarray
    objective_value: float
    kkt_residual: float
    iterations: int
    converged: bool


def box_qp_objective(q: BoxQP, alpha) -> float:
    alpha = np.asarray(alpha, dtype=np.float64)
    return float(alpha.sum() - 0.5 * alpha @ q.Q @ alpha)


def kkt_residual(q: BoxQP, alpha) -> float:
    """Max projected-gradient violation of box optimality at ``alpha``.

    The point is clamped to the box first. At an optimum the gradient
    g = 1 - Q alpha must vanish on interior coordinates, be <= 0 at the lower
    bound, and >= 0 at the upper bound.
    """
    a = np.clip(np.asarray(alpha, dtype=np.float64), 0.0, q.upper)
    grad = 1.0 - q.Q @ a
    viol = np.abs(grad)
    at_lower = a <= 0.0
    at_upper = a >= q.upper
    viol[at_lower] = np.maximum(grad[at_lower], 0.0)
    viol[at_upper] = np.maximum(-grad[at_upper], 0.0)
    return float(viol.max())


def solve_box_qp(
    q: BoxQP,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_SWEEPS,
    seed: int = 0,
) -> QPSolution:
    """Cyclic clipped coordinate ascent on the box-constrained dual.

    Each coordinate is maximized exactly and clamped to [0, upper], so the
    objective never decreases across sweeps. Terminates when the KKT
    residual drops to ``tol`` or after ``max_iter`` sweeps; non-convergence
    is reported through the result, not raised. ``seed`` is accepted for
    interface stability; the sweep order is deterministic.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    del seed
    alpha, sweeps, residual = _kernels.box_qp_sweeps(q.Q, q.upper, tol, max_iter)
    return QPSolution(
        alpha=alpha,
        objective_value=box_qp_objective(q, alpha),
        kkt_residual=float(residual),
        iterations=int(sweeps),
        converged=bool(residual <= tol),
    )
