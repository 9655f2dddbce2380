"""Discrete optimal transport between finitely supported distributions.

Cost construction, the entropic Sinkhorn solver, an exact LP solver for
test-scale instances, and the Wasserstein distance built on top of them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from .errors import (
    DimensionError,
    InfeasibleMarginals,
    InvalidExponent,
    KernelUnderflow,
    NumericalError,
)

MASS_TOL = 1e-12
EXACT_MAX_ENTRIES = 10_000


def _frozen(arr):
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class DiscreteDistribution:
    """Probability measure on finitely many points of R^n.

    Parameters
    ----------
    points : array-like, shape (m, n) or (m,)
        Support points. A 1-D array is read as m points on the real line.
    masses : array-like, shape (m,), optional
        Nonnegative weights; normalized by their sum. Uniform if omitted.
        Zero-mass points are dropped.
    """

    points: np.ndarray
    masses: np.ndarray = None

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] == 0 or pts.shape[1] == 0:
            raise DimensionError(f"points must be a nonempty (m, n) array, got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ValueError("points must be finite")

        if self.masses is None:
            w = np.full(pts.shape[0], 1.0 / pts.shape[0])
        else:
            w = np.array(self.masses, dtype=np.float64).reshape(-1)
            if w.shape[0] != pts.shape[0]:
                raise DimensionError(f"{w.shape[0]} masses for {pts.shape[0]} points")
            if not np.all(np.isfinite(w)) or np.any(w < 0):
                raise ValueError("masses must be finite and nonnegative")
            keep = w > 0
            if not keep.any():
                raise ValueError("masses must not all be zero")
            pts, w = pts[keep], w[keep]
            w = w / w.sum()

        object.__setattr__(self, "points", _frozen(pts))
        object.__setattr__(self, "masses", _frozen(w))

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self):
        return self.size


@dataclass(frozen=True, eq=False)
class CostMatrix:
    """Pairwise costs ``||x_i + shift - y_j||_p^p``."""

    entries: np.ndarray
    exponent_p: float
    shift: np.ndarray

    @property
    def shape(self):
        return self.entries.shape

    @property
    def inf_norm(self) -> float:
        return float(self.entries.max())


@dataclass(frozen=True, eq=False)
class Coupling:
    """Transport plan with its squared marginal residuals."""

    plan: np.ndarray
    row_marginal_residual: float
    col_marginal_residual: float

    @property
    def residual(self) -> float:
        return self.row_marginal_residual + self.col_marginal_residual


@dataclass(frozen=True)
class SinkhornConfig:
    """Settings for :func:`sinkhorn_solve`.

    ``epsilon`` bounds ``||P 1 - a||^2 + ||P^T 1 - b||^2`` at termination.
    The residual is evaluated every ``check_interval`` iterations.
    """

    lam: float = 0.1
    epsilon: float = 0.01
    max_iterations: int = 100_000
    check_interval: int = 10

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError(f"lam must be positive, got {self.lam}")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if int(self.max_iterations) < 1:
            raise ValueError("max_iterations must be >= 1")
        if int(self.check_interval) < 1:
            raise ValueError("check_interval must be >= 1")


@dataclass(frozen=True, eq=False)
class SolveReport:
    """Outcome of one solver run.

    ``log_g`` is the log of the product of all kernel entries for the
    entropic solver and ``None`` for the exact one.
    """

    transport_cost: float
    coupling: Coupling
    iterations: int
    converged: bool
    log_g: float | None
    shift_used: np.ndarray = field(default=None)

    @property
    def plan(self) -> np.ndarray:
        return self.coupling.plan


def build_cost_matrix(src, dst, p=2.0, shift=None) -> CostMatrix:
    """Cost matrix between the supports of ``src`` (translated) and ``dst``.

    ``entries[i, j] = sum_k |x_ik + shift_k - y_jk| ** p``.
    """
    if p < 1:
        raise InvalidExponent(f"p must be >= 1, got {p}")
    x, y = src.points, dst.points
    if x.shape[1] != y.shape[1]:
        raise DimensionError(f"source is {x.shape[1]}-D, target is {y.shape[1]}-D")
    if shift is None:
        s = np.zeros(x.shape[1])
    else:
        s = np.array(shift, dtype=np.float64).reshape(-1)
        if s.shape[0] != x.shape[1]:
            raise DimensionError(f"shift has {s.shape[0]} components, points have {x.shape[1]}")

    diff = (x + s)[:, None, :] - y[None, :, :]
    if p == 2:
        entries = np.einsum("ijk,ijk->ij", diff, diff)
    elif p == 1:
        entries = np.abs(diff).sum(axis=-1)
    else:
        entries = (np.abs(diff) ** p).sum(axis=-1)
    return CostMatrix(_frozen(entries), float(p), _frozen(s))


def _marginals(a, b, shape):
    a = np.asarray(a, dtype=np.float64).reshape(-1)
    b = np.asarray(b, dtype=np.float64).reshape(-1)
    if a.shape[0] != shape[0] or b.shape[0] != shape[1]:
        raise DimensionError(f"marginals {a.shape[0]}x{b.shape[0]} do not match cost {shape}")
    return a, b


def _coupling(plan, a, b):
    row = float(np.sum((plan.sum(axis=1) - a) ** 2))
    col = float(np.sum((plan.sum(axis=0) - b) ** 2))
    return Coupling(_frozen(plan), row, col)


def sinkhorn_solve(cost: CostMatrix, a, b, cfg: SinkhornConfig = SinkhornConfig()) -> SolveReport:
    """Entropic OT by alternating diagonal scaling of ``K = exp(-C / lam)``.

    Runs plain (not log-domain) scaling from ``u = v = 1``. Stops once the
    squared marginal residual of ``diag(u) K diag(v)`` is at most
    ``cfg.epsilon``; otherwise returns after ``cfg.max_iterations`` with
    ``converged=False``. The reported cost is ``sum(P * C)`` without the
    entropy term.

    Raises
    ------
    KernelUnderflow
        If ``K v`` or ``K^T u`` has an exactly zero component.
    NumericalError
        If a scaling vector or the residual becomes non-finite.
    """
    C = cost.entries
    a, b = _marginals(a, b, C.shape)
    K = np.exp(-C / cfg.lam)
    KT = np.ascontiguousarray(K.T)
    u = np.ones(C.shape[0])
    v = np.ones(C.shape[1])

    converged = False
    k = 0
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        while k < cfg.max_iterations:
            k += 1
            Kv = K @ v
            _check_divisor(Kv, "K v", k)
            u = a / Kv
            Ktu = KT @ u
            _check_divisor(Ktu, "K^T u", k)
            v = b / Ktu
            if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
                raise NumericalError(f"scaling vectors overflowed at iteration {k}")

            if k % cfg.check_interval == 0 or k == cfg.max_iterations:
                res = np.sum((u * (K @ v) - a) ** 2) + np.sum((v * Ktu - b) ** 2)
                if not np.isfinite(res):
                    raise NumericalError(f"non-finite marginal residual at iteration {k}")
                if res <= cfg.epsilon:
                    converged = True
                    break

        plan = u[:, None] * K * v[None, :]
    if not np.all(np.isfinite(plan)):
        raise NumericalError("non-finite coupling")

    coupling = _coupling(plan, a, b)
    return SolveReport(
        transport_cost=float(np.sum(plan * C)),
        coupling=coupling,
        iterations=k,
        converged=converged,
        log_g=float(-C.sum() / cfg.lam),
        shift_used=cost.shift,
    )


def _check_divisor(d, name, k):
    if np.any(d == 0):
        raise KernelUnderflow(f"{name} has a zero entry at iteration {k}")
    if not np.all(np.isfinite(d)):
        raise NumericalError(f"{name} is non-finite at iteration {k}")


def exact_solve(cost: CostMatrix, a, b) -> SolveReport:
    """Exact discrete OT via the HiGHS dual simplex.

    Intended as a reference oracle: at most 10^4 cost entries. The simplex
    vertex is polished by re-solving the marginal equations on its support,
    which brings residuals down to rounding level.
    """
    C = cost.entries
    a, b = _marginals(a, b, C.shape)
    m1, m2 = C.shape
    if m1 * m2 > EXACT_MAX_ENTRIES:
        raise ValueError(f"exact_solve is limited to {EXACT_MAX_ENTRIES} entries, got {m1}x{m2}")
    if abs(a.sum() - b.sum()) > 1e-9:
        raise InfeasibleMarginals(f"mass totals differ: {a.sum()!r} vs {b.sum()!r}")

    A = _incidence(m1, m2)
    res = linprog(
        C.ravel(),
        A_eq=A,
        b_eq=np.concatenate([a, b]),
        bounds=(0, None),
        method="highs-ds",
        options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
    )
    if res.status != 0:
        raise NumericalError(f"LP solver failed: {res.message}")

    x = _polish(np.clip(res.x, 0.0, None), A, np.concatenate([a, b]))
    plan = x.reshape(m1, m2)
    return SolveReport(
        transport_cost=float(np.sum(plan * C)),
        coupling=_coupling(plan, a, b),
        iterations=int(res.nit),
        converged=True,
        log_g=None,
        shift_used=cost.shift,
    )


def _incidence(m1, m2):
    rows = sparse.kron(sparse.eye(m1), np.ones((1, m2)))
    cols = sparse.kron(np.ones((1, m1)), sparse.eye(m2))
    return sparse.vstack([rows, cols]).tocsr()


def _polish(x, A, rhs):
    support = np.flatnonzero(x > 1e-13)
    if support.size == 0:
        return x
    sub = A[:, support].toarray()
    vals, *_ = np.linalg.lstsq(sub, rhs, rcond=None)
    if np.any(vals < -1e-12):
        return x
    out = np.zeros_like(x)
    out[support] = np.clip(vals, 0.0, None)
    # keep the simplex answer if polishing did not help
    if np.linalg.norm(A @ out - rhs) > np.linalg.norm(A @ x - rhs):
        return x
    return out


def solve(cost: CostMatrix, a, b, solver="exact") -> SolveReport:
    """Dispatch to :func:`exact_solve` (``solver="exact"``) or
    :func:`sinkhorn_solve` (``solver`` a :class:`SinkhornConfig`)."""
    if isinstance(solver, SinkhornConfig):
        return sinkhorn_solve(cost, a, b, solver)
    if solver == "exact":
        return exact_solve(cost, a, b)
    if solver == "sinkhorn":
        return sinkhorn_solve(cost, a, b, SinkhornConfig())
    raise ValueError(f"unknown solver {solver!r}")


def wasserstein_distance(src, dst, p=2.0, solver="exact") -> float:
    """W_p between two discrete distributions: the p-th root of the optimal
    transport cost on the untranslated cost matrix."""
    cost = build_cost_matrix(src, dst, p)
    report = solve(cost, src.masses, dst.masses, solver)
    return max(report.transport_cost, 0.0) ** (1.0 / p)
