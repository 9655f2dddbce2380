"""Numerical-stability instrumentation for the Gibbs kernel.

The stability score g(K) is the product of all kernel entries
``exp(-C_ij / lam)``. It underflows for any realistic size, so everything
here works with ``log g(K) = -sum(C) / lam``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.spatial.distance import cdist

from .errors import DimensionError
from .transport import build_cost_matrix


@dataclass(frozen=True, eq=False)
class StabilityReport:
    """Kernel diagnostics for the quadratic cost at zero and at ``shift``.

    ``log_g`` refers to the shifted cost, ``log_g_unshifted`` to the raw one.
    """

    log_g: float
    log_g_unshifted: float
    c_inf_norm: float
    c_inf_norm_shifted: float
    shift: np.ndarray
    lam: float

    def to_dict(self):
        return {
            "log_g": self.log_g,
            "log_g_unshifted": self.log_g_unshifted,
            "c_inf_norm": self.c_inf_norm,
            "c_inf_norm_shifted": self.c_inf_norm_shifted,
            "shift": self.shift.tolist(),
            "lambda": self.lam,
        }


class NormComparison(NamedTuple):
    max_raw: float
    max_centered: float
    improved: bool


def kernel_stability(cost, lam) -> float:
    """log g(K) for ``K = exp(-cost / lam)``."""
    if not lam > 0:
        raise ValueError(f"lam must be positive, got {lam}")
    return float(-cost.entries.sum() / lam)


def support_mean_gap(src, dst) -> np.ndarray:
    """Unweighted support-mean difference; maximizes g(K) for quadratic cost."""
    return dst.points.mean(axis=0) - src.points.mean(axis=0)


def stability_report(src, dst, lam, shift=None) -> StabilityReport:
    if shift is None:
        shift = support_mean_gap(src, dst)
    raw = build_cost_matrix(src, dst, 2.0)
    moved = build_cost_matrix(src, dst, 2.0, shift)
    return StabilityReport(
        log_g=kernel_stability(moved, lam),
        log_g_unshifted=kernel_stability(raw, lam),
        c_inf_norm=raw.inf_norm,
        c_inf_norm_shifted=moved.inf_norm,
        shift=moved.shift,
        lam=float(lam),
    )


def shifted_norm_comparison(src_sample, dst_sample) -> NormComparison:
    """Largest pairwise distance before and after centering each sample.

    Centering uses plain sample means. ``improved`` is non-strict.
    """
    X = np.atleast_2d(np.asarray(src_sample, dtype=np.float64))
    Y = np.atleast_2d(np.asarray(dst_sample, dtype=np.float64))
    if X.size == 0 or Y.size == 0:
        raise ValueError("samples must be nonempty")
    if X.shape[1] != Y.shape[1]:
        raise DimensionError(f"samples are {X.shape[1]}-D and {Y.shape[1]}-D")
    max_raw = float(cdist(X, Y).max())
    max_centered = float(cdist(X - X.mean(axis=0), Y - Y.mean(axis=0)).max())
    return NormComparison(max_raw, max_centered, max_centered <= max_raw)
