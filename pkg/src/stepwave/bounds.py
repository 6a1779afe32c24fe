"""Numerical scan of the uniform eigenfunction bound sup_I |u| <= C |u|_{L2(J)}.

For each lam the two-dimensional solution space of -u'' = lam V u is swept by
initial-data angles; sup norms and L^2 norms come from per-cell closed forms,
so the only approximation is the angle search (coarse grid plus golden-section
refinement; the ratio is smooth and pi-periodic in the angle).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import cellmath
from .potential import PerturbedPeriodicPotential

_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class BoundScan:
    lambda_grid: np.ndarray
    ratios: np.ndarray          # worst-case sup_I |u| / |u|_{L2(J)} per lam
    argmax_angle: np.ndarray
    interval_sup: tuple[float, float]
    interval_l2: tuple[float, float]

    @property
    def sup_ratio(self) -> float:
        return float(np.max(self.ratios))


def _ratio_at(pot: PerturbedPeriodicPotential, lam: np.ndarray, theta: np.ndarray,
              I: tuple[float, float], J: tuple[float, float]):
    """Ratio sup_I|u| / |u|_{L2(J)} for initial data (cos t, sin t) at inf I.

    lam and theta broadcast together; closed-form per cell.
    """
    lam = np.asarray(lam, dtype=float)
    theta = np.asarray(theta, dtype=float)
    u = np.cos(theta) * np.ones_like(lam)
    du = np.sin(theta) * np.ones_like(lam)
    sup = np.zeros_like(u)
    l2 = np.zeros_like(u)
    a0, b0 = I
    j0, j1 = J
    for ca, cb, val in pot.cells_between(a0, b0):
        k = np.sqrt(lam * val)
        ell = cb - ca
        sup = np.maximum(sup, cellmath.cell_sup_real(u, du, k, ell))
        o0, o1 = max(ca, j0), min(cb, j1)
        if o1 > o0:
            us, dus = (u, du) if o0 == ca else _real_cell_value(u, du, k, o0 - ca)
            l2 = l2 + cellmath.cell_l2(us, dus, k, o1 - o0)
        u, du = _real_cell_value(u, du, k, ell)
    return sup / np.sqrt(l2), sup, np.sqrt(l2)


def _real_cell_value(u, du, k, s):
    uu, dd = cellmath.cell_value(u, du, k, s)
    return np.real(uu), np.real(dd)


def bound_scan(pot: PerturbedPeriodicPotential, I: tuple[float, float],
               J: tuple[float, float], lambda_max: float, n_samples: int,
               n_angles: int = 32, refine_iters: int = 40) -> BoundScan:
    """Worst-case ratio profile over lam in [0, lambda_max].

    The angle maximum is located on a coarse grid of `n_angles` directions
    and sharpened by golden-section search around the best one.
    """
    a0, b0 = I
    j0, j1 = J
    if not (a0 <= j0 < j1 <= b0):
        raise ValueError("need J a subinterval of I with positive length")
    lam = np.linspace(0.0, lambda_max, n_samples)
    thetas = np.linspace(0.0, np.pi, n_angles, endpoint=False)
    ratios = np.zeros((n_samples, n_angles))
    for j, th in enumerate(thetas):
        ratios[:, j], _, _ = _ratio_at(pot, lam, np.full_like(lam, th), I, J)
    best = np.argmax(ratios, axis=1)
    dth = np.pi / n_angles

    # golden-section refinement around the coarse maximum, vectorized per lam
    lo = thetas[best] - dth
    hi = thetas[best] + dth
    for _ in range(refine_iters):
        x1 = hi - _GOLDEN * (hi - lo)
        x2 = lo + _GOLDEN * (hi - lo)
        f1, _, _ = _ratio_at(pot, lam, x1, I, J)
        f2, _, _ = _ratio_at(pot, lam, x2, I, J)
        take_left = f1 >= f2
        hi = np.where(take_left, x2, hi)
        lo = np.where(take_left, lo, x1)
    theta_star = 0.5 * (lo + hi)
    r_star, _, _ = _ratio_at(pot, lam, theta_star, I, J)
    r_best = np.maximum(r_star, ratios[np.arange(n_samples), best])
    th_best = np.where(r_star >= ratios[np.arange(n_samples), best],
                       theta_star, thetas[best])
    return BoundScan(lambda_grid=lam, ratios=r_best, argmax_angle=th_best,
                     interval_sup=I, interval_l2=J)


def plateau_ok(scan: BoundScan, factor: float = 1.05) -> bool:
    """Last-decade max <= factor * mid-decade max (no growth trend)."""
    lam = scan.lambda_grid
    lmax = lam[-1]
    last = scan.ratios[lam >= 0.9 * lmax]
    mid = scan.ratios[(lam >= 0.45 * lmax) & (lam <= 0.55 * lmax)]
    return float(np.max(last)) <= factor * float(np.max(mid))
