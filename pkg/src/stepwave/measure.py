"""Explicit spectral measure: density on bands, point masses, transform.

The density at lam combines, for each side on whose band lam lies, the
opposite side's Floquet direction, the transmission coefficient between the
two generalized eigenfunctions, the derivative of the Floquet multiplier and
the one-period L^2_V norm. Point masses carry rank-1 weights built from the
eigenfunction data at 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

from . import cellmath
from .potential import PerturbedPeriodicPotential
from .spectrum import BandStructure, GapEigenvalue
from .transfer import components_between, floquet, monodromy, weighted_to_plain

S0_WRONSKIAN_TOL = 1e-10


class SingularSampleError(ValueError):
    """lam within tolerance of the singular set S."""


class BasisDegenerateError(ValueError):
    """phi_side is real (off-band): {phi, conj(phi)} is not a basis."""


@dataclass(frozen=True)
class FloquetSolution:
    """Decaying/propagating Floquet solution with base-point-0 data."""

    side: str
    lam: np.ndarray
    rho: np.ndarray
    rho_prime: np.ndarray
    v: np.ndarray             # (..., 2) plain (u, u') data at x = 0
    period_norm_sq: np.ndarray  # |phi|^2 V over one tail period
    on_band: np.ndarray
    singular: np.ndarray


def floquet_solution(pot: PerturbedPeriodicPotential, lam, side: str) -> FloquetSolution:
    """Floquet solution of one side at (an array of) real or complex lam."""
    lam = np.asarray(lam, dtype=complex)
    mono = monodromy(pot, side, lam)
    fl = floquet(mono, lam, side=side)
    v = weighted_to_plain(fl.v, lam)
    nrm = np.linalg.norm(v, axis=-1, keepdims=True)
    v = v / np.where(nrm == 0, 1.0, nrm)
    tr = np.real(mono.trace)
    on_band = (np.abs(np.imag(lam)) <= 1e-14 * np.maximum(1.0, np.abs(lam))) \
        & (np.abs(tr) <= 2.0)
    if side == "plus":
        x0, x1 = float(pot.r_plus), float(pot.r_plus) + float(pot.period_plus)
    else:
        x0, x1 = float(pot.r_minus) - float(pot.period_minus), float(pot.r_minus)
    v_at_x0 = _propagate_plain_state(pot, 0.0, x0, lam, v)
    pnorm = l2v_between(pot, lam, x0, x1, v_at_x0)
    return FloquetSolution(side=side, lam=lam, rho=fl.rho, rho_prime=fl.rho_prime,
                           v=v, period_norm_sq=pnorm, on_band=on_band,
                           singular=fl.singular)


def _propagate_plain_state(pot, x0, x1, lam, state):
    if x1 == x0:
        return np.asarray(state, dtype=complex)
    m = components_between(pot, x0, x1, lam).plain()
    return np.einsum("...ij,...j->...i", m, np.asarray(state, dtype=complex))


def l2v_between(pot: PerturbedPeriodicPotential, lam, x0: float, x1: float,
                state) -> np.ndarray:
    """integral_{x0}^{x1} |u|^2 V dx in closed form per cell; u has plain
    data `state` at x0. Vectorized over lam."""
    lam = np.asarray(lam, dtype=complex)
    state = np.asarray(state, dtype=complex)
    total = np.zeros(np.shape(lam), dtype=float)
    cur = state
    for a, b, val in pot.cells_between(x0, x1):
        ell = b - a
        k = np.sqrt(lam * val)
        total = total + val * cellmath.cell_l2(cur[..., 0], cur[..., 1], k, ell)
        u, du = cellmath.cell_value(cur[..., 0], cur[..., 1], k, ell)
        cur = np.stack([u, du], axis=-1)
    return total


def halfline_l2v(pot: PerturbedPeriodicPotential, side: str, lam, v_plain) -> np.ndarray:
    """integral of |u|^2 V over [0, +inf) or (-inf, 0] for a decaying Floquet
    solution with data v_plain at 0 (geometric tail sum over periods)."""
    lam = np.asarray(lam, dtype=complex)
    mono = monodromy(pot, side, lam)
    fl = floquet(mono, lam, side=side)
    rho_abs2 = np.abs(fl.rho) ** 2
    if np.any(rho_abs2 >= 1.0):
        raise ValueError("half-line norm needs |rho| < 1 (gap or Im lam != 0)")
    if side == "plus":
        rp = float(pot.r_plus)
        core = l2v_between(pot, lam, 0.0, rp, v_plain) if rp > 0 else 0.0
        v_at = _propagate_plain_state(pot, 0.0, rp, lam, v_plain)
        per = l2v_between(pot, lam, rp, rp + float(pot.period_plus), v_at)
    else:
        rm = float(pot.r_minus)
        core = l2v_between(pot, lam, rm, 0.0,
                           _propagate_plain_state(pot, 0.0, rm, lam, v_plain)) \
            if rm < 0 else 0.0
        v_at = _propagate_plain_state(pot, 0.0, rm - float(pot.period_minus),
                                      lam, v_plain)
        per = l2v_between(pot, lam, rm - float(pot.period_minus), rm, v_at)
    return core + per / (1.0 - rho_abs2)


def sample_solution(pot: PerturbedPeriodicPotential, lam, v_plain, x_grid):
    """(u, u') of the solution with plain data v_plain at 0, on sorted x_grid."""
    lam = np.asarray(lam, dtype=complex)
    x_grid = np.asarray(x_grid, dtype=float)
    u = np.empty(x_grid.shape + np.shape(lam), dtype=complex)
    du = np.empty_like(u)
    order = np.argsort(x_grid)
    xs = x_grid[order]
    lo, hi = min(xs[0], 0.0), max(xs[-1], 0.0)
    state0 = np.asarray(v_plain, dtype=complex)
    # walk cells left-to-right starting from data propagated to lo
    cur = _propagate_plain_state(pot, 0.0, lo, lam, state0)
    cells = pot.cells_between(lo, hi) if hi > lo else []
    i = 0
    for a, b, val in cells:
        k = np.sqrt(lam * val)
        while i < len(xs) and xs[i] <= b + 1e-15:
            if xs[i] < a - 1e-15:
                i += 1
                continue
            s = min(max(xs[i] - a, 0.0), b - a)
            uu, dd = cellmath.cell_value(cur[..., 0], cur[..., 1], k, s)
            u[order[i]] = uu
            du[order[i]] = dd
            i += 1
        uu, dd = cellmath.cell_value(cur[..., 0], cur[..., 1], k, b - a)
        cur = np.stack([uu, dd], axis=-1)
    while i < len(xs):   # grid points exactly at hi already handled; guard
        u[order[i]], du[order[i]] = cur[..., 0], cur[..., 1]
        i += 1
    return u, du


def eigenfunction_pair(pot: PerturbedPeriodicPotential, lam: float, side: str,
                       x_grid) -> tuple[np.ndarray, FloquetSolution]:
    """Floquet eigenfunction phi_side sampled on x_grid, plus its data.

    Requires lam in the interior of a side band; raises SingularSampleError
    within tolerance of the band edges S_side.
    """
    fl = floquet_solution(pot, np.array([complex(lam)]), side)
    if bool(fl.singular[0]):
        raise SingularSampleError(f"lam={lam} is within tolerance of S_{side}")
    u, _ = sample_solution(pot, np.array([complex(lam)]), fl.v[0], x_grid)
    return u[:, 0], fl


def reflection_transmission(fl_from: FloquetSolution, fl_basis: FloquetSolution):
    """(r, t) with phi_from = r phi_basis + t conj(phi_basis).

    fl_basis must be on a band (non-real phi), else the pair
    {phi, conj(phi)} is degenerate.
    """
    v_b = fl_basis.v
    v_f = fl_from.v
    det = v_b[..., 0] * np.conj(v_b[..., 1]) - np.conj(v_b[..., 0]) * v_b[..., 1]
    if np.any(np.abs(det) < 1e-14):
        raise BasisDegenerateError("basis eigenfunction is real (off band)")
    r = (v_f[..., 0] * np.conj(v_b[..., 1]) - np.conj(v_b[..., 0]) * v_f[..., 1]) / det
    t = (v_b[..., 0] * v_f[..., 1] - v_f[..., 0] * v_b[..., 1]) / det
    return r, t


@dataclass(frozen=True)
class SpectralDensitySample:
    lam: float
    M: np.ndarray                     # 2x2 Hermitian PSD
    contributing_sides: frozenset[str]


@dataclass(frozen=True)
class PointMass:
    lam: float
    v0: np.ndarray                    # real unit eigen-data at 0 (plain)
    norm_sq: float                    # |phi_0|^2 V over the real line
    weight_matrix: np.ndarray         # rank-1: outer(v0, v0)/norm_sq


def _side_factor(fl_self: FloquetSolution, fl_other: FloquetSolution):
    """Scalar band-term factor |rho'|/(2 pi |t|^2 |phi|_per^2) of fl_self's side."""
    r, t = reflection_transmission(fl_other, fl_self)
    return np.abs(fl_self.rho_prime) / (
        2.0 * np.pi * np.abs(t) ** 2 * np.real(fl_self.period_norm_sq))


def density(pot: PerturbedPeriodicPotential, lam: float,
            fl_plus: FloquetSolution | None = None,
            fl_minus: FloquetSolution | None = None) -> SpectralDensitySample:
    """Spectral density matrix M(lam) at a real lam off the singular set."""
    arr = np.array([complex(lam)])
    if fl_plus is None:
        fl_plus = floquet_solution(pot, arr, "plus")
    if fl_minus is None:
        fl_minus = floquet_solution(pot, arr, "minus")
    if bool(np.any(fl_plus.singular)) or bool(np.any(fl_minus.singular)):
        raise SingularSampleError(f"lam={lam} within tolerance of S+-")
    on_p = bool(np.all(fl_plus.on_band))
    on_m = bool(np.all(fl_minus.on_band))
    if on_p and on_m:
        w = (fl_plus.v[..., 0] * fl_minus.v[..., 1]
             - fl_plus.v[..., 1] * fl_minus.v[..., 0])
        if np.any(np.abs(w) < S0_WRONSKIAN_TOL):
            raise SingularSampleError(f"lam={lam} within tolerance of S_0")
    m = np.zeros((2, 2), dtype=complex)
    sides = set()
    if on_p:
        c = np.real(_side_factor(fl_plus, fl_minus)).reshape(-1)[0]
        vm = fl_minus.v.reshape(-1, 2)[0]
        m += c * np.outer(vm, np.conj(vm))
        sides.add("plus")
    if on_m:
        c = np.real(_side_factor(fl_minus, fl_plus)).reshape(-1)[0]
        vp = fl_plus.v.reshape(-1, 2)[0]
        m += c * np.outer(vp, np.conj(vp))
        sides.add("minus")
    return SpectralDensitySample(lam=float(lam), M=m,
                                 contributing_sides=frozenset(sides))


def herglotz_density(pot: PerturbedPeriodicPotential, lam: float,
                     eps: float = 1e-4) -> np.ndarray:
    """Cross-check oracle: (1/pi) Im[(m_- - m_+)^{-1} A] at lam + i eps."""
    from .spectrum import weyl_m

    z = complex(lam, eps)
    mp = weyl_m(pot, "plus", z)
    mm = weyl_m(pot, "minus", z)
    a = np.array([[1.0, 0.5 * (mm + mp)],
                  [0.5 * (mm + mp), mm * mp]], dtype=complex)
    b = a / (mm - mp)
    return (b - b.conj().T) / (2j * np.pi)


# -- transform ---------------------------------------------------------------

def _quad_nodes_for_support(pot, a: float, b: float, lam_max: float,
                            order: int = 16):
    """Per-cell Gauss-Legendre nodes on [a, b], cells subdivided so each
    chunk spans at most ~8 radians of oscillation at lam_max."""
    xg, wg = leggauss(order)
    nodes, weights = [], []
    for c0, c1, val in pot.cells_between(a, b):
        kmax = np.sqrt(max(lam_max, 1.0) * val)
        nsub = max(1, int(np.ceil((c1 - c0) * kmax / 8.0)))
        for j in range(nsub):
            s0 = c0 + (c1 - c0) * j / nsub
            s1 = c0 + (c1 - c0) * (j + 1) / nsub
            nodes.append(0.5 * (s1 - s0) * xg + 0.5 * (s0 + s1))
            weights.append(0.5 * (s1 - s0) * wg)
    return np.concatenate(nodes), np.concatenate(weights)


def fundamental_matrix(pot: PerturbedPeriodicPotential, lam, x_grid) -> np.ndarray:
    """Psi = (Psi_1, Psi_2) and derivatives on x_grid: (..., n_x, 2, 2) array
    [[Psi_1, Psi_2], [Psi_1', Psi_2']], by exact cell propagation from 0."""
    e1 = np.array([1.0, 0.0], dtype=complex)
    e2 = np.array([0.0, 1.0], dtype=complex)
    u1, du1 = sample_solution(pot, lam, e1, x_grid)
    u2, du2 = sample_solution(pot, lam, e2, x_grid)
    out = np.stack([np.stack([u1, u2], axis=-1),
                    np.stack([du1, du2], axis=-1)], axis=-2)
    # axes: (n_x, ..., 2, 2) -> (..., n_x, 2, 2)
    return np.moveaxis(out, 0, -3)


def transform(pot: PerturbedPeriodicPotential, f, support: tuple[float, float],
              lambdas) -> np.ndarray:
    """T[f](lam) = integral f(x) Psi(x; lam) V(x) dx for compactly supported f.

    f is a callable evaluated at quadrature nodes; returns (n_lam, 2).
    """
    lam = np.atleast_1d(np.asarray(lambdas, dtype=complex))
    a, b = support
    lam_max = float(np.max(np.abs(lam)))
    xs, ws = _quad_nodes_for_support(pot, a, b, lam_max)
    fv = np.asarray([f(x) for x in xs], dtype=complex)
    vv = np.asarray([pot(x) for x in xs])
    out = np.zeros(lam.shape + (2,), dtype=complex)
    chunk = 2048
    for i0 in range(0, len(xs), chunk):
        sl = slice(i0, i0 + chunk)
        psi = fundamental_matrix(pot, lam, xs[sl])  # (n_lam, n_x, 2, 2)
        vals = psi[..., 0, :]                        # (n_lam, n_x, 2)
        out += np.einsum("x,...xj->...j", fv[sl] * vv[sl] * ws[sl], vals)
    return out


# -- quadrature over the spectral measure ------------------------------------

@dataclass(frozen=True)
class BandTerm:
    side: str
    band: tuple[float, float]
    lam: np.ndarray          # quadrature nodes
    weight: np.ndarray       # quadrature weights (already includes dlam)
    factor: np.ndarray       # scalar density factor of this side's term
    cross_v: np.ndarray      # (n, 2) opposite side's Floquet vector


@dataclass(frozen=True)
class MeasureQuadrature:
    terms: tuple[BandTerm, ...]
    point_masses: tuple[PointMass, ...]

    @property
    def all_lambdas(self) -> np.ndarray:
        parts = [t.lam for t in self.terms] + [np.array([p.lam]) for p in self.point_masses]
        return np.concatenate(parts) if parts else np.array([])


def band_quadrature(pot: PerturbedPeriodicPotential, bs_plus: BandStructure,
                    bs_minus: BandStructure | None = None,
                    eigenvalues: list[GapEigenvalue] | None = None,
                    n_per_band: int = 256) -> MeasureQuadrature:
    """Edge-desingularized quadrature of the spectral measure.

    Per band [e0, e1] substitute lam = e0 + (e1 - e0) sin^2(theta/2): the
    |lam - edge|^{-1/2} blow-up of the density becomes analytic in theta and
    plain Gauss-Legendre in theta converges fast.
    """
    if bs_minus is None:
        bs_minus = bs_plus if pot.is_periodic else None
    if bs_minus is None:
        raise ValueError("need bs_minus for non-periodic potentials")
    xg, wg = leggauss(n_per_band)
    theta = 0.5 * np.pi * (xg + 1.0)
    terms = []
    for side, bs in (("plus", bs_plus), ("minus", bs_minus)):
        other = "minus" if side == "plus" else "plus"
        for e0, e1 in bs.bands:
            w = e1 - e0
            if w <= 0:
                continue
            lam = e0 + w * np.sin(0.5 * theta) ** 2
            dlam = 0.5 * w * np.sin(theta) * (0.5 * np.pi) * wg
            fl_self = floquet_solution(pot, lam + 0j, side)
            fl_other = floquet_solution(pot, lam + 0j, other)
            c = np.real(_side_factor(fl_self, fl_other))
            keep = ~(np.asarray(fl_self.singular) | np.asarray(fl_other.singular))
            # S_0 exclusion where both sides propagate
            both = np.asarray(fl_self.on_band) & np.asarray(fl_other.on_band)
            wr = (fl_self.v[..., 0] * fl_other.v[..., 1]
                  - fl_self.v[..., 1] * fl_other.v[..., 0])
            keep &= ~(both & (np.abs(wr) < S0_WRONSKIAN_TOL))
            terms.append(BandTerm(side=side, band=(e0, e1), lam=lam,
                                  weight=np.where(keep, dlam, 0.0),
                                  factor=c, cross_v=fl_other.v))
    pms = tuple(point_mass(pot, ev) for ev in (eigenvalues or [])
                if ev.certified)
    return MeasureQuadrature(terms=tuple(terms), point_masses=pms)


def point_mass(pot: PerturbedPeriodicPotential, ev: GapEigenvalue) -> PointMass:
    """Rank-1 spectral weight of a gap eigenvalue."""
    lam = np.array([complex(ev.lam)])
    v_rm = weighted_to_plain(ev.v_minus.astype(complex), complex(ev.lam))
    v0 = _propagate_plain_state(pot, float(pot.r_minus), 0.0, lam, v_rm)[0]
    v0 = np.real(v0 / (v0[np.argmax(np.abs(v0))] / np.abs(v0[np.argmax(np.abs(v0))])))
    v0 = v0 / np.linalg.norm(v0)
    left = halfline_l2v(pot, "minus", lam, v0.astype(complex))
    right = halfline_l2v(pot, "plus", lam, v0.astype(complex))
    nrm = float(np.real(left + right)[0])
    return PointMass(lam=float(ev.lam), v0=v0, norm_sq=nrm,
                     weight_matrix=np.outer(v0, v0) / nrm)


def measure_norm(quad: MeasureQuadrature, g) -> float:
    """|g|^2_{L^2(mu)} for g given as a callable lam -> (2,) or (n, 2) values.

    Adaptive band quadrature (edge-desingularized nodes) plus the discrete
    sum over point masses.
    """
    total = 0.0
    for t in quad.terms:
        gv = _eval_vector_function(g, t.lam)
        dot = gv[:, 0] * t.cross_v[:, 0] + gv[:, 1] * t.cross_v[:, 1]
        total += float(np.sum(t.weight * t.factor * np.abs(dot) ** 2))
    for p in quad.point_masses:
        gv = _eval_vector_function(g, np.array([p.lam]))[0]
        total += float(np.abs(gv[0] * p.v0[0] + gv[1] * p.v0[1]) ** 2 / p.norm_sq)
    if total < -1e-10:
        raise FloatingPointError(f"negative measure norm {total}")
    return max(total, 0.0)


def _eval_vector_function(g, lam: np.ndarray) -> np.ndarray:
    out = g(lam)
    out = np.asarray(out, dtype=complex)
    if out.shape == (2,):
        out = np.broadcast_to(out, lam.shape + (2,))
    return out.reshape(len(lam), 2)


def l2v_norm_of_function(pot: PerturbedPeriodicPotential, f,
                         support: tuple[float, float]) -> float:
    """|f|^2_{L^2_V} by the same per-cell quadrature used in transform()."""
    xs, ws = _quad_nodes_for_support(pot, *support, lam_max=1.0, order=16)
    fv = np.asarray([f(x) for x in xs])
    vv = np.asarray([pot(x) for x in xs])
    return float(np.sum(ws * vv * np.abs(fv) ** 2))


def parseval_defect(pot: PerturbedPeriodicPotential, quad: MeasureQuadrature,
                    f, support: tuple[float, float]) -> tuple[float, float, float]:
    """(measure-side norm, direct L^2_V norm, relative defect) for one f."""
    tf = lambda lam: transform(pot, f, support, lam)
    lhs = measure_norm(quad, tf)
    rhs = l2v_norm_of_function(pot, f, support)
    return lhs, rhs, abs(lhs - rhs) / rhs
