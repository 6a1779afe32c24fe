"""Cell propagators, monodromy matrices and Floquet data in weighted coordinates.

State vectors are (sqrt(lam)*u, u'). A propagator over cells of values a_i and
lengths ell_i has the structure

    [[A, sqrt(lam)*B], [sqrt(lam)*E, D]]

with A, B, E, D entire functions of lam; products preserve this structure, so
the whole machinery (including d/dlam, carried by forward-mode product rule)
is branch-free. The unweighted (u, u') propagator materializes from the same
components as [[A, B], [lam*E, D]], again entire.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .potential import PerturbedPeriodicPotential

SINGULAR_TRACE_TOL = 1e-9


def _cos_sqrt(z):
    """cos(sqrt(z)), entire."""
    z = np.asarray(z, dtype=complex)
    return np.cos(np.sqrt(z))


def _sinc_sqrt(z):
    """sin(sqrt(z))/sqrt(z), entire; series near 0."""
    z = np.asarray(z, dtype=complex)
    small = np.abs(z) < 1e-8
    w = np.sqrt(np.where(small, 1.0, z))
    return np.where(small, 1.0 - z / 6.0 + z * z / 120.0, np.sin(w) / w)


def _dsinc_sqrt(z):
    """d/dz of sin(sqrt(z))/sqrt(z) = (cos(sqrt z) - sinc(sqrt z))/(2z)."""
    z = np.asarray(z, dtype=complex)
    small = np.abs(z) < 1e-6
    zs = np.where(small, 1.0, z)
    series = -1.0 / 6.0 + z / 60.0 - z * z / 1680.0
    return np.where(small, series, (_cos_sqrt(zs) - _sinc_sqrt(zs)) / (2.0 * zs))


class Components:
    """Entire components (a, b, e, d) of a weighted propagator and their
    lam-derivatives. All fields broadcast over a common lam-shaped array."""

    __slots__ = ("a", "b", "e", "d", "da", "db", "de", "dd", "lam")

    def __init__(self, a, b, e, d, da, db, de, dd, lam):
        self.a, self.b, self.e, self.d = a, b, e, d
        self.da, self.db, self.de, self.dd = da, db, de, dd
        self.lam = lam

    @staticmethod
    def identity(lam) -> "Components":
        lam = np.asarray(lam, dtype=complex)
        one = np.ones_like(lam)
        zero = np.zeros_like(lam)
        return Components(one, zero, zero, one,
                          zero, zero, zero, zero, lam)

    @staticmethod
    def cell(a_val: float, ell: float, lam) -> "Components":
        """One constant cell of value a_val and length ell, cf. the
        weighted cell propagator with q = sqrt(a)*ell."""
        lam = np.asarray(lam, dtype=complex)
        q2 = a_val * ell * ell
        z = lam * q2
        c = _cos_sqrt(z)
        s = _sinc_sqrt(z)
        ds = _dsinc_sqrt(z)
        dc = -0.5 * q2 * s       # d/dlam cos(sqrt(lam) q) = q^2 * (-S/2)
        b = ell * s
        e = -a_val * ell * s
        return Components(c, b, e, c,
                          dc, ell * q2 * ds, -a_val * ell * q2 * ds, dc, lam)

    def __matmul__(self, o: "Components") -> "Components":
        lam = self.lam
        a = self.a * o.a + lam * self.b * o.e
        b = self.a * o.b + self.b * o.d
        e = self.e * o.a + self.d * o.e
        d = lam * self.e * o.b + self.d * o.d
        da = (self.da * o.a + self.a * o.da + self.b * o.e
              + lam * (self.db * o.e + self.b * o.de))
        db = self.da * o.b + self.a * o.db + self.db * o.d + self.b * o.dd
        de = self.de * o.a + self.e * o.da + self.dd * o.e + self.d * o.de
        dd = (self.e * o.b + lam * (self.de * o.b + self.e * o.db)
              + self.dd * o.d + self.d * o.dd)
        return Components(a, b, e, d, da, db, de, dd, lam)

    def inv(self) -> "Components":
        # adjugate; valid because det = a*d - lam*b*e == 1
        return Components(self.d, -self.b, -self.e, self.a,
                          self.dd, -self.db, -self.de, self.da, self.lam)

    @property
    def trace(self):
        return self.a + self.d

    @property
    def trace_deriv(self):
        return self.da + self.dd

    def det(self):
        return self.a * self.d - self.lam * self.b * self.e

    def weighted(self) -> np.ndarray:
        """(..., 2, 2) matrix in (sqrt(lam) u, u') coordinates, principal sqrt."""
        s = np.sqrt(self.lam)
        m = np.empty(np.shape(self.lam) + (2, 2), dtype=complex)
        m[..., 0, 0] = self.a
        m[..., 0, 1] = s * self.b
        m[..., 1, 0] = s * self.e
        m[..., 1, 1] = self.d
        return m

    def plain(self) -> np.ndarray:
        """(..., 2, 2) matrix in (u, u') coordinates; entire in lam."""
        m = np.empty(np.shape(self.lam) + (2, 2), dtype=complex)
        m[..., 0, 0] = self.a
        m[..., 0, 1] = self.b
        m[..., 1, 0] = self.lam * self.e
        m[..., 1, 1] = self.d
        return m


@dataclass(frozen=True)
class WeightedMatrix:
    """Propagation/monodromy matrix in weighted coordinates with analytic
    trace derivative."""

    entries: np.ndarray      # (..., 2, 2) complex
    lam: np.ndarray | complex
    components: Components

    @property
    def trace(self):
        return self.components.trace

    @property
    def trace_deriv(self):
        return self.components.trace_deriv

    def det(self):
        return self.components.det()

    def plain_entries(self) -> np.ndarray:
        return self.components.plain()


def components_between(pot: PerturbedPeriodicPotential, x0: float, x1: float,
                       lam) -> Components:
    """Propagator components for x0 -> x1 (either direction)."""
    lam = np.asarray(lam, dtype=complex)
    if x1 == x0:
        return Components.identity(lam)
    lo, hi = (x0, x1) if x1 > x0 else (x1, x0)
    comp = Components.identity(lam)
    for a, b, v in pot.cells_between(lo, hi):
        comp = Components.cell(float(v), b - a, lam) @ comp
    return comp if x1 > x0 else comp.inv()


def cell_matrix(a: float, ell: float, lam) -> WeightedMatrix:
    """Exact closed-form propagator of a single constant cell."""
    if a <= 0 or ell <= 0:
        raise ValueError("need a > 0 and ell > 0")
    comp = Components.cell(float(a), float(ell), lam)
    return WeightedMatrix(comp.weighted(), comp.lam, comp)


def monodromy(pot: PerturbedPeriodicPotential, side: str, lam,
              base: float = 0.0) -> WeightedMatrix:
    """One-period propagator of the chosen tail, conjugated to `base`.

    side "plus": one period toward +infinity; "minus": toward -infinity.
    The default base point 0 makes the contracting eigenvector carry the
    half-line Weyl data.
    """
    lam = np.asarray(lam, dtype=complex)
    if side == "plus":
        x = max(float(pot.r_plus), base)
        period = float(pot.period_plus)
        m_cell = components_between(pot, x, x + period, lam)
    elif side == "minus":
        x = min(float(pot.r_minus), base)
        period = float(pot.period_minus)
        m_cell = components_between(pot, x, x - period, lam)
    else:
        raise ValueError("side must be 'plus' or 'minus'")
    if x != base:
        t = components_between(pot, base, x, lam)
        comp = t.inv() @ m_cell @ t
    else:
        comp = m_cell
    return WeightedMatrix(comp.weighted(), comp.lam, comp)


def monodromy_trace(pot: PerturbedPeriodicPotential, side: str, lam):
    """(trace, d trace / d lam) of the side monodromy, vectorized over lam.

    Trace is invariant under the base-point conjugation, so the tail period
    is multiplied out directly.
    """
    lam = np.asarray(lam, dtype=complex)
    if side == "plus":
        x = float(pot.r_plus)
        comp = components_between(pot, x, x + float(pot.period_plus), lam)
    else:
        x = float(pot.r_minus)
        comp = components_between(pot, x, x - float(pot.period_minus), lam)
    return comp.trace, comp.trace_deriv


@dataclass(frozen=True)
class FloquetData:
    """Selected Floquet multiplier, weighted eigenvector, and d rho/d lam."""

    rho: np.ndarray | complex
    v: np.ndarray            # (..., 2) weighted coordinates
    rho_prime: np.ndarray | complex
    side: str | None
    singular: np.ndarray | bool   # True where |trace| == 2 within tolerance


def floquet(mono: WeightedMatrix, lam, branch_hint=None,
            side: str | None = None) -> FloquetData:
    """Floquet multiplier of a det-1 matrix with the branch continued from
    the upper half-plane.

    Selection: |rho| < 1 off the real axis and in gaps (|tr| > 2); on bands
    the root with rho'*conj(rho) in i*(0, inf). At |tr| = 2 the eigenvalue is
    defective and the sample is flagged singular.
    """
    lam = np.asarray(lam, dtype=complex)
    tr = np.asarray(mono.trace, dtype=complex)
    dtr = np.asarray(mono.trace_deriv, dtype=complex)
    sq = np.sqrt(tr * tr - 4.0)
    r1 = 0.5 * (tr + sq)
    r2 = 0.5 * (tr - sq)

    real_lam = np.abs(np.imag(lam)) <= 1e-14 * np.maximum(1.0, np.abs(lam))
    on_band = real_lam & (np.abs(np.real(tr)) <= 2.0)
    singular = real_lam & (np.abs(np.abs(np.real(tr)) - 2.0) < SINGULAR_TRACE_TOL)

    # default: contracting root
    pick_r1 = np.abs(r1) < np.abs(r2)
    # on bands, |r1| == |r2| == 1: select by the sign of Im(rho' conj(rho));
    # for real trace this reduces to choosing the sign of Im(rho) opposite
    # to sign(tr').
    band_pick_r1 = np.where(np.real(dtr) > 0, np.imag(r1) < 0, np.imag(r1) > 0)
    tie = np.abs(np.real(dtr)) <= 1e-14 * np.maximum(1.0, np.abs(dtr))
    if branch_hint is not None:
        hint = np.asarray(branch_hint, dtype=complex)
        band_pick_r1 = np.where(tie, np.abs(r1 - hint) < np.abs(r2 - hint),
                                band_pick_r1)
    pick_r1 = np.where(on_band & ~singular, band_pick_r1, pick_r1)

    rho = np.where(pick_r1, r1, r2)
    rho = np.where(singular, 0.5 * tr, rho)

    denom = 2.0 * rho - tr
    safe = np.where(np.abs(denom) < 1e-300, 1.0, denom)
    rho_prime = np.where(singular, np.nan + 0j, dtr * rho / safe)

    m = mono.entries
    # eigenvector rows of (P - rho I); pick the better-conditioned one
    v_a = np.stack([m[..., 0, 1], rho - m[..., 0, 0]], axis=-1)
    v_b = np.stack([rho - m[..., 1, 1], m[..., 1, 0]], axis=-1)
    na = np.linalg.norm(v_a, axis=-1)
    nb = np.linalg.norm(v_b, axis=-1)
    v = np.where((na >= nb)[..., None], v_a, v_b)
    nrm = np.linalg.norm(v, axis=-1, keepdims=True)
    v = v / np.where(nrm == 0, 1.0, nrm)

    return FloquetData(rho=rho, v=v, rho_prime=rho_prime, side=side,
                       singular=singular)


def propagate(pot: PerturbedPeriodicPotential, x0: float, x1: float, lam,
              state) -> np.ndarray:
    """Propagate a weighted state (sqrt(lam) u, u') from x0 to x1 exactly."""
    comp = components_between(pot, x0, x1, lam)
    m = comp.weighted()
    state = np.asarray(state, dtype=complex)
    return np.einsum("...ij,...j->...i", m, state)


def propagate_plain(pot: PerturbedPeriodicPotential, x0: float, x1: float,
                    lam, state) -> np.ndarray:
    """Propagate an unweighted state (u, u') from x0 to x1 exactly."""
    comp = components_between(pot, x0, x1, lam)
    m = comp.plain()
    state = np.asarray(state, dtype=complex)
    return np.einsum("...ij,...j->...i", m, state)


def weighted_to_plain(v, lam) -> np.ndarray:
    """Convert a weighted vector (sqrt(lam) u, u') to (u, u')."""
    v = np.asarray(v, dtype=complex)
    s = np.sqrt(np.asarray(lam, dtype=complex))
    out = np.empty_like(v)
    out[..., 0] = v[..., 0] / s
    out[..., 1] = v[..., 1]
    return out
