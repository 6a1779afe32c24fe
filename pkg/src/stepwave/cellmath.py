"""Closed-form per-cell quantities for -u'' = lam * a * u on a constant cell.

Within a cell of value a the solution with data (u0, du0) at the left edge is

    u(s) = u0 * cos(k s) + du0 * sin(k s)/k,      k = sqrt(lam * a),

and every integral or extremum used elsewhere (L^2 norms of eigenfunctions,
sup bounds, field samples) has an explicit antiderivative. All functions
broadcast over numpy arrays and are safe at k -> 0.
"""

from __future__ import annotations

import numpy as np

_SMALL = 1e-3


def sinc_c(z):
    """sin(z)/z, complex-safe, series near 0."""
    z = np.asarray(z, dtype=complex)
    small = np.abs(z) < 1e-4
    zs = np.where(small, 0.0, z)
    out = np.where(small, 1.0 - z * z / 6.0 + z**4 / 120.0,
                   np.sin(zs) / np.where(small, 1.0, zs))
    return out


def cosm1_c(z):
    """(1 - cos z)/z^2, complex-safe, series near 0."""
    z = np.asarray(z, dtype=complex)
    small = np.abs(z) < 1e-4
    zs = np.where(small, 1.0, z)
    out = np.where(small, 0.5 - z * z / 24.0 + z**4 / 720.0,
                   (1.0 - np.cos(zs)) / (zs * zs))
    return out


def cell_value(u0, du0, k, s):
    """u(s) and u'(s) inside the cell from left-edge data."""
    u0, du0, k, s = np.broadcast_arrays(
        np.asarray(u0, complex), np.asarray(du0, complex),
        np.asarray(k, complex), np.asarray(s, complex))
    ks = k * s
    c = np.cos(ks)
    st = s * sinc_c(ks)          # sin(ks)/k
    u = u0 * c + du0 * st
    du = -u0 * k * np.sin(ks) + du0 * c
    return u, du


def cell_l2(u0, du0, k, ell):
    """integral_0^ell |u(s)|^2 ds in closed form (complex k allowed)."""
    u0 = np.asarray(u0, dtype=complex)
    du0 = np.asarray(du0, dtype=complex)
    k = np.asarray(k, dtype=complex)
    u0, du0, k = np.broadcast_arrays(u0, du0, k)
    kc = np.conj(k)
    km, kp = k - kc, k + kc
    ell = float(ell)

    f_cc = 0.5 * ell * (sinc_c(km * ell) + sinc_c(kp * ell))

    small = np.abs(k) * ell < _SMALL
    # series branch (|k|ell small): expand sin(ks)/k = s*sinc(ks)
    k2, kc2 = k * k, kc * kc
    f_ss_series = (ell**3 / 3.0 - (k2 + kc2) * ell**5 / 30.0
                   + ((k2 * k2 + kc2 * kc2) / 120.0 + k2 * kc2 / 36.0) * ell**7 / 7.0)
    g_series = (ell**2 / 2.0 - (k2 / 2.0 + kc2 / 6.0) * ell**4 / 4.0
                + (k2 * k2 / 24.0 + k2 * kc2 / 12.0 + kc2 * kc2 / 120.0) * ell**6 / 6.0)

    ksafe = np.where(small, 1.0, k)
    kcsafe = np.conj(ksafe)
    f_ss_direct = 0.5 * ell * (sinc_c(km * ell) - sinc_c(kp * ell)) / (ksafe * kcsafe)
    g_direct = 0.5 * ell**2 * ((kp / kcsafe) * cosm1_c(kp * ell)
                               + (-km / kcsafe) * cosm1_c(-km * ell))

    f_ss = np.where(small, f_ss_series, f_ss_direct)
    g = np.where(small, g_series, g_direct)

    out = (np.abs(u0) ** 2 * f_cc
           + 2.0 * np.real(u0 * np.conj(du0) * g)
           + np.abs(du0) ** 2 * f_ss)
    return np.real(out)


def cell_sup_real(u0, du0, k, ell):
    """sup_{[0, ell]} |u(s)| for real data and real k >= 0, in closed form."""
    u0 = np.asarray(u0, dtype=float)
    du0 = np.asarray(du0, dtype=float)
    k = np.asarray(k, dtype=float)
    u0, du0, k = np.broadcast_arrays(u0, du0, k)
    ell = float(ell)

    lin = k * ell < 1e-8
    ksafe = np.where(lin, 1.0, k)
    amp = np.hypot(u0, du0 / ksafe)
    delta = np.arctan2(du0 / ksafe, u0)
    # |u| attains amp iff the phase interval [-delta, k*ell - delta] hits pi*Z
    n_lo = np.ceil(-delta / np.pi)
    hits = n_lo * np.pi <= k * ell - delta + 1e-15
    end_vals = np.maximum(np.abs(u0), np.abs(u0 * np.cos(k * ell)
                                             + du0 * ell * np.sinc(k * ell / np.pi)))
    osc = np.where(hits, amp, end_vals)
    linear = np.maximum(np.abs(u0), np.abs(u0 + du0 * ell))
    return np.where(lin, linear, osc)
