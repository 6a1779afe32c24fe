"""Cell propagators, monodromy, Floquet selection, analytic derivatives."""

import numpy as np
import pytest

from stepwave.potential import make_dislocation, make_interface, make_periodic
from stepwave.transfer import (cell_matrix, components_between, floquet,
                               monodromy, monodromy_trace, propagate)

TWO_STEP = make_periodic([("1/2", 1), ("1/2", 9)], 2)
OMEGA = np.pi / 2


def test_cell_matrix_half_turn():
    m = cell_matrix(1.0, np.pi, 1.0)
    assert np.allclose(m.entries, [[-1, 0], [0, -1]], atol=1e-14)


def test_cell_matrix_unimodular():
    for lam in [1.0, 2 + 3j, 100.0]:
        m = cell_matrix(1.0, 0.7, lam)
        assert abs(m.det() - 1.0) < 1e-12


def test_cell_matrix_lambda_zero_regularization():
    m = cell_matrix(2.0, 1.3, 0.0)
    # weighted coordinates degenerate gracefully to the identity
    assert np.allclose(m.entries, np.eye(2), atol=1e-15)
    # unweighted closed form is the shear (u, u') -> (u + ell u', u')
    plain = m.plain_entries()
    assert np.allclose(plain, [[1.0, 1.3], [0.0, 1.0]], atol=1e-15)


def test_cell_matrix_series_matches_closed_form():
    # entries continue analytically through lam = 0
    for lam in [1e-12, 1e-9, -1e-12]:
        m = cell_matrix(3.0, 0.9, lam).plain_entries()
        k = np.sqrt(complex(lam * 3.0))
        expect = np.array([[np.cos(k * 0.9), np.sin(k * 0.9) / k if k != 0 else 0.9],
                           [-k * np.sin(k * 0.9), np.cos(k * 0.9)]])
        assert np.allclose(m, expect, rtol=1e-10, atol=1e-12)


def test_monodromy_constant_potential_trace():
    pot = make_periodic([(1, 1)], np.pi)
    tr, _ = monodromy_trace(pot, "plus", 1.0)
    assert abs(tr - (-2.0)) < 1e-14


def test_monodromy_resonant_values():
    # at lam = (k omega)^2 the product collapses to +-diag(sqrt(a), 1/sqrt(a))
    for k in (1, 3, 5):
        lam = (k * OMEGA) ** 2
        m = monodromy(TWO_STEP, "plus", lam)
        assert abs(abs(m.trace) - 10.0 / 3.0) < 1e-12
        ent = np.abs(m.entries)
        assert np.allclose(ent, np.diag([1.0 / 3.0, 3.0]), atol=1e-12)


def test_monodromy_unimodular_random_complex():
    rng = np.random.default_rng(7)
    lams = rng.uniform(-5, 80, 20) + 1j * rng.uniform(-3, 3, 20)
    for pot in (TWO_STEP,
                make_dislocation(TWO_STEP, 4, 1),
                make_interface(TWO_STEP, make_periodic([("1/2", 1), ("1/2", 25)], 2))):
        for side in ("plus", "minus"):
            m = monodromy(pot, side, lams)
            scale = np.maximum(1.0, np.sum(np.abs(m.entries) ** 2, axis=(-2, -1)))
            assert np.max(np.abs(m.det() - 1.0) / scale) < 1e-12


def test_trace_real_on_real_axis():
    lam = np.linspace(0.0, 120.0, 500)
    tr, _ = monodromy_trace(TWO_STEP, "plus", lam)
    assert np.max(np.abs(np.imag(tr))) < 1e-12


def test_floquet_gap_selection():
    lam = OMEGA ** 2
    fl = floquet(monodromy(TWO_STEP, "plus", lam), lam)
    assert abs(fl.rho - 1.0 / 3.0) < 1e-12
    assert not fl.singular


def test_floquet_singular_flag():
    pot = make_periodic([(1, 1)], np.pi)
    lam = 1.0  # trace exactly -2
    fl = floquet(monodromy(pot, "plus", lam), lam)
    assert fl.singular
    assert abs(fl.rho + 1.0) < 1e-12


def test_floquet_band_branch_velocity():
    # on a band, rho' * conj(rho) lies on the positive imaginary axis
    lam = np.linspace(7.0, 13.0, 41)  # inside a band of the two-step example
    mono = monodromy(TWO_STEP, "plus", lam)
    fl = floquet(mono, lam)
    prod = fl.rho_prime * np.conj(fl.rho)
    assert np.all(np.abs(np.real(prod)) < 1e-10 * np.abs(prod))
    assert np.all(np.imag(prod) > 0)


def test_floquet_contraction_upper_half_plane():
    rng = np.random.default_rng(3)
    lam = rng.uniform(0, 60, 30) + 1j * rng.uniform(1e-3, 2, 30)
    for side in ("plus", "minus"):
        fl = floquet(monodromy(TWO_STEP, side, lam), lam)
        assert np.all(np.abs(fl.rho) < 1.0)


def test_floquet_branch_continuity_sweep():
    bands = [(6.63, 13.75), (32.67, 46.93)]
    for lo, hi in bands:
        lam = np.linspace(lo + 0.01, hi - 0.01, 300)
        fl = floquet(monodromy(TWO_STEP, "plus", lam), lam)
        steps = np.abs(np.diff(fl.rho))
        assert np.max(steps) < 0.5


def test_trace_derivative_vs_central_differences():
    rng = np.random.default_rng(11)
    for lam0 in rng.uniform(0.5, 90.0, 12):
        h = 1e-5 * max(1.0, abs(lam0))
        tr, dtr = monodromy_trace(TWO_STEP, "plus",
                                  np.array([lam0 - h, lam0, lam0 + h]))
        fd = (tr[2] - tr[0]) / (2 * h)
        assert abs(dtr[1] - fd) < 1e-6 * max(1.0, abs(fd))


def test_propagate_identity_and_cosine():
    lam = 4.0
    state = np.array([np.sqrt(lam), 0.0])
    assert np.allclose(propagate(TWO_STEP, 0.3, 0.3, lam, state), state)
    pot = make_periodic([(1, 1)], 1)
    s = 0.83
    out = propagate(pot, 0.0, s, lam, state)
    k = np.sqrt(lam)
    assert np.allclose(out, [k * np.cos(k * s), -k * np.sin(k * s)], atol=1e-13)


def test_propagate_composition():
    lam = 3.7 + 0.4j
    state = np.array([np.sqrt(lam), 0.5 + 0.1j])
    direct = propagate(TWO_STEP, -0.3, 1.9, lam, state)
    mid = propagate(TWO_STEP, -0.3, 0.8, lam, state)
    two = propagate(TWO_STEP, 0.8, 1.9, lam, mid)
    assert np.max(np.abs(direct - two)) < 1e-12 * max(1.0, np.max(np.abs(direct)))


def test_inverse_propagation_consistency():
    lam = 9.3
    comp = components_between(TWO_STEP, 0.2, 2.9, np.array([complex(lam)]))
    inv = components_between(TWO_STEP, 2.9, 0.2, np.array([complex(lam)]))
    prod = comp @ inv
    assert np.allclose(prod.plain()[0], np.eye(2), atol=1e-12)
