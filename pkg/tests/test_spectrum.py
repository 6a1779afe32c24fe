"""Band structure, Weyl functions, gap eigenvalues."""

import numpy as np
import pytest

from stepwave.measure import halfline_l2v
from stepwave.potential import make_dislocation, make_interface, make_periodic
from stepwave.spectrum import (band_scan, eigenvalue_window_counts,
                               gap_eigenvalues, joint_bands, joint_gaps, weyl_m)
from stepwave.transfer import monodromy_trace

TWO_STEP = make_periodic([("1/2", 1), ("1/2", 9)], 2)
OMEGA = np.pi / 2


@pytest.fixture(scope="module")
def bs_two_step():
    return band_scan(TWO_STEP, "plus", (12 * OMEGA) ** 2)


def test_free_operator_bands_fill_line():
    pot = make_periodic([(1, 1)], 1)
    bs = band_scan(pot, "plus", 200.0)
    assert all(hi - lo < 1e-8 for lo, hi in bs.gaps)
    assert sum(hi - lo for lo, hi in bs.bands) == pytest.approx(200.0, rel=1e-9)


def test_resonances_sit_in_gaps(bs_two_step):
    for k in (1, 3, 5):
        lam = (k * OMEGA) ** 2
        assert any(lo < lam < hi for lo, hi in bs_two_step.gaps)
        tr, _ = monodromy_trace(TWO_STEP, "plus", lam)
        assert abs(abs(np.real(tr)) - 10.0 / 3.0) < 1e-9


def test_trace_periodicity_in_sqrt_lambda():
    # with all 4 q_i in T*N the trace is 4 omega-periodic in sqrt(lambda)
    s = np.linspace(0.1, 6.0, 40)
    tr1, _ = monodromy_trace(TWO_STEP, "plus", s ** 2)
    tr2, _ = monodromy_trace(TWO_STEP, "plus", (s + 4 * OMEGA) ** 2)
    assert np.max(np.abs(tr1 - tr2)) < 1e-9


def test_band_gap_midpoint_classification(bs_two_step):
    for lo, hi in bs_two_step.bands:
        tr, _ = monodromy_trace(TWO_STEP, "plus", 0.5 * (lo + hi))
        assert abs(np.real(tr)) < 2.0
    for lo, hi in bs_two_step.gaps:
        tr, _ = monodromy_trace(TWO_STEP, "plus", 0.5 * (lo + hi))
        assert abs(np.real(tr)) > 2.0


def test_joint_spectrum_is_union():
    dis = make_dislocation(TWO_STEP, 4, 1)
    lam_max = 80.0
    bp = band_scan(dis, "plus", lam_max)
    bm = band_scan(dis, "minus", lam_max)
    merged = joint_bands(bp, bm)
    # both tails carry the same periodic profile here: union == either side
    for (a, b), (c, d) in zip(merged, bp.bands):
        assert abs(a - c) < 1e-8 and abs(b - d) < 1e-8


def test_weyl_free_closed_form():
    pot = make_periodic([(1, 1)], 1)
    rng = np.random.default_rng(5)
    for _ in range(10):
        lam = complex(rng.uniform(0.2, 50), rng.uniform(0.05, 3.0))
        assert abs(weyl_m(pot, "plus", lam) - 1j * np.sqrt(lam)) < 1e-8
        assert abs(weyl_m(pot, "minus", lam) + 1j * np.sqrt(lam)) < 1e-8


def test_weyl_requires_complex_argument():
    with pytest.raises(ValueError):
        weyl_m(TWO_STEP, "plus", 3.0)


def test_weyl_herglotz_sign():
    rng = np.random.default_rng(6)
    for _ in range(10):
        lam = complex(rng.uniform(0.2, 60), rng.uniform(0.05, 2.0))
        assert weyl_m(TWO_STEP, "plus", lam).imag > 0
        assert weyl_m(TWO_STEP, "minus", lam).imag < 0


def test_weyl_imaginary_part_identity():
    # Im m_+ = Im(lam) * integral over the right half line of |u|^2 V
    lam = 2.0 + 0.3j
    for side, sign in (("plus", 1.0), ("minus", -1.0)):
        m = weyl_m(TWO_STEP, side, lam)
        v = np.array([1.0, m])
        integral = halfline_l2v(TWO_STEP, side, np.array([lam]), v)[0]
        assert abs(m.imag - sign * lam.imag * integral.real) < 1e-8 * abs(m.imag)


def test_weyl_holomorphy_cauchy_riemann():
    h = 1e-6
    for z in [2.0 + 0.5j, 11.0 + 1.0j, 40.0 + 0.2j]:
        dx = (weyl_m(TWO_STEP, "plus", z + h) - weyl_m(TWO_STEP, "plus", z - h)) / (2 * h)
        dy = (weyl_m(TWO_STEP, "plus", z + 1j * h)
              - weyl_m(TWO_STEP, "plus", z - 1j * h)) / (2j * h)
        assert abs(dx - dy) < 1e-6 * max(1.0, abs(dx))


def test_periodic_potential_has_no_gap_eigenvalues(bs_two_step):
    eigs = gap_eigenvalues(TWO_STEP, bs_two_step)
    assert eigs == []


@pytest.fixture(scope="module")
def dislocation_eigs():
    dis = make_dislocation(TWO_STEP, 4, 1)
    lam_max = (12 * OMEGA) ** 2
    bp = band_scan(dis, "plus", lam_max)
    bm = band_scan(dis, "minus", lam_max)
    return dis, bp, bm, gap_eigenvalues(dis, bp, bm)


def test_dislocation_eigenvalue_certificates(dislocation_eigs):
    dis, bp, bm, eigs = dislocation_eigs
    assert eigs, "expected defect modes in the gaps"
    for ev in eigs:
        assert ev.certified
        assert ev.residual < 1e-10
        assert abs(ev.rho_plus) < 1.0 and abs(ev.rho_minus) < 1.0
        assert ev.gap[0] < ev.lam < ev.gap[1]
        # no eigenvalue inside a band
        for lo, hi in joint_bands(bp, bm):
            assert not (lo + 1e-10 < ev.lam < hi - 1e-10)


def test_dislocation_window_counts_repeat(dislocation_eigs):
    _, _, _, eigs = dislocation_eigs
    counts = eigenvalue_window_counts(eigs, OMEGA, n_windows=3)
    assert counts[0] > 0
    assert len(set(counts)) == 1


def test_eigenvalue_count_stable_under_grid_halving(dislocation_eigs):
    dis, bp, bm, eigs = dislocation_eigs
    coarse = gap_eigenvalues(dis, bp, bm, samples_per_gap=300)
    assert len(coarse) == len(eigs)
    for a, b in zip(coarse, eigs):
        assert abs(a.lam - b.lam) < 1e-8 * max(1.0, b.lam)


def test_interface_same_side_has_no_resonant_eigenvalue():
    right = make_periodic([("1/2", 1), ("1/2", 25)], 2)
    pot = make_interface(TWO_STEP, right)
    lam_max = (8 * OMEGA) ** 2
    bp = band_scan(pot, "plus", lam_max)
    bm = band_scan(pot, "minus", lam_max)
    eigs = gap_eigenvalues(pot, bp, bm)
    for k in (1, 3, 5):
        lam = (k * OMEGA) ** 2
        assert all(abs(ev.lam - lam) > 1e-4 for ev in eigs)


def test_interface_straddling_alphas_pins_eigenvalue_at_resonance():
    # alpha- = 1/9, alpha+ = 9: the decaying directions align at k^2 omega^2
    right = make_periodic([("1/2", 9), ("1/2", 1)], 2)
    pot = make_interface(TWO_STEP, right)
    lam_max = (8 * OMEGA) ** 2
    bp = band_scan(pot, "plus", lam_max)
    bm = band_scan(pot, "minus", lam_max)
    eigs = gap_eigenvalues(pot, bp, bm)
    for k in (1, 3):
        lam = (k * OMEGA) ** 2
        assert any(abs(ev.lam - lam) < 1e-6 * lam for ev in eigs)


def test_gaps_complement_bands(bs_two_step):
    pieces = sorted(list(bs_two_step.bands) + list(bs_two_step.gaps))
    assert pieces[0][0] == 0.0
    for (a, b), (c, d) in zip(pieces, pieces[1:]):
        assert abs(b - c) < 1e-12
    assert pieces[-1][1] == pytest.approx(bs_two_step.lambda_max)


def test_joint_gaps_are_disjoint_from_bands():
    dis = make_dislocation(TWO_STEP, 4, 1)
    bp = band_scan(dis, "plus", 60.0)
    bm = band_scan(dis, "minus", 60.0)
    for g0, g1 in joint_gaps(bp, bm):
        mid = 0.5 * (g0 + g1)
        for lo, hi in joint_bands(bp, bm):
            assert not (lo < mid < hi)
