"""Step profile construction, evaluation, and exact cell bookkeeping."""

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stepwave.potential import (InvalidProfileError, NonlinearityProfile,
                                compact_gamma, gamma_from_config,
                                make_dislocation, make_interface,
                                make_periodic, potential_from_config)

TWO_STEP = [("1/2", 1), ("1/2", 9)]


def test_constant_potential():
    pot = make_periodic([(1, "1")], 1)
    for x in [-5.3, 0.0, 0.25, 17.9]:
        assert pot(x) == 1.0


def test_two_step_q_values():
    # q_i = sqrt(a_i) * (theta_i - theta_{i-1}) * X from the cell definition
    pot = make_periodic(TWO_STEP, 2)
    assert pot.cell_q_values() == [Fraction(1), Fraction(3)]


def test_three_cell_periodic_extension():
    pot = make_periodic([("1/3", 1), ("1/3", 4), ("1/3", 1)], 3)
    # cells are [0,1):1, [1,2):4, [2,3):1, extended with period 3
    assert pot(3.5) == 1.0
    assert pot(4.5) == 4.0
    assert pot(-1.5) == 4.0


def test_invalid_profiles_rejected():
    with pytest.raises(InvalidProfileError):
        make_periodic([("1/2", 1), ("1/2", -3)], 2)
    with pytest.raises(InvalidProfileError):
        make_periodic([("1/2", 1), (0, 2), ("1/2", 3)], 2)
    with pytest.raises(InvalidProfileError):
        make_periodic([("1/3", 1), ("1/3", 2)], 2)


def test_dislocation_of_constant_is_constant():
    base = make_periodic([(1, 1)], 1)
    pot = make_dislocation(base, 1, 0.7)
    for x in [-3.2, 0.0, 0.3, 0.7, 5.1]:
        assert pot(x) == 1.0


def test_dislocation_structure():
    base = make_periodic(TWO_STEP, 2)
    pot = make_dislocation(base, 4, 1)
    # q0 = sqrt(V0) * d
    assert float(pot.core.values[0]) ** 0.5 * float(pot.r_plus - pot.r_minus) == 2.0
    # piecewise values across the seams at 0 and d: V = base(x) for x < 0,
    # the insert on [0, d), base(x - d) beyond
    assert pot(-0.5) == base(-0.5) == 9.0 and pot(-1.5) == base(-1.5) == 1.0
    assert pot(0.0) == 4.0 and pot(0.999) == 4.0
    assert pot(1.0) == base(0.0) == 1.0 and pot(2.5) == base(1.5) == 9.0


def test_interface_structure():
    left = make_periodic(TWO_STEP, 2)
    right = make_periodic([("1/2", 9), ("1/2", 1)], 2)
    pot = make_interface(left, right)
    # x = -0.25 wraps to 1.75 in the left profile (cell value 9)
    assert pot(-0.25) == left(-0.25) == 9.0
    assert pot(0.25) == right(0.25) == 9.0
    ifc = make_interface(make_periodic([(1, 2)], 2), make_periodic([(1, 5)], 3))
    assert float(ifc.period_minus) == 2.0 and float(ifc.period_plus) == 3.0


def test_interface_identical_halves_is_periodic():
    left = make_periodic(TWO_STEP, 2)
    pot = make_interface(left, left)
    assert pot.is_periodic
    xs = np.linspace(-7, 7, 201)
    assert all(pot(x) == left(x) for x in xs)


def test_tail_evaluation_bit_exact_periodicity():
    pot = make_dislocation(make_periodic(TWO_STEP, 2), 4, 1)
    X = float(pot.period_plus)
    for x in np.linspace(1.01, 9.0, 57):
        assert pot(x + X) == pot(x)
    for x in np.linspace(-9.0, -0.01, 57):
        assert pot(x - X) == pot(x)


def test_jump_enumeration_and_total_variation():
    pot = make_periodic(TWO_STEP, 2)
    jumps = pot.jumps_in(0.0, 4.0)
    assert [j[0] for j in jumps] == [1.0, 2.0, 3.0]
    assert pot.total_variation(0.0, 4.0) == pytest.approx(8.0 + 8.0 + 8.0)


def test_cells_between_partition():
    pot = make_dislocation(make_periodic(TWO_STEP, 2), 4, 1)
    cells = pot.cells_between(-2.3, 3.7)
    assert cells[0][0] == -2.3 and cells[-1][1] == 3.7
    for (a, b, v), (a2, b2, v2) in zip(cells, cells[1:]):
        assert b == a2
    mids = [(0.5 * (a + b), v) for a, b, v in cells]
    assert all(pot(m) == v for m, v in mids)


def test_gamma_compact_profile():
    gam = compact_gamma([-1, 0, 1], [2.0, 3.0])
    assert gam(-0.5) == 2.0 and gam(0.5) == 3.0
    assert gam(-2.0) == 0.0 and gam(1.5) == 0.0
    with pytest.raises(InvalidProfileError):
        compact_gamma([-1, 1], [0.0])


def test_gamma_asymptotically_periodic():
    per = make_periodic([(1, 2)], 1)
    gam = NonlinearityProfile(mode="asymptotically-periodic", periodic=per)
    assert gam(13.7) == 2.0
    cfg = {"mode": "asymptotically-periodic",
           "periodic": {"periodic": {"steps": [[1, 2]], "X": 1}},
           "loc": {"breakpoints": [-1, 1], "values": [1.5]}}
    g2 = gamma_from_config(cfg)
    assert g2(0.0) == 3.5 and g2(4.0) == 2.0


def test_config_roundtrip():
    cfg = {"dislocation": {"base": {"periodic": {"steps": [["1/2", 1], ["1/2", 9]],
                                                 "X": 2}},
                           "V0": 4, "d": 1}}
    pot = potential_from_config(cfg)
    assert pot(0.5) == 4.0 and pot(1.5) == 1.0
    icfg = {"interface": {"left": {"periodic": {"steps": [[1, 2]], "X": 1}},
                          "right": {"periodic": {"steps": [[1, 3]], "X": 1}}}}
    ifc = potential_from_config(icfg)
    assert ifc(-0.1) == 2.0 and ifc(0.1) == 3.0


@settings(max_examples=30, deadline=None)
@given(st.lists(st.tuples(st.integers(1, 5), st.integers(1, 9)),
                min_size=1, max_size=4),
       st.integers(1, 4))
def test_periodic_extension_property(cells, X):
    total = sum(c[0] for c in cells)
    steps = [(Fraction(c[0], total), c[1]) for c in cells]
    pot = make_periodic(steps, X)
    rng = np.random.default_rng(0)
    for x in rng.uniform(-3 * X, 3 * X, 10):
        assert pot(x + X) == pot(x)
