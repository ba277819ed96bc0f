import numpy as np
import pytest

from charbox.boxes import Basis, BoxSpec, box_char_sum, sublattice_char_sum
from charbox.chars import Character
from charbox.errors import BudgetExceeded, InputError
from charbox.field import get_field, parse_element

import oracles


def test_trivial_character_counts_points():
    F = get_field(7, 2)
    box = BoxSpec.standard(F, (2, 3))
    assert box_char_sum(box, Character(F, 0)).total.exact() == 6


def test_quadratic_interval_mod_5_cancels():
    F = get_field(5, 1)
    res = box_char_sum(BoxSpec.standard(F, (4,)), Character.of_order(F, 2))
    assert res.total.exact() == 0
    assert res.normalized == 0


@pytest.mark.parametrize("d", [2, 3, 4, 6, 8, 12])
def test_full_field_box_cancels(d):
    F = get_field(5, 2)
    box = BoxSpec.standard(F, (5, 5))
    assert box_char_sum(box, Character.of_order(F, d)).total.is_zero()


def test_box_size_independent_of_offsets():
    F = get_field(11, 2)
    sizes = {BoxSpec.standard(F, (3, 4), N).size for N in [(0, 0), (5, 2), (10, 10)]}
    assert sizes == {12}
    pts = BoxSpec.standard(F, (3, 4), (9, 9)).points()
    assert len(np.unique(pts)) == 12


def test_random_configs_match_double_loop():
    rng = np.random.default_rng(11)
    for trial in range(100):
        p, n = [(7, 2), (5, 3), (11, 2), (3, 4), (13, 1)][trial % 5]
        F = get_field(p, n)
        N = oracles.NaiveField(p, F.modulus)
        H = tuple(int(h) for h in rng.integers(1, p + 1, size=n))
        off = tuple(int(o) for o in rng.integers(0, p, size=n))
        m = int(rng.integers(1, F.order))
        basis = Basis.standard(F)
        got = box_char_sum(BoxSpec(basis, off, H), Character(F, m)).value
        ref = oracles.char_sum(N.char(m), oracles.box_elements(N, basis.omega, off, H))
        assert abs(got - ref) < 1e-7


def test_nonstandard_basis():
    F = get_field(7, 2)
    N = oracles.NaiveField(7, F.modulus)
    omega = (parse_element(F, "t+1"), parse_element(F, "2t+3"))
    basis = Basis(F, omega)
    box = BoxSpec(basis, (1, 2), (3, 4))
    ref_pts = sorted(oracles.box_elements(N, omega, (1, 2), (3, 4)))
    assert sorted(box.points().tolist()) == ref_pts
    x = box.points()
    assert (basis.element(np.array([[2, 3]])) == x[:1]).all()
    with pytest.raises(InputError):
        Basis(F, (parse_element(F, "t"), parse_element(F, "3t")))


def test_sublattice_examples():
    F = get_field(7, 2)
    chi = Character.of_order(F, 2)
    box = BoxSpec.standard(F, (6, 1))
    # k = n reproduces the full sum
    full = BoxSpec.standard(F, (3, 2), (1, 1))
    assert sublattice_char_sum(full, chi, 2).value == box_char_sum(full, chi).value
    # k = 1 over [1, 6]: the prime field line
    N = oracles.NaiveField(7, F.modulus)
    ref = oracles.char_sum(N.char(chi.m), list(range(1, 7)))
    got = sublattice_char_sum(box, chi, 1)
    assert abs(got.value - ref) < 1e-12
    assert got.total.exact() == 6  # every element of F_7 is a square in F_49
    assert got.abs <= 6
    with pytest.raises(InputError):
        sublattice_char_sum(box, chi, 3)


def test_enumeration_cap():
    F = get_field(11, 2)
    with pytest.raises(BudgetExceeded):
        box_char_sum(BoxSpec.standard(F, (11, 11)), Character(F, 1), cap=100)


def test_sorted_view():
    F = get_field(11, 3)
    box = BoxSpec.standard(F, (5, 2, 3), (1, 2, 3))
    s = box.sorted()
    assert s.H == (2, 3, 5) and s.is_sorted and not box.is_sorted
    assert sorted(s.points().tolist()) == sorted(box.points().tolist())
