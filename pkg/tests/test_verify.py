import math

import numpy as np
import pytest

from charbox.boxes import Basis, BoxSpec
from charbox.chars import Character
from charbox.errors import InputError, PreconditionError
from charbox.field import get_field, parse_element
from charbox.verify import (
    delta_of_epsilon, generators_of_extension, katz_complete, katz_scan, main_report,
    pv_subfield_check, route_case, split_edge, subfield_box, subfield_census, weil_complete,
    weil_moment,
)

import oracles


# -- Weil ------------------------------------------------------------------------

def test_weil_linear_is_zero():
    F = get_field(7, 2)
    res = weil_complete(F, Character.of_order(F, 3), [5])
    assert res.value.is_zero() and res.check.holds


def test_weil_classical_value():
    F = get_field(7, 1)
    res = weil_complete(F, Character.of_order(F, 2), [0, 1])
    assert res.value.exact() == -1
    N = oracles.NaiveField(7, F.modulus)
    assert oracles.weil_sum(N, N.char(3), [0, 1], [1, 1]) == pytest.approx(-1)
    assert res.check.holds


def test_weil_rejects_powers_and_duplicates():
    F = get_field(7, 1)
    chi = Character.of_order(F, 2)
    with pytest.raises(PreconditionError):
        weil_complete(F, chi, [1, 2], [2, 4])
    with pytest.raises(InputError):
        weil_complete(F, chi, [1, 1])
    with pytest.raises(PreconditionError):
        weil_complete(F, Character(F, 0), [1])


@pytest.mark.parametrize("p,n,d", [(5, 2, 3), (7, 2, 8), (3, 3, 13), (11, 1, 5)])
def test_weil_value_matches_naive(p, n, d):
    F = get_field(p, n)
    N = oracles.NaiveField(p, F.modulus)
    chi = Character.of_order(F, d)
    rng = np.random.default_rng(d)
    for _ in range(5):
        m = int(rng.integers(1, 4))
        roots = rng.choice(F.q, size=m, replace=False).tolist()
        mult = rng.integers(1, d, size=m).tolist()
        res = weil_complete(F, chi, roots, mult)
        ref = oracles.weil_sum(N, N.char(chi.m), roots, mult)
        assert abs(res.value.complex() - ref) < 1e-8
        assert res.check.holds


# -- moments ----------------------------------------------------------------------

def test_moment_anchor():
    F = get_field(7, 1)
    res = weil_moment(F, Character.of_order(F, 2), (1, 3), 2)
    assert res.lhs == 36
    assert float(res.check.rhs) == pytest.approx(324 * math.sqrt(7) + 1008)
    assert res.check.holds


def test_moment_unit_interval():
    F = get_field(11, 2)
    res = weil_moment(F, Character.of_order(F, 4), (3, 3), 3)
    assert res.lhs == F.q - 1


def test_moment_cubic_f121():
    F = get_field(11, 2)
    res = weil_moment(F, Character.of_order(F, 3), (1, 4), 2)
    N = oracles.NaiveField(11, F.modulus)
    ref = oracles.interval_moment(N, N.char(Character.of_order(F, 3).m), 1, 4, 2)
    assert res.lhs == round(ref)
    assert res.check.holds


def test_moment_high_order_certified():
    F = get_field(11, 2)
    res = weil_moment(F, Character.of_order(F, 5), (1, 4), 2)
    N = oracles.NaiveField(11, F.modulus)
    ref = oracles.interval_moment(N, N.char(Character.of_order(F, 5).m), 1, 4, 2)
    assert abs(res.lhs.value - ref) <= res.lhs.err + 1e-9 * ref
    assert res.check.holds


# -- Katz ------------------------------------------------------------------------

@pytest.mark.parametrize("p", [11, 19])
def test_katz_complete_is_minus_one(p):
    F = get_field(p, 2)
    chi = Character.of_order(F, 2)
    N = oracles.NaiveField(p, F.modulus)
    gens = generators_of_extension(F)
    assert len(gens) == p * p - p
    for g in gens[::7].tolist():
        assert katz_complete(F, chi, g).exact() == -1
        assert oracles.char_sum(N.char(chi.m), [N.add(g, t) for t in range(p)]) == pytest.approx(-1)


def test_katz_scan_bounds():
    F = get_field(11, 2)
    scan = katz_scan(F, Character.of_order(F, 2))
    assert all(c.holds for c in scan.checks)
    g, start, length = scan.argmax
    N = oracles.NaiveField(11, F.modulus)
    ref = oracles.char_sum(N.char(F.order // 2), [N.add(g, t % 11) for t in range(start, start + length)])
    assert abs(ref) == pytest.approx(scan.max_abs)
    assert scan.max_abs <= length
    one = katz_scan(F, Character.of_order(F, 3), interval_len=3)
    assert one.lengths == [3] and one.max_abs <= 3


# -- subfield census --------------------------------------------------------------

def test_census_n2_examples():
    F = get_field(7, 2)
    basis = Basis(F, (parse_element(F, "t"), 1))    # ratio t lies outside F_7
    c = subfield_census(BoxSpec(basis, (0, 0), (3, 4)))
    assert c.Omega_size == 0 and c.k == 0
    c0 = subfield_census(BoxSpec(basis, (-2, 0), (3, 4)))
    assert c0.Omega_size == 1
    assert all(ch.holds for ch in c0.checks)


def test_census_matches_enumeration_f625():
    F = get_field(5, 4)
    N = oracles.NaiveField(5, F.modulus)
    rng = np.random.default_rng(3)
    for _ in range(6):
        omega = []
        while True:
            omega = rng.choice(np.arange(1, F.q), size=4, replace=False).tolist()
            try:
                basis = Basis(F, tuple(omega))
                break
            except InputError:
                continue
        H = tuple(int(h) for h in rng.integers(1, 6, size=4))
        Nn = tuple(int(v) for v in rng.integers(-2, 3, size=4))
        box = BoxSpec(basis, Nn, H)
        c = subfield_census(box)
        inv_last = N.inv(omega[3])
        rho = [N.mul(w, inv_last) for w in omega[:3]]
        omega_count = omega_q = 0
        for xs in box_tuples(Nn[:3], H[:3]):
            acc = 0
            for x, r in zip(xs, rho):
                acc = N.add(acc, N.mul(x % 5, r))
            deg = N.subfield_degree(acc)
            omega_count += deg != 4
            omega_q += 2 % deg == 0
        assert (c.Omega_size, c.Omega_q_size) == (omega_count, omega_q)
        assert c.bound_holds == (omega_q <= c.bound)
        assert c.k <= 1


def box_tuples(N, H):
    import itertools
    return itertools.product(*[range(a + 1, a + h + 1) for a, h in zip(N, H)])


# -- Polya-Vinogradov on a subfield ---------------------------------------------------

def test_pv_examples():
    F = get_field(5, 2)
    # every element of F_5 is a square in F_25, so the quadratic character dies there
    with pytest.raises(PreconditionError):
        pv_subfield_check(F, 1, [1, 2, 3], Character.of_order(F, 2))
    chi4 = Character.of_order(F, 4)
    assert not chi4.restriction_is_trivial(1)
    A = subfield_box(F, 1, (3,))
    assert sorted(A.tolist()) == [1, 2, 3]
    res = pv_subfield_check(F, 1, A, chi4)
    N = oracles.NaiveField(5, F.modulus)
    ref = max(abs(oracles.char_sum(N.char(chi4.m), [N.add(y, z) for y in (1, 2, 3)])) for z in range(5))
    assert res.max_abs == pytest.approx(ref)
    assert pv_subfield_check(F, 1, [2], chi4).max_abs == pytest.approx(1.0)
    whole = pv_subfield_check(get_field(3, 4), 2, get_field(3, 4).subfield_elements(2),
                              Character(get_field(3, 4), 1))
    assert whole.max_abs == pytest.approx(0.0, abs=1e-9)


# -- routing, delta, main report ------------------------------------------------------

def test_delta_of_epsilon():
    assert delta_of_epsilon(0.1, 2) == pytest.approx(0.0038095238, abs=1e-9)
    assert delta_of_epsilon(0.3, 10**7) / 0.09 == pytest.approx(0.5, abs=1e-6)


def test_routing_thresholds():
    assert route_case(101, 5, 0.25) == 1
    assert route_case(101, 7, 0.25) == 1
    assert route_case(101, 8, 0.25) == 2
    assert route_case(101, 20, 0.25) == 3


def test_split_edge():
    assert split_edge(5, 101) == [5]
    assert split_edge(9, 101) == [5, 4]
    pieces = split_edge(40, 1009)
    assert sum(pieces) == 40 and max(pieces) <= math.isqrt(1009 // 2)
    assert max(pieces) - min(pieces) <= 1


def test_main_report_cases():
    F = get_field(101, 2)
    chi = Character.of_order(F, 2)
    r1 = main_report(BoxSpec.standard(F, (5, 5)), chi, 0.1, r_override=6, delta_override="1/12")
    assert r1.case_id == 1 and r1.ok
    r2 = main_report(BoxSpec.standard(F, (7, 9)), chi, 0.25)
    assert r2.case_id == 2 and r2.ok
    assert r2.details["pieces"] == [[7], [5, 4]]
    r3 = main_report(BoxSpec.standard(F, (5, 20)), chi, 0.25)
    assert r3.case_id == 3 and r3.ok
    assert r3.delta_eps == pytest.approx(delta_of_epsilon(0.25, 2))
    # the report sorts sides, so the transposed box over a swapped basis gives the same sum
    swapped = BoxSpec(Basis(F, (101, 1)), (0, 0), (20, 5))
    assert main_report(swapped, chi, 0.25).S == r3.S
