"""Acceptance suite: one block per criterion, each at its stated tolerance and runtime.

Run with ``pytest tests/test_acceptance.py -v``; the terminal summary prints one
PASS/FAIL line per criterion together with the recorded maxima.
"""

import json
import math
import time
from fractions import Fraction
from itertools import product

import numpy as np
import pytest

from charbox.boxes import Basis, BoxSpec
from charbox.burgess import burgess_pipeline
from charbox.chars import Character
from charbox.cli import main as cli_main
from charbox.energy import energy_bruteforce, energy_via_ratios
from charbox.errors import InputError, PreconditionError
from charbox.field import get_field, parse_element
from charbox.lattice import (
    build_lambda_z, count_points, dual_first_minimum, duality_checks, exact_det,
    lambda1_floor_check, minkowski_check, successive_minima,
)
from charbox.numeric import CycloSum
from charbox.sweep import SweepConfig, run_sweep, write_sweep
from charbox.verify import (
    delta_of_epsilon, generators_of_extension, katz_complete, katz_scan, main_report,
    route_case, subfield_census, weil_complete, weil_moment,
)

import oracles

# Fields used wherever a criterion says "every field with q <= 10^4".
GRID_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 31, 53, 101)
SMALL_FIELDS = [(p, n) for p in GRID_PRIMES for n in range(1, 13) if p**n <= 10**4]


def criterion(number, title):
    return pytest.mark.criterion(number, title)


# -- 1 -------------------------------------------------------------------------------

@criterion(1, "orthogonality over every field with q <= 10^4")
def test_c01_orthogonality(record_property):
    t0 = time.perf_counter()
    checked = 0
    for p, n in SMALL_FIELDS:
        F = get_field(p, n)
        everything = np.arange(F.q)
        for m in range(1, F.order):
            s = Character(F, m).sum(everything)
            # every class mod the order is hit (q - 1)/order times, and 0 contributes nothing
            assert (s.counts == F.order // s.d).all(), (p, n, m)
            assert s.is_zero(), (p, n, m)
            checked += 1
    elapsed = time.perf_counter() - t0
    record_property("characters", checked)
    record_property("fields", len(SMALL_FIELDS))
    assert elapsed < 60


# -- 2 -------------------------------------------------------------------------------

def _random_admissible(rng, F):
    while True:
        m = int(rng.integers(1, F.order))
        chi = Character(F, m)
        d = chi.order
        k = int(rng.integers(1, min(6, F.q) + 1))
        roots = rng.choice(F.q, size=k, replace=False)
        mult = rng.integers(1, min(2 * d, 13), size=k)
        if any(int(e) % d for e in mult):
            return chi, roots, mult


@criterion(2, "Weil bound on 100 random admissible polynomials per field")
def test_c02_weil(record_property):
    t0 = time.perf_counter()
    F7 = get_field(7, 1)
    eta = Character.of_order(F7, 2)
    anchor = weil_complete(F7, eta, [0, 1])
    assert anchor.value.exact() == -1
    N7 = oracles.NaiveField(7, F7.modulus)
    assert oracles.weil_sum(N7, N7.char(3), [0, 1], [1, 1]) == pytest.approx(-1)

    rng = np.random.default_rng(2)
    violations, worst = 0, 0.0
    for p, n in SMALL_FIELDS:
        F = get_field(p, n)
        if F.q < 3:
            continue   # F_2 has no nontrivial character
        for _ in range(100):
            chi, roots, mult = _random_admissible(rng, F)
            res = weil_complete(F, chi, roots, mult)
            violations += not res.check.holds
            if len(roots) > 1:
                worst = max(worst, math.sqrt(float(res.abs2)) / ((len(roots) - 1) * math.sqrt(F.q)))
    record_property("max_ratio", round(worst, 6))
    assert violations == 0
    assert time.perf_counter() - t0 < 120


@criterion(2, "Weil bound on 100 random admissible polynomials per field")
def test_c02_weil_values_match_oracle():
    rng = np.random.default_rng(22)
    for p, n in [(5, 2), (7, 2), (3, 3), (13, 1)]:
        F = get_field(p, n)
        N = oracles.NaiveField(p, F.modulus)
        for _ in range(20):
            chi, roots, mult = _random_admissible(rng, F)
            ref = oracles.weil_sum(N, N.char(chi.m), roots.tolist(), mult.tolist())
            assert abs(weil_complete(F, chi, roots, mult).value.complex() - ref) < 1e-8


# -- 3 -------------------------------------------------------------------------------

@criterion(3, "interval moment bound on the full grid")
def test_c03_moment_grid(record_property):
    t0 = time.perf_counter()
    F7 = get_field(7, 1)
    anchor = weil_moment(F7, Character.of_order(F7, 2), (1, 3), 2)
    assert anchor.lhs == 36 and anchor.check.holds and anchor.check.exact

    cases = skipped = 0
    for p, n, d, r, w in product((7, 11, 13, 17, 101), (1, 2), (2, 3), (1, 2, 3), range(1, 9)):
        F = get_field(p, n)
        if F.order % d:
            skipped += 1      # no character of this order
            continue
        chi = Character.of_order(F, d)
        for start in (1, p - w // 2):
            res = weil_moment(F, chi, (start, start + w - 1), r)
            assert res.check.exact and res.check.holds, (p, n, d, r, start, w)
            cases += 1
            if F.q <= 289 and start == 1:
                N = oracles.NaiveField(p, F.modulus)
                assert res.lhs == round(oracles.interval_moment(N, N.char(chi.m), 1, w, r))
    record_property("cases", cases)
    record_property("skipped_no_character", skipped)
    assert time.perf_counter() - t0 < 300


# -- 4 and 5 -------------------------------------------------------------------------

ENERGY_FIELDS = [(101, 2), (31, 2), (11, 3), (7, 3)]


def _random_basis(rng, F):
    while True:
        try:
            return Basis(F, tuple(int(v) for v in rng.choice(np.arange(1, F.q), size=F.n, replace=False)))
        except InputError:
            continue


def _random_boxes(p, n, count=50, limit=2000):
    F = get_field(p, n)
    rng = np.random.default_rng(p * 10 + n)
    boxes = []
    while len(boxes) < count:
        H = tuple(int(h) for h in rng.integers(1, p + 1, size=n))
        if math.prod(H) > limit:
            continue
        N = tuple(int(v) for v in rng.integers(-p, p, size=n))
        basis = Basis.standard(F) if len(boxes) % 2 == 0 else _random_basis(rng, F)
        boxes.append(BoxSpec(basis, N, H))
    return boxes


@pytest.fixture(scope="module")
def energy_instances():
    return {pn: [(box, energy_via_ratios(box)) for box in _random_boxes(*pn)] for pn in ENERGY_FIELDS}


@criterion(4, "ratio-route energy equals brute force on random boxes")
def test_c04_energy_equivalence(energy_instances, record_property):
    t0 = time.perf_counter()
    F7 = get_field(7, 1)
    assert energy_bruteforce(F7, [1, 2]) == 6 == energy_via_ratios(BoxSpec.standard(F7, (2,))).E
    F = get_field(11, 2)
    gp = [1, F.g, int(F.mul(F.g, F.g))]
    assert energy_bruteforce(F, gp) == 19 == oracles.energy_quadruples(oracles.NaiveField(11, F.modulus), gp)

    largest = 0
    for pn, items in energy_instances.items():
        assert len(items) >= 50
        for box, rep in items:
            assert box.size <= 2000
            brute = energy_bruteforce(box.ctx, box.points())
            assert rep.E == brute, (pn, box.H, box.N)
            largest = max(largest, box.size)
    record_property("boxes", sum(len(v) for v in energy_instances.values()))
    record_property("largest_box", largest)
    assert time.perf_counter() - t0 < 300


@criterion(5, "energy counting chain on every criterion-4 instance")
def test_c05_energy_chain(energy_instances):
    for pn, items in energy_instances.items():
        for box, rep in items:
            f, f0 = rep.f_profile, rep.f0_profile
            size = box.size
            sum_f2 = sum(v * v for v in f.values())
            assert rep.E <= 2 * size**2 + sum_f2
            outside = sum(1 for z in f if z not in f0)
            assert sum_f2 <= sum(v * v for v in f0.values()) + outside
            assert all(f[z] <= f0[z] for z in f if z in f0), (pn, box.H)


# -- 6 and 13 ------------------------------------------------------------------------

KL_CONFIG = {
    "primes": {"above": 50, "count": 20}, "degrees": [2, 3],
    "shapes": ["max", "ramp", "random"], "scans": ["energy"], "seed": 0,
}


@pytest.fixture(scope="module")
def kl_runs(tmp_path_factory):
    base = tmp_path_factory.mktemp("kl")
    cfg = SweepConfig.from_dict(KL_CONFIG)
    t0 = time.perf_counter()
    first = run_sweep(cfg, jobs=1)
    summary = write_sweep(cfg, first, base / "first")
    seconds = time.perf_counter() - t0
    second = run_sweep(cfg, jobs=2)
    write_sweep(cfg, second, base / "second")
    return base, cfg, first, summary, seconds


@criterion(6, "energy ratio sweep over the first 20 primes above 50")
def test_c06_kl_sweep(kl_runs, record_property):
    base, cfg, rows, summary, seconds = kl_runs
    energy = rows["energy"]
    assert len(cfg.primes) == 20 and cfg.primes[0] == 53
    assert len(energy) == 20 * 2 * 3
    for row in energy:
        assert row["ok"] and row["E"] == row["E_bruteforce"]
        assert all(2 * h * h < row["p"] for h in row["H"])
        assert math.isfinite(row["kl_ratio"])
    top = max(r["kl_ratio"] for r in energy)
    assert summary["scans"]["energy"]["max_kl_ratio"] == top
    a = (base / "first" / "energy.csv").read_bytes()
    b = (base / "second" / "energy.csv").read_bytes()
    assert a == b
    record_property("max_kl_ratio", round(top, 6))
    record_property("first_run_seconds", round(seconds, 1))
    assert seconds < 15 * 60


@criterion(13, "sweep reruns are byte-identical")
def test_c13_determinism(kl_runs, tmp_path, capsys):
    base = kl_runs[0]
    cfg_path = tmp_path / "kl.json"
    cfg_path.write_text(json.dumps(KL_CONFIG))
    rerun = tmp_path / "rerun"
    assert cli_main(["sweep", "--config", str(cfg_path), "--out", str(rerun)]) == 0
    capsys.readouterr()
    names = sorted(p.name for p in (base / "first").iterdir())
    assert names == sorted(p.name for p in rerun.iterdir()) == ["energy.csv", "summary.json"]
    for name in names:
        assert (base / "first" / name).read_bytes() == (rerun / name).read_bytes(), name


# -- 7 and 8 -------------------------------------------------------------------------

LATTICE_H = [(1, 1), (2, 2), (1, 3)]
_transference: list[Fraction] = []


@pytest.mark.parametrize("p", [7, 11])
@criterion(7, "lattice suite over F_49 and F_121")
def test_c07_lattice_suite(p, record_property):
    F = get_field(p, 2)
    N = oracles.NaiveField(p, F.modulus)
    basis = Basis.standard(F)
    if p == 7:
        L = build_lambda_z(F, basis, parse_element(F, "t"), (1, 1))
        assert successive_minima(L).lambdas == [1, 1, 4, 4]
    for H in LATTICE_H:
        f0 = energy_via_ratios(BoxSpec.standard(F, H)).f0_profile
        for z in range(F.q):
            L = build_lambda_z(F, basis, z, H)
            assert abs(L.determinant()) == abs(exact_det(L.basis_matrix.tolist())) == p**2
            R = successive_minima(L)
            assert all(c.holds and c.exact for c in minkowski_check(R, L)), (z, H)
            if F.subfield_degree(z) != 1:
                floor = lambda1_floor_check(L, R)
                assert floor.holds and R.lambdas[0] >= Fraction(1, H[0])
            if z:
                assert count_points(L, 1) == f0.get(z, 1), (z, H)
            assert R.lambdas == oracles.minima_by_rank(N, z, H), (z, H)
    record_property(f"instances_p{p}", F.q * len(LATTICE_H))


@pytest.mark.parametrize("p", [7, 11])
@criterion(8, "duality and transference on every criterion-7 instance")
def test_c08_duality(p, record_property):
    F = get_field(p, 2)
    N = oracles.NaiveField(p, F.modulus)
    basis = Basis.standard(F)
    for H in LATTICE_H:
        for z in range(F.q):
            L = build_lambda_z(F, basis, z, H)
            assert all(c.holds for c in duality_checks(L)), (z, H)
            R = successive_minima(L)
            D = dual_first_minimum(L, R)
            assert all(c.holds for c in D.checks)
            assert D.lambda1 * R.lambdas[-1] >= 1
            _transference.append(D.lambda1 * R.lambdas[-1])
            if p == 7:
                assert D.lambda1 == oracles.dual_lambda1_bruteforce(N, z, H)
    top = max(_transference)
    record_property("max_transference", f"{top} ({float(top):.4f})")


# -- 9 -------------------------------------------------------------------------------

BURGESS_SETTINGS = [(r, delta) for r in range(1, 7) for delta in ("1/6", "1/8", "1/10", "1/12", "1/20")]


def _independent_burgess_terms(F, box, chi, K, sides):
    B = box.points()
    ys = [a + b * F.p for a in range(sides[0] + 1) for b in range(sides[1] + 1)]
    B0 = np.unique(np.array(ys, dtype=np.int64))
    z = np.arange(1, K + 1, dtype=np.int64)
    shifted = F.add(B[:, None, None], F.mul(B0[None, :, None], z[None, None, :]))
    T = CycloSum.from_classes(chi.classes(shifted.reshape(-1)), chi.order)
    S = CycloSum.from_classes(chi.classes(B), chi.order)
    nz = B0[B0 != 0]
    ratios = F.div(np.repeat(B, len(nz)), np.tile(nz, len(B)))
    _, mult = np.unique(ratios, return_counts=True)
    return S, T, B0, int(mult.sum()), int((mult.astype(np.int64) ** 2).sum())


@criterion(9, "amplification pipeline at (101, 2)")
def test_c09_burgess(record_property):
    t0 = time.perf_counter()
    F = get_field(101, 2)
    runs = 0
    worst_fi = 0.0
    for H in [(7, 7), (6, 7), (5, 7), (4, 6)]:
        box = BoxSpec.standard(F, H)
        assert 2 * H[-1] ** 2 < F.p
        for d in (2, 3, 4):
            chi = Character.of_order(F, d)
            for r, delta in BURGESS_SETTINGS:
                rep = burgess_pipeline(box, chi, 0.25, r, delta)
                assert rep.delta == Fraction(delta) and rep.r == r
                assert rep.fi_holds and rep.ti_holds, (H, d, r, delta)
                K = rep.interval[1]
                S, T, B0, A, Bq = _independent_burgess_terms(F, box, chi, K, rep.shift_sides)
                assert S == rep.S and T == rep.T
                assert len(B0) == rep.shift_size
                assert rep.A == A <= box.size * len(B0)
                assert rep.Bq == Bq
                resid = abs(len(B0) * K * S.complex() - T.complex()) / (len(B0) * K)
                bound = 6 * F.p ** -float(rep.delta) * box.size
                assert resid <= bound * (1 + 1e-12)
                worst_fi = max(worst_fi, resid / bound)
                rhs = A ** (1 - 1 / r) * (Bq * float(rep.C)) ** (1 / (2 * r)) + box.size * K
                assert abs(T.complex()) <= rhs * (1 + 1e-12)
                runs += 1
    assert len(BURGESS_SETTINGS) >= 10
    record_property("pipelines", runs)
    record_property("max_fi_ratio", round(worst_fi, 6))
    assert time.perf_counter() - t0 < 600


@criterion(9, "amplification pipeline at (101, 2)")
def test_c09_moment_constant_matches_direct_sum():
    F = get_field(101, 2)
    chi = Character.of_order(F, 3)
    rep = burgess_pipeline(BoxSpec.standard(F, (7, 7)), chi, 0.25, 3, "1/8")
    K = rep.interval[1]
    x = np.arange(F.q)
    window = np.zeros(F.q, dtype=complex)
    for t in range(1, K + 1):
        cls = chi.classes(F.add_scalar(x, t))
        window += np.where(cls >= 0, np.exp(2j * np.pi * cls / chi.order), 0)
    direct = float((np.abs(window) ** (2 * rep.r)).sum())
    assert float(rep.C) == pytest.approx(direct, rel=1e-9)


# -- 10 ------------------------------------------------------------------------------

@pytest.mark.parametrize("p", [11, 19, 23])
@criterion(10, "complete sums over F_p-translates equal -1")
def test_c10_katz(p, record_property):
    t0 = time.perf_counter()
    F = get_field(p, 2)
    chi = Character.of_order(F, 2)
    gens = generators_of_extension(F)
    assert len(gens) == p * p - p
    assert all(katz_complete(F, chi, g).exact() == -1 for g in gens.tolist())
    if p == 11:
        N = oracles.NaiveField(p, F.modulus)
        for g in gens.tolist():
            assert oracles.char_sum(N.char(chi.m), [N.add(g, t) for t in range(p)]) == pytest.approx(-1)
    first = katz_scan(F, chi)
    again = katz_scan(F, chi)
    assert all(c.holds for c in first.checks)
    assert first.to_dict() == again.to_dict()
    record_property(f"max_ratio_p{p}", round(first.max_ratio, 6))
    assert time.perf_counter() - t0 < 300


# -- 11 ------------------------------------------------------------------------------

def _census_boxes(F):
    p, n = F.p, F.n
    sides = range(1, p + 1)
    offsets = range(-(p - 1), 1)
    for H in product(sides, repeat=n - 1):
        for N in product(offsets, repeat=n - 1):
            yield BoxSpec.standard(F, H + (1,), N + (0,))


def _oracle_census(N, box):
    """|Omega| and |Omega_q| by direct enumeration of the coordinate tuples."""
    p, n = N.p, N.n
    omega = box.basis.omega
    inv_last = N.inv(omega[-1])
    rho = [N.mul(w, inv_last) for w in omega[:-1]]
    sub = n // min(f for f in range(2, n + 1) if n % f == 0)
    count = count_q = 0
    for xs in product(*[range(a + 1, a + h + 1) for a, h in zip(box.N[:-1], box.H[:-1])]):
        acc = 0
        for x, r in zip(xs, rho):
            acc = N.add(acc, N.mul(x % p, r))
        deg = N.subfield_degree(acc)
        count += deg != n
        count_q += sub % deg == 0
    return count, count_q


@pytest.mark.parametrize("p", [5, 3])
@criterion(11, "subfield census over composite-degree fields")
def test_c11_census(p, record_property):
    t0 = time.perf_counter()
    F = get_field(p, 4)
    N = oracles.NaiveField(p, F.modulus)
    boxes = bound_violations = ratio_violations = 0
    first_violation = None
    for i, box in enumerate(_census_boxes(F)):
        c = subfield_census(box)
        boxes += 1
        ratio_ok = c.k <= F.n // c.r_small - 1
        ratio_violations += not ratio_ok
        if not c.bound_holds:
            bound_violations += 1
            first_violation = first_violation or (box.H, box.N, c.Omega_q_size, c.bound)
        if i % 97 == 0:
            assert (c.Omega_size, c.Omega_q_size) == _oracle_census(N, box)
    record_property(f"boxes_p{p}", boxes)
    record_property(f"bound_violations_p{p}", bound_violations)
    if first_violation:
        record_property(f"first_violation_p{p}", first_violation)
    assert ratio_violations == 0
    assert time.perf_counter() - t0 < 300
    assert bound_violations == 0, f"{bound_violations} of {boxes} boxes break the census bound; first {first_violation}"


# -- 12 ------------------------------------------------------------------------------

def _expected_case(p, h, eps: Fraction):
    if 2 * h * h < p:
        return 1
    # h^2 > p^(1 + eps) with eps = a/b, compared as integers
    a, b = eps.numerator, eps.denominator
    return 3 if h ** (2 * b) > p ** (a + b) else 2


def _routing_table():
    rows = []
    for p in (53, 101, 211, 1009, 10007):
        for eps in (Fraction(1, 10), Fraction(1, 4), Fraction(1, 2)):
            low = math.isqrt((p - 1) // 2)
            while 2 * low * low >= p:
                low -= 1
            high = math.ceil(p ** ((1 + float(eps)) / 2))
            for h in {low, low + 1, high - 1, high + 1}:
                rows.append((p, h, eps))
    return sorted(set(rows))[:50]


@criterion(12, "saving exponent and case routing")
def test_c12_delta_and_routing(record_property):
    F = get_field(101, 2)
    rep = main_report(BoxSpec.standard(F, (5, 20)), Character.of_order(F, 2), 0.1)
    assert rep.ok
    assert abs(rep.delta_eps - 0.0038095238095) < 1e-6
    ratios = [delta_of_epsilon(0.3, n) / 0.09 for n in (10, 10**3, 10**5, 10**7)]
    assert all(abs(a - 0.5) > abs(b - 0.5) for a, b in zip(ratios, ratios[1:]))
    assert abs(ratios[-1] - 0.5) < 1e-6

    table = _routing_table()
    assert len(table) == 50
    seen = set()
    for p, h, eps in table:
        got = route_case(p, h, float(eps))
        assert got == _expected_case(p, h, eps), (p, h, eps)
        seen.add(got)
    assert seen == {1, 2, 3}
    record_property("routing_points", len(table))


@criterion(12, "saving exponent and case routing")
def test_c12_main_report_rejects_trivial_character():
    F = get_field(101, 2)
    with pytest.raises(PreconditionError):
        main_report(BoxSpec.standard(F, (5, 5)), Character(F, 0), 0.25)
