"""Command-line front end: ``charbox <subcommand> [flags]``.

Exit codes: 0 success, 1 a checked inequality failed, 2 invalid input,
3 a computation budget was exceeded.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .boxes import Basis, BoxSpec, box_char_sum, sublattice_char_sum
from .burgess import burgess_pipeline
from .chars import Character
from .energy import dyadic_census, energy_via_ratios, kl_verdict
from .errors import CharboxError, InputError, PreconditionError
from .field import divisors, get_field, parse_element
from .lattice import analyse
from .numeric import jsonable
from .svg import read_columns, scatter_svg
from .sweep import SweepConfig, run_sweep, write_sweep
from .verify import (
    katz_complete, katz_scan, main_report, pv_subfield_check, subfield_box,
    subfield_census, weil_complete, weil_moment,
)


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise InputError(f"expected comma-separated integers, got {text!r}") from None


def _interval(text: str) -> tuple[int, int]:
    a, sep, b = text.partition(":")
    if not sep:
        raise InputError(f"interval must look like a:b, got {text!r}")
    lo, hi = int(a), int(b)
    if hi < lo:
        raise InputError("interval end precedes its start")
    return lo, hi


def _field(args):
    modulus = _int_list(args.modulus) if args.modulus else None
    return get_field(args.p, args.n, modulus)


def _character(ctx, args) -> Character:
    if args.m is not None:
        g = parse_element(ctx, args.generator) if args.generator else None
        return Character.from_config(ctx, args.m, g)
    return Character.of_order(ctx, args.order, args.chi_k)


def _box(ctx, args) -> BoxSpec:
    if not args.H:
        raise InputError("--H is required")
    H = _int_list(args.H)
    N = _int_list(args.N) if args.N else (0,) * ctx.n
    basis = Basis(ctx, tuple(parse_element(ctx, e) for e in args.basis.split(","))) \
        if args.basis else Basis.standard(ctx)
    return BoxSpec(basis, N, H)


def _all_hold(checks) -> bool:
    return all(c.holds for c in checks)


# -- subcommands: each returns (payload, verdict) ------------------------------------

def cmd_field_info(args):
    ctx = _field(args)
    return {
        "p": ctx.p, "n": ctx.n, "q": ctx.q, "modulus": list(ctx.modulus),
        "generator": ctx.format(ctx.g), "generator_index": ctx.g,
        "subfield_degrees": divisors(ctx.n),
    }, True


def cmd_sum(args):
    ctx = _field(args)
    box, chi = _box(ctx, args), _character(ctx, args)
    res = sublattice_char_sum(box, chi, args.k) if args.k else box_char_sum(box, chi)
    return {"box": box.to_dict(), "character": chi.to_dict(), **res.to_dict()}, True


def cmd_energy(args):
    ctx = _field(args)
    box = _box(ctx, args)
    try:
        kl = kl_verdict(box)
        rep = kl["report"]
        out = rep.summary()
        out.update(L1_ratio=kl["L1_ratio"], L2_ratio=kl["L2_ratio"])
    except PreconditionError as exc:
        rep = energy_via_ratios(box)
        out = rep.summary()
        out["kl_skipped"] = str(exc)
    if args.census:
        out["dyadic_census"] = dyadic_census(box)
    return out, rep.ok


def cmd_minima(args):
    ctx = _field(args)
    box = _box(ctx, args)
    z = parse_element(ctx, args.z)
    res = analyse(ctx, box.basis, z, box.H)
    R, dual = res["minima"], res["dual"]
    out = {"p": ctx.p, "n": ctx.n, "z": ctx.format(z), "H": list(box.H),
           "determinant": res["instance"].determinant(), **R.to_dict(),
           "dual": dual.to_dict() if dual else None,
           "checks": [c.to_dict() for c in res["checks"]]}
    return out, _all_hold(res["checks"])


def cmd_burgess(args):
    ctx = _field(args)
    box, chi = _box(ctx, args), _character(ctx, args)
    rep = burgess_pipeline(box, chi, args.epsilon, args.r, args.delta)
    return rep.to_dict(), rep.ok


def cmd_verify_weil(args):
    ctx = _field(args)
    chi = _character(ctx, args)
    if args.interval:
        res = weil_moment(ctx, chi, _interval(args.interval), args.r)
        return res.to_dict(), res.check.holds
    if not args.roots:
        raise InputError("give --interval a:b (moment) or --roots (complete sum)")
    roots = [parse_element(ctx, e) for e in args.roots.split(",")]
    mult = _int_list(args.mult) if args.mult else None
    res = weil_complete(ctx, chi, roots, mult)
    return res.to_dict(), res.check.holds


def cmd_verify_katz(args):
    ctx = _field(args)
    chi = _character(ctx, args)
    if args.g:
        g = parse_element(ctx, args.g)
        if ctx.subfield_degree(g) == 1:
            raise InputError("g must lie outside F_p")
        value = katz_complete(ctx, chi, g)
        out = {"g": ctx.format(g), "sum": value}
        if ctx.n == 2 and chi.order == 2:
            out["equals_minus_one"] = value.exact() == -1
            return jsonable(out), out["equals_minus_one"]
        return jsonable(out), True
    scan = katz_scan(ctx, chi, args.length)
    return scan.to_dict(), _all_hold(scan.checks)


def cmd_verify_pv(args):
    ctx = _field(args)
    chi = _character(ctx, args)
    H = _int_list(args.H) if args.H else None
    if not H:
        raise InputError("--H is required (side lengths of the subfield box)")
    N = _int_list(args.N) if args.N else None
    A = subfield_box(ctx, args.s, H, N)
    res = pv_subfield_check(ctx, args.s, A, chi, args.max_shifts, args.seed)
    return res.to_dict(), _all_hold(res.checks)


def cmd_census(args):
    ctx = _field(args)
    res = subfield_census(_box(ctx, args))
    return res.to_dict(), _all_hold(res.checks)


def cmd_main_report(args):
    ctx = _field(args)
    box, chi = _box(ctx, args), _character(ctx, args)
    rep = main_report(box, chi, args.epsilon, args.r, args.delta)
    return rep.to_dict(), rep.ok


def cmd_sweep(args):
    raw = json.loads(Path(args.config).read_text())
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.out:
        raw["output_dir"] = args.out
    cfg = SweepConfig.from_dict(raw)
    results = run_sweep(cfg, jobs=args.jobs)
    summary = write_sweep(cfg, results, cfg.output_dir)
    ok = all(entry["failures"] == 0 for entry in summary["scans"].values())
    return summary, ok


def cmd_plot(args):
    pts = read_columns(args.csv, args.x, args.y)
    if not pts:
        raise InputError(f"no numeric ({args.x}, {args.y}) pairs in {args.csv}")
    Path(args.out).write_text(scatter_svg(pts, args.x, args.y, args.title or ""))
    return {"points": len(pts), "out": str(args.out)}, True


# -- parser ----------------------------------------------------------------------------

def _add_field(sp):
    sp.add_argument("--p", type=int, required=True, help="characteristic")
    sp.add_argument("--n", type=int, default=1, help="extension degree")
    sp.add_argument("--modulus", help="monic modulus coefficients c0,...,cn (default: first irreducible)")


def _add_char(sp):
    sp.add_argument("--order", type=int, default=2, help="character order d (default 2)")
    sp.add_argument("--chi-k", type=int, default=1, help="use chi_d^k, gcd(k, d) = 1")
    sp.add_argument("--m", type=int, help="character index: chi(g) = e(m/(q-1))")
    sp.add_argument("--generator", help="generator g for --m (default: smallest generator)")


def _add_box(sp, required=True):
    sp.add_argument("--H", required=required, help="side lengths, comma separated")
    sp.add_argument("--N", help="offsets, comma separated (default 0)")
    sp.add_argument("--basis", help="basis elements, comma separated (default 1,t,...)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="charbox", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"charbox {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("field-info", help="field parameters and generator")
    _add_field(sp)
    sp.set_defaults(func=cmd_field_info)

    sp = sub.add_parser("sum", help="character sum over a box")
    _add_field(sp), _add_char(sp), _add_box(sp)
    sp.add_argument("--k", type=int, help="sum over the first k coordinates only")
    sp.set_defaults(func=cmd_sum)

    sp = sub.add_parser("energy", help="multiplicative energy and ratio decomposition")
    _add_field(sp), _add_box(sp)
    sp.add_argument("--census", action="store_true", help="include the dyadic class census")
    sp.set_defaults(func=cmd_energy)

    sp = sub.add_parser("minima", help="successive minima of the lattice for z")
    _add_field(sp), _add_box(sp)
    sp.add_argument("--z", required=True, help="field element, e.g. t or 2t+1")
    sp.set_defaults(func=cmd_minima)

    for name, func, helptext in (("burgess", cmd_burgess, "amplification pipeline"),
                                 ("main-report", cmd_main_report, "routed bound report")):
        sp = sub.add_parser(name, help=helptext)
        _add_field(sp), _add_char(sp), _add_box(sp)
        sp.add_argument("--epsilon", type=float, default=0.25)
        sp.add_argument("--r", type=int, help="override the moment exponent r")
        sp.add_argument("--delta", help="override delta (e.g. 1/20 or 0.05)")
        sp.set_defaults(func=func)

    sp = sub.add_parser("verify-weil", help="complete-sum or interval-moment bound")
    _add_field(sp), _add_char(sp)
    sp.add_argument("--interval", help="a:b for the moment bound")
    sp.add_argument("--r", type=int, default=1)
    sp.add_argument("--roots", help="distinct roots, comma separated")
    sp.add_argument("--mult", help="root multiplicities, comma separated")
    sp.set_defaults(func=cmd_verify_weil)

    sp = sub.add_parser("verify-katz", help="sums over F_p-translates of generators")
    _add_field(sp), _add_char(sp)
    sp.add_argument("--length", type=int, help="window length (default: all lengths)")
    sp.add_argument("--g", help="evaluate the complete sum at this element only")
    sp.set_defaults(func=cmd_verify_katz)

    sp = sub.add_parser("verify-pv", help="shifted sums over a subfield box")
    _add_field(sp), _add_char(sp), _add_box(sp, required=False)
    sp.add_argument("--s", type=int, required=True, help="subfield degree")
    sp.add_argument("--max-shifts", type=int, default=10**5)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_verify_pv)

    sp = sub.add_parser("census", help="subfield ratio census of a box")
    _add_field(sp), _add_box(sp)
    sp.set_defaults(func=cmd_census)

    sp = sub.add_parser("sweep", help="run a JSON-configured grid of scans")
    sp.add_argument("--config", required=True)
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out", help="output directory (overrides the config)")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("plot", help="SVG scatter of two CSV columns")
    sp.add_argument("--csv", required=True)
    sp.add_argument("--x", default="p")
    sp.add_argument("--y", default="kl_ratio")
    sp.add_argument("--out", required=True)
    sp.add_argument("--title")
    sp.set_defaults(func=cmd_plot)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        payload, ok = args.func(args)
    except CharboxError as exc:
        print(f"charbox: {exc}", file=sys.stderr)
        return exc.exit_code
    except (OSError, json.JSONDecodeError) as exc:
        print(f"charbox: {exc}", file=sys.stderr)
        return 2
    print(json.dumps(jsonable(payload), sort_keys=True, indent=2))
    if not ok:
        print("charbox: a checked inequality failed", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
