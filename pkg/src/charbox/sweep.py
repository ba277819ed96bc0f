"""Grid sweeps driven by a JSON config, written as CSV with a provenance line.

A config names primes, degrees, box shapes and the scans to run.  Work is
split into independent tasks; results are gathered in task order, so the
output bytes do not depend on ``jobs`` or on scheduling.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .boxes import Basis, BoxSpec
from .burgess import burgess_pipeline
from .chars import Character
from .energy import kl_verdict
from .errors import CharboxError, InputError
from .field import get_field, is_prime, q_cap
from .lattice import analyse
from .numeric import to_float
from .verify import katz_scan, weil_complete, weil_moment

SCANS = ("energy", "minima", "burgess", "weil", "moment", "katz")


@dataclass
class SweepConfig:
    primes: list[int]
    degrees: list[int]
    shapes: list = field(default_factory=lambda: ["max", "ramp"])
    orders: list[int] = field(default_factory=lambda: [2])
    scans: list[str] = field(default_factory=lambda: ["energy"])
    seed: int = 0
    epsilon: float = 0.25
    trials: int = 10
    z_samples: int = 50
    output_dir: str = "sweep_out"

    @classmethod
    def from_dict(cls, raw: dict) -> "SweepConfig":
        raw = dict(raw)
        primes = raw.pop("primes", None)
        if isinstance(primes, dict):
            primes = first_primes_above(int(primes["above"]), int(primes["count"]))
        if not primes:
            raise InputError("config needs a non-empty 'primes' list")
        unknown = set(raw) - set(cls.__dataclass_fields__)
        if unknown:
            raise InputError(f"unknown config keys: {sorted(unknown)}")
        orders = raw.pop("orders", [2])
        if isinstance(orders, dict):
            orders = list(range(2, int(orders["up_to"]) + 1))
        cfg = cls(primes=[int(p) for p in primes], orders=[int(d) for d in orders], **raw)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        for p in self.primes:
            if not is_prime(p):
                raise InputError(f"{p} is not prime")
        cap = q_cap()
        for p in self.primes:
            for n in self.degrees:
                if p**n > cap:
                    raise InputError(f"p^n = {p}^{n} exceeds the field cap {cap}")
        bad = [s for s in self.scans if s not in SCANS]
        if bad:
            raise InputError(f"unknown scans {bad}; choose from {SCANS}")

    def canonical(self) -> str:
        # the output location is not part of the experiment, so it is left out of the hash
        body = {k: v for k, v in self.__dict__.items() if k != "output_dir"}
        return json.dumps(body, sort_keys=True, separators=(",", ":"))

    @property
    def sha256(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()


def first_primes_above(above: int, count: int) -> list[int]:
    out, c = [], above + 1
    while len(out) < count:
        if is_prime(c):
            out.append(c)
        c += 1
    return out


def shape_vectors(shape, p: int, n: int, rng: np.random.Generator) -> tuple[int, ...]:
    """Side lengths for a named shape, all below sqrt(p/2), sorted ascending."""
    top = math.isqrt((p - 1) // 2)
    while 2 * top * top >= p:
        top -= 1
    if isinstance(shape, list):
        return tuple(sorted(int(h) for h in shape))
    if shape == "max":
        return (top,) * n
    if shape == "ramp":
        return tuple(max(1, (top * (i + 1)) // n) for i in range(n))
    if shape == "random":
        return tuple(sorted(int(v) for v in rng.integers(1, top + 1, size=n)))
    raise InputError(f"unknown shape {shape!r}")


def _task_seed(cfg: SweepConfig, *key) -> np.random.Generator:
    digest = hashlib.sha256(repr((cfg.seed,) + key).encode()).digest()
    return np.random.default_rng(int.from_bytes(digest[:8], "little"))


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (tuple, list)):
        return ";".join(str(x) for x in v)
    return str(v)


# -- scans: each returns a list of row dicts ----------------------------------------

def scan_energy(cfg: SweepConfig, p: int, n: int, shape) -> list[dict]:
    ctx = get_field(p, n)
    H = shape_vectors(shape, p, n, _task_seed(cfg, "energy", p, n, str(shape)))
    box = BoxSpec.standard(ctx, H)
    res = kl_verdict(box)
    rep = res["report"]
    checks = {c.name.split(":")[0]: c.holds for c in rep.checks}
    return [{
        "p": p, "n": n, "shape": str(shape), "H": H, "size": rep.size, "E": rep.E,
        "E_bruteforce": rep.E_bruteforce, "L1": rep.L1, "L2": rep.L2,
        "Zprime": rep.Zprime_size, "Z": rep.Z_size,
        "kl_ratio": res["kl_ratio"], "L1_ratio": res["L1_ratio"], "L2_ratio": res["L2_ratio"],
        "EN": checks["EN"], "fz": checks["fz"], "chain": res["chain"].holds, "ok": rep.ok,
    }]


def scan_minima(cfg: SweepConfig, p: int, n: int, shape) -> list[dict]:
    ctx = get_field(p, n)
    rng = _task_seed(cfg, "minima", p, n, str(shape))
    H = shape_vectors(shape, p, n, rng)
    basis = Basis.standard(ctx)
    zs = np.arange(1, ctx.q)
    if len(zs) > cfg.z_samples:
        zs = np.sort(rng.choice(zs, size=cfg.z_samples, replace=False))
    rows = []
    for z in zs.tolist():
        out = analyse(ctx, basis, z, H)
        R, dual = out["minima"], out["dual"]
        prod = math.prod(R.lambdas)
        rows.append({
            "p": p, "n": n, "H": H, "z": z, "lambdas": [str(l) for l in R.lambdas],
            "lambda_product": str(prod),
            "minkowski_product": str(prod * math.prod((2 * h) ** 2 for h in H)),
            "point_count": R.point_count, "dual_lambda1": str(dual.lambda1),
            "transference": float(dual.transference) if dual.transference is not None else "",
            "ok": all(c.holds for c in out["checks"]),
        })
    return rows


def scan_burgess(cfg: SweepConfig, p: int, n: int, shape) -> list[dict]:
    ctx = get_field(p, n)
    H = shape_vectors(shape, p, n, _task_seed(cfg, "burgess", p, n, str(shape)))
    box = BoxSpec.standard(ctx, H)
    rows = []
    for d in cfg.orders:
        if ctx.order % d:
            continue
        chi = Character.of_order(ctx, d)
        try:
            rep = burgess_pipeline(box, chi, cfg.epsilon)
        except CharboxError as exc:
            rows.append({"p": p, "n": n, "H": H, "order": d, "status": type(exc).__name__})
            continue
        rows.append({
            "p": p, "n": n, "H": H, "order": d, "status": "ok", "r": rep.r,
            "delta": str(rep.delta), "I": rep.interval[1], "B0": rep.shift_size,
            "S_abs": to_float(rep.S.abs()), "fi_residual": rep.fi_residual, "fi_bound": rep.fi_bound,
            "A": rep.A, "Bq": rep.Bq, "C": to_float(rep.C), "ti_lhs": rep.ti_lhs,
            "ti_rhs": rep.ti_rhs, "fi_holds": rep.fi_holds, "ti_holds": rep.ti_holds,
            "ok": rep.ok,
        })
    return rows


def scan_weil(cfg: SweepConfig, p: int, n: int, shape) -> list[dict]:
    ctx = get_field(p, n)
    rng = _task_seed(cfg, "weil", p, n)
    rows = []
    for d in cfg.orders:
        if ctx.order % d:
            continue
        chi = Character.of_order(ctx, d)
        worst = 0.0
        fails = 0
        for _ in range(cfg.trials):
            m = int(rng.integers(1, min(6, ctx.q) + 1))
            roots = rng.choice(ctx.q, size=m, replace=False)
            mult = rng.integers(1, 2 * d, size=m)
            if all(e % d == 0 for e in mult):
                mult[0] = 1
            res = weil_complete(ctx, chi, roots, mult)
            fails += not res.check.holds
            if m > 1:
                worst = max(worst, math.sqrt(to_float(res.abs2)) / ((m - 1) * math.sqrt(ctx.q)))
        rows.append({"p": p, "n": n, "order": d, "trials": cfg.trials, "violations": fails,
                     "max_ratio": worst, "ok": fails == 0})
    return rows


def scan_moment(cfg: SweepConfig, p: int, n: int, shape) -> list[dict]:
    ctx = get_field(p, n)
    rows = []
    for d in cfg.orders:
        if ctx.order % d:
            continue
        chi = Character.of_order(ctx, d)
        for r in (1, 2, 3):
            for w in range(1, 9):
                res = weil_moment(ctx, chi, (1, w), r)
                rows.append({"p": p, "n": n, "order": d, "r": r, "I": w,
                             "lhs": to_float(res.lhs), "rhs": to_float(res.check.rhs),
                             "ok": res.check.holds})
    return rows


def scan_katz(cfg: SweepConfig, p: int, n: int, shape) -> list[dict]:
    ctx = get_field(p, n)
    rows = []
    for d in cfg.orders:
        if ctx.order % d:
            continue
        ks = katz_scan(ctx, Character.of_order(ctx, d))
        rows.append({"p": p, "n": n, "order": d, "generators": ks.generators,
                     "max_abs": ks.max_abs, "max_ratio": ks.max_ratio,
                     "argmax_g": ks.argmax[0], "argmax_start": ks.argmax[1],
                     "argmax_length": ks.argmax[2], "ok": all(c.holds for c in ks.checks)})
    return rows


_SCAN_FUNCS = {
    "energy": scan_energy, "minima": scan_minima, "burgess": scan_burgess,
    "weil": scan_weil, "moment": scan_moment, "katz": scan_katz,
}
_PER_SHAPE = {"energy", "minima", "burgess"}


def tasks(cfg: SweepConfig) -> list[tuple]:
    out = []
    for scan in cfg.scans:
        for p in cfg.primes:
            for n in cfg.degrees:
                shapes = cfg.shapes if scan in _PER_SHAPE else [None]
                for shape in shapes:
                    out.append((scan, p, n, shape))
    return out


def _run_task(args) -> tuple:
    cfg_dict, (scan, p, n, shape) = args
    cfg = SweepConfig(**cfg_dict)
    try:
        return scan, _SCAN_FUNCS[scan](cfg, p, n, shape)
    except CharboxError as exc:
        return scan, [{"p": p, "n": n, "shape": str(shape), "status": type(exc).__name__,
                       "error": str(exc), "ok": False}]


def run_sweep(cfg: SweepConfig, jobs: int = 1) -> dict[str, list[dict]]:
    work = [(dict(cfg.__dict__), t) for t in tasks(cfg)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_task, work))
    else:
        results = [_run_task(w) for w in work]
    by_scan: dict[str, list[dict]] = {s: [] for s in cfg.scans}
    for scan, rows in results:
        by_scan[scan].extend(rows)
    return by_scan


def header_line(cfg: SweepConfig) -> str:
    return f"# charbox {__version__} config_sha256={cfg.sha256} seed={cfg.seed}\n"


def render_csv(cfg: SweepConfig, rows: list[dict]) -> str:
    cols: list[str] = []
    for row in rows:
        for k in row:
            if k not in cols:
                cols.append(k)
    buf = io.StringIO()
    buf.write(header_line(cfg))
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(cols)
    for row in rows:
        writer.writerow([_fmt(row.get(c, "")) for c in cols])
    return buf.getvalue()


def write_sweep(cfg: SweepConfig, results: dict[str, list[dict]], out_dir: str | os.PathLike) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    summary = {"version": __version__, "config_sha256": cfg.sha256, "seed": cfg.seed,
               "config": json.loads(cfg.canonical()), "scans": {}}
    for scan, rows in results.items():
        (out / f"{scan}.csv").write_text(render_csv(cfg, rows))
        entry = {"rows": len(rows), "failures": sum(1 for r in rows if r.get("ok") is False)}
        ratio_key = {"energy": "kl_ratio", "katz": "max_ratio", "minima": "transference",
                     "weil": "max_ratio"}.get(scan)
        vals = [r[ratio_key] for r in rows if isinstance(r.get(ratio_key), float)]
        if vals:
            entry[f"max_{ratio_key}"] = max(vals)
        summary["scans"][scan] = entry
    (out / "summary.json").write_text(json.dumps(summary, sort_keys=True, indent=2) + "\n")
    return summary
