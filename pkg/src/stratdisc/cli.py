"""Command-line entry point: ``stratdisc <command> ...``.

Exit codes: 0 success, 1 failed check or benchmark, 2 usage or parse error.
"""
from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

import numpy as np

from . import construct as cons
from .design import Design, DesignFileError, format_design, read_design
from .metrics import (bounds, distance_matrix, phi_sd, phi_sd_fast, phi_sd_oracle, phi_sd3, sd2,
                      write_distances_csv)
from .patterns import check_gsoa_strength, check_soa_2plus, enumerators, space_filling_pattern
from .search import SearchConfig, minimize_phi_sd, random_u_type
from .weights import parse_weights

# reference targets for the two GF(9) designs (6 decimals); rows: full multiplication table, half columns
TABLE1 = {
    "GSOA(9,8,3^2,1)": {"sd2": 1.148028, "phi": 0.010234, "phi_lb": 0.010234, "phi_ub": 0.031398,
                        "G": 600.888889, "G_lb": 600.888889, "G_ub": 696.888889},
    "GSOA(9,4,3^2,2)": {"sd2": 0.075833, "phi": 0.006706, "phi_lb": 0.006706, "phi_ub": 0.031398,
                        "G": 150.222222, "G_lb": 150.222222, "G_ub": 174.222222},
}
TABLE1_G_EXACT = {"GSOA(9,8,3^2,1)": (Fraction(5408, 9), Fraction(6272, 9)),
                  "GSOA(9,4,3^2,2)": (Fraction(1352, 9), Fraction(1568, 9))}
TABLE1_TOL = 5e-7


class UsageError(Exception):
    pass


def _emit(obj: dict, as_json: bool):
    if as_json:
        print(json.dumps(obj))
        return
    for k, v in obj.items():
        print(f"{k:<16} {v}")


def _out(text: str, path):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _load(path, s=None, p=None) -> Design:
    D = read_design(path)
    if s is not None:
        D = D.with_kernel(s, p)
    elif p is not None:
        raise UsageError("--p needs --s")
    return D


def _weights(text: str, D_or_s, p=None):
    s, p = (D_or_s.s, D_or_s.p) if isinstance(D_or_s, Design) else (D_or_s, p)
    try:
        return parse_weights(text, s, p)
    except ValueError as e:
        raise UsageError(f"--weights: {e}") from None


# -- eval ----------------------------------------------------------------------

def eval_report(D: Design, w, verify=False, phi3=False) -> dict:
    n, m, s, p = D.shape
    res = phi_sd(D, w)
    dm = distance_matrix(D, w)
    rep = {"n": n, "m": m, "s": s, "p": p, "levels": D.levels, "weights": w.label,
           "u_type": D.is_u_type, "sd2": sd2(D, w), "phi_sd": res.value, "path": res.path, "G_D": dm.G}
    rep.update({"G_lb": None, "G_ub": None, "phi_lb": None, "phi_ub": None, "gap_to_lb": None,
                "attained_lb": None, "attained_ub": None})
    if m >= 2 and n >= 2 and D.native and n % s**p == 0:
        bd = bounds(n, m, s, p, w, design=D if D.is_u_type else None)
        rep.update({"G_lb": bd.G_LB, "G_ub": bd.G_UB, "phi_lb": bd.phi_LB, "phi_ub": bd.phi_UB,
                    "gap_to_lb": res.value - bd.phi_LB,
                    "attained_lb": bd.attained_lb, "attained_ub": bd.attained_ub})
    if verify and D.is_u_type:
        fast, oracle = phi_sd_fast(D, w), phi_sd_oracle(D, w)
        rep.update({"phi_fast": fast, "phi_oracle": oracle,
                    "verified": abs(fast - oracle) <= 1e-10 * max(1.0, abs(fast))})
    if phi3:
        rep["phi_sd3"] = phi_sd3(D, w)
    return rep


def cmd_eval(args) -> int:
    D = _load(args.file, args.s, args.p)
    w = _weights(args.weights, D)
    rep = eval_report(D, w, args.verify, args.phi3)
    _emit(rep, args.json)
    return 1 if rep.get("verified") is False else 0


# -- construct -----------------------------------------------------------------

def _finish_construct(D: Design, out) -> int:
    prof = cons.verify_balance(D)
    status = "balanced" if prof.ok else f"not balanced {json.dumps(prof.witness)}"
    if D.m >= 2 and D.is_u_type:
        bd = bounds(D.n, D.m, D.s, D.p, parse_weights("constant", D.s, D.p), exact=True, design=D)
        status += f"; lower bound attained: {bd.attained_lb}; upper bound attained: {bd.attained_ub}"
    print(f"{D.n}x{D.m} design over Z_{D.levels}: {status}", file=sys.stderr)
    _out(format_design(D), out)
    return 0


def cmd_construct(args) -> int:
    kind = args.kind
    if kind == "mult-table":
        D = cons.half_column_design(args.s, args.p) if args.half else cons.mult_table_design(args.s, args.p, args.q)
    elif kind == "gh":
        D = cons.gh_to_design(cons.read_gh(args.file), args.s, args.p, args.q)
    elif kind == "rao-hamming":
        D = cons.rao_hamming_design(args.s)
    elif kind == "juxtapose":
        D = cons.juxtapose(read_design(args.first), read_design(args.second))
    elif kind == "collapse":
        D = cons.collapse_design(read_design(args.file), args.q)
    else:
        D = cons.worst_case_design(args.n, args.m, args.s, args.p)
    return _finish_construct(D, args.out)


# -- search --------------------------------------------------------------------

def cmd_search(args) -> int:
    w = _weights(args.weights, args.s, args.p)
    cfg = SearchConfig(iterations=args.iters, restarts=args.restarts, seed=args.seed, threads=args.threads)
    res = minimize_phi_sd((args.n, args.m, args.s, args.p), w, cfg)
    _out(format_design(res.design), args.out)
    summary = {"phi_sd": res.phi, "phi_lb": res.phi_lb, "gap_to_lb": res.gap, "G_D": res.G,
               "restart_best": res.restart_best, "iterations": res.iterations}
    print(json.dumps(summary), file=sys.stderr)
    return 0


# -- pattern -------------------------------------------------------------------

def cmd_pattern(args) -> int:
    D = read_design(args.file)
    ys = [float(t) for t in args.y.split(",")]
    try:
        S = list(space_filling_pattern(D).S)
    except ValueError as e:
        S = None
        print(f"full pattern skipped: {e}", file=sys.stderr)
    reps = [enumerators(D, y) for y in ys]
    obj = {"S": S, "S_bar": list(reps[0].S_bar),
           "enumerators": [{"y": r.y, "E": r.E, "E2": r.E2} for r in reps]}
    if args.json:
        print(json.dumps(obj))
        return 0
    if S is not None:
        print("j  S_j")
        for j, v in enumerate(S):
            print(f"{j:<2} {v:.10g}")
    print("pair-averaged coefficients: " + " ".join(f"{v:.10g}" for v in obj["S_bar"]))
    for r in obj["enumerators"]:
        E = "n/a" if r["E"] is None else f"{r['E']:.12g}"
        print(f"y={r['y']:g}  E={E}  E2={r['E2']:.12g}")
    return 0


# -- check ---------------------------------------------------------------------

def cmd_check(args) -> int:
    D = read_design(args.file)
    if args.kind == "dtave":
        prof = cons.verify_balance(D)
        ok, witness = prof.ok, prof.witness
    elif args.kind == "gsoa":
        if not 1 <= args.t <= D.m * D.p:
            raise UsageError(f"--t must lie in 1..{D.m * D.p}")
        ok, witness = check_gsoa_strength(D, args.t)
    else:
        ok, witness = check_soa_2plus(D)
    print(json.dumps({"check": args.kind, "ok": ok, "witness": witness}))
    return 0 if ok else 1


# -- bench ---------------------------------------------------------------------

def table1_values(w, exact=False) -> dict:
    out = {}
    for name, D in (("GSOA(9,8,3^2,1)", cons.mult_table_design(3, 2)),
                    ("GSOA(9,4,3^2,2)", cons.half_column_design(3, 2))):
        bd = bounds(D.n, D.m, D.s, D.p, w, exact=exact)
        dm = distance_matrix(D, w, exact=exact)
        out[name] = {"sd2": sd2(D, w, exact), "phi": phi_sd_fast(D, w, exact),
                     "phi_lb": bd.phi_LB, "phi_ub": bd.phi_UB,
                     "G": dm.G_exact if exact else dm.G, "G_lb": bd.G_LB, "G_ub": bd.G_UB}
    return out


def cmd_bench_table1(args) -> int:
    w = _weights(args.weights, 3, 2)
    got = table1_values(w)
    passed = total = 0
    for name, targets in TABLE1.items():
        for col, want in targets.items():
            val = got[name][col]
            ok = abs(val - want) <= TABLE1_TOL
            passed += ok
            total += 1
            print(f"{'PASS' if ok else 'FAIL'} {name:<16} {col:<7} {val:.9f} target {want:.6f}")
    exact = table1_values(w, exact=True)
    exact_ok = True
    for name, (G, G_ub) in TABLE1_G_EXACT.items():
        ok = exact[name]["G"] == G and exact[name]["G_lb"] == G and exact[name]["G_ub"] == G_ub
        exact_ok &= ok
        print(f"{'PASS' if ok else 'FAIL'} {name:<16} rational G={exact[name]['G']} "
              f"LB={exact[name]['G_lb']} UB={exact[name]['G_ub']}")
    print(f"{passed}/{total} PASS; rational G_D {'PASS' if exact_ok else 'FAIL'}")
    return 0 if passed == total and exact_ok else 1


def random_baseline(n, m, s, p, w, count, seed):
    rng = np.random.default_rng(seed)
    vals = np.array([phi_sd_fast(random_u_type(n, m, s, p, rng), w) for _ in range(count)])
    sd = float(vals.std(ddof=1)) if count > 1 else 0.0
    return {"n": n, "m": m, "s": s, "p": p, "count": count, "seed": seed,
            "mean": float(vals.mean()), "sd": sd, "sd_defined": count > 1,
            "min": float(vals.min()), "max": float(vals.max())}


def cmd_bench_random(args) -> int:
    if args.count < 1:
        raise UsageError("--count must be >= 1")
    w = _weights(args.weights, args.s, args.p)
    _emit(random_baseline(args.n, args.m, args.s, args.p, w, args.count, args.seed), args.json)
    return 0


# -- distances -----------------------------------------------------------------

def cmd_distances(args) -> int:
    D = _load(args.file, args.s, args.p)
    w = _weights(args.weights, D)
    if args.out in (None, "-"):
        write_distances_csv(D, w, sys.stdout)
    else:
        with open(args.out, "w", newline="") as fh:
            write_distances_csv(D, w, fh)
    return 0


# -- parser --------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="stratdisc", description="Stratified L2-discrepancy design toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    def weights_arg(p):
        p.add_argument("--weights", default="constant",
                       help="constant | exp:<y> | enum:<y> | custom:<w0,...,wp>")

    e = sub.add_parser("eval", help="evaluate a design file")
    e.add_argument("file")
    weights_arg(e)
    e.add_argument("--s", type=int, help="re-read the entries under a base-s kernel")
    e.add_argument("--p", type=int, help="kernel depth (default floor(log_s levels))")
    e.add_argument("--json", action="store_true")
    e.add_argument("--verify", action="store_true", help="also run the projection oracle")
    e.add_argument("--phi3", action="store_true", help="also average SD^2 over column triples")
    e.set_defaults(func=cmd_eval)

    c = sub.add_parser("construct", help="build a design")
    csub = c.add_subparsers(dest="kind", required=True)
    mt = csub.add_parser("mult-table")
    mt.add_argument("--s", type=int, required=True)
    mt.add_argument("--p", type=int, required=True)
    mt.add_argument("--q", type=int)
    mt.add_argument("--half", action="store_true", help="keep one column of each {x, -x} pair")
    gh = csub.add_parser("gh")
    gh.add_argument("file")
    gh.add_argument("--s", type=int, required=True)
    gh.add_argument("--p", type=int, required=True)
    gh.add_argument("--q", type=int)
    rh = csub.add_parser("rao-hamming")
    rh.add_argument("--s", type=int, required=True)
    jx = csub.add_parser("juxtapose")
    jx.add_argument("first")
    jx.add_argument("second")
    co = csub.add_parser("collapse")
    co.add_argument("file")
    co.add_argument("--q", type=int, required=True)
    wc = csub.add_parser("worst-case")
    for flag in ("--n", "--m", "--s", "--p"):
        wc.add_argument(flag, type=int, required=True)
    for p in (mt, gh, rh, jx, co, wc):
        p.add_argument("--out", help="output design file (default stdout)")
    c.set_defaults(func=cmd_construct)

    s = sub.add_parser("search", help="threshold-accepting minimisation of Phi_SD")
    for flag in ("--n", "--m", "--s", "--p"):
        s.add_argument(flag, type=int, required=True)
    weights_arg(s)
    s.add_argument("--iters", type=int, default=20000)
    s.add_argument("--restarts", type=int, default=5)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--threads", type=int, default=1)
    s.add_argument("--out")
    s.set_defaults(func=cmd_search)

    pt = sub.add_parser("pattern", help="space-filling pattern and enumerators")
    pt.add_argument("file")
    pt.add_argument("--y", default="0.1,0.3,0.5", help="comma-separated y values")
    pt.add_argument("--json", action="store_true")
    pt.set_defaults(func=cmd_pattern)

    ck = sub.add_parser("check", help="structural checks; exit 1 with a witness on failure")
    ck.add_argument("kind", choices=["dtave", "gsoa", "soa2plus"])
    ck.add_argument("file")
    ck.add_argument("--t", type=int, default=2)
    ck.set_defaults(func=cmd_check)

    b = sub.add_parser("bench", help="reproduce reference values")
    bsub = b.add_subparsers(dest="kind", required=True)
    t1 = bsub.add_parser("table1")
    weights_arg(t1)
    t1.set_defaults(func=cmd_bench_table1)
    rb = bsub.add_parser("random")
    for flag, dflt in (("--n", 9), ("--m", 8), ("--s", 3), ("--p", 2), ("--count", 100), ("--seed", 0)):
        rb.add_argument(flag, type=int, default=dflt)
    weights_arg(rb)
    rb.add_argument("--json", action="store_true")
    rb.set_defaults(func=cmd_bench_random)

    d = sub.add_parser("distances", help="pairwise distances as CSV")
    d.add_argument("file")
    weights_arg(d)
    d.add_argument("--s", type=int)
    d.add_argument("--p", type=int)
    d.add_argument("--out")
    d.set_defaults(func=cmd_distances)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (DesignFileError, UsageError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except cons.ConstructionError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
