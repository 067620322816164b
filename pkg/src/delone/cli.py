"""Command-line front end.

Subcommands: gen, export, stats, count, freq, repetitivity, constants,
bilip, verify.  Rational inputs use a/b syntax; no floating point crosses
into any pass/fail decision.  Exit codes: 0 pass, 1 check failure,
2 usage error, 3 resource cap.
"""

from __future__ import annotations

import argparse
import os
import sys
from fractions import Fraction

from . import choquet, hierarchy, maps, nonrect, patch, rectlab, suites, ue
from .hierarchy import BLOCK_ALIGNED, SLIDING, CapacityError


def _frac(text: str) -> Fraction:
    try:
        return Fraction(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a rational: {text!r}") from exc


def _show(x: Fraction, limit: int = 48) -> str:
    """Exact rational when short, decimal approximation otherwise."""
    s = str(x)
    if len(s) <= limit:
        return s
    return f"~{float(x):.12g} ({len(str(x.numerator))}/{len(str(x.denominator))} digits)"


def _read_params(path: str) -> dict[str, str]:
    out = {}
    with open(path) as fh:
        for ln in fh:
            ln = ln.split("#", 1)[0].strip()
            if not ln:
                continue
            if "=" not in ln:
                raise ValueError(f"bad parameter line: {ln!r}")
            k, v = ln.split("=", 1)
            out[k.strip()] = v.strip()
    return out


def _schedule_from(args, depth: int) -> nonrect.LSchedule:
    n1 = frozenset(int(t) for t in args.n1_steps.split(",") if t) if args.n1_steps else frozenset()
    if args.L_schedule:
        vals = tuple(Fraction(t) for t in args.L_schedule.split(","))
    else:
        vals = tuple(Fraction(n) for n in range(1, depth + 1))
    return nonrect.LSchedule(vals, n1_steps=n1)


def _apply_param_file(args) -> None:
    if not args.params:
        return
    kv = _read_params(args.params)
    mapping = {
        "L_schedule": ("L_schedule", str),
        "depth": ("depth", int),
        "mode": ("mode", str),
        "m": ("m", int),
        "N": ("blocks", int),
        "ell": ("ell", int),
        "P_star": ("p_star", int),
        "d1p": ("d1p", str),
        "d2p": ("d2p", str),
        "N1_steps": ("n1_steps", str),
    }
    for key, (attr, conv) in mapping.items():
        if key in kv:
            setattr(args, attr, conv(kv[key]))


def cmd_gen(args) -> int:
    _apply_param_file(args)
    if args.mode == "rigorous" and (args.m or args.blocks or args.ell or args.d1p or args.d2p):
        print("gen: rigorous mode derives m, N, ell and the density targets; "
              "overriding them is not allowed", file=sys.stderr)
        return 2
    depth = args.depth
    schedule = _schedule_from(args, depth)
    gaps = None
    if args.d1p or args.d2p:
        if not (args.d1p and args.d2p):
            print("gen: d1p and d2p must be given together", file=sys.stderr)
            return 2
        gaps = (Fraction(args.d1p), Fraction(args.d2p))
    params = nonrect.BuildParams(
        m=args.m or 1, P_star=args.p_star or 1, N=args.blocks or 1, ell=args.ell or 1
    )
    lines = [f"construction {args.construction} depth {depth} mode {args.mode}"]
    if args.construction == "nonrect":
        build = nonrect.build_delone_spec(schedule, depth, args.mode, params, gaps=gaps)
        spec, steps = build.spec, build.steps
    elif args.construction == "ue":
        build = ue.build_ue_spec(schedule, depth, args.mode, params)
        spec, steps = build.spec, build.steps
        lines.append(f"limit point density {build.limit_density()}")
        for t in range(2, spec.num_levels + 1):
            lines.append(f"offset level 1->{t}: {_show(build.offset_between(1, t))}")
    else:
        seq = None
        e = args.extreme_points
        if args.simplex_spec:
            loaded = choquet.read_simplex_spec(args.simplex_spec)
            if isinstance(loaded, choquet.ChoquetSeq):
                seq = loaded
                depth = seq.depth
                e = seq.k[0] - 1
            else:
                e = loaded
        cb = choquet.build_choquet_spec(
            e, depth, args.mode, rule=args.stripe_rule,
            ratio_cap=args.ratio_cap, seq=seq,
        )
        spec, steps = cb.spec, []
        rep = choquet.validate_choquet_seq(cb.seq)
        lines.append(f"extreme points {args.extreme_points}; scales {list(cb.seq.p)}; "
                     f"stripe counts {list(cb.seq.r)}")
        lines.append(
            f"separating row {cb.witness.i0}; spread bounds {cb.witness.dbar} > {cb.witness.dbar_prime}"
        )
        for row in rep.rows:
            lines.append(f"seqcheck {row.name}: {'pass' if row.ok else 'FAIL'} {row.witness}")
        if not rep.ok:
            _emit(args, spec, lines)
            return 1
    for rec in steps:
        lines.append(
            f"step {rec.step}: L={rec.L} densities {_show(rec.d1)},{_show(rec.d2)} "
            f"targets {_show(rec.d1p)},{_show(rec.d2p)} "
            f"m={rec.m} P*={rec.P_star} N={rec.N} ell={rec.ell} "
            f"(stored {rec.levels_added}, symbolic remainder {rec.truncated_iterations})"
        )
        if rec.bundle is not None:
            for name, formula in rec.bundle.anchors():
                lines.append(f"  constant {name}: {formula}")
        if rec.bracket_ok is not None:
            lines.append(
                f"  corner densities {_show(rec.out_d1)} / {_show(rec.out_d2)} "
                f"{'bracket the targets exactly' if rec.bracket_ok else 'FAIL the target bracket'}"
            )
    rep = hierarchy.validate_scheme(spec)
    for row in rep.rows:
        lines.append(f"check {row.name}: {'pass' if row.ok else 'FAIL'} {row.witness}")
    _emit(args, spec, lines)
    if not rep.ok or any(r.bracket_ok is False for r in steps):
        return 1
    return 0


def _emit(args, spec, lines) -> None:
    hierarchy.write_spec(args.out, spec)
    ledger_path = args.ledger or (os.path.splitext(args.out)[0] + ".ledger.txt")
    with open(ledger_path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    print(f"wrote {args.out} and {ledger_path}")


def _load_target(args) -> patch.Patch:
    if args.patch:
        return patch.read_patch(args.patch)
    spec = hierarchy.read_spec(args.spec)
    return hierarchy.materialize(spec, args.level, args.id, cap=args.cell_cap)


def cmd_export(args) -> int:
    p = _load_target(args)
    if args.closed:
        p = p.closed()
    if args.format == "pbm":
        with open(args.out, "w") as fh:
            fh.write(patch.dumps_pbm(p))
    elif args.format == "points":
        patch.write_points(args.out, p.points())
    else:
        patch.write_patch(args.out, p)
    print(f"wrote {args.out}")
    return 0


def cmd_stats(args) -> int:
    spec = hierarchy.read_spec(args.spec)
    print("level\tside\tpatches\tid\tpoints\tdensity")
    levels = [args.level] if args.level else range(1, spec.num_levels + 1)
    for t in levels:
        pops = spec.popcounts(t)
        for pid in range(1, spec.k(t) + 1):
            d = spec.density(t, pid)
            print(f"{t}\t{spec.side(t)}\t{spec.k(t)}\t{pid}\t{pops[pid - 1]}\t{d}")
    if args.delone_params:
        for pid, bp in enumerate(spec.base, start=1):
            dp = maps.delone_params_of(bp)
            print(f"# base patch {pid}: separation {dp.separation}, covering {dp.covering}")
    return 0


def cmd_count(args) -> int:
    spec = hierarchy.read_spec(args.spec)
    needle = patch.read_patch(args.needle)
    mode = BLOCK_ALIGNED if args.mode == "block_aligned" else SLIDING
    cnt = hierarchy.count_occurrences(spec, needle, args.level, args.id, mode, cap=args.cell_cap)
    print(cnt)
    return 0


def cmd_freq(args) -> int:
    spec = hierarchy.read_spec(args.spec)
    needle = patch.read_patch(args.needle)
    rep = ue.frequency_convergence_report(spec, needle, args.level_from, args.level_to, cap=args.cell_cap)
    print("level\tpatch_id\tneedle_id\tdensity_num\tdensity_den\tbracket_lo\tbracket_hi")
    for row in rep.rows:
        nid = rep.needle_id if rep.needle_id is not None else "-"
        print(
            f"{row.level}\t{row.pid}\t{nid}\t{row.density.numerator}\t{row.density.denominator}"
            f"\t{row.bracket_lo}\t{row.bracket_hi}"
        )
    return 0


def cmd_repetitivity(args) -> int:
    p = _load_target(args)
    r = hierarchy.estimate_repetitivity(p, args.r)
    if r is None:
        print("window too small")
        return 1
    print(r)
    return 0


def cmd_constants(args) -> int:
    rows = []
    if args.eps is not None and args.P is not None:
        lam, m0, n0 = nonrect.regularity_constants(args.L, args.eps, args.P)
        rows += [
            ("no-stretch slack lam = eps^2/(108 P L^2)", lam),
            ("scale floor M0 = ceil(108 P^2 L^2 (L+4)/eps^2)", m0),
            ("aspect floor N0 = 2 + ceil(216 L^2 P (3L^2+P+1)/eps^2)", n0),
        ]
    if args.eps is not None:
        rows.append(
            ("probe resolution P0 = ceil(max(4 (6L)^4, 3 (6L)^2/eps))",
             nonrect.containment_scale(args.L, args.eps))
        )
    if args.d is not None and args.dp is not None:
        lam, ms, ns = nonrect.density_gap_constants(args.L, args.d, args.dp)
        rows += [
            ("gap slack lam = (d-d')^3/(1e10 L^7)", lam),
            ("scale floor M* = ceil(1e15 L^11/(d-d')^4)", ms),
            ("aspect floor N* = ceil(1e10 L^10/(d-d')^4)", ns),
            ("iteration floor ell = ceil(L^2/lam)", nonrect.ell_min(args.L, lam)),
        ]
    if not rows:
        print("constants: give --eps [--P] and/or --d --dp", file=sys.stderr)
        return 2
    for name, val in rows:
        print(f"{name}\t{val}")
    return 0


def cmd_bilip(args) -> int:
    grid = rectlab.GridSpec(args.grid[0], args.grid[1], args.grid[2])
    f = maps.read_map(args.map, window=grid.window)
    viol = rectlab.check_no_stretch(f, grid, args.lam)
    print(f"violations\t{len(viol)}")
    for v in viol[:20]:
        print(f"violation\tk={v.k}\ti={v.i}\tj={v.j}\tat={v.point}\tkind={v.kind}")
    if args.tau is not None:
        res = rectlab.find_regular_square(f, grid, args.tau)
        print(f"regular_square\t{res.k_star if res.k_star is not None else 'none'}")
        if res.k_star is not None:
            dev = rectlab.coarse_derivative_deviation(f, grid, res.k_star)
            print(f"deviation_sq\t{dev.max_sq}\t~{dev.max:.6f}")
    if args.expand is not None:
        d, dp = (Fraction(t) for t in args.expand.split(","))
        try:
            res = rectlab.expanding_pair_search(f, grid, args.lam, d, dp)
            print(f"expanding_witness\t{res.witness}\t{res.note}")
        except rectlab.SquareDensityError as exc:
            print(f"expanding_witness\tnone\t{exc}")
    return 0


def cmd_verify(args) -> int:
    kw = {}
    if args.trials is not None:
        kw["trials"] = args.trials
    if args.seed is not None:
        kw["seed"] = args.seed
    if args.depth is not None:
        kw["depth"] = args.depth
    try:
        rows = suites.run_suite(args.suite, **kw)
    except KeyError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    print("suite\tcheck\tstatus\tdetail")
    ok = True
    for r in rows:
        ok &= r.ok
        print(f"{r.suite}\t{r.check}\t{'pass' if r.ok else 'FAIL'}\t{r.detail}")
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="delone", description=__doc__)
    sub = ap.add_subparsers(dest="cmd", required=True)

    g = sub.add_parser("gen", help="generate a hierarchy descriptor and its constants ledger")
    g.add_argument("--construction", choices=["nonrect", "ue", "choquet"], required=True)
    g.add_argument("--depth", type=int, required=True)
    g.add_argument("--mode", choices=["toy", "rigorous"], default="toy")
    g.add_argument("--m", type=int)
    g.add_argument("--blocks", type=int, help="alternation count N")
    g.add_argument("--ell", type=int)
    g.add_argument("--p-star", dest="p_star", type=int)
    g.add_argument("--d1p", help="lower density target (rational)")
    g.add_argument("--d2p", help="upper density target (rational)")
    g.add_argument("--L-schedule", dest="L_schedule", help="comma list of rationals")
    g.add_argument("--n1-steps", dest="n1_steps", help="comma list of steps run with N=1")
    g.add_argument("--extreme-points", type=int, default=2)
    g.add_argument("--simplex-spec", help="file with extreme_points <e> or matrices <path>")
    g.add_argument("--stripe-rule", choices=["literal", "scaled"], default="literal")
    g.add_argument("--ratio-cap", type=int, default=128)
    g.add_argument("--params", help="key=value parameter file")
    g.add_argument("--out", required=True)
    g.add_argument("--ledger")
    g.set_defaults(fn=cmd_gen)

    e = sub.add_parser("export", help="export a materialized patch")
    e.add_argument("--spec")
    e.add_argument("--level", type=int, default=1)
    e.add_argument("--id", type=int, default=1)
    e.add_argument("--patch", help="export a .dpf file directly")
    e.add_argument("--closed", action="store_true", help="add the closure row/column")
    e.add_argument("--format", choices=["pbm", "points", "dpf"], required=True)
    e.add_argument("--cell-cap", type=int, default=None)
    e.add_argument("--out", required=True)
    e.set_defaults(fn=cmd_export)

    s = sub.add_parser("stats", help="per-level point counts and densities")
    s.add_argument("--spec", required=True)
    s.add_argument("--level", type=int)
    s.add_argument("--delone-params", action="store_true")
    s.set_defaults(fn=cmd_stats)

    c = sub.add_parser("count", help="exact occurrence count of a needle patch")
    c.add_argument("--spec", required=True)
    c.add_argument("--needle", required=True)
    c.add_argument("--level", type=int, required=True)
    c.add_argument("--id", type=int, required=True)
    c.add_argument("--mode", choices=["block_aligned", "sliding"], default="sliding")
    c.add_argument("--cell-cap", type=int, default=None)
    c.set_defaults(fn=cmd_count)

    fq = sub.add_parser("freq", help="sliding densities with convergence brackets (TSV)")
    fq.add_argument("--spec", required=True)
    fq.add_argument("--needle", required=True)
    fq.add_argument("--level-from", type=int, required=True)
    fq.add_argument("--level-to", type=int, required=True)
    fq.add_argument("--cell-cap", type=int, default=None)
    fq.set_defaults(fn=cmd_freq)

    rp = sub.add_parser("repetitivity", help="smallest window holding every small pattern")
    rp.add_argument("--spec")
    rp.add_argument("--level", type=int, default=1)
    rp.add_argument("--id", type=int, default=1)
    rp.add_argument("--patch")
    rp.add_argument("--r", type=int, required=True)
    rp.add_argument("--cell-cap", type=int, default=None)
    rp.set_defaults(fn=cmd_repetitivity)

    ct = sub.add_parser("constants", help="exact constant calculators with formula anchors")
    ct.add_argument("--L", type=_frac, required=True)
    ct.add_argument("--eps", type=_frac)
    ct.add_argument("--P", type=int)
    ct.add_argument("--d", type=_frac)
    ct.add_argument("--dp", type=_frac)
    ct.set_defaults(fn=cmd_constants)

    b = sub.add_parser("bilip", help="probe-grid analysis of a candidate map")
    b.add_argument("--map", required=True)
    b.add_argument("--grid", nargs=3, type=int, metavar=("M", "N", "P"), required=True)
    b.add_argument("--lambda", dest="lam", type=_frac, required=True)
    b.add_argument("--tau", type=_frac)
    b.add_argument("--expand", help="d,d' densities for the expanding-pair search")
    b.set_defaults(fn=cmd_bilip)

    v = sub.add_parser("verify", help="run a named exact-check suite (TSV)")
    v.add_argument("--suite", required=True)
    v.add_argument("--trials", type=int)
    v.add_argument("--seed", type=int)
    v.add_argument("--depth", type=int)
    v.set_defaults(fn=cmd_verify)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except CapacityError as exc:
        print(f"resource cap: {exc}", file=sys.stderr)
        return 3
    except (ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
