"""``algact`` command line.

Exit codes: 0 every check passed, 2 some check failed, 3 inconclusive rows
present, 1 usage or parse error.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import re
import sys
from fractions import Fraction

from . import __version__
from .annihilator import (annihilator_test, claims_report, ideal_membership,
                          strong_witness_check, xf_membership_test)
from .groups import GroupError, SubgroupSet, get_group, subgroup_generate
from .groupring import VectorOverG, parse_matrix_expr, parse_ring_expr
from .haarlattice import (ClosureViolation, ConvergenceError, FiniteMeasure, audit_closure,
                          coset_support_check, join_by_iteration, largest_member_subgroup,
                          parse_predicate, random_measure, random_member, support_recovery)
from .measures import MeasureError, NoWitnessError, nonextendability_witness, parse_measure
from .reports import envelope, write_report
from .spectral import approximate_inverse, l2_formal_inverse
from .streams import substream
from .experiments import fourier_check

EXIT_PASS, EXIT_USAGE, EXIT_FAIL, EXIT_INCONCLUSIVE = 0, 1, 2, 3
STATUS_EXIT = {"pass": EXIT_PASS, "fail": EXIT_FAIL, "inconclusive": EXIT_INCONCLUSIVE}
THREADS_ENV = "ALGACT_THREADS"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# -- argument helpers ----------------------------------------------------------


def parse_num_list(text: str, cast=None) -> list:
    """Plain list ``"0.2,0.1"`` or progression ``"1,2,4,...,256"``.

    With three or more terms before ``...`` the last three decide between an
    arithmetic and a geometric progression; with two terms a geometric reading
    is used when it lands exactly on the end value, arithmetic otherwise.
    """
    cast = cast or (lambda v: v)
    parts = [p.strip() for p in text.split(",")]
    if not all(parts):
        raise UsageError(f"bad number list {text!r}: empty item")
    try:
        if "..." not in parts:
            return [cast(_num(p)) for p in parts]
        i = parts.index("...")
        head = [_num(p) for p in parts[:i]]
        tail = [_num(p) for p in parts[i + 1:]]
    except ValueError as exc:
        raise UsageError(f"bad number list {text!r}: {exc}") from None
    if len(head) < 2 or len(tail) != 1:
        raise UsageError(f"cannot expand {text!r}: need two terms before '...' and one after")
    end = tail[0]
    if len(head) >= 3:
        a, b, c = head[-3:]
        kinds = ["arith"] if c - b == b - a else ["geom"] if a and b * b == a * c else []
    else:
        kinds = ["geom", "arith"]
    for kind in kinds:
        out = list(head)
        x, prev = head[-1], head[-2]
        if kind == "arith":
            step = x - prev
            nxt = lambda v: v + step  # noqa: E731
        else:
            if prev <= 0 or x <= 0 or x == prev:
                continue
            ratio = x / prev
            nxt = lambda v: v * ratio  # noqa: E731
        rising = x > prev
        if x == prev or (end < x if rising else end > x):
            continue
        while (x < end if rising else x > end) and not math.isclose(x, end, rel_tol=1e-12):
            x = nxt(x)
            if isinstance(end, int) and abs(x - round(x)) < 1e-9:
                x = int(round(x))
            out.append(x)
        if math.isclose(out[-1], end, rel_tol=1e-12, abs_tol=1e-15):
            out[-1] = end
            return [cast(v) for v in out]
    raise UsageError(f"cannot expand {text!r} into a progression ending at {end}")


def _num(s: str):
    return int(s) if re.fullmatch(r"-?\d+", s.strip()) else float(s)


def _read_items(text: str) -> list:
    """``@file`` (one item per line, '#' comments) or ';'-separated items."""
    if text.startswith("@"):
        with open(text[1:]) as fh:
            lines = [ln.split("#", 1)[0].strip() for ln in fh]
        return [ln for ln in lines if ln]
    return [p.strip() for p in text.split(";") if p.strip()]


def _read_expr(text: str) -> str:
    if text.startswith("@"):
        with open(text[1:]) as fh:
            return fh.read().strip()
    return text


def _vector(text: str, spec, exact: bool = True) -> VectorOverG:
    parts = _split_top(text)
    return VectorOverG([parse_ring_expr(p, spec, exact=exact) for p in parts])


def _split_top(text: str) -> list:
    out, depth, cur = [], 0, []
    for ch in text:
        if ch in "([":
            depth += 1
        elif ch in ")]":
            depth -= 1
        if ch == "," and depth == 0:
            out.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    out.append("".join(cur))
    return [p.strip() for p in out]


def _subgroup(spec, text: str) -> SubgroupSet:
    """Generators by name (comma separated) or ``file.json`` holding a list of
    element names; the subgroup they generate."""
    t = text.strip().lstrip("@")
    if t.endswith(".json"):
        with open(t) as fh:
            names = json.load(fh)
    else:
        names = [p for p in _split_top(t) if p]
    names = [n[1:-1] if n.startswith("[") and n.endswith("]") else n for n in names]
    return subgroup_generate(spec, [spec.element_by_name(n) for n in names])


def _xi_arg(args, spec):
    if getattr(args, "inverse_of", None):
        F = l2_formal_inverse(parse_matrix_expr(_read_expr(args.inverse_of), spec),
                              window=args.xi_window)
        return F.xi, F.truncation_l2
    if not args.xi:
        raise UsageError("one of --xi or --inverse-of is required")
    return parse_matrix_expr(_read_expr(args.xi), spec, exact=True), 0.0


# -- subcommands ---------------------------------------------------------------


def cmd_approx_inverse(args):
    spec = get_group(args.group)
    f = parse_matrix_expr(_read_expr(args.f), spec)
    table = []
    for k in parse_num_list(args.k):
        a = approximate_inverse(f, k, args.grid, args.window)
        row = a.report()
        row["pass"] = a.op_norm_bound <= 1 + args.op_tol and (
            args.target is None or a.residual_left < args.target)
        table.append(row)
    status = "pass" if all(r["pass"] for r in table) else "fail"
    return {"f": f, "group": args.group, "table": table,
            "provenance": "pointwise SVD cutoff of the Fourier symbol; residuals by Parseval",
            "status": status}


def cmd_fourier_check(args):
    spec = get_group(args.group)
    xi, _ = _xi_arg(args, spec)
    nu = parse_measure(args.nu)
    table = []
    for i, a in enumerate(_read_items(args.alpha)):
        alpha = _vector(a, spec)
        r = fourier_check(xi, alpha, nu, args.samples, args.seed, stream=i, threads=args.threads,
                          tail_tol=args.tail_tol)
        table.append({"alpha": a, **r})
    body = {"xi": xi, "nu": nu.describe(), "table": table,
            "provenance": "Monte Carlo pushforward vs. product of nu_hat over r(xi) alpha",
            "status": "pass" if all(r["pass"] for r in table) else "fail"}
    if len(table) == 1:
        body.update({k: v for k, v in table[0].items() if k != "alpha"})
    return body


def cmd_witness(args):
    spec = get_group(args.group)
    f = parse_matrix_expr(_read_expr(args.f), spec)
    labels = _read_items(args.alphas)
    alphas = [_vector(a, spec) for a in labels]
    eta = parse_measure(args.eta) if args.eta else None
    rep = claims_report(f, alphas, parse_num_list(args.k), parse_num_list(args.delta), eta,
                        args.grid, args.tol, labels)
    d = rep.to_dict()
    return {**d, "table": d["rows"],
            "provenance": "exp(-delta ||beta||^2) prod eta_hat(beta), beta = r(xi_k) alpha"}


def cmd_strong_witness(args):
    spec = get_group(args.group)
    xi, tl2 = _xi_arg(args, spec)
    labels = _read_items(args.alphas)
    ns = [int(n) for n in parse_num_list(args.n, int)]
    rows = strong_witness_check(xi, ns, [_vector(a, spec) for a in labels], args.tol, tl2)
    table = [{"alpha": lab, **c} for lab, r in zip(labels, rows) for c in r["column"]]
    for lab, r in zip(labels, rows):
        r["alpha"] = lab
    return {"xi": xi, "alphas": rows, "table": table,
            "provenance": "product of Dirichlet kernels over r(xi^*) alpha", "status": "pass"}


def cmd_annihilator(args):
    spec = get_group(args.group)
    xi, tl2 = _xi_arg(args, spec)
    test = xf_membership_test if args.xf else annihilator_test
    table = []
    for a in _read_items(args.alphas):
        r = test(xi, _vector(a, spec), args.tol, tl2)
        table.append({"alpha": a, "is_member": r["is_member"],
                      "max_frac_deviation": r["max_frac_deviation"], "budget": r["budget"],
                      "image": r["image"]})
    status = "pass"
    if args.expect is not None:
        want = args.expect == "member"
        status = "pass" if all(r["is_member"] == want for r in table) else "fail"
    return {"xi": xi, "mode": "xf" if args.xf else "annihilator", "table": table,
            "provenance": "integrality of r(xi) alpha" if args.xf else "integrality of r(xi^*) alpha",
            "status": status}


def cmd_ideal_test(args):
    spec = get_group(args.group)
    f = parse_matrix_expr(_read_expr(args.f), spec)
    ks = parse_num_list(args.k) if args.k else None
    table = []
    for a in _read_items(args.alphas):
        r = ideal_membership(f, _vector(a, spec), ks, args.grid, args.tol, args.threshold)
        r.pop("limit", None)
        table.append({"alpha": a, **r})
    status = "inconclusive" if any(r["classification"] == "inconclusive" for r in table) else "pass"
    return {"f": f, "table": table,
            "provenance": "norm trajectory of r(xi_k) alpha; integrality of the stable limit",
            "status": status}


def cmd_haar_join(args):
    spec = get_group(args.group)
    Y1, Y2 = _subgroup(spec, args.y1), _subgroup(spec, args.y2)
    r = join_by_iteration(Y1, Y2, args.tol, args.maxiter)
    ok = r["tv_to_oracle"] < args.tv_tol
    return {"group": args.group, "Y1": Y1, "Y2": Y2, "join": r["oracle"],
            "iterations": r["iterations"], "last_step": r["last_step"],
            "tv_to_oracle": r["tv_to_oracle"], "limit": r["measure"].as_array(),
            "provenance": "convolution powers vs. Haar measure of the brute-force join",
            "status": "pass" if ok else "fail"}


def _measure_arg(spec, text: str) -> FiniteMeasure:
    """``name:prob,name:prob,...``; missing elements get 0."""
    p = [Fraction(0)] * spec.order
    for atom in _split_top(text):
        name, _, w = atom.rpartition(":")
        p[spec.element_by_name(name.strip())] += Fraction(w.strip())
    if sum(p) != 1:
        raise UsageError("measure weights must sum to 1")
    return FiniteMeasure(spec, p)


def cmd_support_recovery(args):
    spec = get_group(args.group)
    if args.measure:
        mus = [_measure_arg(spec, args.measure)]
    else:
        rng = substream(args.seed, 2)
        mus = [random_measure(spec, rng) for _ in range(args.random)]
    table = []
    for mu in mus:
        r = support_recovery(mu, args.tol, exact=args.exact)
        table.append({"subgroup": r["subgroup"], "oracle": r["oracle"], "iterations": r["iterations"],
                      "tv_to_oracle": r["tv_to_oracle"],
                      "pass": r["subgroup"] == r["oracle"] and r["tv_to_oracle"] < args.tv_tol})
    return {"group": args.group, "table": table,
            "provenance": "powers of mu^* * mu vs. subgroup generated by its support",
            "status": "pass" if all(r["pass"] for r in table) else "fail"}


def cmd_maxmin(args):
    spec = get_group(args.group)
    P = parse_predicate(args.predicate, spec, lambda t: _subgroup(spec, t))
    res = largest_member_subgroup(spec, P)
    Y = res["Y"]
    rng = substream(args.seed, 3)
    probes = []
    for _ in range(args.probes):
        c = coset_support_check(random_member(spec, P, rng), Y)
        probes.append(c)
    audit = audit_closure(spec, P, substream(args.seed, 4), args.probes)
    ok = all(c["ok"] for c in probes) and res["upper_bound"] and audit["ok"]
    return {"group": args.group, "predicate": P.name, "Y": Y, "members": res["members"],
            "subgroups_checked": res["subgroups_checked"], "probes": len(probes),
            "max_leak": max((c["max_leak"] for c in probes), default=0),
            "inner_support_ok": all(c["inner_support_ok"] for c in probes),
            "closure_audit": audit,
            "provenance": "subgroup enumeration filtered by the predicate; exact coset check",
            "status": "pass" if ok else "fail"}


def cmd_nonextend(args):
    nu = parse_measure(args.nu)
    w = nonextendability_witness(nu, args.p, args.N)
    return {"nu": nu.describe(), **w, "table": w["rows"], "provenance": "bisection on |1 - nu_hat|; block sizes ceil(2^-n t^-p)",
            "status": "pass"}


# -- parser --------------------------------------------------------------------


def _default_threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", default="-", help="output path; '-' for stdout")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--threads", type=int, default=_default_threads(),
                        help=f"worker threads (default from ${THREADS_ENV}); never changes results")
    common.add_argument("--group", default="Z^1")

    p = _Parser(prog="algact", description="group-ring operators, Theta pushforwards and Haar lattices")
    p.add_argument("--version", action="version", version=f"algact {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, fn, help_):
        sp = sub.add_parser(name, parents=[common], help=help_)
        sp.set_defaults(func=fn)
        return sp

    def xi_opts(sp):
        sp.add_argument("--xi", help="matrix expression or @file")
        sp.add_argument("--inverse-of", help="use the truncated l2 inverse of this matrix expression")
        sp.add_argument("--xi-window", type=int, default=None)

    sp = add("approx-inverse", cmd_approx_inverse, "cutoff approximate inverses xi_k")
    sp.add_argument("--f", required=True)
    sp.add_argument("--k", default="1,2,...,256")
    sp.add_argument("--grid", type=int, default=None)
    sp.add_argument("--window", type=int, default=None)
    sp.add_argument("--target", type=float, default=None, help="required bound on residual_left")
    sp.add_argument("--op-tol", type=float, default=1e-6)

    sp = add("fourier-check", cmd_fourier_check, "empirical vs analytic Fourier coefficients")
    xi_opts(sp)
    sp.add_argument("--nu", required=True)
    sp.add_argument("--alpha", required=True, help="vector expression, ';'-list or @file")
    sp.add_argument("--samples", type=int, default=100_000)
    sp.add_argument("--tail-tol", type=float, default=1e-12)

    sp = add("witness", cmd_witness, "witness-measure Fourier table")
    sp.add_argument("--f", required=True)
    sp.add_argument("--alphas", required=True)
    sp.add_argument("--k", default="2,4,...,256")
    sp.add_argument("--delta", default="0.2,0.1,0.05")
    sp.add_argument("--eta", default=None)
    sp.add_argument("--grid", type=int, default=None)
    sp.add_argument("--tol", type=float, default=1e-6)

    sp = add("strong-witness", cmd_strong_witness, "Dirichlet-kernel witness columns")
    xi_opts(sp)
    sp.add_argument("--alphas", required=True)
    sp.add_argument("--n", default="0,1,2,4,8,...,64")
    sp.add_argument("--tol", type=float, default=1e-6)

    sp = add("annihilator", cmd_annihilator, "annihilator membership of dual vectors")
    xi_opts(sp)
    sp.add_argument("--alphas", required=True)
    sp.add_argument("--xf", action="store_true", help="test membership in X_f dual (uses r(xi) alpha)")
    sp.add_argument("--expect", choices=("member", "nonmember"), default=None)
    sp.add_argument("--tol", type=float, default=1e-6)

    sp = add("ideal-test", cmd_ideal_test, "classify alpha against the ideal r(f)Z(G)")
    sp.add_argument("--f", required=True)
    sp.add_argument("--alphas", required=True)
    sp.add_argument("--k", default=None)
    sp.add_argument("--grid", type=int, default=None)
    sp.add_argument("--tol", type=float, default=1e-6)
    sp.add_argument("--threshold", type=float, default=1e3)

    sp = add("haar-join", cmd_haar_join, "join of two subgroups by convolution powers")
    sp.add_argument("--y1", required=True)
    sp.add_argument("--y2", required=True)
    sp.add_argument("--tol", type=float, default=1e-12)
    sp.add_argument("--tv-tol", type=float, default=1e-9)
    sp.add_argument("--maxiter", type=int, default=500)

    sp = add("support-recovery", cmd_support_recovery, "subgroup carried by powers of mu^* * mu")
    sp.add_argument("--measure", default=None, help="name:prob,... (exact weights)")
    sp.add_argument("--random", type=int, default=200)
    sp.add_argument("--exact", action="store_true")
    sp.add_argument("--tol", type=float, default=1e-12)
    sp.add_argument("--tv-tol", type=float, default=1e-9)

    sp = add("maxmin", cmd_maxmin, "largest subgroup whose Haar measure satisfies a predicate")
    sp.add_argument("--predicate", required=True)
    sp.add_argument("--probes", type=int, default=100)

    sp = add("nonextend", cmd_nonextend, "non-extendability witness table")
    sp.add_argument("--nu", required=True)
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--N", type=int, default=10)
    return p


_CONFIG_SKIP = {"func", "out", "format", "threads", "command"}


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads < 1:
        parser.error("--threads must be >= 1")
    try:
        body = args.func(args)
    except (UsageError, GroupError, MeasureError, ValueError, KeyError, OSError,
            ConvergenceError, ClosureViolation) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        kind = "" if isinstance(exc, NoWitnessError) else "error: "
        print(f"algact {args.command}: {kind}{msg}", file=sys.stderr)
        return EXIT_USAGE
    config = {k: v for k, v in sorted(vars(args).items()) if k not in _CONFIG_SKIP}
    report = envelope(args.command, config, args.seed, body)
    write_report(report, args.out, args.format)
    return STATUS_EXIT.get(body.get("status", "pass"), EXIT_FAIL)


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
