"""``friedrichs`` command line.

Exit codes: 0 success, 1 a verification failed, 2 usage or input error.
"""

from __future__ import annotations

import argparse
from itertools import product as cartesian
import json
from pathlib import Path
import sys
from typing import Optional, Sequence

import numpy as np

from ..algebra import anticommute, attached_product, commute, commutator, multiply, normal_ordered_product, product
from ..bosonization import (
    DropCounter,
    Lattice,
    PairOperatorSpec,
    approximate_ccr_rhs,
    expand_pair_operator,
    pair_commutator,
)
from ..configs import configs_for_arities
from ..diagram import export_dot
from ..dynamics import RadiusError, compare_hartree, hartree_radius, random_hermitian, random_potential
from ..expression import Expression, canonicalize
from ..oracle import DimensionBudgetError, OperatorPolynomial, assert_equivalent
from ..serialize import SchemaError, from_json, to_json
from ..symbols import KernelSymbol, Statistics
from .language import Environment, Group, Ladder, ParseError, Ref, Sum, parse, parse_expression

OK, FAILED, USAGE = 0, 1, 2


class UsageError(Exception):
    pass


# --- shared plumbing ---------------------------------------------------------


def _lattice_file(path: Optional[str]) -> tuple[Optional[Lattice], dict[str, str]]:
    if not path:
        return None, {}
    doc = json.loads(Path(path).read_text())
    if not isinstance(doc, dict) or "points" not in doc:
        raise UsageError(f"{path}: lattice file needs a 'points' list")
    lat = Lattice(tuple(doc["points"]))
    modes = {}
    for label, p in doc.get("bind", {}).items():
        p = tuple(p) if isinstance(p, list) else p
        if p not in lat:
            raise UsageError(f"{path}: label {label!r} bound to {p!r}, which is not a lattice point")
        modes[label] = _point_name(p)
    return lat, modes


def _point_name(p) -> str:
    return "(" + ",".join(map(str, p)) + ")" if isinstance(p, tuple) else str(p)


def _environment(args) -> Environment:
    session = None
    base = Path(".")
    if getattr(args, "session", None):
        path = Path(args.session)
        session = parse(path.read_text())
        base = path.parent
    stats = args.stats or (session.statistics.value if session else None)
    if stats is None:
        raise UsageError("give --stats bose|fermi or a --session file")
    if session is not None and Statistics.parse(stats) is not session.statistics:
        raise UsageError("--stats disagrees with the session's stats declaration")
    _, modes = _lattice_file(getattr(args, "lattice", None))
    return Environment(stats, session, modes, base)


def _operand(env: Environment, text: str) -> Expression:
    if text.startswith("@"):
        e = from_json(Path(text[1:]).read_text())
        if e.statistics is not env.statistics:
            raise UsageError(f"{text[1:]}: statistics {e.statistics.value} differ from {env.statistics.value}")
        return e
    return env.evaluate(text)


def _emit(e: Expression, as_json: bool, out=None):
    out = out or sys.stdout
    if as_json:
        out.write(to_json(e) + "\n")
    else:
        out.write(str(canonicalize(e)) + "\n")


def _add_expression_flags(p: argparse.ArgumentParser):
    p.add_argument("--stats", choices=["bose", "fermi"], help="statistics (or take it from --session)")
    p.add_argument("--session", help="session file with op/let definitions")
    p.add_argument("--lattice", help="lattice JSON binding ladder labels to discrete modes")
    p.add_argument("--json", action="store_true", help="emit canonical expression JSON")


# --- subcommands -----------------------------------------------------------


def cmd_normal_order(args) -> int:
    env = _environment(args)
    _emit(_operand(env, args.expr), args.json)
    return OK


def _single(e: Expression):
    return e.terms[0] if len(e.terms) == 1 else None


def cmd_commute(args) -> int:
    env = _environment(args)
    a, b = _operand(env, args.a), _operand(env, args.b)
    ta, tb = _single(a), _single(b)
    if args.bracket == "auto" and ta is not None and tb is not None:
        result, bracket = commutator(ta, tb, env.statistics)
        name = bracket.value
    elif args.bracket == "acomm":
        result, name = anticommute(a, b), "anticommutator"
    else:
        result, name = commute(a, b), "commutator"
    if args.json:
        sys.stdout.write(json.dumps({"bracket": name, "result": json.loads(to_json(result))}, sort_keys=True) + "\n")
    else:
        sys.stdout.write(f"bracket: {name}\n")
        _emit(result, False)
    return OK


def cmd_product(args) -> int:
    env = _environment(args)
    a, b = _operand(env, args.a), _operand(env, args.b)
    if args.part == "full":
        result = multiply(a, b)
    else:
        ta, tb = _single(a), _single(b)
        if ta is None or tb is None:
            raise UsageError(f"--part {args.part} needs single-monomial operands")
        if args.part == "normal":
            result = canonicalize(Expression(env.statistics, [normal_ordered_product(ta, tb)]))
        elif args.part == "attached":
            result = attached_product(ta, tb, env.statistics)
        else:
            result = product(ta, tb, env.statistics)
    _emit(result, args.json)
    return OK


def cmd_configs(args) -> int:
    if args.mA < 0 or args.nB < 0:
        raise UsageError("--mA and --nB must be nonnegative")
    rows = []
    for i, cfg in enumerate(configs_for_arities(args.mA, args.nB), start=1):
        rows.append({"index": i, "C": cfg.C, "pi": list(cfg.pi), "pi_prime": list(cfg.pi_prime), "sign": cfg.sign})
    if args.json:
        sys.stdout.write(json.dumps(rows, sort_keys=True) + "\n")
        return OK
    sys.stdout.write("index\tC\tpi\tpi_prime\tsign\n")
    for r in rows:
        sign = "+" if r["sign"] > 0 else "-"
        pi = ",".join(map(str, r["pi"]))
        pp = ",".join(map(str, r["pi_prime"]))
        sys.stdout.write(f"{r['index']}\t{r['C']}\t({pi})\t({pp})\t{sign}\n")
    return OK


def cmd_diagram(args) -> int:
    env = _environment(args)
    e = canonicalize(_operand(env, args.expr))
    terms = e.terms
    if args.term is not None:
        if not 1 <= args.term <= len(terms):
            raise UsageError(f"--term must be in 1..{len(terms)}")
        terms = (terms[args.term - 1],)
    if args.format == "json":
        text = to_json(Expression(e.statistics, terms)) + "\n"
    else:
        chunks = []
        for i, t in enumerate(terms, start=1):
            chunks.append(f"// term {i}: {t}\n" + export_dot(t.diagram, name=f"T{i}"))
        text = "\n".join(chunks)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return OK


def _words(env: Environment, e: Sum) -> list[tuple[complex, tuple[Expression, ...]]]:
    """Expand an AST into operator words; brackets become XY ∓ YX."""
    out = []
    for p in e.terms:
        c = complex(p.coeff.coefficient()) if p.coeff is not None else 1
        acc = [(c * p.sign, ())]
        for a in p.atoms:
            if isinstance(a, (Ref, Ladder)):
                opts = [(1, (env._atom(a),))]
            elif isinstance(a, Group):
                opts = _words(env, a.body)
            else:
                left, right = _words(env, a.left), _words(env, a.right)
                s = 1 if a.anti else -1
                opts = [(cl * cr, wl + wr) for cl, wl in left for cr, wr in right]
                opts += [(s * cl * cr, wr + wl) for cl, wl in left for cr, wr in right]
            acc = [(c1 * c2, w1 + w2) for c1, w1 in acc for c2, w2 in opts]
        out += acc
    return out


def _lemma_instances(stats: Statistics, max_arity: int):
    for nA, mA, nB, mB in cartesian(range(max_arity + 1), repeat=4):
        if mA == 0 or nB == 0:
            continue
        A = Expression.of(stats, KernelSymbol("A", nA, mA))
        B = Expression.of(stats, KernelSymbol("B", nB, mB))
        yield f"A[{nA},{mA}] B[{nB},{mB}]", multiply(A, B), OperatorPolynomial.word(A, B)


def cmd_verify(args) -> int:
    if args.expr:
        env = _environment(args)
        kernels = env.kernels() or None
        cases = [(args.expr, env.evaluate(args.expr), OperatorPolynomial(tuple(_words(env, parse_expression(args.expr)))))]
    else:
        if not args.stats:
            raise UsageError("verify without an expression needs --stats")
        kernels = None
        cases = list(_lemma_instances(Statistics.parse(args.stats), args.max_arity))
    failed = 0
    for name, symbolic, words in cases:
        rep = assert_equivalent(symbolic, words, trials=args.trials, tol=args.tol, seed=args.seed, modes=args.modes, kernels=kernels)
        failed += not rep.passed
        row = {"case": name, "passed": rep.passed, "max_deviation": rep.max_deviation, "modes": rep.modes, "cutoff": rep.cutoff}
        if not rep.passed:
            row["counterexample"] = rep.counterexample
        sys.stdout.write(json.dumps(row, sort_keys=True) + "\n")
    sys.stdout.write(json.dumps({"cases": len(cases), "failed": failed}, sort_keys=True) + "\n")
    return FAILED if failed else OK


def _matrix(raw, name: str) -> np.ndarray:
    arr = np.asarray(raw, dtype=float)
    if arr.shape and arr.shape[-1] == 2:
        return arr[..., 0] + 1j * arr[..., 1]
    raise UsageError(f"scenario field {name!r} must be a nested array of [re, im] pairs")


def cmd_hartree(args) -> int:
    doc = json.loads(Path(args.scenario).read_text())
    if not isinstance(doc, dict):
        raise UsageError("scenario must be a JSON object")
    M = int(doc.get("modes", 2))
    rng = np.random.default_rng(int(doc.get("seed", 0)))
    T = _matrix(doc["T"], "T") if "T" in doc else random_hermitian(M, rng)
    V = _matrix(doc["V"], "V") if "V" in doc else random_potential(M, rng, float(doc.get("v_norm", 0.4)))
    A = _matrix(doc["A"], "A") if "A" in doc else random_hermitian(M, rng)
    if "u0" in doc:
        u0 = _matrix(doc["u0"], "u0")
    else:
        u0 = rng.standard_normal(M) + 1j * rng.standard_normal(M)
        u0 /= np.linalg.norm(u0)
    L = hartree_radius(V, u0)
    t = float(doc["t"]) if "t" in doc else float(doc.get("t_over_radius", 0.5)) * L
    Ns = doc.get("N", [2, 3])
    Ns = [Ns] if isinstance(Ns, int) else list(Ns)
    reports = []
    for N in Ns:
        r = compare_hartree(
            A, T, V, u0, t, int(N),
            k_max=int(doc.get("k_max", 6)),
            nodes=int(doc.get("nodes", 8)),
            dt=float(doc.get("dt", 1e-3)),
            rel_tol=float(doc.get("rel_tol", 1e-4)),
        )
        reports.append(r.to_data())
    ok = all(r["passed"] for r in reports)
    sys.stdout.write(json.dumps({"passed": ok, "reports": reports}, sort_keys=True, indent=2) + "\n")
    return OK if ok else FAILED


def _momentum(text: str):
    parts = [int(x) for x in text.split(",")]
    return parts[0] if len(parts) == 1 else tuple(parts)


def _amplitude(path: Optional[str], default: str):
    if not path:
        return default
    doc = json.loads(Path(path).read_text())
    out = {}
    for key, val in doc.items():
        p = _momentum(key)
        out[p] = val if isinstance(val, (int, str)) else str(val)
    return out


def cmd_bosonize(args) -> int:
    if args.lattice:
        lat, _ = _lattice_file(args.lattice)
    else:
        lo, _, hi = args.points.partition(":")
        lat = Lattice.interval(int(lo), int(hi))
    k, kp = _momentum(args.k), _momentum(args.k_prime)
    f, g = _amplitude(args.f, "f"), _amplitude(args.g, "g")
    drops = DropCounter()
    lhs = pair_commutator(k, f, kp, g, lat, drops)
    rhs = approximate_ccr_rhs(k, f, kp, g, lat)
    symbolic_ok = canonicalize(lhs - rhs).is_zero()
    row = {"lattice": len(lat), "k": args.k, "k_prime": args.k_prime, "terms": len(lhs), "dropped": drops.count, "symbolic_equal": symbolic_ok}
    ok = symbolic_ok
    if not args.no_oracle:
        c = expand_pair_operator(PairOperatorSpec(k, f, "c"), lat)
        cd = expand_pair_operator(PairOperatorSpec(kp, g, "c_dagger"), lat)
        words = OperatorPolynomial.word(c, cd) - OperatorPolynomial.word(cd, c)
        rep = assert_equivalent(lhs, words, trials=args.trials, tol=args.tol, seed=args.seed, modes=len(lat), labels=lat.mode_of())
        row.update(oracle_passed=rep.passed, max_deviation=rep.max_deviation)
        ok = ok and rep.passed
    row["passed"] = ok
    sys.stdout.write(json.dumps(row, sort_keys=True) + "\n")
    if args.show:
        _emit(lhs, False)
    return OK if ok else FAILED


# --- entry point -------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="friedrichs", description="Normal ordering and contraction diagrams for CCR/CAR operators.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("normal-order", help="evaluate an expression to canonical normal-ordered form")
    p.add_argument("expr", help="expression, session name, or @file.json")
    _add_expression_flags(p)
    p.set_defaults(func=cmd_normal_order)

    p = sub.add_parser("commute", help="bracket of two expressions")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--bracket", choices=["auto", "comm", "acomm"], default="auto", help="auto picks by parity for monomials")
    _add_expression_flags(p)
    p.set_defaults(func=cmd_commute)

    p = sub.add_parser("product", help="operator product of two expressions")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--part", choices=["full", "normal", "attached", "sum"], default="full")
    _add_expression_flags(p)
    p.set_defaults(func=cmd_product)

    p = sub.add_parser("configs", help="list contraction configurations with signs")
    p.add_argument("--mA", type=int, required=True, help="right legs of the left factor")
    p.add_argument("--nB", type=int, required=True, help="left legs of the right factor")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_configs)

    p = sub.add_parser("diagram", help="export term diagrams as DOT or JSON")
    p.add_argument("expr")
    p.add_argument("--format", choices=["dot", "json"], default="dot")
    p.add_argument("--term", type=int, help="1-based term index")
    p.add_argument("-o", "--output")
    _add_expression_flags(p)
    p.set_defaults(func=cmd_diagram)

    p = sub.add_parser("verify", help="check symbolic results against matrix realizations")
    p.add_argument("expr", nargs="?", help="expression; omitted runs the product-identity suite")
    p.add_argument("--modes", type=int)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--max-arity", type=int, default=2)
    _add_expression_flags(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("hartree", help="compare the Hartree flow with the tree-diagram series")
    p.add_argument("scenario", help="scenario JSON")
    p.set_defaults(func=cmd_hartree)

    p = sub.add_parser("bosonize", help="check the pair-operator commutation relation")
    p.add_argument("--lattice", help="lattice JSON with a 'points' list")
    p.add_argument("--points", default="-2:2", help="1-d lattice lo:hi when no --lattice is given")
    p.add_argument("--k", default="1")
    p.add_argument("--k-prime", default="1")
    p.add_argument("--f", help="amplitude JSON {momentum: value}; default symbolic")
    p.add_argument("--g", help="amplitude JSON {momentum: value}; default symbolic")
    p.add_argument("--trials", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--no-oracle", action="store_true")
    p.add_argument("--show", action="store_true", help="print the commutator")
    p.set_defaults(func=cmd_bosonize)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ParseError, SchemaError, RadiusError, DimensionBudgetError, OSError) as exc:
        sys.stderr.write(f"friedrichs {args.command}: {exc}\n")
        return USAGE
    except (ValueError, KeyError) as exc:
        sys.stderr.write(f"friedrichs {args.command}: {exc}\n")
        return USAGE


if __name__ == "__main__":
    sys.exit(main())
