"""Command-line front end: ``hql analyze | classify | svd-verify | tree | besov | sweep``.

Exit codes: 0 success, 1 a check failed or the groups are not
quasi-isometric, 2 spec validation failure, 3 numerical guard tripped,
4 parse or usage error, 5 inconclusive classification.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from fractions import Fraction
from typing import Sequence

from . import __version__
from .errors import ConditioningError, InputError, SpecParseError
from .lie import (
    HeintzeSpec,
    almost_isometry_predicate,
    is_carnot_type,
    subgroup_chain,
    validate_spec,
)
from .specio import load_spec, rational_str, spec_to_dict
from .young import PKExponent, make_phi_pk

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_INVALID = 2
EXIT_GUARD = 3
EXIT_PARSE = 4
EXIT_INCONCLUSIVE = 5


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_PARSE, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# serialization helpers
# ---------------------------------------------------------------------------


def _jsonify(obj):
    if isinstance(obj, Fraction):
        return rational_str(obj)
    if isinstance(obj, PKExponent):
        return {"p": _jsonify(obj.p), "kappa": _jsonify(obj.kappa)}
    if isinstance(obj, dict):
        return {str(k): _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonify(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


def dumps_json(obj) -> str:
    return json.dumps(_jsonify(obj), indent=2) + "\n"


def _csv(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(x) for x in row])
    return buf.getvalue()


def _cell(x):
    if isinstance(x, Fraction):
        return rational_str(x)
    if isinstance(x, float):
        return repr(x)
    if x is None:
        return ""
    return x


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
        sys.stdout.flush()


def _parse_levels(text: str) -> list[int]:
    try:
        if ".." in text:
            a, b = text.split("..")
            return list(range(int(a), int(b) + 1))
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"bad range {text!r}; use 'a..b' or 'a,b,c'") from None


def _parse_floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"bad number list {text!r}") from None


def _parse_fractions(text: str) -> list[Fraction]:
    try:
        return [Fraction(x.strip()) for x in text.split(",") if x.strip()]
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"bad rational list {text!r}") from None


def _parse_exponent(text: str) -> PKExponent:
    try:
        return PKExponent.parse(text)
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"bad exponent {text!r}; use 'p,kappa'") from None


def _seed(args) -> int:
    env = os.environ.get("HQL_SEED")
    if env is not None and env.strip():
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"HQL_SEED must be an integer, got {env!r}") from None
    return args.seed


def _apply_threads(n: int | None) -> None:
    if not n:
        return
    if n < 1:
        raise UsageError("--threads must be positive")
    from ._accel import USE_NUMBA

    if USE_NUMBA:
        import numba

        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))


# ---------------------------------------------------------------------------
# analyze
# ---------------------------------------------------------------------------


def analysis_report(spec: HeintzeSpec, exponents: Sequence[PKExponent] | None = None) -> dict:
    """Everything the invariants module can say about one spec, JSON-ready."""
    from .invariants import (
        conformal_dim_attainment,
        critical_exponents,
        default_exponents,
        global_critical,
        local_infinity_exponent_bounds,
        pointed_sphere_report,
        spectrum_at_infinity,
        unresolved_regions,
    )

    report = validate_spec(spec)
    out: dict = {"spec": spec_to_dict(spec), "validation": report.to_dict()}
    if not report.ok:
        out["valid"] = False
        return out
    out["valid"] = True
    chain = subgroup_chain(spec, validate=False)
    bounds = local_infinity_exponent_bounds(spec, chain)
    exps = list(exponents) if exponents else default_exponents(spec)
    out.update(
        {
            "carnot": is_carnot_type(spec),
            "chain": [{"name": name, "dimension": sub.dim} for name, sub in chain.ordered()],
            "h1": {"dimension": chain.h[1].dim, "basis": chain.h[1].to_lists()},
            "critical_exponents": list(critical_exponents(spec)),
            "global_critical": global_critical(spec),
            "local_infinity_bounds": {"lower": bounds.lower, "upper": bounds.upper},
            "spectrum": [
                {"exponent": e, **spectrum_at_infinity(spec, e, chain).to_dict()} for e in exps
            ],
            "unresolved_regions": unresolved_regions(spec),
            "pointed_sphere": pointed_sphere_report(spec, chain).to_dict(),
            "conformal_dimension": conformal_dim_attainment(spec),
            "almost_isometry": almost_isometry_predicate(spec, chain),
        }
    )
    return out


def cmd_analyze(args) -> int:
    spec = load_spec(args.spec)
    exps = [_parse_exponent(e) for e in args.exponent] if args.exponent else None
    rep = analysis_report(spec, exps)
    _emit(dumps_json(rep), args.out)
    if not rep["valid"]:
        sys.stderr.write(validate_spec(spec).summary() + "\n")
        return EXIT_INVALID
    return EXIT_OK


# ---------------------------------------------------------------------------
# classify
# ---------------------------------------------------------------------------


def classify_specs(a: HeintzeSpec, b: HeintzeSpec):
    from .invariants import abelian_qi_classify, carnot_vs_noncarnot

    for s in (a, b):
        validate_spec(s).raise_if_invalid()
    if a.algebra.is_abelian and b.algebra.is_abelian:
        return "abelian", abelian_qi_classify(a, b)
    return "carnot_vs_noncarnot", carnot_vs_noncarnot(a, b)


_VERDICT_EXIT = {"Isomorphic": EXIT_OK, "Distinguished": EXIT_FAIL, "NotQuasiIsometric": EXIT_FAIL,
                 "Inconclusive": EXIT_INCONCLUSIVE}


def cmd_classify(args) -> int:
    a, b = load_spec(args.spec_a), load_spec(args.spec_b)
    for s in (a, b):
        rep = validate_spec(s)
        if not rep.ok:
            _emit(dumps_json({"spec": spec_to_dict(s), "validation": rep.to_dict(), "valid": False}), args.out)
            sys.stderr.write(rep.summary() + "\n")
            return EXIT_INVALID
    method, verdict = classify_specs(a, b)
    _emit(dumps_json({"a": a.name or args.spec_a, "b": b.name or args.spec_b, "method": method,
                      **verdict.to_dict()}), args.out)
    return _VERDICT_EXIT[verdict.outcome]


# ---------------------------------------------------------------------------
# svd-verify
# ---------------------------------------------------------------------------

PAIRING_TOL = 1e-9
MIDDLE_TOL = 1e-10


def svd_rows(ms: Sequence[int], ts: Sequence[float], precision: str = "auto"):
    """CSV rows and the pairing pass/fail count for the singular-value suite."""
    from .asymptotics import (
        asymptotic_ratio,
        charpoly_coeff_ratio,
        eigenvector_alignment,
        singular_data,
    )

    rows, checks, failures = [], 0, []
    for m in ms:
        for t in ts:
            lam = singular_data(m, t, precision).eigenvalues
            for i in range(1, m + 1):
                pair = abs(lam[i - 1] * lam[m - i] - 1.0)
                checks += 1
                if pair > PAIRING_TOL or (2 * i == m + 1 and abs(lam[i - 1] - 1.0) > MIDDLE_TOL):
                    failures.append((m, i, t))
                rows.append((m, "eig", i, t, asymptotic_ratio(m, i, t, precision),
                             eigenvector_alignment(m, i, t, precision), float(pair)))
            for k in range(1, m + 1):
                rows.append((m, "charpoly", k, t, charpoly_coeff_ratio(m, k, t), None, None))
    return rows, checks, failures


def cmd_svd_verify(args) -> int:
    ms = _parse_levels(args.m)
    ts = _parse_floats(args.t)
    if not ms or min(ms) < 1 or not ts or min(ts) <= 0:
        raise UsageError("need m >= 1 and t > 0")
    rows, checks, failures = svd_rows(ms, ts, args.precision)
    _emit(_csv(("m", "kind", "index", "t", "ratio", "alignment", "pairing_error"), rows), args.out)
    sys.stderr.write(f"pairing checks: {checks - len(failures)}/{checks} pass\n")
    for m, i, t in failures:
        sys.stderr.write(f"  FAIL m={m} i={i} t={t!r}\n")
    return EXIT_OK if not failures else EXIT_FAIL


# ---------------------------------------------------------------------------
# tree
# ---------------------------------------------------------------------------


def tree_report(branching: int, depth: int, exponents: Sequence[PKExponent], trials: int, seed: int) -> dict:
    from .tree import TreeComplex, level_concentrated_ratio, run_tree_suite, strichartz_constant

    tree = TreeComplex(branching, depth)
    out = {"branching": branching, "depth": depth, "trials": trials, "seed": seed, "phis": []}
    ok = True
    for e in exponents:
        phi = make_phi_pk(e)
        reps = run_tree_suite(phi, tree, trials, seed)
        K = float(phi.growth_exponent)
        entry = {
            "phi": e,
            "growth_exponent": K,
            "contraction_factor": tree.v ** (-1.0 / K),
            "strichartz_constant": strichartz_constant(phi, tree),
            "level_concentrated_ratio": level_concentrated_ratio(phi, tree) if depth >= 2 else None,
            "inequalities": [r.to_dict() for r in reps.values()],
        }
        entry["passed"] = all(r.passed for r in reps.values())
        ok &= entry["passed"]
        out["phis"].append(entry)
    out["passed"] = ok
    return out


def cmd_tree(args) -> int:
    exps = [_parse_exponent(e) for e in (args.phi or ["2,0"])]
    rep = tree_report(args.branching, args.depth, exps, args.trials, _seed(args))
    _emit(dumps_json(rep), args.out)
    return EXIT_OK if rep["passed"] else EXIT_FAIL


# ---------------------------------------------------------------------------
# besov
# ---------------------------------------------------------------------------


def _read_points_csv(path: str):
    import numpy as np

    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise SpecParseError(f"{path}: {exc.strerror}") from None
    if not rows or not {"x", "y"} <= set(rows[0]):
        raise SpecParseError(f"{path}: need columns x, y (optional weight, value)")
    try:
        pts = np.array([[float(r["x"]), float(r["y"])] for r in rows])
        w = np.array([float(r.get("weight") or 1.0) for r in rows])
        vals = np.array([float(r["value"]) for r in rows]) if "value" in rows[0] else None
    except (TypeError, ValueError) as exc:
        raise SpecParseError(f"{path}: {exc}") from None
    return pts, w, vals


def cmd_besov(args) -> int:
    from . import besov

    e = _parse_exponent(args.phi)
    phi = make_phi_pk(e)
    seed = _seed(args)
    if args.model == "custom-csv":
        if not args.points:
            raise UsageError("--model custom-csv needs --points FILE")
        pts, w, vals = _read_points_csv(args.points)
        grid = besov.make_custom_grid(pts, w, args.metric, args.Q)
        if args.function == "csv":
            if vals is None:
                raise UsageError("--function csv needs a 'value' column in --points")
            u = vals
        else:
            u = besov.coordinate_function(int(args.function[-1]))
        est = besov.besov_seminorm(phi, grid, u, pair_budget=args.pair_budget, seed=seed)
        _emit(_csv(("level", "estimate", "verdict"), [(0, est, "single-grid")]), args.out)
        return EXIT_OK
    if args.function == "csv":
        raise UsageError("--function csv is only available with --model custom-csv")
    if args.model == "x3":
        factory = besov.make_x3_grid
    elif args.model.startswith("diag:"):
        try:
            mu = float(Fraction(args.model.split(":", 1)[1]))
        except (ValueError, ZeroDivisionError):
            raise UsageError(f"bad model {args.model!r}") from None
        factory = lambda lv: besov.make_diag_grid(lv, mu)  # noqa: E731
    else:
        raise UsageError(f"unknown model {args.model!r}")
    k = int(args.function[-1])
    levels = _parse_levels(args.levels)
    res = besov.refinement_sweep(
        phi, factory, besov.coordinate_function(k), levels, args.stabilize_tol, args.diverge_ratio,
        pair_budget=args.pair_budget, seed=seed, exact_affine=((1, 0) if k == 1 else (0, 1)) if args.exact else None,
    )
    _emit(_csv(("level", "estimate", "verdict"), res.to_rows()), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------


def spectrum_sweep(spec: HeintzeSpec, p_lo: Fraction, p_hi: Fraction, steps: int,
                   kappas: Sequence[Fraction], include_critical: bool = True):
    from .invariants import critical_exponents, spectrum_at_infinity

    validate_spec(spec).raise_if_invalid()
    chain = subgroup_chain(spec, validate=False)
    ps = {p_lo + (p_hi - p_lo) * Fraction(k, steps) for k in range(steps + 1)} if steps else {p_lo}
    if include_critical:
        ps |= {p for p in critical_exponents(spec) if p_lo <= p <= p_hi}
    rows = []
    for p in sorted(ps):
        for kappa in kappas:
            r = spectrum_at_infinity(spec, PKExponent(p, kappa), chain)
            rows.append((p, kappa, r.label(), r.dimension, r.extrapolated))
    return rows


def cmd_sweep(args) -> int:
    spec = load_spec(args.spec)
    rep = validate_spec(spec)
    if not rep.ok:
        sys.stderr.write(rep.summary() + "\n")
        return EXIT_INVALID
    lo, hi = _parse_fractions(args.p)
    if hi < lo or args.steps < 0:
        raise UsageError("need p range lo,hi with lo <= hi and steps >= 0")
    rows = spectrum_sweep(spec, lo, hi, args.steps, _parse_fractions(args.kappa), not args.no_critical)
    _emit(_csv(("p", "kappa", "verdict", "dimension", "extrapolated"), rows), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--out", "-o", help="write output to this file instead of stdout")
    common.add_argument("--seed", type=int, default=0, help="RNG seed (the HQL_SEED env var overrides it)")
    common.add_argument("--threads", type=int, default=None, help="cap the number of worker threads")

    p = _Parser(prog="hql", description="Quasi-isometry invariants of purely real Heintze groups.")
    p.add_argument("--version", action="version", version=f"hql {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    a = sub.add_parser("analyze", parents=[common], help="JSON report of all invariants of one spec")
    a.add_argument("spec", help="TOML spec file")
    a.add_argument("--exponent", "-e", action="append",
                   help="(p,kappa) for the spectrum table, e.g. '2,1' or '3/2,0'; repeatable")
    a.set_defaults(func=cmd_analyze)

    c = sub.add_parser("classify", parents=[common], help="compare two specs (JSON verdict)")
    c.add_argument("spec_a")
    c.add_argument("spec_b")
    c.set_defaults(func=cmd_classify)

    s = sub.add_parser("svd-verify", parents=[common], help="singular values of Exp(tJ): CSV plus summary")
    s.add_argument("--m", default="1..5", help="block sizes, 'a..b' or list (default 1..5)")
    s.add_argument("--t", default="1,10,100", help="comma-separated times (default 1,10,100)")
    s.add_argument("--precision", choices=("auto", "double", "extended"), default="auto",
                   help="'double' raises instead of switching to extended precision")
    s.set_defaults(func=cmd_svd_verify)

    t = sub.add_parser("tree", parents=[common], help="cochain inequalities on a rooted tree (JSON)")
    t.add_argument("--branching", type=int, default=2)
    t.add_argument("--depth", type=int, default=12)
    t.add_argument("--phi", action="append", help="'p,kappa' of phi_{p,kappa}; repeatable (default 2,0)")
    t.add_argument("--trials", type=int, default=100)
    t.set_defaults(func=cmd_tree)

    b = sub.add_parser("besov", parents=[common], help="Besov seminorm refinement sweep (CSV)")
    b.add_argument("--model", default="x3", help="x3, diag:MU or custom-csv")
    b.add_argument("--function", default="pi1", choices=("pi1", "pi2", "csv"))
    b.add_argument("--phi", default="2,2", help="'p,kappa' (default 2,2)")
    b.add_argument("--levels", default="4..8", help="refinement levels, 'a..b' (default 4..8)")
    b.add_argument("--pair-budget", type=int, default=20_000_000)
    b.add_argument("--stabilize-tol", type=float, default=None)
    b.add_argument("--diverge-ratio", type=float, default=None)
    b.add_argument("--exact", action="store_true", help="exact displacement-class sum (pi1/pi2 only)")
    b.add_argument("--points", help="custom-csv: CSV with columns x, y and optional weight, value")
    b.add_argument("--metric", default="euclidean", help="custom-csv metric: euclidean, x3 or diag:MU")
    b.add_argument("--Q", type=float, default=2.0, help="custom-csv homogeneous dimension")
    b.set_defaults(func=cmd_besov)

    w = sub.add_parser("sweep", parents=[common], help="spectrum verdicts over a (p,kappa) grid (CSV)")
    w.add_argument("spec")
    w.add_argument("--p", default="1,4", help="p range 'lo,hi' (rationals allowed)")
    w.add_argument("--steps", type=int, default=12)
    w.add_argument("--kappa", default="0,1,2,3", help="comma-separated kappa values")
    w.add_argument("--no-critical", action="store_true", help="do not add the critical p_i to the grid")
    w.set_defaults(func=cmd_sweep)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    from .errors import PreconditionError, SpecValidationError
    from . import besov

    args = build_parser().parse_args(argv)
    if getattr(args, "stabilize_tol", 0) is None:
        args.stabilize_tol = besov.STABILIZE_TOL
    if getattr(args, "diverge_ratio", 0) is None:
        args.diverge_ratio = besov.DIVERGE_RATIO
    try:
        _apply_threads(args.threads)
        return args.func(args)
    except SpecParseError as exc:
        sys.stderr.write(f"parse error: {exc}\n")
        return EXIT_PARSE
    except UsageError as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        return EXIT_PARSE
    except SpecValidationError as exc:
        sys.stderr.write(f"invalid spec: {exc}\n")
        return EXIT_INVALID
    except ConditioningError as exc:
        sys.stderr.write(f"numerical guard: {exc}\n")
        return EXIT_GUARD
    except (InputError, PreconditionError) as exc:
        sys.stderr.write(f"input error: {exc}\n")
        return EXIT_PARSE
