"""Command line front end: ``wmod <subcommand> [options]``.

Exit status is 0 when every invoked check passes, 1 when a check fails and 2
on parse or parameter-guard errors (a JSON error object goes to stdout).
"""
from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor

from . import __version__
from .algebra import Scalar
from .classify import ModuleLabel, NotDegreeOne, RealFormId, classify, finite_dimensional_p
from .modules import Kind, ModuleParams, build_realization, change_of_basis_defect, finite
from .report import SCHEMA, Report, dump_json, jsonable, rows_to_csv
from .unitarity import (MonteCarlo, SubgroupId, adjoint_defect, all_subgroups, boundedness_profile,
                        global_vs_infinitesimal, perturbation_bound, profile_report, sphere_report,
                        workers)
from .verify import (branch_levi, central_character, degree_report, gk_growth_degree, verify_relations,
                     weight_decomposition)

SUITE_N = (1, 2, 3)
SUITE_A = ("-0.5", "-2", "1.7", "-1+0.5i")


# ---------------------------------------------------------------------------
# helpers

def _scalar(text: str) -> Scalar:
    try:
        return Scalar.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _module(args, kind=None):
    kind = Kind.parse(kind or args.kind)
    a = None if kind is Kind.BASE_P else args.a
    exact = {"auto": None, "exact": True, "float": False}[args.mode]
    return build_realization(kind, ModuleParams(args.n, a, args.cutoff), exact)


def _config(args) -> dict:
    skip = {"func", "output", "format"}
    return {k: (str(v) if isinstance(v, Scalar) else v) for k, v in sorted(vars(args).items()) if k not in skip}


def _reports_payload(args, reports: list[Report]) -> dict:
    ok = all(r.passed for r in reports)
    return {"schema": SCHEMA, "config": _config(args), "status": "pass" if ok else "fail",
            "reports": [r.to_dict() for r in reports]}


def _text(reports: list[Report], names=None) -> str:
    lines = []
    for i, r in enumerate(reports):
        d = "" if r.max_defect is None else f" max_defect={r.max_defect:.3g}"
        head = r.check if names is None else names[i]
        lines.append(f"{head}: {r.status}{d}  [{r.anchor}]")
    return "\n".join(lines) + "\n"


def _fmt(z: complex) -> str:
    return repr(z.real) if z.imag == 0 else str(Scalar.of(z))


def _emit(args, text: str) -> None:
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _finish(args, reports: list[Report], csv_rows=None, names=None) -> int:
    if args.format == "json":
        _emit(args, dump_json(_reports_payload(args, reports)))
    elif args.format == "csv":
        if csv_rows is None:
            raise ValueError("this subcommand has no CSV output")
        _emit(args, rows_to_csv(*csv_rows))
    else:
        _emit(args, _text(reports, names))
    return 0 if all(r.passed for r in reports) else 1


# ---------------------------------------------------------------------------
# subcommands

def cmd_verify(args) -> int:
    m = _module(args)
    return _finish(args, [verify_relations(m, args.tol), degree_report(m)])


def cmd_weights(args) -> int:
    m = _module(args)
    table = weight_decomposition(m)
    rows = []
    for key, labels in table.spaces.items():
        w = table.weights[key]
        rows.append([" ".join(str(k) for k in labels), " ".join(_fmt(m.field.to_complex(x)) for x in w)])
    rep = degree_report(m)
    rep.details = {"weights": [{"labels": r[0], "weight": r[1]} for r in rows]}
    return _finish(args, [rep], (["labels", "weight"], rows))


def cmd_branch(args) -> int:
    m = _module(args)
    res = branch_levi(m, args.levi)
    rows = []
    for s in res.summands:
        rows.append([" ".join(map(str, s.seed)), s.dimension, str(central_character(m, args.levi, s.seed))])
    rep = Report("branching", m.summary() | {"levi": args.levi}, res.status, None, res.evidence,
                 "we have the following branching",
                 {"summands": [{"seed": r[0], "dimension": r[1], "central_character": r[2]} for r in rows]})
    return _finish(args, [rep], (["seed", "dimension", "central_character"], rows))


def cmd_unitarity(args) -> int:
    m = _module(args)
    return _finish(args, [adjoint_defect(m, args.tol if args.tol is not None else 1e-10)])


def cmd_jm(args) -> int:
    rep = perturbation_bound(args.n, args.a, tuple(args.levels), tuple(args.ladder), args.real_form)
    rows = [[r["level"], r["operator"], r["K"], r["estimate"]] for r in rep.details["rows"]]
    return _finish(args, [rep], (["level", "operator", "K", "estimate"], rows))


def cmd_bound(args) -> int:
    rep = profile_report(args.n, args.a, args.K)
    prof = boundedness_profile(args.n, args.a, args.K)
    return _finish(args, [rep], (["L", "value", "running_sup"], list(prof.rows())))


def cmd_global(args) -> int:
    subs = [SubgroupId.parse(args.sub)] if args.sub else all_subgroups(args.n)
    tol = args.tol if args.tol is not None else 1e-6
    reports = []
    for sub in subs:
        r = global_vs_infinitesimal(args.n, sub, args.t, args.cutoff, args.buffer)
        r.status = "pass" if r.max_defect <= tol else "fail"
        r.params["tol"] = tol
        reports.append(r)
    return _finish(args, reports)


def cmd_sphere(args) -> int:
    return _finish(args, [sphere_report(args.n, args.max_degree, MonteCarlo(args.seed, args.samples))])


def _form(args) -> RealFormId:
    if args.form == "su":
        return RealFormId("su", p=args.p, q=args.q)
    if args.form == "sppq":
        return RealFormId("sppq", p=args.p, q=args.q)
    return RealFormId(args.form, n=args.n)


def cmd_classify(args) -> int:
    form = _form(args)
    res = classify(form, ModuleLabel.parse(args.label, form.rank))
    if args.format == "text":
        u = "n/a" if res.unitary is None else str(res.unitary).lower()
        _emit(args, f"{res.form} {res.label}: integrable={str(res.integrable).lower()} unitary={u} "
                    f"family={res.matched_family}  [{res.justification}]\n")
    else:
        _emit(args, dump_json({"schema": SCHEMA, "config": _config(args), "result": res.to_dict()}))
    return 0


def suite_jobs():
    """(name, thunk) pairs for the fixed suite grid."""
    jobs = []
    for n in SUITE_N:
        jobs.append((f"relations base n={n}", lambda n=n: _suite_relations("base", n, None)))
        for a in SUITE_A:
            for kind in ("bbl", "deformed"):
                jobs.append((f"relations {kind} n={n} a={a}", lambda n=n, a=a, kind=kind:
                             _suite_relations(kind, n, a)))
            jobs.append((f"change-of-basis n={n} a={a}", lambda n=n, a=a: _suite_cob(n, a)))
            jobs.append((f"unitarity n={n} a={a}", lambda n=n, a=a: _suite_unitary(n, a)))
        jobs.append((f"gk n={n}", lambda n=n: _suite_gk(n)))
        jobs.append((f"sphere n={n}", lambda n=n: sphere_report(n, 3, MonteCarlo(0, 10**5))))
    for n in (1, 2):
        for mm in range(4):
            jobs.append((f"finite n={n} m={mm}", lambda n=n, mm=mm: _suite_finite(n, mm)))
    jobs.append(("bound n=2 a=-0.5", lambda: profile_report(2, Scalar.parse("-0.5"), 10_000)))
    for sub in all_subgroups(2):
        jobs.append((f"global {sub}", lambda sub=sub: _suite_global(sub)))
    return jobs


def _suite_relations(kind, n, a):
    m = build_realization(kind, ModuleParams(n, None if a is None else Scalar.parse(a), 10))
    r, d = verify_relations(m), degree_report(m)
    return Report("relations+degree", m.summary(), "pass" if r.passed and d.passed else "fail",
                  r.max_defect, r.evidence + d.evidence, r.anchor)


def _suite_cob(n, a):
    d = change_of_basis_defect(ModuleParams(n, Scalar.parse(a), 10))
    return Report("change-of-basis", {"n": n, "a": a, "N": 10}, "pass" if d <= 1e-10 else "fail", d, [],
                  "Set x(k) := mu(|k|) e(k)")


def _suite_unitary(n, a):
    s = Scalar.parse(a)
    rep = adjoint_defect(build_realization("deformed", ModuleParams(n, s, 8)))
    expect = "Unitary" if s.is_real and s.re < 0 else "NotUnitary"
    rep.params["expected"] = expect
    rep.status = "pass" if rep.status == expect else "fail"
    return rep


def _suite_gk(n):
    d = gk_growth_degree(build_realization("bbl", ModuleParams(n, Scalar.parse("-0.5"), 40), exact=False))
    return Report("gk-growth", {"n": n, "N": 40}, "pass" if d == n else "fail", None, [{"degree": d}],
                  "The Gelfand-Kirillov dimension of V equals the rank of g")


def _suite_finite(n, mm):
    m = finite(n, mm)
    lab = ModuleLabel.parse("N(" + ",".join([str(mm)] + ["0"] * (n - 1)) + ")")
    d = gk_growth_degree(m)
    ok = finite_dimensional_p(lab) and d == 0 and verify_relations(m).passed
    return Report("finite", m.summary(), "pass" if ok else "fail", None,
                  [{"dimension": len(m.basis), "gk": d}], "restricting the index set of k")


def _suite_global(sub):
    r = global_vs_infinitesimal(2, sub, 0.1, 10, 4)
    r.status = "pass" if r.max_defect <= 1e-6 else "fail"
    return r


def cmd_suite(args) -> int:
    jobs = suite_jobs()
    with ThreadPoolExecutor(max_workers=workers()) as pool:
        futures = [pool.submit(fn) for _, fn in jobs]
        reports = [f.result() for f in futures]
    for (name, _), r in zip(jobs, reports):
        r.params["job"] = name
    return _finish(args, reports, names=[name for name, _ in jobs])


# ---------------------------------------------------------------------------
# parser

def _common() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output", "-o", help="write the report here instead of stdout")
    common.add_argument("--format", choices=("json", "csv", "text"), default="text")
    return common


def _module_opts() -> argparse.ArgumentParser:
    module = argparse.ArgumentParser(add_help=False)
    module.add_argument("--n", type=int, default=2, help="rank n of sl(n+1)")
    module.add_argument("--a", type=_scalar, default=Scalar.parse("-1.5"),
                        help="parameter a, e.g. -1.5, 1/3, -1+0.5i")
    module.add_argument("--cutoff", "-N", type=int, default=12, help="window |k| <= N")
    module.add_argument("--kind", default="bbl", choices=("base", "bbl", "deformed", "finite"))
    module.add_argument("--mode", default="auto", choices=("auto", "exact", "float"))
    return module


def build_parser() -> argparse.ArgumentParser:
    # parents share action objects, so every subcommand gets fresh copies
    def parents(with_module=True):
        return [_common(), _module_opts()] if with_module else [_common()]

    parser = argparse.ArgumentParser(prog="wmod", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", parents=parents(), help="relation sweep and degree")
    p.add_argument("--tol", type=float, default=1e-9)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("weights", parents=parents(), help="weight table")
    p.set_defaults(func=cmd_weights)

    p = sub.add_parser("branch", parents=parents(), help="Levi branching")
    p.add_argument("--levi", type=int, default=0)
    p.set_defaults(func=cmd_branch)

    p = sub.add_parser("unitarity", parents=parents(), help="adjoint defects")
    p.add_argument("--tol", type=float, default=None, help="default 1e-10")
    p.set_defaults(func=cmd_unitarity, kind="deformed")

    p = sub.add_parser("jm", parents=parents(), help="norm tower perturbation bounds")
    p.add_argument("--levels", type=int, nargs="+", default=[0, 1, 2])
    p.add_argument("--ladder", type=int, nargs="+", default=[50, 100, 200])
    p.add_argument("--real-form", action="store_true", help="use iH, X, Y instead of H, E, F")
    p.set_defaults(func=cmd_jm)

    p = sub.add_parser("bound", parents=parents(), help="boundedness profile")
    p.add_argument("--K", type=int, default=10_000)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("global-check", parents=parents(), help="group vs Lie algebra action")
    p.add_argument("--sub", help="iH<j>, X<j> or Y<j>; default all")
    p.add_argument("--t", type=float, default=0.1)
    p.add_argument("--buffer", type=int, default=4)
    p.add_argument("--tol", type=float, default=None, help="default 1e-6")
    p.set_defaults(func=cmd_global, cutoff=10)

    p = sub.add_parser("sphere", parents=parents(), help="sphere monomial integrals")
    p.add_argument("--max-degree", type=int, default=3)
    p.add_argument("--samples", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_sphere)

    p = sub.add_parser("classify", parents=parents(False), help="integrability/unitarity verdict")
    p.add_argument("--form", required=True, choices=("su", "sl", "sp", "sppq"))
    p.add_argument("--p", type=int, default=1)
    p.add_argument("--q", type=int, default=1)
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--label", required=True)
    p.set_defaults(func=cmd_classify, format="json")

    p = sub.add_parser("suite", parents=parents(False), help="run the fixed acceptance grid")
    p.set_defaults(func=cmd_suite)
    return parser


def _glue_values(argv: list[str]) -> list[str]:
    # argparse only accepts "-1.5"-style values; "-1/3" and "-1+0.5i" look like options
    out, i = [], 0
    while i < len(argv):
        tok = argv[i]
        if tok in ("--a", "--t") and i + 1 < len(argv) and argv[i + 1].startswith("-"):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def main(argv=None) -> int:
    parser = build_parser()
    argv = _glue_values(list(sys.argv[1:] if argv is None else argv))
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except (ValueError, NotDegreeOne, ZeroDivisionError) as exc:
        err = {"schema": SCHEMA, "error": {"type": type(exc).__name__, "message": str(exc)},
               "config": jsonable(_config(args))}
        sys.stdout.write(json.dumps(err, sort_keys=True) + "\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
