"""Command-line entry point.

Exit status: 0 when every check passes, 1 when a check fails, 2 on bad
input.  ``GUNDYSTEIN_ARITH=float`` switches the default arithmetic;
``--float`` / ``--exact`` override it per call.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import _kernels, arith
from . import john_nirenberg as jn
from . import multipliers as mu
from . import sharpness as sh
from .certify import Certificate
from .decomposition import decompose_positive, decompose_raw, decompose_signed, verify_signed
from .errors import GundySteinError
from .filtration import expectation, l1, regularity_constant
from .generate import PROB_SCHEMES, VALUE_SCHEMES, GeneratorConfig, generate
from .io import dump_instance, load_instance
from .suite import FAMILIES, InstanceResult, SuiteConfig, VerificationReport, run_suite

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


def _exact(args) -> bool:
    if getattr(args, "float", False):
        return False
    if getattr(args, "exact", False):
        return True
    return arith.default_mode() == arith.RATIONAL


def _q(text: str, exact: bool = True):
    return arith.parse_scalar(text, exact)


def _qlist(text: str, exact: bool = True) -> list:
    return [_q(t, exact) for t in text.replace(",", " ").split()]


def _range(text: str) -> tuple[int, int]:
    lo, _, hi = text.partition(":")
    return int(lo), int(hi or lo)


def _emit(report: VerificationReport, path: str | None, quiet: bool = False) -> int:
    text = report.text()
    if path:
        Path(path).write_text(text)
        if not quiet:
            print(report.summary())
    else:
        sys.stdout.write(text)
    return EXIT_OK if report.passed else EXIT_FAIL


def _single(title: str, description: str, cert: Certificate) -> VerificationReport:
    return VerificationReport(title, [InstanceResult(0, 0, description, cert.records)])


def _describe(inst) -> str:
    return f"input={inst.source} sha256={inst.sha256}"


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def cmd_validate(args) -> int:
    exact = _exact(args)
    inst = load_instance(args.input, exact=exact)
    filt = inst.filtration
    alpha, where = regularity_constant(filt)
    print(f"input\t{inst.source}")
    print(f"sha256\t{inst.sha256}")
    print(f"horizon\t{filt.horizon}")
    print(f"atoms\t{' '.join(str(filt.n_atoms(n)) for n in range(1, filt.horizon + 1))}")
    print(f"regularity\t{arith.fmt(alpha)}")
    print(f"mean\t{arith.fmt(expectation(filt, inst.f))}")
    print(f"l1\t{arith.fmt(l1(filt, inst.f))}")
    if not inst.measurable:
        bad = inst.raw.non_measurable_leaves(filt)
        print(f"measurable\tno ({', '.join(bad)})")
    else:
        print("measurable\tyes")
    return EXIT_OK


def cmd_decompose(args) -> int:
    exact = _exact(args)
    inst = load_instance(args.input, exact=exact)
    filt = inst.filtration
    lam, theta = _q(args.lam, exact), _q(args.theta, exact)
    title = f"decompose lambda={arith.fmt(lam)} theta={arith.fmt(theta)}"
    if not inst.measurable:
        raw = decompose_raw(filt, inst.raw, lam, theta)
        cert = raw.certificate
        title += " raw"
    elif args.signed:
        res = decompose_signed(filt, inst.f, lam, theta, certify=False)
        cert = verify_signed(res, Certificate(exact=exact))
        title += " signed"
    else:
        cert = decompose_positive(filt, inst.f, lam, theta).certificate
    return _emit(_single(title, _describe(inst), cert), args.report)


def cmd_sharpness(args) -> int:
    inst = sh.TwoPointInstance(_q(args.p), _q(args.lam), _q(args.beta))
    a_min, (a, b) = sh.minimize_phi_analytic(inst)
    b_min, (ba, bb) = sh.minimize_phi_bruteforce(inst, args.grid)
    g, h, k = sh.witness(inst)
    f = arith.fmt
    print(f"instance\tp={f(inst.p)} lambda={f(inst.lam)} beta={f(inst.beta)} grid={args.grid}")
    print(f"analytic\t{f(a_min)}\tat ({f(a)}, {f(b)})")
    print(f"bruteforce\t{f(b_min)}\tat ({f(ba)}, {f(bb)})")
    print(f"witness\tg=({f(g[0])}, {f(g[1])}) h=({f(h[0])}, {f(h[1])}) k=({f(k[0])}, {f(k[1])})")
    verdict = sh.dichotomy_check(inst, g, h, k)
    print(f"dichotomy\talternative ({verdict.alternative}) variation={f(verdict.variation)} "
          f"bound={f(verdict.bound)} attained={verdict.attained}")
    cert = Certificate()
    cert.ge("sharp.bruteforce_ge_analytic", "global joint sharpness", b_min, a_min)
    gap = sh.phi_lipschitz(inst) * inst.box / args.grid
    cert.le("sharp.gap", "global joint sharpness", b_min - a_min, gap)
    cert.flag("sharp.dichotomy", "global joint sharpness", verdict.holds)
    for r in cert.records:
        print(r.line())
    return EXIT_OK if cert.passed else EXIT_FAIL


def cmd_multiplier(args) -> int:
    exact = _exact(args)
    inst = load_instance(args.input, exact=exact)
    filt = inst.filtration
    a = _qlist(args.a, exact)
    N = args.N if args.N is not None else filt.horizon
    T = mu.transform(filt, inst.f, a, N)
    print("T_N\t" + " ".join(f"{lid}={arith.fmt(v)}" for lid, v in zip(filt.leaf_ids, T)))
    cert = Certificate(exact=exact)
    lhs, rhs, _ = mu.ito_isometry_check(filt, inst.f, a, N)
    cert.eq("ito", mu.REF_ITO, lhs, rhs)
    if args.certify or args.diagnose_proof:
        rep = mu.certify_weak_type(filt, inst.f, a, N, diagnose=args.diagnose_proof, cert=cert)
        print(f"weak_ratio\t{arith.fmt(rep.sup_ratio)}")
    return _emit(_single(f"multiplier N={N}", _describe(inst), cert), args.report)


def cmd_jn(args) -> int:
    exact = _exact(args)
    inst = load_instance(args.input, exact=exact)
    filt, f = inst.filtration, inst.f
    root = filt.locate(args.root)
    cert = Certificate(exact=exact)
    prof = jn.bmo_norm(filt, f)
    print(f"bmo\t{arith.fmt(prof.norm)}")
    if (f >= 0).all():
        jn.overshoot_check(filt, f, cert)
    u_values = _qlist(args.u, exact) if args.u else ()
    if prof.norm > 0:
        s = _q(args.s, exact) if args.s else None
        sel = jn.cz_generations(filt, f, root, s=s, cert=cert)
        print(f"generations\t{len(sel.generations)}")
        beta = _q(args.beta, exact) if args.beta else None
        jn.certify_exp_integrability(filt, f, root, beta=beta, cert=cert)
    jn.certify_jn_tail(filt, f, root, u_values=u_values, cert=cert)
    if u_values:
        ok, _ = jn.u_grid_optimal(exact=exact)
        cert.flag("jn.u_grid", jn.REF_PARAM, ok, "log(u)/u maximal at u = e")
    return _emit(_single(f"jn root={args.root}", _describe(inst), cert), args.report)


def cmd_suite(args) -> int:
    thetas = tuple(_qlist(args.thetas))
    gen = GeneratorConfig(depth=_range(args.depth), branching=_range(args.branching),
                          max_leaves=args.max_leaves)
    cfg = SuiteConfig(family=args.family, count=args.count, seed=args.seed, thetas=thetas,
                      generator=gen, diagnose=not args.no_diagnose,
                      corrupt=frozenset(args.corrupt or ()), workers=args.workers)
    report = run_suite(cfg)
    return _emit(report, args.report)


def cmd_generate(args) -> int:
    cfg = GeneratorConfig(seed=args.seed, depth=_range(args.depth), branching=_range(args.branching),
                          probs=args.probs, min_ratio=args.min_ratio, values=args.values,
                          max_leaves=args.max_leaves)
    filt, f = generate(cfg)
    text = dump_instance(filt, f, comment=f"generated seed={args.seed}")
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------

def _arith_flags(p):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--float", action="store_true", help="float64 arithmetic")
    g.add_argument("--exact", action="store_true", help="exact rational arithmetic")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gundystein", description=__doc__.splitlines()[0])
    parser.add_argument("--backend", action="store_true", help="print the kernel backend and exit")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("validate", help="load and validate an instance file")
    p.add_argument("--input", required=True)
    _arith_flags(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("decompose", help="decompose and certify all bounds")
    p.add_argument("--input", required=True)
    p.add_argument("--lambda", dest="lam", required=True)
    p.add_argument("--theta", default="0")
    p.add_argument("--signed", action="store_true")
    p.add_argument("--report")
    _arith_flags(p)
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("sharpness", help="two-point objective: analytic vs brute force")
    p.add_argument("--p", required=True)
    p.add_argument("--lambda", dest="lam", required=True)
    p.add_argument("--beta", required=True)
    p.add_argument("--grid", type=int, default=100)
    p.set_defaults(func=cmd_sharpness)

    p = sub.add_parser("multiplier", help="truncated multiplier transform")
    p.add_argument("--input", required=True)
    p.add_argument("--a", required=True, help="comma-separated coefficients a_1..a_N")
    p.add_argument("--N", type=int)
    p.add_argument("--certify", action="store_true")
    p.add_argument("--diagnose-proof", action="store_true")
    p.add_argument("--report")
    _arith_flags(p)
    p.set_defaults(func=cmd_multiplier)

    p = sub.add_parser("jn", help="BMO norm and John-Nirenberg certificates")
    p.add_argument("--input", required=True)
    p.add_argument("--root", required=True)
    p.add_argument("--s")
    p.add_argument("--beta")
    p.add_argument("--u", help="comma-separated u values > 1")
    p.add_argument("--report")
    _arith_flags(p)
    p.set_defaults(func=cmd_jn)

    p = sub.add_parser("suite", help="seeded verification batch")
    p.add_argument("--family", choices=FAMILIES, default="decomposition")
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--thetas", default="0,1/2,1")
    p.add_argument("--depth", default="1:6")
    p.add_argument("--branching", default="1:4")
    p.add_argument("--max-leaves", type=int, default=48)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--no-diagnose", action="store_true")
    p.add_argument("--corrupt", action="append", help="invert this check id (harness self-test)")
    p.add_argument("--report")
    p.set_defaults(func=cmd_suite)

    p = sub.add_parser("generate", help="write a seeded random instance")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--depth", default="1:6")
    p.add_argument("--branching", default="1:4")
    p.add_argument("--probs", choices=PROB_SCHEMES, default="random")
    p.add_argument("--min-ratio")
    p.add_argument("--values", choices=VALUE_SCHEMES, default="nonneg")
    p.add_argument("--max-leaves", type=int, default=48)
    p.add_argument("--output")
    p.set_defaults(func=cmd_generate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.backend:
        print(_kernels.backend_name())
        return EXIT_OK
    if args.command is None:
        parser.print_help()
        return EXIT_INPUT
    try:
        return args.func(args)
    except (GundySteinError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
