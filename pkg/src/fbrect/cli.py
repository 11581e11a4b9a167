"""Command-line front end: ``fbrect analyze|synthesize|verify|simulate``.

Exit codes: 0 success, 1 input or usage error, 2 mathematical negative
(not rectifiable, search exhausted, invalid certificate).
"""

from __future__ import annotations

import argparse
import os
import sys
from fractions import Fraction

import numpy as np

from . import fileio
from .errors import (
    ConjugateViolation,
    DegenerateSubstitution,
    ExcludedPoint,
    FbrectError,
    InputError,
    NotInImage,
    NotRectifiable,
    SearchExhausted,
    SingularV,
    UncontrollableModeExcluded,
    UnstableSpectrum,
    ZeroVector,
)
from .exact import format_scalar
from .intersect import intersection_on_curve, intersection_symbolic
from .kernels import controllability
from .rectify import analyze, necessary_left_kernel
from .synth import SynthesisConfig, synthesize
from .verify import (
    assignment_residuals,
    certificate_from,
    certificate_numeric,
    random_switching,
    simulate,
)

NEGATIVE = (NotRectifiable, SearchExhausted, UncontrollableModeExcluded, SingularV, ZeroVector,
            NotInImage, DegenerateSubstitution, UnstableSpectrum)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser():
    parser = _Parser(prog="fbrect", description="Feedback rectification of two-mode switched linear systems.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("analyze", help="kernels, intersection and rectifiability verdicts")
    p.add_argument("system", help="system JSON file or bundled system name")
    p.add_argument("--curve", action="append", default=[], help="constraint like 'mu=lambda' (repeatable)")
    p.add_argument("--out", help="report path (default: stdout)")

    p = sub.add_parser("synthesize", help="construct F1, F2")
    p.add_argument("system", help="system JSON file or bundled system name")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--pairs", help="JSON file with eigenvalue pairs (and optional coefficients)")
    src.add_argument("--grid-rho", default="-1", help="real-part bound for the grid search (default -1)")
    p.add_argument("--curve", help="constraint like 'mu=lambda' or 'mu=-1/lambda'")
    p.add_argument("--c", dest="coeffs", help="coefficient vectors, e.g. '1,1,1' or '1;1;1;1'")
    p.add_argument("--depth", type=int, help="grid depth (default 4n)")
    p.add_argument("--out", help="report path (default: stdout)")

    for name, help_ in (("verify", "residuals, Lyapunov certificate and simulations"),
                        ("simulate", "switched simulations of the closed loop")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("system", help="system JSON file or bundled system name")
        p.add_argument("feedback", help="synthesis report or JSON with F1, F2 (optional V, pairs)")
        p.add_argument("--tau", type=float, default=0.05)
        p.add_argument("--horizon", type=float, default=20.0)
        p.add_argument("--trials", type=int, default=100)
        p.add_argument("--seed", type=int, default=42)
        p.add_argument("--x0", help="initial state, comma separated (default all ones)")
        p.add_argument("--dt", type=float, default=0.1, help="sample spacing")
        p.add_argument("--out", help="directory for summary.json and trajectory CSVs")
    return parser


# ---------------------------------------------------------------------------
# report pieces


def _controllability_block(pair):
    rep = controllability(pair)
    return {
        "controllable": rep.controllable,
        "uncontrollable_modes": [
            {"eigenvalue": fileio.eig_entry(m.eigenvalue), "defect": m.defect, "exact": m.exact}
            for m in rep.uncontrollable_modes
        ],
    }


def _intersection_block(ir):
    ex = ir.excluded
    return {
        "r": ir.r,
        "Q": fileio.mat_strings(ir.Q),
        "P": fileio.mat_strings(ir.P),
        "scales": [str(s) if not isinstance(s, Fraction) else format_scalar(s) for s in ir.scales],
        "coefficients": [{"k": k, "l": l, "C": fileio.mat_strings(C)} for (k, l), C in sorted(ir.coeffs.items())],
        "exclusions": {
            "spectrum1": [fileio.eig_entry(x) for x in ex.spectra[0][0] + ex.spectra[0][1]],
            "spectrum2": [fileio.eig_entry(x) for x in ex.spectra[1][0] + ex.spectra[1][1]],
            "pole_factors": [str(f) for f in ex.pole_factors],
            "rank_drop_factors": [str(f) for f in ex.rank_drop_factors],
        },
    }


def _curve_block(curve, verdict):
    return {
        "substitution": verdict.substitution,
        "rectifiable": verdict.rectifiable,
        "stacked_rank": verdict.stacked_rank,
        "P": fileio.mat_strings(curve.P_curve),
        "coefficients": [{"k": k, "C": fileio.mat_strings(C)} for k, C in sorted(curve.coeffs.items())],
        "excluded_lambda": [str(f) for f in curve.excluded_lambda],
    }


def _load_system(arg):
    if not os.path.exists(arg) and arg in fileio.builtin_names():
        return fileio.builtin_system(arg)
    return fileio.load_system(arg)


def _analysis(pair1, pair2, name, curves):
    ir = intersection_symbolic(pair1, pair2)
    curve_results = [intersection_on_curve(pair1, pair2, c) for c in curves]
    verdict = analyze(pair1, pair2, ir, curve_results)
    nlk = {}
    for pair in (pair1, pair2):
        a = necessary_left_kernel(pair)
        nlk[f"mode{pair.mode_id}"] = None if a is None else fileio.vec_strings(a)
    report = {
        "system": name,
        "n": pair1.n,
        "p": pair1.p,
        "verdicts": {
            "dimension_ok": verdict.dimension_ok,
            "controllability": {f"mode{p.mode_id}": _controllability_block(p) for p in (pair1, pair2)},
            "stacked_rank": verdict.stacked_rank,
            "rectifiable_over_omega": verdict.rectifiable_over_omega,
            "witness_alpha": None if verdict.witness_alpha is None else fileio.vec_strings(verdict.witness_alpha),
            "necessary_left_kernel": nlk,
        },
        "intersection": _intersection_block(ir),
    }
    if curve_results:
        report["curves"] = [_curve_block(c, v) for c, v in zip(curve_results, verdict.curve_verdicts)]
    return report, verdict


def _synthesis_block(result):
    a = result.assignment
    return {
        "status": "ok",
        "pairs": [[format_scalar(x), format_scalar(y)] for x, y in a.pairs.pairs],
        "c": [fileio.vec_strings(c) if c is not None else None for c in a.c],
        "V": fileio.mat_strings(a.V),
        "w1": [fileio.vec_strings(w) for w in a.w1],
        "w2": [fileio.vec_strings(w) for w in a.w2],
        "F1": fileio.mat_strings(result.F1),
        "F2": fileio.mat_strings(result.F2),
    }


def _certificate_block(cert, exact_W: bool):
    W = cert.W
    return {
        "W": fileio.mat_strings(W) if exact_W else [[repr(float(np.real(x))) for x in row] for row in np.asarray(W)],
        "min_eig_W": cert.min_eig_W,
        "derivative_max": list(cert.derivative_max),
        "triangular_residual": cert.triangular_residual,
        "valid": cert.valid,
    }


def _emit(doc, out):
    fileio.write_json(doc, out, sys.stdout)


# ---------------------------------------------------------------------------
# commands


def cmd_analyze(args):
    pair1, pair2, name = _load_system(args.system)
    report, verdict = _analysis(pair1, pair2, name, args.curve)
    _emit(report, args.out)
    ok = verdict.rectifiable_over_omega or any(v.rectifiable for v in verdict.curve_verdicts)
    return 0 if ok else 2


def cmd_synthesize(args):
    pair1, pair2, name = _load_system(args.system)
    pairs = coeffs = None
    options = {}
    if args.pairs:
        pairs, coeffs, options = fileio.parse_selection(fileio.load_json(args.pairs))
    if args.coeffs:
        if pairs is None:
            raise InputError("needs explicit pairs", "--c")
        coeffs = fileio.parse_coefficient_flag(args.coeffs, len(pairs))
    rho = fileio._scalar(args.grid_rho, "--grid-rho")
    config = SynthesisConfig(pairs=pairs, coefficients=coeffs, rho=rho, curve=args.curve,
                             depth=args.depth, scale=options.get("scale", "primitive"),
                             basis=options.get("basis", "P"))
    report, _ = _analysis(pair1, pair2, name, [args.curve] if args.curve else [])
    try:
        result = synthesize(pair1, pair2, config)
    except NEGATIVE as exc:
        block = {"status": "failed", "error": type(exc).__name__, "message": str(exc)}
        witness = getattr(exc, "witness", None)
        if witness is not None:
            block["witness_alpha"] = fileio.vec_strings(witness)
        report["synthesis"] = block
        _emit(report, args.out)
        print(f"fbrect: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    report["synthesis"] = _synthesis_block(result)
    res = assignment_residuals(result.closed_loop, result.assignment.V, result.lambdas, result.mus)
    report["synthesis"]["max_residual"] = "0" if res.exact else repr(res.max_residual)
    try:
        cert = certificate_from(result.assignment.V, result.closed_loop, result.lambdas, result.mus)
        report["certificate"] = _certificate_block(cert, True)
    except UnstableSpectrum as exc:
        report["certificate"] = {"valid": False, "error": str(exc)}
    _emit(report, args.out)
    return 0


def _load_closed_loop(args):
    pair1, pair2, name = _load_system(args.system)
    n, p = pair1.n, pair1.p
    F1, F2, V, pairs = fileio.parse_feedback(fileio.load_json(args.feedback), n, p)
    closed = (pair1.closed_loop(F1), pair2.closed_loop(F2))
    x0 = fileio.parse_vector(args.x0, n) if args.x0 else [Fraction(1)] * n
    if args.tau <= 0:
        raise InputError("must be positive", "--tau")
    if args.trials < 0:
        raise InputError("must be nonnegative", "--trials")
    return pair1, pair2, closed, V, pairs, x0


def _certify(closed, V, pairs):
    """Exact certificate when V and pairs are available, numeric fallback otherwise."""
    summary = {}
    if V is not None and pairs is not None:
        lambdas = [a for a, _ in pairs]
        mus = [b for _, b in pairs]
        res = assignment_residuals(closed, V, lambdas, mus)
        summary["max_residual"] = "0" if res.exact else repr(res.max_residual)
        summary["residual_exact_zero"] = res.exact
        summary["det_V"] = format_scalar(res.det_V)
        try:
            cert = certificate_from(V, closed, lambdas, mus)
        except (UnstableSpectrum, SingularV) as exc:
            summary["certificate"] = {"valid": False, "error": str(exc)}
            return summary, None, None, False
        summary["certificate"] = _certificate_block(cert, True)
        ok = cert.valid and res.exact
        return summary, cert, (lambdas, mus), ok
    # no eigenstructure supplied: use the numeric eigenvectors of the first closed loop
    _, Vf = np.linalg.eig(closed[0].to_numpy())
    try:
        cert = certificate_numeric(Vf, closed)
    except np.linalg.LinAlgError:
        summary["certificate"] = {"valid": False, "error": "numeric eigenvector matrix is singular"}
        return summary, None, None, False
    summary["certificate"] = _certificate_block(cert, False)
    summary["certificate"]["source"] = "numeric eigenvectors of the first closed loop"
    return summary, cert, None, cert.valid


def _run_trials(args, closed, cert, V, eigs, x0, summary):
    if not args.trials:
        return
    if args.out:
        os.makedirs(args.out, exist_ok=True)
    ratios, monotone = [], []
    W = cert.W if cert is not None else None
    use_V = V if (eigs is not None and V is not None) else None
    for k in range(args.trials):
        sig = random_switching(args.tau, args.horizon, args.seed + k)
        tr = simulate(closed, sig, x0, args.dt, V=use_V, eigs=eigs, W=W)
        ratios.append(tr.final_ratio())
        if W is not None:
            monotone.append(tr.lyapunov_nonincreasing())
        if args.out:
            with open(os.path.join(args.out, f"trial_{k:03d}.csv"), "w", encoding="utf-8", newline="") as fh:
                tr.to_csv(fh)
    summary["trials"] = args.trials
    summary["max_final_ratio"] = max(ratios)
    summary["all_below_1e-6"] = max(ratios) < 1e-6
    if monotone:
        summary["lyapunov_nonincreasing"] = all(monotone)


def _finish(summary, args):
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        fileio.write_json(summary, os.path.join(args.out, "summary.json"))
    else:
        fileio.write_json(summary, None, sys.stdout)


def cmd_verify(args):
    _, _, closed, V, pairs, x0 = _load_closed_loop(args)
    summary, cert, eigs, ok = _certify(closed, V, pairs)
    if cert is not None:
        _run_trials(args, closed, cert, V, eigs, x0, summary)
    _finish(summary, args)
    return 0 if ok else 2


def cmd_simulate(args):
    _, _, closed, V, pairs, x0 = _load_closed_loop(args)
    summary, cert, eigs, _ = _certify(closed, V, pairs)
    if cert is None:
        summary.pop("certificate", None)
    _run_trials(args, closed, cert, V, eigs, x0, summary)
    _finish(summary, args)
    return 0


COMMANDS = {"analyze": cmd_analyze, "synthesize": cmd_synthesize, "verify": cmd_verify, "simulate": cmd_simulate}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except NEGATIVE as exc:
        print(f"fbrect: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except (InputError, ExcludedPoint, ConjugateViolation, ValueError, ZeroDivisionError) as exc:
        print(f"fbrect: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except FbrectError as exc:
        print(f"fbrect: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
