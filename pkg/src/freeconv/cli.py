"""Command line interface: ``freeconv <subcommand> ...``.

Exit status is 0 on success, 2 when inputs fail validation and 3 when an
iterative solver does not converge. Errors are reported on stderr as one
JSON object per line.

Report layouts
--------------
convolve, density, oracle
    ``# epsilon_used,<eps>`` and ``# atom,<position>,<mass>`` lines, then
    ``lambda,rho``. ``--states-out`` adds the subordination grid
    ``lambda,y,f_re,f_im,d1_re,d1_im,d2_re,d2_im,residual,iters``.
rtransform
    ``s_re,s_im,r_re,r_im`` (plus ``defect`` when two measures are given).
mc-spectrum
    metadata (seed, n, trials), then ``bin_lo,bin_hi,mass``.
mc-variance
    metadata (seed, trials, z, slopes), then ``n,var_g,var_delta2``.
freeness, haar-check
    metadata, then one row with the Monte Carlo mean.
"""
import argparse
import json
import logging
import sys

import numpy as np

from . import closed_forms, rmt_lab
from .exceptions import ConvergenceError, DomainError
from .io import load_measure, write_report
from .measures import Atoms, point_mass
from .solver import (
    DensityEstimate,
    SolverConfig,
    check_r_additivity,
    free_convolve,
    r_transform_eval,
    solve_on_grid,
    write_states_csv,
)

EXIT_OK, EXIT_INPUT, EXIT_SOLVER = 0, 2, 3


def _floats(text):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _ints(text):
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _complexes(text):
    try:
        return [complex(t.replace(" ", "")) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated complex numbers, got {text!r}")


def _positive(kind):
    def parse(text):
        value = kind(text)
        if value <= 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return value

    return parse


def _at_least(bound):
    def parse(text):
        value = int(text)
        if value < bound:
            raise argparse.ArgumentTypeError(f"must be >= {bound}, got {text}")
        return value

    return parse


def _solver_flags(p):
    p.add_argument("--epsilon", type=_positive(float), default=1e-3)
    p.add_argument("--grid-points", type=_at_least(2), default=400)
    p.add_argument("--y-start", type=_positive(float), default=None)
    p.add_argument("--no-refine", action="store_true", help="keep the uniform grid")
    p.add_argument("--richardson", action="store_true")


def _mc_flags(p, n_default=1024, trials_default=20):
    p.add_argument("--n", type=_at_least(2), default=n_default)
    p.add_argument("--trials", type=_at_least(1), default=trials_default)
    p.add_argument("--seed", type=int, default=0)


class _Parser(argparse.ArgumentParser):
    """Reports usage errors as a JSON line, keeping exit status 2."""

    def error(self, message):
        _report("validation", f"{self.prog}: {message}")
        self.exit(EXIT_INPUT)


def build_parser():
    parser = _Parser(prog="freeconv", description=__doc__.splitlines()[0])
    parser.add_argument("--threads", type=_at_least(1), default=None,
                        help="worker threads (default: $FREECONV_THREADS or CPU count)")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("convolve", help="density of n1 ⊞ n2")
    p.add_argument("--n1", required=True)
    p.add_argument("--n2", required=True)
    _solver_flags(p)
    p.add_argument("--states-out", help="also write the subordination grid CSV")
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("density", help="smoothed density of one measure by Stieltjes inversion")
    p.add_argument("--n1", required=True)
    _solver_flags(p)
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("oracle", help="closed-form laws")
    osub = p.add_subparsers(dest="oracle", required=True, parser_class=_Parser)
    q = osub.add_parser("semicircle-add")
    q.add_argument("--w1sq", type=float, required=True)
    q.add_argument("--w2sq", type=float, required=True)
    q = osub.add_parser("semicircle")
    q.add_argument("--w2", type=_positive(float), required=True)
    q = osub.add_parser("two-atom")
    q.add_argument("--alpha", type=float, required=True)
    q.add_argument("--a", type=_positive(float), required=True)
    q = osub.add_parser("arcsine")
    q.add_argument("--a", type=_positive(float), required=True)
    q = osub.add_parser("mp")
    q.add_argument("--c", type=float, required=True)
    q.add_argument("--tau", type=_floats, default=[1.0], help="atom positions of sigma")
    q.add_argument("--weights", type=_floats, default=None)
    q.add_argument("--epsilon", type=_positive(float), default=1e-8)
    for name in ("semicircle", "two-atom", "arcsine", "mp"):
        q = osub.choices[name]
        q.add_argument("--grid-points", type=_at_least(2), default=400)
        q.add_argument("-o", "--output", required=True)

    p = sub.add_parser("rtransform", help="R-transform, and additivity defect for two measures")
    p.add_argument("--n1", required=True)
    p.add_argument("--n2")
    p.add_argument("--s", type=_complexes, required=True, help="e.g. 0.05j,0.1j")
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("mc-spectrum", help="averaged eigenvalue histogram of A + U* B U")
    p.add_argument("--n1", required=True)
    p.add_argument("--n2", required=True)
    _mc_flags(p)
    p.add_argument("--bins", type=_at_least(1), default=100)
    p.add_argument("--compare", action="store_true", help="record the KS distance to the solver")
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("mc-variance", help="variance decay of resolvent traces")
    p.add_argument("--n1", required=True)
    p.add_argument("--n2", required=True)
    p.add_argument("--z", type=complex, default=3j)
    p.add_argument("--ns", type=_ints, default=[64, 128, 256, 512])
    p.add_argument("--trials", type=_at_least(1), default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("freeness", help="mixed moments of Haar powers and traceless sign diagonals")
    _mc_flags(p, n_default=256, trials_default=100)
    p.add_argument("--ms", type=_ints, default=[1, -1])
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("haar-check", help="Stieltjes transform of the Haar unitary spectrum")
    _mc_flags(p, n_default=256, trials_default=100)
    p.add_argument("--z", type=complex, default=2)
    p.add_argument("-o", "--output", required=True)
    return parser


def _config(args, lambda_grid=None):
    return SolverConfig(
        y_start=args.y_start,
        y_target=args.epsilon,
        grid_points=args.grid_points,
        refine=not args.no_refine,
        richardson=args.richardson,
        lambda_grid=lambda_grid,
    )


def _cmd_convolve(args):
    n1, n2 = load_measure(args.n1), load_measure(args.n2)
    cfg = _config(args)
    est = free_convolve(n1, n2, cfg)
    est.to_csv(args.output)
    if args.states_out:
        states = solve_on_grid(n1, n2, cfg.with_(lambda_grid=tuple(est.lambdas)))
        write_states_csv(states, args.states_out)


def _cmd_density(args):
    m = load_measure(args.n1)
    free_convolve(m, point_mass(0.0), _config(args)).to_csv(args.output)


def _oracle_estimate(result, grid_points, eps=0.0):
    a, b = result.support
    pad = 0.05 * max(b - a, 1.0)
    lam = np.linspace(a - pad, b + pad, grid_points)
    return DensityEstimate(lam, result.density(lam), list(result.atoms), eps)


def _cmd_oracle(args):
    kind = args.oracle
    if kind == "semicircle-add":
        print(f"{closed_forms.semicircle_add(args.w1sq, args.w2sq):.17g}")
        return
    if kind == "semicircle":
        est = _oracle_estimate(closed_forms.semicircle_law(args.w2), args.grid_points)
    elif kind == "two-atom":
        est = _oracle_estimate(closed_forms.two_atom_self_conv(args.alpha, args.a), args.grid_points)
    elif kind == "arcsine":
        est = _oracle_estimate(closed_forms.arcsine_self_conv(args.a), args.grid_points)
    else:
        sigma = Atoms(args.tau, args.weights)
        top = max(abs(float(t)) for t in args.tau)
        hi = (1.0 + np.sqrt(max(args.c, 0.0))) ** 2 * max(top, 1e-12) + 1.0
        lam = np.linspace(-hi, hi, args.grid_points)
        eps = args.epsilon
        rho = closed_forms.mp_density(args.c, sigma, lam, eps=eps)
        # an atom at 0 shows up as ε Im f(iε) ≈ mass; remove its Lorentzian
        mass = eps * closed_forms.mp_stieltjes(args.c, sigma, 1j * eps).imag
        atoms = []
        if mass > 1e-6:
            atoms.append((0.0, mass))
            rho = np.clip(rho - mass * eps / (np.pi * (lam**2 + eps**2)), 0.0, None)
        est = DensityEstimate(lam, rho, atoms, eps)
    est.to_csv(args.output)


def _cmd_rtransform(args):
    n1 = load_measure(args.n1)
    n2 = load_measure(args.n2) if args.n2 else None
    rows = []
    for s in args.s:
        r = r_transform_eval(n1, s)
        row = [repr(s.real), repr(s.imag), repr(r.real), repr(r.imag)]
        if n2 is not None:
            row.append(repr(check_r_additivity(n1, n2, [s])))
        rows.append(row)
    header = ["s_re", "s_im", "r_re", "r_im"] + (["defect"] if n2 is not None else [])
    write_report(args.output, {"n1": args.n1, "n2": args.n2 or ""}, header, rows)


def _cmd_mc_spectrum(args):
    n1, n2 = load_measure(args.n1), load_measure(args.n2)
    samples = rmt_lab.sample_spectra(n1, n2, args.n, args.trials, args.seed, args.threads)
    a1, b1 = n1.support()
    a2, b2 = n2.support()
    lo, hi = a1 + a2, b1 + b2
    pad = 0.05 * max(hi - lo, 1.0)
    edges = np.linspace(lo - pad, hi + pad, args.bins + 1)
    masses = rmt_lab.empirical_ncm(samples, edges)
    meta = {"seed": args.seed, "n": args.n, "trials": args.trials}
    if args.compare:
        est = free_convolve(n1, n2, SolverConfig())
        meta["ks_to_solver"] = repr(rmt_lab.ks_distance(samples, est.cdf))
    rows = [[repr(float(a)), repr(float(b)), repr(float(m))]
            for a, b, m in zip(edges[:-1], edges[1:], masses)]
    write_report(args.output, meta, ["bin_lo", "bin_hi", "mass"], rows)


def _cmd_mc_variance(args):
    n1, n2 = load_measure(args.n1), load_measure(args.n2)
    rep = rmt_lab.estimate_resolvent_variance(n1, n2, args.z, args.ns, args.trials, args.seed,
                                              args.threads)
    meta = {"seed": args.seed, "trials": args.trials, "z": repr(rep.z),
            "slope_g": repr(rep.fitted_slope), "slope_delta2": repr(rep.delta_slope),
            "degenerate": rep.degenerate}
    rows = [[int(n), repr(float(vg)), repr(float(vd))]
            for n, vg, vd in zip(rep.ns, rep.variances, rep.delta_variances)]
    write_report(args.output, meta, ["n", "var_g", "var_delta2"], rows)


def _cmd_freeness(args):
    d = rmt_lab.traceless_sign_diagonal(args.n)
    mean = rmt_lab.freeness_moment(args.n, args.ms, [d] * len(args.ms), args.trials, args.seed,
                                   threads=args.threads)
    meta = {"seed": args.seed, "n": args.n, "trials": args.trials,
            "ms": " ".join(str(m) for m in args.ms)}
    write_report(args.output, meta, ["mean_re", "mean_im"], [[repr(mean.real), repr(mean.imag)]])


def _cmd_haar_check(args):
    mean = rmt_lab.unitary_spectrum_check(args.n, args.z, args.trials, args.seed, args.threads)
    meta = {"seed": args.seed, "n": args.n, "trials": args.trials, "z": repr(args.z)}
    expected = 0.0 if abs(args.z) < 1 else -1.0 / args.z
    write_report(args.output, meta, ["mean_re", "mean_im", "expected_re", "expected_im"],
                 [[repr(mean.real), repr(mean.imag), repr(complex(expected).real),
                   repr(complex(expected).imag)]])


COMMANDS = {
    "convolve": _cmd_convolve,
    "density": _cmd_density,
    "oracle": _cmd_oracle,
    "rtransform": _cmd_rtransform,
    "mc-spectrum": _cmd_mc_spectrum,
    "mc-variance": _cmd_mc_variance,
    "freeness": _cmd_freeness,
    "haar-check": _cmd_haar_check,
}


def _report(kind, message, **extra):
    print(json.dumps({"error": kind, "message": message, **extra}), file=sys.stderr)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    if args.threads is None:
        args.threads = rmt_lab.default_threads()
    try:
        COMMANDS[args.command](args)
    except ConvergenceError as exc:
        _report("convergence", str(exc), **{"lambda": exc.lam, "y": exc.y})
        return EXIT_SOLVER
    except (DomainError, ValueError, OSError) as exc:
        _report("validation", str(exc))
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
