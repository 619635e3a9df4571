"""Command-line interface: ``gpmslab {qnm,matrices,spectral,compare}``.

Exit codes: 0 success, 1 threshold failure, 2 invalid input, 3 numerical failure.
"""
import argparse
import os
import sys

import numpy as np

from gpmslab import gpm, hermitization
from gpmslab.hermitization import PositiveDefinitenessError
from gpmslab.io import (dumps, grid_to_csv, grid_to_json, matrix_to_json, read_grid_csv,
                        write_text)
from gpmslab.linalg import QuadratureError
from gpmslab.metrics import (METHODS, GridEvaluationError, GridMismatchError, box_region,
                             build_grid, compare_grids)
from gpmslab.slab import QnmSet, SlabCavity, round_trip_residual

EXIT_OK, EXIT_THRESHOLD, EXIT_INVALID, EXIT_NUMERICAL = 0, 1, 2, 3


class ValidationError(ValueError):
    pass


def _xp_spec(text):
    if text == "diag":
        return "diag"
    try:
        lo, hi, n = text.split(":")
        return (float(lo), float(hi), int(n))
    except ValueError:
        raise argparse.ArgumentTypeError(f"--xp must be 'diag' or MIN:MAX:STEPS, got {text!r}") from None


def _cavity_args(p):
    p.add_argument("--n-r", type=float, default=4.0, help="slab refractive index")
    p.add_argument("--n-b", type=float, default=1.0, help="background refractive index")
    p.add_argument("--length", type=float, default=1.0)
    p.add_argument("--m", type=int, default=30, help="number of positive-index modes")


def _family_args(p):
    p.add_argument("--a-re", type=float, default=2.0)
    p.add_argument("--a-im", type=float, default=0.0)
    p.add_argument("--a", dest="a_value", type=complex, default=None,
                   help="family parameter as a complex literal; overrides --a-re/--a-im")


def build_parser():
    parser = argparse.ArgumentParser(prog="gpmslab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    q = sub.add_parser("qnm", help="list QNM frequencies")
    _cavity_args(q)
    q.add_argument("--out", default="-")
    q.add_argument("--format", choices=["json"], default="json")

    m = sub.add_parser("matrices", help="dump T, T^H, V and the recovered gPM matrices")
    _cavity_args(m)
    _family_args(m)
    m.add_argument("--out", required=True, help="output directory")
    m.add_argument("--format", choices=["json"], default="json")
    m.add_argument("--seed", type=int, default=None, help="apply a random unitary gauge V -> VU")

    s = sub.add_parser("spectral", help="tabulate a spectral density on a grid")
    _cavity_args(s)
    _family_args(s)
    s.add_argument("--method", choices=METHODS, default="gpm")
    s.add_argument("--x-min", type=float, default=0.0)
    s.add_argument("--x-max", type=float, default=0.5)
    s.add_argument("--x-steps", type=int, default=101)
    s.add_argument("--xp", type=_xp_spec, default="diag")
    s.add_argument("--omega-min", type=float, default=0.0)
    s.add_argument("--omega-max", type=float, default=30.0)
    s.add_argument("--omega-steps", type=int, default=301)
    s.add_argument("--out", required=True)
    s.add_argument("--format", choices=["csv", "json"], default="csv")
    s.add_argument("--jobs", type=int, default=None)

    c = sub.add_parser("compare", help="compare grid A against reference grid B")
    c.add_argument("file_a")
    c.add_argument("file_b")
    c.add_argument("--x-min", type=float, default=None)
    c.add_argument("--x-max", type=float, default=None)
    c.add_argument("--omega-min", type=float, default=None)
    c.add_argument("--omega-max", type=float, default=None)
    c.add_argument("--threshold", type=float, default=None,
                   help="fail (exit 1) when max_abs_diff > threshold * peak")
    c.add_argument("--out", default="-")
    c.add_argument("--format", choices=["json"], default="json")
    return parser


def _a_param(args):
    return complex(args.a_value) if args.a_value is not None else complex(args.a_re, args.a_im)


def _config(args):
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in ("out", "jobs", "a_value")}
    if "a_re" in cfg:
        a = _a_param(args)
        cfg["a_re"], cfg["a_im"] = a.real, a.imag
    if isinstance(cfg.get("xp"), tuple):
        cfg["xp"] = list(cfg["xp"])
    return cfg


def _cavity(args):
    if args.m < 0:
        raise ValidationError("--m must be >= 0")
    try:
        return SlabCavity(args.n_r, args.n_b, args.length)
    except ValueError as exc:
        raise ValidationError(str(exc)) from None


def _emit(path, text):
    if path == "-":
        sys.stdout.write(text)
    else:
        write_text(path, text)


def cmd_qnm(args):
    cav = _cavity(args)
    try:
        qnms = QnmSet(cav, args.m)
    except ValueError as exc:
        raise ValidationError(str(exc)) from None
    modes = [{"mu": int(mu), "re_omega": float(w.real), "im_omega": float(w.imag),
              "round_trip_residual": float(r)}
             for mu, w, r in zip(qnms.indices, qnms.frequencies, round_trip_residual(cav, qnms.indices))]
    _emit(args.out, dumps({"config": _config(args), "units": "c_over_L", "modes": modes}))
    return EXIT_OK


def cmd_matrices(args):
    cav = _cavity(args)
    if args.m < 1:
        raise ValidationError("matrices need --m >= 1")
    qnms = QnmSet(cav, args.m)
    cfg = _config(args)
    os.makedirs(args.out, exist_ok=True)

    def dump(name, a):
        write_text(os.path.join(args.out, name + ".json"), dumps(matrix_to_json(a, cfg)))

    a_param = _a_param(args)
    t_ext = hermitization.family_matrix(qnms, a_param)
    t_h = hermitization.hermitian_block(t_ext, qnms)
    dump("t_extended", t_ext)
    dump("t_hermitian", t_h)
    t_eigs = np.linalg.eigvalsh(t_h)
    eigen = {"config": cfg, "t_hermitian": [float(v) for v in t_eigs]}
    try:
        v = hermitization.factorize_v(t_h)
    except PositiveDefinitenessError:
        write_text(os.path.join(args.out, "eigenvalues.json"), dumps(eigen))
        raise
    if args.seed is not None:
        from scipy.stats import unitary_group
        v = v @ unitary_group.rvs(args.m, random_state=args.seed) if args.m > 1 else v
    params = gpm.build_gpm(qnms, v, t_h)
    for name, a in (("v", v), ("h", params.h_matrix), ("omega", params.omega_matrix),
                    ("kappa", params.kappa_matrix), ("gamma", params.gamma_matrix)):
        dump(name, a)
    eigen["kappa"] = [float(x) for x in np.linalg.eigvalsh(params.kappa_matrix)]
    eigen["gamma"] = [float(x) for x in np.linalg.eigvalsh(params.gamma_matrix)]
    h_eigs = np.linalg.eigvals(params.h_matrix)
    h_eigs = h_eigs[np.lexsort((h_eigs.imag, h_eigs.real))]
    eigen["h"] = [[float(z.real), float(z.imag)] for z in h_eigs]
    write_text(os.path.join(args.out, "eigenvalues.json"), dumps(eigen))
    return EXIT_OK


def cmd_spectral(args):
    cav = _cavity(args)
    if args.m < 1 and args.method != "exact":
        raise ValidationError(f"method {args.method} needs --m >= 1")
    try:
        grid = build_grid(cav, args.m, args.method, (args.x_min, args.x_max, args.x_steps), args.xp,
                          (args.omega_min, args.omega_max, args.omega_steps), jobs=args.jobs,
                          a_param=_a_param(args))
    except GridEvaluationError as exc:
        if isinstance(exc.__cause__, ValueError) and not isinstance(exc.__cause__, np.linalg.LinAlgError):
            raise ValidationError(str(exc)) from None
        raise
    except ValueError as exc:
        if isinstance(exc, np.linalg.LinAlgError):
            raise
        raise ValidationError(str(exc)) from None
    cfg = _config(args)
    text = grid_to_csv(grid, cfg) if args.format == "csv" else grid_to_json(grid, cfg)
    _emit(args.out, text)
    return EXIT_OK


def cmd_compare(args):
    try:
        ga, _ = read_grid_csv(args.file_a)
        gb, _ = read_grid_csv(args.file_b)
    except (OSError, ValueError) as exc:
        raise ValidationError(str(exc)) from None
    region = {"x": [args.x_min, args.x_max], "omega": [args.omega_min, args.omega_max]}
    use = {}
    for key, (lo, hi) in region.items():
        if lo is not None or hi is not None:
            use[key] = (-np.inf if lo is None else lo, np.inf if hi is None else hi)
    try:
        metrics = compare_grids(ga, gb, box_region(**use) if use else None)
    except (GridMismatchError, ValueError) as exc:
        raise ValidationError(str(exc)) from None
    out = {"max_abs_diff": metrics["max_abs_diff"], "rel_l2": metrics["rel_l2"],
           "peak": metrics["peak_of_reference"], "region": region, "threshold": args.threshold,
           "files": [args.file_a, args.file_b]}
    passed = args.threshold is None or metrics["max_abs_diff"] <= args.threshold * metrics["peak_of_reference"]
    out["pass"] = bool(passed)
    _emit(args.out, dumps(out))
    return EXIT_OK if passed else EXIT_THRESHOLD


COMMANDS = {"qnm": cmd_qnm, "matrices": cmd_matrices, "spectral": cmd_spectral, "compare": cmd_compare}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ValidationError as exc:
        print(f"gpmslab: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except PositiveDefinitenessError as exc:
        print(f"gpmslab: {exc}; spectrum: {np.array2string(exc.eigenvalues, precision=6)}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (np.linalg.LinAlgError, QuadratureError, GridEvaluationError) as exc:
        print(f"gpmslab: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
