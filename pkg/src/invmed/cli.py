"""Command-line entry point ``invmed``.

Subcommands: phantom, forward, measure, invert, metrics, experiment,
heatmap.  Failures exit nonzero after printing one JSON line
``{"error": <type>, "message": <text>}`` to stderr.
"""

import argparse
import json
import math
import sys
from pathlib import Path

from .errors import ConfigError, InvmedError
from .experiments import PHANTOM_KINDS, PRESETS, RunConfig, make_phantom, run_experiment
from .grid import ComplexField, RealField, read_field, unit_grid, write_field
from .heatmap import export_heatmap
from .inversion import InversionConfig, lbfgs_minimize, write_history_csv
from .lippmann import GreenKernel, neumann_forward
from .measurement import incident_fields, make_layout, read_measurements, synthesize, write_measurements
from .metrics import metric_report
from .pml import PmlConfig, assemble, forward_scatter

__all__ = ["main", "build_parser"]


class UsageError(InvmedError):
    pass


def _snr(text):
    if text.lower() in ("inf", "infinity", "none"):
        return math.inf
    return float(text)


def _load_real(path, what):
    field, k = read_field(path)
    if not isinstance(field, RealField):
        raise ConfigError(f"{what} {path} must hold a real (f64) field")
    return field, k


def cmd_phantom(args):
    if args.kind == "gaussian_mixture" and args.seed is None:
        raise UsageError("phantom kind 'gaussian_mixture' is random and requires --seed")
    q = make_phantom(args.kind, args.magnitude, unit_grid(args.n), seed=args.seed or 0)
    write_field(args.out, q)
    return 0


def cmd_forward(args):
    q, _ = _load_real(args.phantom, "phantom")
    if q.grid.bounds != (0.0, 0.0, 1.0, 1.0):
        raise ConfigError("phantom must be sampled on the unit square")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    layout = make_layout("full_circle", args.M, 1, 0.45)
    uinc = incident_fields(layout, args.k, q.grid)
    report = {"solver": args.solver, "k": args.k, "n": q.grid.n, "M": args.M}
    if args.solver == "pml":
        cfg = PmlConfig(args.k, q.grid.n, args.L_pml)
        system = assemble(q, cfg)
        fields_out = forward_scatter(q, [ComplexField(q.grid, u) for u in uinc], cfg,
                                     system=system, workers=args.threads)
    else:
        kernel = GreenKernel(args.k, q.grid)
        fields_out, diags = [], []
        for u in uinc:
            us, diag = neumann_forward(q, ComplexField(q.grid, u), kernel, args.L)
            fields_out.append(us)
            diags.append({"term_norms": diag.term_norms, "converged": diag.converged,
                          "contraction_estimate": diag.contraction_estimate})
        report["L"] = args.L
        report["diagnostics"] = diags
    for j, us in enumerate(fields_out):
        write_field(out / f"scattered_{j:03d}.fld", us, k=args.k)
    (out / "forward.json").write_text(json.dumps(report, indent=2) + "\n")
    return 0


def cmd_measure(args):
    q, _ = _load_real(args.phantom, "phantom")
    if q.grid.n != args.fine_n:
        raise ConfigError(f"phantom has {q.grid.n} points per side but --fine-n is {args.fine_n}")
    layout = make_layout(args.layout, args.M, args.N, args.rc,
                         center_angle=args.center_angle, aperture=args.aperture)
    m = synthesize(q, layout, args.k, args.fine_n, args.coarse_n, snr_db=args.snr_db,
                   seed=args.seed, L_pml=args.L_pml, workers=args.threads)
    write_measurements(args.out, m)
    return 0


def cmd_invert(args):
    data = read_measurements(args.data)
    if not math.isclose(data.k, args.k, rel_tol=1e-12):
        raise ConfigError(f"data were recorded at k = {data.k} but --k is {args.k}")
    truth = None
    if args.truth:
        truth, _ = _load_real(args.truth, "truth")
        if truth.grid.n != args.n:
            raise ConfigError(f"truth has {truth.grid.n} points per side but --n is {args.n}")
    cfg = InversionConfig(k=args.k, n=args.n, max_iter=args.max_iter, max_linesearch=args.max_ls,
                          L_pml=args.L_pml, workers=args.threads)
    state = lbfgs_minimize(data, cfg, truth=truth)
    prefix = Path(args.out_prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    write_field(prefix.with_name(prefix.name + ".fld"), state.q, k=args.k)
    write_history_csv(prefix.with_name(prefix.name + "_history.csv"), state.history)
    return 0


def cmd_metrics(args):
    rec, _ = _load_real(args.rec, "reconstruction")
    truth, _ = _load_real(args.truth, "truth")
    print(json.dumps(metric_report(rec, truth).to_dict()))
    return 0


def cmd_experiment(args):
    if args.config:
        base = RunConfig.load(args.config).to_dict()
    elif args.name:
        if args.seed is None:
            raise UsageError("experiment requires --seed (or a config file that records one)")
        base = dict(PRESETS[args.name], name=args.name)
    else:
        raise UsageError("experiment needs a preset name or --config")
    overrides = {
        "phantom": args.phantom, "magnitude": args.magnitude, "k": args.k, "n": args.n,
        "fine_n": args.fine_n, "M": args.M, "N": args.N, "r_c": args.rc, "layout": args.layout,
        "center_angle": args.center_angle, "aperture": args.aperture, "snr_db": args.snr_db,
        "max_iter": args.max_iter, "max_linesearch": args.max_ls, "seed": args.seed,
        "solver": args.solver, "neumann_L": args.L,
    }
    base.update({key: val for key, val in overrides.items() if val is not None})
    if args.threads != 1:
        base["threads"] = args.threads
    config = RunConfig.from_dict(base)
    summary = run_experiment(config, args.out, log=lambda msg: print(msg, file=sys.stderr))
    print(json.dumps(summary))
    return 0


def cmd_heatmap(args):
    field, _ = read_field(args.field)
    if isinstance(field, ComplexField) and args.part is None:
        raise UsageError("complex field: choose --part real|imag|abs")
    export_heatmap(field, args.out_image, part=args.part)
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="invmed", description="2-D acoustic inverse medium toolkit")
    p.add_argument("--threads", type=int, default=1, help="cap on worker threads")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("phantom", help="write a scatterer field")
    s.add_argument("--kind", choices=PHANTOM_KINDS, default="two_gauss")
    s.add_argument("--magnitude", type=float, default=0.1)
    s.add_argument("--n", type=int, default=129)
    s.add_argument("--seed", type=int)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_phantom)

    s = sub.add_parser("forward", help="scattered fields for plane-wave sources")
    s.add_argument("--phantom", required=True)
    s.add_argument("--k", type=float, required=True)
    s.add_argument("--solver", choices=("pml", "neumann"), default="pml")
    s.add_argument("--L", type=int, default=3, help="Neumann truncation order")
    s.add_argument("--M", type=int, default=4, help="number of equispaced incidence directions")
    s.add_argument("--L-pml", dest="L_pml", type=float, default=0.05)
    s.add_argument("--out", required=True, help="output directory")
    s.set_defaults(func=cmd_forward)

    s = sub.add_parser("measure", help="synthesize receiver data on a fine mesh")
    s.add_argument("--phantom", required=True, help=".fld on the fine mesh")
    s.add_argument("--k", type=float, default=40.0)
    s.add_argument("--fine-n", dest="fine_n", type=int, default=1025)
    s.add_argument("--coarse-n", dest="coarse_n", type=int, default=129)
    s.add_argument("--snr-db", dest="snr_db", type=_snr, default=math.inf)
    s.add_argument("--layout", choices=("full_circle", "arc"), default="full_circle")
    s.add_argument("--center-angle", dest="center_angle", type=float, default=math.pi)
    s.add_argument("--aperture", type=float, default=2 * math.pi)
    s.add_argument("--M", type=int, default=64)
    s.add_argument("--N", type=int, default=64)
    s.add_argument("--rc", type=float, default=0.45)
    s.add_argument("--L-pml", dest="L_pml", type=float, default=0.05)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_measure)

    s = sub.add_parser("invert", help="L-BFGS reconstruction from a .msr file")
    s.add_argument("--data", required=True)
    s.add_argument("--k", type=float, required=True)
    s.add_argument("--n", type=int, default=129)
    s.add_argument("--max-iter", dest="max_iter", type=int, default=15)
    s.add_argument("--max-ls", dest="max_ls", type=int, default=20)
    s.add_argument("--L-pml", dest="L_pml", type=float, default=0.05)
    s.add_argument("--truth")
    s.add_argument("--out-prefix", dest="out_prefix", required=True)
    s.set_defaults(func=cmd_invert)

    s = sub.add_parser("metrics", help="relative error and SSIM as JSON")
    s.add_argument("--rec", required=True)
    s.add_argument("--truth", required=True)
    s.set_defaults(func=cmd_metrics)

    s = sub.add_parser("experiment", help="run a preset scenario end to end")
    s.add_argument("name", nargs="?", choices=sorted(PRESETS))
    s.add_argument("--config", help="JSON config snapshot; flags override its values")
    s.add_argument("--out", required=True, help="output directory")
    s.add_argument("--phantom", choices=PHANTOM_KINDS)
    s.add_argument("--magnitude", type=float)
    s.add_argument("--k", type=float)
    s.add_argument("--n", type=int)
    s.add_argument("--fine-n", dest="fine_n", type=int)
    s.add_argument("--M", type=int)
    s.add_argument("--N", type=int)
    s.add_argument("--rc", type=float)
    s.add_argument("--layout", choices=("full_circle", "arc"))
    s.add_argument("--center-angle", dest="center_angle", type=float)
    s.add_argument("--aperture", type=float)
    s.add_argument("--snr-db", dest="snr_db", type=_snr)
    s.add_argument("--max-iter", dest="max_iter", type=int)
    s.add_argument("--max-ls", dest="max_ls", type=int)
    s.add_argument("--solver", choices=("pml", "neumann"), help="forward model for data synthesis")
    s.add_argument("--L", type=int, help="Neumann truncation order")
    s.add_argument("--seed", type=int)
    s.set_defaults(func=cmd_experiment)

    s = sub.add_parser("heatmap", help="export a field as a PGM image")
    s.add_argument("field")
    s.add_argument("out_image")
    s.add_argument("--part", choices=("real", "imag", "abs"))
    s.set_defaults(func=cmd_heatmap)
    return p


def _fail(exc, code):
    print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
    return code


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        return _fail(exc, 2)
    except (InvmedError, ValueError, OSError) as exc:
        return _fail(exc, 1)


if __name__ == "__main__":
    sys.exit(main())
