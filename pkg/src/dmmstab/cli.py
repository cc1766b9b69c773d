"""Command-line front end.

Exit codes: 0 ok / certified, 2 usage or parse error, 3 marginal,
4 not certified, 5 runtime failure.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import experiments as ex
from .certify import CERTIFIED, MARGINAL, certify_grid, certify_layerwise, certify_model
from .dmm import DeepMarkovModel, ParametricDmm, RegionSpec, model_from_dict, zero_variance_net
from .errors import NotCertifiedError, ShapeError
from .factorize import SpectralBand
from .netcore import FeedForwardNet
from .pwa import extract
from .sim import (
    empirical_moments,
    moment_diagnostic,
    phase_grid,
    rollout_ensemble,
    variance_gain,
    write_moment_csv,
    write_phase_csv,
    write_trajectory_csv,
)
from .spectral import NormKind, local_lipschitz, matrix_norm, vector_norm

EXIT_OK, EXIT_USAGE, EXIT_MARGINAL, EXIT_NOT_CERTIFIED, EXIT_RUNTIME = 0, 2, 3, 4, 5
OUTPUT_ENV = "DMMSTAB_OUTPUT_DIR"


class UsageError(Exception):
    pass


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _dump(obj, path=None):
    text = json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    if isinstance(o, Path):
        return str(o)
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def _resolved_config(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "config")}


def _out_dir(args) -> Path:
    env = os.environ.get(OUTPUT_ENV)
    return Path(env) if env else Path(args.out)


def _load(path):
    """A model file or a bare network file."""
    try:
        d = json.loads(Path(path).read_text())
        if "layers" in d:
            return FeedForwardNet.from_dict(d)
        return model_from_dict(d)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"cannot parse {path}: {exc}") from exc


def _load_model(path):
    obj = _load(path)
    if isinstance(obj, FeedForwardNet):
        raise UsageError(f"{path} holds a single network; a model file is required")
    return obj


def _verdict_code(verdict: str) -> int:
    return {CERTIFIED: EXIT_OK, MARGINAL: EXIT_MARGINAL}.get(verdict, EXIT_NOT_CERTIFIED)


# ------------------------------------------------------------------ commands

def cmd_gen(args) -> int:
    if args.method in ("pf", "gd") and args.hidden is not None and args.hidden != args.dim:
        raise UsageError(f"{args.method.upper()} weights are square; --hidden must equal --dim")
    if args.var_method in ("pf", "gd") and args.var_hidden is not None and args.var_hidden != args.dim:
        raise UsageError(f"{args.var_method.upper()} weights are square; --var-hidden must equal --dim")
    try:
        band = SpectralBand(*args.band)
        var_band = SpectralBand(*args.var_band)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    rng = np.random.default_rng(args.seed)
    f, rf = ex.random_net(args.method, band, args.depth, args.act, args.dim, rng,
                          hidden=args.hidden, bias=args.bias)
    g, rg = ex.random_net(args.var_method, var_band, args.var_depth, args.var_act, args.dim, rng,
                          hidden=args.var_hidden, bias=args.bias, output_offset=args.var_offset)
    model = DeepMarkovModel(f, g)
    if args.regions:
        model = ParametricDmm(model, RegionSpec.three_region(args.regions[0], args.regions[1],
                                                             tuple(args.scales), args.blend))
    doc = model.to_dict()
    doc["config"] = _resolved_config(args)
    out = Path(args.output)
    _dump(doc, out)
    report = {
        "config": doc["config"],
        "mean_layers": [r.to_dict() for r in rf],
        "var_layers": [r.to_dict() for r in rg],
    }
    report["passed"] = all(r["passed"] for r in report["mean_layers"] + report["var_layers"])
    _dump(report, args.report or out.with_suffix(".report.json"))
    return EXIT_OK if report["passed"] else EXIT_RUNTIME


def cmd_certify(args) -> int:
    obj = _load(args.model)
    p = NormKind.parse(args.p)
    if isinstance(obj, FeedForwardNet):
        cert = certify_layerwise(obj, p)
        doc = cert.to_dict()
        verdict = cert.verdict
        if args.grid:
            raise UsageError("--grid needs a model file with mean and variance networks")
    else:
        doc = certify_model(obj, p)
        verdict = doc["verdict"]
        if args.grid:
            box = [tuple(args.box[i:i + 2]) for i in range(0, len(args.box), 2)]
            if len(box) == 1:
                box = box * obj.dim
            if len(box) != obj.dim:
                raise UsageError(f"--box needs {obj.dim} (low, high) pairs")
            doc["grid"] = certify_grid(obj, box, args.resolution, p, args.K).to_dict()
    offending = [l for part in ("mean", "variance") if part in doc for l in doc[part]["per_layer"]
                 if not l["contractive"]]
    if "per_layer" in doc:
        offending = [l for l in doc["per_layer"] if not l["contractive"]]
    doc["offending_layers"] = offending
    doc["model_path"] = str(args.model)
    _dump(doc, args.output)
    return _verdict_code(verdict)


def cmd_analyze(args) -> int:
    obj = _load(args.model)
    p = NormKind.parse(args.p)
    x = np.asarray(args.x, dtype=float)
    nets = {"net": obj} if isinstance(obj, FeedForwardNet) else {"mean_net": obj.mean_net, "var_net": obj.var_net}
    doc = {"x": x.tolist(), "p": str(p)}
    xn = float(vector_norm(x, p))
    for name, net in nets.items():
        if net.n_in != x.size:
            raise UsageError(f"--x has {x.size} entries; {name} expects {net.n_in}")
        form = extract(net, x)
        entry = form.to_dict()
        entry["norm_A"] = matrix_norm(form.a_matrix, p)
        entry["norm_b"] = float(vector_norm(form.b_vector, p))
        entry["local_lipschitz"] = local_lipschitz(form, x, p) if xn > 0 else None
        entry["layer_product_bound"] = certify_layerwise(net, p).product_bound
        doc[name] = entry
    if "mean_net" in nets:
        doc["effective_mean_norm"] = float(obj.norm_scale(x) * doc["mean_net"]["norm_A"])
        doc["variance_gain"] = float(variance_gain(obj.var_net, x[None], p)[0]) if xn > 0 else None
    _dump(doc, args.output)
    return EXIT_OK


def _parse_ics(spec: str, dim: int) -> np.ndarray:
    if spec.startswith("circle:"):
        _, r, k = spec.split(":")
        if dim != 2:
            raise UsageError("circle initial conditions need a 2-D model")
        return ex.circle(int(k), float(r))
    path = Path(spec)
    if path.exists():
        ics = np.atleast_2d(np.loadtxt(path, delimiter=",", ndmin=2))
    else:
        ics = np.array([[float(v) for v in row.split(",")] for row in spec.split(";") if row.strip()])
    if ics.shape[1] != dim:
        raise UsageError(f"initial conditions have width {ics.shape[1]}; model dimension is {dim}")
    return ics


def _write_ensemble(out: Path, ens, meta, max_real=None):
    write_trajectory_csv(out / "trajectories.csv", ens, max_real, meta)
    mom = empirical_moments(ens) if ens.states.shape[0] * ens.states.shape[1] >= 2 else None
    if mom is not None:
        write_moment_csv(out / "moments.csv", mom, meta)
    return mom


def cmd_simulate(args) -> int:
    model = _load_model(args.model)
    if args.zero_variance:
        base = model.base
        zero = DeepMarkovModel(base.mean_net, zero_variance_net(model.dim))
        model = ParametricDmm(zero, model.regions) if isinstance(model, ParametricDmm) else zero
    ics = _parse_ics(args.ics, model.dim)
    try:
        ens = rollout_ensemble(model, ics, args.M, args.T, seed=args.seed, zero_variance=args.zero_variance)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    out = _out_dir(args)
    meta = {"config": _resolved_config(args)}
    with np.errstate(over="ignore", invalid="ignore"):
        mom = _write_ensemble(out, ens, meta, args.max_realizations)
        summary = {"config": meta["config"], "diagnostic": moment_diagnostic(mom, args.threshold) if mom else None}
    _dump(summary, out / "summary.json")
    return EXIT_OK


def cmd_phase(args) -> int:
    model = _load_model(args.model)
    if model.dim != 2:
        raise UsageError(f"phase portraits need a 2-D model; dimension is {model.dim}")
    box = [tuple(args.box[0:2]), tuple(args.box[2:4])] if len(args.box) == 4 else [tuple(args.box)] * 2
    grid = phase_grid(model, box, args.resolution)
    out = Path(os.environ.get(OUTPUT_ENV, "")) / Path(args.output).name if os.environ.get(OUTPUT_ENV) else Path(args.output)
    write_phase_csv(out, grid, {"config": _resolved_config(args)})
    return EXIT_OK


def cmd_reproduce(args) -> int:
    out = _out_dir(args) / args.figure
    meta = {"config": _resolved_config(args)}
    recipe = {"fig1": ex.fig1, "fig2": ex.fig2, "fig3": ex.fig3}[args.figure]
    kwargs = {"seed": args.seed}
    if args.T is not None:
        kwargs["T"] = args.T
    with np.errstate(over="ignore", invalid="ignore"):
        panels, summary = recipe(**kwargs)
        for name, panel in panels.items():
            pdir = out / name
            _dump(dict(panel["model"].to_dict(), config=meta["config"]), pdir / "model.json")
            _write_ensemble(pdir, panel["ensemble"], dict(meta, panel=name), args.max_realizations)
            if panel["model"].dim == 2:
                write_phase_csv(pdir / "phase.csv", phase_grid(panel["model"], [(-10, 10)] * 2, 21),
                                dict(meta, panel=name))
    summary["config"] = meta["config"]
    _dump(summary, out / "summary.json")
    return EXIT_OK if summary["passed"] else EXIT_RUNTIME


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dmmstab", description=__doc__.splitlines()[0])
    ap.add_argument("--config", help="JSON file whose keys override command-line flags")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a model with factorized weights")
    g.add_argument("--method", choices=["pf", "svd", "gd"], default="svd")
    g.add_argument("--band", nargs=2, type=float, default=[0.0, 0.9], metavar=("LO", "HI"))
    g.add_argument("--depth", type=int, choices=[1, 2, 4, 8], default=2)
    g.add_argument("--act", default="relu")
    g.add_argument("--bias", action=argparse.BooleanOptionalAction, default=False)
    g.add_argument("--dim", type=_positive_int, default=2)
    g.add_argument("--hidden", type=_positive_int)
    g.add_argument("--var-method", choices=["pf", "svd", "gd"], default="svd")
    g.add_argument("--var-band", nargs=2, type=float, default=[0.0, 0.9], metavar=("LO", "HI"))
    g.add_argument("--var-depth", type=int, choices=[1, 2, 4, 8], default=2)
    g.add_argument("--var-act", default="relu")
    g.add_argument("--var-hidden", type=_positive_int)
    g.add_argument("--var-offset", type=float, default=0.0, help="added to the variance output bias")
    g.add_argument("--regions", nargs=2, type=float, metavar=("R1", "R2"))
    g.add_argument("--scales", nargs=3, type=float, default=[1.05, 1.0, 0.5])
    g.add_argument("--blend", type=float, default=2.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("-o", "--output", default="model.json")
    g.add_argument("--report")
    g.set_defaults(func=cmd_gen)

    c = sub.add_parser("certify", help="layer-wise certificate, optional grid evidence")
    c.add_argument("model")
    c.add_argument("--p", default="2", choices=["1", "2", "inf"])
    c.add_argument("--grid", action="store_true")
    c.add_argument("--box", nargs="+", type=float, default=[-10.0, 10.0])
    c.add_argument("--resolution", type=_positive_int, default=41)
    c.add_argument("--K", type=float, default=1.0, help="variance gain threshold")
    c.add_argument("-o", "--output")
    c.set_defaults(func=cmd_certify)

    a = sub.add_parser("analyze", help="pointwise-affine form and local norms at a point")
    a.add_argument("model")
    a.add_argument("--x", nargs="+", type=float, required=True)
    a.add_argument("--p", default="2", choices=["1", "2", "inf"])
    a.add_argument("-o", "--output")
    a.set_defaults(func=cmd_analyze)

    s = sub.add_parser("simulate", help="stochastic rollouts and moment diagnostics")
    s.add_argument("model")
    s.add_argument("--T", type=_positive_int, default=500)
    s.add_argument("--M", type=_positive_int, default=200)
    s.add_argument("--ics", default="circle:5:10", help="circle:R:K, a CSV file, or 'x1,x2;x1,x2'")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--zero-variance", action="store_true")
    s.add_argument("--threshold", type=float, default=1e-3)
    s.add_argument("--max-realizations", type=int, help="realizations per IC written to trajectories.csv")
    s.add_argument("--out", default="sim_out")
    s.set_defaults(func=cmd_simulate)

    ph = sub.add_parser("phase", help="phase-portrait grid as CSV")
    ph.add_argument("model")
    ph.add_argument("--box", nargs="+", type=float, default=[-10.0, 10.0])
    ph.add_argument("--resolution", type=_positive_int, default=41)
    ph.add_argument("-o", "--output", default="phase.csv")
    ph.set_defaults(func=cmd_phase)

    r = sub.add_parser("reproduce", help="regenerate the data behind a figure")
    r.add_argument("figure", choices=["fig1", "fig2", "fig3"])
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--T", type=_positive_int)
    r.add_argument("--max-realizations", type=int, default=5)
    r.add_argument("--out", default="repro_out")
    r.set_defaults(func=cmd_reproduce)
    return ap


def _apply_config(parser, args):
    if not args.config:
        return args
    try:
        cfg = json.loads(Path(args.config).read_text())
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read config {args.config}: {exc}") from exc
    known = vars(args)
    for key, value in cfg.items():
        dest = key.replace("-", "_")
        if dest not in known or dest in ("func", "command"):
            raise UsageError(f"unknown config key {key!r} for command {args.command}")
        setattr(args, dest, value)
    return args


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on bad usage, 0 for --help
        return int(exc.code or 0)
    try:
        args = _apply_config(parser, args)
        return args.func(args)
    except UsageError as exc:
        print(f"dmmstab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ShapeError, NotCertifiedError, RuntimeError, ValueError) as exc:
        print(f"dmmstab: runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
