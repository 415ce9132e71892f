"""Command line interface: ``scsid <subcommand> ...``.

Exit codes: 0 success, 1 domain error, 2 usage error.  Diagnostics go to
stderr; data goes to files or stdout.
"""
from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from . import bench, crb, io
from .clustering import ScsConfig
from .errors import ScsError
from .estimation import align_to_truth, identify
from .identifiability import DEFAULT_TOL, blocks_from_labels, check_identifiable
from .model import (EpochDriven, UniformBox, chessboard_inputs, example1,
                    example1_inputs, example2, generate, stack)
from .subspace import DEFAULT_GAP_THRESHOLD, signal_subspace, similarity


class UsageError(Exception):
    pass


def _dump(obj):
    return json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n"


def _jsonable(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o).__name__)


def _write(text, out):
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def cmd_generate(args):
    spec = io.load_spec(args.spec)
    if isinstance(spec.switching, EpochDriven):
        n = args.n or spec.switching.horizon
        low, high = args.low, args.high
    else:
        if args.n is None:
            raise UsageError("--n is required for input-driven switching")
        n = args.n
        low = max(args.low, spec.switching.low)
        high = min(args.high, spec.switching.high)
    input_seed = args.seed if args.input_seed is None else args.input_seed
    ds = generate(spec, n, UniformBox(low, high, input_seed), args.seed)
    io.dataset_to_csv(ds, args.out)
    print(f"wrote {n} samples to {args.out}", file=sys.stderr)


def _config(args):
    return ScsConfig(restarts=args.restarts, seed=args.seed, zero_tol=args.zero_tol,
                     gap_threshold=args.gap_threshold, row_normalize=args.row_normalize)


def cmd_identify(args):
    ds = io.dataset_from_csv(args.data)
    if ds.n < args.k * args.nd:
        raise UsageError(f"dataset has N={ds.n} samples, fewer than K*N_d={args.k * args.nd}")
    if ds.X.shape[0] != args.nd:
        raise UsageError(f"--nd {args.nd} does not match {ds.X.shape[0]} input columns")
    if args.dump_graph:
        out = Path(args.dump_graph)
        out.mkdir(parents=True, exist_ok=True)
        sub = signal_subspace(stack(ds), args.k * args.nd, args.gap_threshold)
        np.savetxt(out / "W.csv", similarity(sub).W, delimiter=",", fmt="%.17g")
        np.savetxt(out / "singular_values.csv", sub.singular_values, delimiter=",", fmt="%.17g")
    est = identify(ds, args.k, args.nd, _config(args), args.noise_ratio)
    _write(_dump(io.estimate_to_dict(est)), args.out)
    for k, t in enumerate(est.thetas):
        print(f"theta{k + 1} = {np.array2string(t, precision=6)}", file=sys.stderr)


def _blocks(ds, path):
    if ds.labels is None:
        raise UsageError(f"{path}: a 'label' column is required")
    D = ds.D if ds.D is not None else ds.X
    return D, blocks_from_labels(D, ds.labels)


def cmd_check_ident(args):
    ds = io.dataset_from_csv(args.data)
    _, blocks = _blocks(ds, args.data)
    rep = check_identifiable(blocks, args.tol)
    sys.stdout.write(_dump(rep.to_dict()))


def cmd_crb(args):
    spec = io.load_spec(args.spec)
    ds = io.dataset_from_csv(args.inputs)
    D = ds.D if ds.D is not None else ds.X
    labels = ds.labels if ds.labels is not None else spec.labels_for(D)
    samples = [int(s) - 1 for s in args.samples.split(",")] if args.samples else []
    reports = crb.per_submodel(spec, D, labels, samples)
    lines = ["submodel,entry,ccrb"]
    doc = {"sigma_e2": spec.sigma_e2, "sigma_w2": spec.sigma_w2, "submodels": []}
    for k, rep in enumerate(reports):
        for name, v in zip(rep.entries, rep.diagonal()):
            lines.append(f"{k + 1},{name},{float(v)!r}")
        doc["submodels"].append({
            "submodel": k + 1,
            "entries": list(rep.entries),
            "cov_theta": rep.cov_theta,
            "cov_d": {str(i + 1): m for i, m in sorted(rep.cov_d.items())},
        })
    csv_text = "\n".join(lines) + "\n"
    if args.out_json:
        Path(args.out_json).write_text(_dump(doc))
    _write(csv_text, args.out_csv)


def cmd_bench(args):
    sc = io.load_scenario(args.scenario)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report = bench.run(sc)
    formats = args.formats.split(",")
    for fmt in formats:
        if fmt not in ("csv", "json", "svg"):
            raise UsageError(f"unknown format {fmt!r}")
    for fmt in formats:
        target = out / "plots" if fmt == "svg" else out / f"report.{fmt}"
        bench.emit(report, fmt, target)
    print(f"bench finished in {report.metadata['wall_time_s']} s; results in {out}",
          file=sys.stderr)


def cmd_demo(args):
    if args.example == "example1":
        spec, D = example1(), example1_inputs(400, args.seed)
    else:
        spec = example2()
        D = chessboard_inputs(spec.switching, 100, args.seed)
    if not args.noiseless:
        s_e2, s_w2 = bench.snr_to_variances(args.snr, spec, D)
        spec = spec.with_noise(s_e2, s_w2)
    ds = generate(spec, D.shape[1], D, args.seed)
    ratio = None if args.noiseless else 1.0
    est = identify(ds, spec.K, spec.n_d, ScsConfig(seed=args.seed), ratio)
    perm, al = align_to_truth(est, spec)
    miss = float(np.mean(al.labels.labels != ds.labels))
    snr = "inf" if args.noiseless else f"{args.snr:g}"
    print(f"{args.example}: N={ds.n}, SNR={snr} dB, misclassification={miss:.4f}")
    for k, (t, t0) in enumerate(zip(al.thetas, spec.thetas)):
        err = float(np.max(np.abs(t - t0)))
        print(f"theta{k + 1} = {np.array2string(t, precision=6)}  (max error {err:.3e})")


def build_parser():
    p = argparse.ArgumentParser(prog="scsid", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="simulate a dataset from a model spec")
    g.add_argument("spec")
    g.add_argument("--n", type=int, help="horizon (defaults to the epoch label count)")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--input-seed", type=int, help="seed for the uniform inputs (default: --seed)")
    g.add_argument("--low", type=float, default=-1.0)
    g.add_argument("--high", type=float, default=1.0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    i = sub.add_parser("identify", help="run SCS identification on a dataset CSV")
    i.add_argument("data")
    i.add_argument("--k", type=int, required=True)
    i.add_argument("--nd", type=int, required=True)
    i.add_argument("--out", default="-")
    i.add_argument("--seed", type=int, default=0)
    i.add_argument("--restarts", type=int, default=20)
    i.add_argument("--noise-ratio", type=float,
                   help="sigma_w^2/sigma_e^2 for weighted TLS (default: unweighted)")
    i.add_argument("--zero-tol", type=float, default=1e-9,
                   help="relative zero-eigenvalue tolerance (default 1e-9)")
    i.add_argument("--gap-threshold", type=float, default=DEFAULT_GAP_THRESHOLD,
                   help=f"singular-value gap warning level (default {DEFAULT_GAP_THRESHOLD:g})")
    i.add_argument("--row-normalize", action="store_true")
    i.add_argument("--dump-graph", metavar="DIR", help="write W and singular values as CSV")
    i.set_defaults(func=cmd_identify)

    c = sub.add_parser("check-ident", help="identifiability report for labelled inputs")
    c.add_argument("data")
    c.add_argument("--tol", type=float, default=DEFAULT_TOL,
                   help=f"relative zero-eigenvalue tolerance (default {DEFAULT_TOL:g})")
    c.set_defaults(func=cmd_check_ident)

    b = sub.add_parser("crb", help="clairvoyant CRB per submodel")
    b.add_argument("spec")
    b.add_argument("inputs")
    b.add_argument("--out-csv", default="-")
    b.add_argument("--out-json")
    b.add_argument("--samples", help="comma-separated 1-based sample indices for input bounds")
    b.set_defaults(func=cmd_crb)

    m = sub.add_parser("bench", help="Monte Carlo SNR sweep")
    m.add_argument("scenario")
    m.add_argument("--out", required=True)
    m.add_argument("--formats", default="csv,json,svg")
    m.set_defaults(func=cmd_bench)

    d = sub.add_parser("demo", help="built-in reference scenarios")
    d.add_argument("example", choices=["example1", "example2"])
    d.add_argument("--noiseless", action="store_true")
    d.add_argument("--snr", type=float, default=50.0)
    d.add_argument("--seed", type=int, default=0)
    d.set_defaults(func=cmd_demo)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"scsid: error: {exc}", file=sys.stderr)
        return 2
    except (ScsError, ValueError, OSError) as exc:
        print(f"scsid: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
