"""Command-line interface.

Subcommands mirror the pipeline: build nets (`net`), prepare datasets
(`data`), compute and refine weights (`weights`), evaluate losses (`loss`),
and reproduce the experiments (`experiment`).  The QMC_DIRECTION_FILE
environment variable points at a full direction-number file when more than
the bundled 32 dimensions are needed.
"""

from __future__ import annotations

import argparse
import json
import sys


from . import netgen, oracle
from .data import DataSet, ingest_csv, ingest_mnist, synth_regression
from .experiments import ExperimentConfig, MnistConfig, minimizer_distance_curve, run_convergence, run_mnist
from .netgen import active_table, export_net, interlace, minimal_t, sobol_net
from .predict_loss import Predictor, loss_report, random_linear, random_mlp
from .weights import (
    assemble_weights,
    assemble_weights_streaming,
    extend_weights,
    load_weights,
    save_weights,
    weights_debug_dict,
)


def _build_net(s: int, m: int, alpha: int, base: int, t: int | None,
               direction_file: str | None):
    if base != 2:
        raise SystemExit("the bundled generator constructs base-2 Sobol nets only")
    table = active_table(direction_file)
    net = sobol_net(alpha * s, m, table=table)
    if alpha > 1:
        net = interlace(net, alpha)
    if t is not None:
        net = net.with_t(t)
    return net


def _add_net_args(p, with_t=True):
    p.add_argument("--s", type=int, required=True, help="dimension of the target cube")
    p.add_argument("--m", type=int, required=True, help="net has base^m points")
    p.add_argument("--alpha", type=int, default=1, help="digit interlacing order")
    p.add_argument("--base", type=int, default=2)
    p.add_argument("--direction-file", default=None,
                   help="Joe-Kuo direction numbers (default: bundled excerpt or QMC_DIRECTION_FILE)")
    if with_t:
        p.add_argument("--t", type=int, default=None, help="declare the net's t-value")


def _cmd_net_gen(args):
    net = _build_net(args.s, args.m, args.alpha, args.base, args.t, args.direction_file)
    export_net(net, args.out)
    print(f"wrote {net.n_points} points to {args.out} (+ sidecar)")


def _cmd_net_interlace(args):
    if args.alpha < 2:
        raise SystemExit("interlacing needs --alpha >= 2")
    _cmd_net_gen(args)


def _cmd_net_check_t(args):
    net = _build_net(args.s, args.m, args.alpha, args.base, None, args.direction_file)
    try:
        t = minimal_t(net, budget=args.budget)
    except netgen.TValueBudgetError as exc:
        raise SystemExit(f"unverifiable: {exc}") from exc
    bound = None
    if args.alpha > 1:
        base_t = minimal_t(
            sobol_net(args.alpha * args.s, args.m, table=active_table(args.direction_file)),
            budget=args.budget,
        )
        bound = netgen.interlacing_t_bound(base_t, args.s, args.alpha)
    payload = {"s": args.s, "m": args.m, "alpha": args.alpha, "t": t,
               "interlacing_bound": bound}
    print(json.dumps(payload))


def _cmd_data_synth(args):
    ds = synth_regression(args.seed, args.n, args.s)
    ds.save(args.out)
    print(f"wrote {ds.n} x {ds.s} synthetic dataset to {args.out}")


def _cmd_data_ingest_csv(args):
    ds = ingest_csv(args.input, args.s, scaling=args.scaling, header=args.header,
                    sidecar_path=args.sidecar)
    ds.save(args.out)
    print(f"ingested {ds.n} rows -> {args.out}")


def _cmd_data_ingest_idx(args):
    ds = ingest_mnist(args.images, args.labels, limit=args.limit)
    ds.save(args.out)
    print(f"ingested {ds.n} images -> {args.out}")


def _load_dataset(path: str) -> DataSet:
    return DataSet.load(path)


def _cmd_weights_compute(args):
    data = _load_dataset(args.data)
    net = _build_net(data.s, args.m, args.alpha, args.base, args.t, args.direction_file)
    validate = "force" if args.force else "strict"
    if args.oracle:
        if args.t is not None and args.nu <= args.m - args.t:
            ws = oracle.brute_force_weights(net, data, args.nu)
        else:
            ws = oracle.generic_weights_as_weightset(net, data, args.nu)
    elif args.chunk_size:
        def chunks(data=data, size=args.chunk_size):
            for lo in range(0, data.n, size):
                yield data.X[lo : lo + size], data.Y[lo : lo + size]

        ws = assemble_weights_streaming(net, chunks, args.nu, validate=validate)
    else:
        ws = assemble_weights(net, data, args.nu, method=args.method,
                              validate=validate, threads=args.threads)
    save_weights(ws, args.out, include_tables=not args.no_tables)
    print(f"wrote weights for {ws.n_points} net points to {args.out}")


def _cmd_weights_extend(args):
    data = _load_dataset(args.data)
    ws = load_weights(args.weights)
    net = _build_net(data.s, args.m, ws.alpha, ws.base, args.t, args.direction_file)
    validate = "force" if args.force else "strict"
    ws2 = extend_weights(ws, net, data, args.nu, validate=validate, threads=args.threads)
    save_weights(ws2, args.out, include_tables=not args.no_tables)
    print(f"extended to m={args.m}, nu={args.nu} -> {args.out}")


def _cmd_weights_inspect(args):
    ws = load_weights(args.weights)
    print(json.dumps(weights_debug_dict(ws), indent=2))


def _cmd_loss_eval(args):
    ws = load_weights(args.weights)
    with open(args.model, "r", encoding="ascii") as fh:
        model = Predictor.from_json(fh.read())
    net = _build_net(ws.s, ws.m, ws.alpha, ws.base, ws.t_used, args.direction_file)
    if args.data:
        data = _load_dataset(args.data)
        report = loss_report(model, data, net, ws).to_dict()
    else:
        from .predict_loss import compressed_loss

        report = {"approx": compressed_loss(model, net, ws), "cost_approx": ws.n_points}
    text = json.dumps(report, indent=2)
    if args.out:
        with open(args.out, "w", encoding="ascii") as fh:
            fh.write(text + "\n")
    print(text)


def _cmd_model_random(args):
    if args.kind == "linear":
        model = random_linear(args.s, args.seed, index=args.index)
    else:
        from .experiments import _mnist_layer_sizes

        model = random_mlp(_mnist_layer_sizes(args.kind, args.s), args.seed, index=args.index)
    with open(args.out, "w", encoding="ascii") as fh:
        fh.write(model.to_json() + "\n")
    print(f"wrote {args.kind} model to {args.out}")


def _cmd_experiment_regression(args):
    cfg = ExperimentConfig(
        seed=args.seed,
        n=args.n,
        s=args.s,
        alphas=tuple(int(a) for a in args.alphas.split(",")),
        nu_levels=tuple(int(v) for v in args.nu_levels.split(",")),
        sample_count=args.samples,
        mode=args.mode,
        threads=args.threads,
        out_prefix=args.out_prefix,
    )
    _, summary = run_convergence(cfg)
    print(json.dumps(summary["slopes"], indent=2))


def _cmd_experiment_mnist(args):
    cfg = MnistConfig(
        images_path=args.images,
        labels_path=args.labels,
        seed=args.seed,
        limit=args.limit,
        m=args.m,
        nu=args.nu,
        archs=tuple(args.archs.split(",")),
        sample_count=args.samples,
        threads=args.threads,
        out_prefix=args.out_prefix,
    )
    try:
        _, summary = run_mnist(cfg)
    except FileNotFoundError as exc:
        raise SystemExit(
            f"{exc}; download the MNIST IDX files (train-images-idx3-ubyte, "
            "train-labels-idx1-ubyte) and pass their paths"
        ) from exc
    print(json.dumps(summary["per_arch"], indent=2))


def _cmd_experiment_minimizer(args):
    rows = minimizer_distance_curve(
        args.seed, args.s, args.n, args.alpha,
        tuple(int(v) for v in args.m_list.split(",")), threads=args.threads
    )
    print(json.dumps(rows, indent=2))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qmcpress",
                                 description="dataset compression on weighted digital nets")
    sub = ap.add_subparsers(dest="command", required=True)

    p_net = sub.add_parser("net", help="construct and check digital nets")
    net_sub = p_net.add_subparsers(dest="subcommand", required=True)
    p = net_sub.add_parser("gen", help="generate a (possibly interlaced) Sobol net")
    _add_net_args(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_net_gen)
    p = net_sub.add_parser("interlace", help="generate an order-alpha interlaced net")
    _add_net_args(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_net_interlace)
    p = net_sub.add_parser("check-t", help="exhaustively verify the t-value")
    _add_net_args(p, with_t=False)
    p.add_argument("--budget", type=int, default=netgen.DEFAULT_T_BUDGET)
    p.set_defaults(func=_cmd_net_check_t)

    p_data = sub.add_parser("data", help="prepare datasets")
    data_sub = p_data.add_subparsers(dest="subcommand", required=True)
    p = data_sub.add_parser("synth", help="synthetic regression data")
    p.add_argument("--seed", type=int, default=20240)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--s", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_data_synth)
    p = data_sub.add_parser("ingest-csv", help="CSV rows of s features + response")
    p.add_argument("--input", required=True)
    p.add_argument("--s", type=int, required=True)
    p.add_argument("--scaling", choices=("none", "minmax"), default="none")
    p.add_argument("--header", action="store_true")
    p.add_argument("--sidecar", default=None, help="write scaling parameters here")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_data_ingest_csv)
    p = data_sub.add_parser("ingest-idx", help="MNIST IDX image/label files")
    p.add_argument("--images", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--limit", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_data_ingest_idx)

    p_w = sub.add_parser("weights", help="compute, refine, and inspect weights")
    w_sub = p_w.add_subparsers(dest="subcommand", required=True)
    p = w_sub.add_parser("compute")
    p.add_argument("--data", required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--nu", type=int, required=True)
    p.add_argument("--alpha", type=int, default=1)
    p.add_argument("--base", type=int, default=2)
    p.add_argument("--t", type=int, default=None)
    p.add_argument("--force", action="store_true",
                   help="apply the net formula without the nu <= m - t check")
    p.add_argument("--oracle", action="store_true", help="route through brute force")
    p.add_argument("--method", choices=("auto", "pairwise", "bucket"), default="auto")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--chunk-size", type=int, default=None,
                   help="stream the dataset through the single-pass-per-level path")
    p.add_argument("--no-tables", action="store_true", help="omit S/T tables from the file")
    p.add_argument("--direction-file", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_weights_compute)
    p = w_sub.add_parser("extend")
    p.add_argument("--weights", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--nu", type=int, required=True)
    p.add_argument("--t", type=int, default=None)
    p.add_argument("--force", action="store_true")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--no-tables", action="store_true")
    p.add_argument("--direction-file", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_weights_extend)
    p = w_sub.add_parser("inspect")
    p.add_argument("--weights", required=True)
    p.set_defaults(func=_cmd_weights_inspect)

    p_loss = sub.add_parser("loss", help="evaluate exact and compressed losses")
    loss_sub = p_loss.add_subparsers(dest="subcommand", required=True)
    p = loss_sub.add_parser("eval")
    p.add_argument("--weights", required=True)
    p.add_argument("--model", required=True, help="model JSON file")
    p.add_argument("--data", default=None, help="dataset for the exact loss")
    p.add_argument("--direction-file", default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_loss_eval)

    p_model = sub.add_parser("model", help="model file helpers")
    model_sub = p_model.add_subparsers(dest="subcommand", required=True)
    p = model_sub.add_parser("random")
    p.add_argument("--kind", choices=("linear", "shallow", "deep"), default="linear")
    p.add_argument("--s", type=int, required=True)
    p.add_argument("--seed", type=int, default=20240)
    p.add_argument("--index", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_model_random)

    p_exp = sub.add_parser("experiment", help="reproduce the experiments")
    exp_sub = p_exp.add_subparsers(dest="subcommand", required=True)
    p = exp_sub.add_parser("regression")
    p.add_argument("--seed", type=int, default=20240)
    p.add_argument("--n", type=int, default=100_000)
    p.add_argument("--s", type=int, default=6)
    p.add_argument("--alphas", default="1,2")
    p.add_argument("--nu-levels", default="2,3,4,5,6")
    p.add_argument("--samples", type=int, default=20)
    p.add_argument("--mode", choices=("fresh", "extend"), default="fresh")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out-prefix", default=None)
    p.set_defaults(func=_cmd_experiment_regression)
    p = exp_sub.add_parser("mnist")
    p.add_argument("--images", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--seed", type=int, default=20240)
    p.add_argument("--limit", type=int, default=None)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--nu", type=int, default=None)
    p.add_argument("--archs", default="shallow,deep")
    p.add_argument("--samples", type=int, default=20)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out-prefix", default=None)
    p.set_defaults(func=_cmd_experiment_mnist)
    p = exp_sub.add_parser("minimizer-distance")
    p.add_argument("--seed", type=int, default=20240)
    p.add_argument("--s", type=int, default=3)
    p.add_argument("--n", type=int, default=10_000)
    p.add_argument("--alpha", type=int, default=2)
    p.add_argument("--m-list", default="8,10,12")
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=_cmd_experiment_minimizer)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    args.func(args)
    return 0


if __name__ == "__main__":
    sys.exit(main())
