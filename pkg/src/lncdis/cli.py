"""Command-line entry point.

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__, cnn, persist, synth
from .config import ConfigError, PipelineConfig, format_config, load_config, parse_overrides
from .data import load_associations, load_dag
from .errors import DataError, NumericalError
from .evaluation import (
    Context,
    FittedModel,
    Inputs,
    fit_full,
    label_features,
    rank_candidates,
    run_cv_pipeline,
    score_matrix,
    score_pairs,
    sweep_gbdt,
)
from .similarity import write_matrix_csv


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = _Parser(prog="lncdis", description=__doc__.splitlines()[0], formatter_class=fmt)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, help_text, data=True, config=True, out=True):
        p = sub.add_parser(name, help=help_text, description=help_text, formatter_class=fmt)
        if data:
            p.add_argument("--ld", required=True, help="lncRNA<TAB>disease associations")
            p.add_argument("--md", required=True, help="miRNA<TAB>disease associations")
            p.add_argument("--ml", required=True, help="lncRNA<TAB>miRNA associations")
            p.add_argument("--dag", required=True, help="child<TAB>parent disease ontology edges")
        if config:
            p.add_argument("--config", help="key = value configuration file")
            p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="config override (repeatable)")
            p.add_argument("--seed", type=int, help="master seed (overrides config)")
            p.add_argument("--folds", type=int, help="number of CV folds (overrides config)")
        if out:
            p.add_argument("--out", required=True, help="output directory (created if absent)")
        return p

    add("similarity", "write disease/lncRNA similarity matrices as CSV")
    add("complete", "write the completed lncRNA-disease matrix as CSV")
    add("cv", "run k-fold cross-validation and write metrics and curves")
    add("train", "fit the network and tree ensemble on all data and save both")

    p = add("predict", "score lncRNA-disease pairs with saved models")
    p.add_argument("--models", required=True, help="directory written by 'train'")
    p.add_argument("--pairs", required=True, help="lncRNA<TAB>disease pairs to score")

    p = add("rank", "top-k candidate lncRNAs per disease among unobserved pairs")
    p.add_argument("--models", help="directory written by 'train' (fits a model when omitted)")
    p.add_argument("--disease", help="rank only this disease (all diseases when omitted)")
    p.add_argument("--top", type=int, default=10, help="candidates per disease")

    p = add("sweep", "mean CV AUC over a grid of tree counts and depths")
    p.add_argument("--trees", type=_int_list, default=[100, 300, 500], help="comma-separated tree counts")
    p.add_argument("--depths", type=_int_list, default=[5, 10, 15], help="comma-separated maximum depths")

    p = add("gradcheck", "compare analytic and finite-difference network gradients", data=False, config=False, out=False)
    p.add_argument("--seed", type=int, default=0, help="seed for parameters and data")
    p.add_argument("--width", type=int, default=64, help="embedding width F of the test input")
    p.add_argument("--batch", type=int, default=4, help="samples in the test batch")
    p.add_argument("--delta", type=float, default=1e-4, help="L2 strength")
    p.add_argument("--tolerance", type=float, default=1e-4, help="exit 3 above this error")

    p = add("synth", "write planted-block synthetic data", data=False, config=False)
    for key, value in synth.ACCEPTANCE.items():
        p.add_argument(f"--{key.replace('_', '-')}", dest=key, type=type(value), default=value)
    return parser


def _resolve_config(args) -> PipelineConfig:
    cfg = load_config(args.config) if args.config else PipelineConfig()
    cfg = parse_overrides(args.set, cfg)
    if args.seed is not None:
        cfg = replace(cfg, master_seed=args.seed)
    if args.folds is not None:
        try:
            cfg = replace(cfg, folds=args.folds)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    return cfg


def _load_inputs(args) -> Inputs:
    ld = load_associations(args.ld, "lncRNA", "disease")
    md = load_associations(args.md, "miRNA", "disease")
    lm = load_associations(args.ml, "lncRNA", "miRNA")
    return Inputs.align(ld, md, lm, load_dag(args.dag))


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_config(cfg: PipelineConfig, out: Path) -> None:
    text = format_config(cfg)
    (out / "config.txt").write_text(text, encoding="utf-8")
    sys.stderr.write("# resolved configuration\n" + text)


def cmd_similarity(args, cfg, out):
    inputs = _load_inputs(args)
    ctx = Context.build(inputs, cfg)
    feats = label_features(inputs.ld, ctx, cfg)
    lnc, dis = inputs.ld.rows.names, inputs.ld.cols.names
    for name, sim, names in (
        ("disease_semantic", ctx.semantic, dis),
        ("lncrna_functional", feats.lfs, lnc),
        ("gip_lncrna", feats.gip_l, lnc),
        ("gip_disease", feats.gip_d, dis),
        ("fused_lncrna", feats.fused_l, lnc),
        ("fused_disease", feats.fused_d, dis),
    ):
        write_matrix_csv(out / f"{name}.csv", names, sim.values)


def cmd_complete(args, cfg, out):
    inputs = _load_inputs(args)
    ctx = Context.build(inputs, cfg)
    feats = label_features(inputs.ld, ctx, cfg)
    for name, mat in (("lmd", ctx.lmd), ("ld_new", feats.ld_new)):
        write_matrix_csv(out / f"{name}.csv", mat.rows.names, mat.values, mat.cols.names)


def write_metrics(result, path: Path) -> None:
    lines = ["fold\tauc\taupr\tacc\tpre\tf1"]
    for i, rep in enumerate(result.folds):
        lines.append("\t".join([str(i), *(f"{v:.6f}" for v in rep.values())]))
    lines.append("\t".join(["mean", *(f"{v:.6f}" for v in result.mean.values())]))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _write_points(path: Path, header: str, points) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for x, y in points:
            fh.write(f"{x:.12g},{y:.12g}\n")


def cmd_cv(args, cfg, out):
    result = run_cv_pipeline(_load_inputs(args), cfg)
    write_metrics(result, out / "metrics.tsv")
    curves = out / "curves"
    curves.mkdir(exist_ok=True)
    for i, rep in enumerate(result.folds):
        _write_points(curves / f"fold{i}_roc.csv", "fpr,tpr", rep.roc_points)
        _write_points(curves / f"fold{i}_pr.csv", "recall,precision", rep.pr_points)
    print((out / "metrics.tsv").read_text(encoding="utf-8"), end="")


def cmd_train(args, cfg, out):
    model, _ = fit_full(_load_inputs(args), cfg)
    persist.save_network(model.network, out / "cnn.json")
    persist.save_ensemble(model.ensemble, out / "gbdt.json")


def _load_model(models_dir) -> FittedModel:
    models = Path(models_dir)
    return FittedModel(persist.load_network(models / "cnn.json"), persist.load_ensemble(models / "gbdt.json"))


def _model_and_features(args, cfg, inputs):
    if getattr(args, "models", None):
        model = _load_model(args.models)
        feats = label_features(inputs.ld, Context.build(inputs, cfg), cfg)
        if model.network.spec.input_shape != (2, feats.builder.width):
            raise DataError(
                f"saved network expects width {model.network.spec.input_shape[1]}, data gives {feats.builder.width}"
            )
        return model, feats
    return fit_full(inputs, cfg)


def cmd_predict(args, cfg, out):
    inputs = _load_inputs(args)
    model, feats = _model_and_features(args, cfg, inputs)
    pair_matrix = load_associations(args.pairs, "lncRNA", "disease")
    pairs = [
        (inputs.ld.rows.position(pair_matrix.rows.names[r]), inputs.ld.cols.position(pair_matrix.cols.names[c]))
        for r, c in pair_matrix.positives()
    ]
    scores = score_pairs(model, feats.builder, pairs)
    with open(out / "predictions.tsv", "w", encoding="utf-8") as fh:
        fh.write("lncRNA\tdisease\tscore\n")
        for (i, j), s in zip(pairs, scores):
            fh.write(f"{inputs.ld.rows.names[i]}\t{inputs.ld.cols.names[j]}\t{s:.6f}\n")


def cmd_rank(args, cfg, out):
    if args.top < 1:
        raise UsageError("--top must be at least 1")
    inputs = _load_inputs(args)
    model, feats = _model_and_features(args, cfg, inputs)
    scores = score_matrix(model, feats, inputs.ld)
    diseases = [args.disease] if args.disease else list(inputs.ld.cols.names)
    with open(out / "rankings.tsv", "w", encoding="utf-8") as fh:
        fh.write("rank\tlncRNA\tdisease\tscore\n")
        for disease in diseases:
            label = inputs.ld.cols.names[inputs.ld.cols.position(disease)]
            for rank, (lnc, s) in enumerate(rank_candidates(inputs.ld, scores, disease, args.top), start=1):
                fh.write(f"{rank}\t{lnc}\t{label}\t{s:.6f}\n")


def cmd_sweep(args, cfg, out):
    grid = [(t, d) for t in args.trees for d in args.depths]
    rows = sweep_gbdt(_load_inputs(args), cfg, grid)
    lines = ["num_trees\tmax_depth\tmean_auc"] + [f"{r.num_trees}\t{r.max_depth}\t{r.mean_auc:.6f}" for r in rows]
    (out / "sweep.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    print("\n".join(lines))


def cmd_gradcheck(args):
    rng = np.random.default_rng(args.seed)
    spec = cnn.NetworkSpec((2, args.width))
    params = cnn.init_params(spec, args.seed)
    for name in ("conv_b", "hidden_b", "out_b"):
        params.tensors[name] = rng.normal(0.0, 0.1, size=params[name].shape)
    x = rng.random((args.batch, 2, args.width))
    y = (rng.random(args.batch) < 0.5).astype(float)
    err = cnn.gradient_check(params, x, y, delta=args.delta, seed=args.seed)
    print(f"{err:.3e}")
    if not err < args.tolerance:
        raise NumericalError(f"gradient check error {err:.3e} exceeds {args.tolerance:g}")


def cmd_synth(args, out):
    params = {k: getattr(args, k) for k in synth.ACCEPTANCE}
    paths = synth.generate(**params).write(out)
    for name, path in paths.items():
        print(f"{name}\t{path}")


COMMANDS = {
    "similarity": cmd_similarity,
    "complete": cmd_complete,
    "cv": cmd_cv,
    "train": cmd_train,
    "predict": cmd_predict,
    "rank": cmd_rank,
    "sweep": cmd_sweep,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        if args.command == "gradcheck":
            cmd_gradcheck(args)
        elif args.command == "synth":
            cmd_synth(args, _outdir(args))
        else:
            cfg = _resolve_config(args)
            out = _outdir(args)
            _write_config(cfg, out)
            COMMANDS[args.command](args, cfg, out)
    except (UsageError, ConfigError) as exc:
        print(f"lncdis: error: {exc}", file=sys.stderr)
        return 1
    except (DataError, OSError) as exc:
        print(f"lncdis: data error: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, FloatingPointError) as exc:
        print(f"lncdis: numerical failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
