"""Command-line interface.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 training
error. Logs go to stderr; all persisted outputs are deterministic for a
fixed seed and thread count.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from ._version import __version__
from .artifacts import config_hash, load_model, save_model, write_curve
from .errors import ConfigError, DataError, FrustraError
from .evaluation import (early_window_sweep, format_early_window_results,
                         write_early_window_results)
from .features import FeatureMatrix, build_matrix, read_matrix, tag_for_names, write_matrix
from .fileio import open_for_write, read_key_value_file
from .ingest import parse_events, read_schema, validate_corpus, write_events
from .labeling import RuleConfig, label_sessions, read_labeled, write_labeled
from .metrics import evaluate_scores, format_report, write_report
from .pipeline import (MODEL_FAMILIES, PipelineConfig, build_model,
                       check_feature_tag, run_pipeline)
from .sessions import read_sessions, sessionize, write_sessions
from .synth import default_mix, generate, parse_mix, write_manifest
from .transform import (SplitSpec, YeoJohnsonScaler, balanced_split, read_params,
                        write_params)

logger = logging.getLogger("frustra")


def _base_options(parser: argparse.ArgumentParser, suppress: bool) -> None:
    # registered on the main parser with real defaults and on every
    # subparser with SUPPRESS, so the flags work on either side of the
    # subcommand without clobbering each other
    parser.add_argument("--seed", type=int,
                        default=argparse.SUPPRESS if suppress else 0,
                        help="global random seed")
    parser.add_argument("--threads", type=int,
                        default=argparse.SUPPRESS if suppress else 0,
                        help="worker threads (0 = machine parallelism; "
                             "1 = strictest determinism)")
    parser.add_argument("-v", "--verbose", action="store_true",
                        default=argparse.SUPPRESS if suppress else False,
                        help="log stage progress")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="frustra",
                                     description="Clickstream frustration pipeline")
    parser.add_argument("--version", action="version", version=f"frustra {__version__}")
    parser.add_argument("--config", default=None,
                        help="pipeline config file (used by 'run')")
    _base_options(parser, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    _base_options(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_command(name: str, help_text: str) -> argparse.ArgumentParser:
        return sub.add_parser(name, help=help_text, parents=[common])

    p = add_command("ingest", "parse and normalize raw events")
    p.add_argument("--input", required=True)
    p.add_argument("--delimiter", default=",")
    p.add_argument("--schema", default=None, help="logical-to-actual column map file")
    p.add_argument("--stats-out", default=None)
    p.add_argument("--out", default=None, help="write normalized events here")

    p = add_command("sessionize", "group events into symbolized sessions")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)

    p = add_command("label", "apply frustration rules and truncate")
    p.add_argument("--input", required=True, help="sessions file")
    p.add_argument("--rules", default=None, help="rule thresholds (key=value file)")
    p.add_argument("--out", required=True)

    p = add_command("featurize", "extract the tabular feature matrix")
    p.add_argument("--input", required=True, help="labeled sessions file")
    p.add_argument("--timezone-offset-minutes", type=int, default=0)
    p.add_argument("--out", required=True)

    p = add_command("split", "balanced stratified train/val/test split")
    p.add_argument("--in", dest="input", required=True, help="feature matrix")
    p.add_argument("--train-frac", type=float, default=0.70)
    p.add_argument("--val-frac", type=float, default=0.15)
    p.add_argument("--test-frac", type=float, default=0.15)
    p.add_argument("--out-dir", required=True)

    p = add_command("transform", "fit or apply the power transform")
    tsub = p.add_subparsers(dest="transform_command", required=True)
    tfit = tsub.add_parser("fit")
    tfit.add_argument("--in", dest="input", required=True, help="training matrix")
    tfit.add_argument("--out", required=True, help="parameter file")
    tapply = tsub.add_parser("apply")
    tapply.add_argument("--in", dest="input", required=True)
    tapply.add_argument("--params", required=True)
    tapply.add_argument("--out", required=True)

    p = add_command("train", "train a classifier")
    p.add_argument("--model", required=True, choices=MODEL_FAMILIES)
    p.add_argument("--train", required=True)
    p.add_argument("--val", default=None)
    p.add_argument("--config", dest="model_config", default=None,
                   help="hyperparameters (key=value file)")
    p.add_argument("--out", required=True)

    p = add_command("eval", "evaluate an artifact on a dataset")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--report", required=True)

    p = add_command("early-window", "prefix-window sweep for sequence models")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True, help="labeled sessions file")
    p.add_argument("--windows", default="5,10,15,20,30")
    p.add_argument("--out", required=True)

    p = add_command("synth", "generate synthetic clickstream data")
    p.add_argument("--mix", default=None, help="archetype mix file (default: built-in mix)")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--manifest", required=True)

    add_command("run", "run the full pipeline from --config")
    return parser


def _meta(args, extra: dict | None = None) -> dict[str, str]:
    effective = {"command": args.command, "seed": args.seed, **(extra or {})}
    return {"config_hash": config_hash(effective), "tool_version": __version__}


def _cmd_ingest(args) -> int:
    schema = read_schema(args.schema) if args.schema else None
    events, stats = parse_events(args.input, schema, args.delimiter)
    summary = validate_corpus(events)
    if args.out:
        write_events(events, args.out)
    if args.stats_out:
        import json

        with open_for_write(args.stats_out) as handle:
            json.dump({"parse": stats.as_dict(), "corpus": {
                "total_events": summary.total_events,
                "distinct_sessions": summary.distinct_sessions,
                "timestamp_min_ms": summary.timestamp_min_ms,
                "timestamp_max_ms": summary.timestamp_max_ms,
                "action_histogram": summary.action_histogram,
            }}, handle, sort_keys=True, indent=1)
            handle.write("\n")
    print(f"rows read: {stats.rows_read}  accepted: {stats.rows_accepted}  "
          f"rejected: {stats.rows_rejected}  sessions: {summary.distinct_sessions}")
    return 0


def _cmd_sessionize(args) -> int:
    events, _ = parse_events(args.input)
    sessions = sessionize(events)
    write_sessions(sessions, args.out, _meta(args))
    print(f"sessions: {len(sessions)}")
    return 0


def _cmd_label(args) -> int:
    rules = RuleConfig.from_file(args.rules) if args.rules else RuleConfig()
    sessions = read_sessions(args.input)
    labeled, stats = label_sessions(sessions, rules)
    write_labeled(labeled, args.out, _meta(args))
    frustrated = sum(item.label for item in labeled)
    print(f"kept: {stats.kept}  dropped_short: {stats.dropped_short}  "
          f"dropped_long: {stats.dropped_long}  frustrated: {frustrated}")
    return 0


def _cmd_featurize(args) -> int:
    labeled = read_labeled(args.input)
    matrix = build_matrix(labeled, args.timezone_offset_minutes)
    write_matrix(matrix, args.out, _meta(args))
    print(f"rows: {matrix.n_rows}  features: {len(matrix.feature_names)}")
    return 0


def _cmd_split(args) -> int:
    matrix = read_matrix(args.input)
    spec = SplitSpec(args.train_frac, args.val_frac, args.test_frac, args.seed)
    split = balanced_split(matrix.labels, spec, ids=matrix.session_ids)
    out_dir = Path(args.out_dir)
    for name, idx in (("train", split.train_idx), ("val", split.val_idx),
                      ("test", split.test_idx)):
        write_matrix(matrix.select(idx), out_dir / f"{name}.csv", _meta(args))
        print(f"{name}: {idx.shape[0]} rows")
    return 0


def _cmd_transform(args) -> int:
    if args.transform_command == "fit":
        matrix = read_matrix(args.input)
        scaler = YeoJohnsonScaler().fit(matrix.X)
        write_params(scaler, matrix.feature_names, args.out, _meta(args))
        print(f"fitted {scaler.n_features_in_} features "
              f"({int(scaler.zero_variance_.sum())} zero-variance)")
    else:
        matrix = read_matrix(args.input)
        scaler, names = read_params(args.params)
        if tuple(names) != tuple(matrix.feature_names):
            raise DataError("transform parameters were fitted on different features")
        transformed = FeatureMatrix(session_ids=matrix.session_ids, labels=matrix.labels,
                                    X=scaler.transform(matrix.X),
                                    feature_names=matrix.feature_names)
        write_matrix(transformed, args.out, _meta(args))
        print(f"transformed {matrix.n_rows} rows")
    return 0


def _cmd_train(args) -> int:
    params = {}
    if args.model_config:
        params = read_key_value_file(args.model_config)
    model = build_model(args.model, params, args.seed, args.threads)
    extra = {"model": args.model, **{k: str(v) for k, v in params.items()}}
    if args.model == "lstm":
        train = read_labeled(args.train)
        sequences = [item.truncated_symbols for item in train]
        labels = [item.label for item in train]
        if args.val:
            val = read_labeled(args.val)
            model.fit(sequences, labels,
                      [item.truncated_symbols for item in val],
                      [item.label for item in val])
        else:
            model.fit(sequences, labels)
        tag = None
    else:
        train = read_matrix(args.train)
        if args.val:
            val = read_matrix(args.val)
            model.fit(train.X, train.labels, val.X, val.labels)
        else:
            model.fit(train.X, train.labels)
        tag = tag_for_names(tuple(train.feature_names))
    meta = _meta(args, extra)
    save_model(model, args.out, config_hash_value=meta["config_hash"], feature_tag=tag)
    start = 0 if args.model == "logreg" else 1
    if getattr(model, "train_curve_", None):
        write_curve(model.train_curve_, f"{args.out}.train_curve.csv", start, meta)
    if getattr(model, "val_curve_", None):
        write_curve(model.val_curve_, f"{args.out}.val_curve.csv", start, meta)
    print(f"trained {args.model}; artifact: {args.out}")
    return 0


def _cmd_eval(args) -> int:
    model, artifact_meta = load_model(args.model)
    if artifact_meta["kind"] == "lstm":
        labeled = read_labeled(args.data)
        probs = model.predict_proba([item.truncated_symbols for item in labeled])
        labels = [item.label for item in labeled]
    else:
        matrix = read_matrix(args.data)
        check_feature_tag(artifact_meta, matrix.feature_names)
        probs = model.predict_proba(matrix.X)
        labels = matrix.labels
    report = evaluate_scores(labels, probs)
    write_report(report, args.report, _meta(args, {"model": artifact_meta["kind"]}),
                 title=f"{artifact_meta['kind']} evaluation")
    print(format_report(report), end="")
    return 0


def _cmd_early_window(args) -> int:
    model, artifact_meta = load_model(args.model)
    if artifact_meta["kind"] != "lstm":
        raise DataError("early-window sweeps require a sequence model artifact")
    labeled = read_labeled(args.data)
    windows = tuple(int(w) for w in args.windows.split(","))
    results = early_window_sweep(model, [item.truncated_symbols for item in labeled],
                                 [item.label for item in labeled], windows)
    write_early_window_results(results, args.out, _meta(args, {"windows": args.windows}))
    print(format_early_window_results(results), end="")
    return 0


def _cmd_synth(args) -> int:
    specs = parse_mix(args.mix) if args.mix else default_mix()
    events, manifest = generate(specs, args.n, args.seed)
    write_events(events, args.out)
    write_manifest(manifest, args.manifest, _meta(args, {"n": str(args.n)}))
    frustrated = sum(entry.intended_label for entry in manifest)
    print(f"sessions: {len(manifest)}  events: {len(events)}  "
          f"intended frustrated: {frustrated}")
    return 0


def _cmd_run(args) -> int:
    if not args.config:
        raise ConfigError("'run' requires --config")
    config = PipelineConfig.from_file(args.config)
    paths = run_pipeline(config)
    print(f"pipeline complete; report: {paths['report']}")
    return 0


_COMMANDS = {
    "ingest": _cmd_ingest,
    "sessionize": _cmd_sessionize,
    "label": _cmd_label,
    "featurize": _cmd_featurize,
    "split": _cmd_split,
    "transform": _cmd_transform,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "early-window": _cmd_early_window,
    "synth": _cmd_synth,
    "run": _cmd_run,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(stream=sys.stderr,
                        level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _COMMANDS[args.command](args)
    except FrustraError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
