"""``posot`` command line: featurize, fit-ot, transport, train, evaluate, experiment, synth.

Exit status is 0 on success, 1 on runtime failures (solver or numerical
errors) and 2 on usage or validation failures (bad flags, config, or input
files).
"""

import argparse
import json
import logging
import sys
from collections import Counter
from pathlib import Path

import numpy as np

from .bundle import ModelBundle, dump_json, read_json, write_atomic
from .config import featurize_paths, load_config, load_table
from .corpus import feature_csv_text
from .errors import ConfigError, ConvergenceError, ParseError, PosotError
from .eval import FeatureTable, SynthCorpusSpec, auroc, generate_synthetic_corpus, macro_f1
from .models import CLASSIFIERS, train_classifier
from .ot import AdaptationModel, fit_adaptation, transform
from .ot.mapping import MODEL_FORMAT, MODEL_VERSION
from .preprocess import apply_robust_scaler, fit_robust_scaler, oversample

log = logging.getLogger("posot")

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2


class UsageError(PosotError):
    """Bad invocation detected after argument parsing."""


def _existing(path):
    p = Path(path)
    if not p.exists():
        raise UsageError(f"no such file or directory: {p}")
    return p


def _table(path, segment_len=25):
    return load_table(_existing(path), segment_len)


def _write_table(table, out):
    text = feature_csv_text(table.to_samples())
    if out is None:
        sys.stdout.write(text)
    else:
        write_atomic(out, text)


# ------------------------------------------------------------------ commands

def cmd_featurize(args):
    seg = None if args.segment_len == 0 else args.segment_len
    paths = [_existing(p) for p in args.inputs]
    fmt = None if args.format == "auto" else args.format
    samples = featurize_paths(paths, fmt=fmt, segment_len=seg, speaker=args.speaker)
    if not samples:
        raise UsageError("no samples: no full segment could be extracted from the inputs")
    text = feature_csv_text(samples)
    if args.out is None:
        sys.stdout.write(text)
    else:
        write_atomic(args.out, text)
        counts = Counter((s.language or "-", s.label) for s in samples)
        langs = sorted({k[0] for k in counts})
        print(f"{'language':<12}{'healthy':>9}{'aphasic':>9}{'unlabeled':>11}{'total':>8}")
        for lang in langs:
            row = [counts[(lang, lab)] for lab in ("healthy", "aphasic", "unlabeled")]
            print(f"{lang:<12}{row[0]:>9}{row[1]:>9}{row[2]:>11}{sum(row):>8}")
    return EXIT_OK


def cmd_fit_ot(args):
    src = _table(args.source).X
    tgt = _table(args.target).X
    model = fit_adaptation(src, tgt, args.method, reg=args.reg, mu=args.mu,
                           max_iter=args.max_iter, tol=args.tol, k_oos=args.k_oos,
                           cost_normalization=args.cost_normalization)
    write_atomic(args.out, dump_json(model.to_dict()))
    print(f"transport cost: {model.objective_value:.12g}")
    return EXIT_OK


def cmd_transport(args):
    model = AdaptationModel.from_dict(read_json(_existing(args.model), MODEL_FORMAT, MODEL_VERSION))
    table = _table(args.input)
    mapped = FeatureTable(transform(model, table.X).reshape(table.X.shape), table.subject,
                          table.label, table.accent, table.language)
    _write_table(mapped, args.out)
    return EXIT_OK


def cmd_train(args):
    table = _table(args.input).labeled()
    y = table.y
    if np.unique(y).size != 2:
        raise UsageError("training needs both healthy and aphasic rows")
    adaptation = None
    X = table.X
    if args.adaptation is not None:
        adaptation = AdaptationModel.from_dict(
            read_json(_existing(args.adaptation), MODEL_FORMAT, MODEL_VERSION))
    params = json.loads(args.params) if args.params else None
    scaler = fit_robust_scaler(X)
    Xb, yb = oversample(apply_robust_scaler(scaler, X), y, k=args.smote_k, seed=args.seed)
    model = train_classifier(args.classifier, Xb, yb, seed=args.seed, params=params)
    bundle = ModelBundle(args.classifier, scaler, model, adaptation,
                         {"seed": args.seed, "smote_k": args.smote_k, "n_train": int(y.size),
                          "params": params or {}})
    bundle.save(args.out)
    print(f"trained {args.classifier} on {y.size} rows ({int(y.sum())} aphasic)")
    return EXIT_OK


def cmd_evaluate(args):
    bundle = ModelBundle.load(_existing(args.bundle))
    table = _table(args.input).labeled()
    if len(table) == 0:
        raise UsageError("no labeled rows to evaluate")
    y = table.y
    result = {"n": int(y.size), "macro_f1": macro_f1(y, bundle.predict(table.X)),
              "auroc": auroc(y, bundle.score(table.X)) if 0 < y.sum() < y.size else None}
    sys.stdout.write(dump_json(result))
    return EXIT_OK


def cmd_experiment(args):
    from .experiment import run_experiment, write_report

    cfg = load_config(_existing(args.config))
    out_dir = Path(args.output_dir) if args.output_dir else cfg.output_dir
    report = run_experiment(cfg, workers=args.workers)
    write_report(report, out_dir)
    sys.stdout.write(report.to_text())
    return EXIT_OK


def cmd_synth(args):
    if args.config is not None:
        cfg = load_config(_existing(args.config))
        if cfg.synthetic is None:
            raise UsageError(f"{args.config} has no synthetic corpus spec")
        spec = cfg.synthetic
    else:
        try:
            spec = SynthCorpusSpec.from_dict(json.loads(_existing(args.spec).read_text()))
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"{args.spec}: {exc}") from None
    if args.seed is not None:
        spec = spec.with_seed(args.seed)
    data = generate_synthetic_corpus(spec)
    out = Path(args.out_dir)
    for name, table in data.pools().items():
        write_atomic(out / f"{name}.csv", feature_csv_text(table.to_samples()))
        print(f"{name}: {len(table)} rows")
    return EXIT_OK


# ------------------------------------------------------------------ parser

def _positive_int(s):
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _nonneg_int(s):
    v = int(s)
    if v < 0:
        raise argparse.ArgumentTypeError("must be a nonnegative integer")
    return v


def _positive_float(s):
    v = float(s)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be a positive number")
    return v


def build_parser():
    p = argparse.ArgumentParser(prog="posot", description="Cross-lingual POS-feature transfer "
                                "with optimal transport.")
    p.add_argument("-v", "--verbose", action="count", default=0, help="more log output on stderr")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    f = sub.add_parser("featurize", help="transcripts to a feature CSV")
    f.add_argument("inputs", nargs="+", help="transcript files or directories")
    f.add_argument("--format", choices=("auto", "conllu", "chat"), default="auto",
                   help="input format; auto picks by suffix (.cha = chat)")
    f.add_argument("--segment-len", type=_nonneg_int, default=25,
                   help="utterances per segment; 0 keeps whole transcripts (default 25)")
    f.add_argument("--speaker", default="PAR", help="CHAT speaker code to keep (default PAR)")
    f.add_argument("--out", help="output CSV (default: stdout)")
    f.set_defaults(func=cmd_featurize)

    o = sub.add_parser("fit-ot", help="fit a transport map from one feature cloud onto another")
    o.add_argument("--source", required=True,
                   help="CSV of the points to be mapped (e.g. the low-resource language)")
    o.add_argument("--target", required=True,
                   help="CSV of the points mapped onto (e.g. the training language)")
    o.add_argument("--method", choices=("emd", "sinkhorn", "gaussian"), default="emd")
    o.add_argument("--reg", type=_positive_float, default=3.0,
                   help="entropic regularization for sinkhorn (default 3)")
    o.add_argument("--cost-normalization", choices=("max", "mean", "median"), default=None,
                   help="divide the sinkhorn cost by this statistic (default: raw cost)")
    o.add_argument("--mu", type=float, default=1.0, help="gaussian map: transport weight")
    o.add_argument("--max-iter", type=_positive_int, default=20,
                   help="gaussian map: alternation ceiling (default 20)")
    o.add_argument("--tol", type=_positive_float, default=1e-5,
                   help="gaussian map: stop when images move less than this")
    o.add_argument("--k-oos", type=_positive_int, default=1,
                   help="neighbours used for out-of-sample points (default 1)")
    o.add_argument("--out", required=True, help="output model JSON")
    o.set_defaults(func=cmd_fit_ot)

    t = sub.add_parser("transport", help="apply a fitted map to a feature CSV")
    t.add_argument("--model", required=True, help="adaptation model JSON from fit-ot")
    t.add_argument("--input", required=True, help="feature CSV to map")
    t.add_argument("--out", help="output CSV (default: stdout)")
    t.set_defaults(func=cmd_transport)

    r = sub.add_parser("train", help="scale, oversample and train a classifier bundle")
    r.add_argument("--input", required=True, help="labeled feature CSV")
    r.add_argument("--classifier", choices=CLASSIFIERS, default="SVM")
    r.add_argument("--params", help='JSON object overriding defaults, e.g. \'{"C": 1.0}\'')
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--smote-k", type=_positive_int, default=3)
    r.add_argument("--adaptation", help="adaptation model applied to inputs at evaluation time")
    r.add_argument("--out", required=True, help="output bundle JSON")
    r.set_defaults(func=cmd_train)

    e = sub.add_parser("evaluate", help="score a bundle on a labeled feature CSV")
    e.add_argument("--bundle", required=True)
    e.add_argument("--input", required=True)
    e.set_defaults(func=cmd_evaluate)

    x = sub.add_parser("experiment", help="run a configured regime grid")
    x.add_argument("config", help="experiment config JSON")
    x.add_argument("--workers", type=_positive_int, default=None,
                   help="parallel regime rows (default: config value, else available cores)")
    x.add_argument("--output-dir", help="override the config's output directory")
    x.set_defaults(func=cmd_experiment)

    s = sub.add_parser("synth", help="write a synthetic bilingual corpus as feature CSVs")
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--config", help="experiment config holding a synthetic spec")
    g.add_argument("--spec", help="JSON file with a bare synthetic spec")
    s.add_argument("--seed", type=int, default=None, help="override the synthetic spec seed")
    s.add_argument("--out-dir", required=True)
    s.set_defaults(func=cmd_synth)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s",
                        level=logging.WARNING - 10 * min(args.verbose, 2))
    try:
        return args.func(args)
    except ConfigError as exc:
        for problem in exc.problems:
            print(f"config error: {problem}", file=sys.stderr)
        return EXIT_USAGE
    except (UsageError, ParseError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConvergenceError, np.linalg.LinAlgError, ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
