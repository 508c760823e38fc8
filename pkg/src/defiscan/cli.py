"""Command-line front end: fetch, disassemble, featurize, explore, evaluate, stats, report.

Settings resolve as config file < environment (``DEFISCAN_<KEY>``) < flags.
The config file is plain ``key = value`` lines; ``#`` starts a comment.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .bytecode import disassemble, format_disassembly, parse_hex, to_jsonl
from .errors import DefiscanError, FetchError, MalformedInputError, SchemaMismatchError
from .evaluation import (ExperimentConfig, Family, best_report, explore, format_reports, ladder,
                         run_experiment)
from .features import featurize, load_matrix, load_published, save_matrix
from .ingest import (Label, fetch_bytecode, load_corpus, load_token_list, merge_lists,
                     save_corpus, summarize)
from .stats import class_similarity, format_mean_table, format_similarity, opcode_mean_table

log = logging.getLogger("defiscan")

EXIT_OK, EXIT_USER, EXIT_ENV = 0, 1, 2
ENV_PREFIX = "DEFISCAN_"

DEFAULTS = {
    "endpoint": None,
    "cache_dir": ".defiscan-cache",
    "seed": 0,
    "iterations": 100,
    "output_dir": ".",
    "format": "table",
    "jobs": 1,
}
# Default for `stats`: the ten opcodes of the final top-10 forest model.
FINAL_MODEL_OPCODES = ("CALLDATASIZE", "LT", "CALLVALUE", "SWAP3", "EXP", "CALLER", "SHR",
                       "NUMBER", "PUSH5", "ADDRESS")


@dataclass(frozen=True)
class RunConfig:
    endpoint: str | None
    cache_dir: Path
    base_seed: int
    iterations: int
    output_dir: Path
    format: str
    jobs: int = 1

    def __post_init__(self):
        if self.base_seed < 0:
            raise ValueError("seed must be non-negative")
        if self.iterations < 1:
            raise ValueError("iterations must be positive")
        if self.format not in ("json", "table", "csv"):
            raise ValueError(f"unknown format {self.format!r}")


def read_config_file(path) -> dict[str, str]:
    values = {}
    for n, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise MalformedInputError(f"{path}: line {n}: expected key = value", line=n)
        key, value = line.split("=", 1)
        values[key.strip().lower().replace("-", "_")] = value.strip()
    return values


def resolve_config(args: argparse.Namespace, environ=os.environ) -> RunConfig:
    merged = dict(DEFAULTS)
    if getattr(args, "config", None):
        merged.update(read_config_file(args.config))
    for key in DEFAULTS:
        env = environ.get(ENV_PREFIX + key.upper())
        if env:
            merged[key] = env
    for key in DEFAULTS:
        flag = getattr(args, key, None)
        if flag is not None:
            merged[key] = flag
    return RunConfig(
        endpoint=merged["endpoint"],
        cache_dir=Path(merged["cache_dir"]),
        base_seed=int(merged["seed"]),
        iterations=int(merged["iterations"]),
        output_dir=Path(merged["output_dir"]),
        format=str(merged["format"]),
        jobs=int(merged["jobs"]),
    )


def parse_feature_list(spec: str | None) -> tuple[str, ...] | None:
    """Comma-separated mnemonics, ``@file`` with one per line, or None/'all'."""
    if spec is None or spec.strip().lower() == "all":
        return None
    if spec.startswith("@"):
        text = Path(spec[1:]).read_text()
        items = [t.strip() for t in text.replace(",", "\n").splitlines()]
    else:
        items = [t.strip() for t in spec.split(",")]
    return tuple(t.upper() for t in items if t)


def read_features(path):
    """Native feature CSV, or a foreign export through the column mapping."""
    with open(path, newline="") as fh:
        header = next(csv.reader(fh), [])
    if header[:2] == ["address", "label"]:
        return load_matrix(path)
    return load_published(path)


def _emit(text: str, out: Path | None, name: str):
    if out is None:
        print(text)
        return
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(text + "\n")
    log.info("wrote %s", out / name)


# ---------------------------------------------------------------- commands


def cmd_fetch(args, cfg: RunConfig) -> int:
    violations = load_token_list(args.violations, Label.VIOLATION)
    legitimate = load_token_list(args.legitimate, Label.LEGITIMATE) if args.legitimate else []
    corpus = merge_lists(violations, legitimate)
    report = fetch_bytecode(corpus, cfg.endpoint, cfg.cache_dir, workers=args.workers)
    out = Path(args.out) if args.out else cfg.output_dir / "corpus.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    save_corpus(report.corpus, out)
    print(summarize(report.corpus, report.errors))
    print(f"cache hits: {report.cache_hits}, network calls: {report.network_calls}, "
          f"empty code: {len(report.empty)}")
    for err in report.errors:
        print(f"fetch failed: {err}", file=sys.stderr)
    return EXIT_ENV if report.errors else EXIT_OK


def cmd_disassemble(args, cfg: RunConfig) -> int:
    src = args.code
    text = Path(src).read_text() if Path(src).is_file() else src
    ins = disassemble(parse_hex(text))
    print(to_jsonl(ins) if cfg.format == "json" else format_disassembly(ins))
    return EXIT_OK


def cmd_featurize(args, cfg: RunConfig) -> int:
    matrix = featurize(load_corpus(args.corpus))
    out = Path(args.out) if args.out else cfg.output_dir / "features.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    save_matrix(matrix, out)
    print(f"{matrix.n_rows} rows, schema of {len(matrix.schema)} opcodes -> {out}")
    return EXIT_OK


def cmd_explore(args, cfg: RunConfig) -> int:
    matrix = read_features(args.features_csv)
    ex = explore(matrix, alpha=args.alpha, strength=args.strength)
    ranked = ex.ranked()
    if cfg.format == "json":
        text = json.dumps({"alpha": args.alpha, "strength": args.strength,
                           "nonzero": len(ranked), "coefficients": ranked})
    elif cfg.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["feature", "coefficient"])
        w.writerows(ranked)
        text = buf.getvalue().rstrip()
    else:
        lines = [f"{len(ranked)} non-zero coefficients (alpha={args.alpha}, strength={args.strength})"]
        lines += [f"  {n:<14} {c:8.4f}" for n, c in ranked[: args.top]]
        text = "\n".join(lines)
    _emit(text, Path(args.out) if args.out else None, "explore." + ("txt" if cfg.format == "table" else cfg.format))
    return EXIT_OK


def _reports_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["model", "accuracy", "weighted_precision", "weighted_recall", "weighted_f1", "n_features"])
    for r in reports:
        m = r.mean_metrics
        w.writerow([r.config.name, m["accuracy"], m["weighted_precision"], m["weighted_recall"],
                    m["weighted_f1"], len(r.feature_names)])
    return buf.getvalue().rstrip()


def cmd_evaluate(args, cfg: RunConfig) -> int:
    matrix = read_features(args.features)
    family = Family(args.family)
    model_kw = {"n_trees": args.trees, "en_alpha": args.alpha, "en_strength": args.strength}
    if args.ladder:
        reports = ladder(matrix, family, cfg.base_seed, iterations=cfg.iterations,
                         n_jobs=cfg.jobs, **model_kw)
    else:
        subset = parse_feature_list(args.subset)
        if subset:
            for name in subset:
                if name not in matrix.schema:
                    raise SchemaMismatchError(name)
        config = ExperimentConfig(family=family, features=subset, iterations=cfg.iterations,
                                  base_seed=cfg.base_seed, name=args.name or "", **model_kw)
        reports = [run_experiment(matrix, config, n_jobs=cfg.jobs)]

    out = Path(args.out) if args.out else cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    for i, r in enumerate(reports):
        (out / f"report-{r.config.name or i}.json").write_text(r.to_json(indent=1) + "\n")
    if cfg.format == "json":
        print(json.dumps([r.to_dict() for r in reports]))
    elif cfg.format == "csv":
        print(_reports_csv(reports))
    else:
        print(format_reports(reports))
        if len(reports) > 1:
            print(f"\nbest by weighted F1: {best_report(reports).config.name}")
    return EXIT_OK


def cmd_stats(args, cfg: RunConfig) -> int:
    matrix = read_features(args.features)
    opcodes = parse_feature_list(args.opcodes) or FINAL_MODEL_OPCODES
    for op in opcodes:
        if op not in matrix.schema:
            raise SchemaMismatchError(op)
    table = opcode_mean_table(matrix, opcodes, equal_var=not args.welch)
    sim = class_similarity(matrix) if not args.no_similarity else None
    if cfg.format == "json":
        from dataclasses import asdict
        text = json.dumps({"mean_comparisons": [asdict(r) for r in table],
                           "similarity": sim.to_dict() if sim else None})
    elif cfg.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["opcode", "mean_violation", "sd_violation", "mean_legitimate", "sd_legitimate",
                    "t_value", "p_value", "cohens_d", "ci_low", "ci_high"])
        for r in table:
            w.writerow([r.opcode, r.mean_a, r.sd_a, r.mean_b, r.sd_b, r.t_value, r.p_value,
                        r.cohens_d, r.ci_low, r.ci_high])
        text = buf.getvalue().rstrip()
    else:
        text = format_mean_table(table)
        if sim:
            text += "\n\n" + format_similarity(sim)
    _emit(text, Path(args.out) if args.out else None, "stats." + ("txt" if cfg.format == "table" else cfg.format))
    return EXIT_OK


def cmd_report(args, cfg: RunConfig) -> int:
    files = sorted(Path(args.directory).glob("report-*.json"))
    if not files:
        raise MalformedInputError(f"no report-*.json files in {args.directory}")
    rows = []
    for f in files:
        d = json.loads(f.read_text())
        rows.append((d.get("name") or f.stem, d["mean_metrics"], len(d["feature_names"]),
                     d["ranked_importances"][:3]))
    if cfg.format == "json":
        print(json.dumps([{"name": n, "mean_metrics": m, "n_features": k, "top3": t} for n, m, k, t in rows]))
        return EXIT_OK
    print(f"{'model':<8} {'n':>4} {'acc':>7} {'prec':>7} {'rec':>7} {'f1':>7}  top features")
    for n, m, k, t in rows:
        print(f"{n:<8} {k:>4} {m['accuracy']:7.3f} {m['weighted_precision']:7.3f} "
              f"{m['weighted_recall']:7.3f} {m['weighted_f1']:7.3f}  {', '.join(x[0] for x in t)}")
    best = max(rows, key=lambda r: r[1]["weighted_f1"])
    print(f"best by weighted F1: {best[0]}")
    return EXIT_OK


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("run configuration")
    g.add_argument("--config", help="key=value file (lowest precedence)")
    g.add_argument("--endpoint", help=f"JSON-RPC URL (env {ENV_PREFIX}ENDPOINT)")
    g.add_argument("--cache-dir", dest="cache_dir", help="bytecode cache directory")
    g.add_argument("--seed", type=int, help="base seed (default 0)")
    g.add_argument("--iterations", type=int, help="under-sampling iterations (default 100)")
    g.add_argument("--format", choices=("json", "table", "csv"), help="stdout format (default table)")
    g.add_argument("--output-dir", dest="output_dir", help="directory for written artefacts")
    g.add_argument("--jobs", type=int, help="worker processes for experiment iterations")
    g.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="defiscan", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"defiscan {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("fetch", parents=[common], help="merge token lists and fetch bytecode")
    s.add_argument("violations", help="violations token list (CSV or JSON)")
    s.add_argument("legitimate", nargs="?", help="legitimate token list (CSV or JSON)")
    s.add_argument("--workers", type=int, default=4, help="concurrent RPC workers (default 4)")
    s.add_argument("--out", help="corpus CSV path (default <output-dir>/corpus.csv)")
    s.set_defaults(func=cmd_fetch)

    s = sub.add_parser("disassemble", parents=[common], help="disassemble hex bytecode")
    s.add_argument("code", help="hex string or path to a file containing one")
    s.set_defaults(func=cmd_disassemble)

    s = sub.add_parser("featurize", parents=[common], help="corpus CSV -> opcode feature CSV")
    s.add_argument("corpus")
    s.add_argument("--out", help="feature CSV path (default <output-dir>/features.csv)")
    s.set_defaults(func=cmd_featurize)

    s = sub.add_parser("explore", parents=[common], help="elastic-net feature exploration")
    s.add_argument("features_csv", metavar="features")
    s.add_argument("--alpha", type=float, default=0.001, help="L1/L2 mixing (default 0.001)")
    s.add_argument("--strength", type=float, default=1.0, help="overall penalty (default 1.0)")
    s.add_argument("--top", type=int, default=10)
    s.add_argument("--out", help="directory to write the result into")
    s.set_defaults(func=cmd_explore)

    s = sub.add_parser("evaluate", parents=[common], help="under-sampled experiments / ladders")
    s.add_argument("features")
    s.add_argument("--family", choices=[f.value for f in Family], default="forest")
    s.add_argument("--features", dest="subset", help="subset: A,B,C or @file (default all)")
    s.add_argument("--ladder", action="store_true", help="run the RF1-RF9 or LR1-LR7 ladder")
    s.add_argument("--trees", type=int, default=100)
    s.add_argument("--alpha", type=float, default=0.001, help="elastic-net mixing")
    s.add_argument("--strength", type=float, default=1.0, help="elastic-net penalty strength")
    s.add_argument("--name", help="label for a single experiment")
    s.add_argument("--out", help="report directory (default <output-dir>)")
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("stats", parents=[common], help="opcode mean comparisons and similarity")
    s.add_argument("features")
    s.add_argument("--opcodes", help="A,B,C or @file (default: the ten final-model opcodes)")
    s.add_argument("--welch", action="store_true", help="Welch instead of pooled t-test")
    s.add_argument("--no-similarity", action="store_true")
    s.add_argument("--out", help="directory to write the result into")
    s.set_defaults(func=cmd_stats)

    s = sub.add_parser("report", parents=[common], help="summarize report-*.json files")
    s.add_argument("directory")
    s.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        return args.func(args, cfg)
    except FetchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ENV
    except (DefiscanError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USER
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ENV


if __name__ == "__main__":
    sys.exit(main())
