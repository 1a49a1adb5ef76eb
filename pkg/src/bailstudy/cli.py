"""Command-line interface.

Subcommands: ``synth`` (generate data), ``ingest`` (validate and encode a
CSV), ``run`` (full experiment), ``report`` (tables, distances, per-case
queries), ``importance`` (top-k gain table). Flags override values from the
JSON config files.

Exit codes: 0 success, 2 configuration or usage error, 3 data or contract
error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import errors
from .domain import ImputationMethod
from .ingest import encode_features, load_cases, load_schema, save_schema, write_matrix_csv
from .learners import ModelKind
from .runner import (
    CsvSource,
    ExperimentConfig,
    SyntheticSource,
    report_case,
    run_experiment,
)
from .synthgen import (
    GeneratorConfig,
    STATUS_STRINGS,
    generate,
    generator_schema,
    records,
    write_truth_csv,
)
from .ingest import write_cases_csv

_CONFIG_ERRORS = (errors.InvalidConfigError,)
_NUMERIC_ERRORS = (errors.NonFiniteError,)


def _cmd_synth(args: argparse.Namespace) -> int:
    doc = {}
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    if args.n_cases is not None:
        doc["n_cases"] = args.n_cases
    if args.seed is not None:
        doc["seed"] = args.seed
    if "n_cases" not in doc:
        raise errors.InvalidConfigError("n_cases is required (flag or config)")
    config = GeneratorConfig.from_json_dict(doc)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cases = generate(config)
    schema = generator_schema(config)
    write_cases_csv(records(cases), schema, out / "cases.csv", STATUS_STRINGS)
    write_truth_csv(cases, out / "truth.csv")
    save_schema(schema, out / "schema.json")
    n_det = sum(c.record.is_determinate for c in cases)
    print(f"wrote {len(cases)} cases to {out} ({n_det} determinate)")
    return 0


def _cmd_ingest(args: argparse.Namespace) -> int:
    schema = load_schema(args.schema)
    cases = load_cases(args.data, schema)
    matrix = encode_features(cases, schema)
    n_det = sum(c.is_determinate for c in cases)
    n_fta = sum(c.fta_observed for c in cases)
    print(
        f"{len(cases)} cases, {matrix.n_columns} encoded columns, "
        f"{n_det} determinate ({n_det / len(cases):.1%}), "
        f"{n_fta} observed FTA ({n_fta / len(cases):.1%})"
    )
    if args.encoded:
        write_matrix_csv(matrix, args.encoded)
        print(f"encoded matrix written to {args.encoded}")
    return 0


def _cmd_run(args: argparse.Namespace) -> int:
    with open(args.config, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if args.out is not None:
        doc["output_dir"] = args.out
    if args.seed is not None:
        doc["seed"] = args.seed
    if args.n_subsets is not None:
        doc["n_subsets"] = args.n_subsets
    if args.methods is not None:
        doc["methods"] = [m.strip() for m in args.methods.split(",") if m.strip()]
    if args.models is not None:
        doc["models"] = [m.strip() for m in args.models.split(",") if m.strip()]
    if "output_dir" not in doc:
        raise errors.InvalidConfigError("output_dir is required (flag or config)")
    config = ExperimentConfig.from_json_dict(doc)
    result = run_experiment(config)
    print(
        f"run complete: {result.grid_cells} grid cells "
        f"({result.trained_cells} trained, {result.reused_cells} reused) -> {result.run_dir}"
    )
    for row in result.mcc_table.rows():
        print(
            f"  {row['method']:>8s} {row['model']:>8s}  "
            f"determinate {row['determinate_mean']:7.2f} +- {row['determinate_std']:.2f}  "
            f"indeterminate {row['indeterminate_mean']:7.2f} +- {row['indeterminate_std']:.2f}"
        )
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    report_path = Path(args.run) / "report" / "report.json"
    if not report_path.exists():
        raise errors.UnknownCaseError(f"no report found under {args.run}")
    with open(report_path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    print("MCC by determinacy stratum (mean +- std over subsets):")
    for row in doc["mcc"]:
        print(
            f"  {row['method']:>8s} {row['model']:>8s}  "
            f"determinate {row['determinate_mean']:7.2f} +- {row['determinate_std']:.2f}  "
            f"indeterminate {row['indeterminate_mean']:7.2f} +- {row['indeterminate_std']:.2f}"
        )
    if "distances" in doc:
        d = doc["distances"]
        print(
            f"mean Wasserstein across methods {d['method_axis_mean']:.5f} "
            f"vs across models {d['model_axis_mean']:.5f}"
        )
    if args.case:
        summary = report_case(args.run, args.case)
        for cid in args.case:
            print(f"case {cid}:")
            for method, models in sorted(summary[cid].items()):
                line = ", ".join(
                    f"{model}={prob:.4f}" for model, prob in sorted(models.items())
                )
                print(f"  {method:>8s}: {line}")
    return 0


def _cmd_importance(args: argparse.Namespace) -> int:
    report_path = Path(args.run) / "report" / "report.json"
    if not report_path.exists():
        raise errors.UnknownCaseError(f"no report found under {args.run}")
    with open(report_path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    importance = doc.get("importance", {})
    if not importance:
        print("no gain importance recorded (no boosted models in the grid)")
        return 0
    for method, ranked in sorted(importance.items()):
        print(f"{method}: top features by mean gain share")
        for rank, (name, share) in enumerate(ranked[: args.top], start=1):
            print(f"  {rank:2d}. {name:30s} {share:.4f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bailstudy",
        description="Failure-to-appear modelling under censored bail outcomes.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic case population")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--config", help="generator config JSON")
    p.add_argument("--n-cases", type=int, dest="n_cases")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("ingest", help="validate and encode a case CSV")
    p.add_argument("--data", required=True, help="cases CSV path")
    p.add_argument("--schema", required=True, help="schema JSON path")
    p.add_argument("--encoded", help="write the encoded matrix CSV here")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("run", help="run the full experiment grid")
    p.add_argument("--config", required=True, help="experiment config JSON")
    p.add_argument("--out", help="override output_dir")
    p.add_argument("--seed", type=int)
    p.add_argument("--n-subsets", type=int, dest="n_subsets")
    p.add_argument("--methods", help="comma-separated subset of corr,daf,obs,obs_ip,nn")
    p.add_argument("--models", help="comma-separated subset of logistic,forest,gbdt")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("report", help="print tables from a completed run")
    p.add_argument("--run", required=True, help="run directory")
    p.add_argument("--case", action="append", help="case id to summarize (repeatable)")
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("importance", help="print the top-k gain importance table")
    p.add_argument("--run", required=True, help="run directory")
    p.add_argument("--top", type=int, default=15)
    p.set_defaults(func=_cmd_importance)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _CONFIG_ERRORS as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except _NUMERIC_ERRORS as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 4
    except errors.BailStudyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
