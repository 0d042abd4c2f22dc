"""Command-line interface: validate, summarize, encode, metrics, analyze, simulate.

All subcommands read files and write tables; nothing touches the network.
Outputs are written atomically (temp file + rename) and identical inputs,
flags and seeds always produce byte-identical outputs.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import io
import json
import os
import sys
import tempfile
from dataclasses import dataclass

from .corpus import (
    CorpusParseError,
    SyntheticConfig,
    generate_synthetic,
    parse_corpus,
    serialize_corpus,
)
from .encoding import ConditionId, TABLE_CONDITIONS, WeightScheme, build_design_matrix
from .metrics import (
    deposit_rates,
    first_year_latency_score,
    latency_summary,
    period_distribution,
    rank_institutions,
    summarize_registry,
    unweighted_mean_rates,
)
from .registry import RegistryParseError, parse_registry, validate_policy
from .stats import (
    AnalysisConfig,
    InfeasibleAnalysisError,
    report_to_dict,
    run_effectiveness_analysis,
)

EXIT_OK = 0
EXIT_VIOLATIONS = 1
EXIT_INPUT_ERROR = 2
EXIT_INFEASIBLE = 3

OUTPUT_DIR_ENV = "OAPL_OUTPUT_DIR"


@dataclass(frozen=True)
class RunConfig:
    """One parsed invocation; exactly one subcommand."""

    subcommand: str
    registry: str | None = None
    corpus_path: str | None = None
    sim_config: str | None = None
    output_dir: str = "."
    format: str = "csv"
    strict: bool = False
    weights: str = "I"
    reference_date: datetime.date | None = None
    conditions: tuple[str, ...] | None = None
    institutions: tuple[str, ...] | None = None
    group_by: str = "institution"
    category: str = "ft"
    year: int | None = None
    min_articles: int = 50
    group_average: bool = False
    threshold: float = 0.1
    responses: str = "both"
    adoption_cutoff: int = 2011
    require_ir_locus: bool = True
    window: tuple[int, int] = (2011, 2013)
    seed: int | None = None


def _write_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(path) or "."
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".oapl-", text=True)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    rows = max(text.count("\n") - 1, 0)
    print(f"wrote {path} ({rows} rows)")


def _csv_text(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _pct(value: float) -> str:
    return f"{100.0 * value:.1f}"


def _num(value, digits: int) -> str:
    return "" if value is None else f"{value:.{digits}f}"


def _read(path: str) -> str:
    with open(path, encoding="utf-8") as handle:
        return handle.read()


def _load_registry(path: str):
    return parse_registry(_read(path))


def _cmd_validate(config: RunConfig) -> int:
    snapshot = _load_registry(config.registry)
    rows = []
    for record in snapshot.records:
        for violation in validate_policy(record):
            rows.append([record.id, violation.field, violation.rule, violation.message])
    out = os.path.join(config.output_dir, f"violations.{config.format}")
    if config.format == "json":
        payload = [
            {"record_id": r, "field": f, "rule": rule, "message": m}
            for r, f, rule, m in rows
        ]
        _write_atomic(out, json.dumps(payload, indent=2, sort_keys=True) + "\n")
    else:
        _write_atomic(out, _csv_text(["record_id", "field", "rule", "message"], rows))
    for record_id, fieldname, rule, message in rows:
        print(f"violation: {record_id}: [{rule}] {message}")
    print(f"{len(snapshot.records)} records, {len(rows)} violations")
    if rows and config.strict:
        return EXIT_VIOLATIONS
    return EXIT_OK


def _counts_rows(counts: dict[str, int]) -> list[list]:
    return [[key, count] for key, count in counts.items()]


def _cmd_summarize(config: RunConfig) -> int:
    snapshot = _load_registry(config.registry)
    summary = summarize_registry(snapshot)
    if config.format == "json":
        payload = {
            "total": summary.total,
            "mandate_total": summary.mandate_total,
            "policies_by_region": summary.policies_by_region,
            "policies_by_type": summary.policies_by_type,
            "green_criteria": summary.green_criteria,
            "gold_criteria": summary.gold_criteria,
            "green_criteria_funders": summary.green_criteria_funders,
            "gold_criteria_funders": summary.gold_criteria_funders,
            "green_criteria_institutions": summary.green_criteria_institutions,
            "gold_criteria_institutions": summary.gold_criteria_institutions,
            "mandates_by_region": summary.mandates_by_region,
            "timing_mandatory": summary.timing_mandatory,
            "timing_requesting": summary.timing_requesting,
        }
        _write_atomic(
            os.path.join(config.output_dir, "summary.json"),
            json.dumps(payload, indent=2, sort_keys=True) + "\n",
        )
        return EXIT_OK

    tables = {
        "regions.csv": (["region", "policies"], _counts_rows(summary.policies_by_region)),
        "policymaker_types.csv": (
            ["policymaker_type", "policies"],
            _counts_rows(summary.policies_by_type),
        ),
        "green_gold.csv": (
            ["criterion", "option", "policies"],
            [["green", k, v] for k, v in summary.green_criteria.items()]
            + [["gold", k, v] for k, v in summary.gold_criteria.items()],
        ),
        "green_gold_funders.csv": (
            ["criterion", "option", "policies"],
            [["green", k, v] for k, v in summary.green_criteria_funders.items()]
            + [["gold", k, v] for k, v in summary.gold_criteria_funders.items()],
        ),
        "green_gold_institutions.csv": (
            ["criterion", "option", "policies"],
            [["green", k, v] for k, v in summary.green_criteria_institutions.items()]
            + [["gold", k, v] for k, v in summary.gold_criteria_institutions.items()],
        ),
        "mandates_by_region.csv": (
            ["region", "mandates"],
            _counts_rows(summary.mandates_by_region),
        ),
        "deposit_timepoints.csv": (
            ["policy_kind", "date_of_deposit", "policies"],
            [["mandatory", k, v] for k, v in summary.timing_mandatory.items()]
            + [["requesting", k, v] for k, v in summary.timing_requesting.items()],
        ),
    }
    for filename, (header, rows) in tables.items():
        _write_atomic(os.path.join(config.output_dir, filename), _csv_text(header, rows))
    return EXIT_OK


def _cmd_encode(config: RunConfig) -> int:
    snapshot = _load_registry(config.registry)
    scheme = WeightScheme(config.weights)
    if config.conditions is None:
        conditions = TABLE_CONDITIONS
    else:
        conditions = tuple(ConditionId(name) for name in config.conditions)
    institutions = (
        tuple(config.institutions) if config.institutions else snapshot.ids
    )
    reference = config.reference_date
    if ConditionId.MANDATE_AGE in conditions and reference is None:
        raise ValueError("--reference-date is required when encoding mandate_age")
    matrix = build_design_matrix(
        snapshot,
        institutions,
        scheme,
        conditions,
        reference or datetime.date.today(),
    )
    _write_atomic(os.path.join(config.output_dir, "design_matrix.csv"), matrix.to_csv())
    return EXIT_OK


def _cmd_metrics(config: RunConfig) -> int:
    corpus = parse_corpus(_read(config.corpus_path))
    snapshot = _load_registry(config.registry) if config.registry else None

    rates = deposit_rates(corpus, config.group_by, snapshot)
    if config.format == "json":
        payload = {
            "deposit_rates": [
                {
                    "group": str(r.group),
                    "n_articles": r.n_articles,
                    "oa_rate": r.oa_rate,
                    "ra_rate": r.ra_rate,
                    "ft_rate": r.ft_rate,
                    "mo_rate": r.mo_rate,
                    "nd_rate": r.nd_rate,
                }
                for r in rates
            ],
            "latency_summary": [
                {
                    "group": str(s.group),
                    "n_oa": s.n_oa,
                    "n_ra": s.n_ra,
                    "oa_mean_months": s.oa_mean,
                    "ra_mean_months": s.ra_mean,
                    "ft_mean_months": s.ft_mean,
                }
                for s in latency_summary(corpus, config.group_by, snapshot)
            ],
        }
        _write_atomic(
            os.path.join(config.output_dir, "metrics.json"),
            json.dumps(payload, indent=2, sort_keys=True) + "\n",
        )
        return EXIT_OK

    rate_rows = [
        [
            r.group,
            r.n_articles,
            _pct(r.ft_rate),
            _pct(r.oa_rate),
            _pct(r.ra_rate),
            _pct(r.mo_rate),
            _pct(r.nd_rate),
        ]
        for r in rates
    ]
    if config.group_average and rates:
        # each group counts once, regardless of article volume
        mean = unweighted_mean_rates(rates)
        rate_rows.append(
            [
                "group_average",
                sum(r.n_articles for r in rates),
                _pct(mean["ft_rate"]),
                _pct(mean["oa_rate"]),
                _pct(mean["ra_rate"]),
                _pct(mean["mo_rate"]),
                _pct(mean["nd_rate"]),
            ]
        )
    _write_atomic(
        os.path.join(config.output_dir, "deposit_rates.csv"),
        _csv_text(
            ["group", "n_articles", "ft_pct", "oa_pct", "ra_pct", "mo_pct", "nd_pct"],
            rate_rows,
        ),
    )
    if config.group_by == "institution":
        ranked = rank_institutions(rates, f"{config.category}_rate", config.min_articles)
        _write_atomic(
            os.path.join(config.output_dir, "ranking.csv"),
            _csv_text(
                ["rank", "institution_id", "n_articles", "ft_pct", "oa_pct", "ra_pct"],
                [
                    [i + 1, r.group, r.n_articles, _pct(r.ft_rate), _pct(r.oa_rate), _pct(r.ra_rate)]
                    for i, r in enumerate(ranked)
                ],
            ),
        )
    _write_atomic(
        os.path.join(config.output_dir, "latency_summary.csv"),
        _csv_text(
            ["group", "n_oa", "n_ra", "oa_mean_months", "ra_mean_months", "ft_mean_months"],
            [
                [s.group, s.n_oa, s.n_ra, _num(s.oa_mean, 1), _num(s.ra_mean, 1), _num(s.ft_mean, 1)]
                for s in latency_summary(corpus, config.group_by, snapshot)
            ],
        ),
    )

    years = (
        [config.year]
        if config.year is not None
        else sorted({y for y in corpus.publication_years.values() if y is not None})
    )
    period_rows, score_rows = [], []
    for year in years:
        try:
            dist = period_distribution(corpus, year, config.category)
            period_rows.append(
                [year, config.category] + [_pct(share) for share in dist.values()]
            )
        except ValueError:
            pass
        try:
            score = first_year_latency_score(corpus, config.category, publication_year=year)
            score_rows.append(
                [
                    year,
                    config.category,
                    _num(score.score, 3),
                    _num(score.p_before, 3),
                    _num(score.p_within_6, 3),
                    _num(score.p_6_to_12, 3),
                    score.n_deposited,
                ]
            )
        except ValueError:
            pass
    if period_rows:
        _write_atomic(
            os.path.join(config.output_dir, "period_distribution.csv"),
            _csv_text(
                [
                    "year",
                    "category",
                    "before_publication_pct",
                    "within_6_months_pct",
                    "between_6_and_12_pct",
                    "between_12_and_24_pct",
                    "after_24_months_pct",
                ],
                period_rows,
            ),
        )
    if score_rows:
        _write_atomic(
            os.path.join(config.output_dir, "y1_scores.csv"),
            _csv_text(
                ["year", "category", "score", "p_before", "p_within_6", "p_6_to_12", "n"],
                score_rows,
            ),
        )
    return EXIT_OK


def _cmd_analyze(config: RunConfig) -> int:
    snapshot = _load_registry(config.registry)
    corpus = parse_corpus(_read(config.corpus_path))
    if config.reference_date is None:
        raise ValueError("--reference-date is required for analyze")
    analysis_config = AnalysisConfig(
        reference_date=config.reference_date,
        responses=config.responses,
        stage1_scheme=WeightScheme(config.weights),
        screening_threshold=config.threshold,
        min_articles=config.min_articles,
        adoption_cutoff_year=config.adoption_cutoff,
        require_ir_locus=config.require_ir_locus,
        window=config.window,
    )
    report = run_effectiveness_analysis(snapshot, corpus, analysis_config)

    stage1_rows, stage2_rows, summary_rows = [], [], []
    for fam in report.families:
        for row in fam.stage1:
            stage1_rows.append(
                [
                    fam.family,
                    row.condition.value,
                    row.response,
                    _num(row.r, 3),
                    _num(row.p, 3),
                    row.n,
                    row.note or "",
                ]
            )
        for row in fam.stage2:
            stage2_rows.append(
                [
                    fam.family,
                    row.condition,
                    row.response,
                    _num(row.beta, 3),
                    _num(row.std_error, 3),
                    _num(row.exp_beta, 3),
                    _num(row.p, 3),
                    row.flag or "",
                    _num(row.pairwise_r, 3),
                    _num(row.pairwise_p, 3),
                ]
            )
        for row in fam.summary:
            summary_rows.append(
                [
                    fam.family,
                    row.condition,
                    row.response,
                    row.direction,
                    "" if row.nbr_significant is None else str(row.nbr_significant).lower(),
                    ""
                    if row.pairwise_significant is None
                    else str(row.pairwise_significant).lower(),
                ]
            )

    _write_atomic(
        os.path.join(config.output_dir, "stage1.csv"),
        _csv_text(["family", "condition", "response", "r", "p", "n", "note"], stage1_rows),
    )
    _write_atomic(
        os.path.join(config.output_dir, "stage2.csv"),
        _csv_text(
            [
                "family",
                "condition",
                "response",
                "beta",
                "se",
                "exp_beta",
                "p",
                "flag",
                "pairwise_r",
                "pairwise_p",
            ],
            stage2_rows,
        ),
    )
    _write_atomic(
        os.path.join(config.output_dir, "summary.csv"),
        _csv_text(
            [
                "family",
                "condition",
                "response",
                "direction",
                "nbr_significant",
                "pairwise_significant",
            ],
            summary_rows,
        ),
    )
    _write_atomic(
        os.path.join(config.output_dir, "report.json"),
        json.dumps(report_to_dict(report), indent=2, sort_keys=True) + "\n",
    )
    return EXIT_OK


def _cmd_simulate(config: RunConfig) -> int:
    sim = SyntheticConfig.from_json(_read(config.sim_config))
    corpus = generate_synthetic(sim, config.seed)
    _write_atomic(os.path.join(config.output_dir, "corpus.csv"), serialize_corpus(corpus))
    return EXIT_OK


_HANDLERS = {
    "validate": _cmd_validate,
    "summarize": _cmd_summarize,
    "encode": _cmd_encode,
    "metrics": _cmd_metrics,
    "analyze": _cmd_analyze,
    "simulate": _cmd_simulate,
}


def _parse_window(text: str) -> tuple[int, int]:
    start, _, end = text.partition(":")
    return int(start), int(end)


def _comma_list(text: str) -> tuple[str, ...]:
    return tuple(part.strip() for part in text.split(",") if part.strip())


def parse_args(argv: list[str]) -> RunConfig:
    parser = argparse.ArgumentParser(
        prog="oa-policy-lab",
        description="Open Access policy analytics: registry validation, "
        "condition encoding, deposit metrics and effectiveness analysis.",
    )
    default_out = os.environ.get(OUTPUT_DIR_ENV, ".")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add_common(p, registry=False, corpus=False):
        p.add_argument("--output-dir", default=default_out, help="where outputs land")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        if registry:
            p.add_argument("--registry", required=True, help="registry JSON file")
        if corpus:
            p.add_argument("--corpus", required=True, help="corpus CSV file")

    p = sub.add_parser("validate", help="check registry records for contradictions")
    add_common(p, registry=True)
    p.add_argument("--strict", action="store_true", help="exit 1 when violations exist")

    p = sub.add_parser("summarize", help="emit the registry summary tables")
    add_common(p, registry=True)

    p = sub.add_parser("encode", help="build a condition weight matrix")
    add_common(p, registry=True)
    p.add_argument("--weights", choices=("I", "II"), default="I")
    p.add_argument("--reference-date", type=datetime.date.fromisoformat)
    p.add_argument("--conditions", type=_comma_list, help="comma-separated condition names")
    p.add_argument("--institutions", type=_comma_list, help="comma-separated record ids")

    p = sub.add_parser("metrics", help="deposit rates, rankings and latency tables")
    add_common(p, corpus=True)
    p.add_argument("--registry", help="needed for --group-by mandated")
    p.add_argument(
        "--group-by", choices=("institution", "discipline", "year", "mandated", "all"),
        default="institution",
    )
    p.add_argument("--category", choices=("oa", "ra", "ft"), default="ft")
    p.add_argument("--year", type=int)
    p.add_argument("--min-articles", type=int, default=0)
    p.add_argument("--group-average", action="store_true",
                   help="append an unweighted mean over groups to deposit_rates")

    p = sub.add_parser("analyze", help="two-stage policy effectiveness analysis")
    add_common(p, registry=True, corpus=True)
    p.add_argument("--weights", choices=("I", "II"), default="I",
                   help="stage-1 weighting scheme (stage 2 always uses II)")
    p.add_argument("--threshold", type=float, default=0.1)
    p.add_argument("--responses", choices=("rates", "latency", "both"), default="both")
    p.add_argument("--reference-date", type=datetime.date.fromisoformat, required=True)
    p.add_argument("--min-articles", type=int, default=50)
    p.add_argument("--adoption-cutoff", type=int, default=2011)
    p.add_argument("--no-ir-locus", action="store_true",
                   help="keep mandates whose deposit locus is not the IR")
    p.add_argument("--window", type=_parse_window, default=(2011, 2013),
                   metavar="START:END")

    p = sub.add_parser("simulate", help="generate a deterministic synthetic corpus")
    add_common(p)
    p.add_argument("--config", required=True, help="synthetic config JSON")
    p.add_argument("--seed", type=int, required=True)

    ns = parser.parse_args(argv)
    return RunConfig(
        subcommand=ns.subcommand,
        registry=getattr(ns, "registry", None),
        corpus_path=getattr(ns, "corpus", None),
        sim_config=getattr(ns, "config", None),
        output_dir=ns.output_dir,
        format=ns.format,
        strict=getattr(ns, "strict", False),
        weights=getattr(ns, "weights", "I"),
        reference_date=getattr(ns, "reference_date", None),
        conditions=getattr(ns, "conditions", None),
        institutions=getattr(ns, "institutions", None),
        group_by=getattr(ns, "group_by", "institution"),
        category=getattr(ns, "category", "ft"),
        year=getattr(ns, "year", None),
        min_articles=getattr(ns, "min_articles", 0),
        group_average=getattr(ns, "group_average", False),
        threshold=getattr(ns, "threshold", 0.1),
        responses=getattr(ns, "responses", "both"),
        adoption_cutoff=getattr(ns, "adoption_cutoff", 2011),
        require_ir_locus=not getattr(ns, "no_ir_locus", False),
        window=getattr(ns, "window", (2011, 2013)),
        seed=getattr(ns, "seed", None),
    )


def dispatch(config: RunConfig) -> int:
    """Run one subcommand, mapping failures onto the documented exit codes."""
    handler = _HANDLERS[config.subcommand]
    try:
        return handler(config)
    except (RegistryParseError, CorpusParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    except (FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    except (json.JSONDecodeError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    except InfeasibleAnalysisError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE


def main(argv: list[str] | None = None) -> int:
    return dispatch(parse_args(sys.argv[1:] if argv is None else argv))


if __name__ == "__main__":
    sys.exit(main())
