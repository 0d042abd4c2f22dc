"""Policy-effectiveness statistics: correlation screening and NB regression.

Stage 1 computes pairwise Pearson correlations between condition weights
(graded scheme) and per-institution responses, with two-tailed p-values
from the exact t distribution.  Conditions whose full-text correlation
magnitude clears the screening threshold go to stage 2: a Negative
Binomial Regression on all-or-none re-encodings, reported as incidence
rate ratios alongside the matching pairwise correlations.
"""

from __future__ import annotations

import datetime
import json
from dataclasses import dataclass

import numpy as np
from scipy.special import betainc

from .corpus import DepositCorpus, apply_exclusions
from .encoding import ConditionId, WeightScheme, encode_policy
from .metrics import deposit_rates, first_year_latency_score
from .nbr import NbrFit, fit_nbr
from .registry import RegistrySnapshot


class ZeroVarianceError(ValueError):
    """A correlation input vector is constant."""


class InfeasibleAnalysisError(RuntimeError):
    """Too little data survives the exclusion filters to run the analysis."""


@dataclass(frozen=True)
class CorrelationResult:
    """Pearson r with its two-tailed p-value and the pair count behind it."""

    r: float
    p: float
    n: int
    condition: ConditionId | None = None


def t_two_tailed_p(t: float, df: int) -> float:
    """P(|T| >= t) for Student's t via the regularized incomplete beta."""
    if df < 1:
        raise ValueError("df must be >= 1")
    return float(betainc(df / 2.0, 0.5, df / (df + t * t)))


def pearson(x, y, *, condition: ConditionId | None = None) -> CorrelationResult:
    """Product-moment correlation with an exact two-tailed p-value.

    The p-value comes from ``t = r * sqrt((n-2)/(1-r^2))`` referred to the
    t distribution with ``n-2`` degrees of freedom; its tail probability is
    evaluated as a regularized incomplete beta, which for the observed r
    reduces to ``I_{(1-r)(1+r)}((n-2)/2, 1/2)``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 1 or y.ndim != 1:
        raise ValueError("inputs must be one-dimensional vectors")
    if len(x) != len(y):
        raise ValueError(f"length mismatch: {len(x)} vs {len(y)}")
    n = len(x)
    if n < 3:
        raise ValueError(f"need at least 3 pairs, got {n}")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0.0:
        raise ZeroVarianceError("first vector is constant")
    if syy == 0.0:
        raise ZeroVarianceError("second vector is constant")
    r = float(dx @ dy) / np.sqrt(sxx * syy)
    r = float(np.clip(r, -1.0, 1.0))
    tail_arg = max(0.0, (1.0 - r) * (1.0 + r))
    p = float(betainc((n - 2) / 2.0, 0.5, tail_arg))
    return CorrelationResult(r=r, p=p, n=n, condition=condition)


@dataclass(frozen=True)
class ScreeningResult:
    threshold: float
    retained: tuple[ConditionId, ...]
    eliminated: tuple[ConditionId, ...]
    r_values: dict[ConditionId, float]


def screen_conditions(
    results: list[CorrelationResult], threshold: float = 0.1
) -> ScreeningResult:
    """Keep conditions with ``|r| >= threshold``; report both partitions."""
    seen: dict[ConditionId, float] = {}
    for result in results:
        if result.condition is None:
            raise ValueError("screening needs condition-tagged results")
        if result.condition in seen:
            raise ValueError(f"duplicate result for {result.condition.value}")
        seen[result.condition] = result.r
    retained = tuple(c for c, r in seen.items() if abs(r) >= threshold)
    eliminated = tuple(c for c, r in seen.items() if abs(r) < threshold)
    return ScreeningResult(
        threshold=threshold, retained=retained, eliminated=eliminated, r_values=seen
    )


#: Stage-1 candidates: the embargo conditions are dropped (too few policies
#: mention them); mandate age joins as a continuous covariate.
SCREENING_CANDIDATES: tuple[ConditionId, ...] = tuple(
    c
    for c in ConditionId
    if c not in (ConditionId.EMBARGO_STEM, ConditionId.EMBARGO_HASS)
)

RESPONSES = ("oa", "ra", "ft")


@dataclass(frozen=True)
class AnalysisConfig:
    """Knobs for the end-to-end effectiveness analysis."""

    reference_date: datetime.date
    responses: str = "both"  # "rates" | "latency" | "both"
    stage1_scheme: WeightScheme = WeightScheme.I
    stage2_scheme: WeightScheme = WeightScheme.II
    screening_threshold: float = 0.1
    min_articles: int = 50
    adoption_cutoff_year: int = 2011
    require_ir_locus: bool = True
    window: tuple[int, int] = (2011, 2013)

    def families(self) -> tuple[str, ...]:
        if self.responses == "rates":
            return ("rates",)
        if self.responses == "latency":
            return ("latency",)
        if self.responses == "both":
            return ("rates", "latency")
        raise ValueError(f"unknown responses selector {self.responses!r}")


@dataclass(frozen=True)
class Stage1Row:
    condition: ConditionId
    response: str
    r: float | None
    p: float | None
    n: int
    note: str | None = None


@dataclass(frozen=True)
class Stage2Row:
    condition: str
    response: str
    beta: float | None
    std_error: float | None
    exp_beta: float | None
    p: float | None
    flag: str | None
    pairwise_r: float | None
    pairwise_p: float | None
    pairwise_n: int


@dataclass(frozen=True)
class SummaryRow:
    """Direction/significance classification of one stage-2 cell."""

    condition: str
    response: str
    direction: str  # "positive" | "negative" | "near_zero"
    nbr_significant: bool | None
    pairwise_significant: bool | None


@dataclass(frozen=True)
class ResponseFit:
    response: str
    fit: NbrFit | None
    n_rows: int
    n_dropped: int
    note: str | None = None


@dataclass(frozen=True)
class FamilyAnalysis:
    family: str
    stage1: tuple[Stage1Row, ...]
    screening: ScreeningResult
    stage2: tuple[Stage2Row, ...]
    fits: tuple[ResponseFit, ...]
    summary: tuple[SummaryRow, ...]
    notes: tuple[str, ...] = ()


@dataclass(frozen=True)
class AnalysisReport:
    config: AnalysisConfig
    institutions: tuple[str, ...]
    exclusions: tuple
    families: tuple[FamilyAnalysis, ...]

    def family(self, name: str) -> FamilyAnalysis:
        for fam in self.families:
            if fam.family == name:
                return fam
        raise KeyError(name)


def _paired(xs: list[float | None], ys: list[float | None]):
    pairs = [(x, y) for x, y in zip(xs, ys) if x is not None and y is not None]
    if not pairs:
        return np.array([]), np.array([])
    x, y = zip(*pairs)
    return np.asarray(x, float), np.asarray(y, float)


def _stage1_row(condition, response, xs, ys) -> Stage1Row:
    x, y = _paired(xs, ys)
    n = len(x)
    if n < 3:
        return Stage1Row(condition, response, None, None, n, note="fewer_than_3_rows")
    try:
        result = pearson(x, y, condition=condition)
    except ZeroVarianceError:
        return Stage1Row(condition, response, None, None, n, note="zero_variance")
    return Stage1Row(condition, response, result.r, result.p, result.n)


def run_effectiveness_analysis(
    snapshot: RegistrySnapshot,
    corpus: DepositCorpus,
    config: AnalysisConfig,
) -> AnalysisReport:
    """Run the full two-stage policy-effectiveness analysis.

    Institutions first pass the exclusion filters and must resolve to a
    policy record; fewer than three remaining raises
    :class:`InfeasibleAnalysisError`.  The rate family regresses deposited
    counts with a log-exposure offset; the latency family regresses
    first-year latency scores scaled to integer pseudo-counts (score * 100)
    with no offset.  Everything is deterministic in its inputs.
    """
    outcome = apply_exclusions(
        corpus,
        snapshot,
        min_articles=config.min_articles,
        adoption_cutoff_year=config.adoption_cutoff_year,
        require_ir_locus=config.require_ir_locus,
        window=config.window,
    )
    rates_by_inst = {r.group: r for r in deposit_rates(outcome.corpus, "institution")}
    institutions = tuple(
        inst
        for inst in outcome.institutions
        if snapshot.by_id(inst) is not None and inst in rates_by_inst
    )
    if len(institutions) < 3:
        raise InfeasibleAnalysisError(
            f"only {len(institutions)} institutions with policy records survive the filters"
        )

    enc1 = {
        inst: encode_policy(snapshot.by_id(inst), config.stage1_scheme, config.reference_date)
        for inst in institutions
    }
    enc2 = {
        inst: encode_policy(snapshot.by_id(inst), config.stage2_scheme, config.reference_date)
        for inst in institutions
    }

    exposures = [rates_by_inst[inst].n_articles for inst in institutions]
    counts = {
        "oa": [rates_by_inst[inst].n_oa for inst in institutions],
        "ra": [rates_by_inst[inst].n_ra for inst in institutions],
        "ft": [rates_by_inst[inst].n_ft for inst in institutions],
    }
    rate_values = {
        cat: [c / e for c, e in zip(counts[cat], exposures)] for cat in RESPONSES
    }

    def y1_values(cat: str) -> list[float | None]:
        values: list[float | None] = []
        for inst in institutions:
            try:
                values.append(
                    first_year_latency_score(outcome.corpus, cat, institution=inst).score
                )
            except ValueError:
                values.append(None)  # no deposits of this category to score
        return values

    families = []
    for family in config.families():
        responses: dict[str, list[float | None]]
        if family == "rates":
            responses = {cat: list(rate_values[cat]) for cat in RESPONSES}
        else:
            responses = {cat: y1_values(cat) for cat in RESPONSES}

        stage1 = []
        for condition in SCREENING_CANDIDATES:
            xs = [enc1[inst][condition] for inst in institutions]
            for cat in RESPONSES:
                stage1.append(_stage1_row(condition, cat, xs, responses[cat]))

        ft_results = [
            CorrelationResult(r=row.r, p=row.p, n=row.n, condition=row.condition)
            for row in stage1
            if row.response == "ft" and row.r is not None
        ]
        screening = screen_conditions(ft_results, config.screening_threshold)

        notes = []
        stage2: list[Stage2Row] = []
        fits: list[ResponseFit] = []
        if not screening.retained:
            notes.append("no condition cleared the screening threshold; stage 2 is empty")
        else:
            for cat in RESPONSES:
                rows = [
                    i
                    for i, inst in enumerate(institutions)
                    if responses[cat][i] is not None
                    and all(enc2[inst][c] is not None for c in screening.retained)
                ]
                dropped = len(institutions) - len(rows)
                pairwise: dict[ConditionId, CorrelationResult | None] = {}
                for condition in screening.retained:
                    xs = [enc2[inst][condition] for inst in institutions]
                    x, yv = _paired(xs, responses[cat])
                    try:
                        pairwise[condition] = (
                            pearson(x, yv, condition=condition) if len(x) >= 3 else None
                        )
                    except ZeroVarianceError:
                        pairwise[condition] = None

                fit = None
                note = None
                if len(rows) < 3:
                    note = f"{cat}: fewer than 3 usable rows"
                else:
                    X = np.array(
                        [
                            [enc2[institutions[i]][c] for c in screening.retained]
                            for i in rows
                        ],
                        dtype=float,
                    )
                    if family == "rates":
                        y = np.array([counts[cat][i] for i in rows])
                        exp_rows = np.array([exposures[i] for i in rows], dtype=float)
                    else:
                        # pseudo-counts: first-year score scaled to 0..100
                        y = np.array(
                            [round(responses[cat][i] * 100.0) for i in rows]
                        )
                        exp_rows = None
                    try:
                        fit = fit_nbr(
                            _NamedDesign(X, screening.retained), y, exp_rows
                        )
                    except ValueError as exc:
                        note = f"{cat}: {exc}"
                fits.append(
                    ResponseFit(
                        response=cat,
                        fit=fit,
                        n_rows=len(rows),
                        n_dropped=dropped,
                        note=note,
                    )
                )

                for condition in screening.retained:
                    name = condition.value
                    pw = pairwise[condition]
                    if fit is None:
                        stage2.append(
                            Stage2Row(
                                name, cat, None, None, None, None, "not_fitted",
                                pw.r if pw else None,
                                pw.p if pw else None,
                                pw.n if pw else 0,
                            )
                        )
                    elif name in fit.degenerate:
                        stage2.append(
                            Stage2Row(
                                name, cat, None, None, None, None, "near_zero",
                                pw.r if pw else None,
                                pw.p if pw else None,
                                pw.n if pw else 0,
                            )
                        )
                    else:
                        stage2.append(
                            Stage2Row(
                                name,
                                cat,
                                fit.coefficients[name],
                                fit.std_errors[name],
                                fit.exp_beta[name],
                                fit.wald_p[name],
                                None if fit.converged else "not_converged",
                                pw.r if pw else None,
                                pw.p if pw else None,
                                pw.n if pw else 0,
                            )
                        )

        summary = []
        for row in stage2:
            if row.exp_beta is None:
                direction = "near_zero"
                nbr_sig = None
            else:
                direction = "positive" if row.exp_beta > 1.0 else "negative"
                nbr_sig = row.p < 0.05
            pairwise_sig = None if row.pairwise_p is None else row.pairwise_p < 0.05
            summary.append(
                SummaryRow(row.condition, row.response, direction, nbr_sig, pairwise_sig)
            )

        families.append(
            FamilyAnalysis(
                family=family,
                stage1=tuple(stage1),
                screening=screening,
                stage2=tuple(stage2),
                fits=tuple(fits),
                summary=tuple(summary),
                notes=tuple(notes),
            )
        )

    return AnalysisReport(
        config=config,
        institutions=institutions,
        exclusions=outcome.report.excluded,
        families=tuple(families),
    )


class _NamedDesign:
    """Adapter giving fit_nbr named columns without a full DesignMatrix."""

    def __init__(self, values: np.ndarray, conditions):
        self.values = values
        self.conditions = tuple(conditions)


def report_to_dict(report: AnalysisReport) -> dict:
    """Plain-data rendering of a report, stable for JSON serialization."""

    def corr(v):
        return None if v is None else float(v)

    return {
        "config": {
            "reference_date": report.config.reference_date.isoformat(),
            "responses": report.config.responses,
            "stage1_scheme": report.config.stage1_scheme.value,
            "stage2_scheme": report.config.stage2_scheme.value,
            "screening_threshold": report.config.screening_threshold,
            "min_articles": report.config.min_articles,
            "adoption_cutoff_year": report.config.adoption_cutoff_year,
            "require_ir_locus": report.config.require_ir_locus,
            "window": list(report.config.window),
        },
        "institutions": list(report.institutions),
        "exclusions": [
            {"institution_id": e.institution_id, "rules": list(e.rules)}
            for e in report.exclusions
        ],
        "families": {
            fam.family: {
                "stage1": [
                    {
                        "condition": row.condition.value,
                        "response": row.response,
                        "r": corr(row.r),
                        "p": corr(row.p),
                        "n": row.n,
                        "note": row.note,
                    }
                    for row in fam.stage1
                ],
                "screening": {
                    "threshold": fam.screening.threshold,
                    "retained": [c.value for c in fam.screening.retained],
                    "eliminated": [c.value for c in fam.screening.eliminated],
                    "r_values": {
                        c.value: corr(r) for c, r in fam.screening.r_values.items()
                    },
                },
                "stage2": [
                    {
                        "condition": row.condition,
                        "response": row.response,
                        "beta": corr(row.beta),
                        "std_error": corr(row.std_error),
                        "exp_beta": corr(row.exp_beta),
                        "p": corr(row.p),
                        "flag": row.flag,
                        "pairwise_r": corr(row.pairwise_r),
                        "pairwise_p": corr(row.pairwise_p),
                        "pairwise_n": row.pairwise_n,
                    }
                    for row in fam.stage2
                ],
                "fits": [
                    {
                        "response": rf.response,
                        "n_rows": rf.n_rows,
                        "n_dropped": rf.n_dropped,
                        "note": rf.note,
                        "fit": None
                        if rf.fit is None
                        else {
                            "coefficients": rf.fit.coefficients,
                            "std_errors": rf.fit.std_errors,
                            "wald_p": rf.fit.wald_p,
                            "exp_beta": rf.fit.exp_beta,
                            "alpha": rf.fit.alpha,
                            "log_likelihood": rf.fit.log_likelihood,
                            "converged": rf.fit.converged,
                            "iterations": rf.fit.iterations,
                            "degenerate": rf.fit.degenerate,
                            "n_obs": rf.fit.n_obs,
                        },
                    }
                    for rf in fam.fits
                ],
                "summary": [
                    {
                        "condition": row.condition,
                        "response": row.response,
                        "direction": row.direction,
                        "nbr_significant": row.nbr_significant,
                        "pairwise_significant": row.pairwise_significant,
                    }
                    for row in fam.summary
                ],
                "notes": list(fam.notes),
            }
            for fam in report.families
        },
    }


def report_to_json(report: AnalysisReport) -> str:
    return json.dumps(report_to_dict(report), indent=2, sort_keys=True) + "\n"
