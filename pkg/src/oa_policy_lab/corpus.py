"""Article deposit corpora: ingestion, latency arithmetic, filters, simulation.

Publication dates are estimated from the altmetric date when present and
otherwise from the index (WoK-style) date minus a fixed 160-day lag.  All
month/day conversions use the mean Gregorian month of 30.4375 days.
"""

from __future__ import annotations

import csv
import datetime
import io
import json
import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property

import numpy as np

from .registry import DepositLocus, RegistrySnapshot, is_mandate

DAYS_PER_MONTH = 30.4375
#: Mean gap between index date and true publication date: 5.26 months,
#: fixed as round(5.26 * 30.4375) days.
INDEX_DATE_LAG_DAYS = 160


class CorpusParseError(ValueError):
    """Raised when a corpus CSV cannot be turned into article records."""


class AccessState(Enum):
    NOT_DEPOSITED = "not_deposited"
    METADATA_ONLY = "metadata_only"
    RESTRICTED = "restricted"
    OPEN = "open"


class LatencyPeriod(Enum):
    """The five policy-related deposit time bins (half-open on the right)."""

    BEFORE_PUBLICATION = "before_publication"
    WITHIN_6_MONTHS = "within_6_months"
    BETWEEN_6_AND_12 = "between_6_and_12"
    BETWEEN_12_AND_24 = "between_12_and_24"
    AFTER_24_MONTHS = "after_24_months"


@dataclass(frozen=True)
class ArticleRecord:
    """One published article and its repository deposit state."""

    article_id: str
    institution_id: str
    discipline: str
    wok_date: datetime.date | None
    altmetric_date: datetime.date | None
    deposit_date: datetime.date | None
    access_state: AccessState
    oa_conversion_date: datetime.date | None = None

    def __post_init__(self):
        if not self.article_id:
            raise ValueError("article_id must be non-empty")
        if not self.institution_id:
            raise ValueError(f"article {self.article_id!r}: empty institution_id")
        deposited = self.access_state is not AccessState.NOT_DEPOSITED
        if deposited and self.deposit_date is None:
            raise ValueError(
                f"article {self.article_id!r}: state "
                f"{self.access_state.value!r} needs a deposit_date"
            )
        if not deposited and self.deposit_date is not None:
            raise ValueError(
                f"article {self.article_id!r}: not_deposited rows cannot carry a deposit_date"
            )
        if deposited and self.wok_date is None and self.altmetric_date is None:
            raise ValueError(
                f"article {self.article_id!r}: deposited articles need a wok or altmetric date"
            )
        if self.oa_conversion_date is not None:
            if self.access_state is not AccessState.OPEN:
                raise ValueError(
                    f"article {self.article_id!r}: oa_conversion_date on a non-open article"
                )
            if self.oa_conversion_date < self.deposit_date:
                raise ValueError(
                    f"article {self.article_id!r}: oa_conversion_date precedes deposit_date"
                )

    @property
    def deposited(self) -> bool:
        return self.access_state is not AccessState.NOT_DEPOSITED


@dataclass(frozen=True)
class DepositCorpus:
    """Immutable collection of articles with derived per-article indexes."""

    articles: tuple[ArticleRecord, ...]

    def __post_init__(self):
        seen = set()
        for a in self.articles:
            if a.article_id in seen:
                raise ValueError(f"duplicate article_id {a.article_id!r}")
            seen.add(a.article_id)

    def __len__(self) -> int:
        return len(self.articles)

    @cached_property
    def institution_ids(self) -> tuple[str, ...]:
        return tuple(sorted({a.institution_id for a in self.articles}))

    @cached_property
    def by_institution(self) -> dict[str, tuple[ArticleRecord, ...]]:
        grouped: dict[str, list[ArticleRecord]] = {}
        for a in self.articles:
            grouped.setdefault(a.institution_id, []).append(a)
        return {k: tuple(v) for k, v in grouped.items()}

    @cached_property
    def publication_years(self) -> dict[str, int | None]:
        """Estimated publication year per article id (None when undatable)."""
        years: dict[str, int | None] = {}
        for a in self.articles:
            try:
                years[a.article_id] = estimated_publication_date(a).year
            except ValueError:
                years[a.article_id] = None
        return years


def estimated_publication_date(article: ArticleRecord) -> datetime.date:
    """Best estimate of the publication date.

    The altmetric date wins whenever present; otherwise the index date is
    shifted back by the fixed 160-day lag.
    """
    if article.altmetric_date is not None:
        return article.altmetric_date
    if article.wok_date is not None:
        return article.wok_date - datetime.timedelta(days=INDEX_DATE_LAG_DAYS)
    raise ValueError(
        f"article {article.article_id!r} has neither wok_date nor altmetric_date"
    )


def deposit_latency_months(article: ArticleRecord) -> float | None:
    """Signed months between estimated publication and deposit.

    Negative means the article was deposited before publication.  None for
    articles that were never deposited or cannot be dated.
    """
    if article.deposit_date is None:
        return None
    try:
        published = estimated_publication_date(article)
    except ValueError:
        return None
    return (article.deposit_date - published).days / DAYS_PER_MONTH


def latency_period(latency: float) -> LatencyPeriod:
    """Bin a finite latency (months) into the five deposit time periods."""
    if not math.isfinite(latency):
        raise ValueError(f"latency must be finite, got {latency!r}")
    if latency < 0:
        return LatencyPeriod.BEFORE_PUBLICATION
    if latency < 6:
        return LatencyPeriod.WITHIN_6_MONTHS
    if latency < 12:
        return LatencyPeriod.BETWEEN_6_AND_12
    if latency < 24:
        return LatencyPeriod.BETWEEN_12_AND_24
    return LatencyPeriod.AFTER_24_MONTHS


CORPUS_COLUMNS = (
    "article_id",
    "institution_id",
    "discipline",
    "wok_date",
    "altmetric_date",
    "deposit_date",
    "access_state",
    "oa_conversion_date",
)


def _parse_date(value: str, column: str, line: int) -> datetime.date | None:
    if value == "":
        return None
    try:
        return datetime.date.fromisoformat(value)
    except ValueError as exc:
        raise CorpusParseError(f"line {line}: column {column!r}: {exc}") from exc


def parse_corpus(text: str) -> DepositCorpus:
    """Parse a corpus CSV document (exact header contract, ISO dates)."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise CorpusParseError("empty document: missing header") from None
    if tuple(header) != CORPUS_COLUMNS:
        raise CorpusParseError(
            f"bad header {header!r}; expected {','.join(CORPUS_COLUMNS)}"
        )

    articles: list[ArticleRecord] = []
    problems: list[str] = []
    for line, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(CORPUS_COLUMNS):
            problems.append(f"line {line}: expected {len(CORPUS_COLUMNS)} fields, got {len(row)}")
            continue
        values = dict(zip(CORPUS_COLUMNS, row))
        try:
            state = AccessState(values["access_state"])
        except ValueError:
            problems.append(
                f"line {line}: unknown access_state {values['access_state']!r}"
            )
            continue
        try:
            articles.append(
                ArticleRecord(
                    article_id=values["article_id"],
                    institution_id=values["institution_id"],
                    discipline=values["discipline"].strip().lower(),
                    wok_date=_parse_date(values["wok_date"], "wok_date", line),
                    altmetric_date=_parse_date(values["altmetric_date"], "altmetric_date", line),
                    deposit_date=_parse_date(values["deposit_date"], "deposit_date", line),
                    access_state=state,
                    oa_conversion_date=_parse_date(
                        values["oa_conversion_date"], "oa_conversion_date", line
                    ),
                )
            )
        except (CorpusParseError, ValueError) as exc:
            problems.append(f"line {line}: {exc}")
    if problems:
        shown = "; ".join(problems[:20])
        more = f" (+{len(problems) - 20} more)" if len(problems) > 20 else ""
        raise CorpusParseError(f"{len(problems)} invalid row(s): {shown}{more}")
    try:
        return DepositCorpus(tuple(articles))
    except ValueError as exc:
        raise CorpusParseError(str(exc)) from exc


def serialize_corpus(corpus: DepositCorpus) -> str:
    """Canonical corpus CSV; ``parse_corpus`` round-trips it."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CORPUS_COLUMNS)
    for a in corpus.articles:
        writer.writerow(
            [
                a.article_id,
                a.institution_id,
                a.discipline,
                a.wok_date.isoformat() if a.wok_date else "",
                a.altmetric_date.isoformat() if a.altmetric_date else "",
                a.deposit_date.isoformat() if a.deposit_date else "",
                a.access_state.value,
                a.oa_conversion_date.isoformat() if a.oa_conversion_date else "",
            ]
        )
    return buf.getvalue()


@dataclass(frozen=True)
class Exclusion:
    institution_id: str
    rules: tuple[str, ...]  # every tripped rule, in canonical order


@dataclass(frozen=True)
class ExclusionReport:
    excluded: tuple[Exclusion, ...]
    retained: tuple[str, ...]
    min_articles: int
    adoption_cutoff_year: int
    require_ir_locus: bool
    window: tuple[int, int]


@dataclass(frozen=True)
class ExclusionOutcome:
    corpus: DepositCorpus
    institutions: tuple[str, ...]
    report: ExclusionReport


def apply_exclusions(
    corpus: DepositCorpus,
    snapshot: RegistrySnapshot | None,
    min_articles: int = 50,
    adoption_cutoff_year: int = 2011,
    require_ir_locus: bool = True,
    window: tuple[int, int] = (2011, 2013),
) -> ExclusionOutcome:
    """Apply the corpus eligibility filters and report every exclusion.

    Rules, in attribution order: ``min_articles`` (fewer than the threshold
    of window-dated articles), ``ir_locus`` (a mandate whose deposit locus
    is not the institutional repository), ``adoption_cutoff`` (a mandate
    adopted after the cutoff year, or with no adoption date on record).
    Institutions without a policy record are non-mandated comparisons and
    only face the article-count rule.  The returned corpus is restricted to
    retained institutions and window-dated articles, which makes the filter
    idempotent.
    """
    start, end = window
    if start > end:
        raise ValueError(f"empty window {window!r}")
    if min_articles < 0:
        raise ValueError("min_articles must be >= 0")

    years = corpus.publication_years
    in_window = [
        a for a in corpus.articles
        if years[a.article_id] is not None and start <= years[a.article_id] <= end
    ]
    counts: dict[str, int] = {}
    for a in in_window:
        counts[a.institution_id] = counts.get(a.institution_id, 0) + 1

    policies = {r.id: r for r in snapshot.records} if snapshot is not None else {}

    excluded: list[Exclusion] = []
    retained: list[str] = []
    for inst in corpus.institution_ids:
        rules: list[str] = []
        if counts.get(inst, 0) < min_articles:
            rules.append("min_articles")
        policy = policies.get(inst)  # None marks a non-mandated comparison
        if policy is not None and is_mandate(policy):
            if (
                require_ir_locus
                and policy.locus_of_deposit is not DepositLocus.INSTITUTIONAL_REPOSITORY
            ):
                rules.append("ir_locus")
            if (
                policy.adoption_date is None
                or policy.adoption_date.value.year > adoption_cutoff_year
            ):
                rules.append("adoption_cutoff")
        if rules:
            excluded.append(Exclusion(inst, tuple(rules)))
        else:
            retained.append(inst)

    keep = set(retained)
    filtered = DepositCorpus(tuple(a for a in in_window if a.institution_id in keep))
    report = ExclusionReport(
        excluded=tuple(excluded),
        retained=tuple(retained),
        min_articles=min_articles,
        adoption_cutoff_year=adoption_cutoff_year,
        require_ir_locus=require_ir_locus,
        window=window,
    )
    return ExclusionOutcome(corpus=filtered, institutions=tuple(retained), report=report)


_STATE_ORDER = (
    AccessState.NOT_DEPOSITED,
    AccessState.METADATA_ONLY,
    AccessState.RESTRICTED,
    AccessState.OPEN,
)


@dataclass(frozen=True)
class SyntheticInstitution:
    """Generation recipe for one institution's articles."""

    institution_id: str
    n_articles: int
    state_probs: dict[str, float]  # keys: not_deposited/metadata_only/restricted/open
    latency_mean_months: float = 6.0
    latency_sd_months: float = 6.0
    disciplines: tuple[str, ...] = ("multidisciplinary",)

    def __post_init__(self):
        unknown = set(self.state_probs) - {s.value for s in _STATE_ORDER}
        if unknown:
            raise ValueError(f"unknown state keys {sorted(unknown)}")
        total = sum(self.state_probs.get(s.value, 0.0) for s in _STATE_ORDER)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(
                f"{self.institution_id!r}: state probabilities sum to {total!r}, not 1"
            )
        if self.n_articles < 0:
            raise ValueError("n_articles must be >= 0")
        if not self.disciplines:
            raise ValueError("need at least one discipline label")


@dataclass(frozen=True)
class SyntheticConfig:
    institutions: tuple[SyntheticInstitution, ...]
    years: tuple[int, int] = (2011, 2013)

    @classmethod
    def from_json(cls, text: str) -> "SyntheticConfig":
        doc = json.loads(text)
        insts = tuple(
            SyntheticInstitution(
                institution_id=item["institution_id"],
                n_articles=int(item["n_articles"]),
                state_probs=dict(item["state_probs"]),
                latency_mean_months=float(item.get("latency_mean_months", 6.0)),
                latency_sd_months=float(item.get("latency_sd_months", 6.0)),
                disciplines=tuple(item.get("disciplines", ["multidisciplinary"])),
            )
            for item in doc["institutions"]
        )
        years = tuple(doc.get("years", (2011, 2013)))
        return cls(institutions=insts, years=(int(years[0]), int(years[1])))

    def to_json(self) -> str:
        doc = {
            "years": list(self.years),
            "institutions": [
                {
                    "institution_id": i.institution_id,
                    "n_articles": i.n_articles,
                    "state_probs": i.state_probs,
                    "latency_mean_months": i.latency_mean_months,
                    "latency_sd_months": i.latency_sd_months,
                    "disciplines": list(i.disciplines),
                }
                for i in self.institutions
            ],
        }
        return json.dumps(doc, indent=2) + "\n"


def generate_synthetic(config: SyntheticConfig, seed: int) -> DepositCorpus:
    """Deterministically generate a corpus satisfying all record invariants.

    Every article gets an altmetric date equal to its true publication date
    and an index date 160 days later, so downstream date estimation is exact.
    Deposit latencies are normal in months (negative allowed).
    """
    rng = np.random.default_rng(seed)
    start = datetime.date(config.years[0], 1, 1)
    end = datetime.date(config.years[1], 12, 31)
    span = (end - start).days + 1

    articles: list[ArticleRecord] = []
    for inst in config.institutions:
        probs = [inst.state_probs.get(s.value, 0.0) for s in _STATE_ORDER]
        offsets = rng.integers(0, span, size=inst.n_articles)
        states = rng.choice(len(_STATE_ORDER), size=inst.n_articles, p=probs)
        latencies = rng.normal(
            inst.latency_mean_months, inst.latency_sd_months, size=inst.n_articles
        )
        picks = rng.integers(0, len(inst.disciplines), size=inst.n_articles)
        for i in range(inst.n_articles):
            published = start + datetime.timedelta(days=int(offsets[i]))
            state = _STATE_ORDER[states[i]]
            deposit = None
            if state is not AccessState.NOT_DEPOSITED:
                lag_days = int(round(latencies[i] * DAYS_PER_MONTH))
                deposit = published + datetime.timedelta(days=lag_days)
            articles.append(
                ArticleRecord(
                    article_id=f"{inst.institution_id}-{i:06d}",
                    institution_id=inst.institution_id,
                    discipline=inst.disciplines[picks[i]],
                    wok_date=published + datetime.timedelta(days=INDEX_DATE_LAG_DAYS),
                    altmetric_date=published,
                    deposit_date=deposit,
                    access_state=state,
                )
            )
    return DepositCorpus(tuple(articles))
