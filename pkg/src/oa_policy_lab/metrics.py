"""Deposit-rate, latency and registry summary metrics.

All aggregations are exact count arithmetic over immutable corpora;
rates are kept as full-precision fractions and only rounded at the
presentation layer.
"""

from __future__ import annotations

from dataclasses import dataclass

from .corpus import (
    AccessState,
    ArticleRecord,
    DepositCorpus,
    LatencyPeriod,
    deposit_latency_months,
    latency_period,
)
from .registry import (
    DepositRequirement,
    DepositTiming,
    GoldOption,
    PolicymakerType,
    Region,
    RegistrySnapshot,
    is_mandate,
)

GROUP_KEYS = ("institution", "discipline", "year", "mandated", "all")
CATEGORIES = ("oa", "ra", "ft")


def _check_category(category: str) -> str:
    if category not in CATEGORIES:
        raise ValueError(f"unknown category {category!r}; expected one of {CATEGORIES}")
    return category


def _in_category(article: ArticleRecord, category: str) -> bool:
    if category == "oa":
        return article.access_state is AccessState.OPEN
    if category == "ra":
        return article.access_state is AccessState.RESTRICTED
    return article.access_state in (AccessState.OPEN, AccessState.RESTRICTED)


def _group_of(article, group_by, corpus, mandated_ids):
    if group_by == "institution":
        return article.institution_id
    if group_by == "discipline":
        return article.discipline
    if group_by == "year":
        return corpus.publication_years[article.article_id]  # None skips the article
    if group_by == "mandated":
        return "mandated" if article.institution_id in mandated_ids else "non_mandated"
    return "all"


def _grouped(corpus, group_by, snapshot):
    if group_by not in GROUP_KEYS:
        raise ValueError(f"unknown group_by {group_by!r}; expected one of {GROUP_KEYS}")
    mandated_ids = set()
    if group_by == "mandated":
        if snapshot is None:
            raise ValueError("group_by='mandated' needs a registry snapshot")
        mandated_ids = {r.id for r in snapshot.records if is_mandate(r)}
    groups: dict[object, list[ArticleRecord]] = {}
    for a in corpus.articles:
        key = _group_of(a, group_by, corpus, mandated_ids)
        if key is None:
            continue
        groups.setdefault(key, []).append(a)
    return dict(sorted(groups.items(), key=lambda kv: str(kv[0])))


@dataclass(frozen=True)
class DepositRates:
    """Per-group deposit counts; rates derive from the counts exactly."""

    group: object
    n_articles: int
    n_oa: int
    n_ra: int
    n_mo: int
    n_nd: int

    def __post_init__(self):
        if self.n_oa + self.n_ra + self.n_mo + self.n_nd != self.n_articles:
            raise ValueError(f"group {self.group!r}: deposit state counts do not sum")

    @property
    def n_ft(self) -> int:
        return self.n_oa + self.n_ra

    @property
    def oa_rate(self) -> float:
        return self.n_oa / self.n_articles

    @property
    def ra_rate(self) -> float:
        return self.n_ra / self.n_articles

    @property
    def ft_rate(self) -> float:
        return self.n_ft / self.n_articles

    @property
    def mo_rate(self) -> float:
        return self.n_mo / self.n_articles

    @property
    def nd_rate(self) -> float:
        return self.n_nd / self.n_articles

    def rate(self, key: str) -> float:
        if key not in ("oa_rate", "ra_rate", "ft_rate", "mo_rate", "nd_rate"):
            raise ValueError(f"unknown rate key {key!r}")
        return getattr(self, key)


def deposit_rates(
    corpus: DepositCorpus,
    group_by: str,
    snapshot: RegistrySnapshot | None = None,
) -> list[DepositRates]:
    """Deposit-state rates per group; empty groups are omitted."""
    out = []
    for key, articles in _grouped(corpus, group_by, snapshot).items():
        states = [a.access_state for a in articles]
        out.append(
            DepositRates(
                group=key,
                n_articles=len(articles),
                n_oa=states.count(AccessState.OPEN),
                n_ra=states.count(AccessState.RESTRICTED),
                n_mo=states.count(AccessState.METADATA_ONLY),
                n_nd=states.count(AccessState.NOT_DEPOSITED),
            )
        )
    return out


def unweighted_mean_rates(rates: list[DepositRates]) -> dict[str, float]:
    """Mean of per-group rates, each group counting once regardless of size.

    The pooled per-article alternative is ``deposit_rates(corpus, "all")``.
    """
    if not rates:
        raise ValueError("no groups to average")
    keys = ("oa_rate", "ra_rate", "ft_rate", "mo_rate", "nd_rate")
    return {key: sum(r.rate(key) for r in rates) / len(rates) for key in keys}


def rank_institutions(
    rates: list[DepositRates],
    key: str = "ft_rate",
    min_articles: int = 0,
) -> list[DepositRates]:
    """Order institution rates descending by ``key``.

    Ties break by article count (larger first) then by institution id.
    Institutions below ``min_articles`` are dropped.
    """
    qualifying = [r for r in rates if r.n_articles >= min_articles]
    return sorted(
        qualifying, key=lambda r: (-r.rate(key), -r.n_articles, str(r.group))
    )


@dataclass(frozen=True)
class LatencySummary:
    """Mean deposit latencies (months) per group, split by access category."""

    group: object
    n_oa: int
    n_ra: int
    oa_mean: float | None
    ra_mean: float | None
    ft_mean: float | None  # count-weighted mean over OA and RA


def latency_summary(
    corpus: DepositCorpus,
    group_by: str,
    snapshot: RegistrySnapshot | None = None,
) -> list[LatencySummary]:
    out = []
    for key, articles in _grouped(corpus, group_by, snapshot).items():
        oa = [
            lat
            for a in articles
            if a.access_state is AccessState.OPEN
            and (lat := deposit_latency_months(a)) is not None
        ]
        ra = [
            lat
            for a in articles
            if a.access_state is AccessState.RESTRICTED
            and (lat := deposit_latency_months(a)) is not None
        ]
        n_ft = len(oa) + len(ra)
        out.append(
            LatencySummary(
                group=key,
                n_oa=len(oa),
                n_ra=len(ra),
                oa_mean=sum(oa) / len(oa) if oa else None,
                ra_mean=sum(ra) / len(ra) if ra else None,
                ft_mean=(sum(oa) + sum(ra)) / n_ft if n_ft else None,
            )
        )
    return out


def _category_latencies(
    corpus: DepositCorpus,
    category: str,
    institution: str | None,
    publication_year: int | None,
) -> list[float]:
    _check_category(category)
    articles = (
        corpus.by_institution.get(institution, ())
        if institution is not None
        else corpus.articles
    )
    latencies = []
    for a in articles:
        if not _in_category(a, category):
            continue
        if (
            publication_year is not None
            and corpus.publication_years[a.article_id] != publication_year
        ):
            continue
        lat = deposit_latency_months(a)
        if lat is not None:
            latencies.append(lat)
    return latencies


def period_distribution(
    corpus: DepositCorpus,
    publication_year: int | None,
    category: str,
    institution: str | None = None,
) -> dict[LatencyPeriod, float]:
    """Proportion of the category's deposits falling in each time bin."""
    latencies = _category_latencies(corpus, category, institution, publication_year)
    if not latencies:
        raise ValueError(
            f"no {category} deposits for year {publication_year!r}"
            + (f" at {institution!r}" if institution else "")
        )
    counts = {period: 0 for period in LatencyPeriod}
    for lat in latencies:
        counts[latency_period(lat)] += 1
    return {period: counts[period] / len(latencies) for period in LatencyPeriod}


# Weights for deposits made before publication, within 6 months, and
# between 6 and 12 months; later deposits count for nothing.
Y1_WEIGHTS = (1.0, 2.0 / 3.0, 1.0 / 3.0)


@dataclass(frozen=True)
class Y1Score:
    """First-year latency score: weighted share of early deposits."""

    group: object
    publication_year: int | None
    score: float
    p_before: float
    p_within_6: float
    p_6_to_12: float
    n_deposited: int


def first_year_latency_score(
    corpus: DepositCorpus,
    category: str,
    institution: str | None = None,
    publication_year: int | None = None,
) -> Y1Score:
    """Score early depositing for one group/year of a category.

    The denominator is every deposited article of the category, so deposits
    made after 12 months pull the score toward zero.
    """
    latencies = _category_latencies(corpus, category, institution, publication_year)
    if not latencies:
        raise ValueError(
            f"no {category} deposits to score"
            + (f" at {institution!r}" if institution else "")
        )
    n = len(latencies)
    p_before = sum(1 for lat in latencies if lat < 0) / n
    p_within_6 = sum(1 for lat in latencies if 0 <= lat < 6) / n
    p_6_to_12 = sum(1 for lat in latencies if 6 <= lat < 12) / n
    score = (
        Y1_WEIGHTS[0] * p_before + Y1_WEIGHTS[1] * p_within_6 + Y1_WEIGHTS[2] * p_6_to_12
    )
    return Y1Score(
        group=institution if institution is not None else "all",
        publication_year=publication_year,
        score=score,
        p_before=p_before,
        p_within_6=p_within_6,
        p_6_to_12=p_6_to_12,
        n_deposited=n,
    )


_INSTITUTION_TYPES = (
    PolicymakerType.RESEARCH_ORG,
    PolicymakerType.MULTIPLE_RESEARCH_ORGS,
    PolicymakerType.SUB_UNIT,
)

GOLD_BUCKETS = ("required", "recommended_alternative", "permitted_alternative",
                "not_specified_or_other")


def _gold_bucket(option: GoldOption) -> str:
    if option in (GoldOption.NOT_SPECIFIED, GoldOption.OTHER):
        return "not_specified_or_other"
    return option.value


def _green_gold(records) -> tuple[dict[str, int], dict[str, int]]:
    green = {v.value: 0 for v in DepositRequirement}
    gold = {bucket: 0 for bucket in GOLD_BUCKETS}
    for r in records:
        green[r.deposit_of_item.value] += 1
        gold[_gold_bucket(r.gold_option)] += 1
    return green, gold


@dataclass(frozen=True)
class RegistrySummary:
    """Registry-wide breakdowns; every table sums to its population count."""

    total: int
    mandate_total: int
    policies_by_region: dict[str, int]
    policies_by_type: dict[str, int]
    green_criteria: dict[str, int]
    gold_criteria: dict[str, int]
    green_criteria_funders: dict[str, int]
    gold_criteria_funders: dict[str, int]
    green_criteria_institutions: dict[str, int]
    gold_criteria_institutions: dict[str, int]
    mandates_by_region: dict[str, int]
    timing_mandatory: dict[str, int]
    timing_requesting: dict[str, int]


def summarize_registry(snapshot: RegistrySnapshot) -> RegistrySummary:
    """Exact group-bys over record fields, mirroring the standard registry tables."""
    records = snapshot.records
    by_region = {region.value: 0 for region in Region}
    by_type = {ptype.value: 0 for ptype in PolicymakerType}
    mandates_by_region = {region.value: 0 for region in Region}
    timing_mandatory = {t.value: 0 for t in DepositTiming}
    timing_requesting = {t.value: 0 for t in DepositTiming}
    mandate_total = 0

    for r in records:
        by_region[r.region.value] += 1
        by_type[r.policymaker_type.value] += 1
        if is_mandate(r):
            mandate_total += 1
            mandates_by_region[r.region.value] += 1
            timing_mandatory[r.date_of_deposit.value] += 1
        elif r.deposit_of_item is DepositRequirement.REQUESTED:
            timing_requesting[r.date_of_deposit.value] += 1

    green, gold = _green_gold(records)
    funders = [r for r in records if r.policymaker_type is PolicymakerType.FUNDER]
    institutions = [r for r in records if r.policymaker_type in _INSTITUTION_TYPES]
    green_f, gold_f = _green_gold(funders)
    green_i, gold_i = _green_gold(institutions)

    return RegistrySummary(
        total=len(records),
        mandate_total=mandate_total,
        policies_by_region=by_region,
        policies_by_type=by_type,
        green_criteria=green,
        gold_criteria=gold,
        green_criteria_funders=green_f,
        gold_criteria_funders=gold_f,
        green_criteria_institutions=green_i,
        gold_criteria_institutions=gold_i,
        mandates_by_region=mandates_by_region,
        timing_mandatory=timing_mandatory,
        timing_requesting=timing_requesting,
    )
