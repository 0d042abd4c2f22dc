"""Shared fixture builders for the test suite."""

from __future__ import annotations

import datetime

import numpy as np

from oa_policy_lab.corpus import (
    AccessState,
    ArticleRecord,
    DepositCorpus,
    SyntheticConfig,
    SyntheticInstitution,
    generate_synthetic,
)
from oa_policy_lab.registry import (
    ApcFunding,
    DepositLocus,
    DepositRequirement,
    DepositTiming,
    EmbargoLength,
    EvaluationRequirement,
    GoldOption,
    OaRequirement,
    OaTiming,
    OpenLicence,
    PartialDate,
    PolicymakerType,
    PolicyRecord,
    PolicySource,
    Region,
    RegistrySnapshot,
    RightsHolding,
    Waivable,
)

SNAPSHOT_DATE = datetime.date(2015, 3, 1)
REFERENCE_DATE = datetime.date(2014, 11, 1)


def make_policy(**overrides) -> PolicyRecord:
    """A consistent, fully-encodable mandate record; override what you need."""
    values = dict(
        id="inst",
        policymaker_name="Test University",
        policymaker_url=None,
        policy_url=None,
        repository_url=None,
        region=Region.EUROPE,
        country="Testland",
        policymaker_type=PolicymakerType.RESEARCH_ORG,
        source_of_policy=PolicySource.ADMIN_DECISION,
        adoption_date=PartialDate.parse("2008-01-01"),
        effective_date=None,
        last_revision_date=None,
        deposit_of_item=DepositRequirement.REQUIRED,
        locus_of_deposit=DepositLocus.INSTITUTIONAL_REPOSITORY,
        date_of_deposit=DepositTiming.AT_ACCEPTANCE,
        deposit_waivable=Waivable.NO,
        make_item_oa=OaRequirement.REQUIRED,
        oa_waivable=Waivable.NO,
        date_make_oa=OaTiming.END_OF_POLICY_EMBARGO,
        research_evaluation_condition=EvaluationRequirement.NO,
        rights_retention_waivable=Waivable.NOT_APPLICABLE,
        open_licensing=OpenLicence.NOT_SPECIFIED,
        rights_holding=RightsHolding.NOT_MENTIONED,
        rights_grant_waivable=Waivable.NOT_SPECIFIED,
        embargo_stem=EmbargoLength.NOT_SPECIFIED,
        embargo_hass=EmbargoLength.NOT_SPECIFIED,
        embargo_waivable=Waivable.NOT_APPLICABLE,
        gold_option=GoldOption.PERMITTED_ALTERNATIVE,
        apc_funding=ApcFunding.NOT_MENTIONED,
        apc_fund_url=None,
    )
    values.update(overrides)
    return PolicyRecord(**values)


def make_non_mandate(**overrides) -> PolicyRecord:
    values = dict(
        deposit_of_item=DepositRequirement.REQUESTED,
        deposit_waivable=Waivable.NOT_APPLICABLE,
        gold_option=GoldOption.PERMITTED_ALTERNATIVE,
        adoption_date=None,
    )
    values.update(overrides)
    return make_policy(**values)


def make_snapshot(records, date=SNAPSHOT_DATE) -> RegistrySnapshot:
    return RegistrySnapshot(records=tuple(records), snapshot_date=date)


def make_article(**overrides) -> ArticleRecord:
    values = dict(
        article_id="a1",
        institution_id="inst",
        discipline="multidisciplinary",
        wok_date=datetime.date(2012, 6, 10),
        altmetric_date=datetime.date(2012, 1, 2),
        deposit_date=datetime.date(2012, 3, 1),
        access_state=AccessState.OPEN,
        oa_conversion_date=None,
    )
    values.update(overrides)
    return ArticleRecord(**values)


def corpus_with_counts(
    institution_id: str,
    n_oa: int,
    n_ra: int,
    n_mo: int,
    n_nd: int,
    year: int = 2012,
    latency_months: float = 3.0,
) -> list[ArticleRecord]:
    """Exact-count articles for one institution, all dated within one year."""
    published = datetime.date(year, 1, 15)
    deposit = published + datetime.timedelta(days=round(latency_months * 30.4375))
    articles = []
    state_blocks = (
        (AccessState.OPEN, n_oa),
        (AccessState.RESTRICTED, n_ra),
        (AccessState.METADATA_ONLY, n_mo),
        (AccessState.NOT_DEPOSITED, n_nd),
    )
    serial = 0
    for state, count in state_blocks:
        for _ in range(count):
            articles.append(
                make_article(
                    article_id=f"{institution_id}-{serial:06d}",
                    institution_id=institution_id,
                    altmetric_date=published,
                    wok_date=published + datetime.timedelta(days=160),
                    deposit_date=None if state is AccessState.NOT_DEPOSITED else deposit,
                    access_state=state,
                )
            )
            serial += 1
    return articles


_EVALUATION = (EvaluationRequirement.YES, EvaluationRequirement.NO,
               EvaluationRequirement.NOT_SPECIFIED)
_TIMINGS = (DepositTiming.AT_ACCEPTANCE, DepositTiming.AT_PUBLICATION,
            DepositTiming.NOT_SPECIFIED)
_RIGHTS = (RightsHolding.AUTHOR_RETAINS, RightsHolding.NONE_OF_THESE,
           RightsHolding.NOT_MENTIONED)
_OA_REQ = (OaRequirement.REQUIRED, OaRequirement.REQUESTED_OR_RECOMMENDED)


def _varied_fields(rng: np.random.Generator) -> dict:
    """Condition noise uncorrelated with outcomes, kept encodable."""
    rights = _RIGHTS[rng.integers(0, len(_RIGHTS))]
    rights_waivable = (
        Waivable.NO
        if rights is RightsHolding.AUTHOR_RETAINS
        else Waivable.NOT_APPLICABLE
    )
    make_oa = _OA_REQ[rng.integers(0, len(_OA_REQ))]
    return dict(
        research_evaluation_condition=_EVALUATION[rng.integers(0, len(_EVALUATION))],
        date_of_deposit=_TIMINGS[rng.integers(0, len(_TIMINGS))],
        rights_holding=rights,
        rights_retention_waivable=rights_waivable,
        make_item_oa=make_oa,
        oa_waivable=(Waivable.YES, Waivable.NO, Waivable.NOT_SPECIFIED)[
            rng.integers(0, 3)
        ],
    )


def build_effectiveness_world(
    seed: int = 2011,
    per_group: int = 12,
    articles_per_inst: int = 220,
) -> tuple[RegistrySnapshot, DepositCorpus]:
    """A seeded world where requiring deposit and forbidding deposit waivers
    both raise the open-access deposit probability."""
    rng = np.random.default_rng(seed)
    groups = (
        # (deposit requirement, waiver option, state probabilities)
        ("strong", DepositRequirement.REQUIRED, Waivable.NO,
         {"open": 0.45, "restricted": 0.10, "metadata_only": 0.05, "not_deposited": 0.40}),
        ("firm", DepositRequirement.REQUIRED, Waivable.YES,
         {"open": 0.25, "restricted": 0.10, "metadata_only": 0.05, "not_deposited": 0.60}),
        ("soft", DepositRequirement.REQUIRED, Waivable.NOT_SPECIFIED,
         {"open": 0.15, "restricted": 0.08, "metadata_only": 0.05, "not_deposited": 0.72}),
        # gold-route mandates: OA publishing required but deposit merely
        # requested, so the must-deposit column keeps variance even when
        # mandate age stays in the model
        ("gold", DepositRequirement.REQUESTED, Waivable.NOT_APPLICABLE,
         {"open": 0.04, "restricted": 0.03, "metadata_only": 0.03, "not_deposited": 0.90}),
        ("none", DepositRequirement.REQUESTED, Waivable.NOT_APPLICABLE,
         {"open": 0.05, "restricted": 0.04, "metadata_only": 0.03, "not_deposited": 0.88}),
    )
    records = []
    specs = []
    for label, requirement, waiver, probs in groups:
        for i in range(per_group):
            inst = f"{label}-{i:02d}"
            gold = GoldOption.REQUIRED if label == "gold" else GoldOption.PERMITTED_ALTERNATIVE
            adoption = None
            if requirement is DepositRequirement.REQUIRED or label == "gold":
                adoption = PartialDate.parse(f"{2004 + int(rng.integers(0, 7))}-06-01")
            records.append(
                make_policy(
                    id=inst,
                    adoption_date=adoption,
                    deposit_of_item=requirement,
                    deposit_waivable=waiver,
                    gold_option=gold,
                    **_varied_fields(rng),
                )
            )
            specs.append(
                SyntheticInstitution(
                    institution_id=inst,
                    n_articles=articles_per_inst,
                    state_probs=dict(probs),
                    latency_mean_months=float(rng.uniform(2.0, 9.0)),
                    latency_sd_months=5.0,
                )
            )
    snapshot = make_snapshot(records)
    corpus = generate_synthetic(
        SyntheticConfig(institutions=tuple(specs)), seed=seed + 1
    )
    return snapshot, corpus


def build_mandate_age_world(
    seed: int = 5, per_year: int = 6, articles_per_inst: int = 200
) -> tuple[RegistrySnapshot, DepositCorpus]:
    """Older mandates deposit earlier; nothing else drives latency."""
    rng = np.random.default_rng(seed)
    records, specs = [], []
    for adoption_year in range(2002, 2011):
        for i in range(per_year):
            inst = f"y{adoption_year}-{i:02d}"
            records.append(
                make_policy(
                    id=inst,
                    adoption_date=PartialDate.parse(f"{adoption_year}-01-01"),
                    **_varied_fields(rng),
                )
            )
            specs.append(
                SyntheticInstitution(
                    institution_id=inst,
                    n_articles=articles_per_inst,
                    state_probs={
                        "open": 0.30, "restricted": 0.10,
                        "metadata_only": 0.05, "not_deposited": 0.55,
                    },
                    latency_mean_months=1.0 + 1.2 * (adoption_year - 2002),
                    latency_sd_months=4.0,
                )
            )
    snapshot = make_snapshot(records)
    corpus = generate_synthetic(
        SyntheticConfig(institutions=tuple(specs)), seed=seed + 1
    )
    return snapshot, corpus


def build_null_world(
    seed: int = 9, n_institutions: int = 900, articles_per_inst: int = 60
) -> tuple[RegistrySnapshot, DepositCorpus]:
    """Condition noise with no relationship to deposit behaviour."""
    rng = np.random.default_rng(seed)
    records, specs = [], []
    for i in range(n_institutions):
        inst = f"null-{i:04d}"
        records.append(
            make_policy(
                id=inst,
                adoption_date=PartialDate.parse(f"{2003 + int(rng.integers(0, 8))}"),
                deposit_waivable=(Waivable.YES, Waivable.NO, Waivable.NOT_SPECIFIED)[
                    rng.integers(0, 3)
                ],
                **_varied_fields(rng),
            )
        )
        specs.append(
            SyntheticInstitution(
                institution_id=inst,
                n_articles=articles_per_inst,
                state_probs={
                    "open": 0.20, "restricted": 0.08,
                    "metadata_only": 0.05, "not_deposited": 0.67,
                },
                latency_mean_months=5.0,
                latency_sd_months=5.0,
            )
        )
    snapshot = make_snapshot(records)
    corpus = generate_synthetic(
        SyntheticConfig(institutions=tuple(specs)), seed=seed + 1
    )
    return snapshot, corpus
