"""Inspect the built-in condition weight tables and encode policies with them.

Thirteen policy conditions map record fields onto [0, 1] weights.  Scheme I
carries graded a-priori weights; scheme II collapses most options to
all-or-none.  Mandate age joins as a continuous fourteenth covariate.

    python3 demos/02_condition_weights.py
"""

import datetime
import json

from oa_policy_lab import (
    ConditionId,
    WeightScheme,
    build_design_matrix,
    builtin_weight_tables,
    encode_policy,
    parse_registry,
)

table_i, table_ii = builtin_weight_tables()

print("== the weight tables, condition by condition ==")
for condition in ConditionId:
    if condition.continuous:
        continue
    options = [opt for (cond, opt) in table_i.weights if cond is condition]
    print(f"\n  {condition.value}")
    for option in options:
        wi = table_i.lookup(condition, option)
        wii = table_ii.lookup(condition, option)
        print(f"    {option:28s} I={wi:4.0%}  II={wii:4.0%}")

# Two contrasting policies: a strict rights-retention mandate and a
# request-only policy.
RECORDS = [
    {
        "id": "strict",
        "policymaker_name": "Strict University",
        "region": "europe", "country": "Portugal",
        "policymaker_type": "research_org", "source_of_policy": "admin_decision",
        "adoption_date": "2004-11",
        "deposit_of_item": "required", "locus_of_deposit": "institutional_repository",
        "date_of_deposit": "at_acceptance", "deposit_waivable": "no",
        "make_item_oa": "required", "oa_waivable": "no",
        "date_make_oa": "publication_date", "research_evaluation_condition": "yes",
        "rights_retention_waivable": "no", "open_licensing": "no_reuse_licence_required",
        "rights_holding": "author_retains", "rights_grant_waivable": "no",
        "embargo_stem": "zero", "embargo_hass": "zero", "embargo_waivable": "no",
        "gold_option": "permitted_alternative", "apc_funding": "not_mentioned",
    },
    {
        "id": "gentle",
        "policymaker_name": "Gentle Institute",
        "region": "asia", "country": "Japan",
        "policymaker_type": "research_org", "source_of_policy": "other",
        "adoption_date": "2012",
        "deposit_of_item": "requested", "locus_of_deposit": "any_suitable",
        "date_of_deposit": "not_specified", "deposit_waivable": "not_applicable",
        "make_item_oa": "requested_or_recommended", "oa_waivable": "not_specified",
        "date_make_oa": "when_publisher_permits", "research_evaluation_condition": "no",
        "rights_retention_waivable": "not_applicable", "open_licensing": "not_specified",
        "rights_holding": "not_mentioned", "rights_grant_waivable": "not_specified",
        "embargo_stem": "not_specified", "embargo_hass": "not_specified",
        "embargo_waivable": "not_applicable",
        "gold_option": "permitted_alternative", "apc_funding": "not_mentioned",
    },
]

snapshot = parse_registry(
    json.dumps({"snapshot_date": "2015-03-01", "records": RECORDS})
)
reference = datetime.date(2014, 11, 1)

print("\n== per-policy encodings ==")
for record in snapshot.records:
    print(f"\n  {record.id}:")
    for scheme in WeightScheme:
        encoded = encode_policy(record, scheme, reference)
        cells = ", ".join(
            f"{c.value}={v:.2f}" if v is not None else f"{c.value}=?"
            for c, v in list(encoded.items())[:5]
        )
        print(f"    scheme {scheme.value}: {cells}, ...")

print("\n== a design matrix over both policies ==")
# mandate_age is only defined for mandates, so a matrix over a mixed set
# of policies sticks to the weight-table conditions
conditions = (
    ConditionId.MUST_DEPOSIT,
    ConditionId.CANNOT_WAIVE_DEPOSIT,
    ConditionId.RESEARCH_EVALUATION,
    ConditionId.DEPOSIT_IMMEDIATELY,
)
matrix = build_design_matrix(
    snapshot, ["strict", "gentle"], WeightScheme.I, conditions, reference
)
print(matrix.to_csv())
