"""Walk through the policy registry: parsing, contradiction checks, summaries.

Run from the repository root after installing the package:

    python3 demos/01_registry_basics.py
"""

import json

from oa_policy_lab import (
    is_mandate,
    mandate_age,
    parse_registry,
    serialize_registry,
    summarize_registry,
    validate_policy,
)
import datetime

# A tiny registry document.  Every classification field is explicit; enum
# values are lower_snake_case strings.
DOCUMENT = {
    "snapshot_date": "2015-03-01",
    "records": [
        {
            "id": "uni-alpha",
            "policymaker_name": "Alpha University",
            "region": "europe",
            "country": "Belgium",
            "policymaker_type": "research_org",
            "source_of_policy": "admin_decision",
            "adoption_date": "2007-05",
            "deposit_of_item": "required",
            "locus_of_deposit": "institutional_repository",
            "date_of_deposit": "at_acceptance",
            "deposit_waivable": "no",
            "make_item_oa": "required",
            "oa_waivable": "no",
            "date_make_oa": "end_of_policy_embargo",
            "research_evaluation_condition": "yes",
            "rights_retention_waivable": "not_applicable",
            "open_licensing": "not_specified",
            "rights_holding": "not_mentioned",
            "rights_grant_waivable": "not_specified",
            "embargo_stem": "twelve",
            "embargo_hass": "twelve",
            "embargo_waivable": "no",
            "gold_option": "permitted_alternative",
            "apc_funding": "not_mentioned",
        },
        {
            # a contradictory record: deposit is only requested, yet the
            # classification also claims a deposit waiver exists
            "id": "uni-beta",
            "policymaker_name": "Beta College",
            "region": "north_america",
            "country": "Canada",
            "policymaker_type": "sub_unit",
            "source_of_policy": "faculty_vote",
            "adoption_date": "2012",
            "deposit_of_item": "requested",
            "locus_of_deposit": "not_specified",
            "date_of_deposit": "not_specified",
            "deposit_waivable": "yes",
            "make_item_oa": "requested_or_recommended",
            "oa_waivable": "not_specified",
            "date_make_oa": "not_mentioned",
            "research_evaluation_condition": "no",
            "rights_retention_waivable": "not_applicable",
            "open_licensing": "not_specified",
            "rights_holding": "not_mentioned",
            "rights_grant_waivable": "not_specified",
            "embargo_stem": "not_specified",
            "embargo_hass": "not_specified",
            "embargo_waivable": "not_applicable",
            "gold_option": "not_specified",
            "apc_funding": "not_mentioned",
        },
    ],
}

snapshot = parse_registry(json.dumps(DOCUMENT))
print(f"parsed {len(snapshot.records)} records "
      f"(snapshot of {snapshot.snapshot_date})\n")

print("== contradiction checks ==")
for record in snapshot.records:
    violations = validate_policy(record)
    if not violations:
        print(f"  {record.id}: internally consistent")
    for violation in violations:
        print(f"  {record.id}: [{violation.rule}] {violation.message}")

print("\n== mandate status ==")
reference = datetime.date(2014, 11, 1)
for record in snapshot.records:
    if is_mandate(record):
        age = mandate_age(record, reference)
        print(f"  {record.id}: mandate, {age:.1f} years old at {reference}")
    else:
        print(f"  {record.id}: not a mandate")

print("\n== registry summary ==")
summary = summarize_registry(snapshot)
print("  policies by region:",
      {k: v for k, v in summary.policies_by_region.items() if v})
print("  green criteria:    ",
      {k: v for k, v in summary.green_criteria.items() if v})
print("  mandates by region:",
      {k: v for k, v in summary.mandates_by_region.items() if v})

print("\n== canonical serialization round-trips ==")
text = serialize_registry(snapshot)
assert parse_registry(text) == snapshot
print(f"  {len(text.splitlines())} lines of canonical JSON")
