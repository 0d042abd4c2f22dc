"""Open Access policy records: classification schema, parsing, validation.

The data model mirrors the ROARMAP classification: institutional
particulars, implementation dates, deposit and licensing conditions,
rights holding, embargo lengths and Gold publishing options.  Records and
snapshots are immutable after parsing; every operation here is a pure
function, safe to share across workers.
"""

from __future__ import annotations

import datetime
import json
import re
from dataclasses import dataclass, fields
from enum import Enum


class RegistryParseError(ValueError):
    """Raised when a registry document cannot be turned into records."""


class Region(Enum):
    EUROPE = "europe"
    NORTH_AMERICA = "north_america"
    CENTRAL_SOUTH_AMERICA = "central_south_america"
    AFRICA = "africa"
    ASIA = "asia"
    OCEANIA = "oceania"


class PolicymakerType(Enum):
    FUNDER = "funder"
    RESEARCH_ORG = "research_org"
    FUNDER_AND_RESEARCH_ORG = "funder_and_research_org"
    MULTIPLE_RESEARCH_ORGS = "multiple_research_orgs"
    SUB_UNIT = "sub_unit"
    UNSPECIFIED = "unspecified"


class PolicySource(Enum):
    ADMIN_DECISION = "admin_decision"
    FACULTY_VOTE = "faculty_vote"
    NOT_MENTIONED = "not_mentioned"
    OTHER = "other"


class DepositRequirement(Enum):
    REQUIRED = "required"
    REQUESTED = "requested"
    UNSPECIFIED = "unspecified"


class DepositLocus(Enum):
    INSTITUTIONAL_REPOSITORY = "institutional_repository"
    SUBJECT_REPOSITORY = "subject_repository"
    ANY_SUITABLE = "any_suitable"
    NOT_SPECIFIED = "not_specified"


class DepositTiming(Enum):
    AT_ACCEPTANCE = "at_acceptance"
    AT_PUBLICATION = "at_publication"
    END_OF_POLICY_EMBARGO = "end_of_policy_embargo"
    WHEN_PUBLISHER_PERMITS = "when_publisher_permits"
    NOT_SPECIFIED = "not_specified"
    OTHER = "other"


class Waivable(Enum):
    """Shared option set for the waiver questions (deposit, OA, rights, embargo)."""

    YES = "yes"
    NO = "no"
    NOT_SPECIFIED = "not_specified"
    NOT_APPLICABLE = "not_applicable"


class OaRequirement(Enum):
    REQUIRED = "required"
    REQUESTED_OR_RECOMMENDED = "requested_or_recommended"
    NOT_MENTIONED = "not_mentioned"
    OTHER = "other"
    NOT_SPECIFIED = "not_specified"


class OaTiming(Enum):
    ACCEPTANCE_DATE = "acceptance_date"
    PUBLICATION_DATE = "publication_date"
    END_OF_POLICY_EMBARGO = "end_of_policy_embargo"
    WHEN_PUBLISHER_PERMITS = "when_publisher_permits"
    UPON_DEPOSIT = "upon_deposit"
    NOT_MENTIONED = "not_mentioned"
    OTHER = "other"
    NOT_SPECIFIED = "not_specified"


class EvaluationRequirement(Enum):
    """Is deposit a precondition for internal research evaluation."""

    YES = "yes"
    NO = "no"
    NOT_SPECIFIED = "not_specified"


class OpenLicence(Enum):
    NO_REUSE_LICENCE_REQUIRED = "no_reuse_licence_required"
    OPEN_LICENCE_UNSPECIFIED = "open_licence_unspecified"
    CC_BY = "cc_by"
    CC_BY_NC = "cc_by_nc"
    DIFFERENT_OPEN_LICENCE = "different_open_licence"
    OTHER = "other"
    NOT_SPECIFIED = "not_specified"


class RightsHolding(Enum):
    AUTHOR_GRANTS_TO_INSTITUTION = "author_grants_to_institution"
    INSTITUTION_OR_FUNDER_RETAINS = "institution_or_funder_retains"
    AUTHOR_RETAINS = "author_retains"
    NONE_OF_THESE = "none_of_these"
    NOT_MENTIONED = "not_mentioned"
    NOT_SPECIFIED = "not_specified"


class EmbargoLength(Enum):
    ZERO = "zero"
    SIX = "six"
    TWELVE = "twelve"
    TWENTY_FOUR = "twenty_four"
    LONGER = "longer"
    NOT_SPECIFIED = "not_specified"


class GoldOption(Enum):
    REQUIRED = "required"
    RECOMMENDED_ALTERNATIVE = "recommended_alternative"
    PERMITTED_ALTERNATIVE = "permitted_alternative"
    NOT_SPECIFIED = "not_specified"
    OTHER = "other"


class ApcFunding(Enum):
    FROM_GRANT = "from_grant"
    SPECIFIC_FUND = "specific_fund"
    INSTITUTION_FUNDS = "institution_funds"
    NOT_MENTIONED = "not_mentioned"
    OTHER = "other"


_YEAR_RE = re.compile(r"^\d{4}$")
_MONTH_RE = re.compile(r"^\d{4}-\d{2}$")
_DAY_RE = re.compile(r"^\d{4}-\d{2}-\d{2}$")


@dataclass(frozen=True, order=True)
class PartialDate:
    """A calendar date that may carry only year or year-month precision.

    Registry entries frequently record just an adoption year; those are
    completed to January 1 while remembering the original precision so
    serialization round-trips.
    """

    value: datetime.date
    precision: str = "day"  # "day" | "month" | "year"

    def __post_init__(self):
        if self.precision not in ("day", "month", "year"):
            raise ValueError(f"bad date precision {self.precision!r}")
        # components below the stated precision are meaningless; pin them
        if self.precision == "year" and (self.value.month, self.value.day) != (1, 1):
            object.__setattr__(self, "value", self.value.replace(month=1, day=1))
        elif self.precision == "month" and self.value.day != 1:
            object.__setattr__(self, "value", self.value.replace(day=1))

    @classmethod
    def parse(cls, text: str) -> "PartialDate":
        if _DAY_RE.match(text):
            return cls(datetime.date.fromisoformat(text), "day")
        if _MONTH_RE.match(text):
            year, month = text.split("-")
            return cls(datetime.date(int(year), int(month), 1), "month")
        if _YEAR_RE.match(text):
            return cls(datetime.date(int(text), 1, 1), "year")
        raise ValueError(f"not an ISO date or date prefix: {text!r}")

    def isoformat(self) -> str:
        if self.precision == "year":
            return f"{self.value.year:04d}"
        if self.precision == "month":
            return f"{self.value.year:04d}-{self.value.month:02d}"
        return self.value.isoformat()


@dataclass(frozen=True)
class Violation:
    """One broken internal-consistency rule on a policy record."""

    field: str
    rule: str
    message: str


@dataclass(frozen=True)
class PolicyRecord:
    """One classified Open Access policy."""

    id: str
    policymaker_name: str
    policymaker_url: str | None
    policy_url: str | None
    repository_url: str | None
    region: Region
    country: str
    policymaker_type: PolicymakerType
    source_of_policy: PolicySource
    adoption_date: PartialDate | None
    effective_date: PartialDate | None
    last_revision_date: PartialDate | None
    deposit_of_item: DepositRequirement
    locus_of_deposit: DepositLocus
    date_of_deposit: DepositTiming
    deposit_waivable: Waivable
    make_item_oa: OaRequirement
    oa_waivable: Waivable
    date_make_oa: OaTiming
    research_evaluation_condition: EvaluationRequirement
    rights_retention_waivable: Waivable
    open_licensing: OpenLicence
    rights_holding: RightsHolding
    rights_grant_waivable: Waivable
    embargo_stem: EmbargoLength
    embargo_hass: EmbargoLength
    embargo_waivable: Waivable
    gold_option: GoldOption
    apc_funding: ApcFunding
    apc_fund_url: str | None


@dataclass(frozen=True)
class RegistrySnapshot:
    """An ordered registry export taken on a given date. Record ids are unique."""

    records: tuple[PolicyRecord, ...]
    snapshot_date: datetime.date

    def __post_init__(self):
        seen = set()
        for record in self.records:
            if record.id in seen:
                raise RegistryParseError(f"duplicate record id {record.id!r}")
            seen.add(record.id)

    def by_id(self, record_id: str) -> PolicyRecord | None:
        for record in self.records:
            if record.id == record_id:
                return record
        return None

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(r.id for r in self.records)


_ENUM_FIELDS: dict[str, type[Enum]] = {
    "region": Region,
    "policymaker_type": PolicymakerType,
    "source_of_policy": PolicySource,
    "deposit_of_item": DepositRequirement,
    "locus_of_deposit": DepositLocus,
    "date_of_deposit": DepositTiming,
    "deposit_waivable": Waivable,
    "make_item_oa": OaRequirement,
    "oa_waivable": Waivable,
    "date_make_oa": OaTiming,
    "research_evaluation_condition": EvaluationRequirement,
    "rights_retention_waivable": Waivable,
    "open_licensing": OpenLicence,
    "rights_holding": RightsHolding,
    "rights_grant_waivable": Waivable,
    "embargo_stem": EmbargoLength,
    "embargo_hass": EmbargoLength,
    "embargo_waivable": Waivable,
    "gold_option": GoldOption,
    "apc_funding": ApcFunding,
}

_URL_FIELDS = ("policymaker_url", "policy_url", "repository_url", "apc_fund_url")
_DATE_FIELDS = ("adoption_date", "effective_date", "last_revision_date")
_TEXT_FIELDS = ("id", "policymaker_name", "country")

_RECORD_FIELDS = tuple(f.name for f in fields(PolicyRecord))


def _parse_record(raw: dict, index: int) -> PolicyRecord:
    if not isinstance(raw, dict):
        raise RegistryParseError(f"record #{index} is not an object")
    record_id = raw.get("id")
    label = repr(record_id) if isinstance(record_id, str) else f"#{index}"

    unknown = set(raw) - set(_RECORD_FIELDS)
    if unknown:
        raise RegistryParseError(
            f"record {label}: unknown field(s) {sorted(unknown)}"
        )

    values: dict[str, object] = {}
    for name in _TEXT_FIELDS:
        value = raw.get(name)
        if not isinstance(value, str) or not value:
            raise RegistryParseError(f"record {label}: field {name!r} must be a non-empty string")
        values[name] = value
    for name in _URL_FIELDS:
        value = raw.get(name)
        if value is not None and not isinstance(value, str):
            raise RegistryParseError(f"record {label}: field {name!r} must be a string or null")
        values[name] = value
    for name in _DATE_FIELDS:
        value = raw.get(name)
        if value is None:
            values[name] = None
            continue
        try:
            values[name] = PartialDate.parse(value)
        except (TypeError, ValueError) as exc:
            raise RegistryParseError(f"record {label}: field {name!r}: {exc}") from exc
    for name, enum_cls in _ENUM_FIELDS.items():
        if name not in raw:
            raise RegistryParseError(f"record {label}: missing field {name!r}")
        value = raw[name]
        try:
            values[name] = enum_cls(value)
        except ValueError:
            allowed = [member.value for member in enum_cls]
            raise RegistryParseError(
                f"record {label}: field {name!r} has unknown value {value!r} "
                f"(expected one of {allowed})"
            ) from None
    return PolicyRecord(**values)


def parse_registry(text: str) -> RegistrySnapshot:
    """Parse a registry JSON document into a snapshot.

    The document is an object ``{"snapshot_date": "YYYY-MM-DD",
    "records": [...]}``; enum values are lower_snake_case strings, unknown
    keys are rejected, and record ids must be unique.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise RegistryParseError(f"malformed JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise RegistryParseError("top-level value must be an object")
    unknown = set(doc) - {"snapshot_date", "records"}
    if unknown:
        raise RegistryParseError(f"unknown top-level field(s) {sorted(unknown)}")
    if "snapshot_date" not in doc or "records" not in doc:
        raise RegistryParseError("document needs 'snapshot_date' and 'records'")
    try:
        snapshot_date = datetime.date.fromisoformat(doc["snapshot_date"])
    except (TypeError, ValueError) as exc:
        raise RegistryParseError(f"bad snapshot_date: {exc}") from exc
    if not isinstance(doc["records"], list):
        raise RegistryParseError("'records' must be an array")

    records = tuple(_parse_record(raw, i) for i, raw in enumerate(doc["records"]))
    return RegistrySnapshot(records=records, snapshot_date=snapshot_date)


def _record_to_dict(record: PolicyRecord) -> dict:
    out: dict[str, object] = {}
    for name in _RECORD_FIELDS:
        value = getattr(record, name)
        if value is None:
            continue  # canonical form omits absent optionals
        if isinstance(value, Enum):
            out[name] = value.value
        elif isinstance(value, PartialDate):
            out[name] = value.isoformat()
        else:
            out[name] = value
    return out


def serialize_registry(snapshot: RegistrySnapshot) -> str:
    """Canonical JSON for a snapshot; ``parse_registry`` round-trips it."""
    doc = {
        "snapshot_date": snapshot.snapshot_date.isoformat(),
        "records": [_record_to_dict(r) for r in snapshot.records],
    }
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


# Waiver fields only make sense while their parent condition is active.
# Rule V1 is the classic cleanup case (a policy that does not mandate
# deposit must not also carry a deposit waiver); V2-V4 apply the same
# pattern to the OA, rights-retention and embargo waivers.

def _check_waiver(violations, field, waiver, parent_active, rule, parent_desc):
    if not parent_active and waiver is not Waivable.NOT_APPLICABLE:
        violations.append(
            Violation(
                field=field,
                rule=rule,
                message=f"{field}={waiver.value!r} but {parent_desc}; expected 'not_applicable'",
            )
        )


def validate_policy(record: PolicyRecord) -> list[Violation]:
    """Return every violated contradiction/ordering rule (empty = consistent).

    Violations are data, not errors: callers decide whether to reject.
    """
    violations: list[Violation] = []

    _check_waiver(
        violations,
        "deposit_waivable",
        record.deposit_waivable,
        record.deposit_of_item is DepositRequirement.REQUIRED,
        "deposit_waiver",
        f"deposit_of_item={record.deposit_of_item.value!r} is not 'required'",
    )
    _check_waiver(
        violations,
        "oa_waivable",
        record.oa_waivable,
        record.make_item_oa
        in (OaRequirement.REQUIRED, OaRequirement.REQUESTED_OR_RECOMMENDED),
        "oa_waiver",
        f"make_item_oa={record.make_item_oa.value!r} does not call for OA",
    )
    _check_waiver(
        violations,
        "rights_retention_waivable",
        record.rights_retention_waivable,
        record.rights_holding
        in (
            RightsHolding.AUTHOR_GRANTS_TO_INSTITUTION,
            RightsHolding.INSTITUTION_OR_FUNDER_RETAINS,
            RightsHolding.AUTHOR_RETAINS,
        ),
        "rights_retention_waiver",
        f"rights_holding={record.rights_holding.value!r} names no rights arrangement",
    )
    _check_waiver(
        violations,
        "embargo_waivable",
        record.embargo_waivable,
        record.embargo_stem is not EmbargoLength.NOT_SPECIFIED
        or record.embargo_hass is not EmbargoLength.NOT_SPECIFIED,
        "embargo_waiver",
        "no embargo length is specified",
    )

    ordered = [
        ("adoption_date", record.adoption_date),
        ("effective_date", record.effective_date),
        ("last_revision_date", record.last_revision_date),
    ]
    present = [(name, d) for name, d in ordered if d is not None]
    for (earlier_name, earlier), (later_name, later) in zip(present, present[1:]):
        if earlier.value > later.value:
            violations.append(
                Violation(
                    field=later_name,
                    rule="date_order",
                    message=(
                        f"{later_name} {later.isoformat()} precedes "
                        f"{earlier_name} {earlier.isoformat()}"
                    ),
                )
            )
    return violations


def is_mandate(record: PolicyRecord) -> bool:
    """True iff the policy requires repository deposit or OA publishing."""
    return (
        record.deposit_of_item is DepositRequirement.REQUIRED
        or record.gold_option is GoldOption.REQUIRED
    )


DAYS_PER_YEAR = 365.25


def mandate_age(record: PolicyRecord, reference: datetime.date) -> float:
    """Age of the policy in fractional years at ``reference`` (day resolution)."""
    if record.adoption_date is None:
        raise ValueError(f"record {record.id!r} has no adoption date")
    adopted = record.adoption_date.value
    if reference < adopted:
        raise ValueError(
            f"reference {reference.isoformat()} precedes adoption {adopted.isoformat()}"
        )
    return (reference - adopted).days / DAYS_PER_YEAR
