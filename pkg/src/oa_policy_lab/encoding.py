"""Numeric encoding of policy conditions.

Thirteen policy conditions each map one record field through a fixed
option-weight table; two weighting schemes are built in.  Scheme I carries
graded a-priori weights, scheme II collapses most options to all-or-none.
Mandate age rides along as a fourteenth, continuous covariate that never
touches the weight tables.
"""

from __future__ import annotations

import datetime
import io
import csv
from dataclasses import dataclass
from enum import Enum
from types import MappingProxyType

import numpy as np

from .registry import PolicyRecord, RegistrySnapshot, is_mandate, mandate_age


class WeightScheme(Enum):
    I = "I"
    II = "II"


class ConditionId(Enum):
    RESEARCH_EVALUATION = "research_evaluation"
    MUST_DEPOSIT = "must_deposit"
    MUST_MAKE_OA = "must_make_oa"
    CANNOT_WAIVE_DEPOSIT = "cannot_waive_deposit"
    CANNOT_WAIVE_OA = "cannot_waive_oa"
    CANNOT_WAIVE_RIGHTS_RETENTION = "cannot_waive_rights_retention"
    DEPOSIT_IMMEDIATELY = "deposit_immediately"
    MAKE_OA_IMMEDIATELY = "make_oa_immediately"
    EMBARGO_STEM = "embargo_stem"
    EMBARGO_HASS = "embargo_hass"
    DEPOSIT_IN_IR = "deposit_in_ir"
    MUST_RETAIN_RIGHTS = "must_retain_rights"
    OPEN_LICENSING = "open_licensing"
    MANDATE_AGE = "mandate_age"

    @property
    def continuous(self) -> bool:
        return self is ConditionId.MANDATE_AGE


#: The thirteen weight-table conditions, in canonical order.
TABLE_CONDITIONS: tuple[ConditionId, ...] = tuple(
    c for c in ConditionId if not c.continuous
)

#: Record field consulted by each condition.
CONDITION_FIELDS: dict[ConditionId, str] = {
    ConditionId.RESEARCH_EVALUATION: "research_evaluation_condition",
    ConditionId.MUST_DEPOSIT: "deposit_of_item",
    ConditionId.MUST_MAKE_OA: "make_item_oa",
    ConditionId.CANNOT_WAIVE_DEPOSIT: "deposit_waivable",
    ConditionId.CANNOT_WAIVE_OA: "oa_waivable",
    ConditionId.CANNOT_WAIVE_RIGHTS_RETENTION: "rights_retention_waivable",
    ConditionId.DEPOSIT_IMMEDIATELY: "date_of_deposit",
    ConditionId.MAKE_OA_IMMEDIATELY: "date_make_oa",
    ConditionId.EMBARGO_STEM: "embargo_stem",
    ConditionId.EMBARGO_HASS: "embargo_hass",
    ConditionId.DEPOSIT_IN_IR: "locus_of_deposit",
    ConditionId.MUST_RETAIN_RIGHTS: "rights_holding",
    ConditionId.OPEN_LICENSING: "open_licensing",
}


class UncoveredOptionError(LookupError):
    """An option value has no entry in the weight table for its condition."""

    def __init__(self, condition: ConditionId, option: str):
        super().__init__(
            f"no weight for option {option!r} under condition {condition.value!r}"
        )
        self.condition = condition
        self.option = option


# (condition, option) -> (scheme I weight, scheme II weight).  Percentages
# stored as exact decimal fractions; do not re-derive from strings.
_C = ConditionId
_WEIGHT_ROWS: tuple[tuple[ConditionId, str, float, float], ...] = (
    (_C.RESEARCH_EVALUATION, "yes", 1.00, 1.0),
    (_C.RESEARCH_EVALUATION, "not_specified", 0.00, 0.0),
    (_C.RESEARCH_EVALUATION, "no", 0.00, 0.0),
    (_C.MUST_DEPOSIT, "required", 1.00, 1.0),
    (_C.MUST_DEPOSIT, "requested", 0.10, 0.0),
    (_C.MUST_DEPOSIT, "unspecified", 0.00, 0.0),
    (_C.MUST_MAKE_OA, "required", 1.00, 1.0),
    (_C.MUST_MAKE_OA, "requested_or_recommended", 0.10, 0.0),
    (_C.MUST_MAKE_OA, "not_mentioned", 0.00, 0.0),
    (_C.MUST_MAKE_OA, "other", 0.00, 0.0),
    (_C.CANNOT_WAIVE_DEPOSIT, "no", 1.00, 1.0),
    (_C.CANNOT_WAIVE_DEPOSIT, "not_specified", 0.10, 0.0),
    (_C.CANNOT_WAIVE_DEPOSIT, "yes", 0.00, 0.0),
    (_C.CANNOT_WAIVE_DEPOSIT, "not_applicable", 0.50, 0.0),
    (_C.CANNOT_WAIVE_OA, "no", 1.00, 1.0),
    (_C.CANNOT_WAIVE_OA, "not_specified", 0.10, 0.0),
    (_C.CANNOT_WAIVE_OA, "yes", 0.00, 0.0),
    (_C.CANNOT_WAIVE_RIGHTS_RETENTION, "not_applicable", 1.00, 1.0),
    (_C.CANNOT_WAIVE_RIGHTS_RETENTION, "no", 1.00, 1.0),
    (_C.CANNOT_WAIVE_RIGHTS_RETENTION, "yes", 0.00, 0.0),
    (_C.CANNOT_WAIVE_RIGHTS_RETENTION, "not_specified", 0.10, 0.0),
    (_C.DEPOSIT_IMMEDIATELY, "at_acceptance", 1.00, 1.0),
    (_C.DEPOSIT_IMMEDIATELY, "at_publication", 0.20, 0.0),
    (_C.DEPOSIT_IMMEDIATELY, "end_of_policy_embargo", 0.10, 0.0),
    (_C.DEPOSIT_IMMEDIATELY, "when_publisher_permits", 0.05, 0.0),
    (_C.DEPOSIT_IMMEDIATELY, "not_specified", 0.00, 0.0),
    (_C.DEPOSIT_IMMEDIATELY, "other", 0.00, 0.0),
    (_C.MAKE_OA_IMMEDIATELY, "acceptance_date", 1.00, 1.0),
    (_C.MAKE_OA_IMMEDIATELY, "publication_date", 0.75, 1.0),
    (_C.MAKE_OA_IMMEDIATELY, "end_of_policy_embargo", 0.50, 0.0),
    (_C.MAKE_OA_IMMEDIATELY, "upon_deposit", 0.05, 0.0),
    (_C.MAKE_OA_IMMEDIATELY, "when_publisher_permits", 0.05, 0.0),
    (_C.MAKE_OA_IMMEDIATELY, "not_mentioned", 0.00, 0.0),
    (_C.MAKE_OA_IMMEDIATELY, "other", 0.00, 0.0),
    (_C.EMBARGO_STEM, "not_specified", 1.00, 1.0),
    (_C.EMBARGO_STEM, "zero", 1.00, 1.0),
    (_C.EMBARGO_STEM, "six", 0.50, 0.5),
    (_C.EMBARGO_STEM, "twelve", 0.05, 0.05),
    (_C.EMBARGO_STEM, "longer", 0.00, 0.0),
    (_C.EMBARGO_HASS, "not_specified", 1.00, 1.0),
    (_C.EMBARGO_HASS, "zero", 1.00, 1.0),
    (_C.EMBARGO_HASS, "six", 0.50, 0.5),
    (_C.EMBARGO_HASS, "twelve", 0.50, 0.5),
    (_C.DEPOSIT_IN_IR, "institutional_repository", 1.00, 1.0),
    (_C.DEPOSIT_IN_IR, "any_suitable", 0.00, 0.0),
    (_C.DEPOSIT_IN_IR, "not_specified", 0.00, 0.0),
    (_C.MUST_RETAIN_RIGHTS, "author_retains", 1.00, 1.0),
    (_C.MUST_RETAIN_RIGHTS, "author_grants_to_institution", 1.00, 1.0),
    (_C.MUST_RETAIN_RIGHTS, "institution_or_funder_retains", 1.00, 1.0),
    (_C.MUST_RETAIN_RIGHTS, "none_of_these", 0.00, 0.0),
    (_C.MUST_RETAIN_RIGHTS, "not_mentioned", 0.00, 0.0),
    (_C.OPEN_LICENSING, "no_reuse_licence_required", 1.00, 1.0),
    (_C.OPEN_LICENSING, "other", 0.50, 0.5),
    (_C.OPEN_LICENSING, "not_specified", 0.50, 0.5),
    (_C.OPEN_LICENSING, "cc_by", 0.00, 0.0),
    (_C.OPEN_LICENSING, "cc_by_nc", 0.00, 0.0),
    (_C.OPEN_LICENSING, "open_licence_unspecified", 0.00, 0.0),
)

# Schema options the published table never weighted.  Longer-than-listed
# embargo caps score 0 (they sit below the weakest weighted option);
# anything else unlisted stays a lookup error rather than a silent zero.
_SUPPLEMENT_ROWS: tuple[tuple[ConditionId, str, float, float], ...] = (
    (_C.EMBARGO_STEM, "twenty_four", 0.0, 0.0),
    (_C.EMBARGO_HASS, "twenty_four", 0.0, 0.0),
    (_C.EMBARGO_HASS, "longer", 0.0, 0.0),
)


@dataclass(frozen=True)
class OptionWeightTable:
    """Weights in [0, 1] for every (condition, option) pair of one scheme.

    ``weights`` is the verbatim published table; ``supplements`` covers the
    few schema options the table omits.  Lookups of anything else raise
    :class:`UncoveredOptionError`.
    """

    scheme: WeightScheme
    weights: MappingProxyType
    supplements: MappingProxyType

    def lookup(self, condition: ConditionId, option: str) -> float:
        if condition.continuous:
            raise ValueError("mandate_age is continuous and has no option weights")
        key = (condition, option)
        if key in self.weights:
            return self.weights[key]
        if key in self.supplements:
            return self.supplements[key]
        raise UncoveredOptionError(condition, option)


def _build_table(scheme: WeightScheme) -> OptionWeightTable:
    pick = (lambda w1, w2: w1) if scheme is WeightScheme.I else (lambda w1, w2: w2)
    weights = {(cond, opt): pick(w1, w2) for cond, opt, w1, w2 in _WEIGHT_ROWS}
    supplements = {(cond, opt): pick(w1, w2) for cond, opt, w1, w2 in _SUPPLEMENT_ROWS}
    return OptionWeightTable(
        scheme=scheme,
        weights=MappingProxyType(weights),
        supplements=MappingProxyType(supplements),
    )


_TABLE_I = _build_table(WeightScheme.I)
_TABLE_II = _build_table(WeightScheme.II)


def builtin_weight_tables() -> tuple[OptionWeightTable, OptionWeightTable]:
    """The two built-in weight tables (scheme I, scheme II)."""
    return _TABLE_I, _TABLE_II


def weight_table(scheme: WeightScheme) -> OptionWeightTable:
    return _TABLE_I if scheme is WeightScheme.I else _TABLE_II


def encode_policy(
    record: PolicyRecord,
    scheme: WeightScheme,
    reference_date: datetime.date,
) -> dict[ConditionId, float | None]:
    """Encode one policy as condition weights plus mandate age.

    Every table condition maps its record field through the scheme's weight
    table.  ``MANDATE_AGE`` is the policy age in years at ``reference_date``,
    or None when the record is not a mandate, lacks an adoption date, or was
    adopted after the reference date.
    """
    table = weight_table(scheme)
    encoded: dict[ConditionId, float | None] = {}
    for condition in TABLE_CONDITIONS:
        option = getattr(record, CONDITION_FIELDS[condition]).value
        encoded[condition] = table.lookup(condition, option)

    age: float | None = None
    if is_mandate(record) and record.adoption_date is not None:
        if record.adoption_date.value <= reference_date:
            age = mandate_age(record, reference_date)
    encoded[ConditionId.MANDATE_AGE] = age
    return encoded


@dataclass(frozen=True)
class DesignMatrix:
    """Institutions x conditions weight matrix with a recorded column order."""

    institution_ids: tuple[str, ...]
    conditions: tuple[ConditionId, ...]
    values: np.ndarray  # shape (n_institutions, n_conditions)
    scheme: WeightScheme

    def column(self, condition: ConditionId) -> np.ndarray:
        return self.values[:, self.conditions.index(condition)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["institution_id"] + [c.value for c in self.conditions])
        for inst, row in zip(self.institution_ids, self.values):
            writer.writerow([inst] + [f"{v:.4f}" for v in row])
        return buf.getvalue()


def read_design_matrix_csv(text: str, scheme: WeightScheme) -> DesignMatrix:
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if not header or header[0] != "institution_id":
        raise ValueError("design matrix CSV must start with an 'institution_id' column")
    conditions = tuple(ConditionId(name) for name in header[1:])
    ids, rows = [], []
    for row in reader:
        ids.append(row[0])
        rows.append([float(v) for v in row[1:]])
    values = np.asarray(rows, dtype=float).reshape(len(ids), len(conditions))
    return DesignMatrix(tuple(ids), conditions, values, scheme)


def build_design_matrix(
    snapshot: RegistrySnapshot,
    institutions: list[str] | tuple[str, ...],
    scheme: WeightScheme,
    conditions: tuple[ConditionId, ...] | list[ConditionId],
    reference_date: datetime.date,
) -> DesignMatrix:
    """One row per requested institution, columns restricted to ``conditions``.

    Raises on unresolved or duplicated institution ids, an empty condition
    subset, and on a requested mandate-age cell that is undefined (the matrix
    admits no missing cells).
    """
    conditions = tuple(conditions)
    if not conditions:
        raise ValueError("empty condition subset makes a degenerate model")
    institutions = tuple(institutions)
    if len(set(institutions)) != len(institutions):
        dupes = sorted({i for i in institutions if institutions.count(i) > 1})
        raise ValueError(f"institutions requested more than once: {dupes}")

    by_id = {r.id: r for r in snapshot.records}
    rows = []
    for inst in institutions:
        record = by_id.get(inst)
        if record is None:
            raise ValueError(f"no policy record for institution {inst!r}")
        encoded = encode_policy(record, scheme, reference_date)
        row = []
        for condition in conditions:
            value = encoded[condition]
            if value is None:
                raise ValueError(
                    f"institution {inst!r} has no defined {condition.value} value"
                )
            row.append(value)
        rows.append(row)

    values = np.asarray(rows, dtype=float).reshape(len(institutions), len(conditions))
    return DesignMatrix(institutions, conditions, values, scheme)
