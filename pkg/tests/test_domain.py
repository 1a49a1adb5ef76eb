import pytest

from bailstudy.domain import (
    BailStatus,
    BailStatusKind,
    CaseRecord,
    LabelStatus,
    classify_label_status,
)

# The full taxonomy: seven statuses plus the revocation-cause split.
TAXONOMY = [
    (BailStatus(BailStatusKind.POSTED), LabelStatus.DETERMINATE),
    (BailStatus(BailStatusKind.FORFEITED), LabelStatus.DETERMINATE),
    (BailStatus(BailStatusKind.REVOKED, revocation_due_to_fta=True), LabelStatus.DETERMINATE),
    (BailStatus(BailStatusKind.REVOKED, revocation_due_to_fta=False), LabelStatus.INDETERMINATE),
    (BailStatus(BailStatusKind.DENIED), LabelStatus.INDETERMINATE),
    (BailStatus(BailStatusKind.SET), LabelStatus.INDETERMINATE),
    (BailStatus(BailStatusKind.PARTIAL_POSTING), LabelStatus.INDETERMINATE),
    (BailStatus(BailStatusKind.BOND_TERMINATED), LabelStatus.INDETERMINATE),
]


@pytest.mark.parametrize("status,expected", TAXONOMY)
def test_taxonomy(status, expected):
    assert classify_label_status(status) is expected


def test_every_status_kind_is_classified():
    covered = {status.kind for status, _ in TAXONOMY}
    assert covered == set(BailStatusKind)


def test_classification_is_deterministic():
    for status, _ in TAXONOMY:
        first = classify_label_status(status)
        assert all(classify_label_status(status) is first for _ in range(5))


def test_revocation_flag_requires_revoked_kind():
    with pytest.raises(ValueError):
        BailStatus(BailStatusKind.POSTED, revocation_due_to_fta=True)


def test_case_record_derives_label_status():
    record = CaseRecord.create(
        "c1", {"age": "[18,25)"}, BailStatus(BailStatusKind.DENIED), fta_observed=False
    )
    assert record.label_status is LabelStatus.INDETERMINATE
    assert not record.is_determinate


def test_case_record_rejects_inconsistent_label():
    with pytest.raises(ValueError):
        CaseRecord(
            case_id="c1",
            features={},
            bail_status=BailStatus(BailStatusKind.POSTED),
            fta_observed=False,
            label_status=LabelStatus.INDETERMINATE,
        )
