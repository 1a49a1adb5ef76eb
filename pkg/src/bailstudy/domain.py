"""Core case types and the determinacy classification rule.

A case label is determinate when the observed appearance outcome was produced
by the defendant's own behaviour, and indeterminate when pretrial detention
forced the outcome, censoring what the defendant would have done if released.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Mapping


class BailStatusKind(Enum):
    POSTED = "posted"
    FORFEITED = "forfeited"
    REVOKED = "revoked"
    DENIED = "denied"
    SET = "set"
    PARTIAL_POSTING = "partial_posting"
    BOND_TERMINATED = "bond_terminated"


@dataclass(frozen=True)
class BailStatus:
    """Final status of a bail request, with the cause of a revocation."""

    kind: BailStatusKind
    revocation_due_to_fta: bool = False

    def __post_init__(self) -> None:
        if self.revocation_due_to_fta and self.kind is not BailStatusKind.REVOKED:
            raise ValueError(
                "revocation_due_to_fta is only meaningful when kind is REVOKED"
            )


class LabelStatus(Enum):
    DETERMINATE = "determinate"
    INDETERMINATE = "indeterminate"


class ImputationMethod(Enum):
    """The five strategies for assigning training labels to censored cases."""

    CORR = "corr"
    DAF = "daf"
    OBS = "obs"
    OBS_IP = "obs_ip"
    NN = "nn"


def classify_label_status(status: BailStatus) -> LabelStatus:
    """Classify a bail status as determinate or indeterminate.

    Determinate: bail posted, bail forfeited, or bail revoked because the
    defendant failed to appear. Every other configuration implies the case
    ended in pretrial detention, so the observed outcome is censored. Pure
    and total over the status enumeration.
    """
    if status.kind in (BailStatusKind.POSTED, BailStatusKind.FORFEITED):
        return LabelStatus.DETERMINATE
    if status.kind is BailStatusKind.REVOKED and status.revocation_due_to_fta:
        return LabelStatus.DETERMINATE
    return LabelStatus.INDETERMINATE


@dataclass(frozen=True)
class CaseRecord:
    """One bail case: raw features, bail status, and the observed outcome.

    ``label_status`` is derived, never set directly; use :meth:`create`.
    Instances are immutable and safe to share across workers.
    """

    case_id: str
    features: Mapping[str, str]
    bail_status: BailStatus
    fta_observed: bool
    label_status: LabelStatus

    def __post_init__(self) -> None:
        if self.label_status is not classify_label_status(self.bail_status):
            raise ValueError(
                f"label_status of case {self.case_id!r} does not match its bail status"
            )

    @classmethod
    def create(
        cls,
        case_id: str,
        features: Mapping[str, str],
        bail_status: BailStatus,
        fta_observed: bool,
    ) -> "CaseRecord":
        return cls(
            case_id=case_id,
            features=dict(features),
            bail_status=bail_status,
            fta_observed=fta_observed,
            label_status=classify_label_status(bail_status),
        )

    @property
    def is_determinate(self) -> bool:
        return self.label_status is LabelStatus.DETERMINATE
