"""Schema and aggregation for the human-evaluation protocol: preference
rank distributions, four-dimension quality means, omission/incorrection
burdens, and collaboration-minus-manual delta tables.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from crb.core import Arm, CaseRecord, Department, Role, COLLAB_TO_MANUAL
from crb.errors import EmptyGroup, KeyMismatch, ScaleMismatch, UnknownCase

QUALITY_DIMENSIONS = (
    "factual_consistency",
    "coherence",
    "medical_safety",
    "clinical_use",
)


class Section(str, enum.Enum):
    findings = "findings"
    impression = "impression"


class ErrorKind(str, enum.Enum):
    omission = "omission"
    incorrection = "incorrection"


@dataclass(frozen=True)
class ErrorItem:
    section: Section
    kind: ErrorKind
    clinically_significant: bool


@dataclass(frozen=True)
class Annotation:
    """One rater's verdict on one (case, arm) pair, post-de-blinding."""

    rater_id: str
    role: Role
    case_id: str
    arm: Arm
    ranking: int
    quality: dict[str, int]
    errors: tuple[ErrorItem, ...] = ()

    def __post_init__(self):
        if self.ranking < 1:
            raise ValueError(f"ranking must be >= 1, got {self.ranking}")
        if set(self.quality) != set(QUALITY_DIMENSIONS):
            raise ValueError(f"quality must score exactly {QUALITY_DIMENSIONS}")
        if any(not 1 <= v <= 4 for v in self.quality.values()):
            raise ValueError("quality scores must lie in 1..4")


def annotation_to_record(a: Annotation) -> dict:
    return {
        "rater_id": a.rater_id,
        "role": a.role.value,
        "case_id": a.case_id,
        "arm": a.arm.value,
        "ranking": a.ranking,
        "quality": dict(a.quality),
        "errors": [
            {
                "section": e.section.value,
                "kind": e.kind.value,
                "clinically_significant": e.clinically_significant,
            }
            for e in a.errors
        ],
    }


def annotation_from_record(d: dict) -> Annotation:
    return Annotation(
        rater_id=d["rater_id"],
        role=Role(d["role"]),
        case_id=d["case_id"],
        arm=Arm(d["arm"]),
        ranking=int(d["ranking"]),
        quality={k: int(v) for k, v in d["quality"].items()},
        errors=tuple(
            ErrorItem(
                section=Section(e["section"]),
                kind=ErrorKind(e["kind"]),
                clinically_significant=bool(e["clinically_significant"]),
            )
            for e in d.get("errors", ())
        ),
    )


# ---------------------------------------------------------------------------
# rank distributions


@dataclass(frozen=True)
class RankDistribution:
    scale: int
    counts: dict[Arm, tuple[int, ...]]

    def proportions(self, arm: Arm) -> tuple[float, ...]:
        c = self.counts[arm]
        total = sum(c)
        if total == 0:
            return tuple(0.0 for _ in c)
        return tuple(k / total for k in c)


def rank_distribution(annotations: list[Annotation], scale: int) -> RankDistribution:
    counts: dict[Arm, list[int]] = {}
    for a in annotations:
        if a.ranking > scale:
            raise ScaleMismatch(f"ranking {a.ranking} exceeds scale {scale}")
        counts.setdefault(a.arm, [0] * scale)[a.ranking - 1] += 1
    return RankDistribution(
        scale=scale, counts={arm: tuple(c) for arm, c in counts.items()}
    )


# ---------------------------------------------------------------------------
# quality scores


def quality_means(
    annotations: list[Annotation],
) -> dict[tuple[Arm, Role], dict[str, float]]:
    """Arithmetic mean per dimension per (arm, role); lower is better."""
    groups: dict[tuple[Arm, Role], list[Annotation]] = {}
    for a in annotations:
        groups.setdefault((a.arm, a.role), []).append(a)
    out = {}
    for key, members in groups.items():
        if not members:
            raise EmptyGroup(str(key))
        out[key] = {
            dim: sum(m.quality[dim] for m in members) / len(members)
            for dim in QUALITY_DIMENSIONS
        }
    return out


def delta_scores(
    collab: dict[tuple[Arm, Role], dict[str, float]],
    manual: dict[tuple[Arm, Role], dict[str, float]],
) -> dict[tuple[Arm, Role], dict[str, float]]:
    """Collaboration minus manual per dimension; negative = improvement.

    Keys of `collab` are Co* arms; each is matched to its manual tier under
    the same role.
    """
    out = {}
    for (arm, role), dims in collab.items():
        base_arm = COLLAB_TO_MANUAL.get(arm)
        if base_arm is None or (base_arm, role) not in manual:
            raise KeyMismatch(f"no manual counterpart for {arm.value}/{role.value}")
        base = manual[(base_arm, role)]
        out[(arm, role)] = {dim: dims[dim] - base[dim] for dim in QUALITY_DIMENSIONS}
    return out


# ---------------------------------------------------------------------------
# error burdens


@dataclass(frozen=True)
class ErrorBurden:
    arm: Arm
    subspecialty: Department
    section: Section
    kind: ErrorKind
    mean_count: float
    cs_proportion: float
    n: int


BurdenKey = tuple[Arm, Department, Section, ErrorKind]


def error_burden(
    annotations: list[Annotation], cases: list[CaseRecord]
) -> dict[BurdenKey, ErrorBurden]:
    """Mean per-case error counts and clinical-significance proportions,
    grouped by (arm, subspecialty, section, kind).

    cs_proportion is the mean over cases of the count of clinically
    significant items, i.e. the mean binary significance score when at most
    one significant item occurs per case.
    """
    dept_by_case = {c.case_id: c.department for c in cases}
    cells: dict[BurdenKey, list[tuple[int, int]]] = {}
    for a in annotations:
        dept = dept_by_case.get(a.case_id)
        if dept is None:
            raise UnknownCase(a.case_id)
        for section in Section:
            for kind in ErrorKind:
                items = [e for e in a.errors if e.section is section and e.kind is kind]
                cells.setdefault((a.arm, dept, section, kind), []).append(
                    (len(items), sum(1 for e in items if e.clinically_significant))
                )
    out = {}
    for key, rows in cells.items():
        arm, dept, section, kind = key
        n = len(rows)
        out[key] = ErrorBurden(
            arm=arm,
            subspecialty=dept,
            section=section,
            kind=kind,
            mean_count=sum(c for c, _ in rows) / n,
            cs_proportion=sum(s for _, s in rows) / n,
            n=n,
        )
    return out


def burden_delta(
    collab: dict[BurdenKey, ErrorBurden],
    manual: dict[BurdenKey, ErrorBurden],
) -> dict[BurdenKey, tuple[float, float]]:
    """Element-wise collaboration minus manual (mean_count, cs_proportion)."""
    out = {}
    for key, cb in collab.items():
        arm, dept, section, kind = key
        base_arm = COLLAB_TO_MANUAL.get(arm)
        if base_arm is None:
            raise KeyMismatch(f"{arm.value} is not a collaboration arm")
        base = manual.get((base_arm, dept, section, kind))
        if base is None:
            raise KeyMismatch(f"no manual counterpart for {key}")
        out[key] = (cb.mean_count - base.mean_count, cb.cs_proportion - base.cs_proportion)
    return out
