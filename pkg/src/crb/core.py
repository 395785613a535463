"""Shared domain types, validation, and line-delimited record I/O.

Every record file in this project is line-delimited JSON: one object per
line, snake_case field names matching the dataclass fields below.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Iterable, Iterator


class Sex(str, enum.Enum):
    female = "female"
    male = "male"


class Department(str, enum.Enum):
    OMFS = "OMFS"
    Endo = "Endo"
    Ortho = "Ortho"
    PerioImplantProstho = "PerioImplantProstho"


class Fov(str, enum.Enum):
    large = "large"
    moderate = "moderate"
    small = "small"


class Language(str, enum.Enum):
    zh = "zh"
    en = "en"


class Role(str, enum.Enum):
    radiologist = "radiologist"
    clinician = "clinician"


class Arm(str, enum.Enum):
    """One report source in a study; Co* arms are collaboration arms."""

    GroundTruth = "GroundTruth"
    AI = "AI"
    Novice = "Novice"
    Intermediate = "Intermediate"
    Senior = "Senior"
    CoNovice = "CoNovice"
    CoIntermediate = "CoIntermediate"
    CoSenior = "CoSenior"

    @property
    def is_collaboration(self) -> bool:
        return self in COLLAB_TO_MANUAL


COLLAB_TO_MANUAL = {
    Arm.CoNovice: Arm.Novice,
    Arm.CoIntermediate: Arm.Intermediate,
    Arm.CoSenior: Arm.Senior,
}

MANUAL_TIERS = (Arm.Novice, Arm.Intermediate, Arm.Senior)


@dataclass(frozen=True)
class CaseRecord:
    case_id: str
    sex: Sex
    age_years: int
    department: Department
    fov: Fov
    clinical_diagnosis: str
    slice_count: int
    pixel_spacing_mm: tuple[float, float]

    def __post_init__(self):
        if self.age_years < 0:
            raise ValueError(f"age_years must be >= 0, got {self.age_years}")
        if self.slice_count < 1:
            raise ValueError(f"slice_count must be >= 1, got {self.slice_count}")
        if len(self.pixel_spacing_mm) != 2 or any(s <= 0 for s in self.pixel_spacing_mm):
            raise ValueError(f"pixel_spacing_mm must be two positive reals, got {self.pixel_spacing_mm}")


@dataclass(frozen=True)
class Report:
    report_id: str
    case_id: str
    arm: Arm
    language: Language
    findings: str
    impression: str

    def __post_init__(self):
        if not self.findings.strip() or not self.impression.strip():
            raise ValueError("findings and impression must be non-empty")


@dataclass(frozen=True)
class StudyConfig:
    study_id: str
    arms_in_scope: frozenset[Arm]
    rank_scale: int
    rater_roles: frozenset[Role]
    blinding_seed: int

    def __post_init__(self):
        if self.rank_scale not in (4, 6):
            raise ValueError(f"rank_scale must be 4 or 6, got {self.rank_scale}")
        if len(self.arms_in_scope) != self.rank_scale:
            raise ValueError(
                f"|arms_in_scope| = {len(self.arms_in_scope)} must equal rank_scale = {self.rank_scale}"
            )


@dataclass(frozen=True)
class Violation:
    kind: str  # missing_arm | duplicate_report | dangling_case
    detail: str


def validate_study(
    config: StudyConfig,
    reports: Iterable[Report],
    cases: Iterable[CaseRecord],
) -> list[Violation]:
    """Collect structural violations; empty list iff the study is well-formed.

    Idempotent and insensitive to input ordering (output is sorted).
    """
    reports = list(reports)
    case_ids = {c.case_id for c in cases}
    violations: list[Violation] = []

    seen: set[tuple[str, Arm, Language]] = set()
    for r in reports:
        key = (r.case_id, r.arm, r.language)
        if key in seen:
            violations.append(
                Violation("duplicate_report", f"{r.case_id}/{r.arm.value}/{r.language.value}")
            )
        seen.add(key)
        if r.case_id not in case_ids:
            violations.append(Violation("dangling_case", f"{r.report_id} -> {r.case_id}"))

    by_case_lang: dict[tuple[str, Language], set[Arm]] = {}
    for (cid, arm, lang) in seen:
        by_case_lang.setdefault((cid, lang), set()).add(arm)
    for (cid, lang), arms in sorted(by_case_lang.items(), key=lambda kv: (kv[0][0], kv[0][1].value)):
        if cid not in case_ids:
            continue
        for arm in sorted(config.arms_in_scope, key=lambda a: a.value):
            if arm not in arms:
                violations.append(Violation("missing_arm", f"{cid}/{lang.value}: {arm.value}"))

    return sorted(set(violations), key=lambda v: (v.kind, v.detail))


# ---------------------------------------------------------------------------
# record (de)serialization


def case_to_record(c: CaseRecord) -> dict:
    d = asdict(c)
    d["sex"] = c.sex.value
    d["department"] = c.department.value
    d["fov"] = c.fov.value
    d["pixel_spacing_mm"] = list(c.pixel_spacing_mm)
    return d


def case_from_record(d: dict) -> CaseRecord:
    return CaseRecord(
        case_id=d["case_id"],
        sex=Sex(d["sex"]),
        age_years=int(d["age_years"]),
        department=Department(d["department"]),
        fov=Fov(d["fov"]),
        clinical_diagnosis=d["clinical_diagnosis"],
        slice_count=int(d["slice_count"]),
        pixel_spacing_mm=tuple(d["pixel_spacing_mm"]),
    )


def report_to_record(r: Report) -> dict:
    d = asdict(r)
    d["arm"] = r.arm.value
    d["language"] = r.language.value
    return d


def report_from_record(d: dict) -> Report:
    return Report(
        report_id=d["report_id"],
        case_id=d["case_id"],
        arm=Arm(d["arm"]),
        language=Language(d["language"]),
        findings=d["findings"],
        impression=d["impression"],
    )


def read_records(path: str | Path) -> Iterator[dict]:
    """Yield one JSON object per non-blank line."""
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                yield json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: invalid record: {exc}") from exc


def write_records(path: str | Path, records: Iterable[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, ensure_ascii=False, sort_keys=True) + "\n")
