"""Deterministic synthetic study generator.

Generates cohorts mirroring the real data's structure (long-tail entity
frequencies, department and FOV strata) and renders rigid bilingual
template reports: one sentence per entity, fixed ordering, so that entity
extraction round-trips exactly. Fault injection (omissions, entity swaps)
emits an exact manifest for downstream oracle checks.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from crb.core import (
    Arm,
    CaseRecord,
    Department,
    Fov,
    Language,
    Report,
    Role,
    Sex,
)
from crb.human_eval import Annotation, ErrorItem, ErrorKind, Section
from crb.lexicon import EntityLexicon

# Long-tail head weights seeded from the training-cohort entity counts; the
# remaining vocabulary shares a configurable tail weight.
HEAD_ENTITY_WEIGHTS = {
    "impacted_tooth": 4896.0,
    "apical_periodontitis": 4766.0,
    "malocclusion": 3498.0,
    "dental_caries": 2248.0,
    "root_canal_treatment": 1938.0,
    "partial_edentulism": 1928.0,
}
DEFAULT_TAIL_WEIGHT = 100.0

# FOV stratum counts from the training cohort, normalized at use.
DEFAULT_FOV_WEIGHTS = {Fov.large: 3307.0, Fov.moderate: 3132.0, Fov.small: 668.0}

DEFAULT_DEPARTMENT_WEIGHTS = {d: 1.0 for d in Department}

_EMPTY_SECTION = {
    Language.zh: "未见明显异常",
    Language.en: "No significant abnormality",
}


@dataclass(frozen=True)
class CohortSpec:
    n_cases: int
    seed: int = 0
    entity_frequency: dict[str, float] | None = None
    department_mix: dict[Department, float] | None = None
    fov_mix: dict[Fov, float] | None = None
    max_entities: int = 7

    def __post_init__(self):
        if self.n_cases < 1:
            raise ValueError("n_cases must be positive")
        for mix in (self.entity_frequency, self.department_mix, self.fov_mix):
            if mix is not None:
                if any(w < 0 for w in mix.values()) or not any(w > 0 for w in mix.values()):
                    raise ValueError("weights must be >= 0 with at least one positive")


@dataclass(frozen=True)
class FaultProfile:
    omission_rate: float = 0.0
    incorrection_rate: float = 0.0
    cs_probability: float = 0.0

    def __post_init__(self):
        for name in ("omission_rate", "incorrection_rate", "cs_probability"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")


def default_entity_weights(lexicon: EntityLexicon, tail_weight: float = DEFAULT_TAIL_WEIGHT) -> dict[str, float]:
    return {
        cid: HEAD_ENTITY_WEIGHTS.get(cid, tail_weight) for cid in lexicon.ids()
    }


def _weighted_sample_without_replacement(
    rng: random.Random, weights: dict[str, float], k: int
) -> list[str]:
    pool = {cid: w for cid, w in weights.items() if w > 0}
    chosen = []
    for _ in range(min(k, len(pool))):
        ids = sorted(pool)
        total = sum(pool[c] for c in ids)
        r = rng.random() * total
        acc = 0.0
        pick = ids[-1]
        for cid in ids:
            acc += pool[cid]
            if r < acc:
                pick = cid
                break
        chosen.append(pick)
        del pool[pick]
    return chosen


def _weighted_choice(rng: random.Random, weights: dict) -> object:
    keys = sorted(weights, key=lambda k: getattr(k, "value", str(k)))
    total = sum(weights[k] for k in keys)
    r = rng.random() * total
    acc = 0.0
    for k in keys:
        acc += weights[k]
        if r < acc:
            return k
    return keys[-1]


def _phrase(lexicon: EntityLexicon, cid: str, language: Language) -> str:
    entry = lexicon.get(cid)
    return entry.surfaces_zh[0] if language is Language.zh else entry.surfaces_en[0]


def _render_findings(entities: list[str], lexicon: EntityLexicon, language: Language) -> str:
    if language is Language.zh:
        lead = "CBCT影像呈现了上下颌骨及牙列的情况。"
        body = "".join(f"可见{_phrase(lexicon, e, language)}相关影像表现。" for e in entities)
        return lead + body
    lead = "CBCT imaging reveals the condition of the jaws and dentition. "
    body = " ".join(
        f"Imaging features consistent with {_phrase(lexicon, e, language)} are noted."
        for e in entities
    )
    return (lead + body).strip()


def _render_impression(entities: list[str], lexicon: EntityLexicon, language: Language) -> str:
    if language is Language.zh:
        return "".join(f"{_phrase(lexicon, e, language)}。" for e in entities)
    return " ".join(f"{_phrase(lexicon, e, language).capitalize()}." for e in entities)


def synth_cohort(
    spec: CohortSpec, lexicon: EntityLexicon
) -> tuple[list[CaseRecord], list[Report], dict[str, list[str]]]:
    """Sample cases and render bilingual ground-truth reports.

    Returns (cases, reports, entities_by_case). Bit-identical across runs
    for a fixed spec: every case derives its own RNG from (seed, index).
    """
    weights = spec.entity_frequency or default_entity_weights(lexicon)
    dept_mix = spec.department_mix or DEFAULT_DEPARTMENT_WEIGHTS
    fov_mix = spec.fov_mix or DEFAULT_FOV_WEIGHTS

    cases: list[CaseRecord] = []
    reports: list[Report] = []
    entities_by_case: dict[str, list[str]] = {}
    for idx in range(spec.n_cases):
        rng = random.Random(f"{spec.seed}:{idx}")
        case_id = f"case-{idx:05d}"
        k = rng.randint(1, spec.max_entities)
        entities = _weighted_sample_without_replacement(rng, weights, k)
        entities_by_case[case_id] = entities
        cases.append(
            CaseRecord(
                case_id=case_id,
                sex=rng.choice((Sex.female, Sex.male)),
                age_years=rng.randint(6, 85),
                department=_weighted_choice(rng, dept_mix),
                fov=_weighted_choice(rng, fov_mix),
                clinical_diagnosis=lexicon.get(entities[0]).display_en,
                slice_count=rng.randint(60, 400),
                pixel_spacing_mm=rng.choice(((0.3, 0.3), (0.25, 0.25), (0.2, 0.2))),
            )
        )
        for language in (Language.zh, Language.en):
            reports.append(
                Report(
                    report_id=f"{case_id}-GroundTruth-{language.value}",
                    case_id=case_id,
                    arm=Arm.GroundTruth,
                    language=language,
                    findings=_render_findings(entities, lexicon, language),
                    impression=_render_impression(entities, lexicon, language),
                )
            )
    return cases, reports, entities_by_case


# ---------------------------------------------------------------------------
# fault injection


def _split_sentences(text: str, language: Language) -> list[str]:
    sep = "。" if language is Language.zh else "."
    return [s.strip() for s in text.split(sep) if s.strip()]


def _join_sentences(sentences: list[str], language: Language) -> str:
    if language is Language.zh:
        return "".join(f"{s}。" for s in sentences)
    return " ".join(f"{s}." for s in sentences)


def degrade(
    report: Report,
    entities: list[str],
    profile: FaultProfile,
    seed: int,
    lexicon: EntityLexicon,
) -> tuple[Report, list[dict]]:
    """Remove entity sentences (omissions) and swap entities (incorrections)
    per the profile's rates; returns the degraded report and the exact
    manifest of injected errors.
    """
    rng = random.Random(f"{seed}:{report.report_id}")
    manifest: list[dict] = []
    sections = {
        Section.findings: _split_sentences(report.findings, report.language),
        Section.impression: _split_sentences(report.impression, report.language),
    }
    other_ids = [cid for cid in lexicon.ids() if cid not in entities]
    for entity in entities:
        phrase = _phrase(lexicon, entity, report.language)
        for section in (Section.findings, Section.impression):
            sentences = sections[section]
            hit = next((i for i, s in enumerate(sentences) if phrase.lower() in s.lower()), None)
            if hit is None:
                continue
            if rng.random() < profile.omission_rate:
                del sentences[hit]
                manifest.append(
                    {
                        "section": section.value,
                        "kind": ErrorKind.omission.value,
                        "entity": entity,
                        "clinically_significant": rng.random() < profile.cs_probability,
                    }
                )
            elif other_ids and rng.random() < profile.incorrection_rate:
                swap = other_ids[rng.randrange(len(other_ids))]
                swap_phrase = _phrase(lexicon, swap, report.language)
                s = sentences[hit]
                at = s.lower().find(phrase.lower())
                if s[at : at + 1].isupper():
                    swap_phrase = swap_phrase[:1].upper() + swap_phrase[1:]
                sentences[hit] = s[:at] + swap_phrase + s[at + len(phrase):]
                manifest.append(
                    {
                        "section": section.value,
                        "kind": ErrorKind.incorrection.value,
                        "entity": entity,
                        "swapped_for": swap,
                        "clinically_significant": rng.random() < profile.cs_probability,
                    }
                )
    for section, sentences in sections.items():
        if not sentences:
            sentences.append(_EMPTY_SECTION[report.language])
    return (
        Report(
            report_id=report.report_id + "-degraded",
            case_id=report.case_id,
            arm=report.arm,
            language=report.language,
            findings=_join_sentences(sections[Section.findings], report.language),
            impression=_join_sentences(sections[Section.impression], report.language),
        ),
        manifest,
    )


def annotation_from_manifest(
    case_id: str,
    arm: Arm,
    manifest: list[dict],
    rater_id: str = "auto",
    role: Role = Role.radiologist,
    ranking: int = 1,
) -> Annotation:
    """Auto-annotation whose error items mirror an injected-fault manifest,
    for pipeline oracle checks."""
    errors = tuple(
        ErrorItem(
            section=Section(m["section"]),
            kind=ErrorKind(m["kind"]),
            clinically_significant=bool(m["clinically_significant"]),
        )
        for m in manifest
    )
    score = min(4, 1 + len(errors))
    return Annotation(
        rater_id=rater_id,
        role=role,
        case_id=case_id,
        arm=arm,
        ranking=ranking,
        quality={dim: score for dim in ("factual_consistency", "coherence", "medical_safety", "clinical_use")},
        errors=errors,
    )
