"""Entity-level correctness scoring of impressions.

"Accuracy" defaults to Jaccard overlap tp / (tp + fp + fn), which penalizes
both omitted and hallucinated entities; a stricter precision variant is
available via the `mode` argument.
"""

from __future__ import annotations

from dataclasses import dataclass

from crb.errors import EmptyCorpus


@dataclass(frozen=True)
class EntityScore:
    tp: int
    fp: int
    fn: int
    accuracy: float
    recall: float


def _safe_ratio(num: int, den: int) -> float:
    # 0/0 convention: a case with no entities on either side is perfect
    return num / den if den else 1.0


def score_case(pred: set[str], ref: set[str], mode: str = "jaccard") -> EntityScore:
    """tp/fp/fn over canonical-id sets with the 0/0 -> 1 convention."""
    tp = len(pred & ref)
    fp = len(pred - ref)
    fn = len(ref - pred)
    if mode == "jaccard":
        accuracy = _safe_ratio(tp, tp + fp + fn)
    elif mode == "precision":
        accuracy = _safe_ratio(tp, tp + fp)
    else:
        raise ValueError(f"unknown accuracy mode: {mode}")
    return EntityScore(tp=tp, fp=fp, fn=fn, accuracy=accuracy, recall=_safe_ratio(tp, tp + fn))


def per_entity_detection(
    cases: list[tuple[set[str], set[str]]], entity: str
) -> float | None:
    """Among cases whose reference contains `entity`, the fraction whose
    prediction also contains it; None when the entity never occurs."""
    present = [(pred, ref) for pred, ref in cases if entity in ref]
    if not present:
        return None
    detected = sum(1 for pred, _ in present if entity in pred)
    return detected / len(present)


def detection_table(
    cases_by_language: dict[str, list[tuple[set[str], set[str]]]],
    entities: list[str],
) -> dict[str, dict[str, float | None]]:
    """Per-entity detection fractions, one column per language."""
    return {
        entity: {
            lang: per_entity_detection(cases, entity)
            for lang, cases in cases_by_language.items()
        }
        for entity in entities
    }


def corpus_recall(cases: list[tuple[set[str], set[str]]]) -> float:
    """Micro-averaged recall: sum(tp) / sum(tp + fn)."""
    if not cases:
        raise EmptyCorpus("no cases")
    tp_sum = 0
    pos_sum = 0
    for pred, ref in cases:
        tp_sum += len(pred & ref)
        pos_sum += len(ref)
    return tp_sum / pos_sum if pos_sum else 1.0
