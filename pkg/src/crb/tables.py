"""Publication-shaped table assembly.

Table ids: S2 (generation metrics), S3_detect (per-entity detection),
S3_pref / S6 (preference rank distributions at scale 4 / 6), S4 / S5
(omission / incorrection burden with p values), S7 / S8 (the same burdens
over the collaboration arms).

Formatting is locked for golden-file stability: metrics and proportions to
three decimals with a leading zero, burden means to two decimals, ranking
cells as "count (proportion)".
"""

from __future__ import annotations

from dataclasses import dataclass

from crb import human_eval, stats
from crb.core import Arm, CaseRecord, Department
from crb.errors import EmptyCorpus
from crb.human_eval import Annotation, ErrorKind, Section

TABLE_IDS = ("S2", "S3_detect", "S3_pref", "S4", "S5", "S6", "S7", "S8")

RANKED_ARMS_4 = (Arm.AI, Arm.Novice, Arm.Intermediate, Arm.Senior)
RANKED_ARMS_6 = (
    Arm.Novice,
    Arm.Intermediate,
    Arm.Senior,
    Arm.CoNovice,
    Arm.CoIntermediate,
    Arm.CoSenior,
)
COLLAB_ARMS = (Arm.CoNovice, Arm.CoIntermediate, Arm.CoSenior)


@dataclass(frozen=True)
class Table:
    table_id: str
    header: tuple[str, ...]
    rows: tuple[tuple[str, ...], ...]


def fmt_metric(v: float | None) -> str:
    return "" if v is None else f"{v:.3f}"


def fmt_mean(v: float) -> str:
    return f"{v:.2f}"


def fmt_count_prop(count: int, total: int) -> str:
    prop = count / total if total else 0.0
    return f"{count} ({prop:.3f})"


def render(table: Table, fmt: str = "tsv") -> str:
    if fmt == "tsv":
        lines = ["\t".join(table.header)]
        lines += ["\t".join(row) for row in table.rows]
        return "\n".join(lines) + "\n"
    if fmt == "markdown":
        lines = [
            "| " + " | ".join(table.header) + " |",
            "| " + " | ".join("---" for _ in table.header) + " |",
        ]
        lines += ["| " + " | ".join(row) + " |" for row in table.rows]
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown table format: {fmt}")


# ---------------------------------------------------------------------------
# S2: generation metrics


def build_metric_table(rows: list[dict]) -> Table:
    """Each input row: label plus corpus metric fields (bleu_1..4, rouge_l,
    meteor, optional bertscore_f1 and recall)."""
    if not rows:
        raise EmptyCorpus("no metric rows")
    out = []
    for r in rows:
        out.append(
            (
                str(r.get("label", r.get("scope", ""))),
                fmt_metric(r["bleu_1"]),
                fmt_metric(r["bleu_2"]),
                fmt_metric(r["bleu_3"]),
                fmt_metric(r["bleu_4"]),
                fmt_metric(r["rouge_l"]),
                fmt_metric(r["meteor"]),
                fmt_metric(r.get("bertscore_f1")),
                fmt_metric(r.get("recall")),
            )
        )
    header = (
        "Group",
        "BLEU-1",
        "BLEU-2",
        "BLEU-3",
        "BLEU-4",
        "ROUGE-L",
        "METEOR",
        "BERTScore",
        "Recall",
    )
    return Table("S2", header, tuple(out))


# ---------------------------------------------------------------------------
# S3 detection


def build_detection_table(
    detection: dict[str, dict[str, float | None]],
    display: dict[str, str] | None = None,
    languages: tuple[str, ...] = ("zh", "en"),
) -> Table:
    if not detection:
        raise EmptyCorpus("no detection rows")
    rows = []
    for entity in sorted(detection):
        cols = detection[entity]
        rows.append(
            (display.get(entity, entity) if display else entity,)
            + tuple(fmt_metric(cols.get(lang)) for lang in languages)
        )
    return Table("S3_detect", ("Entity",) + languages, tuple(rows))


# ---------------------------------------------------------------------------
# preference distributions


def build_pref_table(
    annotations: list[Annotation], scale: int, arm_order: tuple[Arm, ...] | None = None
) -> Table:
    if not annotations:
        raise EmptyCorpus("no annotations")
    dist = human_eval.rank_distribution(annotations, scale)
    if arm_order is None:
        arm_order = tuple(sorted(dist.counts, key=lambda a: a.value))
    rows = []
    for arm in arm_order:
        if arm not in dist.counts:
            continue
        counts = dist.counts[arm]
        total = sum(counts)
        rows.append(
            (arm.value,) + tuple(fmt_count_prop(c, total) for c in counts)
        )
    if not rows:
        raise EmptyCorpus("no annotations for the requested arms")
    header = ("Group",) + tuple(f"Rank {i}" for i in range(1, scale + 1))
    return Table("S3_pref" if scale == 4 else "S6", header, tuple(rows))


# ---------------------------------------------------------------------------
# error burdens


def _per_case_values(
    annotations: list[Annotation], section: Section, kind: ErrorKind, measure: str
) -> list[tuple[Annotation, float]]:
    out = []
    for a in annotations:
        items = [e for e in a.errors if e.section is section and e.kind is kind]
        if measure == "count":
            out.append((a, float(len(items))))
        else:
            out.append((a, float(sum(1 for e in items if e.clinically_significant))))
    return out


def pairwise_markers(
    groups: dict[Arm, list[float]], reference: Arm
) -> dict[Arm, str]:
    """Letter markers for arms whose Holm-adjusted pairwise comparison to
    the reference is significant at strictly p < 0.05."""
    others = [a for a in groups if a is not reference]
    comparisons = []
    for arm in others:
        if not groups[arm] or not groups.get(reference):
            continue
        res = stats.mann_whitney_u(groups[reference], groups[arm])
        comparisons.append((arm, res.p_value))
    if not comparisons:
        return {}
    adjusted = stats.holm_adjust([p for _, p in comparisons])
    letters = "abcdef"
    markers = {}
    for i, ((arm, _), p_adj) in enumerate(zip(comparisons, adjusted)):
        if p_adj < 0.05:
            markers[arm] = letters[i % len(letters)]
    return markers


def build_burden_table(
    table_id: str,
    annotations: list[Annotation],
    cases: list[CaseRecord],
    kind: ErrorKind,
    arms: tuple[Arm, ...],
    reference: Arm | None = None,
) -> Table:
    """Rows: (section, subspecialty incl. Total) x (mean count, CS);
    columns: one per arm plus an overall Kruskal-Wallis p value."""
    if not annotations:
        raise EmptyCorpus("no annotations")
    dept_by_case = {c.case_id: c.department for c in cases}
    header = ("Section", "Subspecialty", "Measure") + tuple(a.value for a in arms) + ("p_value",)
    rows = []
    strata: list[Department | None] = list(Department) + [None]
    for section in Section:
        for dept in strata:
            for measure in ("count", "cs"):
                values = _per_case_values(annotations, section, kind, measure)
                groups: dict[Arm, list[float]] = {a: [] for a in arms}
                for a, v in values:
                    if a.arm not in groups:
                        continue
                    if dept is not None and dept_by_case.get(a.case_id) != dept:
                        continue
                    groups[a.arm].append(v)
                if not any(groups.values()):
                    continue
                populated = [g for g in groups.values() if g]
                p_cell = ""
                if len(populated) >= 2:
                    kw = stats.kruskal_wallis(populated)
                    p_cell = fmt_metric(kw.p_value)
                markers = (
                    pairwise_markers(groups, reference)
                    if reference is not None and groups.get(reference)
                    else {}
                )
                cells = []
                for arm in arms:
                    g = groups[arm]
                    if not g:
                        cells.append("")
                        continue
                    cell = fmt_mean(sum(g) / len(g))
                    if arm in markers:
                        cell += f"^{markers[arm]}"
                    cells.append(cell)
                rows.append(
                    (
                        section.value,
                        dept.value if dept is not None else "Total",
                        "mean_count" if measure == "count" else "cs",
                    )
                    + tuple(cells)
                    + (p_cell,)
                )
    if not rows:
        raise EmptyCorpus("no error items for the requested arms")
    return Table(table_id, header, tuple(rows))


def build_table(
    table_id: str,
    *,
    metric_rows: list[dict] | None = None,
    detection: dict[str, dict[str, float | None]] | None = None,
    annotations: list[Annotation] | None = None,
    cases: list[CaseRecord] | None = None,
) -> Table:
    if table_id == "S2":
        return build_metric_table(metric_rows or [])
    if table_id == "S3_detect":
        return build_detection_table(detection or {})
    if table_id == "S3_pref":
        return build_pref_table(annotations or [], scale=4, arm_order=RANKED_ARMS_4)
    if table_id == "S6":
        return build_pref_table(annotations or [], scale=6, arm_order=RANKED_ARMS_6)
    if table_id in ("S4", "S5"):
        kind = ErrorKind.omission if table_id == "S4" else ErrorKind.incorrection
        return build_burden_table(
            table_id, annotations or [], cases or [], kind, RANKED_ARMS_4, reference=Arm.AI
        )
    if table_id in ("S7", "S8"):
        kind = ErrorKind.omission if table_id == "S7" else ErrorKind.incorrection
        return build_burden_table(table_id, annotations or [], cases or [], kind, COLLAB_ARMS)
    raise ValueError(f"unknown table id: {table_id}")
