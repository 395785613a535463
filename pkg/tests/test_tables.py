import pytest

from crb.core import Arm, Department
from crb.errors import EmptyCorpus
from crb.human_eval import ErrorItem, ErrorKind, Section
from crb.tables import (
    RANKED_ARMS_4,
    build_burden_table,
    build_detection_table,
    build_metric_table,
    build_pref_table,
    build_table,
    fmt_count_prop,
    fmt_metric,
    render,
)
from tests.test_core import make_case
from tests.test_human_eval import make_annotation


def published_pref_annotations():
    annotations = []
    for arm, counts in ((Arm.AI, (24, 40, 125, 111)), (Arm.Senior, (214, 62, 14, 10))):
        for rank, count in enumerate(counts, start=1):
            annotations += [make_annotation(arm=arm, ranking=rank) for _ in range(count)]
    return annotations


def test_cell_formats():
    assert fmt_count_prop(24, 300) == "24 (0.080)"
    assert fmt_count_prop(214, 300) == "214 (0.713)"
    assert fmt_metric(0.7153) == "0.715"
    assert fmt_metric(None) == ""
    assert fmt_metric(1.0) == "1.000"


def test_pref_table_published_cells():
    table = build_pref_table(published_pref_annotations(), scale=4, arm_order=RANKED_ARMS_4)
    rows = {row[0]: row for row in table.rows}
    assert rows["AI"][1] == "24 (0.080)"
    assert rows["AI"][2] == "40 (0.133)"
    assert rows["Senior"][1] == "214 (0.713)"
    assert table.header == ("Group", "Rank 1", "Rank 2", "Rank 3", "Rank 4")


def test_pref_table_empty():
    with pytest.raises(EmptyCorpus):
        build_pref_table([], scale=4)


def test_metric_table_columns():
    rows = [
        {
            "label": "ZH",
            "bleu_1": 0.6194,
            "bleu_2": 0.5,
            "bleu_3": 0.4,
            "bleu_4": 0.311,
            "rouge_l": 0.55,
            "meteor": 0.45,
            "bertscore_f1": 0.9,
            "recall": 0.715,
        }
    ]
    table = build_metric_table(rows)
    assert table.header == (
        "Group", "BLEU-1", "BLEU-2", "BLEU-3", "BLEU-4",
        "ROUGE-L", "METEOR", "BERTScore", "Recall",
    )
    assert table.rows[0] == ("ZH", "0.619", "0.500", "0.400", "0.311", "0.550", "0.450", "0.900", "0.715")


def test_detection_table():
    table = build_detection_table({"sialolithiasis": {"zh": 1.0, "en": None}})
    assert table.rows[0] == ("sialolithiasis", "1.000", "")


def test_burden_table_shape_and_markers():
    cases = [make_case(f"c{i}", department=Department.Ortho) for i in range(12)]
    annotations = []
    for case in cases:
        # AI heavily burdened, Senior clean: pairwise marker expected on Senior
        annotations.append(
            make_annotation(arm=Arm.AI, case_id=case.case_id, errors=[
                ErrorItem(Section.findings, ErrorKind.omission, True),
                ErrorItem(Section.findings, ErrorKind.omission, False),
            ])
        )
        annotations.append(make_annotation(arm=Arm.Senior, case_id=case.case_id))
    table = build_burden_table(
        "S4", annotations, cases, ErrorKind.omission, (Arm.AI, Arm.Senior), reference=Arm.AI
    )
    assert table.header[-1] == "p_value"
    findings_count = next(
        row for row in table.rows
        if row[0] == "findings" and row[1] == "Ortho" and row[2] == "mean_count"
    )
    assert findings_count[3] == "2.00"
    assert findings_count[4].startswith("0.00^")
    assert float(findings_count[-1]) < 0.05


def test_burden_table_no_marker_when_identical():
    cases = [make_case(f"c{i}") for i in range(8)]
    annotations = []
    for case in cases:
        for arm in (Arm.AI, Arm.Senior):
            annotations.append(
                make_annotation(arm=arm, case_id=case.case_id, errors=[
                    ErrorItem(Section.impression, ErrorKind.incorrection, False)
                ])
            )
    table = build_burden_table(
        "S5", annotations, cases, ErrorKind.incorrection, (Arm.AI, Arm.Senior), reference=Arm.AI
    )
    for row in table.rows:
        assert "^" not in row[3] and "^" not in row[4]


def test_render_tsv_and_markdown():
    table = build_pref_table(published_pref_annotations(), scale=4, arm_order=RANKED_ARMS_4)
    tsv = render(table, "tsv")
    assert tsv.splitlines()[0] == "Group\tRank 1\tRank 2\tRank 3\tRank 4"
    assert "24 (0.080)" in tsv
    md = render(table, "markdown")
    assert md.startswith("| Group |")
    assert "| --- |" in md
    with pytest.raises(ValueError):
        render(table, "csv")


def test_build_table_dispatch():
    annotations = published_pref_annotations()
    assert build_table("S3_pref", annotations=annotations).table_id == "S3_pref"
    with pytest.raises(ValueError):
        build_table("S99")
    with pytest.raises(EmptyCorpus):
        build_table("S2", metric_rows=[])
