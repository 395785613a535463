import pytest
from hypothesis import given, strategies as st

from crb.errors import EmptyCorpus
from crb.scoring import (
    corpus_recall,
    detection_table,
    per_entity_detection,
    score_case,
)


def test_score_case_jaccard():
    s = score_case({"a", "b", "x"}, {"a", "b", "c"})
    assert (s.tp, s.fp, s.fn) == (2, 1, 1)
    assert s.accuracy == pytest.approx(2 / 4)
    assert s.recall == pytest.approx(2 / 3)


def test_score_case_precision_mode():
    s = score_case({"a", "b", "x"}, {"a", "b", "c"}, mode="precision")
    assert s.accuracy == pytest.approx(2 / 3)
    with pytest.raises(ValueError):
        score_case(set(), set(), mode="other")


def test_score_case_empty_convention():
    s = score_case(set(), set())
    assert s.accuracy == 1.0
    assert s.recall == 1.0


def test_score_case_hallucination_only():
    s = score_case({"a"}, set())
    assert s.accuracy == 0.0
    assert s.recall == 1.0  # no reference positives to miss


def test_per_entity_detection():
    cases = [
        ({"a"}, {"a"}),
        (set(), {"a"}),
        ({"a", "b"}, {"a", "b"}),
        ({"b"}, {"b"}),
    ]
    assert per_entity_detection(cases, "a") == pytest.approx(2 / 3)
    assert per_entity_detection(cases, "b") == 1.0
    assert per_entity_detection(cases, "zz") is None


def test_detection_table_shape():
    table = detection_table(
        {"zh": [({"a"}, {"a"})], "en": [(set(), {"a"})]}, ["a", "b"]
    )
    assert table["a"]["zh"] == 1.0
    assert table["a"]["en"] == 0.0
    assert table["b"]["zh"] is None


def test_corpus_recall_micro_average():
    cases = [({"a"}, {"a", "b"}), ({"c", "d"}, {"c", "d"})]
    # tp = 1 + 2 = 3, positives = 2 + 2 = 4
    assert corpus_recall(cases) == pytest.approx(0.75)


def test_corpus_recall_self_is_one():
    cases = [({"a", "b"}, {"a", "b"}), (set(), set())]
    assert corpus_recall(cases) == 1.0


def test_corpus_recall_empty():
    with pytest.raises(EmptyCorpus):
        corpus_recall([])


@given(
    st.lists(
        st.tuples(
            st.sets(st.sampled_from("abcdef")), st.sets(st.sampled_from("abcdef"))
        ),
        min_size=1,
        max_size=20,
    )
)
def test_scores_bounded(cases):
    for pred, ref in cases:
        s = score_case(pred, ref)
        assert 0.0 <= s.accuracy <= 1.0
        assert 0.0 <= s.recall <= 1.0
    assert 0.0 <= corpus_recall(cases) <= 1.0
