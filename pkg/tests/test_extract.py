import itertools

import pytest
from hypothesis import given, strategies as st

from softassets.docmodel import Reference, Span, from_plaintext
from softassets.extract import (
    Component,
    ExtractConfig,
    Gazetteer,
    GazetteerEntry,
    GazetteerError,
    MentionStyle,
    SoftwareMention,
    attach_attributes,
    classify_style,
    evaluate,
    extract_mentions,
    load_gold_jsonl,
    with_style,
)

GAZ = Gazetteer(
    {
        "SPSS": GazetteerEntry("SPSS", publisher="IBM", canonical_url="https://www.ibm.com/spss"),
        "R": GazetteerEntry("R", publisher="R Core Team"),
        "NumPy": GazetteerEntry("NumPy", aliases=frozenset({"numpy"}), publisher="NumFOCUS"),
        "GraphPad Prism": GazetteerEntry("GraphPad Prism", publisher="GraphPad Software"),
        "MATLAB": GazetteerEntry("MATLAB", aliases=frozenset({"Matlab"})),
    }
)


def doc_of(text, doc_id="d1"):
    return from_plaintext(text, doc_id)


def test_name_and_version_with_confidence():
    doc = doc_of("We used SPSS version 21 for analysis.")
    mentions = extract_mentions(doc, GAZ)
    assert [(m.component, m.surface) for m in mentions] == [
        (Component.SOFTWARE_NAME, "SPSS"),
        (Component.VERSION, "21"),
    ]
    name, version = mentions
    assert name.confidence == 1.0  # 0.6 base + 0.2 cue ("version") + 0.2 attach
    assert version.confidence == pytest.approx(0.8)
    assert doc.text(name.span) == "SPSS"
    assert doc.text(version.span) == "21"


def test_no_gazetteer_hits_yields_nothing():
    doc = doc_of("Participants answered a survey about daily habits in 2020.")
    assert extract_mentions(doc, GAZ) == []


def test_short_allcaps_names_match_case_sensitively():
    doc = doc_of("The spss procedure")
    assert extract_mentions(doc, GAZ) == []


def test_longer_names_match_case_insensitively():
    doc = doc_of("Simulations ran in matlab overnight.")
    mentions = extract_mentions(doc, GAZ)
    assert [m.surface for m in mentions] == ["matlab"]


def test_longest_match_wins():
    doc = doc_of("Plots were made with GraphPad Prism yesterday.")
    mentions = extract_mentions(doc, GAZ)
    assert [m.surface for m in mentions] == ["GraphPad Prism"]


def test_name_at_sentence_end_matches():
    doc = doc_of("All statistics were computed in SPSS.")
    mentions = extract_mentions(doc, GAZ)
    assert [m.surface for m in mentions] == ["SPSS"]


def test_bracketed_citation_number_is_not_a_version():
    doc = doc_of("Data were analysed using the R software environment [1].")
    mentions = extract_mentions(doc, GAZ)
    assert [m.component for m in mentions] == [Component.SOFTWARE_NAME]


def test_version_window_limit():
    filler = " ".join(["word"] * 11)
    doc = doc_of(f"SPSS helped {filler} 21 里")
    mentions = extract_mentions(doc, GAZ)
    assert [m.component for m in mentions] == [Component.SOFTWARE_NAME]


def test_url_and_publisher_in_name_sentence():
    doc = doc_of("We used NumPy from https://numpy.org, maintained by NumFOCUS.")
    mentions = extract_mentions(doc, GAZ)
    by_component = {m.component: m for m in mentions}
    assert by_component[Component.URL].surface == "https://numpy.org"
    assert by_component[Component.PUBLISHER].surface == "NumFOCUS"
    # 0.6 base + 0.2 attachment; no cue word in this sentence
    assert by_component[Component.SOFTWARE_NAME].confidence == pytest.approx(0.8)


def test_url_alone_is_not_a_mention():
    doc = doc_of("Data lives at https://example.org/data.")
    assert extract_mentions(doc, GAZ) == []


def test_min_confidence_filter():
    doc = doc_of("Results came from SPSS.")  # no cue, no attachment -> 0.6
    assert extract_mentions(doc, GAZ, ExtractConfig(min_confidence=0.7)) == []
    assert len(extract_mentions(doc, GAZ, ExtractConfig(min_confidence=0.6))) == 1


def test_span_fidelity_and_determinism():
    doc = doc_of(
        "We used SPSS version 21 daily.\n\nLater numpy 1.26 and MATLAB were compared."
    )
    first = extract_mentions(doc, GAZ)
    second = extract_mentions(doc, GAZ)
    assert first == second
    for m in first:
        assert doc.text(m.span) == m.surface
    starts = [m.span.start_byte for m in first]
    assert starts == sorted(starts)


def test_monotonicity_when_adding_entries():
    doc = doc_of("We combined SPSS with Stata for the analysis.")
    before = extract_mentions(doc, GAZ)
    bigger = Gazetteer(
        {**{k: v for k, v in GAZ.entries.items()}, "Stata": GazetteerEntry("Stata")}
    )
    after = extract_mentions(doc, bigger)
    assert {m.mention_id for m in before} <= {m.mention_id for m in after}


def test_gazetteer_alias_collision_rejected():
    with pytest.raises(GazetteerError):
        Gazetteer(
            {
                "NumPy": GazetteerEntry("NumPy", aliases=frozenset({"np"})),
                "Numpy2": GazetteerEntry("Numpy2", aliases=frozenset({"np"})),
            }
        )


def test_gazetteer_tsv_roundtrip():
    tsv = "SPSS\t\thttps://www.ibm.com/spss\tIBM\nNumPy\tnumpy|np\thttps://numpy.org\t\n"
    gaz = Gazetteer.from_tsv(tsv)
    assert gaz.entries["SPSS"].publisher == "IBM"
    assert gaz.entries["NumPy"].aliases == frozenset({"numpy", "np"})
    assert gaz.entries["NumPy"].canonical_url == "https://numpy.org"


# --- grouping -----------------------------------------------------------------


def test_attach_name_and_version():
    doc = doc_of("We used SPSS version 21 for analysis.")
    groups = attach_attributes(extract_mentions(doc, GAZ), doc)
    assert len(groups) == 1
    g = groups[0]
    assert g.name.surface == "SPSS"
    assert g.version.surface == "21"
    assert g.url is None and g.publisher is None
    assert g.sentence_text == "We used SPSS version 21 for analysis."


def test_attach_name_only():
    doc = doc_of("Output came from SPSS.")
    groups = attach_attributes(extract_mentions(doc, GAZ), doc)
    assert len(groups) == 1
    assert groups[0].version is None


def test_orphan_attribute_dropped():
    # hand-built orphan: a version mention in a sentence with no name
    doc = doc_of("Nothing else matters here.")
    orphan = SoftwareMention(
        mention_id="d1:0-3:Version",
        doc_id="d1",
        component=Component.VERSION,
        span=Span(0, 3),
        surface="Not",
        sentence_index=0,
        confidence=0.6,
    )
    assert attach_attributes([orphan], doc) == []


def test_version_attaches_to_nearest_preceding_name():
    doc = doc_of("Both NumPy and MATLAB 9.4 were used as tools.")
    groups = attach_attributes(extract_mentions(doc, GAZ), doc)
    by_name = {g.name.surface: g for g in groups}
    assert by_name["MATLAB"].version.surface == "9.4"
    assert by_name["NumPy"].version is None


# --- style classification -----------------------------------------------------


def test_style_formal_with_bracket_marker():
    doc = doc_of("Data were processed using SPSS [3].")
    refs = [Reference(ref_id="3", raw_text="Corp. SPSS manual, 2020.")]
    groups = attach_attributes(extract_mentions(doc, GAZ), doc)
    assert classify_style(groups[0], refs) is MentionStyle.FORMAL_WITH_REFERENCE


def test_style_informal_without_marker():
    doc = doc_of("Data were processed using SPSS.")
    groups = attach_attributes(extract_mentions(doc, GAZ), doc)
    assert classify_style(groups[0], []) is MentionStyle.INFORMAL


def test_style_unresolved_marker_is_informal():
    doc = doc_of("Data were processed using SPSS [9].")
    refs = [Reference(ref_id="3", raw_text="Some other work, 2019.")]
    groups = attach_attributes(extract_mentions(doc, GAZ), doc)
    assert classify_style(groups[0], refs) is MentionStyle.INFORMAL


def test_style_author_year_marker():
    doc = doc_of("Analyses used MATLAB (Smith, 2018).")
    refs = [Reference(ref_id="1", raw_text="Smith J. Numerical tools. 2018.")]
    groups = [with_style(g, refs) for g in attach_attributes(extract_mentions(doc, GAZ), doc)]
    assert groups[0].style is MentionStyle.FORMAL_WITH_REFERENCE


# --- evaluation ---------------------------------------------------------------


def _mention(doc_id, component, start, end):
    return SoftwareMention(
        mention_id=f"{doc_id}:{start}-{end}:{component.value}",
        doc_id=doc_id,
        component=component,
        span=Span(start, end),
        surface="x",
        sentence_index=0,
        confidence=1.0,
    )


def brute_force_counts(predicted, gold):
    """Independent O(n*m) one-to-one matcher used to cross-check evaluate()."""
    remaining = list(gold)
    tp = 0
    for p in predicted:
        for g in remaining:
            if (
                p.doc_id == g.doc_id
                and p.component == g.component
                and p.span == g.span
            ):
                remaining.remove(g)
                tp += 1
                break
    return tp, len(predicted) - tp, len(gold) - tp


def test_evaluate_identity():
    gold = [_mention("d1", Component.SOFTWARE_NAME, 0, 4), _mention("d1", Component.VERSION, 10, 12)]
    report = evaluate(gold, gold)
    assert report.micro.precision == report.micro.recall == report.micro.f1 == 1.0


def test_evaluate_empty_predictions():
    gold = [_mention("d1", Component.SOFTWARE_NAME, i * 10, i * 10 + 4) for i in range(4)]
    report = evaluate([], gold)
    assert (report.micro.precision, report.micro.recall, report.micro.f1) == (0.0, 0.0, 0.0)
    assert report.micro.fn == 4


def test_evaluate_two_thirds_case():
    gold = [
        _mention("d1", Component.SOFTWARE_NAME, 0, 4),
        _mention("d1", Component.SOFTWARE_NAME, 10, 14),
        _mention("d1", Component.VERSION, 20, 22),
    ]
    predicted = [
        _mention("d1", Component.SOFTWARE_NAME, 0, 4),
        _mention("d1", Component.VERSION, 20, 22),
        _mention("d1", Component.SOFTWARE_NAME, 30, 34),  # FP
    ]
    report = evaluate(predicted, gold)
    tp, fp, fn = brute_force_counts(predicted, gold)
    assert (tp, fp, fn) == (2, 1, 1)
    assert (report.micro.tp, report.micro.fp, report.micro.fn) == (tp, fp, fn)
    assert report.micro.precision == pytest.approx(2 / 3)
    assert report.micro.recall == pytest.approx(2 / 3)
    assert report.micro.f1 == pytest.approx(2 / 3)


def test_evaluate_empty_both():
    report = evaluate([], [])
    assert (report.micro.tp, report.micro.fp, report.micro.fn) == (0, 0, 0)
    assert report.micro.f1 == 0.0


def test_evaluate_zero_mention_docs_counted():
    gold = [_mention("d1", Component.SOFTWARE_NAME, 0, 4)]
    report = evaluate(gold, gold, doc_ids=["d1", "d2", "d3"])
    assert report.docs_total == 3
    assert report.docs_zero_mention == 2


def test_evaluate_matches_brute_force_randomized():
    import random

    rng = random.Random(5)
    docs = ["a", "b"]
    components = [Component.SOFTWARE_NAME, Component.VERSION]

    def random_mentions(n):
        return [
            _mention(rng.choice(docs), rng.choice(components), s * 10, s * 10 + 4)
            for s in (rng.randrange(6) for _ in range(n))
        ]

    for _ in range(50):
        predicted, gold = random_mentions(rng.randrange(7)), random_mentions(rng.randrange(7))
        report = evaluate(predicted, gold)
        assert (report.micro.tp, report.micro.fp, report.micro.fn) == brute_force_counts(
            predicted, gold
        )


def test_load_gold_jsonl():
    text = '{"doc_id": "d1", "component": "SoftwareName", "start_byte": 3, "end_byte": 7, "surface": "SPSS"}\n'
    gold = load_gold_jsonl(text)
    assert gold[0].component is Component.SOFTWARE_NAME
    assert gold[0].span == Span(3, 7)


@given(st.text(alphabet=st.characters(whitelist_categories=("Lu", "Ll", "Nd"), whitelist_characters=" .,"), max_size=120))
def test_extract_span_fidelity_property(text):
    if not text.strip():
        return
    doc = from_plaintext(text, "d1")
    for m in extract_mentions(doc, GAZ):
        assert doc.text(m.span) == m.surface
