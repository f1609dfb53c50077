import pytest
from hypothesis import given, strategies as st

from softassets.docmodel import (
    Document,
    DocumentParseError,
    EmptyDocument,
    Span,
    from_plaintext,
    from_tei,
    segment_sentences,
)

TEI_TWO_PARAS = b"""<?xml version="1.0" encoding="UTF-8"?>
<TEI xmlns="http://www.tei-c.org/ns/1.0">
  <text><body>
    <div><p>First paragraph here.</p></div>
    <div><p>Second paragraph too.</p></div>
  </body></text>
</TEI>
"""

TEI_WITH_BIBL = b"""<?xml version="1.0" encoding="UTF-8"?>
<TEI xmlns="http://www.tei-c.org/ns/1.0">
  <text><body>
    <div><p>Body sentence.</p></div>
    <listBibl>
      <bibl xml:id="b1">Doe J, Tool paper, 2020. <ptr target="https://example.org/tool"/></bibl>
    </listBibl>
  </body></text>
</TEI>
"""


def test_segment_splits_after_short_name():
    spans = segment_sentences("We used R. It worked.")
    assert len(spans) == 2
    text = "We used R. It worked."
    raw = text.encode("utf-8")
    assert raw[spans[0].start_byte : spans[0].end_byte] == b"We used R."
    assert raw[spans[1].start_byte : spans[1].end_byte] == b"It worked."


def test_segment_respects_abbreviations():
    assert len(segment_sentences("See Fig. 2 for details.")) == 1
    assert len(segment_sentences("Methods, e.g. Regression, were used.")) == 1


def test_segment_empty():
    assert segment_sentences("") == []


def test_segment_keeps_middle_initial():
    assert len(segment_sentences("John R. Smith agreed. We proceeded.")) == 2


def test_from_plaintext_paragraphs_and_sentences():
    doc = from_plaintext("A. B.\n\nC.", "d1")
    assert len(doc.paragraphs) == 2
    assert len(doc.sentences) == 3
    assert [doc.text(s) for s in doc.sentences] == ["A.", "B.", "C."]


def test_from_plaintext_single_word():
    doc = from_plaintext("SPSS", "d1")
    assert len(doc.paragraphs) == 1
    assert len(doc.sentences) == 1
    assert doc.text(doc.sentences[0]) == "SPSS"


@pytest.mark.parametrize("text", ["", "   \n\t  "])
def test_from_plaintext_empty(text):
    with pytest.raises(EmptyDocument):
        from_plaintext(text, "d1")


def test_from_tei_two_paragraphs():
    doc = from_tei(TEI_TWO_PARAS, "d1")
    assert len(doc.paragraphs) == 2
    assert len(doc.sentences) == 2
    assert doc.body == "First paragraph here.\nSecond paragraph too."


def test_from_tei_no_paragraphs():
    xml = b'<TEI xmlns="http://www.tei-c.org/ns/1.0"><text><body/></text></TEI>'
    with pytest.raises(EmptyDocument):
        from_tei(xml, "d1")


def test_from_tei_reference_with_url():
    doc = from_tei(TEI_WITH_BIBL, "d1")
    assert len(doc.references) == 1
    ref = doc.references[0]
    assert ref.ref_id == "b1"
    assert ref.target_url == "https://example.org/tool"
    assert "Doe J" in ref.raw_text
    # bibl text stays out of the body
    assert doc.body == "Body sentence."


def test_from_tei_malformed():
    with pytest.raises(DocumentParseError):
        from_tei(b"<TEI><unclosed>", "d1")


def test_multibyte_spans_are_codepoint_aligned():
    doc = from_plaintext("Café test done. Next sentence here.", "d1")
    assert len(doc.sentences) == 2
    assert doc.text(doc.sentences[0]) == "Café test done."
    assert doc.text(doc.sentences[1]) == "Next sentence here."


def test_sentences_lie_within_one_paragraph():
    doc = from_plaintext("One two. Three four.\n\nFive six.", "d1")
    for s in doc.sentences:
        containing = [
            p
            for p in doc.paragraphs
            if p.start_byte <= s.start_byte and s.end_byte <= p.end_byte
        ]
        assert len(containing) == 1


@given(
    st.lists(
        st.text(
            alphabet=st.characters(
                whitelist_categories=("Lu", "Ll", "Nd"), whitelist_characters=" "
            ),
            min_size=1,
            max_size=40,
        ).filter(lambda t: t.strip()),
        min_size=1,
        max_size=4,
    )
)
def test_sentence_spans_trimmed_property(paragraph_texts):
    text = "\n\n".join(p + "." for p in paragraph_texts)
    doc = from_plaintext(text, "d1")
    for s in doc.sentences:
        surface = doc.text(s)
        assert surface
        assert surface == surface.strip()


def test_tei_body_roundtrip_matches_plaintext():
    tei_doc = from_tei(TEI_TWO_PARAS, "d1")
    plain_doc = from_plaintext(tei_doc.body, "d1")
    assert [tei_doc.text(s) for s in tei_doc.sentences] == [
        plain_doc.text(s) for s in plain_doc.sentences
    ]


def test_span_validation():
    with pytest.raises(ValueError):
        Span(5, 5)
    with pytest.raises(ValueError):
        Span(-1, 3)


def test_bundled_tei_corpus_roundtrips_as_plaintext():
    from importlib import resources

    docs_dir = resources.files("softassets") / "fixtures" / "docs"
    tei_files = sorted(p for p in docs_dir.iterdir() if p.name.endswith(".tei.xml"))
    assert tei_files
    for path in tei_files:
        tei_doc = from_tei(path.read_bytes(), path.name)
        plain_doc = from_plaintext(tei_doc.body, path.name)
        assert [tei_doc.text(s) for s in tei_doc.sentences] == [
            plain_doc.text(s) for s in plain_doc.sentences
        ]
