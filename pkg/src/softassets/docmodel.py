"""Uniform document model over TEI XML or plain text.

Documents carry byte-accurate sentence and paragraph spans (offsets into
the UTF-8 encoding of the body) plus the bibliographic reference list, so
downstream extraction can point back into the exact source text.
"""

from __future__ import annotations

import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field


class DocumentError(Exception):
    pass


class DocumentParseError(DocumentError):
    """Input is not well-formed XML."""


class EmptyDocument(DocumentError):
    """No usable body text."""


TEI_NS = "http://www.tei-c.org/ns/1.0"

# Abbreviations that never terminate a sentence.
NO_SPLIT_ABBREVIATIONS = ("e.g.", "i.e.", "et al.", "Fig.", "vs.")

_URL_IN_TEXT = re.compile(r"https?://[^\s<>\"\)\]]+")


@dataclass(frozen=True)
class Span:
    """Half-open byte range [start_byte, end_byte) into the document body."""

    start_byte: int
    end_byte: int

    def __post_init__(self):
        if not (0 <= self.start_byte < self.end_byte):
            raise ValueError(f"invalid span [{self.start_byte}, {self.end_byte})")


@dataclass(frozen=True)
class Reference:
    ref_id: str
    raw_text: str
    target_url: str | None = None


@dataclass(frozen=True)
class Document:
    doc_id: str
    body: str
    paragraphs: tuple[Span, ...]
    sentences: tuple[Span, ...]
    references: tuple[Reference, ...] = ()
    _body_bytes: bytes = field(init=False, repr=False, compare=False, default=b"")

    def __post_init__(self):
        object.__setattr__(self, "_body_bytes", self.body.encode("utf-8"))

    def text(self, span: Span) -> str:
        """Body text covered by a byte span."""
        return self._body_bytes[span.start_byte : span.end_byte].decode("utf-8")

    def sentence_of(self, span: Span) -> int:
        """Index of the sentence containing the span, or -1."""
        for i, s in enumerate(self.sentences):
            if s.start_byte <= span.start_byte and span.end_byte <= s.end_byte:
                return i
        return -1


def _byte_offsets(text: str) -> list[int]:
    """offsets[i] = byte offset of character i in the UTF-8 encoding."""
    offsets = [0] * (len(text) + 1)
    pos = 0
    for i, ch in enumerate(text):
        offsets[i] = pos
        pos += len(ch.encode("utf-8"))
    offsets[len(text)] = pos
    return offsets


def _is_split_blocked(before: str) -> bool:
    """True when the '.' ending `before` must not terminate a sentence."""
    for abbrev in NO_SPLIT_ABBREVIATIONS:
        if before.endswith(abbrev):
            return True
    # Middle initial: "John R. Smith" keeps the period inside the sentence.
    # A bare initial with no capitalized word before it ("A. B.") still splits.
    m = re.search(r"(\S+)\s+[A-Z]\.$", before)
    if m and m.group(1)[:1].isupper():
        return True
    return False


def _segment_chars(text: str) -> list[tuple[int, int]]:
    """Sentence boundaries as character ranges, whitespace-trimmed."""
    if not text.strip():
        return []
    splits = []
    for m in re.finditer(r"[.!?]", text):
        i = m.start()
        tail = text[i + 1 :]
        follow = re.match(r"\s+[A-Z0-9]", tail)
        if not follow:
            continue
        if text[i] == "." and _is_split_blocked(text[: i + 1]):
            continue
        splits.append(i + 1)
    ranges = []
    start = 0
    for cut in splits + [len(text)]:
        chunk = text[start:cut]
        stripped = chunk.strip()
        if stripped:
            lead = len(chunk) - len(chunk.lstrip())
            ranges.append((start + lead, start + lead + len(stripped)))
        start = cut
    return ranges


def segment_sentences(text: str) -> list[Span]:
    """Split text into sentence spans (byte offsets into the text's UTF-8 form).

    A sentence ends after '.', '!' or '?' followed by whitespace and an
    uppercase letter or digit, except inside the fixed abbreviation list and
    after middle initials.
    """
    offsets = _byte_offsets(text)
    return [Span(offsets[a], offsets[b]) for a, b in _segment_chars(text)]


def _assemble(doc_id: str, paragraph_texts: list[str], references: list[Reference]) -> Document:
    body = "\n".join(paragraph_texts)
    offsets = _byte_offsets(body)
    paragraphs = []
    sentences = []
    pos = 0
    for para in paragraph_texts:
        start, end = pos, pos + len(para)
        paragraphs.append(Span(offsets[start], offsets[end]))
        for a, b in _segment_chars(para):
            sentences.append(Span(offsets[start + a], offsets[start + b]))
        pos = end + 1  # the joining newline
    return Document(
        doc_id=doc_id,
        body=body,
        paragraphs=tuple(paragraphs),
        sentences=tuple(sentences),
        references=tuple(references),
    )


def from_plaintext(text: str, doc_id: str) -> Document:
    """Build a Document from plain text; paragraphs split on blank lines."""
    if not text.strip():
        raise EmptyDocument(doc_id)
    paragraph_texts = [
        _collapse_ws(chunk) for chunk in re.split(r"\n\s*\n", text) if chunk.strip()
    ]
    return _assemble(doc_id, paragraph_texts, [])


def _collapse_ws(text: str) -> str:
    return re.sub(r"\s+", " ", text).strip()


def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def _element_text(el: ET.Element) -> str:
    return _collapse_ws("".join(el.itertext()))


def from_tei(xml_bytes: bytes, doc_id: str) -> Document:
    """Build a Document from a TEI XML body.

    The body is the newline-joined text of the <p> elements; <biblStruct>
    and <bibl> entries become References.
    """
    try:
        root = ET.fromstring(xml_bytes)
    except ET.ParseError as exc:
        raise DocumentParseError(f"{doc_id}: {exc}") from exc

    bibl_tags = {"biblStruct", "bibl"}
    paragraph_texts = []
    references: list[Reference] = []
    in_bibl: set[int] = set()

    def walk(el: ET.Element, inside_bibl: bool):
        tag = _local(el.tag)
        if tag in bibl_tags and not inside_bibl:
            references.append(_reference_from(el, len(references) + 1))
            inside_bibl = True
        elif tag == "p" and not inside_bibl:
            text = _element_text(el)
            if text:
                paragraph_texts.append(text)
        for child in el:
            walk(child, inside_bibl)

    walk(root, False)
    if not paragraph_texts:
        raise EmptyDocument(doc_id)
    return _assemble(doc_id, paragraph_texts, references)


def _reference_from(el: ET.Element, ordinal: int) -> Reference:
    ref_id = el.get("{http://www.w3.org/XML/1998/namespace}id") or str(ordinal)
    raw_text = _element_text(el)
    target_url = None
    for child in el.iter():
        if _local(child.tag) == "ptr" and child.get("target"):
            target_url = child.get("target")
            break
    if target_url is None:
        m = _URL_IN_TEXT.search(raw_text)
        if m:
            target_url = m.group(0)
    return Reference(ref_id=ref_id, raw_text=raw_text, target_url=target_url)
