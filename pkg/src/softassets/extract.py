"""Software mention extraction.

A gazetteer plus deterministic rules recognizes software names, versions,
publishers and URLs per sentence, groups them, classifies the mention
style, and scores predictions against gold annotations with exact-span,
one-to-one matching.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path

from .docmodel import Document, Span

TOKEN_RE = re.compile(r"[0-9A-Za-z._\-]+")
VERSION_RE = re.compile(r"^[vV]?\d+(\.\d+)*$")
URL_RE = re.compile(r"https?://[^\s<>\"\)\]]+")
CITATION_BRACKET_RE = re.compile(r"\[(\d+)\]")
CITATION_AUTHOR_RE = re.compile(
    r"\(\s*([A-Z][A-Za-z'’\-]+)(?:\s+(?:et\s+al\.?|and\s+[A-Z][A-Za-z'’\-]+))?"
    r"\s*,\s*(\d{4})\s*\)"
)

CUE_WORDS = frozenset({"software", "package", "tool", "program", "version", "implemented"})

# Distance (in tokens) a version may trail the software name it belongs to.
VERSION_WINDOW = 10


class Component(str, Enum):
    SOFTWARE_NAME = "SoftwareName"
    VERSION = "Version"
    PUBLISHER = "Publisher"
    URL = "Url"


class MentionStyle(str, Enum):
    INFORMAL = "Informal"
    FORMAL_WITH_REFERENCE = "FormalWithReference"


class GazetteerError(Exception):
    pass


@dataclass(frozen=True)
class GazetteerEntry:
    name: str
    aliases: frozenset[str] = frozenset()
    canonical_url: str | None = None
    publisher: str | None = None


class Gazetteer:
    """Dictionary of software names with per-alias case-matching rules.

    Short all-caps names (length <= 4, like "SPSS" or "R") match
    case-sensitively to avoid false hits on common words; everything else
    matches case-insensitively.
    """

    def __init__(self, entries: dict[str, GazetteerEntry]):
        self.entries = dict(entries)
        # index[token_count][(mode, key)] -> canonical name
        self._index: dict[int, dict[tuple[str, str], str]] = {}
        self.max_tokens = 0
        for canonical, entry in self.entries.items():
            if not entry.name:
                raise GazetteerError("empty gazetteer name")
            for alias in {entry.name, *entry.aliases}:
                self._add_alias(alias, canonical)

    def _add_alias(self, alias: str, canonical: str):
        tokens = TOKEN_RE.findall(alias)
        if not tokens:
            raise GazetteerError(f"alias {alias!r} has no tokens")
        if len(alias) <= 4 and alias.isupper():
            key = ("cs", " ".join(tokens))
        else:
            key = ("ci", " ".join(tokens).casefold())
        bucket = self._index.setdefault(len(tokens), {})
        if bucket.get(key, canonical) != canonical:
            raise GazetteerError(f"alias {alias!r} maps to both {bucket[key]!r} and {canonical!r}")
        bucket[key] = canonical
        self.max_tokens = max(self.max_tokens, len(tokens))

    def lookup(self, token_texts: list[str]) -> str | None:
        """Canonical name for a token sequence, or None."""
        bucket = self._index.get(len(token_texts))
        if not bucket:
            return None
        joined = " ".join(token_texts)
        return bucket.get(("cs", joined)) or bucket.get(("ci", joined.casefold()))

    @classmethod
    def from_tsv(cls, source: "str | Path") -> "Gazetteer":
        """Load from UTF-8 TSV: name, pipe-separated aliases, url, publisher."""
        text = Path(source).read_text(encoding="utf-8") if isinstance(source, Path) else source
        entries = {}
        for line in text.splitlines():
            if not line.strip() or line.startswith("#"):
                continue
            cols = line.split("\t")
            cols += [""] * (4 - len(cols))
            name, aliases, url, publisher = (c.strip() for c in cols[:4])
            entries[name] = GazetteerEntry(
                name=name,
                aliases=frozenset(a.strip() for a in aliases.split("|") if a.strip()),
                canonical_url=url or None,
                publisher=publisher or None,
            )
        return cls(entries)


@dataclass(frozen=True)
class SoftwareMention:
    mention_id: str
    doc_id: str
    component: Component
    span: Span
    surface: str
    sentence_index: int
    confidence: float

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} out of range")


@dataclass(frozen=True)
class MentionGroup:
    group_id: str
    name: SoftwareMention
    version: SoftwareMention | None = None
    publisher: SoftwareMention | None = None
    url: SoftwareMention | None = None
    style: MentionStyle = MentionStyle.INFORMAL
    sentence_text: str = ""


@dataclass(frozen=True)
class ExtractConfig:
    min_confidence: float = 0.5


@dataclass(frozen=True)
class _Token:
    text: str
    core: str  # text without trailing sentence periods
    start: int  # char offset in sentence
    core_end: int
    index: int


def _tokenize(sentence: str) -> list[_Token]:
    tokens = []
    for i, m in enumerate(TOKEN_RE.finditer(sentence)):
        core = m.group(0).rstrip(".")
        tokens.append(_Token(m.group(0), core, m.start(), m.start() + len(core), i))
    return [t for t in tokens if t.core]


def _byte_offsets(text: str) -> list[int]:
    offsets = [0] * (len(text) + 1)
    pos = 0
    for i, ch in enumerate(text):
        offsets[i] = pos
        pos += len(ch.encode("utf-8"))
    offsets[len(text)] = pos
    return offsets


@dataclass
class _Hit:
    component: Component
    char_start: int
    char_end: int
    surface: str
    canonical: str | None = None
    last_token_index: int | None = None
    token_index: int | None = None


def _name_hits(tokens: list[_Token], gaz: Gazetteer) -> list[_Hit]:
    hits = []
    for i in range(len(tokens)):
        for length in range(min(gaz.max_tokens, len(tokens) - i), 0, -1):
            seq = tokens[i : i + length]
            canonical = gaz.lookup([t.core for t in seq])
            if canonical is not None:
                hits.append(
                    _Hit(
                        Component.SOFTWARE_NAME,
                        seq[0].start,
                        seq[-1].core_end,
                        canonical=canonical,
                        surface="",
                        last_token_index=seq[-1].index,
                    )
                )
                break  # longest match starting here; shorter ones are shadowed
    return hits


def _version_hits(sentence: str, tokens: list[_Token], names: list[_Hit]) -> list[_Hit]:
    covered = [range(n.char_start, n.char_end) for n in names]
    hits = []
    for tok in tokens:
        if not VERSION_RE.match(tok.core):
            continue
        if any(tok.start in r for r in covered):
            continue
        # "[3]" is a citation marker, not a version number
        if (
            tok.start > 0
            and sentence[tok.start - 1] == "["
            and sentence[tok.core_end : tok.core_end + 1] == "]"
        ):
            continue
        in_window = any(
            n.last_token_index is not None
            and n.last_token_index < tok.index <= n.last_token_index + VERSION_WINDOW
            for n in names
        )
        if in_window:
            hits.append(
                _Hit(Component.VERSION, tok.start, tok.core_end, surface="", token_index=tok.index)
            )
    return hits


def _url_hits(sentence: str) -> list[_Hit]:
    hits = []
    for m in URL_RE.finditer(sentence):
        url = m.group(0).rstrip(".,;:")
        if url:
            hits.append(_Hit(Component.URL, m.start(), m.start() + len(url), surface=""))
    return hits


def _publisher_hits(sentence: str, names: list[_Hit], gaz: Gazetteer) -> list[_Hit]:
    hits = []
    seen_spans = set()
    name_spans = {(n.char_start, n.char_end) for n in names}
    for canonical in sorted({n.canonical for n in names if n.canonical}):
        publisher = gaz.entries[canonical].publisher
        if not publisher:
            continue
        pattern = re.compile(r"(?<!\w)" + re.escape(publisher) + r"(?!\w)")
        for m in pattern.finditer(sentence):
            span = (m.start(), m.end())
            if span in name_spans or span in seen_spans:
                continue
            seen_spans.add(span)
            hits.append(_Hit(Component.PUBLISHER, span[0], span[1], surface=""))
    return hits


def _nearest_name(names: list[_Hit], char_start: int) -> _Hit | None:
    preceding = [n for n in names if n.char_start <= char_start]
    if preceding:
        return max(preceding, key=lambda n: n.char_start)
    following = [n for n in names if n.char_start > char_start]
    if following:
        return min(following, key=lambda n: n.char_start)
    return None


def extract_mentions(
    doc: Document, gaz: Gazetteer, cfg: ExtractConfig = ExtractConfig()
) -> list[SoftwareMention]:
    """Recognize software mentions in every sentence of the document.

    Confidence for a name is 0.6, plus 0.2 when the sentence contains a cue
    word, plus 0.2 when a version or URL attaches to it (capped at 1.0).
    """
    mentions: list[SoftwareMention] = []
    for sentence_index, sent_span in enumerate(doc.sentences):
        sentence = doc.text(sent_span)
        tokens = _tokenize(sentence)
        names = _name_hits(tokens, gaz)
        if not names:
            continue
        versions = _version_hits(sentence, tokens, names)
        urls = _url_hits(sentence)
        publishers = _publisher_hits(sentence, names, gaz)

        cores = {t.core.casefold() for t in tokens}
        cue_bonus = 0.2 if cores & CUE_WORDS else 0.0

        attached: set[int] = set()
        for hit in versions + urls:
            target = _nearest_name(names, hit.char_start)
            if target is not None:
                attached.add(id(target))

        offsets = _byte_offsets(sentence)
        base = sent_span.start_byte

        def emit(hit: _Hit, confidence: float):
            start = base + offsets[hit.char_start]
            end = base + offsets[hit.char_end]
            surface = sentence[hit.char_start : hit.char_end]
            mentions.append(
                SoftwareMention(
                    mention_id=f"{doc.doc_id}:{start}-{end}:{hit.component.value}",
                    doc_id=doc.doc_id,
                    component=hit.component,
                    span=Span(start, end),
                    surface=surface,
                    sentence_index=sentence_index,
                    confidence=confidence,
                )
            )

        for name in names:
            attach_bonus = 0.2 if id(name) in attached else 0.0
            emit(name, min(1.0, 0.6 + cue_bonus + attach_bonus))
        for hit in versions + urls + publishers:
            emit(hit, min(1.0, 0.6 + cue_bonus))

    mentions = [m for m in mentions if m.confidence >= cfg.min_confidence]
    mentions.sort(key=lambda m: (m.span.start_byte, m.span.end_byte, m.component.value))
    return mentions


_SLOT_FOR = {
    Component.VERSION: "version",
    Component.PUBLISHER: "publisher",
    Component.URL: "url",
}


def attach_attributes(mentions: list[SoftwareMention], doc: Document) -> list[MentionGroup]:
    """Group mentions per sentence: each attribute joins its nearest name.

    Attributes with no name in their sentence are dropped; every name forms
    exactly one group.
    """
    by_sentence: dict[int, list[SoftwareMention]] = {}
    for m in mentions:
        by_sentence.setdefault(m.sentence_index, []).append(m)

    groups: list[MentionGroup] = []
    for sentence_index in sorted(by_sentence):
        bucket = sorted(by_sentence[sentence_index], key=lambda m: m.span.start_byte)
        names = [m for m in bucket if m.component is Component.SOFTWARE_NAME]
        if not names:
            continue
        slots: dict[str, dict[str, SoftwareMention]] = {n.mention_id: {} for n in names}
        for m in bucket:
            slot = _SLOT_FOR.get(m.component)
            if slot is None:
                continue
            target = _nearest_mention(names, m.span.start_byte)
            if target is not None and slot not in slots[target.mention_id]:
                slots[target.mention_id][slot] = m
        sentence_text = doc.text(doc.sentences[sentence_index])
        for name in names:
            groups.append(
                MentionGroup(
                    group_id=f"{doc.doc_id}:{name.span.start_byte}",
                    name=name,
                    sentence_text=sentence_text,
                    **slots[name.mention_id],
                )
            )
    return groups


def _nearest_mention(names: list[SoftwareMention], start: int) -> SoftwareMention | None:
    preceding = [n for n in names if n.span.start_byte <= start]
    if preceding:
        return max(preceding, key=lambda n: n.span.start_byte)
    following = [n for n in names if n.span.start_byte > start]
    if following:
        return min(following, key=lambda n: n.span.start_byte)
    return None


def classify_style(group: MentionGroup, references) -> MentionStyle:
    """Formal iff the sentence carries a citation marker resolving to a reference."""
    sentence = group.sentence_text
    for m in CITATION_BRACKET_RE.finditer(sentence):
        if any(ref.ref_id == m.group(1) for ref in references):
            return MentionStyle.FORMAL_WITH_REFERENCE
    for m in CITATION_AUTHOR_RE.finditer(sentence):
        surname, year = m.group(1), m.group(2)
        if any(surname in ref.raw_text and year in ref.raw_text for ref in references):
            return MentionStyle.FORMAL_WITH_REFERENCE
    return MentionStyle.INFORMAL


def with_style(group: MentionGroup, references) -> MentionGroup:
    return replace(group, style=classify_style(group, references))


@dataclass(frozen=True)
class ComponentScore:
    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    f1: float


def _score(tp: int, fp: int, fn: int) -> ComponentScore:
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return ComponentScore(tp, fp, fn, precision, recall, f1)


@dataclass(frozen=True)
class EvaluationReport:
    per_component: dict[str, ComponentScore]
    micro: ComponentScore
    docs_total: int
    docs_zero_mention: int


def evaluate(predicted, gold, doc_ids=None) -> EvaluationReport:
    """Exact-span, one-to-one scoring of predictions against gold mentions.

    doc_ids fixes the document universe so zero-mention documents count
    even when neither list references them.
    """
    def keys(items):
        return Counter(
            (m.doc_id, Component(m.component).value, m.span.start_byte, m.span.end_byte)
            for m in items
        )

    pred_keys, gold_keys = keys(predicted), keys(gold)
    components = sorted({k[1] for k in pred_keys} | {k[1] for k in gold_keys})
    per_component = {}
    total_tp = total_fp = total_fn = 0
    for component in components:
        p = Counter({k: v for k, v in pred_keys.items() if k[1] == component})
        g = Counter({k: v for k, v in gold_keys.items() if k[1] == component})
        tp = sum((p & g).values())
        fp = sum(p.values()) - tp
        fn = sum(g.values()) - tp
        per_component[component] = _score(tp, fp, fn)
        total_tp, total_fp, total_fn = total_tp + tp, total_fp + fp, total_fn + fn

    universe = set(doc_ids) if doc_ids is not None else (
        {m.doc_id for m in predicted} | {m.doc_id for m in gold}
    )
    gold_docs = {m.doc_id for m in gold}
    return EvaluationReport(
        per_component=per_component,
        micro=_score(total_tp, total_fp, total_fn),
        docs_total=len(universe),
        docs_zero_mention=len(universe - gold_docs),
    )


def load_gold_jsonl(source: "str | Path") -> list[SoftwareMention]:
    """Gold annotations: one JSON object per line with doc_id, component,
    start_byte, end_byte, surface."""
    text = Path(source).read_text(encoding="utf-8") if isinstance(source, Path) else source
    gold = []
    for line in text.splitlines():
        if not line.strip():
            continue
        obj = json.loads(line)
        span = Span(obj["start_byte"], obj["end_byte"])
        gold.append(
            SoftwareMention(
                mention_id=f"{obj['doc_id']}:{span.start_byte}-{span.end_byte}:{obj['component']}",
                doc_id=obj["doc_id"],
                component=Component(obj["component"]),
                span=span,
                surface=obj.get("surface", ""),
                sentence_index=0,
                confidence=1.0,
            )
        )
    return gold


def dump_mentions_jsonl(mentions: list[SoftwareMention]) -> str:
    lines = []
    for m in mentions:
        lines.append(
            json.dumps(
                {
                    "doc_id": m.doc_id,
                    "component": m.component.value,
                    "start_byte": m.span.start_byte,
                    "end_byte": m.span.end_byte,
                    "surface": m.surface,
                    "sentence_index": m.sentence_index,
                    "confidence": m.confidence,
                },
                ensure_ascii=False,
            )
        )
    return "\n".join(lines) + ("\n" if lines else "")
