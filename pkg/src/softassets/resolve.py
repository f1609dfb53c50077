"""Cross-document disambiguation of mention groups into asset candidates.

Groups are compared through a canonical name key plus their URL/publisher
attribute nodes, merged by single-linkage clustering over a union-find,
and optionally aligned to an external software catalog.
"""

from __future__ import annotations

import hashlib
import json
import re
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

from .extract import MentionGroup

_VERSION_TOKEN = re.compile(r"^v?\d+(\.\d+)*$")
_TRADEMARK_CHARS = "™®©"  # TM, (R), (C)


class ResolveError(Exception):
    pass


class NotNormalizable(ResolveError):
    """Nothing remains of the surface form after normalization."""


def normalize_name(surface: str) -> str:
    """Canonical key: lowercase, punctuation- and version-stripped.

    Internal hyphens survive ("scikit-learn"); version-like tokens such as
    "21.0" or "v3" are dropped wherever they appear.
    """
    s = surface.lower()
    for ch in _TRADEMARK_CHARS:
        s = s.replace(ch, "")
    s = "".join(ch if ch.isalnum() or ch.isspace() or ch == "-" else "" for ch in s)
    tokens = []
    for token in s.split():
        token = token.strip("-")
        if not token or _VERSION_TOKEN.match(token):
            continue
        tokens.append(token)
    key = " ".join(tokens)
    if not key:
        raise NotNormalizable(surface)
    return key


def levenshtein(a: str, b: str) -> int:
    if len(a) < len(b):
        a, b = b, a
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        current = [i]
        for j, cb in enumerate(b, start=1):
            current.append(
                min(previous[j] + 1, current[j - 1] + 1, previous[j - 1] + (ca != cb))
            )
        previous = current
    return previous[-1]


@dataclass(frozen=True)
class EntityProjection:
    """What the similarity measure sees: a name key and typed attribute nodes."""

    key: str
    attrs: frozenset[tuple[str, str]] = frozenset()


def similarity(a: EntityProjection, b: EntityProjection) -> float:
    """0.6 * name similarity + 0.4 * attribute-node Jaccard.

    When neither side carries attributes the name similarity stands alone.
    """
    longest = max(len(a.key), len(b.key))
    name_sim = 1.0 - levenshtein(a.key, b.key) / longest if longest else 1.0
    if not a.attrs and not b.attrs:
        return name_sim
    union = a.attrs | b.attrs
    attr_sim = len(a.attrs & b.attrs) / len(union) if union else 0.0
    return 0.6 * name_sim + 0.4 * attr_sim


def project_group(group: MentionGroup) -> EntityProjection:
    attrs = set()
    if group.url is not None:
        attrs.add(("url", group.url.surface))
    if group.publisher is not None:
        attrs.add(("publisher", group.publisher.surface))
    return EntityProjection(key=normalize_name(group.name.surface), attrs=frozenset(attrs))


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    url: str
    publisher: str | None = None


def load_catalog_tsv(source: "str | Path") -> list[CatalogEntry]:
    """Catalog file: TSV columns name, url, publisher."""
    text = Path(source).read_text(encoding="utf-8") if isinstance(source, Path) else source
    entries = []
    seen_urls = set()
    for line in text.splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        cols = line.split("\t")
        cols += [""] * (3 - len(cols))
        name, url, publisher = (c.strip() for c in cols[:3])
        if url in seen_urls:
            raise ResolveError(f"duplicate catalog url {url!r}")
        seen_urls.add(url)
        entries.append(CatalogEntry(name=name, url=url, publisher=publisher or None))
    return entries


@dataclass(frozen=True)
class AssetCandidate:
    candidate_id: str
    canonical_name: str
    aliases: frozenset[str]
    urls: frozenset[str]
    publishers: frozenset[str]
    versions: frozenset[str]
    member_groups: frozenset[str]
    catalog_match: tuple[CatalogEntry, float] | None = None


class _UnionFind:
    def __init__(self, items):
        self.parent = {item: item for item in items}

    def find(self, item):
        while self.parent[item] != item:
            self.parent[item] = self.parent[self.parent[item]]
            item = self.parent[item]
        return item

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            # anchor on the smaller id so results are order-independent
            if rb < ra:
                ra, rb = rb, ra
            self.parent[rb] = ra


def cluster(groups: list[MentionGroup], threshold: float = 0.75) -> list[AssetCandidate]:
    """Single-linkage clustering of mention groups at the given threshold."""
    if not 0.0 <= threshold <= 1.0:
        raise ValueError("threshold must lie in [0, 1]")
    by_id = {g.group_id: g for g in groups}
    ids = sorted(by_id)
    projections = {gid: project_group(by_id[gid]) for gid in ids}
    uf = _UnionFind(ids)
    for i, gid_a in enumerate(ids):
        for gid_b in ids[i + 1 :]:
            if similarity(projections[gid_a], projections[gid_b]) >= threshold:
                uf.union(gid_a, gid_b)

    clusters: dict[str, list[str]] = {}
    for gid in ids:
        clusters.setdefault(uf.find(gid), []).append(gid)

    candidates = [_candidate_from(sorted(members), by_id) for members in clusters.values()]
    candidates.sort(key=lambda c: (c.canonical_name, c.candidate_id))
    return candidates


def _candidate_from(member_ids: list[str], by_id: dict[str, MentionGroup]) -> AssetCandidate:
    members = [by_id[gid] for gid in member_ids]
    surface_counts = Counter(g.name.surface for g in members)
    top = max(surface_counts.values())
    canonical_name = min(s for s, n in surface_counts.items() if n == top)
    digest = hashlib.sha1("\n".join(member_ids).encode("utf-8")).hexdigest()[:12]
    return AssetCandidate(
        candidate_id=f"cand-{digest}",
        canonical_name=canonical_name,
        aliases=frozenset(surface_counts),
        urls=frozenset(g.url.surface for g in members if g.url is not None),
        publishers=frozenset(g.publisher.surface for g in members if g.publisher is not None),
        versions=frozenset(g.version.surface for g in members if g.version is not None),
        member_groups=frozenset(member_ids),
    )


def project_candidate(candidate: AssetCandidate) -> EntityProjection:
    attrs = {("url", u) for u in candidate.urls} | {
        ("publisher", p) for p in candidate.publishers
    }
    return EntityProjection(key=normalize_name(candidate.canonical_name), attrs=frozenset(attrs))


def project_catalog_entry(entry: CatalogEntry) -> EntityProjection:
    attrs = {("url", entry.url)}
    if entry.publisher:
        attrs.add(("publisher", entry.publisher))
    return EntityProjection(key=normalize_name(entry.name), attrs=frozenset(attrs))


def align_to_catalog(
    candidate: AssetCandidate,
    catalog: list[CatalogEntry],
    accept_threshold: float = 0.8,
) -> tuple[CatalogEntry, float] | None:
    """Best catalog entry by the similarity formula, accepted at >= 0.8."""
    if not catalog:
        return None
    projection = project_candidate(candidate)
    scored = [
        (similarity(projection, project_catalog_entry(entry)), entry) for entry in catalog
    ]
    scored.sort(key=lambda pair: (-pair[0], pair[1].url))
    best_score, best_entry = scored[0]
    if best_score >= accept_threshold:
        return best_entry, best_score
    return None


def dump_candidates_jsonl(candidates: list[AssetCandidate]) -> str:
    lines = []
    for c in candidates:
        match = None
        if c.catalog_match is not None:
            entry, score = c.catalog_match
            match = {"name": entry.name, "url": entry.url, "publisher": entry.publisher,
                     "score": score}
        lines.append(
            json.dumps(
                {
                    "candidate_id": c.candidate_id,
                    "canonical_name": c.canonical_name,
                    "aliases": sorted(c.aliases),
                    "urls": sorted(c.urls),
                    "publishers": sorted(c.publishers),
                    "versions": sorted(c.versions),
                    "member_groups": sorted(c.member_groups),
                    "catalog_match": match,
                },
                ensure_ascii=False,
            )
        )
    return "\n".join(lines) + ("\n" if lines else "")


def load_candidates_jsonl(text: str) -> list[AssetCandidate]:
    candidates = []
    for line in text.splitlines():
        if not line.strip():
            continue
        obj = json.loads(line)
        match = None
        if obj.get("catalog_match"):
            m = obj["catalog_match"]
            match = (CatalogEntry(m["name"], m["url"], m.get("publisher")), m["score"])
        candidates.append(
            AssetCandidate(
                candidate_id=obj["candidate_id"],
                canonical_name=obj["canonical_name"],
                aliases=frozenset(obj["aliases"]),
                urls=frozenset(obj["urls"]),
                publishers=frozenset(obj["publishers"]),
                versions=frozenset(obj["versions"]),
                member_groups=frozenset(obj["member_groups"]),
                catalog_match=match,
            )
        )
    return candidates
