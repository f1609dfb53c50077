"""Software Heritage persistent identifiers.

Content and directory identifiers are computed with git's object hashing
(blob/tree conventions), so digests are bit-compatible with any git-based
tool. Revision, release and snapshot identifiers are parsed and formatted
but not computed here.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass

OBJECT_TYPES = ("cnt", "dir", "rev", "rel", "snp")
QUALIFIER_KEYS = ("origin", "visit", "anchor", "path", "lines")

_CORE_RE = re.compile(r"^swh:(\d+):([a-z]+):([0-9a-f]{40})$")

GIT_MODES = {
    "file": b"100644",
    "executable": b"100755",
    "symlink": b"120000",
    "dir": b"40000",
}


class SwhidError(Exception):
    pass


class MalformedSwhid(SwhidError):
    pass


class UnsupportedVersion(SwhidError):
    pass


class InvalidEntryName(SwhidError):
    pass


@dataclass(frozen=True)
class Swhid:
    object_type: str
    digest: str
    qualifiers: tuple[tuple[str, str], ...] = ()
    scheme_version: int = 1

    def __str__(self) -> str:
        return format_swhid(self)


def format_swhid(swhid: Swhid) -> str:
    """Canonical textual form, qualifiers in the fixed key order."""
    core = f"swh:{swhid.scheme_version}:{swhid.object_type}:{swhid.digest}"
    ordered = sorted(swhid.qualifiers, key=lambda kv: QUALIFIER_KEYS.index(kv[0]))
    return core + "".join(f";{k}={v}" for k, v in ordered)


def parse_swhid(text: str) -> Swhid:
    parts = text.split(";")
    m = _CORE_RE.match(parts[0])
    if not m:
        version = re.match(r"^swh:(\d+):", parts[0])
        if version and version.group(1) != "1":
            raise UnsupportedVersion(parts[0])
        raise MalformedSwhid(text)
    if m.group(1) != "1":
        raise UnsupportedVersion(text)
    object_type = m.group(2)
    if object_type not in OBJECT_TYPES:
        raise MalformedSwhid(f"unknown object type {object_type!r}")
    qualifiers = []
    seen = set()
    for raw in parts[1:]:
        key, sep, value = raw.partition("=")
        if not sep or key not in QUALIFIER_KEYS:
            raise MalformedSwhid(f"bad qualifier {raw!r}")
        if key in seen:
            raise MalformedSwhid(f"duplicate qualifier {key!r}")
        seen.add(key)
        qualifiers.append((key, value))
    return Swhid(object_type=object_type, digest=m.group(3), qualifiers=tuple(qualifiers))


def content_swhid(data: bytes) -> Swhid:
    """Identifier of a content object (git blob hashing)."""
    digest = hashlib.sha1(b"blob %d\x00" % len(data) + data).hexdigest()
    return Swhid(object_type="cnt", digest=digest)


@dataclass(frozen=True)
class TreeEntry:
    """One directory entry: a file/executable/symlink payload or a subtree."""

    mode: str
    payload: "bytes | DirectoryTree"

    def __post_init__(self):
        if self.mode not in GIT_MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == "dir" and not isinstance(self.payload, DirectoryTree):
            raise ValueError("dir entry needs a DirectoryTree payload")
        if self.mode != "dir" and not isinstance(self.payload, bytes):
            raise ValueError(f"{self.mode} entry needs a bytes payload")


class DirectoryTree:
    """Immutable named mapping of entries, hashable as a git tree."""

    def __init__(self, entries: dict[str, TreeEntry]):
        for name in entries:
            if not name or "/" in name or "\x00" in name:
                raise InvalidEntryName(repr(name))
        self.entries = dict(entries)

    def __eq__(self, other):
        return isinstance(other, DirectoryTree) and self.entries == other.entries

    def _raw_digest(self) -> bytes:
        rows = []
        for name, entry in self.entries.items():
            sort_key = name + ("/" if entry.mode == "dir" else "")
            if entry.mode == "dir":
                child = entry.payload._raw_digest()
            else:
                child = bytes.fromhex(content_swhid(entry.payload).digest)
            rows.append((sort_key.encode("utf-8"), GIT_MODES[entry.mode], name.encode("utf-8"), child))
        rows.sort(key=lambda r: r[0])
        body = b"".join(mode + b" " + name + b"\x00" + child for _, mode, name, child in rows)
        return hashlib.sha1(b"tree %d\x00" % len(body) + body).digest()


def directory_swhid(tree: DirectoryTree) -> Swhid:
    """Identifier of a directory object (recursive git tree hashing)."""
    return Swhid(object_type="dir", digest=tree._raw_digest().hex())


def tree_from_manifest(manifest: dict[str, bytes | str | dict]) -> DirectoryTree:
    """Convenience constructor from nested dicts.

    bytes/str values become regular files, nested dicts become
    subdirectories. Executables and symlinks need explicit TreeEntry values.
    """
    entries: dict[str, TreeEntry] = {}
    for name, value in manifest.items():
        if isinstance(value, TreeEntry):
            entries[name] = value
        elif isinstance(value, dict):
            entries[name] = TreeEntry("dir", tree_from_manifest(value))
        elif isinstance(value, str):
            entries[name] = TreeEntry("file", value.encode("utf-8"))
        else:
            entries[name] = TreeEntry("file", value)
    return DirectoryTree(entries)
