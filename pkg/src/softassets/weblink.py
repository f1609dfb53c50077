"""Strict parser for HTTP Link header values (web linking, RFC 8288 style).

Deliberately independent of the header serializer in `expose`: tests use it
as a grammar oracle, so it must reject anything outside the grammar rather
than guess.
"""

from __future__ import annotations

from dataclasses import dataclass

TOKEN_CHARS = set("!#$%&'*+-.^_`|~" "0123456789"
                  "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ")


class LinkSyntaxError(ValueError):
    pass


@dataclass(frozen=True)
class ParsedLink:
    target: str
    params: tuple[tuple[str, str], ...]

    def param(self, name: str) -> str | None:
        for key, value in self.params:
            if key == name:
                return value
        return None


class _Cursor:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def peek(self) -> str:
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def take(self) -> str:
        ch = self.peek()
        if not ch:
            raise LinkSyntaxError("unexpected end of input")
        self.pos += 1
        return ch

    def skip_ows(self):
        while self.peek() in (" ", "\t"):
            self.pos += 1

    def expect(self, ch: str):
        got = self.take()
        if got != ch:
            raise LinkSyntaxError(f"expected {ch!r} at {self.pos - 1}, got {got!r}")

    def done(self) -> bool:
        return self.pos >= len(self.text)


def _parse_uri_reference(cur: _Cursor) -> str:
    cur.expect("<")
    chars = []
    while True:
        ch = cur.take()
        if ch == ">":
            break
        if ch in ("<", " ", "\t"):
            raise LinkSyntaxError(f"illegal character {ch!r} in URI reference")
        chars.append(ch)
    return "".join(chars)


def _parse_token(cur: _Cursor) -> str:
    chars = []
    while cur.peek() in TOKEN_CHARS:
        chars.append(cur.take())
    if not chars:
        raise LinkSyntaxError(f"expected token at {cur.pos}")
    return "".join(chars)


def _parse_quoted_string(cur: _Cursor) -> str:
    cur.expect('"')
    chars = []
    while True:
        ch = cur.take()
        if ch == '"':
            break
        if ch == "\\":
            chars.append(cur.take())
            continue
        chars.append(ch)
    return "".join(chars)


def _parse_param(cur: _Cursor) -> tuple[str, str]:
    name = _parse_token(cur).lower()
    cur.skip_ows()
    if cur.peek() != "=":
        return name, ""
    cur.take()
    cur.skip_ows()
    if cur.peek() == '"':
        return name, _parse_quoted_string(cur)
    return name, _parse_token(cur)


def parse_link_value(text: str) -> ParsedLink:
    """Parse a single link-value; raises LinkSyntaxError on any violation."""
    cur = _Cursor(text)
    cur.skip_ows()
    target = _parse_uri_reference(cur)
    params = []
    cur.skip_ows()
    while not cur.done():
        cur.expect(";")
        cur.skip_ows()
        params.append(_parse_param(cur))
        cur.skip_ows()
    return ParsedLink(target=target, params=tuple(params))


def parse_link_header(text: str) -> list[ParsedLink]:
    """Parse a comma-separated Link header field value."""
    values = []
    cur = _Cursor(text)
    while True:
        cur.skip_ows()
        target = _parse_uri_reference(cur)
        params = []
        cur.skip_ows()
        while cur.peek() == ";":
            cur.take()
            cur.skip_ows()
            params.append(_parse_param(cur))
            cur.skip_ows()
        values.append(ParsedLink(target=target, params=tuple(params)))
        if cur.done():
            return values
        cur.expect(",")
