/** Mention span highlighting.
 *
 * The API reports spans as byte offsets into the UTF-8 encoding of the
 * sentence; rendering needs character positions. Offsets are converted
 * with a per-character byte map and cross-checked against the parallel
 * surface strings the payload carries — on any drift the surface string
 * wins (located with indexOf) rather than rendering a shifted highlight.
 */

import type { MentionSpan } from "./api.js";

const encoder = new TextEncoder();

/** Character range [start, end) for a byte range, or null when the bytes
 * do not fall on character boundaries. */
export function byteRangeToCharRange(
  text: string,
  startByte: number,
  endByte: number,
): { start: number; end: number } | null {
  let bytePos = 0;
  let charPos = 0;
  let start = -1;
  if (startByte === 0) start = 0;
  for (const ch of text) {
    if (bytePos === startByte) start = charPos;
    bytePos += encoder.encode(ch).length;
    charPos += ch.length;
    if (bytePos === endByte && start >= 0) {
      return { start, end: charPos };
    }
  }
  return null;
}

interface CharSpan {
  start: number;
  end: number;
  component: string;
}

export function resolveSpans(sentence: string, mentions: MentionSpan[]): CharSpan[] {
  const spans: CharSpan[] = [];
  for (const mention of mentions) {
    let range = byteRangeToCharRange(sentence, mention.start_byte, mention.end_byte);
    if (range === null || sentence.slice(range.start, range.end) !== mention.surface) {
      const at = sentence.indexOf(mention.surface);
      if (at < 0) continue;
      range = { start: at, end: at + mention.surface.length };
    }
    spans.push({ start: range.start, end: range.end, component: mention.component });
  }
  spans.sort((a, b) => a.start - b.start || a.end - b.end);
  // drop overlaps so the output stays a flat sequence of <mark> elements
  const flat: CharSpan[] = [];
  for (const span of spans) {
    const last = flat[flat.length - 1];
    if (last !== undefined && span.start < last.end) continue;
    flat.push(span);
  }
  return flat;
}

export function renderHighlighted(
  doc: Document,
  sentence: string,
  mentions: MentionSpan[],
): HTMLElement {
  const container = doc.createElement("p");
  container.className = "sentence-context";
  let cursor = 0;
  for (const span of resolveSpans(sentence, mentions)) {
    if (span.start > cursor) {
      container.appendChild(doc.createTextNode(sentence.slice(cursor, span.start)));
    }
    const mark = doc.createElement("mark");
    mark.className = `mention mention-${span.component}`;
    mark.textContent = sentence.slice(span.start, span.end);
    container.appendChild(mark);
    cursor = span.end;
  }
  if (cursor < sentence.length) {
    container.appendChild(doc.createTextNode(sentence.slice(cursor)));
  }
  return container;
}
