/** Pure view-model helpers: the UI renders what the API says, verbatim.
 *
 * Highlights come straight from the server-computed token offsets and the
 * binding; no re-tokenization or constraint evaluation happens here.
 */

import type { BoundToken, CandidateView } from "./api.js";

export interface Highlight {
  label: string;
  tokenIndex: number;
  form: string;
  start: number;
  end: number;
}

/** One highlight per bound token that has server-side character offsets. */
export function computeHighlights(view: CandidateView): Highlight[] {
  const highlights: Highlight[] = [];
  for (const token of view.tokens) {
    if (token.start === null || token.end === null) continue;
    highlights.push({
      label: token.label,
      tokenIndex: token.index,
      form: token.form,
      start: token.start,
      end: token.end,
    });
  }
  return highlights.sort((a, b) => a.start - b.start);
}

export type FunctionSegment =
  | { kind: "text"; text: string }
  | { kind: "ref"; label: string; token: BoundToken | null };

const REF_PATTERN = /ref:([A-Z](?:\*[0-9]+)?)/g;

/** Split a function string on `ref:<label>` links, resolving each against
 * the candidate's binding. Unresolvable refs keep a null token. */
export function resolveFunctionRefs(
  functionText: string,
  tokens: BoundToken[],
): FunctionSegment[] {
  const byLabel = new Map(tokens.map((t) => [t.label, t]));
  const segments: FunctionSegment[] = [];
  let last = 0;
  for (const match of functionText.matchAll(REF_PATTERN)) {
    const at = match.index ?? 0;
    if (at > last) {
      segments.push({ kind: "text", text: functionText.slice(last, at) });
    }
    const label = match[1];
    segments.push({ kind: "ref", label, token: byLabel.get(label) ?? null });
    last = at + match[0].length;
  }
  if (last < functionText.length) {
    segments.push({ kind: "text", text: functionText.slice(last) });
  }
  return segments;
}

/** Plain-text rendering of a resolved function string, e.g.
 * "ref:D is found out" with D bound to token 14 "finita"
 * becomes "〈finita (14)〉 is found out". */
export function renderFunction(functionText: string, tokens: BoundToken[]): string {
  return resolveFunctionRefs(functionText, tokens)
    .map((seg) =>
      seg.kind === "text"
        ? seg.text
        : seg.token === null
          ? `〈${seg.label}: unbound〉`
          : `〈${seg.token.form} (${seg.token.index})〉`,
    )
    .join("");
}

export interface TextSegment {
  text: string;
  highlight: Highlight | null;
}

/** Cut the sentence text into alternating plain and highlighted segments. */
export function segmentText(view: CandidateView): TextSegment[] {
  const segments: TextSegment[] = [];
  let cursor = 0;
  for (const h of computeHighlights(view)) {
    if (h.start < cursor) continue; // overlapping offsets: keep the first
    if (h.start > cursor) {
      segments.push({ text: view.text.slice(cursor, h.start), highlight: null });
    }
    segments.push({ text: view.text.slice(h.start, h.end), highlight: h });
    cursor = h.end;
  }
  if (cursor < view.text.length) {
    segments.push({ text: view.text.slice(cursor), highlight: null });
  }
  return segments;
}
