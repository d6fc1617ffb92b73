import { describe, expect, it } from "vitest";

import { computeHighlights, renderFunction, resolveFunctionRefs, segmentText } from "./model.js";
import { SENTENCE_TEXT, cxn68Candidate, cxn68Tokens } from "./testFixtures.js";

describe("highlights", () => {
  it("are one-to-one with the binding", () => {
    const view = cxn68Candidate();
    const highlights = computeHighlights(view);
    const byLabel = new Map(highlights.map((h) => [h.label, h.tokenIndex]));
    expect(Object.fromEntries(byLabel)).toEqual(view.binding);
  });

  it("skip tokens the server could not locate in the text", () => {
    const view = cxn68Candidate();
    view.tokens[2] = { ...view.tokens[2], start: null, end: null };
    const highlights = computeHighlights(view);
    expect(highlights.map((h) => h.label)).toEqual(["A", "B", "D"]);
  });

  it("cover exactly the bound forms in the text", () => {
    const view = cxn68Candidate();
    for (const h of computeHighlights(view)) {
      expect(view.text.slice(h.start, h.end)).toBe(h.form);
    }
  });
});

describe("segmentText", () => {
  it("round-trips the sentence text", () => {
    const segments = segmentText(cxn68Candidate());
    expect(segments.map((s) => s.text).join("")).toBe(SENTENCE_TEXT);
  });

  it("marks exactly the bound tokens", () => {
    const segments = segmentText(cxn68Candidate());
    const marked = segments.filter((s) => s.highlight !== null);
    expect(marked.map((s) => s.text)).toEqual(["salta", "fuori", "che", "finita"]);
    expect(marked.map((s) => s.highlight?.tokenIndex)).toEqual([9, 10, 11, 14]);
  });
});

describe("function refs", () => {
  it("resolves ref:D to the bound D token", () => {
    const segments = resolveFunctionRefs("ref:D is found out unexpectedly", cxn68Tokens());
    expect(segments[0]).toMatchObject({ kind: "ref", label: "D" });
    const ref = segments[0];
    expect(ref.kind === "ref" && ref.token?.index).toBe(14);
    expect(segments[1]).toEqual({ kind: "text", text: " is found out unexpectedly" });
  });

  it("keeps unresolvable refs with a null token", () => {
    const segments = resolveFunctionRefs("ref:Z happens", []);
    expect(segments[0]).toEqual({ kind: "ref", label: "Z", token: null });
  });

  it("handles multiple refs and sub-token labels", () => {
    const segments = resolveFunctionRefs("ref:A then ref:A*1", cxn68Tokens());
    const refs = segments.filter((s) => s.kind === "ref");
    expect(refs.map((r) => (r.kind === "ref" ? r.label : ""))).toEqual(["A", "A*1"]);
  });

  it("renders as plain text with token form and index", () => {
    expect(renderFunction("ref:D is found out unexpectedly", cxn68Tokens())).toBe(
      "〈finita (14)〉 is found out unexpectedly",
    );
  });
});
