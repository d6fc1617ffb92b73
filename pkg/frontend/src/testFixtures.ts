/** Shared test data mirroring the review service's cxn-68 responses. */

import type { BoundToken, CandidateView, CxnDetail } from "./api.js";

export const SENTENCE_TEXT =
  "Poi ci siamo messi a parlare... e salta fuori che era davvero finita!!";

const WORDS: Array<[number, string]> = [
  [9, "salta"],
  [10, "fuori"],
  [11, "che"],
  [14, "finita"],
];

function offsets(form: string): [number, number] {
  const start = SENTENCE_TEXT.indexOf(form);
  if (start < 0) throw new Error(`fixture form ${form} not in text`);
  return [start, start + form.length];
}

export function cxn68Tokens(): BoundToken[] {
  const labels = ["A", "B", "C", "D"];
  const lemmas = ["saltare", "fuori", "che", "finire"];
  const upos = ["VERB", "ADV", "SCONJ", "VERB"];
  const deprels = ["conj", "advmod", "mark", "csubj"];
  const heads = [4, 9, 14, 9];
  return WORDS.map(([index, form], i) => {
    const [start, end] = offsets(form);
    return {
      label: labels[i],
      index,
      form,
      lemma: lemmas[i],
      upos: upos[i],
      deprel: deprels[i],
      head: heads[i],
      start,
      end,
    };
  });
}

export function cxn68Candidate(id = "cand-1"): CandidateView {
  return {
    candidate_id: id,
    cxn_id: 68,
    cxn_name: "saltare fuori che V",
    function: "ref:D is found out unexpectedly",
    sent_id: "2_Paisa_FP06072024_mod",
    source: null,
    text: SENTENCE_TEXT,
    status: "pending",
    binding: { A: 9, B: 10, C: 11, D: 14 },
    tokens: cxn68Tokens(),
  };
}

export const CXN68_DETAIL: CxnDetail = {
  cxn_id: 68,
  name: "saltare fuori che V",
  function: "ref:D is found out unexpectedly",
  vertical_links: [],
  horizontal_links: [167],
  missing_links: [167],
  conll_c: "# cxn-id = 68",
  required_ids: ["A", "B", "C", "D"],
  optional_ids: [],
  queries: ["% cxn 68"],
};
