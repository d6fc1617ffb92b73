/** DOM wiring. All state lives in the controllers; this file only renders. */

import { ApiClient, ApiError, type CandidateView } from "./api.js";
import { linkChips } from "./graph.js";
import { renderFunction, segmentText } from "./model.js";
import { ReviewController, type ReviewState } from "./review.js";

const api = new ApiClient("");
const root = document.getElementById("app") as HTMLElement;
let controller: ReviewController | null = null;

function el(tag: string, className?: string, text?: string): HTMLElement {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function renderSentence(view: CandidateView): HTMLElement {
  const p = el("p", "sentence");
  for (const segment of segmentText(view)) {
    if (segment.highlight === null) {
      p.appendChild(document.createTextNode(segment.text));
    } else {
      const mark = el("mark", "bound-token", segment.text);
      mark.title = `${segment.highlight.label} = token ${segment.highlight.tokenIndex}`;
      p.appendChild(mark);
    }
  }
  return p;
}

function renderBindingTable(view: CandidateView): HTMLElement {
  const table = el("table", "binding");
  const head = el("tr");
  for (const col of ["node", "token", "form", "lemma", "upos", "deprel", "head"]) {
    head.appendChild(el("th", undefined, col));
  }
  table.appendChild(head);
  for (const t of view.tokens) {
    const row = el("tr");
    for (const cell of [t.label, String(t.index), t.form, t.lemma, t.upos, t.deprel, String(t.head)]) {
      row.appendChild(el("td", undefined, cell));
    }
    table.appendChild(row);
  }
  return table;
}

function renderReview(state: ReviewState): void {
  const panel = document.getElementById("review") as HTMLElement;
  panel.replaceChildren();
  if (state.error) panel.appendChild(el("p", "error", state.error));
  if (state.drafts.length > 0) {
    panel.appendChild(el("p", "unsynced", `${state.drafts.length} unsynced decision(s)`));
  }
  const view = state.current;
  if (view === null) {
    panel.appendChild(el("p", "empty-state", "No pending candidates."));
    return;
  }
  panel.appendChild(el("h2", undefined, `${view.cxn_name} (cxn ${view.cxn_id})`));
  panel.appendChild(el("p", "function", renderFunction(view.function, view.tokens)));
  panel.appendChild(renderSentence(view));
  panel.appendChild(renderBindingTable(view));
  panel.appendChild(el("p", "hint",
    `sentence ${view.sent_id} | ${state.pending.length} pending, ${state.decided} decided | keys: a accept, r reject, s skip`));
}

async function openCxn(cxnId: number): Promise<void> {
  const detail = await api.getCxn(cxnId).catch((err) => {
    if (err instanceof ApiError && err.status === 404) return null;
    throw err;
  });
  const meta = document.getElementById("cxn-meta") as HTMLElement;
  meta.replaceChildren();
  if (detail === null) {
    meta.appendChild(el("p", "error", `cxn ${cxnId} not found`));
    return;
  }
  meta.appendChild(el("h2", undefined, `${detail.name} (cxn ${detail.cxn_id})`));
  const chips = el("p", "chips");
  for (const chip of linkChips(detail)) {
    const button = el("button", chip.present ? "chip" : "chip dangling",
      `${chip.direction === "vertical" ? "parent" : "sibling"} ${chip.cxnId}`) as HTMLButtonElement;
    if (chip.present) {
      button.addEventListener("click", () => void openCxn(chip.cxnId));
    } else {
      button.disabled = true;
      button.title = `cxn ${chip.cxnId} is not in the graph`;
    }
    chips.appendChild(button);
  }
  meta.appendChild(chips);
  meta.appendChild(el("pre", "conllc", detail.conll_c));
  for (const query of detail.queries) {
    meta.appendChild(el("pre", "query", query));
  }

  controller = new ReviewController(api, cxnId, "ui");
  controller.onChange(renderReview);
  await controller.load();
}

async function boot(): Promise<void> {
  root.replaceChildren(
    el("nav", undefined),
    el("section", undefined),
  );
  root.children[0].id = "cxn-list";
  const main = root.children[1];
  main.appendChild(el("div"));
  main.appendChild(el("div"));
  main.children[0].id = "cxn-meta";
  main.children[1].id = "review";

  const list = document.getElementById("cxn-list") as HTMLElement;
  for (const summary of await api.listCxns()) {
    const button = el("button", "cxn-entry", `${summary.cxn_id} ${summary.name}`);
    button.addEventListener("click", () => void openCxn(summary.cxn_id));
    list.appendChild(button);
  }

  document.addEventListener("keydown", (event) => {
    if (controller) void controller.handleKey(event.key);
  });
}

void boot();
