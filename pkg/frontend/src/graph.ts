/** Cxn-browser view model: link chips for navigation between entries. */

import type { CxnSummary } from "./api.js";

export interface LinkChip {
  cxnId: number;
  direction: "vertical" | "horizontal";
  present: boolean; // dangling links render disabled with a tooltip
}

export function linkChips(summary: CxnSummary): LinkChip[] {
  const missing = new Set(summary.missing_links);
  const chips: LinkChip[] = [];
  for (const id of summary.vertical_links) {
    chips.push({ cxnId: id, direction: "vertical", present: !missing.has(id) });
  }
  for (const id of summary.horizontal_links) {
    chips.push({ cxnId: id, direction: "horizontal", present: !missing.has(id) });
  }
  return chips;
}
