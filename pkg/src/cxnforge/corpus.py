"""Apply accepted matches to corpora, re-validate annotations, and split
the example body into train/dev/test files by source group.

Split assignment uses FNV-1a 64-bit over ``"<seed>:<group key>"``; the low 53
bits are mapped to [0, 1) and bucketed by cumulative ratios, so splits
reproduce anywhere.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Tuple

from .conllu import CxnMark, Sentence
from .diag import Diagnostic
from .gcxn import GcxnGraph
from .matcher import Match, check_binding, compile as compile_cxn

OVERWRITE_POLICIES = ("skip-existing", "merge", "replace")


class CorpusError(Exception):
    pass


@dataclass
class AnnotationReport:
    added: Dict[int, int] = field(default_factory=dict)  # cxn_id -> marks added
    skipped: Dict[int, int] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"added": self.added, "skipped": self.skipped}


def apply_matches(sentences: List[Sentence], matches: Iterable[Match],
                  overwrite_policy: str = "merge") -> AnnotationReport:
    """Write CXN marks for each match onto the bound tokens, in place."""
    if overwrite_policy not in OVERWRITE_POLICIES:
        raise CorpusError(f"unknown overwrite policy {overwrite_policy!r}")
    by_id = {}
    for s in sentences:
        by_id.setdefault(s.sent_id, []).append(s)

    matches = list(matches)
    missing = sorted({m.sent_id for m in matches if m.sent_id not in by_id})
    if missing:
        raise CorpusError("matches reference unknown sent_ids: " + ", ".join(missing))

    report = AnnotationReport()
    for m in matches:
        targets = by_id[m.sent_id]
        if len(targets) != 1:
            raise CorpusError(f"sent_id {m.sent_id!r} is ambiguous ({len(targets)} sentences)")
        sentence = targets[0]
        has_existing = any(mark.cxn_id == m.cxn_id
                           for t in sentence.tokens for mark in t.cxn_marks())
        if overwrite_policy == "skip-existing" and has_existing:
            report.skipped[m.cxn_id] = report.skipped.get(m.cxn_id, 0) + len(m.binding)
            continue
        if overwrite_policy == "replace" and has_existing:
            for t in sentence.tokens:
                t.misc = [item for item in t.misc
                          if not (item.startswith(f"CXN={m.cxn_id}:"))]
        for label, idx in sorted(m.binding.items()):
            mark = CxnMark(m.cxn_id, label)
            token = sentence.token(idx)
            if token.has_mark(mark):
                report.skipped[m.cxn_id] = report.skipped.get(m.cxn_id, 0) + 1
            else:
                token.add_mark(mark)
                report.added[m.cxn_id] = report.added.get(m.cxn_id, 0) + 1
    return report


def validate_annotations(sentences: Iterable[Sentence], graph: GcxnGraph,
                         cxn_ids: Optional[set] = None) -> List[Diagnostic]:
    """Re-check every CXN mark group against the strict matcher constraints.

    cxn_ids restricts validation to the given constructions; by default all
    marked ids are checked and unknown ids are reported.
    """
    diags: List[Diagnostic] = []
    patterns = {}
    for sentence in sentences:
        groups: Dict[int, Dict[str, int]] = {}
        for token in sentence.tokens:
            for mark in token.cxn_marks():
                groups.setdefault(mark.cxn_id, {})[mark.token_label] = token.index
        for cxn_id, binding in sorted(groups.items()):
            if cxn_ids is not None and cxn_id not in cxn_ids:
                continue
            if cxn_id not in graph.entries:
                diags.append(Diagnostic("unknown-cxn",
                                        f"sentence {sentence.sent_id!r} marked for unknown cxn {cxn_id}",
                                        subject=sentence.sent_id))
                continue
            if cxn_id not in patterns:
                patterns[cxn_id] = compile_cxn(graph.entries[cxn_id])
            for fail in check_binding(patterns[cxn_id], sentence, binding):
                diags.append(Diagnostic(fail.rule,
                                        f"sentence {sentence.sent_id!r} cxn {cxn_id}: {fail.message}",
                                        subject=fail.subject))
    return diags


# --- splitting -----------------------------------------------------------------

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3


def fnv1a_64(data: bytes) -> int:
    h = FNV_OFFSET
    for b in data:
        h ^= b
        h = (h * FNV_PRIME) & 0xFFFFFFFFFFFFFFFF
    return h


@dataclass
class SplitSpec:
    ratios: Tuple[float, float, float] = (0.8, 0.1, 0.1)
    key: str = "source"
    seed: int = 0

    def __post_init__(self):
        if any(r < 0 for r in self.ratios):
            raise CorpusError("split ratios must be non-negative")
        if abs(sum(self.ratios) - 1.0) > 1e-9:
            raise CorpusError(f"split ratios must sum to 1, got {sum(self.ratios)}")


@dataclass
class SplitResult:
    train: List[Sentence]
    dev: List[Sentence]
    test: List[Sentence]
    manifest: Dict[str, str]  # sent_id -> split name

    def parts(self) -> Dict[str, List[Sentence]]:
        return {"train": self.train, "dev": self.dev, "test": self.test}


def split_corpus(sentences: List[Sentence], spec: SplitSpec) -> SplitResult:
    """Deterministic group-preserving split: all sentences sharing the grouping
    key land in the same file."""
    result = SplitResult([], [], [], {})
    t, d, _ = spec.ratios
    for sentence in sentences:
        key = sentence._meta(spec.key)
        if key is None or key == "":
            key = f"sent_id:{sentence.sent_id}"  # singleton group
        digest = fnv1a_64(f"{spec.seed}:{key}".encode("utf-8"))
        # low 53 bits: FNV's high-order bits avalanche poorly on short keys
        fraction = (digest % 2 ** 53) / 2.0 ** 53
        if fraction < t:
            name = "train"
        elif fraction < t + d:
            name = "dev"
        else:
            name = "test"
        result.parts()[name].append(sentence)
        result.manifest[sentence.sent_id] = name
    return result
