"""CoNLL-U sentences with the constructicon MISC conventions.

Sentences are plain data: parse once, then treat as immutable. Multiword-token
ranges (``1-2``) and empty nodes (``1.1``) are kept as opaque lines so files
round-trip losslessly, but they are invisible to matching and adjacency.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Tuple, Union

from .diag import Diagnostic

CXN_MARK_RE = re.compile(r"^CXN=([0-9]+):([A-Z](?:\*[0-9]+)?)$")


class ConlluError(Exception):
    """Unrecoverable problem in a CoNLL-U stream (carries the 1-based line number)."""

    def __init__(self, message: str, line_no: Optional[int] = None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class CxnMark:
    """A ``CXN=<cxn_id>:<label>`` annotation carried in a token's MISC column."""

    cxn_id: int
    token_label: str

    def __str__(self) -> str:
        return f"CXN={self.cxn_id}:{self.token_label}"


@dataclass
class Token:
    index: int
    form: str = "_"
    lemma: str = "_"
    upos: str = "_"
    xpos: str = "_"
    feats: List[Tuple[str, str]] = field(default_factory=list)
    head: int = 0
    deprel: str = "_"
    deps: str = "_"
    misc: List[str] = field(default_factory=list)  # raw items, insertion order

    def feats_dict(self) -> dict:
        return dict(self.feats)

    def feats_str(self) -> str:
        if not self.feats:
            return "_"
        pairs = sorted(self.feats, key=lambda kv: kv[0].casefold())
        return "|".join(f"{k}={v}" for k, v in pairs)

    def misc_str(self) -> str:
        return "|".join(self.misc) if self.misc else "_"

    def cxn_marks(self) -> List[CxnMark]:
        marks = []
        for item in self.misc:
            m = CXN_MARK_RE.match(item)
            if m:
                marks.append(CxnMark(int(m.group(1)), m.group(2)))
        return marks

    def has_mark(self, mark: CxnMark) -> bool:
        return str(mark) in self.misc

    def add_mark(self, mark: CxnMark) -> None:
        if not self.has_mark(mark):
            self.misc.append(str(mark))

    def field_value(self, name: str) -> str:
        """Raw column value by CoNLL-U field name (FORM, LEMMA, UPOS, ...)."""
        name = name.upper()
        if name == "FORM":
            return self.form
        if name == "LEMMA":
            return self.lemma
        if name == "UPOS":
            return self.upos
        if name == "XPOS":
            return self.xpos
        if name == "FEATS":
            return self.feats_str()
        if name == "DEPREL":
            return self.deprel
        if name == "HEAD":
            return str(self.head)
        if name == "DEPS":
            return self.deps
        if name == "MISC":
            return self.misc_str()
        raise KeyError(name)

    def to_line(self) -> str:
        return "\t".join(
            [
                str(self.index),
                self.form,
                self.lemma,
                self.upos,
                self.xpos,
                self.feats_str(),
                str(self.head),
                self.deprel,
                self.deps,
                self.misc_str(),
            ]
        )


@dataclass
class Sentence:
    # rows holds tokens plus opaque lines (multiword ranges, empty nodes) in file order
    rows: List[Union[Token, str]] = field(default_factory=list)
    metadata: List[Tuple[str, Optional[str]]] = field(default_factory=list)
    diagnostics: List[Diagnostic] = field(default_factory=list)

    @property
    def tokens(self) -> List[Token]:
        return [r for r in self.rows if isinstance(r, Token)]

    def _meta(self, key: str) -> Optional[str]:
        for k, v in self.metadata:
            if k == key:
                return v
        return None

    @property
    def sent_id(self) -> str:
        return self._meta("sent_id") or ""

    @property
    def source(self) -> Optional[str]:
        return self._meta("source")

    @property
    def text(self) -> Optional[str]:
        return self._meta("text")

    @property
    def other_metadata(self) -> List[Tuple[str, Optional[str]]]:
        return [(k, v) for k, v in self.metadata if k not in ("sent_id", "source", "text")]

    def token(self, index: int) -> Token:
        for t in self.tokens:
            if t.index == index:
                return t
        raise IndexError(f"no token with index {index} in sentence {self.sent_id!r}")

    def is_tree_valid(self) -> bool:
        tokens = self.tokens
        if not tokens:
            return False
        indices = {t.index for t in tokens}
        roots = [t for t in tokens if t.head == 0]
        if len(roots) != 1:
            return False
        for t in tokens:
            if t.head != 0 and t.head not in indices:
                return False
        # every token must reach the root by following heads, without cycles
        heads = {t.index: t.head for t in tokens}
        for start in indices:
            seen = set()
            cur = start
            while cur != 0:
                if cur in seen:
                    return False
                seen.add(cur)
                cur = heads[cur]
        return True

    def children(self, index: int) -> List[Token]:
        return [t for t in self.tokens if t.head == index]

    def copy(self) -> "Sentence":
        rows: List[Union[Token, str]] = []
        for r in self.rows:
            if isinstance(r, Token):
                rows.append(
                    Token(
                        index=r.index,
                        form=r.form,
                        lemma=r.lemma,
                        upos=r.upos,
                        xpos=r.xpos,
                        feats=list(r.feats),
                        head=r.head,
                        deprel=r.deprel,
                        deps=r.deps,
                        misc=list(r.misc),
                    )
                )
            else:
                rows.append(r)
        return Sentence(rows=rows, metadata=list(self.metadata), diagnostics=list(self.diagnostics))


def linear_left_neighbor(sentence: Sentence, index: int) -> Optional[int]:
    """Index of the token immediately to the left, or None for the first token."""
    indices = [t.index for t in sentence.tokens]
    if index not in indices:
        raise IndexError(f"invalid token index {index}")
    return index - 1 if index - 1 in indices else None


def _parse_feats(raw: str, line_no: int) -> List[Tuple[str, str]]:
    if raw == "_" or raw == "":
        return []
    pairs = []
    seen = set()
    for item in raw.split("|"):
        if "=" not in item:
            raise ConlluError(f"malformed FEATS item {item!r}", line_no)
        k, v = item.split("=", 1)
        if k in seen:
            raise ConlluError(f"duplicate FEATS key {k!r}", line_no)
        seen.add(k)
        pairs.append((k, v))
    return pairs


def _parse_misc(raw: str) -> List[str]:
    if raw == "_" or raw == "":
        return []
    return raw.split("|")


def parse_conllu(text: str) -> List[Sentence]:
    """Parse a CoNLL-U document into sentences in document order.

    Structural errors (bad column count, duplicate indices) raise ConlluError;
    recoverable issues (dangling heads, unparseable CXN values) become
    diagnostics on the affected sentence.
    """
    sentences: List[Sentence] = []
    current: Optional[Sentence] = None

    def flush():
        nonlocal current
        if current is not None and (current.rows or current.metadata):
            _check_sentence(current)
            sentences.append(current)
        current = None

    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.rstrip("\r")
        if line.strip() == "":
            flush()
            continue
        if current is None:
            current = Sentence()
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" in body:
                k, v = body.split("=", 1)
                current.metadata.append((k.strip(), v.strip()))
            else:
                current.metadata.append((body, None))
            continue
        cols = line.split("\t")
        if len(cols) != 10:
            raise ConlluError(f"expected 10 tab-separated columns, got {len(cols)}", line_no)
        if "-" in cols[0] or "." in cols[0]:
            # multiword-token range / empty node: preserved, not matched
            current.rows.append(line)
            continue
        try:
            index = int(cols[0])
        except ValueError:
            raise ConlluError(f"bad token index {cols[0]!r}", line_no)
        if index < 1:
            raise ConlluError(f"token index must be >= 1, got {index}", line_no)
        try:
            head = int(cols[6])
        except ValueError:
            raise ConlluError(f"bad HEAD value {cols[6]!r}", line_no)
        if head < 0:
            raise ConlluError(f"HEAD must be >= 0, got {head}", line_no)
        if head == index:
            raise ConlluError(f"token {index} has itself as head", line_no)
        if any(isinstance(r, Token) and r.index == index for r in current.rows):
            raise ConlluError(f"duplicate token index {index}", line_no)
        misc = _parse_misc(cols[9])
        for item in misc:
            if item.startswith("CXN=") and not CXN_MARK_RE.match(item):
                current.diagnostics.append(
                    Diagnostic("bad-cxn-mark", f"unparseable CXN value {item!r}", subject=str(index))
                )
        current.rows.append(
            Token(
                index=index,
                form=cols[1],
                lemma=cols[2],
                upos=cols[3],
                xpos=cols[4],
                feats=_parse_feats(cols[5], line_no),
                head=head,
                deprel=cols[7],
                deps=cols[8],
                misc=misc,
            )
        )
    flush()
    return sentences


def _check_sentence(s: Sentence) -> None:
    tokens = s.tokens
    indices = [t.index for t in tokens]
    if indices != list(range(1, len(indices) + 1)):
        raise ConlluError(f"token indices not contiguous 1..n in sentence {s.sent_id!r}")
    index_set = set(indices)
    for t in tokens:
        if t.head != 0 and t.head not in index_set:
            s.diagnostics.append(
                Diagnostic("dangling-head", f"token {t.index} has head {t.head} which does not exist",
                           subject=str(t.index))
            )
    if tokens and not s.is_tree_valid():
        s.diagnostics.append(Diagnostic("not-a-tree", f"sentence {s.sent_id!r} is not a valid tree"))


def serialize_sentence(s: Sentence) -> str:
    lines = []
    for k, v in s.metadata:
        if v is None:
            lines.append(f"# {k}")
        else:
            lines.append(f"# {k} = {v}")
    for r in s.rows:
        lines.append(r.to_line() if isinstance(r, Token) else r)
    return "\n".join(lines)


def serialize_conllu(sentences: Iterable[Sentence]) -> str:
    blocks = [serialize_sentence(s) for s in sentences]
    if not blocks:
        return ""
    return "\n\n".join(blocks) + "\n"


def token_spans(s: Sentence) -> List[Tuple[int, int, int]]:
    """Character offsets (token index, start, end) of each token in the sentence text.

    Uses ``# text`` when present, otherwise reconstructs from forms and
    SpaceAfter flags. The caller never re-tokenizes.
    """
    tokens = s.tokens
    text = s.text
    spans = []
    if text:
        cursor = 0
        for t in tokens:
            pos = text.find(t.form, cursor)
            if pos < 0:
                # fall back to reconstruction if alignment fails
                return token_spans(Sentence(rows=list(s.rows), metadata=[]))
            spans.append((t.index, pos, pos + len(t.form)))
            cursor = pos + len(t.form)
        return spans
    cursor = 0
    for i, t in enumerate(tokens):
        spans.append((t.index, cursor, cursor + len(t.form)))
        cursor += len(t.form)
        if "SpaceAfter=No" not in t.misc and i < len(tokens) - 1:
            cursor += 1
    return spans


def reconstruct_text(s: Sentence) -> str:
    parts = []
    tokens = s.tokens
    for i, t in enumerate(tokens):
        parts.append(t.form)
        if "SpaceAfter=No" not in t.misc and i < len(tokens) - 1:
            parts.append(" ")
    return "".join(parts)
