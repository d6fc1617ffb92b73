"""The conll-c construction-definition format.

A construction (cxn) is a set of constraint nodes forming a rooted, directed,
acyclic labeled graph. Node lines carry 13 tab-separated columns:

    ID FORM LEMMA UPOS FEATS HEAD DEPREL REQUIRED WITHOUT
    SEM.FEATS SEM.ROLES ADJACENCY IDENTITY

Header rows copied from presentation tables are tolerated and skipped.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import yaml

from .diag import Diagnostic

TOKEN_ID_RE = re.compile(r"^([A-Z])(?:\*([0-9]+))?$")
FUNCTION_REF_RE = re.compile(r"ref:([A-Z](?:\*[0-9]+)?)")

UD_UPOS = {
    "ADJ", "ADP", "ADV", "AUX", "CCONJ", "DET", "INTJ", "NOUN", "NUM",
    "PART", "PRON", "PROPN", "PUNCT", "SCONJ", "SYM", "VERB", "X",
}
EXTRA_UPOS = {"BMORPH"}

UD_DEPRELS = {
    "acl", "advcl", "advmod", "amod", "appos", "aux", "case", "cc", "ccomp",
    "clf", "compound", "conj", "cop", "csubj", "dep", "det", "discourse",
    "dislocated", "expl", "fixed", "flat", "goeswith", "iobj", "list", "mark",
    "nmod", "nsubj", "nummod", "obj", "obl", "orphan", "parataxis", "punct",
    "reparandum", "root", "vocative", "xcomp",
}
MORPH_DEPRELS = {"root/m", "der/m", "case/m", "mod/m", "conj/m"}

# regex metacharacters outside "," decide literal-alternatives vs regex
_REGEX_META = set(".^$*+?()[]{}\\|")


class ConllcError(Exception):
    """Unrecoverable problem in a conll-c stream."""

    def __init__(self, message: str, line_no: Optional[int] = None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


@dataclass(frozen=True, order=True)
class CxnTokenId:
    letter: str
    sub_index: Optional[int] = None

    def __str__(self) -> str:
        if self.sub_index is None:
            return self.letter
        return f"{self.letter}*{self.sub_index}"

    @property
    def is_subtoken(self) -> bool:
        return self.sub_index is not None

    @classmethod
    def parse(cls, raw: str) -> "CxnTokenId":
        m = TOKEN_ID_RE.match(raw)
        if not m:
            raise ValueError(f"bad cxn token ID {raw!r}")
        sub = m.group(2)
        return cls(m.group(1), int(sub) if sub else None)

    def sort_key(self):
        return (self.letter, self.sub_index if self.sub_index is not None else -1)


@dataclass(frozen=True)
class NegativeConstraint:
    kind: str  # "field" or "children"
    field_name: str = ""  # for kind == "field"
    value: str = ""  # excluded value (field) or empty (children)
    deprel: str = ""  # for kind == "children"

    def __str__(self) -> str:
        if self.kind == "children":
            return f"CHILDREN:DEPREL={self.deprel}"
        return f"{self.field_name}={self.value}"

    @classmethod
    def parse(cls, raw: str) -> "NegativeConstraint":
        if raw.startswith("CHILDREN:DEPREL="):
            return cls(kind="children", deprel=raw.split("=", 1)[1])
        if raw.startswith("CHILDREN="):  # prose variant
            return cls(kind="children", deprel=raw.split("=", 1)[1])
        if "=" not in raw:
            raise ValueError(f"bad WITHOUT item {raw!r}")
        name, value = raw.split("=", 1)
        return cls(kind="field", field_name=name, value=value)


@dataclass
class NodeConstraint:
    id: CxnTokenId
    form: Optional[str] = None  # raw pattern: literal alternatives or regex
    lemma: Optional[str] = None
    upos: List[str] = field(default_factory=list)
    feats: List[Tuple[str, str]] = field(default_factory=list)
    head: Optional[CxnTokenId] = None  # None = root of the cxn pattern
    deprel: List[str] = field(default_factory=list)
    required: bool = True
    without: List[NegativeConstraint] = field(default_factory=list)
    sem_feats: List[str] = field(default_factory=list)
    sem_roles: List[str] = field(default_factory=list)
    adjacency: Optional[CxnTokenId] = None  # left-adjacent token
    identity: List[Tuple[str, CxnTokenId]] = field(default_factory=list)

    @property
    def is_subtoken(self) -> bool:
        return self.id.is_subtoken or "BMORPH" in self.upos


@dataclass
class Cxn:
    cxn_id: int
    name: str = ""
    function: str = ""
    vertical_links: List[int] = field(default_factory=list)
    horizontal_links: List[int] = field(default_factory=list)
    extra_metadata: List[Tuple[str, str]] = field(default_factory=list)
    nodes: List[NodeConstraint] = field(default_factory=list)
    diagnostics: List[Diagnostic] = field(default_factory=list)

    def node(self, node_id) -> NodeConstraint:
        if isinstance(node_id, str):
            node_id = CxnTokenId.parse(node_id)
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise KeyError(str(node_id))

    def node_ids(self) -> List[CxnTokenId]:
        return [n.id for n in self.nodes]

    def function_refs(self) -> List[str]:
        return FUNCTION_REF_RE.findall(self.function)

    def metadata_flag(self, key: str) -> bool:
        for k, v in self.extra_metadata:
            if k == key:
                return str(v).strip().lower() in ("1", "true", "yes")
        return False


def pattern_is_regex(raw: str) -> bool:
    return any(ch in _REGEX_META for ch in raw)


def pattern_literals(raw: str) -> List[str]:
    return [p.strip() for p in raw.split(",")]


def pattern_matches(raw: str, value: str) -> bool:
    """Anchored match of a FORM/LEMMA pattern against a token field."""
    if pattern_is_regex(raw):
        return re.fullmatch(raw, value) is not None
    return value in pattern_literals(raw)


# --- parsing ---------------------------------------------------------------

_KEY_ALIASES = {
    "cxn-id": "cxn_id", "cxn_id": "cxn_id", "cnx_id": "cxn_id", "cnx-id": "cxn_id",
    "cxn-name": "cxn_name", "cxn_name": "cxn_name",
    "function": "function", "cxn-function": "function", "cxn_function": "function",
    "vertical_links": "vertical_links", "vertical-links": "vertical_links",
    "horizontal_links": "horizontal_links", "horizontal-links": "horizontal_links",
}

_HEADER_FIRST_FIELDS = {"ID", "REQUIRED"}


def _split_multi(raw: str) -> List[str]:
    if raw == "_" or raw == "":
        return []
    return [p.strip() for p in raw.split(",") if p.strip()]


def _parse_links(raw: str) -> List[int]:
    if raw is None:
        return []
    return [int(p) for p in str(raw).split() if p.strip()]


def _parse_node_line(cols: List[str], line_no: int) -> NodeConstraint:
    def opt(raw: str) -> Optional[str]:
        return None if raw == "_" or raw == "" else raw

    try:
        node_id = CxnTokenId.parse(cols[0])
    except ValueError as exc:
        raise ConllcError(str(exc), line_no)

    head_raw = cols[5]
    if head_raw in ("0", "_", ""):
        head = None
    else:
        try:
            head = CxnTokenId.parse(head_raw)
        except ValueError:
            raise ConllcError(f"bad HEAD value {head_raw!r}", line_no)

    feats: List[Tuple[str, str]] = []
    if cols[4] not in ("_", ""):
        for item in cols[4].split("|"):
            if "=" not in item:
                raise ConllcError(f"malformed FEATS item {item!r}", line_no)
            k, v = item.split("=", 1)
            feats.append((k, v))

    required_raw = cols[7]
    if required_raw not in ("0", "1"):
        raise ConllcError(f"REQUIRED must be 0 or 1, got {required_raw!r}", line_no)

    without: List[NegativeConstraint] = []
    if cols[8] not in ("_", ""):
        for item in cols[8].split("|"):
            try:
                without.append(NegativeConstraint.parse(item))
            except ValueError as exc:
                raise ConllcError(str(exc), line_no)

    adjacency = None
    if cols[11] not in ("_", ""):
        try:
            adjacency = CxnTokenId.parse(cols[11])
        except ValueError:
            raise ConllcError(f"bad ADJACENCY value {cols[11]!r}", line_no)

    identity: List[Tuple[str, CxnTokenId]] = []
    if cols[12] not in ("_", ""):
        for item in cols[12].split("|"):
            if "=" not in item:
                raise ConllcError(f"bad IDENTITY item {item!r}", line_no)
            fname, target = item.split("=", 1)
            try:
                identity.append((fname.strip(), CxnTokenId.parse(target.strip())))
            except ValueError:
                raise ConllcError(f"bad IDENTITY target {target!r}", line_no)

    return NodeConstraint(
        id=node_id,
        form=opt(cols[1]),
        lemma=opt(cols[2]),
        upos=_split_multi(cols[3]),
        feats=feats,
        head=head,
        deprel=_split_multi(cols[6]),
        required=required_raw == "1",
        without=without,
        sem_feats=_split_multi(cols[9]),
        sem_roles=_split_multi(cols[10]),
        adjacency=adjacency,
        identity=identity,
    )


def _check_labels(cxn: Cxn) -> None:
    for n in cxn.nodes:
        for u in n.upos:
            if u not in UD_UPOS | EXTRA_UPOS:
                cxn.diagnostics.append(
                    Diagnostic("unknown-upos", f"unknown UPOS label {u!r}", subject=str(n.id))
                )
        for d in n.deprel:
            base = d.split(":", 1)[0]
            if d not in MORPH_DEPRELS and base not in UD_DEPRELS:
                cxn.diagnostics.append(
                    Diagnostic("unknown-deprel", f"unknown DEPREL label {d!r}", subject=str(n.id))
                )


def _check_structure(cxn: Cxn, line_no: Optional[int] = None) -> None:
    seen = set()
    for n in cxn.nodes:
        if n.id in seen:
            raise ConllcError(f"duplicate node ID {n.id}", line_no)
        seen.add(n.id)
    for n in cxn.nodes:
        if n.head is not None and n.head not in seen:
            raise ConllcError(f"node {n.id}: head {n.head} not declared", line_no)
    # acyclicity of the head structure
    for n in cxn.nodes:
        trail = set()
        cur = n
        while cur.head is not None:
            if cur.id in trail:
                raise ConllcError(f"cyclic head structure involving node {cur.id}", line_no)
            trail.add(cur.id)
            cur = cxn.node(cur.head)


def parse_conllc(text: str, require_id: bool = True) -> List[Cxn]:
    """Parse a conll-c document into constructions in document order."""
    cxns: List[Cxn] = []
    meta: List[Tuple[str, str]] = []
    nodes: List[NodeConstraint] = []
    block_start = None

    def flush(line_no):
        nonlocal meta, nodes, block_start
        if not meta and not nodes:
            return
        fields = {}
        extra = []
        for k, v in meta:
            canon = _KEY_ALIASES.get(k)
            if canon and canon not in fields:
                fields[canon] = v
            elif canon:
                raise ConllcError(f"duplicate comment key {k!r}", line_no)
            else:
                extra.append((k, v))
        if "cxn_id" not in fields:
            if require_id:
                raise ConllcError("missing cxn_id comment", block_start)
            cxn_id = 0
        else:
            try:
                cxn_id = int(fields["cxn_id"])
            except ValueError:
                raise ConllcError(f"bad cxn_id {fields['cxn_id']!r}", block_start)
        cxn = Cxn(
            cxn_id=cxn_id,
            name=fields.get("cxn_name", ""),
            function=fields.get("function", ""),
            vertical_links=_parse_links(fields.get("vertical_links", "")),
            horizontal_links=_parse_links(fields.get("horizontal_links", "")),
            extra_metadata=extra,
            nodes=nodes,
        )
        _check_structure(cxn, line_no)
        _check_labels(cxn)
        cxns.append(cxn)
        meta, nodes, block_start = [], [], None

    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.rstrip("\r")
        if line.strip() == "":
            flush(line_no)
            continue
        if block_start is None:
            block_start = line_no
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" in body:
                k, v = body.split("=", 1)
                meta.append((k.strip(), v.strip()))
            else:
                meta.append((body, ""))
            continue
        cols = line.split("\t")
        first = cols[0].split()[0] if cols[0].split() else ""
        if first in _HEADER_FIRST_FIELDS:
            continue  # presentation header row
        if len(cols) != 13:
            raise ConllcError(f"expected 13 tab-separated columns, got {len(cols)}", line_no)
        nodes.append(_parse_node_line([c.strip() for c in cols], line_no))
    flush(None)
    return cxns


# --- serialization ---------------------------------------------------------

def _serialize_node(n: NodeConstraint) -> str:
    def opt(v: Optional[str]) -> str:
        return v if v else "_"

    def multi(vals: List[str]) -> str:
        return ",".join(vals) if vals else "_"

    feats = "|".join(f"{k}={v}" for k, v in n.feats) if n.feats else "_"
    without = "|".join(str(w) for w in n.without) if n.without else "_"
    identity = "|".join(f"{f}={t}" for f, t in n.identity) if n.identity else "_"
    return "\t".join(
        [
            str(n.id),
            opt(n.form),
            opt(n.lemma),
            multi(n.upos),
            feats,
            str(n.head) if n.head is not None else "0",
            multi(n.deprel),
            "1" if n.required else "0",
            without,
            multi(n.sem_feats),
            multi(n.sem_roles),
            str(n.adjacency) if n.adjacency is not None else "_",
            identity,
        ]
    )


def serialize_cxn(c: Cxn) -> str:
    lines = [
        f"# cxn-id = {c.cxn_id}",
        f"# cxn-name = {c.name}",
        f"# function = {c.function}",
        "# vertical_links = " + " ".join(str(i) for i in c.vertical_links),
        "# horizontal_links = " + " ".join(str(i) for i in c.horizontal_links),
    ]
    lines = [ln.rstrip() for ln in lines]
    for k, v in c.extra_metadata:
        lines.append(f"# {k} = {v}".rstrip())
    for n in c.nodes:
        lines.append(_serialize_node(n))
    return "\n".join(lines)


def serialize_conllc(cxns: List[Cxn]) -> str:
    blocks = [serialize_cxn(c) for c in cxns]
    if not blocks:
        return ""
    return "\n\n".join(blocks) + "\n"


# --- yaml entries ----------------------------------------------------------

def load_yaml_entry(text: str) -> Cxn:
    """Load one construction from its yaml entry (conll-c embedded as a literal block)."""
    data = yaml.safe_load(text)
    if not isinstance(data, dict):
        raise ConllcError("yaml entry must be a mapping")
    if "conll_c" not in data:
        raise ConllcError("yaml entry missing 'conll_c' key")
    block = data["conll_c"]
    cxns = parse_conllc(block, require_id=False)
    if len(cxns) != 1:
        raise ConllcError(f"conll_c block must contain exactly one cxn, found {len(cxns)}")
    cxn = cxns[0]

    known = {"cxn_id", "cxn_name", "function", "vertical_links", "horizontal_links", "conll_c"}
    if "cxn_id" in data:
        top_id = int(data["cxn_id"])
        if cxn.cxn_id and cxn.cxn_id != top_id:
            raise ConllcError(f"id mismatch: yaml says {top_id}, conll-c block says {cxn.cxn_id}")
        cxn.cxn_id = top_id
    if not cxn.cxn_id:
        raise ConllcError("missing cxn_id (neither yaml key nor conll-c comment)")
    if "cxn_name" in data:
        top_name = str(data["cxn_name"])
        if cxn.name and cxn.name != top_name:
            raise ConllcError(f"cxn_name mismatch: {top_name!r} vs {cxn.name!r}")
        cxn.name = top_name
    if "function" in data:
        top_fn = str(data["function"])
        if cxn.function and cxn.function != top_fn:
            raise ConllcError(f"function mismatch: {top_fn!r} vs {cxn.function!r}")
        cxn.function = top_fn
    for key in ("vertical_links", "horizontal_links"):
        if key in data:
            raw = data[key]
            links = _parse_links(raw) if isinstance(raw, str) else [int(x) for x in (raw or [])]
            declared = getattr(cxn, key)
            if declared and links != declared:
                raise ConllcError(f"{key} mismatch: {links} vs {declared}")
            setattr(cxn, key, links)
    for k, v in data.items():
        if k not in known:
            cxn.extra_metadata.append((k, str(v)))
    return cxn


class _LiteralStr(str):
    """Marker for strings that must dump as yaml literal blocks."""


def _literal_representer(dumper, data):
    return dumper.represent_scalar("tag:yaml.org,2002:str", data, style="|")


yaml.SafeDumper.add_representer(_LiteralStr, _literal_representer)


def dump_yaml_entry(c: Cxn) -> str:
    """Write a construction as a yaml entry with an embedded conll-c literal block."""
    data = {
        "cxn_id": c.cxn_id,
        "cxn_name": c.name,
        "function": c.function,
        "vertical_links": c.vertical_links,
        "horizontal_links": c.horizontal_links,
    }
    for k, v in c.extra_metadata:
        data[k] = v
    data["conll_c"] = _LiteralStr(serialize_cxn(c) + "\n")
    return yaml.safe_dump(data, sort_keys=False, allow_unicode=True,
                          default_flow_style=False, width=10 ** 6)


# --- validation ------------------------------------------------------------

def validate_cxn(c: Cxn) -> List[Diagnostic]:
    """Structural diagnostics for a (possibly hand-built) construction."""
    diags: List[Diagnostic] = []
    ids = [n.id for n in c.nodes]
    id_set = set()
    for i in ids:
        if i in id_set:
            diags.append(Diagnostic("duplicate-id", f"node ID {i} declared more than once", subject=str(i)))
        id_set.add(i)

    by_id = {n.id: n for n in c.nodes}

    for n in c.nodes:
        if n.head == n.id:
            diags.append(Diagnostic("self-head", f"node {n.id} has itself as head", subject=str(n.id)))
        elif n.head is not None and n.head not in id_set:
            diags.append(Diagnostic("undeclared-head", f"node {n.id} references undeclared head {n.head}",
                                    subject=str(n.id)))
        if n.adjacency is not None and n.adjacency not in id_set:
            diags.append(Diagnostic("undeclared-adjacency",
                                    f"node {n.id} references undeclared adjacency target {n.adjacency}",
                                    subject=str(n.id)))
        for fname, target in n.identity:
            if target not in id_set:
                diags.append(Diagnostic("undeclared-identity",
                                        f"node {n.id} identity {fname}={target} references undeclared node",
                                        subject=str(n.id)))

    # cycle check over head edges (skip nodes already flagged)
    for n in c.nodes:
        trail = set()
        cur = n
        while cur.head is not None and cur.head in by_id:
            if cur.id in trail:
                diags.append(Diagnostic("head-cycle", f"cyclic head structure at node {cur.id}",
                                        subject=str(cur.id)))
                break
            trail.add(cur.id)
            if cur.head == cur.id:
                break
            cur = by_id[cur.head]

    # rootedness: each weakly connected component has exactly one root, and it is required
    if c.nodes and not any(d.rule in ("head-cycle", "self-head", "undeclared-head") for d in diags):
        comp = {n.id: n.id for n in c.nodes}

        def find(x):
            while comp[x] != x:
                comp[x] = comp[comp[x]]
                x = comp[x]
            return x

        for n in c.nodes:
            if n.head is not None:
                comp[find(n.id)] = find(n.head)
        roots_per_comp: dict = {}
        for n in c.nodes:
            if n.head is None:
                roots_per_comp.setdefault(find(n.id), []).append(n)
        for n in c.nodes:
            key = find(n.id)
            roots = roots_per_comp.get(key, [])
            if not roots:
                diags.append(Diagnostic("unrooted", f"component of node {n.id} has no root", subject=str(n.id)))
                break
        for roots in roots_per_comp.values():
            if len(roots) > 1:
                diags.append(Diagnostic("multi-root",
                                        "component has more than one root: "
                                        + ", ".join(str(r.id) for r in roots)))
            elif roots and not roots[0].required:
                diags.append(Diagnostic("optional-root", f"root node {roots[0].id} is not required",
                                        subject=str(roots[0].id)))

    for ref in c.function_refs():
        try:
            target = CxnTokenId.parse(ref)
        except ValueError:
            target = None
        if target is None or target not in id_set:
            diags.append(Diagnostic("unresolved-function-ref",
                                    f"function references undeclared token ref:{ref}"))

    # sub-token structure: BMORPH only below the word level; head chain via /m relations
    for n in c.nodes:
        if not n.id.is_subtoken:
            continue
        word = CxnTokenId(n.id.letter)
        if word not in id_set:
            diags.append(Diagnostic("orphan-subtoken",
                                    f"sub-token {n.id} has no word node {word}", subject=str(n.id)))
            continue
        cur = n
        ok = True
        while cur.id != word:
            if cur.head is None or cur.head not in by_id:
                ok = False
                break
            if cur.deprel and not all(d in MORPH_DEPRELS for d in cur.deprel):
                ok = False
                break
            cur = by_id[cur.head]
        if not ok:
            diags.append(Diagnostic("subtoken-chain",
                                    f"sub-token {n.id} does not reach word {word} via /m relations",
                                    subject=str(n.id)))
    return diags
