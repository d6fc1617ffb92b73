"""Compile constructions into executable patterns and enumerate constructs.

Matching semantics (shared by the backtracking searcher and the brute-force
oracle):

- node predicates: anchored FORM/LEMMA pattern, UPOS membership, FEATS subset,
  WITHOUT exclusions (field values, absent FEATS pairs, no child via a deprel);
- edge predicates: bound child's head is the bound parent, deprel in the set;
  binding a node whose declared head is unbound is not allowed;
- adjacency and identity constraints are vacuous when a referenced token is
  unbound;
- matches are maximal: no further optional node can be consistently bound;
- the cxn root's DEPREL cell is not a matching constraint unless the cxn
  carries the metadata flag ``match_root_deprel``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import combinations, permutations
from typing import Dict, Iterable, Iterator, List, Optional, Tuple

from .conllc import Cxn, NegativeConstraint, NodeConstraint, pattern_matches, validate_cxn
from .conllu import Sentence, Token
from .diag import Diagnostic


class CompileError(Exception):
    pass


class OracleError(Exception):
    pass


@dataclass
class NodeProgram:
    label: str
    form: Optional[str]
    lemma: Optional[str]
    upos: List[str]
    feats: List[Tuple[str, str]]
    deprel: List[str]  # checked on the edge; on the root only with match_root_deprel
    without: List[NegativeConstraint]
    required: bool
    is_subtoken: bool
    is_root: bool
    check_root_deprel: bool = False
    sem_feats: List[str] = field(default_factory=list)
    sem_roles: List[str] = field(default_factory=list)


@dataclass
class CompiledPattern:
    cxn_id: int
    name: str
    node_programs: Dict[str, NodeProgram]
    edges: List[Tuple[str, str, Tuple[str, ...]]]  # (child, parent, deprels)
    order_constraints: List[Tuple[str, str]]  # (node, left neighbor)
    identity_constraints: List[Tuple[str, str, str]]  # (field, node, target)
    required_ids: Tuple[str, ...]
    optional_ids: Tuple[str, ...]

    @property
    def labels(self) -> List[str]:
        return list(self.node_programs)


@dataclass
class Match:
    cxn_id: int
    sent_id: str
    source: Optional[str]
    binding: Dict[str, int]  # cxn token label -> sentence token index
    evidence: List[dict] = field(default_factory=list)

    def binding_key(self) -> str:
        return ",".join(f"{k}={v}" for k, v in sorted(self.binding.items()))

    def to_json(self) -> str:
        return json.dumps(
            {"cxn_id": self.cxn_id, "sent_id": self.sent_id, "source": self.source,
             "binding": self.binding},
            ensure_ascii=False,
        )

    @classmethod
    def from_json(cls, line: str) -> "Match":
        data = json.loads(line)
        return cls(
            cxn_id=int(data["cxn_id"]),
            sent_id=data["sent_id"],
            source=data.get("source"),
            binding={k: int(v) for k, v in data["binding"].items()},
        )


def compile(cxn: Cxn) -> CompiledPattern:
    """Deterministically compile a validated construction into a pattern."""
    diags = validate_cxn(cxn)
    if diags:
        raise CompileError(f"cxn {cxn.cxn_id} does not validate: " + "; ".join(map(str, diags)))
    required = tuple(str(n.id) for n in cxn.nodes if n.required)
    optional = tuple(str(n.id) for n in cxn.nodes if not n.required)
    if not required:
        raise CompileError(f"cxn {cxn.cxn_id}: vacuous pattern (no required nodes)")

    check_root_deprel = cxn.metadata_flag("match_root_deprel")
    programs: Dict[str, NodeProgram] = {}
    edges = []
    orders = []
    identities = []
    for n in cxn.nodes:
        label = str(n.id)
        programs[label] = NodeProgram(
            label=label,
            form=n.form,
            lemma=n.lemma,
            upos=list(n.upos),
            feats=list(n.feats),
            deprel=list(n.deprel),
            without=list(n.without),
            required=n.required,
            is_subtoken=n.is_subtoken,
            is_root=n.head is None,
            check_root_deprel=check_root_deprel,
            sem_feats=list(n.sem_feats),
            sem_roles=list(n.sem_roles),
        )
        if n.head is not None:
            edges.append((label, str(n.head), tuple(n.deprel)))
        if n.adjacency is not None:
            orders.append((label, str(n.adjacency)))
        for fname, target in n.identity:
            identities.append((fname.upper(), label, str(target)))
    return CompiledPattern(
        cxn_id=cxn.cxn_id,
        name=cxn.name,
        node_programs=programs,
        edges=edges,
        order_constraints=orders,
        identity_constraints=identities,
        required_ids=required,
        optional_ids=optional,
    )


# --- predicate evaluation ----------------------------------------------------

def _without_ok(excl: NegativeConstraint, token: Token, sentence: Sentence) -> bool:
    if excl.kind == "children":
        return not any(c.deprel == excl.deprel for c in sentence.children(token.index))
    if excl.field_name.upper() == "FEATS" and "=" in excl.value:
        k, v = excl.value.split("=", 1)
        return (k, v) not in token.feats
    try:
        return token.field_value(excl.field_name) != excl.value
    except KeyError:
        return True


def node_satisfied(prog: NodeProgram, token: Token, sentence: Sentence) -> bool:
    if prog.is_subtoken:
        return False  # plain UD sentences carry no sub-token annotations
    if prog.form is not None and not pattern_matches(prog.form, token.form):
        return False
    if prog.lemma is not None and not pattern_matches(prog.lemma, token.lemma):
        return False
    if prog.upos and token.upos not in prog.upos:
        return False
    if prog.feats and not set(prog.feats) <= set(token.feats):
        return False
    if prog.is_root and prog.check_root_deprel and prog.deprel and token.deprel not in prog.deprel:
        return False
    return all(_without_ok(w, token, sentence) for w in prog.without)


def node_failures(prog: NodeProgram, token: Token, sentence: Sentence) -> List[Diagnostic]:
    """Per-field failure report for one node/token pairing (the evidence function)."""
    fails = []
    subj = f"token {token.index}"
    if prog.is_subtoken:
        fails.append(Diagnostic("subtoken", f"node {prog.label} is a sub-token node", subject=subj))
        return fails
    if prog.form is not None and not pattern_matches(prog.form, token.form):
        fails.append(Diagnostic("form", f"FORM {token.form!r} does not match {prog.form!r}", subject=subj))
    if prog.lemma is not None and not pattern_matches(prog.lemma, token.lemma):
        fails.append(Diagnostic("lemma", f"LEMMA {token.lemma!r} does not match {prog.lemma!r}", subject=subj))
    if prog.upos and token.upos not in prog.upos:
        fails.append(Diagnostic("upos", f"UPOS {token.upos} not in {{{', '.join(prog.upos)}}}", subject=subj))
    for k, v in prog.feats:
        if (k, v) not in token.feats:
            fails.append(Diagnostic("feats", f"missing feature {k}={v}", subject=subj))
    if prog.is_root and prog.check_root_deprel and prog.deprel and token.deprel not in prog.deprel:
        fails.append(Diagnostic("deprel", f"DEPREL {token.deprel} not in {{{', '.join(prog.deprel)}}}",
                                subject=subj))
    for w in prog.without:
        if not _without_ok(w, token, sentence):
            fails.append(Diagnostic("without", f"excluded by WITHOUT {w}", subject=subj))
    return fails


def check_binding(pattern: CompiledPattern, sentence: Sentence,
                  binding: Dict[str, int]) -> List[Diagnostic]:
    """Re-verify one binding against every compiled constraint; empty = satisfied.

    Constraints whose participants are unbound are vacuous, except that a bound
    node with an unbound declared head fails its edge constraint. Required
    nodes must be bound.
    """
    fails: List[Diagnostic] = []
    values = list(binding.values())
    if len(set(values)) != len(values):
        fails.append(Diagnostic("injectivity", "binding maps two nodes to one token"))
    for label in pattern.required_ids:
        if label not in binding:
            fails.append(Diagnostic("unbound-required", f"required node {label} is unbound"))
    for label, idx in binding.items():
        prog = pattern.node_programs.get(label)
        if prog is None:
            fails.append(Diagnostic("unknown-node", f"binding names unknown node {label}"))
            continue
        try:
            token = sentence.token(idx)
        except IndexError:
            fails.append(Diagnostic("bad-index", f"node {label} bound to missing token {idx}"))
            continue
        fails.extend(node_failures(prog, token, sentence))
    for child, parent, deprels in pattern.edges:
        if child not in binding:
            continue
        token = sentence.token(binding[child])
        if parent not in binding:
            fails.append(Diagnostic("edge", f"node {child} bound but its head node {parent} is not"))
            continue
        if token.head != binding[parent]:
            fails.append(Diagnostic("edge", f"token {token.index} head is {token.head}, "
                                            f"expected {binding[parent]} ({parent})",
                                    subject=f"token {token.index}"))
        if deprels and token.deprel not in deprels:
            fails.append(Diagnostic("deprel", f"DEPREL {token.deprel} not in {{{', '.join(deprels)}}}",
                                    subject=f"token {token.index}"))
    for label, left in pattern.order_constraints:
        if label in binding and left in binding:
            if binding[label] != binding[left] + 1:
                fails.append(Diagnostic("adjacency",
                                        f"token {binding[label]} ({label}) is not immediately "
                                        f"right of token {binding[left]} ({left})"))
    for fname, label, target in pattern.identity_constraints:
        if label in binding and target in binding:
            a = sentence.token(binding[label]).field_value(fname)
            b = sentence.token(binding[target]).field_value(fname)
            if a != b:
                fails.append(Diagnostic("identity", f"{fname} of {label} ({a!r}) != {fname} of "
                                                    f"{target} ({b!r})"))
    return fails


def _evidence(pattern: CompiledPattern, binding: Dict[str, int]) -> List[dict]:
    ev = []
    for label in pattern.labels:
        prog = pattern.node_programs[label]
        if label in binding:
            ev.append({"constraint": "node", "node": label, "token": binding[label],
                       "status": "satisfied"})
        else:
            ev.append({"constraint": "node", "node": label, "status": "unbound"})
        if prog.sem_feats or prog.sem_roles:
            ev.append({"constraint": "sem", "node": label,
                       "sem_feats": prog.sem_feats, "sem_roles": prog.sem_roles,
                       "status": "unchecked"})
    return ev


# --- search -------------------------------------------------------------------

def _complete_binding_ok(pattern: CompiledPattern, sentence: Sentence,
                         binding: Dict[str, int], decided: set) -> bool:
    """Check constraints among already-decided nodes (absent = skipped)."""
    for child, parent, deprels in pattern.edges:
        if child in decided and parent in decided and child in binding:
            if parent not in binding:
                return False
            token = sentence.token(binding[child])
            if token.head != binding[parent]:
                return False
            if deprels and token.deprel not in deprels:
                return False
    for label, left in pattern.order_constraints:
        if label in decided and left in decided and label in binding and left in binding:
            if binding[label] != binding[left] + 1:
                return False
    for fname, label, target in pattern.identity_constraints:
        if label in decided and target in decided and label in binding and target in binding:
            a = sentence.token(binding[label]).field_value(fname)
            b = sentence.token(binding[target]).field_value(fname)
            if a != b:
                return False
    return True


def _maximal(bindings: List[Dict[str, int]]) -> List[Dict[str, int]]:
    items = {frozenset(b.items()) for b in bindings}
    keep = [b for b in items if not any(b < other for other in items)]
    return [dict(b) for b in keep]


def match_sentence(pattern: CompiledPattern, sentence: Sentence) -> List[Match]:
    """All maximal injective bindings of the pattern into one sentence."""
    tokens = sentence.tokens
    candidates: Dict[str, List[int]] = {}
    for label, prog in pattern.node_programs.items():
        candidates[label] = [t.index for t in tokens if node_satisfied(prog, t, sentence)]
    if any(not candidates[label] for label in pattern.required_ids):
        return []

    order = sorted(pattern.labels, key=lambda l: (len(candidates[l]), l))
    results: List[Dict[str, int]] = []

    def extend(pos: int, binding: Dict[str, int], decided: set) -> None:
        if pos == len(order):
            results.append(dict(binding))
            return
        label = order[pos]
        decided = decided | {label}
        used = set(binding.values())
        for idx in candidates[label]:
            if idx in used:
                continue
            binding[label] = idx
            if _complete_binding_ok(pattern, sentence, binding, decided):
                extend(pos + 1, binding, decided)
            del binding[label]
        if label in pattern.optional_ids:
            if _complete_binding_ok(pattern, sentence, binding, decided):
                extend(pos + 1, binding, decided)

    extend(0, {}, set())

    labels_sorted = sorted(pattern.labels)
    out = []
    for binding in _maximal(results):
        out.append(Match(
            cxn_id=pattern.cxn_id,
            sent_id=sentence.sent_id,
            source=sentence.source,
            binding=binding,
            evidence=_evidence(pattern, binding),
        ))
    out.sort(key=lambda m: tuple(m.binding.get(l, 0) for l in labels_sorted))
    return out


def match_corpus(pattern: CompiledPattern, sentences: Iterable[Sentence]) -> Iterator[Match]:
    """Stream matches over a corpus in corpus order (bounded memory)."""
    for sentence in sentences:
        if not sentence.is_tree_valid():
            continue
        yield from match_sentence(pattern, sentence)


# --- brute-force oracle --------------------------------------------------------

def _oracle_binding_ok(cxn: Cxn, sentence: Sentence, binding: Dict[str, int]) -> bool:
    """Direct evaluation of every constraint of the cxn, straight off the Cxn."""
    check_root_deprel = cxn.metadata_flag("match_root_deprel")
    for n in cxn.nodes:
        label = str(n.id)
        if label not in binding:
            if n.required:
                return False
            continue
        token = sentence.token(binding[label])
        if n.is_subtoken:
            return False
        if n.form is not None and not pattern_matches(n.form, token.form):
            return False
        if n.lemma is not None and not pattern_matches(n.lemma, token.lemma):
            return False
        if n.upos and token.upos not in n.upos:
            return False
        if n.feats and not set(n.feats) <= set(token.feats):
            return False
        for w in n.without:
            if w.kind == "children":
                if any(c.deprel == w.deprel for c in sentence.children(token.index)):
                    return False
            elif w.field_name.upper() == "FEATS" and "=" in w.value:
                k, v = w.value.split("=", 1)
                if (k, v) in token.feats:
                    return False
            else:
                try:
                    if token.field_value(w.field_name) == w.value:
                        return False
                except KeyError:
                    pass
        if n.head is not None:
            parent_label = str(n.head)
            if parent_label not in binding:
                return False
            if token.head != binding[parent_label]:
                return False
            if n.deprel and token.deprel not in n.deprel:
                return False
        elif check_root_deprel and n.deprel and token.deprel not in n.deprel:
            return False
        if n.adjacency is not None:
            left_label = str(n.adjacency)
            if left_label in binding and binding[label] != binding[left_label] + 1:
                return False
        for fname, target in n.identity:
            target_label = str(target)
            if target_label in binding:
                a = token.field_value(fname)
                b = sentence.token(binding[target_label]).field_value(fname)
                if a != b:
                    return False
    return True


def oracle_match(cxn: Cxn, sentence: Sentence) -> List[Match]:
    """Exhaustive-enumeration reference matcher (small instances only)."""
    if len(cxn.nodes) > 6:
        raise OracleError("oracle limited to cxns with at most 6 nodes")
    tokens = sentence.tokens
    if len(tokens) > 25:
        raise OracleError("oracle limited to sentences with at most 25 tokens")

    required = [str(n.id) for n in cxn.nodes if n.required]
    optional = [str(n.id) for n in cxn.nodes if not n.required]
    indices = [t.index for t in tokens]

    ok_bindings: List[Dict[str, int]] = []
    for k in range(len(optional) + 1):
        for extra in combinations(optional, k):
            labels = required + list(extra)
            if len(labels) > len(indices):
                continue
            for perm in permutations(indices, len(labels)):
                binding = dict(zip(labels, perm))
                if _oracle_binding_ok(cxn, sentence, binding):
                    ok_bindings.append(binding)

    labels_sorted = sorted(str(n.id) for n in cxn.nodes)
    out = [
        Match(cxn_id=cxn.cxn_id, sent_id=sentence.sent_id, source=sentence.source, binding=b)
        for b in _maximal(ok_bindings)
    ]
    out.sort(key=lambda m: tuple(m.binding.get(l, 0) for l in labels_sorted))
    return out
