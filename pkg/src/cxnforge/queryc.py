"""Emit grew-style query text for compiled patterns.

Optional nodes are handled by emitting one query variant per included subset
of optional nodes (capped), the full pattern first. Fidelity is checked
internally by re-parsing the emitted text into a constraint multiset; the
external grew tool is never invoked.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .conllc import pattern_is_regex, pattern_literals
from .diag import Diagnostic
from .matcher import CompiledPattern

VARIANT_CAP = 16  # beyond 4 optional nodes, emit only the two boundary variants


@dataclass
class QuerySet:
    cxn_id: int
    queries: List[str]
    variant_of: List[Tuple[str, ...]]  # per query, the optional IDs included
    diagnostics: List[Diagnostic] = field(default_factory=list)


def _value_expr(raw: str) -> str:
    if pattern_is_regex(raw):
        return f're"{raw}"'
    return "|".join(f'"{lit}"' for lit in pattern_literals(raw))


def _node_clause(prog) -> str:
    parts = []
    if prog.upos:
        parts.append("upos=" + "|".join(prog.upos))
    if prog.form is not None:
        parts.append("form=" + _value_expr(prog.form))
    if prog.lemma is not None:
        parts.append("lemma=" + _value_expr(prog.lemma))
    for k, v in prog.feats:
        parts.append(f'{k}="{v}"')
    return f"  {prog.label} [{', '.join(parts)}];"


def emit_queries(pattern: CompiledPattern) -> QuerySet:
    """Translate a compiled pattern into a set of query text blocks."""
    diagnostics: List[Diagnostic] = []

    subtoken = [l for l in pattern.labels if pattern.node_programs[l].is_subtoken]
    optional = [l for l in pattern.optional_ids if l not in subtoken]
    for label in subtoken:
        if label in pattern.required_ids:
            diagnostics.append(Diagnostic(
                "subtoken-query",
                f"node {label} uses sub-token structure not expressible in the target syntax; "
                "no query emitted for this pattern", subject=label))
            return QuerySet(pattern.cxn_id, [], [], diagnostics)
        diagnostics.append(Diagnostic(
            "subtoken-query", f"optional sub-token node {label} omitted from all queries",
            subject=label))

    subsets: List[Tuple[str, ...]]
    if 2 ** len(optional) > VARIANT_CAP:
        subsets = [tuple(optional), ()]
        diagnostics.append(Diagnostic(
            "variant-cap",
            f"{len(optional)} optional nodes exceed the variant cap; emitting only the "
            "all-nodes and all-required variants"))
    else:
        # full pattern first, then by decreasing size, deterministic order
        subsets = [tuple(optional)]
        for size in range(len(optional) - 1, -1, -1):
            from itertools import combinations
            for combo in combinations(optional, size):
                subsets.append(tuple(combo))

    queries = []
    for included in subsets:
        labels = [l for l in pattern.labels
                  if l not in subtoken and (l in pattern.required_ids or l in included)]
        queries.append(_emit_one(pattern, labels))
    return QuerySet(pattern.cxn_id, queries, subsets, diagnostics)


def _emit_one(pattern: CompiledPattern, labels: List[str]) -> str:
    included = set(labels)
    lines = [f"% cxn {pattern.cxn_id}: {pattern.name}"]
    for label in labels:
        prog = pattern.node_programs[label]
        if prog.sem_feats:
            lines.append(f"% sem_feats {label} = {', '.join(prog.sem_feats)}")
        if prog.sem_roles:
            lines.append(f"% sem_roles {label} = {', '.join(prog.sem_roles)}")
    lines.append("pattern {")
    for label in labels:
        lines.append(_node_clause(pattern.node_programs[label]))
    for child, parent, deprels in pattern.edges:
        if child in included and parent in included:
            rel = "|".join(deprels) if deprels else ""
            lines.append(f"  {parent} -[{rel}]-> {child};")
    for label, left in pattern.order_constraints:
        if label in included and left in included:
            lines.append(f"  {left} < {label};")
    for fname, label, target in pattern.identity_constraints:
        if label in included and target in included:
            lines.append(f"  {label}.{fname.lower()} = {target}.{fname.lower()};")
    lines.append("}")
    counter = 0
    for label in labels:
        for w in pattern.node_programs[label].without:
            if w.kind == "children":
                counter += 1
                lines.append(f"without {{ {label} -[{w.deprel}]-> __excl{counter} }}")
            else:
                key = w.field_name.lower()
                if w.field_name.upper() == "FEATS" and "=" in w.value:
                    k, v = w.value.split("=", 1)
                    lines.append(f'without {{ {label} [{k}="{v}"] }}')
                else:
                    lines.append(f'without {{ {label} [{key}="{w.value}"] }}')
    return "\n".join(lines) + "\n"


# --- structural re-parse (fidelity check) -----------------------------------

_NODE_RE = re.compile(r"^\s*([A-Z](?:\*\d+)?)\s*\[(.*)\];$")
_EDGE_RE = re.compile(r"^\s*(\S+)\s*-\[(.*?)\]->\s*([^\s;]+);?\s*$")
_ORDER_RE = re.compile(r"^\s*(\S+)\s*<\s*(\S+);$")
_IDENT_RE = re.compile(r"^\s*(\S+)\.(\w+)\s*=\s*(\S+)\.(\w+);$")
_WITHOUT_EDGE_RE = re.compile(r"^without \{ (\S+) -\[(.*?)\]-> (\S+) \}$")
_WITHOUT_NODE_RE = re.compile(r'^without \{ (\S+) \[(\w+)="(.*)"\] \}$')


def parse_query(text: str) -> dict:
    """Minimal structural reader for emitted query text.

    Returns normalized node/edge/order/identity/without constraint collections;
    used to verify that emission is information-preserving.
    """
    nodes: Dict[str, List[str]] = {}
    edges = []
    orders = []
    identities = []
    without_children = []
    without_fields = []
    in_pattern = False
    for line in text.splitlines():
        stripped = line.strip()
        if stripped.startswith("%"):
            continue
        if stripped == "pattern {":
            in_pattern = True
            continue
        if stripped == "}":
            in_pattern = False
            continue
        m = _WITHOUT_EDGE_RE.match(stripped)
        if m:
            without_children.append((m.group(1), m.group(2)))
            continue
        m = _WITHOUT_NODE_RE.match(stripped)
        if m:
            without_fields.append((m.group(1), m.group(2), m.group(3)))
            continue
        if not in_pattern or not stripped:
            continue
        m = _NODE_RE.match(line)
        if m:
            conds = [c.strip() for c in m.group(2).split(",") if c.strip()] if m.group(2).strip() else []
            nodes[m.group(1)] = sorted(conds)
            continue
        m = _EDGE_RE.match(line)
        if m:
            edges.append((m.group(1), m.group(2), m.group(3)))
            continue
        m = _ORDER_RE.match(line)
        if m:
            orders.append((m.group(1), m.group(2)))
            continue
        m = _IDENT_RE.match(line)
        if m:
            identities.append((m.group(1), m.group(2), m.group(3), m.group(4)))
            continue
        raise ValueError(f"unparseable query line: {line!r}")
    return {
        "nodes": nodes,
        "edges": sorted(edges),
        "orders": sorted(orders),
        "identities": sorted(identities),
        "without_children": sorted(without_children),
        "without_fields": sorted(without_fields),
    }


def pattern_structure(pattern: CompiledPattern, included: Tuple[str, ...]) -> dict:
    """The structure parse_query should recover for a given variant."""
    labels = [l for l in pattern.labels
              if not pattern.node_programs[l].is_subtoken
              and (l in pattern.required_ids or l in included)]
    label_set = set(labels)
    nodes = {}
    without_children = []
    without_fields = []
    for label in labels:
        prog = pattern.node_programs[label]
        conds = []
        if prog.upos:
            conds.append("upos=" + "|".join(prog.upos))
        if prog.form is not None:
            conds.append("form=" + _value_expr(prog.form))
        if prog.lemma is not None:
            conds.append("lemma=" + _value_expr(prog.lemma))
        for k, v in prog.feats:
            conds.append(f'{k}="{v}"')
        nodes[label] = sorted(conds)
        for w in prog.without:
            if w.kind == "children":
                without_children.append((label, w.deprel))
            elif w.field_name.upper() == "FEATS" and "=" in w.value:
                k, v = w.value.split("=", 1)
                without_fields.append((label, k, v))
            else:
                without_fields.append((label, w.field_name.lower(), w.value))
    edges = [(parent, "|".join(deprels) if deprels else "", child)
             for child, parent, deprels in pattern.edges
             if child in label_set and parent in label_set]
    orders = [(left, label) for label, left in pattern.order_constraints
              if label in label_set and left in label_set]
    identities = [(label, fname.lower(), target, fname.lower())
                  for fname, label, target in pattern.identity_constraints
                  if label in label_set and target in label_set]
    return {
        "nodes": nodes,
        "edges": sorted(edges),
        "orders": sorted(orders),
        "identities": sorted(identities),
        "without_children": sorted(without_children),
        "without_fields": sorted(without_fields),
    }
