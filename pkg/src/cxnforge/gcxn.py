"""The construction graph: yaml storage, consistency checks, vertical-link
inference by subsumption, and annotation propagation along parent links.

Vertical edges run parent -> child (general -> specific) and carry a token
correspondence (parent node label -> child node label) so that a child
annotation can be rewritten as a parent annotation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Set, Tuple

from .conllc import Cxn, NodeConstraint, load_yaml_entry, pattern_is_regex, pattern_literals
from .conllu import CxnMark, Sentence
from .diag import Diagnostic

Correspondence = Dict[str, str]  # parent node label -> child node label


@dataclass
class GraphDelta:
    added: List[Tuple[int, int]] = field(default_factory=list)
    removed: List[Tuple[int, int]] = field(default_factory=list)
    diagnostics: List[Diagnostic] = field(default_factory=list)


@dataclass
class GcxnGraph:
    entries: Dict[int, Cxn] = field(default_factory=dict)
    # (parent id, child id) -> correspondence, or None when declared but not derivable
    vertical_edges: Dict[Tuple[int, int], Optional[Correspondence]] = field(default_factory=dict)
    horizontal_edges: Set[Tuple[int, int]] = field(default_factory=set)

    def add_horizontal(self, a: int, b: int) -> None:
        self.horizontal_edges.add((min(a, b), max(a, b)))

    def parents(self, cxn_id: int) -> List[int]:
        return sorted(p for (p, c) in self.vertical_edges if c == cxn_id)

    def children(self, cxn_id: int) -> List[int]:
        return sorted(c for (p, c) in self.vertical_edges if p == cxn_id)

    def has_vertical_cycle(self) -> bool:
        return self._find_cycle() is not None

    def _find_cycle(self) -> Optional[List[int]]:
        adj: Dict[int, List[int]] = {}
        for p, c in self.vertical_edges:
            adj.setdefault(p, []).append(c)
        color: Dict[int, int] = {}

        def dfs(u, stack):
            color[u] = 1
            stack.append(u)
            for v in adj.get(u, []):
                if color.get(v, 0) == 1:
                    return stack[stack.index(v):]
                if color.get(v, 0) == 0:
                    found = dfs(v, stack)
                    if found:
                        return found
            stack.pop()
            color[u] = 2
            return None

        for u in list(adj):
            if color.get(u, 0) == 0:
                found = dfs(u, [])
                if found:
                    return found
        return None

    def ancestors(self, cxn_id: int) -> List[int]:
        """Transitive closure of parents, deterministic order."""
        out: List[int] = []
        seen = {cxn_id}
        frontier = [cxn_id]
        while frontier:
            nxt = []
            for c in frontier:
                for p in self.parents(c):
                    if p not in seen:
                        seen.add(p)
                        out.append(p)
                        nxt.append(p)
            frontier = nxt
        return out


def load_graph(directory) -> Tuple[GcxnGraph, List[Diagnostic]]:
    """Rebuild the graph from a directory of ``<cxn_id>.yaml`` entries."""
    graph = GcxnGraph()
    diags: List[Diagnostic] = []
    for path in sorted(Path(directory).glob("*.yaml")):
        cxn = load_yaml_entry(path.read_text(encoding="utf-8"))
        if cxn.cxn_id in graph.entries:
            diags.append(Diagnostic("duplicate-cxn", f"cxn {cxn.cxn_id} defined more than once",
                                    subject=str(path)))
            continue
        graph.entries[cxn.cxn_id] = cxn
    for cxn in graph.entries.values():
        for parent_id in cxn.vertical_links:
            if parent_id in graph.entries:
                corr = subsumes(graph.entries[parent_id], cxn)
                graph.vertical_edges[(parent_id, cxn.cxn_id)] = corr
        for sibling in cxn.horizontal_links:
            if sibling in graph.entries:
                graph.add_horizontal(cxn.cxn_id, sibling)
    return graph, diags


# --- subsumption -------------------------------------------------------------

def _pattern_implies(parent_raw: Optional[str], child_raw: Optional[str]) -> bool:
    """True when every value accepted by the child pattern is accepted by the parent."""
    if parent_raw is None:
        return True
    if child_raw is None:
        return False
    if pattern_is_regex(parent_raw) or pattern_is_regex(child_raw):
        # regex containment is undecidable in general; compare syntactically
        return parent_raw == child_raw
    return set(pattern_literals(child_raw)) <= set(pattern_literals(parent_raw))


def _set_implies(parent_vals: List[str], child_vals: List[str]) -> bool:
    if not parent_vals:
        return True
    if not child_vals:
        return False
    return set(child_vals) <= set(parent_vals)


def _node_implies(parent: NodeConstraint, child: NodeConstraint) -> bool:
    if parent.required and not child.required:
        return False
    if parent.id.is_subtoken != child.id.is_subtoken:
        return False
    if not _pattern_implies(parent.form, child.form):
        return False
    if not _pattern_implies(parent.lemma, child.lemma):
        return False
    if not _set_implies(parent.upos, child.upos):
        return False
    if not set(parent.feats) <= set(child.feats):
        return False
    if not set(parent.without) <= set(child.without):
        return False
    return True


def _mapping_structure_ok(parent: Cxn, child: Cxn, mapping: Correspondence) -> bool:
    for pn in parent.nodes:
        plabel = str(pn.id)
        if plabel not in mapping:
            continue
        cn = child.node(mapping[plabel])
        if pn.head is not None:
            phead = str(pn.head)
            if phead not in mapping:
                return False
            if cn.head is None or str(cn.head) != mapping[phead]:
                return False
            # child's relation set must be at least as narrow
            if not _set_implies(pn.deprel, cn.deprel):
                return False
        if pn.adjacency is not None:
            padj = str(pn.adjacency)
            if padj not in mapping:
                return False
            if cn.adjacency is None or str(cn.adjacency) != mapping[padj]:
                return False
        for fname, target in pn.identity:
            ptarget = str(target)
            if ptarget not in mapping:
                return False
            if not any(f.upper() == fname.upper() and str(t) == mapping[ptarget]
                       for f, t in cn.identity):
                return False
    return True


def subsumes(parent: Cxn, child: Cxn) -> Optional[Correspondence]:
    """Correspondence mapping if every parent constraint is implied by the child.

    Syntactic field-wise containment; required parent nodes must all map
    (injectively) onto child nodes, optional parent nodes map when possible.
    """
    parent_nodes = sorted(parent.nodes, key=lambda n: (not n.required, n.id.sort_key()))
    child_labels = [str(n.id) for n in child.nodes]

    compatible: Dict[str, List[str]] = {}
    for pn in parent_nodes:
        plabel = str(pn.id)
        # prefer the same-named child node so self-subsumption yields the identity map
        ordered = sorted(child_labels, key=lambda cl: (cl != plabel, cl))
        compatible[plabel] = [cl for cl in ordered if _node_implies(pn, child.node(cl))]
        if pn.required and not compatible[plabel]:
            return None

    best: Optional[Correspondence] = None

    def search(i: int, mapping: Correspondence) -> Optional[Correspondence]:
        if i == len(parent_nodes):
            return dict(mapping) if _mapping_structure_ok(parent, child, mapping) else None
        pn = parent_nodes[i]
        plabel = str(pn.id)
        used = set(mapping.values())
        for cl in compatible[plabel]:
            if cl in used:
                continue
            mapping[plabel] = cl
            found = search(i + 1, mapping)
            if found is not None:
                return found
            del mapping[plabel]
        if not pn.required:
            return search(i + 1, mapping)
        return None

    return search(0, {})


# --- consistency and link maintenance ----------------------------------------

def check_consistency(graph: GcxnGraph) -> List[Diagnostic]:
    diags: List[Diagnostic] = []
    for cxn in graph.entries.values():
        for parent_id in cxn.vertical_links:
            if parent_id not in graph.entries:
                diags.append(Diagnostic("dangling-vertical-link",
                                        f"cxn {cxn.cxn_id} declares missing parent {parent_id}",
                                        subject=str(cxn.cxn_id)))
        for sibling in cxn.horizontal_links:
            if sibling not in graph.entries:
                diags.append(Diagnostic("dangling-horizontal-link",
                                        f"cxn {cxn.cxn_id} declares missing sibling {sibling}",
                                        subject=str(cxn.cxn_id)))
            elif cxn.cxn_id not in graph.entries[sibling].horizontal_links:
                diags.append(Diagnostic("asymmetric-horizontal-link",
                                        f"cxn {cxn.cxn_id} lists sibling {sibling}, "
                                        f"but {sibling} does not list {cxn.cxn_id}",
                                        subject=str(cxn.cxn_id)))
    cycle = graph._find_cycle()
    if cycle is not None:
        diags.append(Diagnostic("vertical-cycle",
                                "vertical links form a cycle: " + " -> ".join(map(str, cycle))))
    for (parent_id, child_id), corr in graph.vertical_edges.items():
        if parent_id not in graph.entries or child_id not in graph.entries:
            diags.append(Diagnostic("dangling-edge",
                                    f"vertical edge ({parent_id}, {child_id}) has a missing endpoint"))
            continue
        derived = subsumes(graph.entries[parent_id], graph.entries[child_id])
        if derived is None:
            diags.append(Diagnostic("declared-not-derivable",
                                    f"vertical edge {parent_id} -> {child_id} is declared but "
                                    "not derivable by subsumption",
                                    subject=str(child_id)))
        elif corr is not None and not _valid_correspondence(
                graph.entries[parent_id], graph.entries[child_id], corr):
            diags.append(Diagnostic("bad-correspondence",
                                    f"vertical edge {parent_id} -> {child_id} carries an invalid "
                                    "token correspondence"))
    return diags


def _valid_correspondence(parent: Cxn, child: Cxn, corr: Correspondence) -> bool:
    child_labels = {str(n.id) for n in child.nodes}
    values = list(corr.values())
    if len(set(values)) != len(values):
        return False
    for pn in parent.nodes:
        plabel = str(pn.id)
        if pn.required and plabel not in corr:
            return False
        if plabel in corr and corr[plabel] not in child_labels:
            return False
    return _mapping_structure_ok(parent, child, corr)


def transitive_reduction(edges: Set[Tuple[int, int]]) -> Set[Tuple[int, int]]:
    """Remove every edge implied by a longer path (edges must form a DAG)."""
    adj: Dict[int, Set[int]] = {}
    for p, c in edges:
        adj.setdefault(p, set()).add(c)

    def reachable(src: int, dst: int, skip_edge: Tuple[int, int]) -> bool:
        stack = [src]
        seen = set()
        while stack:
            u = stack.pop()
            for v in adj.get(u, ()):
                if (u, v) == skip_edge:
                    continue
                if v == dst:
                    return True
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        return False

    return {(p, c) for p, c in edges if not reachable(p, c, (p, c))}


def update_vertical_links(graph: GcxnGraph, new_id: int) -> GraphDelta:
    """Place one entry in the hierarchy: derive edges by subsumption, then
    transitively reduce so only immediate parents remain."""
    if new_id not in graph.entries:
        raise KeyError(f"cxn {new_id} not in graph")
    new = graph.entries[new_id]
    delta = GraphDelta()

    for other_id in sorted(graph.entries):
        if other_id == new_id:
            continue
        other = graph.entries[other_id]
        down = subsumes(other, new)  # other is more general
        up = subsumes(new, other)  # new is more general
        if down is not None and up is not None:
            delta.diagnostics.append(Diagnostic(
                "equivalent-cxns",
                f"cxns {other_id} and {new_id} subsume each other; no edge added"))
            continue
        if down is not None and (other_id, new_id) not in graph.vertical_edges:
            graph.vertical_edges[(other_id, new_id)] = down
            delta.added.append((other_id, new_id))
        if up is not None and (new_id, other_id) not in graph.vertical_edges:
            graph.vertical_edges[(new_id, other_id)] = up
            delta.added.append((new_id, other_id))

    reduced = transitive_reduction(set(graph.vertical_edges))
    for edge in sorted(set(graph.vertical_edges) - reduced):
        del graph.vertical_edges[edge]
        delta.removed.append(edge)
        if edge in delta.added:
            delta.added.remove(edge)
    return delta


# --- annotation propagation ---------------------------------------------------

def propagate_annotations(graph: GcxnGraph, sentence: Sentence) -> Tuple[Sentence, List[Diagnostic]]:
    """Add ancestor marks for every marked construction, following the
    composed token correspondences up the vertical edges. Idempotent."""
    diags: List[Diagnostic] = []
    out = sentence.copy()

    # group existing marks by cxn id: child label -> token index
    groups: Dict[int, Dict[str, int]] = {}
    for token in out.tokens:
        for mark in token.cxn_marks():
            groups.setdefault(mark.cxn_id, {})[mark.token_label] = token.index

    for child_id, child_binding in sorted(groups.items()):
        if child_id not in graph.entries:
            diags.append(Diagnostic("unknown-cxn", f"marked cxn {child_id} not in graph",
                                    subject=str(child_id)))
            continue
        # BFS upward composing correspondences (ancestor label -> child label)
        composed: Dict[int, Correspondence] = {child_id: {}}
        for n in graph.entries[child_id].nodes:
            composed[child_id][str(n.id)] = str(n.id)
        frontier = [child_id]
        while frontier:
            nxt = []
            for mid in frontier:
                for parent_id in graph.parents(mid):
                    if parent_id in composed:
                        continue
                    corr = graph.vertical_edges.get((parent_id, mid))
                    if corr is None:
                        diags.append(Diagnostic(
                            "missing-correspondence",
                            f"edge {parent_id} -> {mid} has no token correspondence; "
                            f"ancestor {parent_id} skipped", subject=str(parent_id)))
                        continue
                    composed[parent_id] = {
                        plabel: composed[mid][clabel]
                        for plabel, clabel in corr.items()
                        if clabel in composed[mid]
                    }
                    nxt.append(parent_id)
            frontier = nxt
        del composed[child_id]
        for ancestor_id, corr in sorted(composed.items()):
            for plabel, clabel in corr.items():
                idx = child_binding.get(clabel)
                if idx is None:
                    continue
                out.token(idx).add_mark(CxnMark(ancestor_id, plabel))
    return out, diags


# --- export --------------------------------------------------------------------

def export_json(graph: GcxnGraph) -> str:
    data = {
        "nodes": [
            {"cxn_id": c.cxn_id, "name": c.name, "function": c.function}
            for c in sorted(graph.entries.values(), key=lambda c: c.cxn_id)
        ],
        "vertical": [
            {"parent": p, "child": c, "correspondence": corr}
            for (p, c), corr in sorted(graph.vertical_edges.items())
        ],
        "horizontal": [list(pair) for pair in sorted(graph.horizontal_edges)],
    }
    return json.dumps(data, ensure_ascii=False, indent=2)


def export_dot(graph: GcxnGraph) -> str:
    lines = ["digraph gcxn {"]
    for c in sorted(graph.entries.values(), key=lambda c: c.cxn_id):
        label = f"{c.cxn_id}\\n{c.name}" if c.name else str(c.cxn_id)
        lines.append(f'  n{c.cxn_id} [label="{label}"];')
    for p, c in sorted(graph.vertical_edges):
        lines.append(f"  n{p} -> n{c};")
    for a, b in sorted(graph.horizontal_edges):
        lines.append(f"  n{a} -> n{b} [dir=none, style=dashed];")
    lines.append("}")
    return "\n".join(lines) + "\n"
