"""Command-line entry point wiring all modules; these are the commands CI runs.

Exit codes: 0 success, 1 diagnostics found, 2 usage or IO error. Diagnostics
go to stderr; data goes to stdout or ``-o``.
"""

from __future__ import annotations

import json
import sys
try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib
from pathlib import Path
from typing import List, Optional

import click

from . import conllc, conllu, corpus as corpus_mod, gcxn, matcher, queryc, review as review_mod
from .diag import Diagnostic


def _fail(message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(2)


def _emit_diags(diags: List[Diagnostic], fmt: str) -> None:
    for d in diags:
        if fmt == "json":
            click.echo(json.dumps(d.to_dict(), ensure_ascii=False), err=True)
        else:
            click.echo(str(d), err=True)


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        _fail(str(exc))
        raise  # unreachable


def _write_out(data: str, out: Optional[str]) -> None:
    if out and out != "-":
        Path(out).write_text(data, encoding="utf-8")
    else:
        click.echo(data, nl=False)


def _load_corpus(path: str) -> List[conllu.Sentence]:
    try:
        return conllu.parse_conllu(_read(path))
    except conllu.ConlluError as exc:
        _fail(f"{path}: {exc}")
        raise


def _load_cxns(path: str) -> List[conllc.Cxn]:
    """A conll-c file, a yaml entry, or a directory of yaml entries."""
    p = Path(path)
    try:
        if p.is_dir():
            return [conllc.load_yaml_entry(f.read_text(encoding="utf-8"))
                    for f in sorted(p.glob("*.yaml"))]
        text = _read(path)
        if p.suffix in (".yaml", ".yml"):
            return [conllc.load_yaml_entry(text)]
        return conllc.parse_conllc(text)
    except conllc.ConllcError as exc:
        _fail(f"{path}: {exc}")
        raise


def _load_graph(path: str) -> gcxn.GcxnGraph:
    graph, diags = gcxn.load_graph(path)
    _emit_diags(diags, "text")
    return graph


def _default_format() -> str:
    cfg = Path("cxnforge.toml")
    if cfg.exists():
        try:
            data = tomllib.loads(cfg.read_text(encoding="utf-8"))
            fmt = data.get("defaults", {}).get("format")
            if fmt in ("json", "text"):
                return fmt
        except (tomllib.TOMLDecodeError, OSError):
            pass
    return "text"


format_option = click.option("--format", "fmt", type=click.Choice(["json", "text"]),
                             default=None, help="output format (default from cxnforge.toml or text)")


@click.group()
def main():
    """Constructicon toolchain: conll-c parsing, matching, graph and review."""


@main.command()
@click.argument("files", nargs=-1, required=True)
@format_option
def validate(files, fmt):
    """Validate conll-c / yaml / conll-u files; exit 1 if diagnostics are found."""
    fmt = fmt or _default_format()
    diags: List[Diagnostic] = []
    for path in files:
        suffix = Path(path).suffix
        if suffix == ".conllu":
            for s in _load_corpus(path):
                diags.extend(s.diagnostics)
        else:
            for cxn in _load_cxns(path):
                diags.extend(cxn.diagnostics)
                diags.extend(conllc.validate_cxn(cxn))
    _emit_diags(diags, fmt)
    sys.exit(1 if diags else 0)


@main.command()
@click.argument("cxn_path")
@click.argument("corpus_path")
@click.option("-o", "--output", default=None)
@click.option("--jobs", default=1, show_default=True, help="sentence-level parallelism")
@format_option
def match(cxn_path, corpus_path, output, jobs, fmt):
    """Enumerate constructs of each cxn in the corpus (line-delimited JSON)."""
    fmt = fmt or _default_format()
    cxns = _load_cxns(cxn_path)
    sentences = _load_corpus(corpus_path)
    lines = []
    diags: List[Diagnostic] = []
    for cxn in cxns:
        try:
            pattern = matcher.compile(cxn)
        except matcher.CompileError as exc:
            _fail(str(exc))
            return
        matches = list(matcher.match_corpus(pattern, sentences))
        for m in matches:
            lines.append(m.to_json() if fmt == "json" else
                         f"cxn {m.cxn_id} sent {m.sent_id}: {m.binding_key()}")
        # explain near-misses: sentences already marked for this cxn that fail strictly
        for s in sentences:
            binding = {}
            for t in s.tokens:
                for mark in t.cxn_marks():
                    if mark.cxn_id == cxn.cxn_id:
                        binding[mark.token_label] = t.index
            if binding and not any(m.sent_id == s.sent_id for m in matches):
                for fail in matcher.check_binding(pattern, s, binding):
                    diags.append(Diagnostic(fail.rule,
                                            f"sentence {s.sent_id!r}: {fail.message}",
                                            subject=fail.subject))
    _emit_diags(diags, fmt)
    _write_out("\n".join(lines) + ("\n" if lines else ""), output)
    sys.exit(0)


@main.command("emit-queries")
@click.argument("cxn_path")
@click.option("--stdout", "to_stdout", is_flag=True, help="print query text instead of writing files")
@click.option("-o", "--output-dir", default=".", show_default=True)
@format_option
def emit_queries_cmd(cxn_path, to_stdout, output_dir, fmt):
    """Translate cxns into grew-style query files (cxn_<id>.grs.txt)."""
    fmt = fmt or _default_format()
    any_diag = False
    for cxn in _load_cxns(cxn_path):
        pattern = matcher.compile(cxn)
        qs = queryc.emit_queries(pattern)
        _emit_diags(qs.diagnostics, fmt)
        any_diag = any_diag or bool(qs.diagnostics)
        text = "\n".join(qs.queries)
        if to_stdout:
            click.echo(text, nl=False)
        else:
            out = Path(output_dir) / f"cxn_{cxn.cxn_id}.grs.txt"
            out.write_text(text, encoding="utf-8")
            click.echo(f"wrote {out}", err=True)
    sys.exit(1 if any_diag else 0)


@main.group()
def graph():
    """Construction-graph maintenance."""


@graph.command("check")
@click.argument("graph_dir")
@format_option
def graph_check(graph_dir, fmt):
    """Check graph consistency (dangling links, cycles, correspondences)."""
    fmt = fmt or _default_format()
    g = _load_graph(graph_dir)
    diags = gcxn.check_consistency(g)
    _emit_diags(diags, fmt)
    sys.exit(1 if diags else 0)


@graph.command("insert")
@click.argument("graph_dir")
@click.argument("entry")
@format_option
def graph_insert(graph_dir, entry, fmt):
    """Add a yaml entry to the graph directory and update vertical links."""
    fmt = fmt or _default_format()
    cxn = conllc.load_yaml_entry(_read(entry))
    target = Path(graph_dir) / f"{cxn.cxn_id}.yaml"
    target.write_text(conllc.dump_yaml_entry(cxn), encoding="utf-8")
    g = _load_graph(graph_dir)
    delta = gcxn.update_vertical_links(g, cxn.cxn_id)
    _emit_diags(delta.diagnostics, fmt)
    payload = {"added": delta.added, "removed": delta.removed}
    if fmt == "json":
        click.echo(json.dumps(payload))
    else:
        for p, c in delta.added:
            click.echo(f"added vertical edge {p} -> {c}")
        for p, c in delta.removed:
            click.echo(f"removed redundant edge {p} -> {c}")
    # persist updated links on the inserted entry
    cxn.vertical_links = g.parents(cxn.cxn_id)
    target.write_text(conllc.dump_yaml_entry(cxn), encoding="utf-8")
    sys.exit(1 if delta.diagnostics else 0)


@graph.command("export")
@click.argument("graph_dir")
@click.option("--dot", "as_dot", is_flag=True, help="emit DOT instead of JSON")
@click.option("-o", "--output", default=None)
def graph_export(graph_dir, as_dot, output):
    """Dump the graph as JSON adjacency (or DOT with --dot)."""
    g = _load_graph(graph_dir)
    _write_out(gcxn.export_dot(g) if as_dot else gcxn.export_json(g) + "\n", output)
    sys.exit(0)


@main.command()
@click.argument("graph_dir")
@click.argument("corpus_path")
@click.option("-o", "--output", default=None)
@format_option
def propagate(graph_dir, corpus_path, output, fmt):
    """Add ancestor-cxn marks along vertical links for every annotated sentence."""
    fmt = fmt or _default_format()
    g = _load_graph(graph_dir)
    sentences = _load_corpus(corpus_path)
    out_sentences = []
    diags: List[Diagnostic] = []
    for s in sentences:
        new_s, ds = gcxn.propagate_annotations(g, s)
        out_sentences.append(new_s)
        diags.extend(ds)
    _emit_diags(diags, fmt)
    _write_out(conllu.serialize_conllu(out_sentences), output)
    sys.exit(1 if diags else 0)


@main.command()
@click.argument("corpus_path")
@click.argument("matches_path")
@click.option("--policy", type=click.Choice(corpus_mod.OVERWRITE_POLICIES),
              default="merge", show_default=True)
@click.option("-o", "--output", default=None)
@format_option
def annotate(corpus_path, matches_path, policy, output, fmt):
    """Apply accepted matches (line-delimited JSON) to a corpus as CXN marks."""
    fmt = fmt or _default_format()
    sentences = _load_corpus(corpus_path)
    matches = [matcher.Match.from_json(line)
               for line in _read(matches_path).splitlines() if line.strip()]
    try:
        report = corpus_mod.apply_matches(sentences, matches, overwrite_policy=policy)
    except corpus_mod.CorpusError as exc:
        _fail(str(exc))
        return
    click.echo(json.dumps(report.to_dict()) if fmt == "json"
               else f"added={report.added} skipped={report.skipped}", err=True)
    _write_out(conllu.serialize_conllu(sentences), output)
    sys.exit(0)


@main.command()
@click.argument("corpus_path")
@click.option("--ratios", default="0.8,0.1,0.1", show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--key", default="source", show_default=True)
@click.option("--manifest", "manifest_path", default=None, help="write sent_id -> split JSON manifest")
@click.option("-o", "--stem", default=None, help="output stem (default: corpus path without extension)")
def split(corpus_path, ratios, seed, key, manifest_path, stem):
    """Split a corpus into train/dev/test files, grouping by the source key."""
    try:
        parts = tuple(float(x) for x in ratios.split(","))
        if len(parts) != 3:
            raise ValueError
        spec = corpus_mod.SplitSpec(ratios=parts, key=key, seed=seed)
    except (ValueError, corpus_mod.CorpusError) as exc:
        _fail(f"bad --ratios: {exc}")
        return
    sentences = _load_corpus(corpus_path)
    result = corpus_mod.split_corpus(sentences, spec)
    stem = stem or str(Path(corpus_path).with_suffix(""))
    for name, sents in result.parts().items():
        path = Path(f"{stem}-{name}.conllu")
        path.write_text(conllu.serialize_conllu(sents), encoding="utf-8")
        click.echo(f"{path}: {len(sents)} sentences", err=True)
    if manifest_path:
        Path(manifest_path).write_text(json.dumps(result.manifest, indent=2), encoding="utf-8")
    sys.exit(0)


@main.group("review")
def review_group():
    """Candidate review queue."""


@review_group.command("enqueue")
@click.argument("queue_dir")
@click.argument("matches_path")
@click.argument("corpus_path")
@click.option("--sample", "sample_n", type=int, default=None,
              help="review only a deterministic sample of N matches")
@click.option("--seed", default=0, show_default=True)
@format_option
def review_enqueue(queue_dir, matches_path, corpus_path, sample_n, seed, fmt):
    """Persist matcher output as pending candidates (idempotent)."""
    fmt = fmt or _default_format()
    queue = review_mod.ReviewQueue(queue_dir)
    matches = [matcher.Match.from_json(line)
               for line in _read(matches_path).splitlines() if line.strip()]
    if sample_n is not None:
        matches = review_mod.reservoir_sample(matches, sample_n, seed)
    delta = queue.enqueue(matches, _load_corpus(corpus_path))
    _emit_diags(delta.diagnostics, fmt)
    click.echo(json.dumps({"new": delta.new, "existing": delta.existing}) if fmt == "json"
               else f"new={delta.new} existing={delta.existing}")
    sys.exit(1 if delta.diagnostics else 0)


@review_group.command("serve")
@click.argument("queue_dir")
@click.argument("graph_dir")
@click.argument("corpus_path")
@click.option("--bind", default="127.0.0.1:8000", show_default=True)
@click.option("--ui", "ui_dir", default=None, help="directory with the built UI bundle")
def review_serve(queue_dir, graph_dir, corpus_path, bind, ui_dir):
    """Run the review HTTP service."""
    import uvicorn

    from .service import create_app

    queue = review_mod.ReviewQueue(queue_dir)
    g = _load_graph(graph_dir)
    sentences = _load_corpus(corpus_path)
    host, _, port = bind.partition(":")
    app = create_app(queue, g, sentences, ui_dir=ui_dir)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8000))


@review_group.command("export")
@click.argument("queue_dir")
@click.argument("corpus_path")
@click.option("--policy", type=click.Choice(corpus_mod.OVERWRITE_POLICIES),
              default="merge", show_default=True)
@click.option("-o", "--output", default=None)
def review_export(queue_dir, corpus_path, policy, output):
    """Annotate the corpus with the accepted candidates only."""
    queue = review_mod.ReviewQueue(queue_dir)
    sentences = _load_corpus(corpus_path)
    try:
        report = corpus_mod.apply_matches(sentences, queue.accepted_matches(),
                                          overwrite_policy=policy)
    except corpus_mod.CorpusError as exc:
        _fail(str(exc))
        return
    click.echo(json.dumps(report.to_dict()), err=True)
    _write_out(conllu.serialize_conllu(sentences), output)
    sys.exit(0)


if __name__ == "__main__":
    main()
