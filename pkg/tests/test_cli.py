import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from cxnforge.cli import main
from cxnforge.conllu import parse_conllu, serialize_conllu

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def runner():
    return CliRunner()


def _write_corpus(tmp_path, sentences, name="corpus.conllu"):
    path = tmp_path / name
    path.write_text(serialize_conllu(sentences), encoding="utf-8")
    return path


def test_validate_listing1_ok(runner):
    result = runner.invoke(main, ["validate", str(FIXTURES / "listing1.conllc")])
    assert result.exit_code == 0, result.output
    assert result.stderr == ""


def test_validate_bad_conllc(runner, tmp_path, listing1_text):
    bad = tmp_path / "bad.conllc"
    bad.write_text(listing1_text.replace("advmod", "bogusrel"), encoding="utf-8")
    result = runner.invoke(main, ["validate", str(bad)])
    assert result.exit_code == 1
    assert "bogusrel" in result.stderr


def test_validate_missing_file_exit_2(runner):
    result = runner.invoke(main, ["validate", "no-such-file.conllc"])
    assert result.exit_code == 2
    assert result.stderr.startswith("error:")


def test_match_printed_listing_zero_matches(runner):
    result = runner.invoke(main, ["match", str(FIXTURES / "listing1.conllc"),
                                  str(FIXTURES / "listing2.conllu")])
    assert result.exit_code == 0
    assert result.stdout == ""
    # the near-miss explanation names the failing rules on the D token
    assert "upos" in result.stderr and "deprel" in result.stderr


def test_match_modified_listing_one_match(runner):
    result = runner.invoke(main, ["match", str(FIXTURES / "listing1.conllc"),
                                  str(FIXTURES / "listing2_match.conllu"),
                                  "--format", "json"])
    assert result.exit_code == 0
    rows = [json.loads(line) for line in result.stdout.splitlines()]
    assert len(rows) == 1
    assert rows[0]["binding"] == {"A": 9, "B": 10, "C": 11, "D": 14}


def test_match_output_file(runner, tmp_path):
    out = tmp_path / "matches.jsonl"
    result = runner.invoke(main, ["match", str(FIXTURES / "listing1.conllc"),
                                  str(FIXTURES / "listing2_match.conllu"),
                                  "--format", "json", "-o", str(out)])
    assert result.exit_code == 0
    assert len(out.read_text().splitlines()) == 1


def test_emit_queries_stdout(runner):
    result = runner.invoke(main, ["emit-queries", str(FIXTURES / "listing1.conllc"),
                                  "--stdout"])
    assert result.exit_code == 0
    assert "pattern {" in result.stdout
    assert "without {" in result.stdout


def test_emit_queries_writes_file(runner, tmp_path):
    result = runner.invoke(main, ["emit-queries", str(FIXTURES / "listing1.conllc"),
                                  "-o", str(tmp_path)])
    assert result.exit_code == 0
    assert (tmp_path / "cxn_68.grs.txt").exists()


def test_graph_check_reports_dangling_link(runner, graph_dir):
    # cxn 68 declares horizontal link 167 which is absent from the directory
    result = runner.invoke(main, ["graph", "check", str(graph_dir)])
    assert result.exit_code == 1
    assert "167" in result.stderr


def test_graph_export_json(runner, graph_dir):
    result = runner.invoke(main, ["graph", "export", str(graph_dir)])
    assert result.exit_code == 0
    data = json.loads(result.stdout)
    assert {n["cxn_id"] for n in data["nodes"]} == {68, 900, 920}


def test_graph_export_dot(runner, graph_dir):
    result = runner.invoke(main, ["graph", "export", str(graph_dir), "--dot"])
    assert result.exit_code == 0
    assert result.stdout.startswith("digraph")


def test_graph_insert_updates_links(runner, tmp_path, graph_dir, cxn68):
    from cxnforge.conllc import dump_yaml_entry
    import copy
    entry = tmp_path / "930.yaml"
    narrowed = copy.deepcopy(cxn68)
    narrowed.cxn_id = 930
    narrowed.name = "narrowed 68"
    narrowed.vertical_links = []
    narrowed.horizontal_links = []
    narrowed.node("A").feats.append(("Tense", "Pres"))
    entry.write_text(dump_yaml_entry(narrowed), encoding="utf-8")
    result = runner.invoke(main, ["graph", "insert", str(graph_dir), str(entry),
                                  "--format", "json"])
    assert result.exit_code == 0, result.stderr
    payload = json.loads(result.stdout)
    assert [68, 930] in payload["added"]
    saved = (Path(graph_dir) / "930.yaml").read_text()
    assert "- 68" in saved  # persisted vertical link


def test_propagate(runner, graph_dir, tmp_path, listing2_match):
    corpus = _write_corpus(tmp_path, [listing2_match])
    result = runner.invoke(main, ["propagate", str(graph_dir), str(corpus)])
    assert result.exit_code == 0, result.stderr
    sents = parse_conllu(result.stdout)
    marks = {m.cxn_id for t in sents[0].tokens for m in t.cxn_marks()}
    assert marks == set()  # no marks in the fixture, nothing to propagate


def test_split_ratios_and_determinism(runner, tmp_path, listing2, listing2_match):
    corpus = _write_corpus(tmp_path, [listing2, listing2_match])
    stem = tmp_path / "out"
    args = ["split", str(corpus), "--ratios", "1,0,0", "-o", str(stem),
            "--manifest", str(tmp_path / "m.json")]
    result = runner.invoke(main, args)
    assert result.exit_code == 0, result.stderr
    train = (tmp_path / "out-train.conllu").read_text()
    assert len(parse_conllu(train)) == 2
    assert (tmp_path / "out-dev.conllu").read_text() == ""
    manifest = json.loads((tmp_path / "m.json").read_text())
    assert set(manifest.values()) == {"train"}
    result2 = runner.invoke(main, args)
    assert result2.exit_code == 0
    assert (tmp_path / "out-train.conllu").read_text() == train


def test_split_bad_ratios(runner, tmp_path, listing2):
    corpus = _write_corpus(tmp_path, [listing2])
    result = runner.invoke(main, ["split", str(corpus), "--ratios", "0.5,0.5"])
    assert result.exit_code == 2


def test_review_pipeline(runner, tmp_path, small_corpus):
    corpus = _write_corpus(tmp_path, small_corpus)
    matches_path = tmp_path / "matches.jsonl"
    result = runner.invoke(main, ["match", str(FIXTURES / "listing1.conllc"),
                                  str(corpus), "--format", "json",
                                  "-o", str(matches_path)])
    assert result.exit_code == 0
    qdir = tmp_path / "queue"
    result = runner.invoke(main, ["review", "enqueue", str(qdir),
                                  str(matches_path), str(corpus)])
    assert result.exit_code == 0, result.stderr
    assert "new=2" in result.stdout

    from cxnforge.review import ReviewQueue, ACCEPTED
    queue = ReviewQueue(qdir)
    cid = next(c.candidate_id for c in queue.candidates.values()
               if c.match.sent_id == "m1")
    queue.decide(cid, ACCEPTED, reviewer="anna")

    result = runner.invoke(main, ["review", "export", str(qdir), str(corpus)])
    assert result.exit_code == 0, result.stderr
    sents = parse_conllu(result.stdout)
    marked = {s.sent_id for s in sents
              if any(m.cxn_id == 68 for t in s.tokens for m in t.cxn_marks())}
    # "orig" carries preexisting marks; only the accepted m1 gains new ones
    assert "m1" in marked and "m2" not in marked


def test_annotate_policy_skip_existing(runner, tmp_path, listing2_match, cxn68):
    from cxnforge.matcher import compile, match_sentence
    corpus = _write_corpus(tmp_path, [listing2_match])
    m = match_sentence(compile(cxn68), listing2_match)[0]
    matches_path = tmp_path / "matches.jsonl"
    matches_path.write_text(m.to_json() + "\n", encoding="utf-8")
    result = runner.invoke(main, ["annotate", str(corpus), str(matches_path),
                                  "--policy", "skip-existing"])
    assert result.exit_code == 0, result.stderr
    sents = parse_conllu(result.stdout)
    from cxnforge.conllu import CxnMark
    assert sents[0].token(9).has_mark(CxnMark(68, "A"))


def test_format_default_from_config(runner, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    (tmp_path / "cxnforge.toml").write_text('[defaults]\nformat = "json"\n')
    bad = tmp_path / "bad.conllc"
    bad.write_text("# cxn-id = 5\n# cxn-name = x\n# function = f\n"
                   "A\t_\t_\tVERB\t_\t0\troot\t1\t_\t_\t_\t_\t_\n"
                   "B\t_\t_\tBOGUS\t_\tA\tnsubj\t1\t_\t_\t_\t_\t_\n",
                   encoding="utf-8")
    result = runner.invoke(main, ["validate", str(bad)])
    assert result.exit_code == 1
    diag = json.loads(result.stderr.splitlines()[0])
    assert diag["rule"]
