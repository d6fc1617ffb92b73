import random

import pytest
from hypothesis import given, strategies as st

from cxnforge.conllu import (
    ConlluError, CxnMark, Sentence, Token, linear_left_neighbor,
    parse_conllu, serialize_conllu, token_spans,
)


def test_parse_listing2(listing2):
    assert len(listing2.tokens) == 17
    assert listing2.sent_id == "2_Paisa_FP06072024"
    assert listing2.source.startswith("http://hdl.handle.net")
    assert listing2.token(9).lemma == "saltare"
    assert CxnMark(68, "A") in listing2.token(9).cxn_marks()
    assert CxnMark(345, "B") in listing2.token(2).cxn_marks()
    assert CxnMark(68, "D") in listing2.token(14).cxn_marks()
    assert listing2.is_tree_valid()
    assert listing2.diagnostics == []


def test_roundtrip_listing2(listing2_text):
    sentences = parse_conllu(listing2_text)
    assert serialize_conllu(sentences) == listing2_text


def test_empty_input():
    assert parse_conllu("") == []
    assert serialize_conllu([]) == ""


def test_single_token_sentence():
    text = "1\tciao\tciao\tINTJ\t_\t_\t0\troot\t_\t_\n"
    sentences = parse_conllu(text)
    assert len(sentences) == 1
    s = sentences[0]
    assert s.is_tree_valid()
    assert s.token(1).cxn_marks() == []


def test_malformed_line_reports_line_number():
    with pytest.raises(ConlluError) as exc:
        parse_conllu("1\tciao\tciao\n")
    assert "line 1" in str(exc.value)


def test_duplicate_index_is_error():
    text = ("1\ta\ta\tX\t_\t_\t0\troot\t_\t_\n"
            "1\tb\tb\tX\t_\t_\t1\tdep\t_\t_\n")
    with pytest.raises(ConlluError):
        parse_conllu(text)


def test_dangling_head_is_diagnostic_not_error():
    text = ("1\ta\ta\tX\t_\t_\t0\troot\t_\t_\n"
            "2\tb\tb\tX\t_\t_\t9\tdep\t_\t_\n")
    sentences = parse_conllu(text)
    assert len(sentences) == 1
    assert not sentences[0].is_tree_valid()
    assert any(d.rule == "dangling-head" for d in sentences[0].diagnostics)


def test_unparseable_cxn_mark_is_diagnostic():
    text = "1\ta\ta\tX\t_\t_\t0\troot\t_\tCXN=banana\n"
    sentences = parse_conllu(text)
    assert any(d.rule == "bad-cxn-mark" for d in sentences[0].diagnostics)
    assert sentences[0].token(1).cxn_marks() == []


def test_multiword_ranges_preserved_opaque():
    text = ("1-2\tdel\t_\t_\t_\t_\t_\t_\t_\t_\n"
            "1\tdi\tdi\tADP\t_\t_\t2\tcase\t_\t_\n"
            "2\til\til\tDET\t_\t_\t0\troot\t_\t_\n")
    sentences = parse_conllu(text)
    assert len(sentences[0].tokens) == 2
    assert serialize_conllu(sentences) == text


def test_two_cxn_marks_keep_insertion_order():
    s = parse_conllu("1\tciao\tciao\tINTJ\t_\t_\t0\troot\t_\t_\n")[0]
    s.token(1).add_mark(CxnMark(345, "A"))
    s.token(1).add_mark(CxnMark(68, "A"))
    out = serialize_conllu([s])
    assert "CXN=345:A|CXN=68:A" in out
    marks = parse_conllu(out)[0].token(1).cxn_marks()
    assert marks == [CxnMark(345, "A"), CxnMark(68, "A")]


def test_feats_serialized_sorted_case_insensitively():
    t = Token(index=1, feats=[("number", "Sing"), ("Aspect", "Perf")], head=0, deprel="root")
    assert t.feats_str() == "Aspect=Perf|number=Sing"


def test_linear_left_neighbor(listing2):
    assert linear_left_neighbor(listing2, 10) == 9
    assert linear_left_neighbor(listing2, 1) is None
    assert linear_left_neighbor(listing2, 17) == 16
    with pytest.raises(IndexError):
        linear_left_neighbor(listing2, 99)


def test_token_spans_from_text(listing2):
    spans = {i: (a, b) for i, a, b in token_spans(listing2)}
    text = listing2.text
    assert text[slice(*spans[9])] == "salta"
    assert text[slice(*spans[14])] == "Chris"
    assert text[slice(*spans[17])] == "!"


def test_token_spans_reconstructed():
    s = parse_conllu("1\tciao\tciao\tINTJ\t_\t_\t0\troot\t_\tSpaceAfter=No\n"
                     "2\t!\t!\tPUNCT\t_\t_\t1\tpunct\t_\t_\n")[0]
    assert token_spans(s) == [(1, 0, 4), (2, 4, 5)]


@given(st.integers(min_value=0, max_value=10 ** 6))
def test_tree_validity_matches_reachability_oracle(seed):
    rng = random.Random(seed)
    n = rng.randint(1, 8)
    tokens = [Token(index=i, form="x", lemma="x", upos="X",
                    head=rng.choice([h for h in range(0, n + 1) if h != i]),
                    deprel="dep")
              for i in range(1, n + 1)]
    s = Sentence(rows=tokens)

    # independent oracle: exactly one root and every token reaches it
    heads = {t.index: t.head for t in tokens}
    roots = [i for i, h in heads.items() if h == 0]
    ok = len(roots) == 1
    if ok:
        for start in heads:
            seen = set()
            cur = start
            while cur != 0 and cur not in seen:
                seen.add(cur)
                cur = heads.get(cur, -1)
                if cur == -1:
                    ok = False
                    break
            if cur != 0:
                ok = False
    assert s.is_tree_valid() == ok
