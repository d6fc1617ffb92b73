import copy
import random
from pathlib import Path

import pytest

from cxnforge.conllc import Cxn, CxnTokenId, NegativeConstraint, NodeConstraint, dump_yaml_entry, parse_conllc
from cxnforge.conllu import CxnMark, Sentence, Token, parse_conllu

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def listing1_text():
    return (FIXTURES / "listing1.conllc").read_text(encoding="utf-8")


@pytest.fixture
def listing2_text():
    return (FIXTURES / "listing2.conllu").read_text(encoding="utf-8")


@pytest.fixture
def cxn68(listing1_text):
    return parse_conllc(listing1_text)[0]


@pytest.fixture
def listing2(listing2_text):
    return parse_conllu(listing2_text)[0]


@pytest.fixture
def listing2_match():
    text = (FIXTURES / "listing2_match.conllu").read_text(encoding="utf-8")
    return parse_conllu(text)[0]


def generalized_68(cxn68: Cxn, cxn_id=900) -> Cxn:
    """Parent of cxn 68: D's UPOS relaxed to any, FEATS on A removed."""
    parent = copy.deepcopy(cxn68)
    parent.cxn_id = cxn_id
    parent.name = "V fuori che X"
    parent.function = "ref:D is found out"
    parent.vertical_links = []
    parent.horizontal_links = []
    parent.node("A").feats = []
    parent.node("D").upos = []
    return parent


def coarse_68(cxn68: Cxn, cxn_id=920) -> Cxn:
    """Grandparent: only the verb plus the fuori particle."""
    return Cxn(
        cxn_id=cxn_id,
        name="V fuori",
        function="something comes out",
        nodes=[
            NodeConstraint(id=CxnTokenId("A"), upos=["VERB"], head=None, deprel=["root"]),
            NodeConstraint(id=CxnTokenId("B"), lemma="fuori", head=CxnTokenId("A"),
                           deprel=["advmod"]),
        ],
    )


@pytest.fixture
def cxn900(cxn68):
    return generalized_68(cxn68)


@pytest.fixture
def cxn920(cxn68):
    return coarse_68(cxn68)


@pytest.fixture
def graph_dir(tmp_path, cxn68, cxn900, cxn920):
    """Directory with the 68/900/920 chain as yaml entries (no links declared)."""
    d = tmp_path / "gcxn"
    d.mkdir()
    for cxn in (cxn68, cxn900, cxn920):
        (d / f"{cxn.cxn_id}.yaml").write_text(dump_yaml_entry(cxn), encoding="utf-8")
    return d


def rename(sentence: Sentence, sent_id: str) -> Sentence:
    out = sentence.copy()
    out.metadata = [("sent_id", sent_id) if k == "sent_id" else (k, v)
                    for k, v in out.metadata]
    return out


@pytest.fixture
def small_corpus(listing2, listing2_match):
    """Three sentences; the two derived ones match cxn 68, the printed one does not."""
    return [
        rename(listing2_match, "m1"),
        rename(listing2, "orig"),
        rename(listing2_match, "m2"),
    ]


# --- randomized instances for matcher/oracle equivalence ---------------------

FORMS = ["salta", "fuori", "che", "era", "cane", "alto"]
LEMMAS = ["saltare", "fuori", "che", "essere", "cane", "alto"]
UPOS = ["VERB", "NOUN", "ADV", "ADJ", "SCONJ"]
DEPRELS = ["nsubj", "advmod", "mark", "csubj", "obj", "conj"]


def random_sentence(rng: random.Random, max_tokens=15) -> Sentence:
    n = rng.randint(1, max_tokens)
    order = list(range(1, n + 1))
    rng.shuffle(order)
    heads = {order[0]: 0}
    for pos, idx in enumerate(order[1:], start=1):
        heads[idx] = order[rng.randrange(pos)]
    tokens = []
    for i in range(1, n + 1):
        feats = []
        if rng.random() < 0.5:
            feats.append(("Number", rng.choice(["Sing", "Plur"])))
        tokens.append(Token(
            index=i,
            form=rng.choice(FORMS),
            lemma=rng.choice(LEMMAS),
            upos=rng.choice(UPOS),
            feats=feats,
            head=heads[i],
            deprel="root" if heads[i] == 0 else rng.choice(DEPRELS),
        ))
    return Sentence(rows=tokens, metadata=[("sent_id", f"rand-{rng.random():.9f}")])


def random_cxn(rng: random.Random, max_nodes=4) -> Cxn:
    n = rng.randint(1, max_nodes)
    letters = ["A", "B", "C", "D"][:n]
    nodes = []
    for i, letter in enumerate(letters):
        head = None if i == 0 else CxnTokenId(letters[rng.randrange(i)])
        node = NodeConstraint(
            id=CxnTokenId(letter),
            head=head,
            required=(i == 0) or rng.random() < 0.6,
        )
        if rng.random() < 0.5:
            node.lemma = ",".join(rng.sample(LEMMAS, rng.randint(1, 2)))
        if rng.random() < 0.5:
            node.upos = rng.sample(UPOS, rng.randint(1, 2))
        if rng.random() < 0.3:
            node.feats = [("Number", rng.choice(["Sing", "Plur"]))]
        if head is not None and rng.random() < 0.7:
            node.deprel = rng.sample(DEPRELS, rng.randint(1, 2))
        if rng.random() < 0.2:
            node.without.append(NegativeConstraint(kind="children",
                                                   deprel=rng.choice(DEPRELS)))
        if rng.random() < 0.15 and i > 0:
            node.adjacency = CxnTokenId(letters[rng.randrange(i)])
        if rng.random() < 0.1 and i > 0:
            node.identity.append(("FORM", CxnTokenId(letters[rng.randrange(i)])))
        nodes.append(node)
    return Cxn(cxn_id=rng.randint(1, 9999), name="random", nodes=nodes)
