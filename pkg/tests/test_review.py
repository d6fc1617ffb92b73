import pytest

from cxnforge.conllu import CxnMark
from cxnforge.corpus import apply_matches
from cxnforge.matcher import compile, match_corpus
from cxnforge.review import (
    ACCEPTED, PENDING, REJECTED, ReviewError, ReviewQueue, candidate_id_for,
    reservoir_sample,
)


@pytest.fixture
def queue(tmp_path):
    return ReviewQueue(tmp_path / "queue")


@pytest.fixture
def matches(cxn68, small_corpus):
    return list(match_corpus(compile(cxn68), small_corpus))


def test_candidate_id_stable(matches):
    m = matches[0]
    assert candidate_id_for(m) == candidate_id_for(m)
    assert len(candidate_id_for(m)) == 64


def test_enqueue_creates_pending(queue, matches, small_corpus):
    delta = queue.enqueue(matches[:1], small_corpus)
    assert delta.new == 1
    assert len(queue.by_status(PENDING)) == 1


def test_enqueue_two_of_three_sentences(queue, matches, small_corpus):
    assert len(matches) == 2  # m1 and m2 match, the printed listing2 does not
    delta = queue.enqueue(matches, small_corpus)
    assert delta.new == 2
    assert {c.match.sent_id for c in queue.by_status(PENDING)} == {"m1", "m2"}


def test_enqueue_idempotent(queue, matches, small_corpus):
    queue.enqueue(matches, small_corpus)
    delta = queue.enqueue(matches, small_corpus)
    assert delta.new == 0 and delta.existing == len(matches)


def test_reenqueue_keeps_decision(queue, matches, small_corpus):
    queue.enqueue(matches, small_corpus)
    cid = candidate_id_for(matches[0])
    queue.decide(cid, ACCEPTED, reviewer="anna")
    queue.enqueue(matches, small_corpus)
    assert queue.candidates[cid].status == ACCEPTED


def test_enqueue_unknown_sent_id(queue, matches):
    delta = queue.enqueue(matches, [])
    assert delta.new == 0
    assert all(d.rule == "unknown-sent-id" for d in delta.diagnostics)


def test_decide_unknown_candidate(queue):
    with pytest.raises(ReviewError):
        queue.decide("deadbeef", ACCEPTED, reviewer="anna")


def test_decide_bad_verdict(queue, matches, small_corpus):
    queue.enqueue(matches, small_corpus)
    with pytest.raises(ReviewError):
        queue.decide(candidate_id_for(matches[0]), "maybe", reviewer="anna")


def test_reversal_keeps_both_log_entries(queue, matches, small_corpus):
    queue.enqueue(matches, small_corpus)
    cid = candidate_id_for(matches[0])
    queue.decide(cid, ACCEPTED, reviewer="anna")
    queue.decide(cid, REJECTED, reviewer="anna", note="second thoughts")
    assert queue.candidates[cid].status == REJECTED
    assert len([d for d in queue.decisions if d.candidate_id == cid]) == 2


def test_replay_reconstructs_state(tmp_path, matches, small_corpus):
    q1 = ReviewQueue(tmp_path / "q")
    q1.enqueue(matches, small_corpus)
    cid0 = candidate_id_for(matches[0])
    cid1 = candidate_id_for(matches[1])
    q1.decide(cid0, ACCEPTED, reviewer="anna")
    q1.decide(cid1, REJECTED, reviewer="bruno")
    q1.decide(cid1, ACCEPTED, reviewer="anna")

    q2 = ReviewQueue(tmp_path / "q")  # fresh load replays the log
    assert {cid: c.status for cid, c in q2.candidates.items()} == \
           {cid: c.status for cid, c in q1.candidates.items()}


def test_rejected_excluded_from_export(queue, matches, small_corpus):
    queue.enqueue(matches, small_corpus)
    queue.decide(candidate_id_for(matches[0]), REJECTED, reviewer="anna")
    queue.decide(candidate_id_for(matches[1]), ACCEPTED, reviewer="anna")
    accepted = queue.accepted_matches()
    assert [m.sent_id for m in accepted] == [matches[1].sent_id]
    apply_matches(small_corpus, accepted)
    marked = {s.sent_id for s in small_corpus
              if any(m.cxn_id == 68 for t in s.tokens for m in t.cxn_marks())}
    assert matches[1].sent_id in marked
    assert matches[0].sent_id not in marked


def test_stats(queue, matches, small_corpus):
    queue.enqueue(matches, small_corpus)
    queue.decide(candidate_id_for(matches[0]), ACCEPTED, reviewer="anna")
    assert queue.stats() == {68: {PENDING: 1, ACCEPTED: 1, REJECTED: 0}}


def test_reservoir_sample_deterministic(matches):
    many = matches * 10
    s1 = reservoir_sample(many, 3, seed=11)
    s2 = reservoir_sample(many, 3, seed=11)
    assert [m.binding for m in s1] == [m.binding for m in s2]
    assert len(s1) == 3
