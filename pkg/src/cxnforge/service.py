"""HTTP API for the reviewer workbench.

Read endpoints expose the construction graph, candidate queue and sentences;
the only mutation is the decision POST. The UI bundle, when built, is served
statically from the same process.
"""

from __future__ import annotations

from pathlib import Path
from typing import Dict, List, Literal, Optional

from fastapi import FastAPI, HTTPException, Query
from fastapi.responses import FileResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .conllc import serialize_cxn
from .conllu import Sentence, serialize_sentence, token_spans, reconstruct_text
from .gcxn import GcxnGraph, check_consistency
from .matcher import compile as compile_cxn
from .queryc import emit_queries
from .review import ReviewQueue, ReviewError, PENDING, ACCEPTED, REJECTED


class CxnSummary(BaseModel):
    cxn_id: int
    name: str
    function: str
    vertical_links: List[int]
    horizontal_links: List[int]
    missing_links: List[int]


class CxnDetail(CxnSummary):
    conll_c: str
    required_ids: List[str]
    optional_ids: List[str]
    queries: List[str]


class BoundToken(BaseModel):
    label: str
    index: int
    form: str
    lemma: str
    upos: str
    deprel: str
    head: int
    start: Optional[int] = None
    end: Optional[int] = None


class CandidateView(BaseModel):
    candidate_id: str
    cxn_id: int
    cxn_name: str
    function: str
    sent_id: str
    source: Optional[str]
    text: str
    status: str
    binding: Dict[str, int]
    tokens: List[BoundToken]


class CandidatePage(BaseModel):
    total: int
    page: int
    page_size: int
    items: List[CandidateView]


class DecisionRequest(BaseModel):
    verdict: Literal["accepted", "rejected"]
    reviewer: str
    note: Optional[str] = None
    expected_status: Optional[str] = None  # stale-snapshot guard


class DecisionResponse(BaseModel):
    candidate_id: str
    verdict: str
    reviewer: str
    timestamp: str
    note: Optional[str]


class StatsRow(BaseModel):
    cxn_id: int
    pending: int
    accepted: int
    rejected: int


def create_app(queue: ReviewQueue, graph: GcxnGraph, sentences: List[Sentence],
               ui_dir: Optional[str] = None) -> FastAPI:
    app = FastAPI(title="cxnforge review service")
    sentence_index: Dict[str, Sentence] = {}
    for s in sentences:
        sentence_index.setdefault(s.sent_id, s)

    def summary(cxn_id: int) -> CxnSummary:
        cxn = graph.entries[cxn_id]
        missing = [i for i in cxn.vertical_links + cxn.horizontal_links
                   if i not in graph.entries]
        return CxnSummary(
            cxn_id=cxn.cxn_id, name=cxn.name, function=cxn.function,
            vertical_links=cxn.vertical_links, horizontal_links=cxn.horizontal_links,
            missing_links=missing,
        )

    @app.get("/cxns", response_model=List[CxnSummary])
    def list_cxns():
        return [summary(i) for i in sorted(graph.entries)]

    @app.get("/cxns/{cxn_id}", response_model=CxnDetail)
    def cxn_detail(cxn_id: int):
        if cxn_id not in graph.entries:
            raise HTTPException(404, f"unknown cxn {cxn_id}")
        cxn = graph.entries[cxn_id]
        pattern = compile_cxn(cxn)
        qs = emit_queries(pattern)
        base = summary(cxn_id)
        return CxnDetail(
            **base.model_dump(),
            conll_c=serialize_cxn(cxn),
            required_ids=list(pattern.required_ids),
            optional_ids=list(pattern.optional_ids),
            queries=qs.queries,
        )

    def candidate_view(cand) -> CandidateView:
        sentence = cand.sentence()
        spans = {idx: (start, end) for idx, start, end in token_spans(sentence)}
        text = sentence.text or reconstruct_text(sentence)
        tokens = []
        for label, idx in sorted(cand.match.binding.items()):
            t = sentence.token(idx)
            start, end = spans.get(idx, (None, None))
            tokens.append(BoundToken(
                label=label, index=idx, form=t.form, lemma=t.lemma, upos=t.upos,
                deprel=t.deprel, head=t.head, start=start, end=end,
            ))
        cxn = graph.entries.get(cand.match.cxn_id)
        return CandidateView(
            candidate_id=cand.candidate_id,
            cxn_id=cand.match.cxn_id,
            cxn_name=cxn.name if cxn else "",
            function=cxn.function if cxn else "",
            sent_id=cand.match.sent_id,
            source=cand.match.source,
            text=text,
            status=cand.status,
            binding=cand.match.binding,
            tokens=tokens,
        )

    @app.get("/cxns/{cxn_id}/candidates", response_model=CandidatePage)
    def list_candidates(cxn_id: int,
                        status: Optional[str] = Query(default=None),
                        page: int = Query(default=1, ge=1),
                        page_size: int = Query(default=20, ge=1, le=200)):
        if cxn_id not in graph.entries:
            raise HTTPException(404, f"unknown cxn {cxn_id}")
        if status is not None and status not in (PENDING, ACCEPTED, REJECTED):
            raise HTTPException(422, f"unknown status {status!r}")
        cands = [c for c in queue.candidates.values() if c.match.cxn_id == cxn_id]
        if status is not None:
            cands = [c for c in cands if c.status == status]
        total = len(cands)
        start = (page - 1) * page_size
        items = [candidate_view(c) for c in cands[start:start + page_size]]
        return CandidatePage(total=total, page=page, page_size=page_size, items=items)

    @app.post("/candidates/{candidate_id}/decision", response_model=DecisionResponse)
    def post_decision(candidate_id: str, body: DecisionRequest):
        cand = queue.candidates.get(candidate_id)
        if cand is None:
            raise HTTPException(404, f"unknown candidate {candidate_id}")
        if body.expected_status is not None and body.expected_status != cand.status:
            raise HTTPException(
                409, f"candidate status is {cand.status!r}, client expected "
                     f"{body.expected_status!r}")
        try:
            decision = queue.decide(candidate_id, body.verdict, body.reviewer, body.note)
        except ReviewError as exc:
            raise HTTPException(422, str(exc))
        return DecisionResponse(**decision.to_dict())

    @app.get("/stats", response_model=List[StatsRow])
    def stats():
        return [
            StatsRow(cxn_id=cxn_id, **counts)
            for cxn_id, counts in sorted(queue.stats().items())
        ]

    @app.get("/sentences/{sent_id}", response_class=PlainTextResponse)
    def sentence_conllu(sent_id: str):
        if sent_id not in sentence_index:
            raise HTTPException(404, f"unknown sent_id {sent_id!r}")
        return serialize_sentence(sentence_index[sent_id]) + "\n"

    @app.get("/consistency")
    def consistency():
        return [d.to_dict() for d in check_consistency(graph)]

    if ui_dir and Path(ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
