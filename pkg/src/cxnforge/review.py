"""Candidate review queue: persist matcher output, record accept/reject
decisions, and gate annotation export on acceptance.

Persistence is two plain line-delimited JSON files in the queue directory:
``candidates.jsonl`` (one snapshot per candidate, insertion order) and
``decisions.jsonl`` (append-only audit log; latest decision wins).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, Iterable, List, Optional

from .conllu import Sentence, parse_conllu, serialize_sentence
from .diag import Diagnostic
from .matcher import Match

PENDING = "pending"
ACCEPTED = "accepted"
REJECTED = "rejected"
VERDICTS = (ACCEPTED, REJECTED)


class ReviewError(Exception):
    pass


def candidate_id_for(match: Match) -> str:
    """Stable id: sha256 of ``cxn_id|sent_id|A=9,B=10,...`` (labels sorted)."""
    canonical = f"{match.cxn_id}|{match.sent_id}|{match.binding_key()}"
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


@dataclass
class Candidate:
    candidate_id: str
    match: Match
    sentence_conllu: str  # snapshot of the sentence at enqueue time
    status: str = PENDING

    def sentence(self) -> Sentence:
        return parse_conllu(self.sentence_conllu + "\n")[0]

    def to_dict(self) -> dict:
        return {
            "candidate_id": self.candidate_id,
            "cxn_id": self.match.cxn_id,
            "sent_id": self.match.sent_id,
            "source": self.match.source,
            "binding": self.match.binding,
            "sentence_conllu": self.sentence_conllu,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Candidate":
        return cls(
            candidate_id=data["candidate_id"],
            match=Match(
                cxn_id=int(data["cxn_id"]),
                sent_id=data["sent_id"],
                source=data.get("source"),
                binding={k: int(v) for k, v in data["binding"].items()},
            ),
            sentence_conllu=data["sentence_conllu"],
        )


@dataclass
class Decision:
    candidate_id: str
    verdict: str
    reviewer: str
    timestamp: str
    note: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "candidate_id": self.candidate_id,
            "verdict": self.verdict,
            "reviewer": self.reviewer,
            "timestamp": self.timestamp,
            "note": self.note,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Decision":
        return cls(
            candidate_id=data["candidate_id"],
            verdict=data["verdict"],
            reviewer=data["reviewer"],
            timestamp=data["timestamp"],
            note=data.get("note"),
        )


@dataclass
class EnqueueDelta:
    new: int = 0
    existing: int = 0
    diagnostics: List[Diagnostic] = field(default_factory=list)


class ReviewQueue:
    """File-backed candidate queue. Single writer; decisions are serialized
    appends to the log."""

    def __init__(self, directory):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.candidates_path = self.directory / "candidates.jsonl"
        self.decisions_path = self.directory / "decisions.jsonl"
        self.candidates: Dict[str, Candidate] = {}
        self.decisions: List[Decision] = []
        self._load()

    def _load(self) -> None:
        if self.candidates_path.exists():
            for line in self.candidates_path.read_text(encoding="utf-8").splitlines():
                if line.strip():
                    cand = Candidate.from_dict(json.loads(line))
                    self.candidates[cand.candidate_id] = cand
        if self.decisions_path.exists():
            for line in self.decisions_path.read_text(encoding="utf-8").splitlines():
                if line.strip():
                    self.decisions.append(Decision.from_dict(json.loads(line)))
        self._replay()

    def _replay(self) -> None:
        for cand in self.candidates.values():
            cand.status = PENDING
        for decision in self.decisions:
            cand = self.candidates.get(decision.candidate_id)
            if cand is not None:
                cand.status = decision.verdict

    def enqueue(self, matches: Iterable[Match], sentences: List[Sentence]) -> EnqueueDelta:
        """Create candidates for unseen matches; decided candidates keep their status."""
        by_id: Dict[str, Sentence] = {}
        for s in sentences:
            by_id.setdefault(s.sent_id, s)
        delta = EnqueueDelta()
        new_lines = []
        for match in matches:
            if match.sent_id not in by_id:
                delta.diagnostics.append(Diagnostic(
                    "unknown-sent-id", f"match references sent_id {match.sent_id!r} not in corpus",
                    subject=match.sent_id))
                continue
            cid = candidate_id_for(match)
            if cid in self.candidates:
                delta.existing += 1
                continue
            cand = Candidate(
                candidate_id=cid,
                match=match,
                sentence_conllu=serialize_sentence(by_id[match.sent_id]),
            )
            self.candidates[cid] = cand
            new_lines.append(json.dumps(cand.to_dict(), ensure_ascii=False))
            delta.new += 1
        if new_lines:
            with self.candidates_path.open("a", encoding="utf-8") as fh:
                for line in new_lines:
                    fh.write(line + "\n")
        return delta

    def decide(self, candidate_id: str, verdict: str, reviewer: str,
               note: Optional[str] = None) -> Decision:
        if candidate_id not in self.candidates:
            raise ReviewError(f"unknown candidate {candidate_id!r}")
        if verdict not in VERDICTS:
            raise ReviewError(f"verdict must be one of {VERDICTS}, got {verdict!r}")
        decision = Decision(
            candidate_id=candidate_id,
            verdict=verdict,
            reviewer=reviewer,
            timestamp=datetime.now(timezone.utc).isoformat(),
            note=note,
        )
        self.decisions.append(decision)
        with self.decisions_path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(decision.to_dict(), ensure_ascii=False) + "\n")
        self.candidates[candidate_id].status = verdict
        return decision

    def by_status(self, status: str, cxn_id: Optional[int] = None) -> List[Candidate]:
        out = [c for c in self.candidates.values() if c.status == status]
        if cxn_id is not None:
            out = [c for c in out if c.match.cxn_id == cxn_id]
        return out

    def accepted_matches(self) -> List[Match]:
        return [c.match for c in self.candidates.values() if c.status == ACCEPTED]

    def stats(self) -> Dict[int, Dict[str, int]]:
        out: Dict[int, Dict[str, int]] = {}
        for cand in self.candidates.values():
            row = out.setdefault(cand.match.cxn_id,
                                 {PENDING: 0, ACCEPTED: 0, REJECTED: 0})
            row[cand.status] += 1
        return out


def reservoir_sample(matches: Iterable[Match], n: int, seed: int) -> List[Match]:
    """Deterministic reservoir sampling over a match stream."""
    import random

    rng = random.Random(seed)
    reservoir: List[Match] = []
    for i, match in enumerate(matches):
        if i < n:
            reservoir.append(match)
        else:
            j = rng.randint(0, i)
            if j < n:
                reservoir[j] = match
    return reservoir
