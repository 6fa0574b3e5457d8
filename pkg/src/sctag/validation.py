"""Human-validation loop: sessions over sampled documents, a durable rating
log, voted ground truth, and validation ROC / top-1 metrics.
"""

import json
import os
import threading
import time
from dataclasses import dataclass, field

import numpy as np

from . import models
from .evaluation import RocCurve, roc_auc, roc_curve

RATINGS = ("agree", "disagree", "unsure")


class RatingRejected(ValueError):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


@dataclass
class RatingRecord:
    doc_id: int
    tag: str
    reviewer_id: str
    rating: str
    timestamp: float = 0.0

    def to_json(self):
        return {
            "doc_id": self.doc_id,
            "tag": self.tag,
            "reviewer_id": self.reviewer_id,
            "rating": self.rating,
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_json(cls, d):
        return cls(d["doc_id"], d["tag"], d["reviewer_id"], d["rating"], d.get("timestamp", 0.0))


@dataclass
class ValidationSession:
    documents: list  # [{id, path, text}]
    predictions: dict  # doc_id -> [(tag, certainty)], frozen at creation
    k: int
    reviewers: list = field(default_factory=list)  # empty list = open enrollment
    created_at: float = 0.0
    warnings: list = field(default_factory=list)

    def document(self, doc_id):
        for d in self.documents:
            if d["id"] == doc_id:
                return d
        return None

    def to_json(self):
        return {
            "k": self.k,
            "reviewers": self.reviewers,
            "created_at": self.created_at,
            "warnings": self.warnings,
            "documents": self.documents,
            "predictions": {
                str(i): [{"tag": t, "certainty": c} for t, c in preds]
                for i, preds in self.predictions.items()
            },
        }

    @classmethod
    def from_json(cls, d):
        return cls(
            documents=d["documents"],
            predictions={
                int(i): [(p["tag"], p["certainty"]) for p in preds]
                for i, preds in d["predictions"].items()
            },
            k=d["k"],
            reviewers=d.get("reviewers", []),
            created_at=d.get("created_at", 0.0),
            warnings=d.get("warnings", []),
        )


def create_session(manifest, bundle, k=5, reviewers=None) -> ValidationSession:
    """Compute and freeze top-k predictions for every manifest document.

    Manifest entries carry either inline `text` or a `path` to read;
    unreadable documents are excluded with a warning.
    """
    if not manifest:
        raise ValueError("empty manifest")
    docs, warnings = [], []
    for i, rec in enumerate(manifest):
        doc_id = rec.get("id", i)
        if "text" in rec:
            text = rec["text"]
        else:
            try:
                with open(rec["path"], encoding="utf-8", errors="replace") as f:
                    text = f.read()
            except OSError as e:
                warnings.append(f"excluded {rec.get('path')}: {e}")
                continue
        docs.append({"id": doc_id, "path": rec.get("path", f"<doc {doc_id}>"), "text": text})
    if not docs:
        raise ValueError("no readable documents in manifest")
    predictions = {d["id"]: models.predict_probs(bundle, d["text"])[:k] for d in docs}
    return ValidationSession(
        documents=docs,
        predictions=predictions,
        k=k,
        reviewers=list(reviewers or []),
        created_at=time.time(),
        warnings=warnings,
    )


class RatingLog:
    """Append-only rating log with last-write-wins reads.

    `current` maps (doc_id, tag, reviewer_id) to the latest record; the
    entries list keeps full history so replay reconstructs state exactly.
    """

    def __init__(self):
        self.entries = []
        self.current = {}

    def append(self, record: RatingRecord):
        self.entries.append(record)
        self.current[(record.doc_id, record.tag, record.reviewer_id)] = record

    def replay(self, records):
        for r in records:
            self.append(r)


def record_rating(session: ValidationSession, log: RatingLog, record: RatingRecord):
    """Validate and append one rating; resubmission overwrites."""
    doc = session.document(record.doc_id)
    if doc is None:
        raise RatingRejected("unknown_document", f"unknown document id {record.doc_id}")
    if record.tag not in {t for t, _ in session.predictions[record.doc_id]}:
        raise RatingRejected("unknown_tag", f"tag {record.tag!r} not in this document's top-{session.k}")
    if session.reviewers and record.reviewer_id not in session.reviewers:
        raise RatingRejected("unknown_reviewer", f"unknown reviewer {record.reviewer_id!r}")
    if not record.reviewer_id:
        raise RatingRejected("unknown_reviewer", "empty reviewer id")
    if record.rating not in RATINGS:
        raise RatingRejected("bad_rating", f"rating must be one of {RATINGS}")
    if not record.timestamp:
        record.timestamp = time.time()
    log.append(record)
    return record


def compute_ground_truth(session: ValidationSession, log: RatingLog) -> dict:
    """Per (doc_id, tag): drop unsure ratings, then simple majority.

    Empty-after-drop and exact ties are excluded.
    """
    votes = {}
    for (doc_id, tag, _reviewer), rec in log.current.items():
        votes.setdefault((doc_id, tag), []).append(rec.rating)
    truth = {}
    for doc in session.documents:
        for tag, _c in session.predictions[doc["id"]]:
            rs = [r for r in votes.get((doc["id"], tag), []) if r != "unsure"]
            agree = sum(1 for r in rs if r == "agree")
            disagree = len(rs) - agree
            if not rs or agree == disagree:
                truth[(doc["id"], tag)] = "excluded"
            else:
                truth[(doc["id"], tag)] = "positive" if agree > disagree else "negative"
    return truth


def validation_metrics(session: ValidationSession, truth: dict):
    """ROC over non-excluded pairs using the frozen certainties, plus top-1
    over documents whose rank-1 tag has a definite ground truth."""
    scores, labels = [], []
    for doc in session.documents:
        for tag, certainty in session.predictions[doc["id"]]:
            verdict = truth.get((doc["id"], tag), "excluded")
            if verdict == "excluded":
                continue
            scores.append(certainty)
            labels.append(1 if verdict == "positive" else 0)
    if not scores:
        raise ValueError("all (document, tag) pairs are excluded")
    curve = roc_curve(scores, labels) if (0 in labels and 1 in labels) else None
    hits = total = 0
    for doc in session.documents:
        tag, _c = session.predictions[doc["id"]][0]
        verdict = truth.get((doc["id"], tag), "excluded")
        if verdict == "excluded":
            continue  # dropped from the denominator
        total += 1
        hits += verdict == "positive"
    top1 = hits / total if total else float("nan")
    return curve, top1


class ValidationStore:
    """Durable session directory: session.json plus an append-only
    line-delimited rating log. All writes funnel through one lock."""

    def __init__(self, directory, session: ValidationSession):
        self.directory = directory
        self.session = session
        self.log = RatingLog()
        self._lock = threading.Lock()
        os.makedirs(directory, exist_ok=True)

    @property
    def log_path(self):
        return os.path.join(self.directory, "ratings.log")

    def persist_session(self):
        with open(os.path.join(self.directory, "session.json"), "w", encoding="utf-8") as f:
            json.dump(self.session.to_json(), f, ensure_ascii=False)

    def add_rating(self, record: RatingRecord):
        with self._lock:
            record = record_rating(self.session, self.log, record)
            with open(self.log_path, "a", encoding="utf-8") as f:
                f.write(json.dumps(record.to_json()) + "\n")
        return record

    def rated_counts(self):
        counts = {}
        for doc_id, _tag, _rev in self.log.current:
            counts[doc_id] = counts.get(doc_id, 0) + 1
        return counts


def load_session(directory) -> ValidationStore:
    with open(os.path.join(directory, "session.json"), encoding="utf-8") as f:
        session = ValidationSession.from_json(json.load(f))
    store = ValidationStore(directory, session)
    if os.path.exists(store.log_path):
        with open(store.log_path, encoding="utf-8") as f:
            store.log.replay(RatingRecord.from_json(json.loads(l)) for l in f if l.strip())
    return store
