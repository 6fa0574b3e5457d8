"""HTTP API for the human-validation loop.

GET  /api/session          session metadata
GET  /api/documents        [{id, path, length, rated_counts}]
GET  /api/documents/{id}   {text, predictions: [{tag, certainty}]}
POST /api/ratings          {doc_id, tag, reviewer_id, rating} -> {ok}
GET  /api/results          {ground_truth summary, roc points, auc, top1}
"""

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from .validation import (
    RatingRecord,
    RatingRejected,
    ValidationStore,
    compute_ground_truth,
    validation_metrics,
)


class RatingBody(BaseModel):
    doc_id: int
    tag: str
    reviewer_id: str
    rating: str


def build_app(store: ValidationStore) -> FastAPI:
    app = FastAPI(title="sctag validation service")
    session = store.session

    @app.get("/api/session")
    def get_session():
        return {
            "k": session.k,
            "document_count": len(session.documents),
            "reviewers": session.reviewers,
            "created_at": session.created_at,
            "warnings": session.warnings,
        }

    @app.get("/api/documents")
    def get_documents():
        counts = store.rated_counts()
        return [
            {
                "id": d["id"],
                "path": d["path"],
                "length": len(d["text"]),
                "rated_counts": counts.get(d["id"], 0),
            }
            for d in session.documents
        ]

    @app.get("/api/documents/{doc_id}")
    def get_document(doc_id: int):
        doc = session.document(doc_id)
        if doc is None:
            raise HTTPException(status_code=404, detail="unknown document")
        return {
            "id": doc["id"],
            "path": doc["path"],
            "text": doc["text"],
            "predictions": [
                {"tag": t, "certainty": c} for t, c in session.predictions[doc_id]
            ],
        }

    @app.post("/api/ratings")
    def post_rating(body: RatingBody):
        try:
            store.add_rating(
                RatingRecord(body.doc_id, body.tag, body.reviewer_id, body.rating)
            )
        except RatingRejected as e:
            raise HTTPException(status_code=422, detail={"code": e.code, "message": str(e)})
        return {"ok": True}

    @app.get("/api/results")
    def get_results():
        truth = compute_ground_truth(session, store.log)
        summary = {"positive": 0, "negative": 0, "excluded": 0}
        for v in truth.values():
            summary[v] += 1
        try:
            curve, top1 = validation_metrics(session, truth)
        except ValueError as e:
            raise HTTPException(status_code=409, detail=str(e))
        return {
            "ground_truth": summary,
            "roc": None
            if curve is None
            else {"fpr": curve.fpr.tolist(), "tpr": curve.tpr.tolist()},
            "auc": None if curve is None else curve.auc,
            "top1": top1,
        }

    return app
