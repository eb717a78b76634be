"""HTTP surface over the recommender service."""

from __future__ import annotations

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from ..summaries.store import ConflictError
from .service import RecommenderService, ServiceError, UnknownUserError


class CommitBody(BaseModel):
    text: str
    expected_version: int | None = None


class PreviewBody(BaseModel):
    text: str
    alpha: float | None = None
    k: int | None = None


def create_app(service: RecommenderService) -> FastAPI:
    app = FastAPI(title="textrec gateway")
    app.add_middleware(CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
                       allow_headers=["*"])

    @app.get("/health")
    def health() -> dict:
        return service.health()

    @app.get("/catalog/genres")
    def genres() -> dict:
        return {"genres": service.genres()}

    @app.get("/users/{user_id}/summary")
    def get_summary(user_id: int) -> dict:
        try:
            return service.get_summary(user_id)
        except UnknownUserError as exc:
            raise HTTPException(status_code=404, detail=str(exc))

    @app.post("/users/{user_id}/summary")
    def commit_summary(user_id: int, body: CommitBody) -> dict:
        try:
            return service.commit_summary(user_id, body.text, body.expected_version)
        except UnknownUserError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        except ConflictError as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))

    @app.post("/users/{user_id}/preview")
    def preview(user_id: int, body: PreviewBody) -> dict:
        try:
            return service.preview(user_id, body.text, body.alpha, body.k)
        except (UnknownUserError, KeyError) as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))

    @app.get("/users/{user_id}/recommendations")
    def recommendations(user_id: int, alpha: float | None = None, k: int | None = None,
                        guidance: str | None = None, mode: str = "positive") -> dict:
        try:
            return service.recommendations(user_id, alpha, k, guidance, mode)
        except UnknownUserError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        except (ServiceError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=str(exc))

    return app
