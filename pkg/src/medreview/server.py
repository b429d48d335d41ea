"""HTTP + WebSocket layer over the collaboration hub.

Authentication is a static token per user (no identity provider): tokens map
to (user, role) in the server config. The push channel is a WebSocket per
(session, patient) delivering change-notification frames as JSON.
"""
from __future__ import annotations

import json
import queue
from pathlib import Path

import anyio
from fastapi import Depends, FastAPI, Header, HTTPException, WebSocket, WebSocketDisconnect
from pydantic import BaseModel

from .collab import (CollabError, EmptyReviewError, Hub, NotFoundError,
                     RoleForbiddenError, Session, dirty_flags)
from .knowledge import Knowledge
from .patient import (DanglingCancelError, FrozenLogError, ItemChange, PatientError,
                      StaleRevisionError, UnknownItemError)


class ChangePayload(BaseModel):
    base_revision: int
    category: str
    op: str
    item_id: str | None = None
    data: dict = {}
    origin_tab: str | None = None


class ChatPayload(BaseModel):
    text: str


def create_app(knowledge: Knowledge, tokens: dict[str, tuple[str, str]],
               data_dir: str | Path | None = None) -> FastAPI:
    """Build the application; ``tokens`` maps auth token -> (user, role)."""
    hub = Hub(knowledge, data_dir=data_dir)
    app = FastAPI(title="medreview", version="0.1.0")
    app.state.hub = hub
    sessions: dict[str, Session] = {}

    def session_for_token(token: str | None) -> Session:
        if token is None or token not in tokens:
            raise HTTPException(status_code=401, detail="unknown or missing token")
        if token not in sessions:
            user, role = tokens[token]
            sessions[token] = hub.create_session(user, role)
        return sessions[token]

    def auth(authorization: str | None = Header(default=None),
             x_auth_token: str | None = Header(default=None)) -> Session:
        token = x_auth_token
        if token is None and authorization and authorization.startswith("Bearer "):
            token = authorization.removeprefix("Bearer ")
        return session_for_token(token)

    def http_error(exc: Exception) -> HTTPException:
        if isinstance(exc, (NotFoundError, UnknownItemError)):
            return HTTPException(status_code=404, detail=str(exc))
        if isinstance(exc, StaleRevisionError):
            return HTTPException(status_code=409, detail=str(exc))
        if isinstance(exc, RoleForbiddenError):
            return HTTPException(status_code=403, detail=str(exc))
        if isinstance(exc, (FrozenLogError, DanglingCancelError, EmptyReviewError)):
            return HTTPException(status_code=409, detail=str(exc))
        if isinstance(exc, (CollabError, PatientError)):
            return HTTPException(status_code=422, detail=str(exc))
        raise exc

    @app.get("/patients")
    def list_patients(session: Session = Depends(auth)) -> dict:
        return {"patients": hub.patient_ids()}

    @app.post("/patients", status_code=201)
    def create_patient(document: dict, session: Session = Depends(auth)) -> dict:
        try:
            patient_id = hub.add_patient(document)
        except PatientError as exc:
            raise http_error(exc) from exc
        return {"patient_id": patient_id}

    @app.get("/patients/{patient_id}")
    def open_patient(patient_id: str, session: Session = Depends(auth)) -> dict:
        try:
            return hub.open_patient(session, patient_id)
        except CollabError as exc:
            raise http_error(exc) from exc

    @app.get("/patients/{patient_id}/views/{tab}")
    def get_view(patient_id: str, tab: str, session: Session = Depends(auth)) -> dict:
        try:
            return hub.get_view(session, patient_id, tab)
        except CollabError as exc:
            raise http_error(exc) from exc

    @app.post("/patients/{patient_id}/changes")
    def submit_change(patient_id: str, payload: ChangePayload,
                      session: Session = Depends(auth)) -> dict:
        change = ItemChange(category=payload.category, op=payload.op,
                            item_id=payload.item_id, data=dict(payload.data),
                            origin_tab=payload.origin_tab)
        try:
            revision = hub.submit_change(session, patient_id, payload.base_revision, change)
        except (CollabError, PatientError) as exc:
            raise http_error(exc) from exc
        return {
            "revision": revision,
            "dirty_self": dirty_flags((payload.category,), knowledge.tab_dependencies,
                                      origin_tab=payload.origin_tab),
        }

    @app.post("/patients/{patient_id}/chat")
    def post_chat(patient_id: str, payload: ChatPayload,
                  session: Session = Depends(auth)) -> dict:
        try:
            revision = hub.post_chat(session, patient_id, payload.text)
        except (CollabError, PatientError) as exc:
            raise http_error(exc) from exc
        return {"revision": revision}

    @app.post("/patients/{patient_id}/validate")
    def validate(patient_id: str, session: Session = Depends(auth)) -> dict:
        try:
            return hub.validate_mr(session, patient_id)
        except (CollabError, PatientError) as exc:
            raise http_error(exc) from exc

    @app.websocket("/patients/{patient_id}/watch")
    async def watch(websocket: WebSocket, patient_id: str) -> None:
        token = websocket.query_params.get("token")
        try:
            session = session_for_token(token)
        except HTTPException:
            await websocket.close(code=4401)
            return
        await websocket.accept()
        try:
            q = hub.subscribe(session, patient_id)
        except NotFoundError:
            await websocket.close(code=4404)
            return
        try:
            while True:
                try:
                    frame = await anyio.to_thread.run_sync(lambda: q.get(timeout=0.5))
                except queue.Empty:
                    # lets us notice a closed socket without blocking forever
                    continue
                await websocket.send_text(json.dumps(frame))
        except (WebSocketDisconnect, RuntimeError):
            pass
        finally:
            hub.unsubscribe(session, patient_id)

    return app
