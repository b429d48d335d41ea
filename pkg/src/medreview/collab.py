"""Multi-user collaboration core: sessions, serialized writes, notifications.

Writes for one patient apply under a per-patient lock in a single total
order; conflicts are detected at item granularity (a change based on a
revision older than the item's last change is stale). After every accepted
write the derived views are recomputed and a change notification carrying
per-tab dirty flags goes to every other subscribed session, in revision
order.
"""
from __future__ import annotations

import copy
import itertools
import queue
import threading
from dataclasses import dataclass, field
from pathlib import Path

from .knowledge import TABS, Knowledge
from .patient import (ItemChange, PatientRecord, import_patient, infer_indications,
                      load_record, mutate, record_to_dict, save_record)
from .rules import evaluate_comparative
from .views import compute_views


class CollabError(Exception):
    pass


class NotFoundError(CollabError):
    pass


class RoleForbiddenError(CollabError):
    pass


class NotSubscribedError(CollabError):
    pass


class EmptyReviewError(CollabError):
    pass


ROLES = ("pharmacist", "gp", "observer")
CHAT_ROLES = ("pharmacist", "gp")


@dataclass
class Session:
    session_id: str
    user: str
    role: str
    subscriptions: dict[str, "queue.Queue[dict]"] = field(default_factory=dict)


@dataclass(frozen=True)
class ChangeNotification:
    patient_id: str
    revision: int
    author: str
    changed_categories: tuple[str, ...]
    dirty: dict

    def to_dict(self) -> dict:
        return {
            "type": "change",
            "patient_id": self.patient_id,
            "revision": self.revision,
            "author": self.author,
            "changed_categories": list(self.changed_categories),
            "dirty": dict(self.dirty),
        }


def dirty_flags(changed_categories, tab_dependencies, origin_tab: str | None = None) -> dict:
    """Per-tab booleans: a tab is dirty iff it reads a changed category.

    The tab the change was authored from is never flagged for its own change.
    """
    changed = set(changed_categories)
    flags = {}
    for tab in TABS:
        flags[tab] = bool(tab_dependencies[tab] & changed) and tab != origin_tab
    return flags


class Hub:
    """In-process collaboration service; the HTTP layer is a thin wrapper."""

    def __init__(self, knowledge: Knowledge, data_dir: str | Path | None = None):
        self.knowledge = knowledge
        self.data_dir = Path(data_dir) if data_dir else None
        self._records: dict[str, PatientRecord] = {}
        self._views: dict[str, tuple[int, dict]] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()
        self._sessions: dict[str, Session] = {}
        self._session_counter = itertools.count(1)
        if self.data_dir and self.data_dir.exists():
            for path in sorted(self.data_dir.glob("*.json")):
                record = load_record(path)
                self._records[record.patient_id] = record

    # -- sessions -----------------------------------------------------

    def create_session(self, user: str, role: str) -> Session:
        if role not in ROLES:
            raise CollabError(f"unknown role {role!r}")
        session = Session(session_id=f"s{next(self._session_counter)}", user=user, role=role)
        self._sessions[session.session_id] = session
        return session

    def subscribe(self, session: Session, patient_id: str) -> "queue.Queue[dict]":
        self._require(patient_id)
        q: "queue.Queue[dict]" = queue.Queue()
        session.subscriptions[patient_id] = q
        return q

    def unsubscribe(self, session: Session, patient_id: str) -> None:
        session.subscriptions.pop(patient_id, None)

    # -- patients -------------------------------------------------------

    def _lock_for(self, patient_id: str) -> threading.Lock:
        with self._registry_lock:
            return self._locks.setdefault(patient_id, threading.Lock())

    def _require(self, patient_id: str) -> PatientRecord:
        try:
            return self._records[patient_id]
        except KeyError:
            raise NotFoundError(f"no patient {patient_id!r}") from None

    def patient_ids(self) -> list[str]:
        return sorted(self._records)

    def add_patient(self, document: dict, patient_id: str | None = None) -> str:
        record = import_patient(document, self.knowledge.drug_db, self.knowledge.terminology,
                                patient_id=patient_id or document.get("patient_id", "patient"))
        infer_indications(record, self.knowledge.drug_db, self.knowledge.terminology)
        with self._lock_for(record.patient_id):
            self._records[record.patient_id] = record
            self._refresh(record)
        return record.patient_id

    def _refresh(self, record: PatientRecord) -> None:
        self._views[record.patient_id] = (record.revision, compute_views(record, self.knowledge))
        if self.data_dir:
            self.data_dir.mkdir(parents=True, exist_ok=True)
            save_record(record, self.data_dir)

    def open_patient(self, session: Session, patient_id: str) -> dict:
        """Consistent snapshot: record plus all views computed at one revision."""
        with self._lock_for(patient_id):
            record = self._require(patient_id)
            revision, views = self._views.get(patient_id, (None, None))
            if revision != record.revision:
                self._refresh(record)
                revision, views = self._views[patient_id]
            return {
                "patient_id": patient_id,
                "revision": record.revision,
                "record": record_to_dict(record),
                "views": copy.deepcopy(views),
            }

    def get_view(self, session: Session, patient_id: str, tab: str) -> dict:
        if tab not in TABS:
            raise NotFoundError(f"no tab {tab!r}")
        snapshot = self.open_patient(session, patient_id)
        return {"revision": snapshot["revision"], "tab": tab, "view": snapshot["views"][tab]}

    # -- writes ----------------------------------------------------------

    def submit_change(self, session: Session, patient_id: str, base_revision: int,
                      change: ItemChange) -> int:
        """Apply one item change; stale when the item moved past base_revision."""
        with self._lock_for(patient_id):
            record = self._require(patient_id)
            change.author = change.author or session.user
            change.base_revision = base_revision
            mutate(record, change)
            infer_indications(record, self.knowledge.drug_db, self.knowledge.terminology)
            self._refresh(record)
            self._broadcast(session, record, (change.category,))
            return record.revision

    def post_chat(self, session: Session, patient_id: str, text: str) -> int:
        if session.role not in CHAT_ROLES:
            raise RoleForbiddenError("chat is restricted to the pharmacist and the GP")
        if not text.strip():
            raise CollabError("empty chat message")
        with self._lock_for(patient_id):
            record = self._require(patient_id)
            mutate(record, ItemChange(category="chat", op="add",
                                      data={"text": text, "role": session.role},
                                      author=session.user))
            self._refresh(record)
            self._broadcast(session, record, ("chat",))
            return record.revision

    def validate_mr(self, session: Session, patient_id: str) -> dict:
        """Freeze the preconization log and emit the review document."""
        if session.role != "pharmacist":
            raise RoleForbiddenError("only the pharmacist validates a medication review")
        with self._lock_for(patient_id):
            record = self._require(patient_id)
            entries = [p for p in record.preconizations]
            if not entries:
                raise EmptyReviewError("nothing to validate: no preconization recorded")
            record.mr_validated_at = record.revision
            diff = evaluate_comparative(self.knowledge.evaluator, record,
                                        self.knowledge.drug_db)
            document = {
                "patient_id": patient_id,
                "revision": record.revision,
                "author": session.user,
                "preconizations": record_to_dict(record)["preconizations"],
                "free_texts": [p.free_text for p in entries if p.free_text],
                "alerts": diff.to_dict(),
            }
            self._refresh(record)
            for other in self._sessions.values():
                if other.session_id == session.session_id:
                    continue
                q = other.subscriptions.get(patient_id)
                if q is not None:
                    q.put({"type": "mr_validated", "patient_id": patient_id,
                           "revision": record.revision, "document": document})
            return document

    def _broadcast(self, author_session: Session, record: PatientRecord,
                   categories: tuple[str, ...]) -> None:
        # other subscribers see every reading tab flagged; the origin-tab
        # exclusion only applies to the author's own flags (submit response)
        notification = ChangeNotification(
            patient_id=record.patient_id, revision=record.revision,
            author=author_session.user, changed_categories=categories,
            dirty=dirty_flags(categories, self.knowledge.tab_dependencies))
        for other in self._sessions.values():
            if other.session_id == author_session.session_id:
                continue
            q = other.subscriptions.get(record.patient_id)
            if q is not None:
                q.put(notification.to_dict())
