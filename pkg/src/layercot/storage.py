"""Session persistence: one append-only JSON-Lines event log per session.

Layout is ``<root>/<session-id>.jsonl``; each line is one trace event with
fields seq/ts/kind/payload. A write is durable before any 2xx response
(flush + fsync). Recovery replays every log at startup; a log that cannot
be replayed is quarantined (renamed aside) and never crashes startup.
"""
from __future__ import annotations

import json
import logging
import os
import threading
from dataclasses import dataclass, field
from pathlib import Path

from .types import Session, TraceEvent, replay

logger = logging.getLogger(__name__)

DEFAULT_ROOT_ENV = "LAYERCOT_STORAGE_ROOT"
QUARANTINE_SUFFIX = ".quarantined"


@dataclass
class SessionRecord:
    """A persisted session plus its log bookkeeping."""

    session: Session
    path: Path
    persisted: int = 0  # events already on disk
    created: str = ""
    lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    @property
    def id(self) -> str:
        return self.session.id


class SessionStore:
    def __init__(self, root: Path | str) -> None:
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def path_for(self, session_id: str) -> Path:
        return self.root / f"{session_id}.jsonl"

    def persist(self, record: SessionRecord) -> None:
        """Append any not-yet-written events, fsync before returning."""
        events = record.session.events
        if record.persisted >= len(events):
            return
        with open(record.path, "a", encoding="utf-8") as fh:
            for event in events[record.persisted:]:
                fh.write(event.to_json() + "\n")
            fh.flush()
            os.fsync(fh.fileno())
        record.persisted = len(events)

    def track(self, session: Session) -> SessionRecord:
        record = SessionRecord(
            session=session,
            path=self.path_for(session.id),
            created=session.events[0].ts if session.events else "",
        )
        self.persist(record)
        return record

    def quarantine(self, path: Path, reason: str) -> None:
        target = path.with_name(path.name + QUARANTINE_SUFFIX)
        logger.error("quarantining %s: %s", path.name, reason)
        path.rename(target)

    def load_log(self, path: Path) -> Session:
        events = []
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    events.append(TraceEvent.from_dict(json.loads(line)))
                except (json.JSONDecodeError, KeyError, ValueError) as exc:
                    raise CorruptLog(f"{path.name}:{lineno}: {exc}") from exc
        try:
            return replay(events)
        except Exception as exc:
            raise CorruptLog(f"{path.name}: replay failed: {exc}") from exc

    def resume_all(self) -> tuple[list[SessionRecord], list[str]]:
        """Replay every event log under the root.

        Returns (records, per-file error reports). Corrupt logs are
        quarantined and reported, never fatal.
        """
        records = []
        errors = []
        for path in sorted(self.root.glob("*.jsonl")):
            try:
                session = self.load_log(path)
            except CorruptLog as exc:
                errors.append(str(exc))
                self.quarantine(path, str(exc))
                continue
            records.append(
                SessionRecord(
                    session=session,
                    path=path,
                    persisted=len(session.events),
                    created=session.events[0].ts if session.events else "",
                )
            )
        return records, errors


class CorruptLog(Exception):
    pass


def default_root() -> Path:
    return Path(os.environ.get(DEFAULT_ROOT_ENV, "layercot_sessions"))
