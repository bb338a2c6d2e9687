import hashlib
import json
import os
import time
from typing import Optional

from qivif.exceptions import JournalIntegrityError

GENESIS = "0" * 64


def file_digest(path) -> str:
    sha = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            sha.update(chunk)
    return sha.hexdigest()


class RunJournal:
    """
    Hash-chained JSON-lines record of a run.

    Every entry carries the hash of its predecessor. Pipeline stages are
    bracketed by `stage_start` / `stage_end`; a stage end needs an open stage
    and the journal cannot be sealed while a stage is open.
    """

    def __init__(self, path="run_journal.jsonl"):
        self.path = os.fspath(path)
        self.last_hash = GENESIS
        self.open_stage: Optional[str] = None
        self._open_hash: Optional[str] = None
        self.sealed = False
        self.record({"type": "run_start", "timestamp": time.time()})

    def _canonical_hash(self, payload: dict) -> str:
        try:
            serialized = json.dumps(payload, sort_keys=True, separators=(",", ":"), default=str)
        except (TypeError, ValueError) as e:
            raise JournalIntegrityError("journal entry is not serializable", str(e)) from e
        return hashlib.sha256(serialized.encode()).hexdigest()

    def _persist(self, payload: dict):
        try:
            directory = os.path.dirname(self.path)
            if directory:
                os.makedirs(directory, exist_ok=True)
            with open(self.path, "a", encoding="utf-8") as f:
                f.write(json.dumps(payload, sort_keys=True, default=str) + "\n")
                f.flush()
                os.fsync(f.fileno())
        except OSError as e:
            raise JournalIntegrityError("could not persist journal entry", f"{self.path} ({e})") from e

    def record(self, entry: dict):
        if self.sealed:
            raise JournalIntegrityError("journal already sealed", self.path)
        entry = dict(entry)
        entry_type = entry.get("type")

        if entry_type in ("stage_start", "run_seal") and self.open_stage is not None:
            raise JournalIntegrityError("stage still open", self.open_stage)

        if entry_type == "stage_end":
            if self.open_stage is None or entry.get("stage") != self.open_stage:
                raise JournalIntegrityError("stage_end without matching stage_start", entry.get("stage"))
            entry["start_ref"] = self._open_hash
            self.open_stage = None
            self._open_hash = None

        entry["prev_hash"] = self.last_hash
        current_hash = self._canonical_hash(entry)
        entry["hash"] = current_hash

        if entry_type == "stage_start":
            self.open_stage = entry.get("stage")
            self._open_hash = current_hash

        self.last_hash = current_hash
        self._persist(entry)
        return current_hash

    def start_stage(self, stage: str, **details):
        return self.record({"type": "stage_start", "stage": stage, "timestamp": time.time(), **details})

    def end_stage(self, stage: str, **details):
        return self.record({"type": "stage_end", "stage": stage, "timestamp": time.time(), **details})

    def artifact(self, path, kind: str):
        return self.record(
            {"type": "artifact", "kind": kind, "path": os.fspath(path), "sha256": file_digest(path)}
        )

    def seal(self, reason="completed"):
        self.record({"type": "run_seal", "reason": reason, "timestamp": time.time()})
        self.sealed = True


def verify_journal(path) -> bool:
    """Recompute the hash chains of a journal file; each run starts a new chain."""
    previous = GENESIS
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            entry = json.loads(line)
            claimed = entry.pop("hash", None)
            if entry.get("type") == "run_start":
                previous = GENESIS
            if entry.get("prev_hash") != previous:
                return False
            serialized = json.dumps(entry, sort_keys=True, separators=(",", ":"), default=str)
            if hashlib.sha256(serialized.encode()).hexdigest() != claimed:
                return False
            previous = claimed
    return True
