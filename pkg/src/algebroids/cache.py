"""Workspace artifact cache keyed by algebroid content.

Layout: ``{workspace}/{algebra-hash}/{artifact}.json``.  The hash is a
short digest of the algebroid's canonical content key, so two configs
describing the same bracket/anchor data share a directory while any
structural change lands in a fresh one.  Writes go through a temp file
and an atomic rename; a process-local lock keeps concurrent suite
threads from interleaving writes to the same artifact.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
import threading

__all__ = ["algebra_hash", "Cache"]


def algebra_hash(alg) -> str:
    """Short stable digest of the algebroid's structural content."""
    return hashlib.sha256(alg.content_key().encode()).hexdigest()[:16]


class Cache:
    """JSON artifact store under one algebra's workspace directory."""

    def __init__(self, workspace: str, alg):
        self.root = os.path.join(str(workspace), algebra_hash(alg))
        self._lock = threading.Lock()

    def path(self, artifact: str) -> str:
        return os.path.join(self.root, artifact + ".json")

    def get(self, artifact: str):
        """Decoded artifact, or None when absent or unreadable."""
        try:
            with open(self.path(artifact), "r", encoding="utf-8") as fh:
                return json.load(fh)
        except (OSError, ValueError):
            return None

    def put(self, artifact: str, payload) -> str:
        """Serialize atomically: temp file in the same directory, then
        rename over the target so readers never see a partial write."""
        target = self.path(artifact)
        data = json.dumps(payload, sort_keys=True, indent=1)
        with self._lock:
            os.makedirs(self.root, exist_ok=True)
            fd, tmp = tempfile.mkstemp(dir=self.root, suffix=".tmp")
            try:
                with os.fdopen(fd, "w", encoding="utf-8") as fh:
                    fh.write(data)
                os.replace(tmp, target)
            except BaseException:
                try:
                    os.unlink(tmp)
                except OSError:
                    pass
                raise
        return target
