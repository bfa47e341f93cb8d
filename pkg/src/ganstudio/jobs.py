"""Asynchronous job queue: FIFO, served by a small worker-thread pool.

Rendering jobs share the immutable generator; finetune jobs clone it before
touching any parameter, so concurrent submissions never interleave mutation.
Each job persists its request and state transitions as JSON under the
project's jobs/ directory, making every result reproducible from the request
plus the checkpoint hash.
"""

from __future__ import annotations

import json
import queue
import threading
import time
import uuid
from dataclasses import dataclass, field
from typing import Callable

from .project import Project

JOB_KINDS = ("render", "blend", "invert", "panorama", "transfer", "finetune")
STATES = ("queued", "running", "done", "failed")


@dataclass
class Job:
    id: str
    kind: str
    state: str = "queued"
    request: dict = field(default_factory=dict)
    result_uri: str | None = None
    error: str | None = None
    timings: dict[str, float] = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind,
            "state": self.state,
            "request": self.request,
            "result_uri": self.result_uri,
            "error": self.error,
            "timings": self.timings,
        }


class JobQueue:
    """FIFO job queue with persistence and a fixed worker pool."""

    def __init__(self, project: Project, workers: int = 2):
        self.project = project
        self._jobs: dict[str, Job] = {}
        self._lock = threading.Lock()
        self._queue: queue.Queue = queue.Queue()
        self._workers = [threading.Thread(target=self._worker, daemon=True) for _ in range(workers)]
        for t in self._workers:
            t.start()

    def submit(self, kind: str, request: dict, fn: Callable[[Job], str]) -> Job:
        """Queue fn; it runs on a worker and returns the result asset URI."""
        if kind not in JOB_KINDS:
            raise ValueError(f"unknown job kind {kind!r}")
        job = Job(id=str(uuid.uuid4()), kind=kind, request=request)
        with self._lock:
            self._jobs[job.id] = job
        self._persist(job)
        self._queue.put((job.id, fn))
        return job

    def get(self, job_id: str) -> Job | None:
        with self._lock:
            return self._jobs.get(job_id)

    def wait(self, job_id: str, timeout: float = 60.0) -> Job:
        deadline = time.monotonic() + timeout
        while time.monotonic() < deadline:
            job = self.get(job_id)
            if job is not None and job.state in ("done", "failed"):
                return job
            time.sleep(0.01)
        raise TimeoutError(f"job {job_id} did not finish within {timeout}s")

    def _persist(self, job: Job) -> None:
        path = self.project.root / "jobs" / f"{job.id}.json"
        path.write_text(json.dumps(job.to_json_dict(), indent=2, sort_keys=True))

    def _transition(self, job: Job, state: str, **updates) -> None:
        with self._lock:
            job.state = state
            for key, value in updates.items():
                setattr(job, key, value)
        self._persist(job)

    def _worker(self) -> None:
        while True:
            job_id, fn = self._queue.get()
            job = self.get(job_id)
            if job is None:
                continue
            started = time.monotonic()
            self._transition(job, "running")
            try:
                result_uri = fn(job)
            except Exception as e:  # job failures are reported via state, not raised
                job.timings["run_ms"] = (time.monotonic() - started) * 1000.0
                self._transition(job, "failed", error=f"{type(e).__name__}: {e}")
                continue
            job.timings["run_ms"] = (time.monotonic() - started) * 1000.0
            self._transition(job, "done", result_uri=result_uri)
