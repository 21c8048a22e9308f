"""
Progress tracking for long-running pipeline runs.

One JSON file per run under the progress directory, so a reproduce run can be
followed from another shell.
"""

import json
import logging
import os
import tempfile
import time
from typing import Dict, Optional

from app.exceptions import TaskNotFoundException

logger = logging.getLogger(__name__)


class ProgressTracker:
    """Tracks the stages of pipeline runs."""

    def __init__(self, progress_dir: str = "output/progress"):
        """
        Initialize progress tracker.

        Args:
            progress_dir: Directory to store progress files
        """
        self.progress_dir = os.path.abspath(progress_dir)
        os.makedirs(self.progress_dir, exist_ok=True)

    def _path(self, task_id: str) -> str:
        return os.path.join(self.progress_dir, f"{task_id}.json")

    def _write(self, task_id: str, data: Dict) -> None:
        """Write to a temp file first, then atomically replace the progress file."""
        temp_fd, temp_path = tempfile.mkstemp(
            dir=self.progress_dir, suffix=".json", prefix="tmp_progress_"
        )
        try:
            with os.fdopen(temp_fd, "w") as f:
                json.dump(data, f)

            max_retries = 3
            for attempt in range(max_retries):
                try:
                    os.replace(temp_path, self._path(task_id))
                    break
                except PermissionError:
                    if attempt == max_retries - 1:
                        raise
                    time.sleep(0.05)
        except Exception:
            try:
                if os.path.exists(temp_path):
                    os.unlink(temp_path)
            except OSError:
                pass
            raise

    def _load(self, task_id: str) -> Dict:
        data = self.get_progress(task_id)
        if data is None:
            raise TaskNotFoundException(f"Unknown task: {task_id}", {"task_id": task_id})
        return data

    def create_task(self, task_id: str, total: int = 0) -> None:
        """Create a new progress tracking task."""
        now = time.time()
        self._write(
            task_id,
            {
                "task_id": task_id,
                "status": "started",
                "current": 0,
                "total": total,
                "percentage": 0,
                "message": "Initializing...",
                "stages": [],
                "started_at": now,
                "updated_at": now,
            },
        )

    def update_progress(
        self, task_id: str, current: int, total: int, message: Optional[str] = None
    ) -> None:
        """Update progress for a task, creating it on first use."""
        if self.get_progress(task_id) is None:
            self.create_task(task_id, total)
        data = self._load(task_id)
        data["current"] = current
        data["total"] = total
        data["percentage"] = int(current / total * 100) if total > 0 else 0
        data["updated_at"] = time.time()
        if message:
            data["message"] = message
        self._write(task_id, data)

    def record_stage(self, task_id: str, name: str, passed: bool, seconds: float) -> None:
        """Append a finished pipeline stage and advance the counter."""
        data = self._load(task_id)
        data["stages"].append({"name": name, "pass": passed, "seconds": round(seconds, 3)})
        data["current"] = len(data["stages"])
        total = data.get("total") or 0
        data["percentage"] = int(data["current"] / total * 100) if total > 0 else 0
        data["message"] = f"{name}: {'pass' if passed else 'FAIL'}"
        data["updated_at"] = time.time()
        self._write(task_id, data)

    def get_progress(self, task_id: str) -> Optional[Dict]:
        """Get progress for a task, or None if there is no readable file."""
        path = self._path(task_id)
        if not os.path.exists(path):
            return None
        try:
            with open(path, "r") as f:
                return json.load(f)
        except (OSError, json.JSONDecodeError):
            return None

    def complete_task(self, task_id: str, message: str = "Completed") -> None:
        """Mark a task as completed."""
        data = self._load(task_id)
        data["status"] = "completed"
        data["message"] = message
        data["percentage"] = 100
        data["updated_at"] = data["completed_at"] = time.time()
        self._write(task_id, data)

    def fail_task(self, task_id: str, error_message: str) -> None:
        """Mark a task as failed."""
        data = self._load(task_id)
        data["status"] = "failed"
        data["message"] = error_message
        data["updated_at"] = data["failed_at"] = time.time()
        self._write(task_id, data)

    def cleanup_task(self, task_id: str) -> None:
        """Remove a task's progress file."""
        path = self._path(task_id)
        if os.path.exists(path):
            os.remove(path)

    def cleanup_finished_tasks(self, max_age_seconds: int = 3600) -> int:
        """
        Remove completed or failed tasks older than max_age_seconds.

        Returns:
            Number of files removed
        """
        removed = 0
        now = time.time()
        for filename in os.listdir(self.progress_dir):
            if not filename.endswith(".json"):
                continue
            task_id = filename[:-5]
            if filename.startswith("tmp_progress_"):
                self.cleanup_task(task_id)
                removed += 1
                continue
            data = self.get_progress(task_id)
            if data is None:
                continue
            finished_at = data.get("completed_at") or data.get("failed_at")
            if finished_at and now - finished_at > max_age_seconds:
                self.cleanup_task(task_id)
                removed += 1
        if removed:
            logger.info(f"Removed {removed} finished progress file(s)")
        return removed
