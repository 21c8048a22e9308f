#!/usr/bin/env python
"""
Manual Progress Cleanup Utility
Run this script to remove progress files of finished pipeline runs.
"""

import os
import sys

# Add parent directory to path
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

from app.config import config
from app.modules.progress_tracker import ProgressTracker


def main():
    """Main cleanup function."""
    max_age = int(sys.argv[1]) if len(sys.argv) > 1 else 3600
    progress_dir = config.PROGRESS_PATH
    if not os.path.exists(progress_dir):
        print("No progress directory found")
        return

    tracker = ProgressTracker(progress_dir=progress_dir)
    files = [f for f in os.listdir(progress_dir) if f.endswith(".json")]
    print(f"Found {len(files)} progress file(s) in {progress_dir}")

    removed = tracker.cleanup_finished_tasks(max_age_seconds=max_age)
    remaining = [f for f in os.listdir(progress_dir) if f.endswith(".json")]
    print(f"Removed {removed}, remaining {len(remaining)}")


if __name__ == "__main__":
    main()
