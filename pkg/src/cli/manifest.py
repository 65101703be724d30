"""Run manifests: what a command read, wrote and how it ended."""

import logging
import subprocess
import time
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

from pydantic import BaseModel, Field, PrivateAttr

UTC = timezone.utc  # datetime.UTC is Python 3.11+

from src import __version__

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"


def describe_revision() -> str:
    """``git describe --always --dirty`` of the source tree, or ``unknown``."""
    try:
        result = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            cwd=Path(__file__).resolve().parent,
            capture_output=True,
            text=True,
            check=False,
            timeout=5,
        )
    except (OSError, subprocess.SubprocessError):
        return "unknown"
    return result.stdout.strip() if result.returncode == 0 and result.stdout.strip() else "unknown"


class RunManifest(BaseModel):
    """Record of one command invocation.

    Attributes:
        command: Subcommand name.
        config: Echo of the effective experiment configuration.
        seed: Seed the command ran with.
        version: Package version.
        git_describe: Source revision, ``unknown`` outside a git checkout.
        inputs: Input files by role.
        outputs: Files written, in order.
        started_at: UTC start time (ISO 8601).
        wall_clock_s: Seconds from start to finish.
        exit_code: Process exit code.
        error: Error message when the command failed.
    """

    command: str
    config: dict[str, Any] = Field(default_factory=dict)
    seed: int | None = None
    version: str = __version__
    git_describe: str = Field(default_factory=describe_revision)
    inputs: dict[str, str] = Field(default_factory=dict)
    outputs: list[str] = Field(default_factory=list)
    started_at: str = Field(default_factory=lambda: datetime.now(UTC).isoformat())
    wall_clock_s: float = 0.0
    exit_code: int | None = None
    error: str | None = None

    _clock: float = PrivateAttr(default_factory=time.perf_counter)

    def record_output(self, path: str | Path) -> Path:
        target = Path(path)
        self.outputs.append(str(target))
        return target

    def finish(self, exit_code: int, error: str | None = None) -> None:
        self.exit_code = exit_code
        self.error = error
        self.wall_clock_s = time.perf_counter() - self._clock

    def write(self, out_dir: str | Path) -> Path:
        target = Path(out_dir) / MANIFEST_NAME
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(self.model_dump_json(indent=2), encoding="utf-8")
        logger.info(f"Wrote run manifest to {target}")
        return target
