"""
Run manifests.

The manifest hash covers only the inputs that determine the numbers (command, effective
configuration, seed, version and command arguments), so repeated runs share it. The written
`<command>_manifest.csv` holds those inputs and the names of the files produced; run times
stay on the object and in the log, so the file is byte-identical across repeated runs.
"""

import hashlib
import logging
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional, Tuple

from .csv_writer import write_csv

log = logging.getLogger(__name__)


def _now() -> datetime:
    return datetime.now(timezone.utc)


@dataclass(frozen=True)
class RunManifest:
    """Provenance of one CLI run."""

    command: str
    config_snapshot: str
    seed: int
    version: str
    arguments: str = ""
    started: datetime = field(default_factory=_now, compare=False)
    finished: Optional[datetime] = field(default=None, compare=False)
    outputs: Tuple[str, ...] = ()  # file names, relative to the output directory

    @property
    def digest(self) -> str:
        payload = "\n".join(
            [self.command, str(self.seed), self.version, self.arguments, self.config_snapshot]
        )
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()

    @property
    def elapsed(self) -> Optional[float]:
        """Wall-clock seconds between start and finish."""
        if self.finished is None:
            return None
        return (self.finished - self.started).total_seconds()

    def finish(self, outputs: Tuple[str, ...]) -> "RunManifest":
        return replace(
            self, finished=_now(), outputs=tuple(Path(name).name for name in outputs)
        )

    def write(self, directory: Path) -> Path:
        path = Path(directory) / f"{self.command}_manifest.csv"
        rows = [
            ("command", self.command),
            ("version", self.version),
            ("seed", self.seed),
            ("arguments", self.arguments),
            ("outputs", ";".join(self.outputs)),
            ("config", self.config_snapshot.strip().replace("\n", "; ")),
        ]
        log.info(
            "%s started %s, finished %s",
            self.command,
            self.started.isoformat(),
            self.finished.isoformat() if self.finished else "-",
        )
        return write_csv(path, ["key", "value"], rows, self.digest)
