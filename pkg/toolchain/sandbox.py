"""Per-stage scratch workspaces and timed subprocess execution."""

import logging
import shutil
import subprocess
import tempfile
import uuid
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path

from .exceptions import StageTimeout

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Workspace:
    id: str
    path: Path

    def write(self, name, text):
        target = self.path / name
        target.write_text(text)
        return target


@dataclass(frozen=True)
class CommandResult:
    returncode: int
    stdout: str
    stderr: str

    @property
    def output(self):
        return '\n'.join(part for part in (self.stdout, self.stderr) if part)


@contextmanager
def workspace(stage, root=None):
    """Fresh directory for one stage, removed on exit whatever happens."""
    ws_id = uuid.uuid4().hex
    path = Path(tempfile.mkdtemp(prefix=f"chipforge-{stage}-{ws_id[:8]}-", dir=root or None))
    try:
        yield Workspace(ws_id, path)
    finally:
        shutil.rmtree(path, ignore_errors=True)


def run_command(args, cwd, stage, timeout):
    """Run one tool invocation with captured output; TimeoutExpired becomes StageTimeout."""
    logger.debug(f"[{stage}] {' '.join(str(a) for a in args)}")
    try:
        proc = subprocess.run(
            [str(a) for a in args],
            cwd=cwd,
            capture_output=True,
            text=True,
            timeout=timeout,
        )
    except subprocess.TimeoutExpired:
        raise StageTimeout(stage, timeout) from None
    return CommandResult(proc.returncode, proc.stdout or '', proc.stderr or '')
