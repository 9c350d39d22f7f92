import json
import subprocess
import sys
from pathlib import Path

import pytest

REPO_ROOT = Path(__file__).resolve().parents[2]
VECTOR_SCRIPT = REPO_ROOT / "scripts" / "gen_protocol_vectors.py"


@pytest.fixture(scope="session")
def generate_vectors():
    """Conformance vectors produced by the primary component's generator."""

    def gen(kind: str) -> dict:
        proc = subprocess.run(
            [sys.executable, str(VECTOR_SCRIPT), kind],
            capture_output=True,
            text=True,
            check=True,
        )
        return json.loads(proc.stdout)

    return gen


class AdapterProcess:
    """A running adapter child plus line-level send/expect helpers."""

    def __init__(self, *args: str):
        self.proc = subprocess.Popen(
            [sys.executable, "-m", "oracle_adapter", *args],
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            bufsize=1,
        )

    def send(self, line: str) -> None:
        self.proc.stdin.write(line + "\n")
        self.proc.stdin.flush()

    def recv(self) -> str:
        return self.proc.stdout.readline().rstrip("\n")

    def close(self) -> int:
        if self.proc.stdin and not self.proc.stdin.closed:
            self.proc.stdin.close()
        return self.proc.wait(timeout=10)

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        try:
            self.close()
        except Exception:
            self.proc.kill()


@pytest.fixture
def adapter():
    return AdapterProcess
