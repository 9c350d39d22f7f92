"""Black-box prediction interfaces.

Builtin oracles (truth table, threshold-on-a-pixel-set) support exhaustive
desk-scale verification; :class:`ExternalProcessOracle` speaks a JSON-lines
protocol to an arbitrary child process so real models can stand behind the
same ``predict`` contract.

Wire protocol (newline-delimited JSON over the child's stdin/stdout):

    parent -> {"hello":{"n_features":N}}
    child  -> {"ready":true,"n_features":N}
    parent -> {"id":k,"x":[b0,...,bN-1]}      # ids strictly increasing from 0
    child  -> {"id":k,"y":0|1}                # in request order

Any other child output line is a protocol violation.
"""

from __future__ import annotations

import json
import queue
import subprocess
import threading
from dataclasses import dataclass
from typing import Sequence

from .core import Instance, Label, check_label

DEFAULT_CALL_TIMEOUT = 10.0


class OracleError(RuntimeError):
    def __init__(self, message: str, request_id: int | None = None):
        if request_id is not None:
            message = f"request {request_id}: {message}"
        super().__init__(message)
        self.request_id = request_id


class Oracle:
    """Deterministic binary decision function over n binary features."""

    n_features: int

    def predict(self, x: Instance) -> Label:
        raise NotImplementedError

    def predict_batch(self, xs: Sequence[Instance]) -> list[Label]:
        """Elementwise ``predict``, order preserved."""
        for x in xs:
            if x.n != self.n_features:
                raise OracleError(f"instance has {x.n} features, oracle expects {self.n_features}")
        return [self.predict(x) for x in xs]

    def _check(self, x: Instance) -> None:
        if x.n != self.n_features:
            raise OracleError(f"instance has {x.n} features, oracle expects {self.n_features}")


@dataclass
class TruthTableOracle(Oracle):
    """Explicit truth table over n <= 20 features.

    Index convention: feature 0 is the most significant bit, so the table
    reads left-to-right as inputs 00..0, 00..1, ..., 11..1.
    """

    n_features: int
    table: tuple[int, ...]

    def __post_init__(self):
        if self.n_features > 20:
            raise ValueError("truth tables are only permitted for n <= 20")
        if len(self.table) != 2**self.n_features:
            raise ValueError(
                f"table length {len(self.table)} != 2^{self.n_features}"
            )
        self.table = tuple(check_label(v) for v in self.table)

    def predict(self, x: Instance) -> Label:
        self._check(x)
        idx = 0
        for v in x.values:
            idx = (idx << 1) | v
        return self.table[idx]


@dataclass
class ThresholdOracle(Oracle):
    """Predicts 1 iff at least k of the pixels in S are on."""

    n_features: int
    pixels: frozenset[int]
    k: int

    def __post_init__(self):
        self.pixels = frozenset(self.pixels)
        if any(p < 0 or p >= self.n_features for p in self.pixels):
            raise ValueError("pixel indices out of range")
        if not 0 <= self.k <= len(self.pixels):
            raise ValueError(f"threshold k={self.k} outside 0..{len(self.pixels)}")

    def predict(self, x: Instance) -> Label:
        self._check(x)
        return 1 if sum(x.values[p] for p in self.pixels) >= self.k else 0


class ExternalProcessOracle(Oracle):
    """Single-owner session speaking the JSON-lines protocol to a child process."""

    def __init__(self, command: list[str] | str, n_features: int,
                 call_timeout: float = DEFAULT_CALL_TIMEOUT):
        import shlex

        self.n_features = n_features
        self.call_timeout = call_timeout
        self._next_id = 0
        argv = shlex.split(command) if isinstance(command, str) else list(command)
        self._proc = subprocess.Popen(
            argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE, text=True, bufsize=1
        )
        self._lines: queue.Queue[str | None] = queue.Queue()
        self._reader = threading.Thread(target=self._pump, daemon=True)
        self._reader.start()
        self._send({"hello": {"n_features": n_features}})
        reply = self._recv(None)
        if reply.get("ready") is not True or reply.get("n_features") != n_features:
            self.close()
            raise OracleError(f"bad handshake reply: {reply!r}")

    def _pump(self):
        assert self._proc.stdout is not None
        for line in self._proc.stdout:
            self._lines.put(line)
        self._lines.put(None)

    def _send(self, obj) -> None:
        assert self._proc.stdin is not None
        try:
            self._proc.stdin.write(json.dumps(obj, separators=(",", ":")) + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, ValueError) as e:
            raise OracleError(f"oracle process not accepting input: {e}") from None

    def _recv(self, request_id: int | None) -> dict:
        try:
            line = self._lines.get(timeout=self.call_timeout)
        except queue.Empty:
            raise OracleError("timed out waiting for reply", request_id) from None
        if line is None:
            raise OracleError(
                f"oracle process exited (code {self._proc.poll()})", request_id
            )
        try:
            obj = json.loads(line)
        except json.JSONDecodeError:
            raise OracleError(f"non-JSON output line {line!r}", request_id) from None
        if not isinstance(obj, dict):
            raise OracleError(f"unexpected output {obj!r}", request_id)
        return obj

    def predict(self, x: Instance) -> Label:
        self._check(x)
        rid = self._next_id
        self._next_id += 1
        self._send({"id": rid, "x": list(x.values)})
        reply = self._recv(rid)
        if "error" in reply:
            raise OracleError(f"model error: {reply['error']}", rid)
        if reply.get("id") != rid:
            raise OracleError(f"out-of-order reply {reply!r}", rid)
        y = reply.get("y")
        if y not in (0, 1):
            raise OracleError(f"non-binary prediction {y!r}", rid)
        return y

    def predict_batch(self, xs: Sequence[Instance]) -> list[Label]:
        out = []
        for i, x in enumerate(xs):
            try:
                out.append(self.predict(x))
            except OracleError as e:
                raise OracleError(f"batch aborted at index {i}: {e}", e.request_id) from None
        return out

    def close(self) -> None:
        if self._proc.stdin:
            try:
                self._proc.stdin.close()
            except OSError:
                pass
        try:
            self._proc.wait(timeout=5)
        except subprocess.TimeoutExpired:
            self._proc.kill()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


@dataclass
class OracleSpec:
    """Declarative oracle configuration, JSON/CLI friendly."""

    kind: str  # "truth-table" | "threshold" | "external"
    n_features: int
    table: str | None = None
    pixels: tuple[int, ...] = ()
    k: int = 0
    command: str | None = None
    call_timeout: float = DEFAULT_CALL_TIMEOUT

    def build(self) -> Oracle:
        if self.kind == "truth-table":
            if self.table is None:
                raise ValueError("truth-table oracle needs a table")
            oracle = TruthTableOracle(
                self.n_features, tuple(int(c) for c in self.table)
            )
        elif self.kind == "threshold":
            oracle = ThresholdOracle(self.n_features, frozenset(self.pixels), self.k)
        elif self.kind == "external":
            if not self.command:
                raise ValueError("external oracle needs a command")
            oracle = ExternalProcessOracle(
                self.command, self.n_features, self.call_timeout
            )
        else:
            raise ValueError(f"unknown oracle kind {self.kind!r}")
        return oracle


def protocol_vectors(oracle: Oracle, inputs: Sequence[Instance]) -> list[dict]:
    """Byte-exact conformance steps for an adapter serving this oracle.

    Each input is queried twice (determinism check). Lines are exact strings
    without the trailing newline; replies use compact JSON with ``id`` before
    ``y`` (``ready`` before ``n_features`` in the handshake).
    """
    steps = [
        {
            "send": json.dumps(
                {"hello": {"n_features": oracle.n_features}}, separators=(",", ":")
            ),
            "expect": json.dumps(
                {"ready": True, "n_features": oracle.n_features},
                separators=(",", ":"),
            ),
        }
    ]
    rid = 0
    for x in inputs:
        y = oracle.predict(x)
        for _ in range(2):
            steps.append(
                {
                    "send": json.dumps(
                        {"id": rid, "x": list(x.values)}, separators=(",", ":")
                    ),
                    "expect": json.dumps(
                        {"id": rid, "y": int(y)}, separators=(",", ":")
                    ),
                }
            )
            rid += 1
    return steps
