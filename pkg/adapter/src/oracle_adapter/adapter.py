"""Child-process side of the JSON-lines oracle protocol.

The parent drives the session over stdin/stdout:

    parent -> {"hello":{"n_features":N}}
    child  -> {"ready":true,"n_features":N}
    parent -> {"id":k,"x":[b0,...,bN-1]}      # ids strictly increasing, >= 0
    child  -> {"id":k,"y":0|1}                # strictly in request order

Replies are compact JSON (no spaces, keys in the order shown above) so
conformance can be checked byte for byte. A model exception produces a
per-request {"id":k,"error":...} line and the loop continues; a malformed
request is a protocol error: one diagnostic line, then a nonzero exit.
EOF on stdin ends the session cleanly.
"""

from __future__ import annotations

import importlib
import json
import pickle
import sys
from dataclasses import dataclass
from typing import Callable


@dataclass
class AdapterConfig:
    n_features: int
    callable_path: str | None = None  # "package.module:attribute"
    model_file: str | None = None  # pickle of a callable or .predict object
    binarize_threshold: float | None = None  # applied to raw model scores

    def __post_init__(self):
        if self.n_features < 1:
            raise ValueError("n_features must be positive")
        if (self.callable_path is None) == (self.model_file is None):
            raise ValueError("exactly one of callable_path / model_file is required")


def load_predictor(config: AdapterConfig) -> Callable:
    if config.callable_path is not None:
        path = config.callable_path
        if ":" in path:
            module_name, attr = path.split(":", 1)
        else:
            module_name, _, attr = path.rpartition(".")
        if not module_name:
            raise ValueError(f"cannot split {path!r} into module and attribute")
        fn = getattr(importlib.import_module(module_name), attr)
    else:
        with open(config.model_file, "rb") as f:
            fn = pickle.load(f)
    if not callable(fn) and hasattr(fn, "predict"):
        fn = fn.predict  # sklearn-style predictor object
    if not callable(fn):
        raise ValueError("model source does not provide a callable")
    return fn


def _compact(obj) -> str:
    return json.dumps(obj, separators=(",", ":"))


def _binarize(raw, threshold: float | None) -> int:
    if threshold is not None:
        return 1 if float(raw) >= threshold else 0
    if isinstance(raw, bool):
        return int(raw)
    if isinstance(raw, (int, float)) and raw in (0, 1):
        return int(raw)
    raise ValueError(f"predictor returned non-binary value {raw!r}")


def serve(config: AdapterConfig, stdin=None, stdout=None) -> int:
    """Run the request loop; returns the process exit code."""
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    predictor = load_predictor(config)

    def emit(obj) -> None:
        stdout.write(_compact(obj) + "\n")
        stdout.flush()

    def protocol_error(message: str) -> int:
        emit({"protocol_error": message})
        return 1

    line = stdin.readline()
    if not line:
        return 0  # parent went away before the handshake
    try:
        msg = json.loads(line)
        n = msg["hello"]["n_features"]
    except (json.JSONDecodeError, TypeError, KeyError):
        return protocol_error(f"expected a hello handshake, got {line.strip()!r}")
    if n != config.n_features:
        return protocol_error(
            f"handshake wants {n} features, adapter serves {config.n_features}"
        )
    emit({"ready": True, "n_features": config.n_features})

    last_id = -1
    for line in stdin:
        if not line.strip():
            continue
        try:
            msg = json.loads(line)
        except json.JSONDecodeError:
            return protocol_error(f"request is not JSON: {line.strip()!r}")
        if not isinstance(msg, dict) or "id" not in msg or "x" not in msg:
            return protocol_error(f"request must carry id and x: {line.strip()!r}")
        rid, x = msg["id"], msg["x"]
        if not isinstance(rid, int) or rid <= last_id or rid < 0:
            return protocol_error(f"ids must be strictly increasing, got {rid!r}")
        last_id = rid
        if (
            not isinstance(x, list)
            or len(x) != config.n_features
            or any(b not in (0, 1) for b in x)
        ):
            return protocol_error(f"x must be a list of {config.n_features} bits")
        try:
            raw = predictor(x)
            y = _binarize(raw, config.binarize_threshold)
        except Exception as e:  # model failure is per-request, not fatal
            emit({"id": rid, "error": str(e) or type(e).__name__})
            continue
        emit({"id": rid, "y": y})
    return 0
