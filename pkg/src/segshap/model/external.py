"""Client for pre-trained classifiers running in a child process.

The child speaks line-delimited JSON on stdin/stdout, one response line per
request line::

    -> {"op": "info"}
    <- {"classes": [...], "n_channels": int, "length": int}
    -> {"op": "predict_proba", "instances": [[[float, ...], ...], ...]}
    <- {"proba": [[float, ...], ...]}

Any request may instead be answered with ``{"error": "<message>"}``.
"""

from __future__ import annotations

import json
import shlex
import subprocess
import threading

import numpy as np

from ..errors import ExternalProtocolError, HandshakeFailure, ProcessExit, ProtocolViolation
from .base import Classifier

PROBA_TOLERANCE = 1e-6


class ExternalClassifier(Classifier):
    name = "external"

    def __init__(self, command, timeout: float | None = None):
        argv = shlex.split(command) if isinstance(command, str) else list(command)
        if not argv:
            raise HandshakeFailure("empty external classifier command")
        self.command = argv
        self._lock = threading.Lock()
        try:
            self._proc = subprocess.Popen(
                argv,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        except OSError as exc:
            raise HandshakeFailure(f"cannot launch {argv[0]!r}: {exc}") from exc
        try:
            info = self._request({"op": "info"})
        except ExternalProtocolError as exc:
            self.close()
            raise HandshakeFailure(f"info handshake failed: {exc}") from exc
        try:
            classes = [str(c) for c in info["classes"]]
            d, L = int(info["n_channels"]), int(info["length"])
        except (KeyError, TypeError, ValueError) as exc:
            self.close()
            raise HandshakeFailure(f"malformed info reply: {info!r}") from exc
        if len(classes) < 1 or d < 1 or L < 1:
            self.close()
            raise HandshakeFailure(f"degenerate info reply: {info!r}")
        super().__init__(classes, d, L)

    def _request(self, payload: dict) -> dict:
        with self._lock:
            if self._proc.poll() is not None:
                raise ProcessExit(f"external classifier exited with code {self._proc.returncode}")
            try:
                self._proc.stdin.write(json.dumps(payload) + "\n")
                self._proc.stdin.flush()
                line = self._proc.stdout.readline()
            except (BrokenPipeError, OSError) as exc:
                raise ProcessExit(f"external classifier pipe closed: {exc}") from exc
        if not line:
            code = self._proc.wait()
            raise ProcessExit(f"external classifier exited with code {code}")
        try:
            reply = json.loads(line)
        except json.JSONDecodeError:
            raise ProtocolViolation(f"non-JSON reply: {line[:80]!r}") from None
        if not isinstance(reply, dict):
            raise ProtocolViolation(f"reply is not a JSON object: {line[:80]!r}")
        if "error" in reply:
            raise ExternalProtocolError(str(reply["error"]))
        return reply

    def _predict_proba(self, X):
        reply = self._request({"op": "predict_proba", "instances": X.tolist()})
        try:
            proba = np.asarray(reply["proba"], dtype=np.float64)
        except (KeyError, TypeError, ValueError):
            raise ProtocolViolation("reply lacks a numeric 'proba' matrix") from None
        if proba.shape != (X.shape[0], self.n_classes):
            raise ProtocolViolation(
                f"expected proba of shape {(X.shape[0], self.n_classes)}, got {proba.shape}"
            )
        if not np.all(np.isfinite(proba)) or np.any(proba < 0):
            raise ProtocolViolation("probabilities must be finite and non-negative")
        if np.any(np.abs(proba.sum(axis=1) - 1.0) > PROBA_TOLERANCE):
            raise ProtocolViolation("probability rows must sum to 1")
        return proba

    def close(self):
        proc = getattr(self, "_proc", None)
        if proc is None or proc.poll() is not None:
            return
        try:
            proc.stdin.close()
            proc.wait(timeout=5)
        except (OSError, subprocess.TimeoutExpired):
            proc.kill()
            proc.wait()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def __del__(self):
        try:
            self.close()
        except Exception:
            pass


def connect_external(command) -> ExternalClassifier:
    return ExternalClassifier(command)
