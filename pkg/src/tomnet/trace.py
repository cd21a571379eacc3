"""Line-delimited structured trace log.

Records are plain dicts with a stable field order ("kind" first, then
"tick", then whatever the emitter passed), serialized one JSON object
per line so runs can be compared byte-for-byte against golden files.
"""

from __future__ import annotations

import json
from typing import Any


class Trace:
    def __init__(self, clock=None):
        self.records: list[dict] = []
        self._clock = clock

    def emit(self, kind: str, **fields: Any) -> dict:
        record: dict[str, Any] = {"kind": kind}
        if self._clock is not None:
            record["tick"] = self._clock.now
        record.update(fields)
        self.records.append(record)
        return record

    def filter(self, kind: str | None = None, **match: Any) -> list[dict]:
        out = []
        for r in self.records:
            if kind is not None and r.get("kind") != kind:
                continue
            if all(r.get(k) == v for k, v in match.items()):
                out.append(r)
        return out

    def to_jsonl(self) -> str:
        return "".join(json.dumps(r, separators=(",", ":")) + "\n" for r in self.records)

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_jsonl())


def read_jsonl(path) -> list[dict]:
    with open(path, "r", encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]
