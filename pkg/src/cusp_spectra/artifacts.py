"""
Run artifacts: manifest, canonical hashing and atomic file output.

Result files are written to a temporary sibling and moved into place with
``os.replace`` so a failing command never leaves a partial file behind.
"""
from __future__ import annotations

import hashlib
import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Iterable, Iterator, List, Optional, Sequence, Union

import numpy as np

from ._version import __version__

PathLike = Union[str, Path]


def format_float(x: float) -> str:
    """17 significant digits, enough for a bit-exact round trip."""
    return "%.17g" % x


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return _jsonable(float(obj))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, float) and not math.isfinite(obj):
        return "inf" if obj > 0 else ("-inf" if obj < 0 else "nan")
    return obj


def canonical_json_bytes(obj: Any) -> bytes:
    return json.dumps(_jsonable(obj), sort_keys=True, separators=(",", ":"), ensure_ascii=True).encode()


def sha256_bytes(b: bytes) -> str:
    return hashlib.sha256(b).hexdigest()


def config_hash(config: Dict[str, Any]) -> str:
    """sha256 of the canonical JSON form of a config dict."""
    return sha256_bytes(canonical_json_bytes(config))


def atomic_write_text(path: PathLike, text: str) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{target.name}.", suffix=".tmp", dir=str(target.parent))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return target


class ResultEncoder(json.JSONEncoder):
    """JSON encoder writing floats with ``format_float``, as the CSV cells are."""

    def iterencode(self, o: Any, _one_shot: bool = False) -> Iterator[str]:
        if self.ensure_ascii:
            encoder = json.encoder.py_encode_basestring_ascii
        else:
            encoder = json.encoder.py_encode_basestring
        # the pure-Python encoder is the only one taking a float formatter
        chunks = json.encoder._make_iterencode(  # type: ignore[attr-defined]
            {} if self.check_circular else None,
            self.default,
            encoder,
            self.indent,
            format_float,
            self.key_separator,
            self.item_separator,
            self.sort_keys,
            self.skipkeys,
            _one_shot,
        )
        return chunks(o, 0)  # type: ignore[no-any-return]


def result_json_text(obj: Any) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True, cls=ResultEncoder) + "\n"


def atomic_write_json(path: PathLike, obj: Any) -> Path:
    return atomic_write_text(path, result_json_text(obj))


def csv_text(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    lines = [",".join(header)]
    for row in rows:
        cells = []
        for value in row:
            if isinstance(value, bool) or isinstance(value, np.bool_):
                cells.append("true" if value else "false")
            elif isinstance(value, (float, np.floating)):
                cells.append(format_float(float(value)))
            elif value is None:
                cells.append("")
            else:
                cells.append(str(value))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def atomic_write_csv(path: PathLike, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    return atomic_write_text(path, csv_text(header, rows))


def utc_now() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass
class RunManifest:
    """Provenance record written next to every primary result file."""

    command: str
    config: Dict[str, Any]
    tool_version: str = __version__
    started: str = field(default_factory=utc_now)
    finished: Optional[str] = None
    input_hash: str = ""
    results: List[str] = field(default_factory=list)
    timings: Dict[str, Any] = field(default_factory=dict)
    status: str = "running"

    def __post_init__(self) -> None:
        if not self.input_hash:
            self.input_hash = config_hash(self.config)

    def add_result(self, path: PathLike) -> None:
        self.results.append(Path(path).name)

    def finish(self, status: str = "ok") -> None:
        self.status = status
        self.finished = utc_now()

    def to_dict(self) -> Dict[str, Any]:
        return {
            "command": self.command,
            "config": self.config,
            "tool_version": self.tool_version,
            "started": self.started,
            "finished": self.finished,
            "input_hash": self.input_hash,
            "results": sorted(self.results),
            "timings": self.timings,
            "status": self.status,
        }

    def write(self, out_dir: PathLike) -> Path:
        return atomic_write_json(Path(out_dir) / "manifest.json", self.to_dict())
