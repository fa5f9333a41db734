"""
On-disk formats: binary feature files, annotation JSON, dataset manifest CSV and JSON-lines records.
"""
import json
import logging
import struct
from pathlib import Path
from typing import Iterable, List, Type, TypeVar

import numpy as np
import pandas as pd
from pydantic import BaseModel

from src.errors import FormatError
from src.models import AnnotationRecord
from .types import FeaturePair

logger = logging.getLogger(__name__)

FEATURE_MAGIC = b"AVRF"
FEATURE_VERSION = 1
# magic, version, t, d, fps
FEATURE_HEADER = struct.Struct("<4sIIIf")
MANIFEST_COLUMNS = ["feature_path", "annotation_path", "split"]

RecordT = TypeVar("RecordT", bound=BaseModel)


class BinaryReader:
    """Sequential reader over a byte buffer that reports truncation with offsets."""

    def __init__(self, buffer: bytes, path: str = ""):
        self.buffer = buffer
        self.path = path
        self.offset = 0

    def take(self, size: int, what: str) -> bytes:
        available = len(self.buffer) - self.offset
        if available < size:
            raise FormatError(
                f"truncated {what}", path=self.path, offset=self.offset, missing=size - available
            )
        chunk = self.buffer[self.offset:self.offset + size]
        self.offset += size
        return chunk

    def unpack(self, layout: struct.Struct, what: str) -> tuple:
        return layout.unpack(self.take(layout.size, what))

    def floats(self, count: int, what: str) -> np.ndarray:
        raw = self.take(4 * count, what)
        return np.frombuffer(raw, dtype="<f4", count=count)

    def expect_end(self) -> None:
        if self.offset != len(self.buffer):
            raise FormatError(
                f"{len(self.buffer) - self.offset} trailing bytes", path=self.path, offset=self.offset
            )


def write_features(path: str, features: FeaturePair) -> None:
    """Write x_v then x_a as little-endian float32 after a fixed header."""
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    t, d = features.x_v.shape
    with open(path, "wb") as fh:
        fh.write(FEATURE_HEADER.pack(FEATURE_MAGIC, FEATURE_VERSION, t, d, features.fps))
        fh.write(np.ascontiguousarray(features.x_v, dtype="<f4").tobytes())
        fh.write(np.ascontiguousarray(features.x_a, dtype="<f4").tobytes())


def read_features(path: str, video_id: str = "") -> FeaturePair:
    """Read a feature file; values come back as float64 arrays.

    Raises:
        FormatError: bad magic, unsupported version or truncated payload
    """
    try:
        buffer = Path(path).read_bytes()
    except OSError as exc:
        raise FormatError(f"cannot read feature file: {exc}", path=path) from exc
    reader = BinaryReader(buffer, str(path))
    magic, version, t, d, fps = reader.unpack(FEATURE_HEADER, "feature header")
    if magic != FEATURE_MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {FEATURE_MAGIC!r}", path=path, offset=0)
    if version != FEATURE_VERSION:
        raise FormatError(f"unsupported feature version {version}", path=path, offset=4)
    x_v = reader.floats(t * d, "visual features").reshape(t, d)
    x_a = reader.floats(t * d, "audio features").reshape(t, d)
    reader.expect_end()
    return FeaturePair(
        x_v=x_v.astype(np.float64),
        x_a=x_a.astype(np.float64),
        fps=float(np.float32(fps)),
        video_id=video_id or Path(path).stem,
    )


def write_annotation(path: str, record: AnnotationRecord) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json.dumps(record.model_dump(mode="json"), indent=2, sort_keys=True))


def read_annotation(path: str) -> AnnotationRecord:
    try:
        return AnnotationRecord.model_validate_json(Path(path).read_text())
    except OSError as exc:
        raise FormatError(f"cannot read annotation: {exc}", path=path) from exc
    except ValueError as exc:
        raise FormatError(f"invalid annotation: {exc}", path=path) from exc


def write_manifest(path: str, rows: pd.DataFrame) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    rows[MANIFEST_COLUMNS].to_csv(path, index=False)


def read_manifest(path: str) -> pd.DataFrame:
    """Load a manifest; relative paths are resolved against the manifest's directory."""
    try:
        rows = pd.read_csv(path, dtype=str)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise FormatError(f"cannot read manifest: {exc}", path=path) from exc
    missing = [c for c in MANIFEST_COLUMNS if c not in rows.columns]
    if missing:
        raise FormatError(f"manifest lacks columns {missing}", path=path)
    base = Path(path).parent
    for column in ("feature_path", "annotation_path"):
        rows[column] = [str(p) if Path(p).is_absolute() else str(base / p) for p in rows[column]]
    return rows


def write_jsonl(path: str, records: Iterable[BaseModel]) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        for record in records:
            fh.write(json.dumps(record.model_dump(mode="json"), sort_keys=True) + "\n")


def read_jsonl(path: str, model: Type[RecordT]) -> List[RecordT]:
    records = []
    try:
        with open(path) as fh:
            for number, line in enumerate(fh, start=1):
                if line.strip():
                    try:
                        records.append(model.model_validate_json(line))
                    except ValueError as exc:
                        raise FormatError(f"line {number}: {exc}", path=path) from exc
    except OSError as exc:
        raise FormatError(f"cannot read {model.__name__} records: {exc}", path=path) from exc
    return records
