"""Snippet and dataset containers plus the on-disk formats.

A snippet is one labelled 5 s pressure-mat recording: 500 frames of a
32x32 unsigned 8-bit sensor grid sampled at 100 Hz, plus the identity of
the infant and lab session it came from.

Canonical binary layout (".pmat", little-endian):

    offset  size  field
    0       4     magic b"PMAT"
    4       2     format version, u16 (currently 1)
    6       2     frame count, u16 (500)
    8       1     rows, u8 (32)
    9       1     cols, u8 (32)
    10      1     label, u8 (0 = FM-, 1 = FM+)
    11      21    reserved, zero
    32      -     frame_count * rows * cols raw u8 values, frame-major,
                  row-major within a frame

Infant id, session and snippet id are manifest metadata, not part of the
binary payload; readers accept them as keyword arguments so a manifest
loader can inject them.
"""

from __future__ import annotations

import csv
import json
import struct
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

FRAME_COUNT = 500
GRID_ROWS = 32
GRID_COLS = 32
SAMPLING_HZ = 100.0

LABEL_FM_MINUS = "FM-"
LABEL_FM_PLUS = "FM+"
LABELS = (LABEL_FM_MINUS, LABEL_FM_PLUS)
SESSIONS = ("T1", "T5", "T6", "T7")

_MAGIC = b"PMAT"
_VERSION = 1
_HEADER = struct.Struct("<4sHHBBB21s")
HEADER_SIZE = _HEADER.size  # 32 bytes
PAYLOAD_SIZE = FRAME_COUNT * GRID_ROWS * GRID_COLS


class SnippetFormatError(ValueError):
    """Base error for malformed snippet files."""


class BadMagicError(SnippetFormatError):
    pass


class UnsupportedVersionError(SnippetFormatError):
    pass


class TruncatedPayloadError(SnippetFormatError):
    pass


class FrameCountError(SnippetFormatError):
    pass


class ManifestError(ValueError):
    """Raised for inconsistent or invalid dataset manifests."""


def label_to_int(label: str) -> int:
    if label == LABEL_FM_PLUS:
        return 1
    if label == LABEL_FM_MINUS:
        return 0
    raise ManifestError(f"unknown label {label!r}, expected one of {LABELS}")


def label_from_int(value: int) -> str:
    if value == 1:
        return LABEL_FM_PLUS
    if value == 0:
        return LABEL_FM_MINUS
    raise SnippetFormatError(f"label byte must be 0 or 1, got {value}")


@dataclass(frozen=True)
class PressureSnippet:
    """One labelled 500-frame recording of the 32x32 sensor grid."""

    frames: np.ndarray  # (500, 32, 32) uint8
    label: str
    infant_id: str = ""
    session: str | None = None
    snippet_id: str = ""

    def __post_init__(self):
        frames = np.asarray(self.frames, dtype=np.uint8)
        if frames.shape != (FRAME_COUNT, GRID_ROWS, GRID_COLS):
            raise ValueError(
                f"frames must have shape ({FRAME_COUNT}, {GRID_ROWS}, {GRID_COLS}), "
                f"got {frames.shape}"
            )
        frames = frames.copy()
        frames.setflags(write=False)
        object.__setattr__(self, "frames", frames)
        if self.label not in LABELS:
            raise ValueError(f"label must be one of {LABELS}, got {self.label!r}")
        if self.session is not None and self.session not in SESSIONS:
            raise ValueError(f"session must be one of {SESSIONS}, got {self.session!r}")

    @property
    def label_int(self) -> int:
        return label_to_int(self.label)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PressureSnippet):
            return NotImplemented
        return (
            self.label == other.label
            and self.infant_id == other.infant_id
            and self.session == other.session
            and self.snippet_id == other.snippet_id
            and np.array_equal(self.frames, other.frames)
        )


def write_snippet(snippet: PressureSnippet, sink) -> None:
    """Write the canonical binary form of `snippet` to a path or binary file."""
    header = _HEADER.pack(
        _MAGIC, _VERSION, FRAME_COUNT, GRID_ROWS, GRID_COLS,
        snippet.label_int, b"\x00" * 21,
    )
    payload = snippet.frames.tobytes(order="C")
    if hasattr(sink, "write"):
        sink.write(header)
        sink.write(payload)
    else:
        with open(sink, "wb") as fh:
            fh.write(header)
            fh.write(payload)


def read_snippet(source, *, infant_id: str = "", session: str | None = None,
                 snippet_id: str = "") -> PressureSnippet:
    """Read a canonical snippet file, validating header and payload length.

    Identity metadata is not stored in the file; callers holding a manifest
    pass it through the keyword arguments.
    """
    if hasattr(source, "read"):
        raw = source.read()
    else:
        raw = Path(source).read_bytes()
    if len(raw) < HEADER_SIZE:
        raise TruncatedPayloadError(
            f"file has {len(raw)} bytes, smaller than the {HEADER_SIZE}-byte header"
        )
    magic, version, frame_count, rows, cols, label_byte, _reserved = _HEADER.unpack(
        raw[:HEADER_SIZE]
    )
    if magic != _MAGIC:
        raise BadMagicError(f"bad magic {magic!r}, expected {_MAGIC!r}")
    if version != _VERSION:
        raise UnsupportedVersionError(f"unsupported format version {version}")
    if frame_count != FRAME_COUNT or rows != GRID_ROWS or cols != GRID_COLS:
        raise FrameCountError(
            f"header declares {frame_count} frames of {rows}x{cols}, "
            f"expected {FRAME_COUNT} of {GRID_ROWS}x{GRID_COLS}"
        )
    expected = HEADER_SIZE + PAYLOAD_SIZE
    if len(raw) != expected:
        raise TruncatedPayloadError(
            f"payload has {len(raw) - HEADER_SIZE} bytes, expected {PAYLOAD_SIZE}"
        )
    frames = np.frombuffer(raw, dtype=np.uint8, offset=HEADER_SIZE).reshape(
        FRAME_COUNT, GRID_ROWS, GRID_COLS
    )
    return PressureSnippet(
        frames=frames,
        label=label_from_int(label_byte),
        infant_id=infant_id,
        session=session,
        snippet_id=snippet_id,
    )


def read_snippet_csv(source) -> np.ndarray:
    """Parse the CSV interchange layout: 500 rows x 1024 integer columns.

    Each row is the row-major flattening of one frame; no header. Returns
    the (500, 32, 32) uint8 frame stack. Errors name the offending row.
    """
    if hasattr(source, "read"):
        lines = source.read().splitlines()
    else:
        lines = Path(source).read_text().splitlines()
    rows = [line for line in csv.reader(lines)]
    if len(rows) != FRAME_COUNT:
        raise SnippetFormatError(f"expected {FRAME_COUNT} CSV rows, got {len(rows)}")
    frames = np.empty((FRAME_COUNT, GRID_ROWS * GRID_COLS), dtype=np.uint8)
    for i, row in enumerate(rows):
        if len(row) != GRID_ROWS * GRID_COLS:
            raise SnippetFormatError(
                f"row {i + 1}: expected {GRID_ROWS * GRID_COLS} columns, got {len(row)}"
            )
        try:
            values = [int(cell) for cell in row]
        except ValueError as exc:
            raise SnippetFormatError(f"row {i + 1}: non-integer cell ({exc})") from exc
        if min(values) < 0 or max(values) > 255:
            raise SnippetFormatError(f"row {i + 1}: cell outside [0, 255]")
        frames[i] = values
    return frames.reshape(FRAME_COUNT, GRID_ROWS, GRID_COLS)


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    infant_id: str
    session: str
    label: str
    snippet_id: str


@dataclass
class Dataset:
    """An ordered snippet collection with verified manifest metadata.

    Frame payloads are loaded lazily through `snippet(i)` so a full-size
    dataset (1776 snippets, ~900 MB of frames) never has to sit in memory
    at once. Synthetic datasets may be constructed fully in memory.
    """

    entries: list[ManifestEntry]
    source: str | None = None
    _cache: dict[int, PressureSnippet] = field(default_factory=dict, repr=False)
    _base_dir: Path | None = None

    def __len__(self) -> int:
        return len(self.entries)

    def snippet(self, index: int) -> PressureSnippet:
        if index in self._cache:
            return self._cache[index]
        entry = self.entries[index]
        path = Path(entry.path)
        if self._base_dir is not None and not path.is_absolute():
            path = self._base_dir / path
        snip = read_snippet(
            path,
            infant_id=entry.infant_id,
            session=entry.session,
            snippet_id=entry.snippet_id,
        )
        return snip

    def snippets(self):
        for i in range(len(self)):
            yield self.snippet(i)

    @property
    def labels(self) -> np.ndarray:
        return np.array([label_to_int(e.label) for e in self.entries], dtype=int)

    @property
    def infant_ids(self) -> list[str]:
        return [e.infant_id for e in self.entries]

    def infants(self) -> list[str]:
        """Distinct infant ids in sorted order (order-independent)."""
        return sorted({e.infant_id for e in self.entries})

    def label_counts(self) -> dict[str, int]:
        counts = {LABEL_FM_PLUS: 0, LABEL_FM_MINUS: 0}
        for e in self.entries:
            counts[e.label] += 1
        return counts

    def session_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for e in self.entries:
            counts[e.session] = counts.get(e.session, 0) + 1
        return counts

    @classmethod
    def in_memory(cls, snippets: list[PressureSnippet], source: str | None = None
                  ) -> "Dataset":
        entries = []
        cache = {}
        seen = set()
        for i, snip in enumerate(snippets):
            if snip.snippet_id in seen:
                raise ManifestError(f"duplicate snippet_id {snip.snippet_id!r}")
            seen.add(snip.snippet_id)
            entries.append(ManifestEntry(
                path="", infant_id=snip.infant_id, session=snip.session or "T1",
                label=snip.label, snippet_id=snip.snippet_id,
            ))
            cache[i] = snip
        return cls(entries=entries, source=source, _cache=cache)


def load_dataset(manifest_path) -> Dataset:
    """Load and verify a manifest, checking every referenced file's header.

    Verification reads only the 32-byte header and the file size, so large
    datasets validate quickly. Rejects duplicate snippet ids, unknown
    labels/sessions, missing files, and label bytes that contradict the
    manifest.
    """
    manifest_path = Path(manifest_path)
    try:
        doc = json.loads(manifest_path.read_text())
    except FileNotFoundError as exc:
        raise ManifestError(f"manifest not found: {manifest_path}") from exc
    except json.JSONDecodeError as exc:
        raise ManifestError(f"manifest is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "snippets" not in doc:
        raise ManifestError('manifest must be an object with a "snippets" list')

    base_dir = manifest_path.parent
    entries: list[ManifestEntry] = []
    seen_ids: set[str] = set()
    for i, item in enumerate(doc["snippets"]):
        missing = [k for k in ("path", "infant_id", "session", "label", "snippet_id")
                   if k not in item]
        if missing:
            raise ManifestError(f"snippet entry {i} missing fields {missing}")
        entry = ManifestEntry(
            path=item["path"], infant_id=item["infant_id"], session=item["session"],
            label=item["label"], snippet_id=item["snippet_id"],
        )
        if entry.label not in LABELS:
            raise ManifestError(
                f"snippet {entry.snippet_id!r}: label {entry.label!r} "
                f"not in {LABELS}"
            )
        if entry.session not in SESSIONS:
            raise ManifestError(
                f"snippet {entry.snippet_id!r}: session {entry.session!r} "
                f"not in {SESSIONS}"
            )
        if entry.snippet_id in seen_ids:
            raise ManifestError(f"duplicate snippet_id {entry.snippet_id!r}")
        seen_ids.add(entry.snippet_id)

        path = Path(entry.path)
        if not path.is_absolute():
            path = base_dir / path
        if not path.is_file():
            raise ManifestError(f"snippet {entry.snippet_id!r}: file not found: {path}")
        _verify_header(path, entry)
        entries.append(entry)

    return Dataset(entries=entries, source=str(manifest_path), _base_dir=base_dir)


def _verify_header(path: Path, entry: ManifestEntry) -> None:
    with open(path, "rb") as fh:
        head = fh.read(HEADER_SIZE)
    if len(head) < HEADER_SIZE:
        raise TruncatedPayloadError(f"{path}: shorter than the header")
    magic, version, frame_count, rows, cols, label_byte, _ = _HEADER.unpack(head)
    if magic != _MAGIC:
        raise BadMagicError(f"{path}: bad magic {magic!r}")
    if version != _VERSION:
        raise UnsupportedVersionError(f"{path}: unsupported version {version}")
    if frame_count != FRAME_COUNT or rows != GRID_ROWS or cols != GRID_COLS:
        raise FrameCountError(f"{path}: unexpected geometry in header")
    size = path.stat().st_size
    if size != HEADER_SIZE + PAYLOAD_SIZE:
        raise TruncatedPayloadError(
            f"{path}: {size} bytes on disk, expected {HEADER_SIZE + PAYLOAD_SIZE}"
        )
    if label_from_int(label_byte) != entry.label:
        raise ManifestError(
            f"{path}: file label {label_from_int(label_byte)} contradicts "
            f"manifest label {entry.label}"
        )


def save_manifest(entries: list[ManifestEntry], path) -> None:
    doc = {"snippets": [vars(e) for e in entries]}
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def write_dataset(dataset: Dataset, out_dir, manifest_name: str = "manifest.json"
                  ) -> Path:
    """Materialize a dataset as .pmat files plus a manifest; returns manifest path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for i in range(len(dataset)):
        snip = dataset.snippet(i)
        fname = f"{snip.snippet_id}.pmat"
        write_snippet(snip, out_dir / fname)
        entries.append(replace(dataset.entries[i], path=fname))
    manifest_path = out_dir / manifest_name
    save_manifest(entries, manifest_path)
    return manifest_path


def import_csv_manifest(source_manifest, out_dir) -> Path:
    """Convert a manifest whose paths point at CSV frame dumps into the
    canonical layout (.pmat files plus manifest) under `out_dir`."""
    source_manifest = Path(source_manifest)
    doc = json.loads(source_manifest.read_text())
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    seen = set()
    for item in doc["snippets"]:
        sid = item["snippet_id"]
        if sid in seen:
            raise ManifestError(f"duplicate snippet_id {sid!r}")
        seen.add(sid)
        src = Path(item["path"])
        if not src.is_absolute():
            src = source_manifest.parent / src
        try:
            frames = read_snippet_csv(src)
        except SnippetFormatError as exc:
            raise SnippetFormatError(f"{src}: {exc}") from exc
        snip = PressureSnippet(
            frames=frames, label=item["label"], infant_id=item["infant_id"],
            session=item["session"], snippet_id=sid,
        )
        fname = f"{sid}.pmat"
        write_snippet(snip, out_dir / fname)
        entries.append(ManifestEntry(
            path=fname, infant_id=snip.infant_id, session=snip.session,
            label=snip.label, snippet_id=sid,
        ))
    manifest_path = out_dir / "manifest.json"
    save_manifest(entries, manifest_path)
    return manifest_path
