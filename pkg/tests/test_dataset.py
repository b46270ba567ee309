import hashlib
import io
import json

import numpy as np
import pytest

from matmotion.dataset import (
    FRAME_COUNT,
    HEADER_SIZE,
    PAYLOAD_SIZE,
    BadMagicError,
    Dataset,
    FrameCountError,
    ManifestError,
    PressureSnippet,
    SnippetFormatError,
    TruncatedPayloadError,
    UnsupportedVersionError,
    import_csv_manifest,
    load_dataset,
    read_snippet,
    read_snippet_csv,
    write_dataset,
    write_snippet,
)
from matmotion.synth import generate_synthetic, two_blob_spec


def snippet_bytes(snippet):
    buf = io.BytesIO()
    write_snippet(snippet, buf)
    return buf.getvalue()


class TestBinaryFormat:
    def test_zero_snippet_file_size(self, zero_snippet):
        # the format fixes the size: 32-byte header + 500*1024 payload
        data = snippet_bytes(zero_snippet)
        assert len(data) == 32 + 500 * 1024
        assert len(data) == HEADER_SIZE + PAYLOAD_SIZE

    def test_header_fields(self, zero_snippet):
        data = snippet_bytes(zero_snippet)
        assert data[:4] == b"PMAT"
        assert int.from_bytes(data[4:6], "little") == 1      # version
        assert int.from_bytes(data[6:8], "little") == 500    # frame count
        assert data[8] == 32 and data[9] == 32               # rows, cols
        assert data[10] == 0                                 # FM- label byte
        assert data[11:32] == b"\x00" * 21                   # reserved

    def test_label_byte_fm_plus(self, random_snippet):
        data = snippet_bytes(random_snippet(label="FM+"))
        assert data[10] == 1

    def test_round_trip(self, random_snippet, tmp_path):
        snip = random_snippet(seed=3)
        path = tmp_path / "s.pmat"
        write_snippet(snip, path)
        again = read_snippet(path, infant_id=snip.infant_id,
                             session=snip.session, snippet_id=snip.snippet_id)
        assert again == snip
        # byte-for-byte identical on re-serialization
        assert snippet_bytes(again) == path.read_bytes()

    def test_generator_output_reproducible(self, tmp_path):
        spec = two_blob_spec(seed=7, amplitude=1.5, noise_amplitude=2.0)
        digests = []
        for run in range(2):
            path = tmp_path / f"run{run}.pmat"
            write_snippet(generate_synthetic(spec), path)
            digests.append(hashlib.sha256(path.read_bytes()).hexdigest())
        assert digests[0] == digests[1]

    def test_bad_magic(self, zero_snippet):
        data = bytearray(snippet_bytes(zero_snippet))
        data[:4] = b"XXXX"
        with pytest.raises(BadMagicError):
            read_snippet(io.BytesIO(bytes(data)))

    def test_wrong_version(self, zero_snippet):
        data = bytearray(snippet_bytes(zero_snippet))
        data[4:6] = (99).to_bytes(2, "little")
        with pytest.raises(UnsupportedVersionError):
            read_snippet(io.BytesIO(bytes(data)))

    def test_truncated_payload(self, zero_snippet):
        data = snippet_bytes(zero_snippet)[:-100]
        with pytest.raises(TruncatedPayloadError):
            read_snippet(io.BytesIO(data))

    def test_wrong_frame_count(self, zero_snippet):
        data = bytearray(snippet_bytes(zero_snippet))
        data[6:8] = (400).to_bytes(2, "little")
        with pytest.raises(FrameCountError):
            read_snippet(io.BytesIO(bytes(data)))

    def test_error_types_are_distinct(self):
        kinds = {BadMagicError, UnsupportedVersionError, TruncatedPayloadError,
                 FrameCountError}
        assert len(kinds) == 4
        assert all(issubclass(k, SnippetFormatError) for k in kinds)


class TestSnippetInvariants:
    def test_shape_enforced(self):
        with pytest.raises(ValueError):
            PressureSnippet(frames=np.zeros((499, 32, 32), dtype=np.uint8),
                            label="FM+")

    def test_label_enforced(self):
        with pytest.raises(ValueError):
            PressureSnippet(frames=np.zeros((500, 32, 32), dtype=np.uint8),
                            label="maybe")

    def test_session_enforced(self):
        with pytest.raises(ValueError):
            PressureSnippet(frames=np.zeros((500, 32, 32), dtype=np.uint8),
                            label="FM+", session="T3")


def make_dataset_dir(tmp_path, n_infants=3, per_infant=2):
    snippets = []
    for i in range(n_infants):
        for k in range(per_infant):
            label = "FM+" if k % 2 else "FM-"
            session = "T5" if k % 2 else "T1"
            spec = two_blob_spec(seed=i * 10 + k, amplitude=1.0)
            snippets.append(generate_synthetic(
                spec, label=label, infant_id=f"inf{i:03d}", session=session,
                snippet_id=f"inf{i:03d}-s{k}"))
    ds = Dataset.in_memory(snippets)
    manifest = write_dataset(ds, tmp_path / "data")
    return manifest, snippets


class TestManifest:
    def test_empty_manifest(self, tmp_path):
        path = tmp_path / "manifest.json"
        path.write_text(json.dumps({"snippets": []}))
        ds = load_dataset(path)
        assert len(ds) == 0

    def test_load_and_counts(self, tmp_path):
        manifest, snippets = make_dataset_dir(tmp_path)
        ds = load_dataset(manifest)
        assert len(ds) == len(snippets)
        assert ds.label_counts() == {"FM+": 3, "FM-": 3}
        assert ds.infants() == ["inf000", "inf001", "inf002"]
        # lazy loading returns the exact snippet
        assert ds.snippet(0) == snippets[0]

    def test_duplicate_id_rejected(self, tmp_path):
        manifest, _ = make_dataset_dir(tmp_path)
        doc = json.loads(manifest.read_text())
        doc["snippets"].append(dict(doc["snippets"][0]))
        manifest.write_text(json.dumps(doc))
        with pytest.raises(ManifestError, match="duplicate"):
            load_dataset(manifest)

    def test_bad_label_rejected(self, tmp_path):
        manifest, _ = make_dataset_dir(tmp_path)
        doc = json.loads(manifest.read_text())
        doc["snippets"][0]["label"] = "FM?"
        manifest.write_text(json.dumps(doc))
        with pytest.raises(ManifestError, match="label"):
            load_dataset(manifest)

    def test_missing_file_rejected(self, tmp_path):
        manifest, _ = make_dataset_dir(tmp_path)
        doc = json.loads(manifest.read_text())
        doc["snippets"][0]["path"] = "nowhere.pmat"
        manifest.write_text(json.dumps(doc))
        with pytest.raises(ManifestError, match="not found"):
            load_dataset(manifest)

    def test_label_mismatch_rejected(self, tmp_path):
        manifest, _ = make_dataset_dir(tmp_path)
        doc = json.loads(manifest.read_text())
        entry = doc["snippets"][0]
        entry["label"] = "FM+" if entry["label"] == "FM-" else "FM-"
        manifest.write_text(json.dumps(doc))
        with pytest.raises(ManifestError, match="contradicts"):
            load_dataset(manifest)


class TestCsvImport:
    def write_csv(self, path, frames):
        rows = frames.reshape(FRAME_COUNT, -1)
        path.write_text("\n".join(",".join(str(v) for v in row) for row in rows))

    def test_round_trip(self, tmp_path, random_snippet):
        snip = random_snippet(seed=5)
        csv_path = tmp_path / "s.csv"
        self.write_csv(csv_path, snip.frames)
        frames = read_snippet_csv(csv_path)
        assert np.array_equal(frames, snip.frames)

    def test_malformed_row_named(self, tmp_path, zero_snippet):
        csv_path = tmp_path / "bad.csv"
        rows = zero_snippet.frames.reshape(FRAME_COUNT, -1).tolist()
        rows[41] = rows[41][:-1]  # row 42 loses one column
        csv_path.write_text("\n".join(",".join(map(str, r)) for r in rows))
        with pytest.raises(SnippetFormatError, match="row 42"):
            read_snippet_csv(csv_path)

    def test_import_to_canonical(self, tmp_path, random_snippet):
        snip = random_snippet(seed=9, label="FM-", session="T1")
        csv_path = tmp_path / "s.csv"
        self.write_csv(csv_path, snip.frames)
        src_manifest = tmp_path / "src.json"
        src_manifest.write_text(json.dumps({"snippets": [{
            "path": "s.csv", "infant_id": snip.infant_id, "session": "T1",
            "label": "FM-", "snippet_id": snip.snippet_id,
        }]}))
        out_manifest = import_csv_manifest(src_manifest, tmp_path / "canon")
        ds = load_dataset(out_manifest)
        assert np.array_equal(ds.snippet(0).frames, snip.frames)
