"""File-backed session store: the persistence half of the telecare service.

Layout: one directory per session under the store root,

    <root>/<session_id>/
        session.json        metadata, annotations, per-file checksums
        signals.csv         t,c1..cN,ppg,pressure rows
        thermal_<i>_<region>.txt(.json)   ASCII matrices + ROI sidecars
        analysis.json       cached analysis payload (once computed)
        ground_truth.json   simulator sidecar for synthetic sessions

Durability: every mutation writes to a temporary name in the store root and
renames it into place, so a crash mid-write leaves the previous state
intact. Data files carry sha256 checksums in session.json; a mismatch on
load raises CorruptRecord. Writes are serialized per session id; reads are
lock-free.
"""

from __future__ import annotations

import hashlib
import json
import os
import shutil
import tempfile
import threading
import time

from .errors import (
    AnalysisFailure,
    CorruptRecord,
    DuplicateId,
    EmptyAnnotation,
    NotFound,
    StorageFailure,
    TelecareError,
)
from .pulse_analysis import extract_pulse_features, features_to_json_dict
from .session import (
    Annotation,
    MmqResult,
    Participant,
    RoiFrames,
    SessionRecord,
)
from .signal_core import AcquisitionSpec, read_signals_csv, write_signals_csv
from .thermal_features import (
    Roi,
    dry_wet_features,
    read_thermal_frame,
    warm_cold_features,
    write_thermal_frame,
)

STORE_VERSION = "1"
_TMP_PREFIX = ".tmp-"


def canonical_json(obj) -> str:
    """Deterministic serialization used for analysis payloads and checksum
    comparisons."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def _sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _dump_json(path, obj) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(obj, f, indent=2, sort_keys=True)
        f.write("\n")


class SessionStore:
    """Desk-scale session store rooted at a directory."""

    def __init__(self, root, sensor_layout=None):
        self.root = str(root)
        os.makedirs(self.root, exist_ok=True)
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()
        self._sensor_layout = sensor_layout

    def _lock_for(self, session_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(session_id, threading.Lock())

    def _dir_for(self, session_id: str) -> str:
        return os.path.join(self.root, session_id)

    # --- write path --------------------------------------------------------

    def save_session(self, record: SessionRecord) -> str:
        """Persist a new session atomically; returns its id."""
        final_dir = self._dir_for(record.id)
        lock = self._lock_for(record.id)
        with lock:
            if os.path.isdir(final_dir):
                raise DuplicateId(f"session {record.id!r} already stored")
            tmp_dir = tempfile.mkdtemp(prefix=_TMP_PREFIX, dir=self.root)
            try:
                self._write_session_files(tmp_dir, record)
                os.replace(tmp_dir, final_dir)
            except TelecareError:
                shutil.rmtree(tmp_dir, ignore_errors=True)
                raise
            except Exception as exc:
                shutil.rmtree(tmp_dir, ignore_errors=True)
                raise StorageFailure(f"could not persist session {record.id!r}: {exc}") from exc
        return record.id

    def _write_session_files(self, directory: str, record: SessionRecord) -> None:
        checksums = {}
        signals_path = os.path.join(directory, "signals.csv")
        write_signals_csv(record.recording, signals_path)
        checksums["signals.csv"] = _sha256_file(signals_path)

        thermal_meta = []
        for i, rf in enumerate(record.thermal):
            for j, frame in enumerate(rf.frames):
                name = f"thermal_{i}_{j}_{rf.roi.region_kind}.txt"
                path = os.path.join(directory, name)
                write_thermal_frame(frame, path, rf.roi)
                checksums[name] = _sha256_file(path)
                checksums[name + ".json"] = _sha256_file(path + ".json")
            thermal_meta.append(
                {
                    "region_kind": rf.roi.region_kind,
                    "rect": list(rf.roi.rect),
                    "num_frames": len(rf.frames),
                }
            )

        if record.ground_truth is not None:
            gt_path = os.path.join(directory, "ground_truth.json")
            _dump_json(gt_path, {"ground_truth": record.ground_truth})
            checksums["ground_truth.json"] = _sha256_file(gt_path)

        if record.analysis is not None:
            an_path = os.path.join(directory, "analysis.json")
            _dump_json(an_path, record.analysis)
            checksums["analysis.json"] = _sha256_file(an_path)

        meta = {
            "version": STORE_VERSION,
            "id": record.id,
            "created_at": record.created_at,
            "participant": record.participant.as_dict(),
            "mmq": record.mmq.as_dict(),
            "recording_spec": {
                "rate_hz": record.recording.spec.rate_hz,
                "lowpass_cutoff_hz": record.recording.spec.lowpass_cutoff_hz,
                "duration_s": record.recording.spec.duration_s,
                "pressure_range_mmhg": list(record.recording.spec.pressure_range_mmhg),
            },
            "num_channels": record.recording.num_channels,
            "thermal": thermal_meta,
            "annotations": [a.as_dict() for a in record.annotations],
            "checksums": checksums,
        }
        _dump_json(os.path.join(directory, "session.json"), meta)

    # --- read path ---------------------------------------------------------

    def _read_meta(self, session_id: str) -> dict:
        directory = self._dir_for(session_id)
        meta_path = os.path.join(directory, "session.json")
        if not os.path.isfile(meta_path):
            raise NotFound(f"session {session_id!r} not in store")
        with open(meta_path, "r", encoding="utf-8") as f:
            return json.load(f)

    def _verify_checksums(self, session_id: str, meta: dict) -> None:
        directory = self._dir_for(session_id)
        for name, want in meta.get("checksums", {}).items():
            path = os.path.join(directory, name)
            if not os.path.isfile(path):
                raise CorruptRecord(f"{session_id}: missing data file {name}")
            got = _sha256_file(path)
            if got != want:
                raise CorruptRecord(f"{session_id}: checksum mismatch on {name}")

    def load_session(self, session_id: str) -> SessionRecord:
        """Exact record as saved; raises NotFound / CorruptRecord."""
        meta = self._read_meta(session_id)
        self._verify_checksums(session_id, meta)
        directory = self._dir_for(session_id)

        spec_d = meta["recording_spec"]
        spec = AcquisitionSpec(
            rate_hz=float(spec_d["rate_hz"]),
            lowpass_cutoff_hz=float(spec_d["lowpass_cutoff_hz"]),
            duration_s=float(spec_d["duration_s"]),
            pressure_range_mmhg=tuple(spec_d["pressure_range_mmhg"]),
        )
        recording = read_signals_csv(os.path.join(directory, "signals.csv"), spec)

        thermal = []
        for i, tmeta in enumerate(meta.get("thermal", [])):
            frames = []
            roi = Roi(tmeta["region_kind"], tuple(tmeta["rect"]))
            for j in range(tmeta["num_frames"]):
                name = f"thermal_{i}_{j}_{tmeta['region_kind']}.txt"
                frame, side_roi = read_thermal_frame(os.path.join(directory, name))
                frames.append(frame)
                if side_roi is not None:
                    roi = side_roi
            thermal.append(RoiFrames(roi, tuple(frames)))

        analysis = None
        an_path = os.path.join(directory, "analysis.json")
        if os.path.isfile(an_path):
            with open(an_path, "r", encoding="utf-8") as f:
                analysis = json.load(f)

        ground_truth = None
        gt_path = os.path.join(directory, "ground_truth.json")
        if os.path.isfile(gt_path):
            with open(gt_path, "r", encoding="utf-8") as f:
                ground_truth = json.load(f)["ground_truth"]

        return SessionRecord(
            id=meta["id"],
            created_at=float(meta["created_at"]),
            participant=Participant.from_dict(meta["participant"]),
            mmq=MmqResult.from_dict(meta["mmq"]),
            recording=recording,
            thermal=tuple(thermal),
            analysis=analysis,
            annotations=tuple(Annotation.from_dict(a) for a in meta.get("annotations", [])),
            ground_truth=ground_truth,
        )

    def session_ids(self) -> list[str]:
        out = []
        for name in os.listdir(self.root):
            if name.startswith(_TMP_PREFIX):
                continue
            if os.path.isfile(os.path.join(self.root, name, "session.json")):
                out.append(name)
        return out

    def list_sessions(self, page: int = 1, page_size: int = 10) -> dict:
        """Manifest slice sorted by created_at descending (id breaks ties)."""
        if page < 1 or page_size < 1:
            raise ValueError("page and page_size must be >= 1")
        rows = []
        for sid in self.session_ids():
            meta = self._read_meta(sid)
            rows.append(
                {
                    "id": meta["id"],
                    "created_at": float(meta["created_at"]),
                    "label_summary": "{warm_axis}/{wet_axis}".format(**meta["mmq"]["label"]),
                    "num_annotations": len(meta.get("annotations", [])),
                }
            )
        rows.sort(key=lambda r: (-r["created_at"], r["id"]))
        start = (page - 1) * page_size
        return {
            "version": STORE_VERSION,
            "total": len(rows),
            "page": page,
            "page_size": page_size,
            "sessions": rows[start : start + page_size],
        }

    # --- analysis ----------------------------------------------------------

    def compute_analysis(self, record: SessionRecord) -> dict:
        """Fresh analysis payload for a record (no caching)."""
        feats = extract_pulse_features(record.recording, self._sensor_layout)
        payload = features_to_json_dict(feats)
        thermal = {}
        for rf in record.thermal:
            wc = warm_cold_features(list(rf.frames))
            dw = dry_wet_features(rf.frames[-1])
            thermal[rf.roi.region_kind] = {
                "warm_cold": {"names": list(wc.names), "values": wc.values.tolist(),
                              "single_frame": wc.single_frame},
                "dry_wet": {"names": list(dw.names), "values": dw.values.tolist()},
            }
        payload["thermal"] = thermal
        payload["mmq_label"] = record.mmq.label.as_dict()
        # normalize via canonical JSON so cache equality is byte-comparable
        return json.loads(canonical_json(payload))

    def analyze_session(self, session_id: str, refresh: bool = False) -> dict:
        """Cached analysis payload, computing and persisting it on first use.

        The cache is trusted only because it is always produced by
        compute_analysis on the stored raw data; pass refresh=True to force
        recomputation (e.g. to verify a cache).
        """
        record = self.load_session(session_id)
        if record.analysis is not None and not refresh:
            return record.analysis
        try:
            payload = self.compute_analysis(record)
        except TelecareError as exc:
            raise AnalysisFailure(f"analysis of {session_id!r} failed: {exc}") from exc
        lock = self._lock_for(session_id)
        with lock:
            directory = self._dir_for(session_id)
            an_path = os.path.join(directory, "analysis.json")
            self._atomic_dump(an_path, payload)
            meta = self._read_meta(session_id)
            meta["checksums"]["analysis.json"] = _sha256_file(an_path)
            self._atomic_dump(os.path.join(directory, "session.json"), meta)
        return payload

    def _atomic_dump(self, path, obj) -> None:
        fd, tmp = tempfile.mkstemp(prefix=_TMP_PREFIX, dir=self.root)
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as f:
                json.dump(obj, f, indent=2, sort_keys=True)
                f.write("\n")
            os.replace(tmp, path)
        except Exception as exc:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise StorageFailure(f"could not write {path}: {exc}") from exc

    # --- annotations --------------------------------------------------------

    def add_annotation(
        self,
        session_id: str,
        author: str,
        temperament=None,
        note: str = "",
        timestamp: float | None = None,
    ) -> list[Annotation]:
        """Append one annotation (author plus a temperament and/or note);
        returns the full annotation list, oldest first."""
        if not author or (temperament is None and not note.strip()):
            raise EmptyAnnotation("annotation needs an author and a temperament or note")
        lock = self._lock_for(session_id)
        with lock:
            meta = self._read_meta(session_id)
            stamp = time.time() if timestamp is None else float(timestamp)
            annotation = Annotation(
                author=author,
                timestamp=stamp,
                temperament=temperament,
                note=note,
            )
            meta["annotations"].append(annotation.as_dict())
            self._atomic_dump(os.path.join(self._dir_for(session_id), "session.json"), meta)
            return [Annotation.from_dict(a) for a in meta["annotations"]]
