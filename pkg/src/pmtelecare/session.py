"""The telecare unit of exchange: one acquisition session.

A session bundles participant metadata, questionnaire responses with the
derived temperament label, the wrist recording, thermal frames per region
of interest, optional cached analysis, physician annotations and (for
synthetic sessions) the simulator ground truth.

`to_json_dict` / `from_json_dict` define the wire form used by the HTTP
API; the on-disk layout lives in `store`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .signal_core import AcquisitionSpec, TimeSeries, WristRecording, make_recording
from .temperament_eval import TemperamentLabel
from .thermal_features import Roi, ThermalFrame


@dataclass(frozen=True)
class Participant:
    pseudo_id: str
    age_years: float
    sex: str  # "F" | "M"

    def as_dict(self) -> dict:
        return {"pseudo_id": self.pseudo_id, "age_years": self.age_years, "sex": self.sex}

    @classmethod
    def from_dict(cls, d: dict) -> "Participant":
        return cls(d["pseudo_id"], float(d["age_years"]), d["sex"])


@dataclass(frozen=True)
class MmqResult:
    responses: dict  # item id -> score in [0, 1]
    label: TemperamentLabel
    schema_version: str = "v1"

    def as_dict(self) -> dict:
        return {
            "responses": dict(sorted(self.responses.items())),
            "label": self.label.as_dict(),
            "schema_version": self.schema_version,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MmqResult":
        return cls(
            {k: float(v) for k, v in d["responses"].items()},
            TemperamentLabel.from_dict(d["label"]),
            d.get("schema_version", "v1"),
        )


@dataclass(frozen=True)
class Annotation:
    author: str
    timestamp: float
    temperament: TemperamentLabel | None = None
    note: str = ""

    def as_dict(self) -> dict:
        return {
            "author": self.author,
            "timestamp": self.timestamp,
            "temperament": None if self.temperament is None else self.temperament.as_dict(),
            "note": self.note,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Annotation":
        temp = d.get("temperament")
        return cls(
            d["author"],
            float(d["timestamp"]),
            None if temp is None else TemperamentLabel.from_dict(temp),
            d.get("note", ""),
        )


@dataclass(frozen=True)
class RoiFrames:
    roi: Roi
    frames: tuple[ThermalFrame, ...]

    def __post_init__(self):
        object.__setattr__(self, "frames", tuple(self.frames))
        if not self.frames:
            raise ValueError("RoiFrames needs at least one frame")


@dataclass(frozen=True)
class SessionRecord:
    id: str
    created_at: float
    participant: Participant
    mmq: MmqResult
    recording: WristRecording
    thermal: tuple[RoiFrames, ...]
    analysis: dict | None = None
    annotations: tuple[Annotation, ...] = ()
    ground_truth: dict | None = None

    def __post_init__(self):
        if not self.id:
            raise ValueError("session id must be non-empty")
        object.__setattr__(self, "thermal", tuple(self.thermal))
        object.__setattr__(self, "annotations", tuple(self.annotations))

    def label_summary(self) -> str:
        return self.mmq.label.summary()

    def with_analysis(self, analysis: dict) -> "SessionRecord":
        return SessionRecord(
            self.id,
            self.created_at,
            self.participant,
            self.mmq,
            self.recording,
            self.thermal,
            analysis,
            self.annotations,
            self.ground_truth,
        )

    def with_annotations(self, annotations) -> "SessionRecord":
        return SessionRecord(
            self.id,
            self.created_at,
            self.participant,
            self.mmq,
            self.recording,
            self.thermal,
            self.analysis,
            tuple(annotations),
            self.ground_truth,
        )


def recording_to_json_dict(rec: WristRecording) -> dict:
    return {
        "rate_hz": rec.rate_hz,
        "capacitive": [ts.samples.tolist() for ts in rec.capacitive],
        "ppg": rec.ppg.samples.tolist(),
        "pressure": rec.pressure.samples.tolist(),
        "spec": {
            "rate_hz": rec.spec.rate_hz,
            "lowpass_cutoff_hz": rec.spec.lowpass_cutoff_hz,
            "duration_s": rec.spec.duration_s,
            "pressure_range_mmhg": list(rec.spec.pressure_range_mmhg),
        },
    }


def recording_from_json_dict(d: dict) -> WristRecording:
    spec_d = d["spec"]
    spec = AcquisitionSpec(
        rate_hz=float(spec_d["rate_hz"]),
        lowpass_cutoff_hz=float(spec_d["lowpass_cutoff_hz"]),
        duration_s=float(spec_d["duration_s"]),
        pressure_range_mmhg=tuple(spec_d["pressure_range_mmhg"]),
    )
    rate = float(d["rate_hz"])
    capacitive = [
        TimeSeries(np.asarray(samples, dtype=np.float64), rate, f"c{i + 1}")
        for i, samples in enumerate(d["capacitive"])
    ]
    ppg = TimeSeries(np.asarray(d["ppg"], dtype=np.float64), rate, "ppg")
    pressure = TimeSeries(np.asarray(d["pressure"], dtype=np.float64), rate, "pressure")
    return make_recording(capacitive, ppg, pressure, spec)


def thermal_to_json_list(thermal) -> list:
    return [
        {
            "roi": {"region_kind": rf.roi.region_kind, "rect": list(rf.roi.rect)},
            "frames": [
                {
                    "width": fr.width,
                    "height": fr.height,
                    "temps_c": fr.temps_c.ravel().tolist(),
                    "captured_at_s": fr.captured_at_s,
                }
                for fr in rf.frames
            ],
        }
        for rf in thermal
    ]


def thermal_from_json_list(items) -> tuple[RoiFrames, ...]:
    out = []
    for item in items:
        roi = Roi(item["roi"]["region_kind"], tuple(item["roi"]["rect"]))
        frames = tuple(
            ThermalFrame(
                int(fr["width"]),
                int(fr["height"]),
                np.asarray(fr["temps_c"], dtype=np.float64).reshape(
                    int(fr["height"]), int(fr["width"])
                ),
                float(fr.get("captured_at_s", 0.0)),
            )
            for fr in item["frames"]
        )
        out.append(RoiFrames(roi, frames))
    return tuple(out)


def session_to_json_dict(s: SessionRecord, include_analysis: bool = True) -> dict:
    d = {
        "id": s.id,
        "created_at": s.created_at,
        "participant": s.participant.as_dict(),
        "mmq": s.mmq.as_dict(),
        "recording": recording_to_json_dict(s.recording),
        "thermal": thermal_to_json_list(s.thermal),
        "annotations": [a.as_dict() for a in s.annotations],
        "analysis": s.analysis if include_analysis else None,
        "ground_truth": s.ground_truth,
    }
    return d


def session_from_json_dict(d: dict) -> SessionRecord:
    return SessionRecord(
        id=str(d["id"]),
        created_at=float(d["created_at"]),
        participant=Participant.from_dict(d["participant"]),
        mmq=MmqResult.from_dict(d["mmq"]),
        recording=recording_from_json_dict(d["recording"]),
        thermal=thermal_from_json_list(d.get("thermal", [])),
        analysis=d.get("analysis"),
        annotations=tuple(Annotation.from_dict(a) for a in d.get("annotations", [])),
        ground_truth=d.get("ground_truth"),
    )
