"""Synthetic wrist-device sessions with known ground truth.

Replaces the acquisition hardware: generates physiologically shaped PPG and
capacitive channels, a trapezoidal cuff-pressure profile, thermal frames
whose level/texture encode the temperament axes, and whole cohorts of
sessions. Everything is deterministic per seed, so analysis-side tests can
assert exact recovery of the injected parameters.

Signal model per beat: a systolic Gaussian bump plus a smaller dicrotic
bump (amplitude ratio 0.35) at fixed beat-fraction offsets. Channel i is
the beat waveform delayed by its lag, scaled by its gain and by a Gaussian
pressure-response window G(P; p_opt, sigma_p = 40 mmHg); channels respond
most strongly when the cuff pressure passes their optimum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.ndimage import gaussian_filter

from .errors import BadMix, InvalidParams, InvalidSize
from .session import (
    Annotation,
    MmqResult,
    Participant,
    RoiFrames,
    SessionRecord,
)
from .signal_core import AcquisitionSpec, TimeSeries, WristRecording, make_recording
from .temperament_eval import MmqSchema, TemperamentLabel, default_mmq_schema, score_mmq
from .thermal_features import Roi, ThermalFrame

SYSTOLIC_CENTER = 0.3  # beat fraction
SYSTOLIC_WIDTH = 0.08
DICROTIC_CENTER = 0.65
DICROTIC_WIDTH = 0.10
DICROTIC_RATIO = 0.35

PRESSURE_SIGMA_MMHG = 40.0

THERMAL_BASE_C = 31.0
THERMAL_WARM_OFFSET_C = 1.5
THERMAL_FIELD_STD_C = 0.6
# spatial smoothing of the noise field, px: rough (dry) .. smooth (wet)
THERMAL_SMOOTHING_PX = {"dry": 0.8, "moderate": 1.6, "wet": 3.0}

# Synthetic sessions carry a deterministic clock so repeated simulate runs
# are byte-identical; real acquisitions would stamp wall time instead.
SYNTH_EPOCH_S = 1_700_000_000.0


@dataclass(frozen=True)
class PressureProfile:
    """Trapezoidal cuff profile: hold at 0, ramp up, hold at peak, fall."""

    t_hold1_s: float = 10.0
    t_ramp_s: float = 20.0
    t_hold2_s: float = 5.0
    t_fall_s: float = 20.0
    peak_mmhg: float = 160.0

    def __post_init__(self):
        for name in ("t_hold1_s", "t_ramp_s", "t_hold2_s", "t_fall_s"):
            if getattr(self, name) < 0:
                raise InvalidParams(f"{name} must be >= 0")
        if not (0 < self.peak_mmhg <= 180.0):
            raise InvalidParams("peak pressure must lie in (0, 180] mmHg")
        if self.t_ramp_s <= 0 or self.t_fall_s <= 0:
            raise InvalidParams("ramp and fall must have positive duration")

    @property
    def total_s(self) -> float:
        return self.t_hold1_s + self.t_ramp_s + self.t_hold2_s + self.t_fall_s


@dataclass(frozen=True)
class SimParams:
    heart_rate_bpm: float = 72.0
    channel_gain: tuple[float, ...] = (1.0,) * 7
    channel_lag_s: tuple[float, ...] = (0.0,) * 7
    channel_p_opt_mmhg: tuple[float, ...] = (20.0,) * 7
    pressure_profile: PressureProfile = field(default_factory=PressureProfile)
    noise_snr_db: float = math.inf  # inf disables noise
    seed: int = 0
    spec: AcquisitionSpec = field(default_factory=AcquisitionSpec)

    def __post_init__(self):
        if not (40.0 <= self.heart_rate_bpm <= 180.0):
            raise InvalidParams("heart rate must lie in [40, 180] BPM")
        lengths = {
            len(self.channel_gain),
            len(self.channel_lag_s),
            len(self.channel_p_opt_mmhg),
        }
        if len(lengths) != 1:
            raise InvalidParams("per-channel arrays must share one length")
        if any(g < 0 for g in self.channel_gain):
            raise InvalidParams("gains must be >= 0")
        if not (60.0 <= self.spec.duration_s <= 90.0):
            raise InvalidParams("acquisition duration must lie in [60, 90] s")
        if self.pressure_profile.total_s > self.spec.duration_s:
            raise InvalidParams("pressure profile does not fit in the acquisition window")

    @property
    def num_channels(self) -> int:
        return len(self.channel_gain)

    def as_dict(self) -> dict:
        return {
            "heart_rate_bpm": self.heart_rate_bpm,
            "channel_gain": list(self.channel_gain),
            "channel_lag_s": list(self.channel_lag_s),
            "channel_p_opt_mmhg": list(self.channel_p_opt_mmhg),
            "pressure_profile": {
                "t_hold1_s": self.pressure_profile.t_hold1_s,
                "t_ramp_s": self.pressure_profile.t_ramp_s,
                "t_hold2_s": self.pressure_profile.t_hold2_s,
                "t_fall_s": self.pressure_profile.t_fall_s,
                "peak_mmhg": self.pressure_profile.peak_mmhg,
            },
            "noise_snr_db": None if math.isinf(self.noise_snr_db) else self.noise_snr_db,
            "seed": self.seed,
            "spec": {
                "rate_hz": self.spec.rate_hz,
                "lowpass_cutoff_hz": self.spec.lowpass_cutoff_hz,
                "duration_s": self.spec.duration_s,
                "pressure_range_mmhg": list(self.spec.pressure_range_mmhg),
            },
        }


@dataclass(frozen=True)
class GroundTruth:
    """Injected parameters plus the analysis-side expectations they imply."""

    params: SimParams
    expected_lag_samples: tuple[int, ...]
    expected_phase2_stronger: tuple[bool, ...]

    def as_dict(self) -> dict:
        d = self.params.as_dict()
        d["expected"] = {
            "heart_rate_bpm": self.params.heart_rate_bpm,
            "lag_samples": list(self.expected_lag_samples),
            "phase2_power_exceeds_phase1": list(self.expected_phase2_stronger),
        }
        return d


def _beat_waveform(t: np.ndarray, heart_rate_bpm: float) -> np.ndarray:
    period = 60.0 / heart_rate_bpm
    phase = (t / period) % 1.0
    s = np.zeros_like(t)
    # neighbouring beats keep the waveform continuous across beat boundaries
    for off in (-1.0, 0.0, 1.0):
        ph = phase + off
        s += np.exp(-0.5 * ((ph - SYSTOLIC_CENTER) / SYSTOLIC_WIDTH) ** 2)
        s += DICROTIC_RATIO * np.exp(-0.5 * ((ph - DICROTIC_CENTER) / DICROTIC_WIDTH) ** 2)
    return s


def _noise_for(signal: np.ndarray, snr_db: float, rng: np.random.Generator) -> np.ndarray:
    if math.isinf(snr_db):
        return np.zeros_like(signal)
    power = float(np.var(signal))
    if power == 0:
        return np.zeros_like(signal)
    noise_std = math.sqrt(power / 10 ** (snr_db / 10))
    return rng.normal(0.0, noise_std, signal.size)


def synth_ppg(params: SimParams) -> TimeSeries:
    """Finger PPG: the beat waveform plus white noise at noise_snr_db.

    SNR is defined against the AC power (variance) of the clean waveform.
    Deterministic per seed.
    """
    fs = params.spec.rate_hz
    t = np.arange(int(round(params.spec.duration_s * fs))) / fs
    clean = _beat_waveform(t, params.heart_rate_bpm)
    rng = np.random.default_rng(np.random.SeedSequence(params.seed).spawn(1)[0])
    return TimeSeries(clean + _noise_for(clean, params.noise_snr_db, rng), fs, "ppg")


def synth_pressure(profile: PressureProfile, duration_s: float, fs: float) -> np.ndarray:
    n = int(round(duration_s * fs))
    t = np.arange(n) / fs
    t1 = profile.t_hold1_s
    t2 = t1 + profile.t_ramp_s
    t3 = t2 + profile.t_hold2_s
    t4 = t3 + profile.t_fall_s
    p = np.zeros(n)
    m = (t >= t1) & (t < t2)
    p[m] = (t[m] - t1) * profile.peak_mmhg / profile.t_ramp_s
    m = (t >= t2) & (t < t3)
    p[m] = profile.peak_mmhg
    m = (t >= t3) & (t < t4)
    p[m] = profile.peak_mmhg * (1 - (t[m] - t3) / profile.t_fall_s)
    return np.clip(p, 0.0, 180.0)


def pressure_response(pressure: np.ndarray, p_opt: float) -> np.ndarray:
    """Gaussian pressure-response window G(P; p_opt, sigma_p)."""
    return np.exp(-0.5 * ((pressure - p_opt) / PRESSURE_SIGMA_MMHG) ** 2)


def synth_recording(params: SimParams) -> tuple[WristRecording, GroundTruth]:
    """Full synthetic recording plus its ground truth.

    Channel noise is referenced to the unit-gain beat-waveform power, so a
    zero-gain channel degrades to pure sensor noise rather than silence.
    """
    fs = params.spec.rate_hz
    n = int(round(params.spec.duration_s * fs))
    t = np.arange(n) / fs
    pressure = synth_pressure(params.pressure_profile, params.spec.duration_s, fs)

    seeds = np.random.SeedSequence(params.seed).spawn(params.num_channels + 2)
    ppg_clean = _beat_waveform(t, params.heart_rate_bpm)
    ppg_rng = np.random.default_rng(seeds[0])
    ppg = TimeSeries(
        ppg_clean + _noise_for(ppg_clean, params.noise_snr_db, ppg_rng), fs, "ppg"
    )

    unit_power = float(np.var(ppg_clean))
    channels = []
    for ci in range(params.num_channels):
        lagged = _beat_waveform(t - params.channel_lag_s[ci], params.heart_rate_bpm)
        window = pressure_response(pressure, params.channel_p_opt_mmhg[ci])
        clean = params.channel_gain[ci] * window * lagged
        rng = np.random.default_rng(seeds[ci + 1])
        if math.isinf(params.noise_snr_db):
            noise = np.zeros(n)
        else:
            noise_std = math.sqrt(unit_power / 10 ** (params.noise_snr_db / 10))
            noise = rng.normal(0.0, noise_std, n)
        channels.append(TimeSeries(clean + noise, fs, f"c{ci + 1}"))

    rec = make_recording(channels, ppg, TimeSeries(pressure, fs, "pressure"), params.spec)
    gt = GroundTruth(
        params=params,
        expected_lag_samples=tuple(
            int(round(lag * fs)) for lag in params.channel_lag_s
        ),
        expected_phase2_stronger=tuple(_expected_phase2_stronger(params, pressure, fs)),
    )
    return rec, gt


def _expected_phase2_stronger(params: SimParams, pressure: np.ndarray, fs: float) -> list[bool]:
    """Predict, per channel, whether inflation-phase power exceeds
    no-pressure power, from the injected pressure-response window alone."""
    prof = params.pressure_profile
    p1 = slice(0, int(round(prof.t_hold1_s * fs)))
    p2 = slice(
        int(round(prof.t_hold1_s * fs)),
        int(round((prof.t_hold1_s + prof.t_ramp_s) * fs)),
    )
    out = []
    for p_opt in params.channel_p_opt_mmhg:
        g2 = pressure_response(pressure, p_opt) ** 2
        out.append(bool(np.mean(g2[p2]) > np.mean(g2[p1])))
    return out


def synth_thermal_frame(
    label: TemperamentLabel, size: tuple[int, int] = (32, 32), seed: int = 0
) -> ThermalFrame:
    """One thermal frame whose level encodes warm/cold and whose texture
    roughness encodes dry/wet.

    Base 31 C with +-1.5 C warm/cold offsets; a zero-mean smoothed noise
    field normalized to 0.6 C std supplies the texture, smoothed least for
    dry (rough, high gradient energy) and most for wet.
    """
    w, h = size
    if w < 16 or h < 16:
        raise InvalidSize(f"frame must be at least 16x16, got {w}x{h}")
    offset = {"warm": THERMAL_WARM_OFFSET_C, "moderate": 0.0, "cold": -THERMAL_WARM_OFFSET_C}[
        label.warm_axis
    ]
    sigma = THERMAL_SMOOTHING_PX[label.wet_axis]
    rng = np.random.default_rng(seed)
    raw = rng.normal(0.0, 1.0, (h, w))
    fld = gaussian_filter(raw, sigma, mode="reflect")
    fld = fld - fld.mean()
    sd = fld.std()
    if sd > 0:
        fld *= THERMAL_FIELD_STD_C / sd
    return ThermalFrame(w, h, THERMAL_BASE_C + offset + fld, captured_at_s=0.0)


def _mix_counts(n: int, mix, axis_values) -> list[int]:
    if mix is None:
        # proportional to the default 34-person split, largest remainders fixed up
        base = {"warm": 15, "moderate": 17, "cold": 2}
        weights = [base.get(v, 1) for v in axis_values]
        total = sum(weights)
        counts = [n * w // total for w in weights]
        rema = n - sum(counts)
        order = sorted(
            range(len(axis_values)),
            key=lambda i: -(n * weights[i] / total - counts[i]),
        )
        for i in order[:rema]:
            counts[i] += 1
        return counts
    counts = [int(mix.get(v, 0)) for v in axis_values] if isinstance(mix, dict) else list(mix)
    if len(counts) != len(axis_values) or any(c < 0 for c in counts):
        raise BadMix(f"mix must give a count per {axis_values}")
    if sum(counts) != n:
        raise BadMix(f"mix {counts} sums to {sum(counts)}, expected {n}")
    return counts


def _mmq_responses_for(
    label: TemperamentLabel, schema: MmqSchema, rng: np.random.Generator
) -> dict:
    target = {
        "warm": {"cold": 0.15, "moderate": 0.5, "warm": 0.85}[label.warm_axis],
        "wet": {"dry": 0.15, "moderate": 0.5, "wet": 0.85}[label.wet_axis],
    }
    responses = {}
    for item in schema.items:
        responses[item.id] = float(np.clip(rng.normal(target[item.axis], 0.05), 0.0, 1.0))
    return responses


def generate_cohort(
    n: int = 34,
    warm_mix=None,
    wet_mix=None,
    seed: int = 0,
    spec: AcquisitionSpec | None = None,
    schema: MmqSchema | None = None,
) -> list[SessionRecord]:
    """n full synthetic sessions with the requested label mixes.

    The default warm-axis mix follows the reference 34-person cohort
    (15 warm / 17 moderate / 2 cold); the wet axis defaults to a balanced
    split. Member i derives its randomness from seed + i, so cohorts are
    reproducible and members can be generated independently.
    """
    if n < 1:
        raise BadMix("cohort size must be >= 1")
    schema = schema or default_mmq_schema()
    spec = spec or AcquisitionSpec()
    warm_counts = _mix_counts(n, warm_mix, ("warm", "moderate", "cold"))
    if wet_mix is None:
        base = n // 3
        wet_counts = [base + (1 if i < n % 3 else 0) for i in range(3)]
    else:
        wet_counts = _mix_counts(n, wet_mix, ("dry", "moderate", "wet"))

    warm_labels = (
        ["warm"] * warm_counts[0] + ["moderate"] * warm_counts[1] + ["cold"] * warm_counts[2]
    )
    wet_labels = ["dry"] * wet_counts[0] + ["moderate"] * wet_counts[1] + ["wet"] * wet_counts[2]
    mix_rng = np.random.default_rng(seed)
    mix_rng.shuffle(warm_labels)
    mix_rng.shuffle(wet_labels)

    sessions = []
    for i in range(n):
        member_seed = seed + i
        rng = np.random.default_rng(np.random.SeedSequence(member_seed).spawn(1)[0])
        label = TemperamentLabel(warm_labels[i], wet_labels[i])

        num_ch = 7
        params = SimParams(
            heart_rate_bpm=float(rng.uniform(55.0, 95.0)),
            channel_gain=tuple(rng.uniform(0.7, 1.3, num_ch)),
            channel_lag_s=tuple(rng.uniform(0.005, 0.06, num_ch)),
            channel_p_opt_mmhg=tuple(rng.uniform(10.0, 130.0, num_ch)),
            pressure_profile=PressureProfile(peak_mmhg=float(rng.uniform(140.0, 180.0))),
            noise_snr_db=20.0,
            seed=member_seed,
            spec=spec,
        )
        recording, gt = synth_recording(params)

        thermal = []
        for ri, kind in enumerate(("wrist_malmas", "hand_back", "face")):
            frame = synth_thermal_frame(label, (32, 32), seed=member_seed * 101 + ri)
            thermal.append(RoiFrames(Roi(kind, (0, 0, 32, 32)), (frame,)))

        responses = _mmq_responses_for(label, schema, rng)
        derived = score_mmq(schema, responses)
        if derived != label:
            raise InvalidParams(
                f"generated responses for {label} scored as {derived}; widen the margins"
            )

        sessions.append(
            SessionRecord(
                id=f"sess-{seed:04d}-{i:03d}",
                created_at=SYNTH_EPOCH_S + i,
                participant=Participant(
                    pseudo_id=f"p{i:03d}",
                    age_years=float(np.round(np.clip(rng.normal(37.11, 7.0), 18.0, 80.0), 1)),
                    sex="F" if rng.random() < 21 / 34 else "M",
                ),
                mmq=MmqResult(responses, label, schema.version),
                recording=recording,
                thermal=tuple(thermal),
                annotations=(),
                ground_truth=gt.as_dict(),
            )
        )
    return sessions


def lag_scan_params(
    delay_samples: int,
    snr_db: float,
    seed: int,
    spec: AcquisitionSpec | None = None,
) -> SimParams:
    """Single-channel params for delay-recovery experiments.

    The cuff peaks at only 20 mmHg with p_opt = 0, so the channel stays
    near full strength for the whole record and the injected integer-sample
    lag is the only structure to recover."""
    spec = spec or AcquisitionSpec()
    return SimParams(
        heart_rate_bpm=72.0,
        channel_gain=(1.0,),
        channel_lag_s=(delay_samples / spec.rate_hz,),
        channel_p_opt_mmhg=(0.0,),
        pressure_profile=PressureProfile(
            t_hold1_s=spec.duration_s - 50.0,
            t_ramp_s=20.0,
            t_hold2_s=5.0,
            t_fall_s=20.0,
            peak_mmhg=20.0,
        ),
        noise_snr_db=snr_db,
        seed=seed,
        spec=spec,
    )
