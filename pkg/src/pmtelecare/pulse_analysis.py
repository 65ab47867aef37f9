"""Pulse feature extraction from multi-channel wrist recordings.

Covers heart rate from the finger PPG, per-channel pulse strength via the
cross-spectral density against the PPG reference, lag-time estimation,
cuff-pressure phase segmentation, per-phase channel power and the spatial
pulse map (length / width along the sensor layout).

Strength convention: the scalar "pulse strength" of a channel is the squared
band-integrated cross-spectral magnitude against the PPG reference over
[0.5, 20] Hz. Squaring makes the scalar behave like power: scaling a channel
by k scales its strength by k**2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import uniform_filter1d
from scipy.signal import peak_prominences

from .errors import (
    InvalidBand,
    LayoutMismatch,
    MismatchedLength,
    MismatchedRate,
    NoPeaks,
    NotAPressureTrace,
    OutOfPhysiologicalRange,
    TooShort,
)
from .signal_core import (
    PRESSURE_PLAUSIBLE_MMHG,
    CorrelationFunction,
    TimeSeries,
    WristRecording,
    bandpass_filter,
    cross_correlation,
    detrend,
)

STRENGTH_BAND_HZ = (0.5, 20.0)
HR_BAND_HZ = (0.5, 5.0)
HR_RANGE_BPM = (20.0, 250.0)
DEFAULT_MAX_LAG_S = 0.5

# Pressure-phase detection thresholds (cuff traces are smooth; see
# segment_pressure_phases for how they are applied).
PHASE_PRESSURE_FLOOR_MMHG = 5.0
PHASE_SLOPE_MIN_MMHG_S = 5.0
PHASE_SMOOTHING_S = 0.5

# Sliding-window settings for the pulse-power timeline.
TIMELINE_WINDOW_S = 5.0
TIMELINE_OVERLAP = 0.5


@dataclass(frozen=True)
class Spectrum:
    """One-sided cross-spectral density on a uniform frequency grid."""

    freqs_hz: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.freqs_hz, dtype=np.float64)
        v = np.asarray(self.values, dtype=np.complex128)
        if f.ndim != 1 or f.shape != v.shape:
            raise ValueError("freqs and values must be 1-D and of equal length")
        if f[0] != 0 or (f.size > 1 and not np.all(np.diff(f) > 0)):
            raise ValueError("freqs must start at 0 and increase strictly")
        if not np.all(np.isfinite(v)):
            raise ValueError("spectrum values must be finite")
        f.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "freqs_hz", f)
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class PhaseSegmentation:
    """Half-open sample ranges of the no-pressure / inflation / deflation
    phases. Ranges are disjoint, ordered, possibly empty, and their union is
    one contiguous block starting at sample 0."""

    phase1: tuple[int, int]
    phase2: tuple[int, int]
    phase3: tuple[int, int]

    def __post_init__(self):
        p1, p2, p3 = self.phase1, self.phase2, self.phase3
        for s, e in (p1, p2, p3):
            if s > e:
                raise ValueError(f"phase range [{s},{e}) reversed")
        if not (p1[1] <= p2[0] and p2[1] <= p3[0]):
            raise ValueError("phases must be ordered phase1 <= phase2 <= phase3")

    @property
    def phases(self) -> tuple[tuple[int, int], ...]:
        return (self.phase1, self.phase2, self.phase3)

    def as_dict(self) -> dict:
        return {
            "phase1": list(self.phase1),
            "phase2": list(self.phase2),
            "phase3": list(self.phase3),
        }


@dataclass(frozen=True)
class LagEstimate:
    """Cross-correlation argmax delay plus its normalized peak value."""

    lag_s: float
    peak_value: float
    confidence: float


@dataclass(frozen=True)
class SpatialPulseMap:
    """Per-sensor strength over the wrist layout plus the half-maximum
    support extent along (length) and across (width) the wrist."""

    sensor_xy_mm: np.ndarray
    strength: np.ndarray
    length_mm: float
    width_mm: float

    def __post_init__(self):
        xy = np.asarray(self.sensor_xy_mm, dtype=np.float64)
        st = np.asarray(self.strength, dtype=np.float64)
        if xy.ndim != 2 or xy.shape[1] != 2 or xy.shape[0] != st.size:
            raise ValueError("layout must be (n, 2) with one strength per sensor")
        if np.any(st < 0) or not np.all(np.isfinite(st)):
            raise ValueError("strengths must be finite and >= 0")
        xy.setflags(write=False)
        st.setflags(write=False)
        object.__setattr__(self, "sensor_xy_mm", xy)
        object.__setattr__(self, "strength", st)


@dataclass(frozen=True)
class PulseFeatures:
    """Everything the pipeline extracts from one recording."""

    heart_rate_bpm: float
    channel_strength: np.ndarray
    lag_s: np.ndarray
    lag_confidence: np.ndarray
    phase_power: np.ndarray  # (num_channels, 3)
    timeline_t_s: np.ndarray  # (num_windows,)
    timeline_power: np.ndarray  # (num_channels, num_windows)
    spatial_map: SpatialPulseMap
    segmentation: PhaseSegmentation


def default_sensor_layout(num_channels: int = 7) -> np.ndarray:
    """Default wrist layout in mm: a longitudinal line at 8 mm pitch, plus
    two transverse sensors at +-8 mm when seven channels are present.

    x is the longitudinal (along-artery) axis, y the transverse axis.
    """
    if num_channels == 7:
        return np.array(
            [
                [-16.0, 0.0],
                [-8.0, 0.0],
                [0.0, 0.0],
                [8.0, 0.0],
                [16.0, 0.0],
                [0.0, 8.0],
                [0.0, -8.0],
            ]
        )
    xs = (np.arange(num_channels) - (num_channels - 1) / 2) * 8.0
    return np.column_stack([xs, np.zeros(num_channels)])


def detect_peaks(ts: TimeSeries, min_separation_s: float, min_prominence: float) -> list[int]:
    """Indices of strict local maxima with prominence >= min_prominence.

    When two surviving peaks are closer than min_separation_s the smaller one
    is dropped (greedy, tallest first).
    """
    if len(ts) < 3:
        raise TooShort("peak detection needs at least 3 samples")
    x = ts.samples
    cand = np.nonzero((x[1:-1] > x[:-2]) & (x[1:-1] > x[2:]))[0] + 1
    if cand.size == 0:
        return []
    prom = peak_prominences(x, cand)[0]
    cand = cand[prom >= min_prominence]
    if cand.size == 0:
        return []
    min_gap = min_separation_s * ts.rate_hz
    order = sorted(range(cand.size), key=lambda i: (-x[cand[i]], cand[i]))
    kept: list[int] = []
    for i in order:
        idx = int(cand[i])
        if all(abs(idx - j) >= min_gap for j in kept):
            kept.append(idx)
    return sorted(kept)


def estimate_heart_rate(ppg: TimeSeries) -> float:
    """Heart rate in BPM from the finger PPG.

    Band-passes to [0.5, 5] Hz, detects beats and derives the rate from the
    median inter-peak interval. Intervals within 25% of the median are then
    averaged: the median anchors the estimate against missed or spurious
    beats, the inlier mean removes the one-sample quantization bias that a
    bare median keeps at high rates. (An area-between-peaks variant would
    need a beat-morphology model.)
    """
    if ppg.duration_s < 5.0:
        raise TooShort("heart-rate estimation needs at least 5 s of signal")
    filtered = bandpass_filter(ppg, *HR_BAND_HZ)
    f = filtered.samples
    spread = np.percentile(f, 99.5) - np.percentile(f, 0.5)
    floor = 1e-9 * max(1.0, float(np.abs(ppg.samples).max()))
    min_prom = max(0.5 * spread, floor)
    peaks = detect_peaks(filtered, min_separation_s=0.24, min_prominence=min_prom)
    if len(peaks) < 2:
        raise NoPeaks(f"found {len(peaks)} beat(s), need at least 2")
    intervals = np.diff(peaks) / ppg.rate_hz
    med = float(np.median(intervals))
    inliers = intervals[np.abs(intervals - med) <= 0.25 * med]
    bpm = 60.0 / float(np.mean(inliers))
    lo, hi = HR_RANGE_BPM
    if not (lo <= bpm <= hi):
        raise OutOfPhysiologicalRange(f"estimated {bpm:.1f} BPM outside [{lo}, {hi}]")
    return bpm


def cross_spectral_density(x: TimeSeries, y: TimeSeries) -> Spectrum:
    """Cross-spectral density: the DFT of the biased cross-correlation.

    Both inputs are linearly detrended first. The result equals
    conj(X(f)) * Y(f) / N evaluated on the (2N-1)-point grid, which is
    exactly the transform of the zero-padded biased correlation estimate;
    only the non-negative half of the grid (0 .. rate/2) is returned.
    """
    if x.rate_hz != y.rate_hz:
        raise MismatchedRate(f"rates differ: {x.rate_hz} vs {y.rate_hz}")
    if len(x) != len(y):
        raise MismatchedLength(f"lengths differ: {len(x)} vs {len(y)}")
    xd = detrend(x).samples
    yd = detrend(y).samples
    n = len(x)
    m = 2 * n - 1
    fx = np.fft.fft(xd, m)
    fy = np.fft.fft(yd, m)
    full = np.conj(fx) * fy / n
    half = (m + 1) // 2  # bins 0 .. (m-1)/2 cover [0, rate/2)
    freqs = np.arange(half) * (x.rate_hz / m)
    return Spectrum(freqs, full[:half])


def band_strength(s: Spectrum, band_hz: tuple[float, float] = STRENGTH_BAND_HZ) -> float:
    """Trapezoidal integral of |S(f)| over the band (inclusive grid points).

    Bands that contain fewer than two grid points integrate to 0.
    """
    low, high = band_hz
    top = float(s.freqs_hz[-1])
    if not (0 <= low < high <= top):
        raise InvalidBand(f"band [{low}, {high}] invalid for grid up to {top} Hz")
    mask = (s.freqs_hz >= low) & (s.freqs_hz <= high)
    if np.count_nonzero(mask) < 2:
        return 0.0
    return float(np.trapezoid(np.abs(s.values[mask]), s.freqs_hz[mask]))


def pulse_strength(
    channel: TimeSeries,
    reference: TimeSeries,
    band_hz: tuple[float, float] = STRENGTH_BAND_HZ,
) -> float:
    """Power-like pulse strength of a channel against the PPG reference.

    Defined as band_strength(CSD(channel, reference)) squared so that the
    scalar scales with amplitude**2: doubling the channel gain quadruples
    its strength.
    """
    return band_strength(cross_spectral_density(channel, reference), band_hz) ** 2


def lag_time(x: TimeSeries, y: TimeSeries, max_lag_s: float = DEFAULT_MAX_LAG_S) -> LagEstimate:
    """Delay of y relative to x: the argmax of the cross-correlation.

    Exact ties are broken toward the smallest |lag|. The confidence scalar
    is the peak correlation normalized by sqrt(Rxx(0) * Ryy(0)); independent
    noise yields values near 0, a clean shifted copy values near 1.
    """
    cf = cross_correlation(x, y, max_lag_s)
    best = _argmax_smallest_lag(cf)
    peak = float(cf.values[best])
    n = len(x)
    denom = float(np.sqrt((x.samples @ x.samples) * (y.samples @ y.samples))) / n
    confidence = peak / denom if denom > 0 else 0.0
    return LagEstimate(float(cf.lags_s[best]), peak, confidence)


def _argmax_smallest_lag(cf: CorrelationFunction) -> int:
    top = cf.values.max()
    ties = np.nonzero(cf.values == top)[0]
    return int(ties[np.argmin(np.abs(cf.lags_s[ties]))])


def segment_pressure_phases(pressure: TimeSeries) -> PhaseSegmentation:
    """Split a cuff pressure trace into no-pressure / inflation / deflation.

    Detection runs on a 0.5 s moving average: inflation is triggered where
    the smoothed trace first exceeds 5 mmHg while rising faster than
    5 mmHg/s, then walked back along the raw trace to the onset of the rise.
    Inflation ends at the (first) global maximum of the raw trace; deflation
    runs from there until the raw trace falls below 5 mmHg or the record
    ends. A maximum on the final sample leaves the deflation phase empty.
    """
    if pressure.duration_s < 10.0:
        raise TooShort("phase segmentation needs at least 10 s of pressure")
    raw = pressure.samples
    lo, hi = PRESSURE_PLAUSIBLE_MMHG
    if raw.min() < lo or raw.max() > hi:
        raise NotAPressureTrace(f"values outside [{lo}, {hi}] mmHg")
    n = len(raw)
    win = max(1, int(round(PHASE_SMOOTHING_S * pressure.rate_hz)))
    smooth = uniform_filter1d(raw, size=win, mode="nearest")
    slope = np.gradient(smooth) * pressure.rate_hz

    trig = np.nonzero(
        (smooth > PHASE_PRESSURE_FLOOR_MMHG) & (slope > PHASE_SLOPE_MIN_MMHG_S)
    )[0]
    if trig.size == 0:
        return PhaseSegmentation((0, n), (n, n), (n, n))

    onset = int(trig[0])
    while onset > 0 and raw[onset - 1] < raw[onset]:
        onset -= 1

    imax = int(np.argmax(raw))
    imax = max(imax, onset)
    if imax >= n - 1:
        return PhaseSegmentation((0, onset), (onset, n), (n, n))

    below = np.nonzero(raw[imax:] < PHASE_PRESSURE_FLOOR_MMHG)[0]
    end3 = int(imax + below[0]) if below.size else n
    return PhaseSegmentation((0, onset), (onset, imax), (imax, end3))


def _segment_strength(channel: TimeSeries, reference: TimeSeries, start: int, end: int) -> float:
    if end - start < 2:
        return 0.0
    return pulse_strength(channel.slice(start, end), reference.slice(start, end))


def channel_phase_power(rec: WristRecording, seg: PhaseSegmentation) -> np.ndarray:
    """(num_channels x 3) pulse strength of each capacitive channel against
    the PPG within each pressure phase. Empty phases contribute 0."""
    for s, e in seg.phases:
        if e > rec.num_samples:
            raise ValueError("segmentation extends past the recording")
    out = np.zeros((rec.num_channels, 3))
    for ci, chan in enumerate(rec.capacitive):
        for pi, (s, e) in enumerate(seg.phases):
            out[ci, pi] = _segment_strength(chan, rec.ppg, s, e)
    return out


def channel_pressure_bin_power(
    rec: WristRecording,
    bin_width_mmhg: float = 20.0,
    within: tuple[int, int] | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Pulse strength per channel inside fixed-width pressure bins.

    Returns (bin_edges, matrix) where matrix is (num_channels x num_bins).
    Each bin is evaluated over the contiguous runs of samples whose pressure
    falls inside it (optionally restricted to the `within` sample range, e.g.
    one phase); runs shorter than 8 samples are ignored and the rest pool by
    a duration-weighted mean.
    """
    if bin_width_mmhg <= 0:
        raise ValueError("bin width must be > 0")
    lo, hi = rec.spec.pressure_range_mmhg
    edges = np.arange(lo, hi + bin_width_mmhg / 2, bin_width_mmhg)
    if edges[-1] < hi:
        edges = np.append(edges, hi)
    start, end = within if within is not None else (0, rec.num_samples)
    p = rec.pressure.samples
    out = np.zeros((rec.num_channels, len(edges) - 1))
    for bi in range(len(edges) - 1):
        blo, bhi = edges[bi], edges[bi + 1]
        inside = (p >= blo) & (p < bhi if bi < len(edges) - 2 else p <= bhi)
        inside[:start] = False
        inside[end:] = False
        runs = _contiguous_runs(inside)
        weights = [e - s for s, e in runs]
        if not runs:
            continue
        for ci, chan in enumerate(rec.capacitive):
            vals = [_segment_strength(chan, rec.ppg, s, e) for s, e in runs]
            out[ci, bi] = float(np.average(vals, weights=weights))
    return edges, out


def _contiguous_runs(mask: np.ndarray) -> list[tuple[int, int]]:
    idx = np.nonzero(mask)[0]
    if idx.size == 0:
        return []
    breaks = np.nonzero(np.diff(idx) > 1)[0]
    starts = np.concatenate([[idx[0]], idx[breaks + 1]])
    ends = np.concatenate([idx[breaks] + 1, [idx[-1] + 1]])
    return [(int(s), int(e)) for s, e in zip(starts, ends) if e - s >= 8]


def spatial_pulse_map(rec: WristRecording, layout: np.ndarray | None = None) -> SpatialPulseMap:
    """Per-sensor full-record strength plus the pulse length/width.

    Length (width) is the extent along the longitudinal x (transverse y)
    axis spanned by sensors whose strength reaches half the maximum. A
    single qualifying sensor, or an all-zero map, yields 0 extents.
    """
    if layout is None:
        layout = default_sensor_layout(rec.num_channels)
    layout = np.asarray(layout, dtype=np.float64)
    if layout.ndim != 2 or layout.shape != (rec.num_channels, 2):
        raise LayoutMismatch(
            f"layout shape {layout.shape} does not match {rec.num_channels} channels"
        )
    strengths = np.array(
        [pulse_strength(chan, rec.ppg) for chan in rec.capacitive]
    )
    top = strengths.max()
    if top <= 0:
        return SpatialPulseMap(layout, strengths, 0.0, 0.0)
    qual = strengths >= 0.5 * top
    xs = layout[qual, 0]
    ys = layout[qual, 1]
    return SpatialPulseMap(layout, strengths, float(xs.max() - xs.min()), float(ys.max() - ys.min()))


def power_timeline(
    rec: WristRecording,
    window_s: float = TIMELINE_WINDOW_S,
    overlap: float = TIMELINE_OVERLAP,
) -> tuple[np.ndarray, np.ndarray]:
    """Sliding-window pulse strength per channel.

    Windows of `window_s` seconds advance by (1 - overlap) * window_s; the
    reported time is the window center. Returns (times, (channels x windows)).
    """
    if not (0 <= overlap < 1):
        raise ValueError("overlap must lie in [0, 1)")
    wlen = int(round(window_s * rec.rate_hz))
    hop = max(1, int(round(wlen * (1 - overlap))))
    if wlen < 2 or wlen > rec.num_samples:
        raise TooShort("window longer than the recording")
    starts = list(range(0, rec.num_samples - wlen + 1, hop))
    times = np.array([(s + wlen / 2) / rec.rate_hz for s in starts])
    powers = np.zeros((rec.num_channels, len(starts)))
    for ci, chan in enumerate(rec.capacitive):
        for wi, s in enumerate(starts):
            powers[ci, wi] = _segment_strength(chan, rec.ppg, s, s + wlen)
    return times, powers


def extract_pulse_features(
    rec: WristRecording,
    layout: np.ndarray | None = None,
    max_lag_s: float = DEFAULT_MAX_LAG_S,
) -> PulseFeatures:
    """Run the full per-recording pulse pipeline. Deterministic: identical
    inputs produce identical outputs."""
    hr = estimate_heart_rate(rec.ppg)
    lags = np.zeros(rec.num_channels)
    confidences = np.zeros(rec.num_channels)
    strengths = np.zeros(rec.num_channels)
    for ci, chan in enumerate(rec.capacitive):
        est = lag_time(rec.ppg, chan, max_lag_s)
        lags[ci] = est.lag_s
        confidences[ci] = est.confidence
        strengths[ci] = pulse_strength(chan, rec.ppg)
    seg = segment_pressure_phases(rec.pressure)
    phase_power = channel_phase_power(rec, seg)
    times, powers = power_timeline(rec)
    smap = spatial_pulse_map(rec, layout)
    return PulseFeatures(
        heart_rate_bpm=hr,
        channel_strength=strengths,
        lag_s=lags,
        lag_confidence=confidences,
        phase_power=phase_power,
        timeline_t_s=times,
        timeline_power=powers,
        spatial_map=smap,
        segmentation=seg,
    )


def features_to_json_dict(feat: PulseFeatures) -> dict:
    """Analysis-report form consumed by the service and console."""
    return {
        "heart_rate_bpm": feat.heart_rate_bpm,
        "channel_strength": feat.channel_strength.tolist(),
        "lag_s": feat.lag_s.tolist(),
        "lag_confidence": feat.lag_confidence.tolist(),
        "phase_power": feat.phase_power.tolist(),
        "power_timeline": [
            [
                {"t_s": float(t), "strength": float(p)}
                for t, p in zip(feat.timeline_t_s, channel_row)
            ]
            for channel_row in feat.timeline_power
        ],
        "spatial_map": {
            "length_mm": feat.spatial_map.length_mm,
            "width_mm": feat.spatial_map.width_mm,
            "strength": feat.spatial_map.strength.tolist(),
            "sensor_xy_mm": feat.spatial_map.sensor_xy_mm.tolist(),
        },
        "phase_segmentation": feat.segmentation.as_dict(),
    }
