"""Thermal-frame feature extraction for temperament assessment.

Two fixed feature vectors are produced per region of interest:

* warm/cold (13 entries) — pooled temperature statistics of the latest
  frame plus two temporal terms over the per-frame means;
* dry/wet (12 entries) — texture / distribution descriptors of a single
  frame.

The vector lengths are contractual; downstream classifiers depend on them.
Gradients use one-sided pixel differences (forward, with the trailing
row/column mirroring its neighbour) so a one-pixel checkerboard registers
as fully edged.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import label as cc_label

from .errors import (
    DimensionMismatch,
    ImplausibleTemperature,
    OutOfBounds,
    RoiTooSmall,
)

REGION_KINDS = ("wrist_malmas", "hand_back", "face")

TEMP_PLAUSIBLE_C = (0.0, 50.0)
HIST_BINS = 16
GLCM_LEVELS = 16
EDGE_THRESHOLD_C_PER_PX = 0.5
MODE_HALF_WIDTH_C = 0.5

WARM_COLD_NAMES = (
    "mean",
    "median",
    "std",
    "min",
    "max",
    "range",
    "p10",
    "p90",
    "iqr",
    "skewness",
    "kurtosis",
    "temporal_std",
    "temporal_slope",
)

DRY_WET_NAMES = (
    "gradient_mean",
    "gradient_std",
    "entropy",
    "uniformity",
    "glcm_contrast",
    "glcm_homogeneity",
    "coeff_variation",
    "mode_concentration",
    "hot_region_count",
    "edge_density",
    "lr_asymmetry",
    "smoothness",
)


@dataclass(frozen=True)
class ThermalFrame:
    """A row-major temperature grid in deg C."""

    width: int
    height: int
    temps_c: np.ndarray
    captured_at_s: float = 0.0

    def __post_init__(self):
        grid = np.asarray(self.temps_c, dtype=np.float64)
        if grid.ndim == 1:
            grid = grid.reshape(self.height, self.width)
        if grid.shape != (self.height, self.width):
            raise DimensionMismatch(
                f"grid shape {grid.shape} != ({self.height}, {self.width})"
            )
        if not np.all(np.isfinite(grid)):
            raise ImplausibleTemperature("non-finite temperature")
        lo, hi = TEMP_PLAUSIBLE_C
        if grid.min() < lo or grid.max() > hi:
            raise ImplausibleTemperature(
                f"temperatures outside [{lo}, {hi}] deg C are implausible for skin imaging"
            )
        grid.setflags(write=False)
        object.__setattr__(self, "temps_c", grid)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ThermalFrame):
            return NotImplemented
        return (
            self.width == other.width
            and self.height == other.height
            and self.captured_at_s == other.captured_at_s
            and np.array_equal(self.temps_c, other.temps_c)
        )


@dataclass(frozen=True)
class Roi:
    """A rectangular region of interest, half-open pixel rect [x0, y0, x1, y1)."""

    region_kind: str
    rect: tuple[int, int, int, int]

    def __post_init__(self):
        if self.region_kind not in REGION_KINDS:
            raise ValueError(f"region_kind must be one of {REGION_KINDS}")
        x0, y0, x1, y1 = self.rect
        if not (x0 < x1 and y0 < y1) or min(x0, y0) < 0:
            raise ValueError(f"rect {self.rect} must be non-empty and non-negative")
        object.__setattr__(self, "rect", (int(x0), int(y0), int(x1), int(y1)))


@dataclass(frozen=True)
class FeatureVector:
    kind: str  # "warm_cold" | "dry_wet"
    values: np.ndarray
    names: tuple[str, ...]
    single_frame: bool = False

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.shape != (len(self.names),):
            raise DimensionMismatch("values and names lengths differ")
        if not np.all(np.isfinite(vals)):
            raise ValueError("feature values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def as_dict(self) -> dict:
        return dict(zip(self.names, self.values.tolist()))


def extract_roi(frame: ThermalFrame, roi: Roi) -> ThermalFrame:
    """Crop a frame to the ROI rect."""
    x0, y0, x1, y1 = roi.rect
    if x1 > frame.width or y1 > frame.height:
        raise OutOfBounds(f"rect {roi.rect} exceeds frame {frame.width}x{frame.height}")
    sub = frame.temps_c[y0:y1, x0:x1].copy()
    return ThermalFrame(x1 - x0, y1 - y0, sub, frame.captured_at_s)


def _is_constant(x: np.ndarray) -> bool:
    # ptp is exact where std suffers mean-cancellation noise (~1 ulp) on
    # frames whose pixels are all the same float
    return float(np.ptp(x)) == 0.0


def _skewness(x: np.ndarray) -> float:
    if _is_constant(x):
        return 0.0
    sd = x.std()
    if sd == 0:
        return 0.0
    return float(np.mean(((x - x.mean()) / sd) ** 3))


def _excess_kurtosis(x: np.ndarray) -> float:
    if _is_constant(x):
        return 0.0
    sd = x.std()
    if sd == 0:
        return 0.0
    return float(np.mean(((x - x.mean()) / sd) ** 4) - 3.0)


def warm_cold_features(frames: list[ThermalFrame]) -> FeatureVector:
    """The 13 warm/cold features of one ROI.

    Pooled pixel statistics (mean, median, std, min, max, range, p10, p90,
    IQR, skewness, excess kurtosis) come from the last frame; temporal std
    and the least-squares slope of per-frame means (deg C per frame
    interval) capture fluctuation across frames. A single frame yields zero
    temporal terms and sets the single_frame flag.
    """
    if not frames:
        raise ValueError("at least one frame required")
    shape = (frames[0].height, frames[0].width)
    for fr in frames:
        if (fr.height, fr.width) != shape:
            raise DimensionMismatch("frames must share dimensions")
    px = frames[-1].temps_c.ravel()
    p10, p25, p75, p90 = np.percentile(px, [10, 25, 75, 90])
    means = np.array([fr.temps_c.mean() for fr in frames])
    if len(frames) == 1 or _is_constant(means):
        t_std, t_slope = 0.0, 0.0
    else:
        t_std = float(means.std())
        idx = np.arange(len(frames), dtype=float)
        idx -= idx.mean()
        t_slope = float((idx @ (means - means.mean())) / (idx @ idx))
    values = [
        float(px.mean()),
        float(np.median(px)),
        float(px.std()),
        float(px.min()),
        float(px.max()),
        float(px.max() - px.min()),
        float(p10),
        float(p90),
        float(p75 - p25),
        _skewness(px),
        _excess_kurtosis(px),
        t_std,
        t_slope,
    ]
    return FeatureVector("warm_cold", np.array(values), WARM_COLD_NAMES, single_frame=len(frames) == 1)


def gradient_magnitude(grid: np.ndarray) -> np.ndarray:
    """Per-pixel gradient magnitude from one-sided differences (deg C / px)."""
    if grid.shape[0] < 2 or grid.shape[1] < 2:
        raise RoiTooSmall("gradient needs at least 2x2 pixels")
    gx = np.empty_like(grid)
    gx[:, :-1] = grid[:, 1:] - grid[:, :-1]
    gx[:, -1] = gx[:, -2]
    gy = np.empty_like(grid)
    gy[:-1, :] = grid[1:, :] - grid[:-1, :]
    gy[-1, :] = gy[-2, :]
    return np.hypot(gx, gy)


def _histogram(px: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    lo, hi = float(px.min()), float(px.max())
    if lo == hi:
        counts = np.zeros(HIST_BINS)
        counts[0] = px.size
        centers = np.full(HIST_BINS, lo)
        return counts, centers
    counts, edges = np.histogram(px, bins=HIST_BINS, range=(lo, hi))
    centers = (edges[:-1] + edges[1:]) / 2
    return counts.astype(float), centers


def _quantize(grid: np.ndarray) -> np.ndarray:
    lo, hi = float(grid.min()), float(grid.max())
    if lo == hi:
        return np.zeros_like(grid, dtype=np.intp)
    q = np.floor((grid - lo) / (hi - lo) * GLCM_LEVELS).astype(np.intp)
    return np.clip(q, 0, GLCM_LEVELS - 1)


def _glcm_contrast_homogeneity(grid: np.ndarray) -> tuple[float, float]:
    # co-occurrence at offset (1, 0): horizontal right neighbour
    q = _quantize(grid)
    left = q[:, :-1].ravel()
    right = q[:, 1:].ravel()
    diff = left - right
    npairs = diff.size
    contrast = float(np.mean(diff.astype(float) ** 2))
    homogeneity = float(np.mean(1.0 / (1.0 + diff.astype(float) ** 2)))
    return (contrast, homogeneity) if npairs else (0.0, 1.0)


def dry_wet_features(frame: ThermalFrame) -> FeatureVector:
    """The 12 dry/wet texture features of one ROI frame (min size 8x8).

    Entropy is Shannon entropy in bits over a 16-bin histogram spanning
    [min, max]; co-occurrence statistics use 16 quantization levels at
    offset (1, 0); hot regions are 4-connected components at or above
    mean + std (none when the frame is constant); edge density counts
    pixels with gradient magnitude above 0.5 deg C/px.
    """
    if frame.width < 8 or frame.height < 8:
        raise RoiTooSmall(f"need at least 8x8 pixels, got {frame.width}x{frame.height}")
    grid = frame.temps_c
    px = grid.ravel()
    mag = gradient_magnitude(grid)

    counts, centers = _histogram(px)
    probs = counts / counts.sum()
    nz = probs[probs > 0]
    entropy = float(-(nz * np.log2(nz)).sum())
    uniformity = float((probs**2).sum())

    contrast, homogeneity = _glcm_contrast_homogeneity(grid)

    mean = float(px.mean())
    sd = float(px.std())
    cov = sd / mean if mean > 0 else 0.0

    mode_center = float(centers[int(np.argmax(counts))])
    mode_conc = float(np.mean(np.abs(px - mode_center) <= MODE_HALF_WIDTH_C))

    if sd == 0 or _is_constant(px):
        hot_regions = 0
    else:
        _, hot_regions = cc_label(grid >= mean + sd)

    edge_density = float(np.mean(mag > EDGE_THRESHOLD_C_PER_PX))

    half = frame.width // 2
    asym = abs(float(grid[:, :half].mean()) - float(grid[:, frame.width - half :].mean()))

    smoothness = 1.0 - 1.0 / (1.0 + float(px.var()))

    values = [
        float(mag.mean()),
        float(mag.std()),
        entropy,
        uniformity,
        contrast,
        homogeneity,
        cov,
        mode_conc,
        float(hot_regions),
        edge_density,
        asym,
        smoothness,
    ]
    return FeatureVector("dry_wet", np.array(values), DRY_WET_NAMES)


# --- frame interchange format ----------------------------------------------


def write_thermal_frame(frame: ThermalFrame, path, roi: Roi | None = None) -> None:
    """ASCII matrix file: `width height` then height rows of temperatures.

    When `roi` is given, a JSON sidecar `<path>.json` records
    {region_kind, rect, captured_at_s}.
    """
    rows = frame.temps_c.tolist()
    lines = [f"{frame.width} {frame.height}"]
    lines += [" ".join(repr(v) for v in row) for row in rows]
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("\n".join(lines) + "\n")
    if roi is not None:
        sidecar = {
            "region_kind": roi.region_kind,
            "rect": list(roi.rect),
            "captured_at_s": frame.captured_at_s,
        }
        with open(str(path) + ".json", "w", encoding="utf-8") as f:
            json.dump(sidecar, f, sort_keys=True)
            f.write("\n")


def read_thermal_frame(path) -> tuple[ThermalFrame, Roi | None]:
    """Read an ASCII matrix file and its sidecar when present."""
    with open(path, "r", encoding="utf-8") as f:
        header = f.readline().split()
        width, height = int(header[0]), int(header[1])
        grid = [[float(v) for v in f.readline().split()] for _ in range(height)]
    captured = 0.0
    roi = None
    sidecar_path = str(path) + ".json"
    if os.path.exists(sidecar_path):
        with open(sidecar_path, "r", encoding="utf-8") as f:
            sidecar = json.load(f)
        captured = float(sidecar.get("captured_at_s", 0.0))
        roi = Roi(sidecar["region_kind"], tuple(sidecar["rect"]))
    return ThermalFrame(width, height, np.asarray(grid), captured), roi
