import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pmtelecare.errors import (
    DimensionMismatch,
    ImplausibleTemperature,
    OutOfBounds,
    RoiTooSmall,
)
from pmtelecare.thermal_features import (
    DRY_WET_NAMES,
    WARM_COLD_NAMES,
    FeatureVector,
    Roi,
    ThermalFrame,
    dry_wet_features,
    extract_roi,
    gradient_magnitude,
    read_thermal_frame,
    warm_cold_features,
    write_thermal_frame,
)


def frame(grid, captured=0.0):
    grid = np.asarray(grid, dtype=float)
    return ThermalFrame(grid.shape[1], grid.shape[0], grid, captured)


def const_frame(value, w=16, h=16):
    return frame(np.full((h, w), float(value)))


def checkerboard(w=16, h=16, lo=30.0, hi=31.0):
    rr, cc = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    return frame(np.where((rr + cc) % 2 == 0, lo, hi))


@st.composite
def random_frames(draw, min_side=8, max_side=24):
    w = draw(st.integers(min_side, max_side))
    h = draw(st.integers(min_side, max_side))
    base = draw(st.floats(5.0, 45.0))
    # exactly constant, or textured at >= 0.01 degC (the scale of real camera
    # noise floors); spreads near float eps make normalized moments
    # ill-conditioned and no shift-invariance bound can hold for them
    amp = draw(st.one_of(st.just(0.0), st.floats(0.01, 4.0)))
    seed = draw(st.integers(0, 2**31 - 1))
    rng = np.random.default_rng(seed)
    grid = np.clip(base + amp * rng.standard_normal((h, w)), 0.0, 50.0)
    return frame(grid)


class TestThermalFrame:
    def test_rejects_nan(self):
        grid = np.full((8, 8), 30.0)
        grid[0, 0] = np.nan
        with pytest.raises(ImplausibleTemperature):
            frame(grid)

    def test_rejects_out_of_band(self):
        with pytest.raises(ImplausibleTemperature):
            const_frame(80.0)
        with pytest.raises(ImplausibleTemperature):
            const_frame(-3.0)

    def test_rejects_shape_mismatch(self):
        with pytest.raises(DimensionMismatch):
            ThermalFrame(4, 4, np.zeros((3, 4)) + 30.0)


class TestExtractRoi:
    def test_identity_crop(self):
        f = checkerboard()
        out = extract_roi(f, Roi("face", (0, 0, f.width, f.height)))
        assert out == f

    def test_corner_crop(self):
        grid = np.arange(16, dtype=float).reshape(4, 4) + 20.0
        f = frame(grid)
        out = extract_roi(f, Roi("wrist_malmas", (0, 0, 2, 2)))
        assert out.width == 2 and out.height == 2
        assert np.array_equal(out.temps_c, grid[:2, :2])

    def test_out_of_bounds(self):
        f = const_frame(30.0, 8, 8)
        with pytest.raises(OutOfBounds):
            extract_roi(f, Roi("face", (0, 0, 9, 4)))


class TestWarmColdFeatures:
    def test_constant_frame(self):
        fv = warm_cold_features([const_frame(30.0)])
        d = fv.as_dict()
        assert fv.kind == "warm_cold"
        assert fv.single_frame
        assert d["mean"] == 30.0
        assert d["median"] == 30.0
        assert d["std"] == 0.0
        assert d["range"] == 0.0
        assert d["skewness"] == 0.0
        assert d["kurtosis"] == 0.0
        assert d["temporal_std"] == 0.0 and d["temporal_slope"] == 0.0

    def test_two_constant_frames_temporal(self):
        fv = warm_cold_features([const_frame(30.0), const_frame(31.0)])
        d = fv.as_dict()
        assert not fv.single_frame
        assert d["temporal_std"] == pytest.approx(np.std([30.0, 31.0]))
        assert d["temporal_slope"] == pytest.approx(1.0)

    def test_linear_gradient_order_stats(self):
        w, h = 16, 12
        row = np.linspace(28.0, 32.0, w)
        grid = np.tile(row, (h, 1))
        fv = warm_cold_features([frame(grid)])
        d = fv.as_dict()
        px = grid.ravel()
        assert d["mean"] == pytest.approx(px.mean())
        assert d["median"] == pytest.approx(np.median(px))
        assert d["std"] == pytest.approx(px.std())
        assert d["min"] == 28.0 and d["max"] == 32.0
        assert d["p10"] == pytest.approx(np.percentile(px, 10))
        assert d["p90"] == pytest.approx(np.percentile(px, 90))
        assert d["iqr"] == pytest.approx(np.percentile(px, 75) - np.percentile(px, 25))

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            warm_cold_features([const_frame(30.0, 8, 8), const_frame(30.0, 9, 8)])

    @given(random_frames())
    @settings(max_examples=40, deadline=None)
    def test_always_13_entries(self, f):
        fv = warm_cold_features([f])
        assert fv.values.shape == (13,)
        assert fv.names == WARM_COLD_NAMES

    @given(random_frames(), st.integers(0, 2**31 - 1))
    @settings(max_examples=25, deadline=None)
    def test_spatial_entries_shuffle_invariant(self, f, seed):
        fv1 = warm_cold_features([f])
        shuffled = np.random.default_rng(seed).permutation(f.temps_c.ravel())
        fv2 = warm_cold_features([frame(shuffled.reshape(f.temps_c.shape))])
        # the 11 pooled statistics ignore pixel arrangement
        assert np.allclose(fv1.values[:11], fv2.values[:11], atol=1e-9)

    @given(random_frames(), st.floats(-4.0, 4.0))
    @settings(max_examples=25, deadline=None)
    def test_constant_shift(self, f, c):
        shifted_grid = f.temps_c + c
        if shifted_grid.min() < 0 or shifted_grid.max() > 50:
            return
        a = warm_cold_features([f]).as_dict()
        b = warm_cold_features([frame(shifted_grid)]).as_dict()
        for name in ("mean", "median", "min", "max", "p10", "p90"):
            assert b[name] == pytest.approx(a[name] + c, abs=1e-9)
        for name in ("std", "iqr", "skewness", "kurtosis", "range"):
            assert b[name] == pytest.approx(a[name], abs=1e-9)


class TestDryWetFeatures:
    def test_constant_frame(self):
        d = dry_wet_features(const_frame(30.0)).as_dict()
        assert d["entropy"] == 0.0
        assert d["uniformity"] == 1.0
        assert d["glcm_contrast"] == 0.0
        assert d["glcm_homogeneity"] == 1.0
        assert d["edge_density"] == 0.0
        assert d["hot_region_count"] == 0.0
        assert d["lr_asymmetry"] == 0.0
        assert d["gradient_mean"] == 0.0
        assert d["smoothness"] == 0.0

    def test_checkerboard_closed_form(self):
        f = checkerboard(16, 16, 30.0, 31.0)
        d = dry_wet_features(f).as_dict()
        # one-sided differences see +-1 in both directions everywhere
        assert d["edge_density"] == 1.0
        assert d["gradient_mean"] == pytest.approx(np.sqrt(2.0))
        assert d["gradient_std"] == pytest.approx(0.0, abs=1e-12)
        # alternating pixels quantize to levels 0 and 15: contrast is maximal
        assert d["glcm_contrast"] == pytest.approx(15.0**2)
        # two equally filled histogram bins -> 1 bit
        assert d["entropy"] == pytest.approx(1.0)
        assert d["uniformity"] == pytest.approx(0.5)

    def test_half_split_frame(self):
        grid = np.full((16, 16), 30.0)
        grid[:, 8:] = 32.0
        d = dry_wet_features(frame(grid)).as_dict()
        assert d["lr_asymmetry"] == pytest.approx(2.0)
        assert d["hot_region_count"] == 1.0

    def test_roi_too_small(self):
        with pytest.raises(RoiTooSmall):
            dry_wet_features(const_frame(30.0, 7, 16))

    @given(random_frames())
    @settings(max_examples=40, deadline=None)
    def test_always_12_entries(self, f):
        fv = dry_wet_features(f)
        assert fv.values.shape == (12,)
        assert fv.names == DRY_WET_NAMES

    def test_gradient_image_shuffle_changes_edge_density(self):
        # smooth ramp: almost no edges; shuffling the same pixels creates many
        w = h = 16
        row = np.linspace(28.0, 32.0, w)
        smooth = np.tile(row, (h, 1))
        d_smooth = dry_wet_features(frame(smooth)).as_dict()
        shuffled = np.random.default_rng(0).permutation(smooth.ravel()).reshape(h, w)
        d_shuf = dry_wet_features(frame(shuffled)).as_dict()
        assert d_shuf["edge_density"] > d_smooth["edge_density"]

    @given(random_frames(), st.floats(-4.0, 4.0))
    @settings(max_examples=25, deadline=None)
    def test_constant_shift_invariants(self, f, c):
        shifted_grid = f.temps_c + c
        if shifted_grid.min() < 0 or shifted_grid.max() > 50:
            return
        a = dry_wet_features(f).as_dict()
        b = dry_wet_features(frame(shifted_grid)).as_dict()
        for name in ("entropy", "glcm_contrast", "uniformity", "gradient_mean", "edge_density"):
            assert b[name] == pytest.approx(a[name], abs=1e-9)


class TestGradientMagnitude:
    def test_uniform_ramp(self):
        w = 12
        grid = np.tile(np.linspace(0.0, 11.0, w), (10, 1)) + 20.0
        mag = gradient_magnitude(grid)
        assert np.allclose(mag, 1.0)


class TestFrameIo:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(5)
        grid = 30.0 + rng.normal(0, 1, (12, 10))
        f = frame(np.clip(grid, 0, 50), captured=12.5)
        roi = Roi("hand_back", (0, 0, 10, 12))
        path = tmp_path / "frame.txt"
        write_thermal_frame(f, path, roi)
        back, roi_back = read_thermal_frame(path)
        assert back == f
        assert roi_back == roi

    def test_format_first_line(self, tmp_path):
        f = const_frame(30.0, 10, 12)
        path = tmp_path / "frame.txt"
        write_thermal_frame(f, path)
        first = path.read_text().splitlines()[0]
        assert first == "10 12"


def test_feature_vector_guards():
    with pytest.raises(DimensionMismatch):
        FeatureVector("warm_cold", np.zeros(5), WARM_COLD_NAMES)
