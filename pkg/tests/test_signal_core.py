import numpy as np
import pytest

from pmtelecare.errors import (
    InvalidCutoff,
    LagTooLarge,
    MismatchedLength,
    MismatchedRate,
    NonFiniteSample,
    TooShort,
)
from pmtelecare.signal_core import (
    AcquisitionSpec,
    TimeSeries,
    cross_correlation,
    detrend,
    lowpass_filter,
    make_recording,
    read_signals_csv,
    write_signals_csv,
)

FS = 200.0


def ts(samples, rate=FS, label="x"):
    return TimeSeries(np.asarray(samples, dtype=float), rate, label)


def sine(freq_hz, duration_s, rate=FS, amp=1.0, phase=0.0):
    t = np.arange(int(round(duration_s * rate))) / rate
    return ts(amp * np.sin(2 * np.pi * freq_hz * t + phase), rate=rate)


def rms(x):
    return float(np.sqrt(np.mean(np.square(x))))


def brute_force_xcorr(x, y, max_lag):
    """Independent O(N*L) oracle for the biased estimator."""
    n = len(x)
    out = np.zeros(2 * max_lag + 1)
    for i, k in enumerate(range(-max_lag, max_lag + 1)):
        acc = 0.0
        for m in range(n):
            j = m + k
            if 0 <= j < n:
                acc += x[m] * y[j]
        out[i] = acc / n
    return out


class TestTimeSeries:
    def test_rejects_nan(self):
        with pytest.raises(NonFiniteSample):
            ts([1.0, np.nan])

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            ts([])

    def test_rejects_bad_rate(self):
        with pytest.raises(ValueError):
            TimeSeries(np.ones(4), 0.0)

    def test_immutable(self):
        s = ts([1.0, 2.0])
        with pytest.raises(ValueError):
            s.samples[0] = 9.0


class TestMakeRecording:
    def make(self, n=12000, nch=7):
        cap = [ts(np.random.default_rng(i).normal(size=n), label=f"c{i+1}") for i in range(nch)]
        ppg = ts(np.zeros(n) + 1.0, label="ppg")
        pressure = ts(np.zeros(n), label="pressure")
        return cap, ppg, pressure

    def test_valid_recording_60s(self):
        cap, ppg, pressure = self.make()
        rec = make_recording(cap, ppg, pressure, AcquisitionSpec())
        assert rec.num_channels == 7
        assert rec.duration_s == pytest.approx(60.0)

    def test_mismatched_length(self):
        cap, ppg, pressure = self.make()
        short = ts(ppg.samples[:-1], label="ppg")
        with pytest.raises(MismatchedLength):
            make_recording(cap, short, pressure)

    def test_mismatched_rate(self):
        cap, ppg, pressure = self.make()
        odd = TimeSeries(ppg.samples, 250.0, "ppg")
        with pytest.raises(MismatchedRate):
            make_recording(cap, odd, pressure)

    def test_nan_pressure(self):
        cap, ppg, pressure = self.make()
        bad = pressure.samples.copy()
        bad[5] = np.nan
        with pytest.raises(NonFiniteSample):
            make_recording(cap, ppg, ts(bad, label="pressure"))


class TestLowpassFilter:
    def test_constant_passes(self):
        out = lowpass_filter(ts(np.full(2000, 3.0)), 20.0)
        assert np.allclose(out.samples, 3.0, atol=1e-9)
        assert len(out) == 2000 and out.rate_hz == FS

    def test_stopband_50hz(self):
        x = sine(50.0, 20.0)
        out = lowpass_filter(x, 20.0)
        assert rms(out.samples) <= 0.01 * rms(x.samples)

    def test_passband_1hz(self):
        x = sine(1.0, 20.0)
        out = lowpass_filter(x, 20.0)
        # compare away from the edges
        inner = slice(400, -400)
        assert np.abs(out.samples[inner]).max() == pytest.approx(1.0, rel=0.01)

    def test_attenuation_at_2p5x_cutoff(self):
        x = sine(2.5 * 20.0, 30.0)
        out = lowpass_filter(x, 20.0)
        inner = slice(600, -600)
        ratio = rms(out.samples[inner]) / rms(x.samples[inner])
        assert 20 * np.log10(ratio) <= -40.0

    def test_invalid_cutoff(self):
        with pytest.raises(InvalidCutoff):
            lowpass_filter(sine(1.0, 1.0), 100.0)
        with pytest.raises(InvalidCutoff):
            lowpass_filter(sine(1.0, 1.0), 0.0)

    def test_idempotent_in_band(self):
        t = np.arange(4000) / FS
        x = ts(np.sin(2 * np.pi * 1 * t) + 0.5 * np.sin(2 * np.pi * 3 * t) + 0.2 * np.sin(2 * np.pi * 7 * t))
        once = lowpass_filter(x, 20.0)
        twice = lowpass_filter(once, 20.0)
        assert abs(rms(twice.samples) - rms(once.samples)) < 0.01 * rms(once.samples)

    def test_zero_phase_peak_timing(self):
        t = np.arange(2000) / FS
        x = ts(np.exp(-0.5 * ((t - 5.0) / 0.1) ** 2))
        out = lowpass_filter(x, 20.0)
        assert abs(int(np.argmax(out.samples)) - int(np.argmax(x.samples))) <= 1


class TestDetrend:
    def test_constant(self):
        out = detrend(ts([1.0, 1.0, 1.0, 1.0]))
        assert np.allclose(out.samples, 0.0, atol=1e-12)

    def test_pure_line(self):
        out = detrend(ts([0.0, 1.0, 2.0, 3.0]))
        assert np.max(np.abs(out.samples)) < 1e-12

    def test_sine_plus_line_recovered(self):
        # detrending is linear, so detrend(wave + line) == detrend(wave)
        t = np.arange(2000) / FS
        wave = np.sin(2 * np.pi * 1.3 * t)
        out = detrend(ts(wave + 0.7 * t + 3.0)).samples
        expected = detrend(ts(wave)).samples
        assert np.max(np.abs(out - expected)) < 1e-9
        tc = t - t.mean()
        slope = (tc @ out) / (tc @ tc)
        assert abs(slope) < 1e-9

    def test_too_short(self):
        with pytest.raises(TooShort):
            detrend(ts([1.0]))

    def test_preserves_length_and_rate(self):
        x = sine(2.0, 3.0)
        out = detrend(x)
        assert len(out) == len(x) and out.rate_hz == x.rate_hz


class TestCrossCorrelation:
    def test_autocorrelation_peak_at_zero(self):
        x = sine(1.7, 10.0)
        cf = cross_correlation(x, x, 1.0)
        assert cf.lags_s[int(np.argmax(cf.values))] == 0.0

    def test_known_shift(self):
        rng = np.random.default_rng(7)
        base = rng.normal(size=2000)
        x = ts(base)
        y = ts(np.concatenate([np.zeros(10), base[:-10]]))
        cf = cross_correlation(x, y, 0.25)
        assert cf.lags_s[int(np.argmax(cf.values))] == pytest.approx(+0.05)

    def test_zero_signal(self):
        x = ts(np.zeros(500))
        y = sine(1.0, 2.5)
        cf = cross_correlation(x, y, 0.5)
        assert np.all(cf.values == 0.0)

    def test_matches_brute_force_oracle(self):
        rng = np.random.default_rng(42)
        for _ in range(5):
            n = int(rng.integers(16, 512))
            x = rng.normal(size=n)
            y = rng.normal(size=n)
            max_lag = int(rng.integers(1, n // 2))
            got = cross_correlation(ts(x), ts(y), max_lag / FS).values
            want = brute_force_xcorr(x, y, max_lag)
            bound = 1e-9 * np.abs(x).max() * np.abs(y).max()
            assert np.max(np.abs(got - want)) <= bound

    def test_symmetry_property(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            n = int(rng.integers(8, 256))
            x = ts(rng.normal(size=n))
            y = ts(rng.normal(size=n))
            max_lag = int(rng.integers(1, n))
            fwd = cross_correlation(x, y, max_lag / FS)
            rev = cross_correlation(y, x, max_lag / FS)
            scale = max(np.abs(fwd.values).max(), 1e-30)
            assert np.max(np.abs(fwd.values - rev.values[::-1])) <= 1e-9 * scale

    def test_errors(self):
        x = sine(1.0, 2.0)
        with pytest.raises(MismatchedLength):
            cross_correlation(x, sine(1.0, 1.0), 0.1)
        with pytest.raises(MismatchedRate):
            cross_correlation(x, sine(1.0, 4.0, rate=100.0), 0.1)
        with pytest.raises(LagTooLarge):
            cross_correlation(x, x, 10.0)


class TestSignalsCsv:
    def test_round_trip_exact(self, tmp_path):
        rng = np.random.default_rng(11)
        n = 400
        cap = [ts(rng.normal(size=n), label=f"c{i+1}") for i in range(7)]
        ppg = ts(rng.normal(size=n), label="ppg")
        pressure = ts(rng.uniform(0, 180, size=n), label="pressure")
        rec = make_recording(cap, ppg, pressure, AcquisitionSpec(duration_s=n / FS))
        path = tmp_path / "signals.csv"
        write_signals_csv(rec, path)
        back = read_signals_csv(path, rec.spec)
        assert back.num_channels == 7
        for a, b in zip(back.capacitive, rec.capacitive):
            assert np.array_equal(a.samples, b.samples)
        assert np.array_equal(back.ppg.samples, rec.ppg.samples)
        assert np.array_equal(back.pressure.samples, rec.pressure.samples)

    def test_header_format(self, tmp_path):
        n = 300
        cap = [ts(np.zeros(n), label=f"c{i+1}") for i in range(7)]
        rec = make_recording(cap, ts(np.ones(n)), ts(np.zeros(n)), AcquisitionSpec(duration_s=n / FS))
        path = tmp_path / "s.csv"
        write_signals_csv(rec, path)
        text = path.read_text()
        assert text.splitlines()[0] == "t,c1,c2,c3,c4,c5,c6,c7,ppg,pressure"
        assert "\r" not in text

    def test_rate_inference(self, tmp_path):
        n = 300
        cap = [ts(np.zeros(n), label="c1")]
        rec = make_recording(cap, ts(np.ones(n)), ts(np.zeros(n)), AcquisitionSpec(duration_s=n / FS))
        path = tmp_path / "s.csv"
        write_signals_csv(rec, path)
        back = read_signals_csv(path)
        assert back.rate_hz == pytest.approx(FS, rel=1e-9)
