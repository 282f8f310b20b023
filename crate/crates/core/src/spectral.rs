//! Fourier power spectra and residual diagnostics for monthly series.
//!
//! Power normalization: with `X[k] = Σ_n x[n] exp(-2πi k n / N)`, the
//! one-sided spectrum keeps bins `0..=N/2` and stores `|X[k]|² / N²`, doubled
//! for `0 < k < N/2`. The bins then sum to the mean square of `x`
//! (average power per sample). No taper is applied.
//!
//! Frequencies are in cycles per year with a sampling rate of 12 per year.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::timeseries::MonthlySeries;

/// Samples per year for monthly data.
pub const MONTHLY_FS: f64 = 12.0;

#[derive(Debug, Clone, PartialEq)]
pub struct PowerSpectrum {
    pub freqs: Vec<f64>,
    pub power: Vec<f64>,
    pub n_samples: usize,
    pub fs: f64,
}

impl PowerSpectrum {
    pub fn total_power(&self) -> f64 {
        self.power.iter().sum()
    }

    /// Index of the strongest bin, ignoring the DC term.
    pub fn peak_bin(&self) -> Option<usize> {
        argmax_abs(&self.power[1..]).map(|k| k + 1)
    }

    /// `freq_cycles_per_year,power` rows.
    pub fn to_csv(&self) -> String {
        pairs_to_csv("freq_cycles_per_year,power", &self.freqs, &self.power)
    }

    /// Parses [`PowerSpectrum::to_csv`] output for a spectrum of `n_samples`
    /// samples at rate `fs`.
    pub fn from_csv(text: &str, n_samples: usize, fs: f64) -> Result<Self> {
        let (freqs, power) = pairs_from_csv(text, "freq_cycles_per_year,power")?;
        if freqs.len() != n_samples / 2 + 1 {
            return Err(Error::DimensionMismatch {
                expected: n_samples / 2 + 1,
                got: freqs.len(),
            });
        }
        Ok(Self {
            freqs,
            power,
            n_samples,
            fs,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualSpectrum {
    pub freqs: Vec<f64>,
    /// Predicted minus actual power, per bin.
    pub delta_power: Vec<f64>,
    /// `Σ|delta| / Σ actual power`.
    pub enclosed_power_fraction: f64,
    /// Bin with the largest `|delta|`.
    pub peak_bin: usize,
}

impl ResidualSpectrum {
    pub fn peak_freq(&self) -> f64 {
        self.freqs[self.peak_bin]
    }

    /// `freq_cycles_per_year,delta_power` rows.
    pub fn to_csv(&self) -> String {
        pairs_to_csv(
            "freq_cycles_per_year,delta_power",
            &self.freqs,
            &self.delta_power,
        )
    }

    /// Reads back `(freqs, delta_power)` from [`ResidualSpectrum::to_csv`].
    pub fn read_csv(text: &str) -> Result<(Vec<f64>, Vec<f64>)> {
        pairs_from_csv(text, "freq_cycles_per_year,delta_power")
    }
}

/// Month-by-month predicted minus actual rainfall.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferenceSeries {
    pub start_year: i32,
    pub start_month: u32,
    pub deltas: Vec<f64>,
}

impl DifferenceSeries {
    pub fn month_at(&self, index: usize) -> (i32, u32) {
        let m = self.start_year as i64 * 12 + self.start_month as i64 - 1 + index as i64;
        (m.div_euclid(12) as i32, m.rem_euclid(12) as u32 + 1)
    }

    /// `year,month,delta_mm` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("year,month,delta_mm\n");
        for (i, d) in self.deltas.iter().enumerate() {
            let (y, m) = self.month_at(i);
            let _ = writeln!(out, "{y},{m},{d}");
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next() != Some("year,month,delta_mm") {
            return Err(Error::MalformedRow {
                line: 1,
                msg: "expected header `year,month,delta_mm`".into(),
            });
        }
        let mut start = None;
        let mut deltas = Vec::new();
        for (i, l) in lines.enumerate() {
            let line = i as u64 + 2;
            let bad = |msg: &str| Error::MalformedRow {
                line,
                msg: msg.to_string(),
            };
            let mut it = l.split(',');
            let (Some(y), Some(m), Some(d), None) = (it.next(), it.next(), it.next(), it.next())
            else {
                return Err(bad("expected three fields"));
            };
            let y: i32 = y.parse().map_err(|_| bad("bad year"))?;
            let m: u32 = m.parse().map_err(|_| bad("bad month"))?;
            let d: f64 = d.parse().map_err(|_| bad("bad delta"))?;
            let start = *start.get_or_insert((y, m));
            let probe = DifferenceSeries {
                start_year: start.0,
                start_month: start.1,
                deltas: vec![],
            };
            if probe.month_at(deltas.len()) != (y, m) {
                return Err(bad("months are not consecutive"));
            }
            deltas.push(d);
        }
        let (start_year, start_month) =
            start.ok_or_else(|| Error::InvalidSeries("difference CSV has no rows".into()))?;
        Ok(Self {
            start_year,
            start_month,
            deltas,
        })
    }
}

/// Both residual panels of a train/test spectral comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumComparison {
    /// Predicted vs actual over the test window.
    pub model: ResidualSpectrum,
    /// Actual test window vs actual training window.
    pub drift: ResidualSpectrum,
    /// Number of samples in each compared window.
    pub window_len: usize,
}

impl SpectrumComparison {
    /// True when the model residual encloses less power than the drift
    /// between the two actual periods.
    pub fn model_beats_drift(&self) -> bool {
        self.model.enclosed_power_fraction < self.drift.enclosed_power_fraction
    }
}

fn pairs_to_csv(header: &str, a: &[f64], b: &[f64]) -> String {
    let mut out = String::with_capacity(24 * (a.len() + 1));
    out.push_str(header);
    out.push('\n');
    for (x, y) in a.iter().zip(b) {
        let _ = writeln!(out, "{x},{y}");
    }
    out
}

fn pairs_from_csv(text: &str, header: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut lines = text.lines();
    if lines.next() != Some(header) {
        return Err(Error::MalformedRow {
            line: 1,
            msg: format!("expected header `{header}`"),
        });
    }
    let mut a = Vec::new();
    let mut b = Vec::new();
    for (i, l) in lines.enumerate() {
        let line = i as u64 + 2;
        let parsed = l
            .split_once(',')
            .and_then(|(x, y)| Some((x.parse::<f64>().ok()?, y.parse::<f64>().ok()?)));
        let (x, y) = parsed.ok_or_else(|| Error::MalformedRow {
            line,
            msg: format!("expected two numbers, found `{l}`"),
        })?;
        a.push(x);
        b.push(y);
    }
    Ok((a, b))
}

fn argmax_abs(values: &[f64]) -> Option<usize> {
    values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .map(|(i, _)| i)
}

fn check_input(values: &[f64], fs: f64) -> Result<()> {
    if values.len() < 2 {
        return Err(Error::TooFewSamples(values.len()));
    }
    if !(fs > 0.0 && fs.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "sampling frequency must be positive, got {fs}"
        )));
    }
    if !values.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("spectral input"));
    }
    Ok(())
}

/// Direct O(N²) evaluation of the full two-sided DFT.
pub fn dft_direct(values: &[f64]) -> Vec<Complex64> {
    let n = values.len();
    (0..n)
        .map(|k| {
            values
                .iter()
                .enumerate()
                .map(|(t, &x)| {
                    // reduce k*t mod n before scaling to keep the angle small
                    let angle = -2.0 * PI * ((k * t) % n) as f64 / n as f64;
                    Complex64::from_polar(x, angle)
                })
                .sum()
        })
        .collect()
}

/// Full two-sided DFT via FFT.
pub fn dft_fft(values: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = values.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    buf
}

fn one_sided(spectrum: &[Complex64], fs: f64) -> PowerSpectrum {
    let n = spectrum.len();
    let n2 = (n * n) as f64;
    let bins = n / 2 + 1;
    let power = (0..bins)
        .map(|k| {
            let p = spectrum[k].norm_sqr() / n2;
            if k > 0 && 2 * k < n {
                2.0 * p
            } else {
                p
            }
        })
        .collect();
    PowerSpectrum {
        freqs: (0..bins).map(|k| k as f64 * fs / n as f64).collect(),
        power,
        n_samples: n,
        fs,
    }
}

/// One-sided average-power periodogram (FFT).
pub fn periodogram(values: &[f64], fs: f64) -> Result<PowerSpectrum> {
    check_input(values, fs)?;
    Ok(one_sided(&dft_fft(values), fs))
}

/// Same as [`periodogram`] but through the direct DFT sum.
pub fn periodogram_direct(values: &[f64], fs: f64) -> Result<PowerSpectrum> {
    check_input(values, fs)?;
    Ok(one_sided(&dft_direct(values), fs))
}

/// Per-bin `predicted - actual` power and the enclosed power fraction.
pub fn residual_fps(predicted: &PowerSpectrum, actual: &PowerSpectrum) -> Result<ResidualSpectrum> {
    if predicted.n_samples != actual.n_samples || predicted.fs != actual.fs {
        return Err(Error::GridMismatch {
            left: predicted.n_samples,
            right: actual.n_samples,
        });
    }
    let delta_power: Vec<f64> = predicted
        .power
        .iter()
        .zip(&actual.power)
        .map(|(p, a)| p - a)
        .collect();
    let reference = actual.total_power();
    let enclosed: f64 = delta_power.iter().map(|d| d.abs()).sum();
    let enclosed_power_fraction = if enclosed == 0.0 {
        0.0
    } else if reference > 0.0 {
        enclosed / reference
    } else {
        return Err(Error::InvalidSeries(
            "reference spectrum has zero total power".into(),
        ));
    };
    Ok(ResidualSpectrum {
        freqs: actual.freqs.clone(),
        peak_bin: argmax_abs(&delta_power).unwrap_or(0),
        delta_power,
        enclosed_power_fraction,
    })
}

/// Month-by-month `predicted - actual`; both series must cover the same months.
pub fn difference_series(
    predicted: &MonthlySeries,
    actual: &MonthlySeries,
) -> Result<DifferenceSeries> {
    if predicted.month_at(0) != actual.month_at(0) || predicted.len() != actual.len() {
        let (py, pm) = predicted.month_at(0);
        let (ay, am) = actual.month_at(0);
        return Err(Error::Misaligned(format!(
            "predicted covers {} months from {py}-{pm:02}, actual covers {} months from {ay}-{am:02}",
            predicted.len(),
            actual.len()
        )));
    }
    Ok(DifferenceSeries {
        start_year: predicted.start_year(),
        start_month: predicted.start_month(),
        deltas: predicted
            .values()
            .iter()
            .zip(actual.values())
            .map(|(p, a)| p - a)
            .collect(),
    })
}

/// Builds both residual panels from the training actuals and the test-period
/// actuals and predictions.
///
/// The two periods generally differ in length, so all three sequences are cut
/// to a common window of `min(len(train), len(test))` samples, rounded down to
/// whole years when at least one year is available: the trailing part of the
/// training period and the leading part of the test period. This keeps every
/// spectrum on the same frequency grid with bins on integer cycles per year.
pub fn spectrum_compare_report(
    train_actual: &[f64],
    test_actual: &[f64],
    test_predicted: &[f64],
    fs: f64,
) -> Result<SpectrumComparison> {
    if test_actual.len() != test_predicted.len() {
        return Err(Error::Misaligned(format!(
            "test actual has {} samples but predictions have {}",
            test_actual.len(),
            test_predicted.len()
        )));
    }
    let mut n = train_actual.len().min(test_actual.len());
    if n < 2 {
        return Err(Error::TooFewSamples(n));
    }
    let per_year = fs.round() as usize;
    if per_year >= 2 && (fs - per_year as f64).abs() < 1e-12 && n >= per_year {
        n -= n % per_year;
    }
    let train = &train_actual[train_actual.len() - n..];
    let actual = periodogram(&test_actual[..n], fs)?;
    let predicted = periodogram(&test_predicted[..n], fs)?;
    let reference = periodogram(train, fs)?;
    Ok(SpectrumComparison {
        model: residual_fps(&predicted, &actual)?,
        drift: residual_fps(&actual, &reference)?,
        window_len: n,
    })
}
