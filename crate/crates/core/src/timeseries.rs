//! Monthly rainfall series: CSV ingestion, min-max normalization, sliding
//! windows for supervised training and a synthetic two-monsoon generator.
//!
//! CSV layout (read and written):
//!
//! ```text
//! year,month,rainfall_mm
//! 1893,1,22.5
//! 1893,2,8
//! ```
//!
//! Rows must be consecutive calendar months. Rainfall is written with Rust's
//! shortest round-trip `f64` formatting, so `8.0` is emitted as `8`.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::Read;
use std::ops::Range;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Number of inputs per pattern: 3 months around the target month in each of
/// the 4 preceding years.
pub const WINDOW_LEN: usize = 12;

/// Distance (in months) back from the target for each input component.
/// Oldest year first; month-before, same month, month-after within a year.
pub const WINDOW_OFFSETS: [usize; WINDOW_LEN] = [49, 48, 47, 37, 36, 35, 25, 24, 23, 13, 12, 11];

/// Shortest series that yields one pattern.
pub const MIN_WINDOW_SERIES_LEN: usize = WINDOW_OFFSETS[0] + 1;

pub const CSV_HEADER: &str = "year,month,rainfall_mm";

fn month_number(year: i32, month: u32) -> i64 {
    year as i64 * 12 + (month as i64 - 1)
}

fn from_month_number(n: i64) -> (i32, u32) {
    (n.div_euclid(12) as i32, n.rem_euclid(12) as u32 + 1)
}

/// A gap-free monthly series anchored to a calendar month.
#[derive(Debug, Clone, PartialEq)]
pub struct MonthlySeries {
    start_year: i32,
    start_month: u32,
    values: Vec<f64>,
    name: String,
}

impl MonthlySeries {
    pub fn new(
        start_year: i32,
        start_month: u32,
        values: Vec<f64>,
        name: impl Into<String>,
    ) -> Result<Self> {
        if !(1..=12).contains(&start_month) {
            return Err(Error::InvalidSeries(format!(
                "start month {start_month} is not in 1..=12"
            )));
        }
        if values.is_empty() {
            return Err(Error::InvalidSeries("series has no values".into()));
        }
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            let (year, month) = from_month_number(month_number(start_year, start_month) + i as i64);
            return Err(Error::InvalidSeries(format!(
                "value {v} at {year}-{month:02} is negative or not finite"
            )));
        }
        Ok(Self {
            start_year,
            start_month,
            values,
            name: name.into(),
        })
    }

    pub fn start_year(&self) -> i32 {
        self.start_year
    }

    pub fn start_month(&self) -> u32 {
        self.start_month
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Calendar (year, month) of the value at `index`.
    pub fn month_at(&self, index: usize) -> (i32, u32) {
        from_month_number(month_number(self.start_year, self.start_month) + index as i64)
    }

    /// Index of the given calendar month, if it lies inside the series.
    pub fn index_of(&self, year: i32, month: u32) -> Option<usize> {
        let offset = month_number(year, month) - month_number(self.start_year, self.start_month);
        (0..self.len() as i64)
            .contains(&offset)
            .then_some(offset as usize)
    }

    /// Sub-series over a range of month indices, keeping calendar anchoring.
    pub fn slice(&self, range: Range<usize>) -> Result<Self> {
        if range.start >= range.end || range.end > self.len() {
            return Err(Error::InvalidSeries(format!(
                "slice {range:?} is empty or outside 0..{}",
                self.len()
            )));
        }
        let (year, month) = self.month_at(range.start);
        Ok(Self {
            start_year: year,
            start_month: month,
            values: self.values[range].to_vec(),
            name: self.name.clone(),
        })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Canonical CSV text (LF line endings, shortest round-trip numbers).
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(16 * (self.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for (i, v) in self.values.iter().enumerate() {
            let (year, month) = self.month_at(i);
            let _ = writeln!(out, "{year},{month},{v}");
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    /// Parses CSV text in the layout documented at module level.
    pub fn from_csv_reader<R: Read>(reader: R, name: impl Into<String>) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);

        let header = rdr.headers().map_err(|e| Error::MalformedRow {
            line: 1,
            msg: e.to_string(),
        })?;
        let header: Vec<&str> = header.iter().collect();
        if header != ["year", "month", "rainfall_mm"] {
            return Err(Error::MalformedRow {
                line: 1,
                msg: format!("expected header `{CSV_HEADER}`, found `{}`", header.join(",")),
            });
        }

        let mut start: Option<(i32, u32)> = None;
        let mut prev: Option<i64> = None;
        let mut values = Vec::new();
        for record in rdr.records() {
            let record = record.map_err(|e| Error::MalformedRow {
                line: e.position().map(|p| p.line()).unwrap_or(0),
                msg: e.to_string(),
            })?;
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            if record.len() != 3 {
                return Err(Error::MalformedRow {
                    line,
                    msg: format!("expected 3 fields, found {}", record.len()),
                });
            }
            let year: i32 = parse_field(&record[0], "year", line)?;
            let month: u32 = parse_field(&record[1], "month", line)?;
            let value: f64 = parse_field(&record[2], "rainfall_mm", line)?;
            if !(1..=12).contains(&month) {
                return Err(Error::MalformedRow {
                    line,
                    msg: format!("month {month} is not in 1..=12"),
                });
            }
            if !value.is_finite() {
                return Err(Error::MalformedRow {
                    line,
                    msg: format!("rainfall `{}` is not finite", &record[2]),
                });
            }
            if value < 0.0 {
                return Err(Error::NegativeRainfall {
                    line,
                    year,
                    month,
                    value,
                });
            }

            let here = month_number(year, month);
            if let Some(p) = prev {
                if here <= p {
                    return Err(Error::DuplicateMonth { line, year, month });
                }
                if here != p + 1 {
                    let (expected_year, expected_month) = from_month_number(p + 1);
                    return Err(Error::CalendarGap {
                        line,
                        expected_year,
                        expected_month,
                        found_year: year,
                        found_month: month,
                    });
                }
            } else {
                start = Some((year, month));
            }
            prev = Some(here);
            values.push(value);
        }

        let (start_year, start_month) =
            start.ok_or_else(|| Error::InvalidSeries("CSV has no data rows".into()))?;
        Self::new(start_year, start_month, values, name)
    }
}

fn parse_field<T: std::str::FromStr>(raw: &str, field: &str, line: u64) -> Result<T> {
    raw.parse().map_err(|_| Error::MalformedRow {
        line,
        msg: format!("cannot parse {field} from `{raw}`"),
    })
}

/// Loads a monthly series from a CSV file. The file stem becomes the name.
pub fn load_csv(path: impl AsRef<Path>) -> Result<MonthlySeries> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    MonthlySeries::from_csv_reader(std::io::BufReader::new(file), name)
}

/// Affine map from `[lo, hi]` onto `[out_lo, out_hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizationParams {
    pub lo: f64,
    pub hi: f64,
    pub out_lo: f64,
    pub out_hi: f64,
}

impl NormalizationParams {
    pub const DEFAULT_OUT_LO: f64 = 0.05;
    pub const DEFAULT_OUT_HI: f64 = 0.95;

    pub fn new(lo: f64, hi: f64, out_lo: f64, out_hi: f64) -> Result<Self> {
        if ![lo, hi, out_lo, out_hi].iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("normalization parameters"));
        }
        if hi == lo {
            return Err(Error::ConstantSeries(lo));
        }
        if hi < lo {
            return Err(Error::InvalidConfig(format!(
                "normalization hi {hi} is below lo {lo}"
            )));
        }
        if !(0.0 <= out_lo && out_lo < out_hi && out_hi <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "target range [{out_lo}, {out_hi}] must satisfy 0 <= lo < hi <= 1"
            )));
        }
        Ok(Self {
            lo,
            hi,
            out_lo,
            out_hi,
        })
    }

    pub fn fit(values: &[f64], out_lo: f64, out_hi: f64) -> Result<Self> {
        let (lo, hi) = values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        if values.is_empty() {
            return Err(Error::InvalidSeries("cannot fit normalization on no values".into()));
        }
        Self::new(lo, hi, out_lo, out_hi)
    }

    pub fn normalize(&self, v: f64) -> f64 {
        self.out_lo + (v - self.lo) * (self.out_hi - self.out_lo) / (self.hi - self.lo)
    }

    pub fn denormalize(&self, u: f64) -> f64 {
        self.lo + (u - self.out_lo) * (self.hi - self.lo) / (self.out_hi - self.out_lo)
    }
}

/// Fits min-max normalization on `series` onto `[out_lo, out_hi]`.
pub fn fit_normalization(
    series: &MonthlySeries,
    out_lo: f64,
    out_hi: f64,
) -> Result<NormalizationParams> {
    NormalizationParams::fit(series.values(), out_lo, out_hi)
}

/// Supervised patterns: 12 lagged inputs and one target month each.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WindowedDataset {
    inputs: Vec<[f64; WINDOW_LEN]>,
    targets: Vec<f64>,
    target_index: Vec<usize>,
}

impl WindowedDataset {
    pub fn from_parts(
        inputs: Vec<[f64; WINDOW_LEN]>,
        targets: Vec<f64>,
        target_index: Vec<usize>,
    ) -> Result<Self> {
        if inputs.len() != targets.len() {
            return Err(Error::DimensionMismatch {
                expected: inputs.len(),
                got: targets.len(),
            });
        }
        if target_index.len() != targets.len() {
            return Err(Error::DimensionMismatch {
                expected: targets.len(),
                got: target_index.len(),
            });
        }
        if target_index.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidSeries(
                "target indices must be strictly increasing".into(),
            ));
        }
        Ok(Self {
            inputs,
            targets,
            target_index,
        })
    }

    pub fn inputs(&self) -> &[[f64; WINDOW_LEN]] {
        &self.inputs
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn target_index(&self) -> &[usize] {
        &self.target_index
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    /// Patterns whose target month index lies in `range`.
    pub fn select_targets(&self, range: Range<usize>) -> Self {
        let keep: Vec<usize> = (0..self.len())
            .filter(|&i| range.contains(&self.target_index[i]))
            .collect();
        Self {
            inputs: keep.iter().map(|&i| self.inputs[i]).collect(),
            targets: keep.iter().map(|&i| self.targets[i]).collect(),
            target_index: keep.iter().map(|&i| self.target_index[i]).collect(),
        }
    }
}

/// Builds one pattern for every month `t >= 49` of `series`.
///
/// Inputs are the normalized values at `t - WINDOW_OFFSETS[c]`; the target is
/// the normalized value at `t`. Year boundaries need no special handling since
/// indices are continuous months.
pub fn build_windows(
    series: &MonthlySeries,
    params: &NormalizationParams,
) -> Result<WindowedDataset> {
    if series.len() < MIN_WINDOW_SERIES_LEN {
        return Err(Error::SeriesTooShort {
            len: series.len(),
            needed: MIN_WINDOW_SERIES_LEN,
        });
    }
    let norm: Vec<f64> = series.values().iter().map(|&v| params.normalize(v)).collect();
    let n = norm.len() - WINDOW_OFFSETS[0];
    let mut inputs = Vec::with_capacity(n);
    let mut targets = Vec::with_capacity(n);
    let mut target_index = Vec::with_capacity(n);
    for t in WINDOW_OFFSETS[0]..norm.len() {
        inputs.push(WINDOW_OFFSETS.map(|off| norm[t - off]));
        targets.push(norm[t]);
        target_index.push(t);
    }
    Ok(WindowedDataset {
        inputs,
        targets,
        target_index,
    })
}

/// Parameters of the synthetic monthly rainfall generator.
///
/// Two smooth annual peaks (June and October) on a dry-season base, scaled by
/// a quasi-periodic multi-year modulation and an optional linear drift, with
/// multiplicative log-normal noise.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub years: usize,
    pub seed: u64,
    pub noise_level: f64,
    /// Relative change of the monsoon amplitudes over the full record.
    pub drift: f64,
    pub start_year: i32,
    pub base_mm: f64,
    pub june_peak_mm: f64,
    pub october_peak_mm: f64,
    /// Period of the main multi-year modulation, in years.
    pub modulation_period_years: f64,
    pub modulation_depth: f64,
}

impl SynthConfig {
    pub const MIN_YEARS: usize = 5;

    pub fn new(years: usize, seed: u64, noise_level: f64) -> Self {
        Self {
            years,
            seed,
            noise_level,
            drift: 0.08,
            start_year: 1893,
            base_mm: 25.0,
            june_peak_mm: 320.0,
            october_peak_mm: 240.0,
            modulation_period_years: 4.5,
            modulation_depth: 0.12,
        }
    }

    pub fn generate(&self) -> Result<MonthlySeries> {
        if self.years < Self::MIN_YEARS {
            return Err(Error::InvalidConfig(format!(
                "synthetic series needs at least {} years, got {}",
                Self::MIN_YEARS,
                self.years
            )));
        }
        if !(self.noise_level >= 0.0 && self.noise_level.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "noise level must be a finite non-negative number, got {}",
                self.noise_level
            )));
        }
        if self.modulation_period_years <= 0.0 {
            return Err(Error::InvalidConfig(
                "modulation period must be positive".into(),
            ));
        }

        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let phase_main = rng.random_range(0.0..2.0 * PI);
        let phase_minor = rng.random_range(0.0..2.0 * PI);
        // incommensurate with both the annual cycle and the main modulation
        let minor_period = self.modulation_period_years * 0.618_033_988_749_895 + 0.37;

        let n = self.years * 12;
        let mut values = Vec::with_capacity(n);
        for i in 0..n {
            let month = (i % 12) as f64 + 1.0;
            let t_years = i as f64 / 12.0;
            let seasonal = self.june_peak_mm * seasonal_peak(month, 6.0, 1.1)
                + self.october_peak_mm * seasonal_peak(month, 10.0, 0.9);
            let modulation = 1.0
                + self.modulation_depth
                    * (2.0 * PI * t_years / self.modulation_period_years + phase_main).sin()
                + 0.4
                    * self.modulation_depth
                    * (2.0 * PI * t_years / minor_period + phase_minor).sin();
            let trend = 1.0 + self.drift * t_years / self.years as f64;
            let clean = self.base_mm + seasonal * modulation * trend;
            let z: f64 = rng.sample(StandardNormal);
            let noise = (self.noise_level * z - 0.5 * self.noise_level * self.noise_level).exp();
            values.push((clean * noise).max(0.0));
        }
        MonthlySeries::new(self.start_year, 1, values, format!("synthetic-seed{}", self.seed))
    }
}

/// Smooth bump centred on `center` (1..=12) with circular month distance.
fn seasonal_peak(month: f64, center: f64, width: f64) -> f64 {
    let d = (month - center).abs();
    let d = d.min(12.0 - d);
    (-d * d / (2.0 * width * width)).exp()
}

/// Synthetic rainfall with default shape parameters.
pub fn synthesize_rainfall(years: usize, seed: u64, noise_level: f64) -> Result<MonthlySeries> {
    SynthConfig::new(years, seed, noise_level).generate()
}
