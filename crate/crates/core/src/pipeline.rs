//! End-to-end experiment: split, normalize, window, train, then analyze the
//! trained model over the whole record.
//!
//! A trained model is stored as two files in one directory: the network
//! checkpoint (`model.abf`) and a sidecar (`model.norm`) with the
//! normalization fitted on the training period and the extent of that period,
//! so analysis never re-fits normalization on test data.

use std::fmt::Write as _;
use std::ops::Range;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::abfnn::{checkpoint, Network};
use crate::error::{Error, Result};
use crate::spectral::{
    difference_series, periodogram, spectrum_compare_report, DifferenceSeries, PowerSpectrum,
    SpectrumComparison, MONTHLY_FS,
};
use crate::timeseries::{
    build_windows, fit_normalization, MonthlySeries, NormalizationParams, WindowedDataset,
    MIN_WINDOW_SERIES_LEN, WINDOW_LEN,
};
use crate::trainer::{evaluate, predict_series, train_with_callback, TrainConfig, TrainReport};

pub const CHECKPOINT_FILE: &str = "model.abf";
pub const SIDECAR_FILE: &str = "model.norm";
const SIDECAR_MAGIC: &str = "abfnet-norm-v1";

/// Calendar extent of the training period.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainSplit {
    /// The first `n` whole years of the series.
    FirstYears(usize),
    /// Inclusive calendar-year range.
    Years { first: i32, last: i32 },
}

impl Default for TrainSplit {
    fn default() -> Self {
        Self::FirstYears(40)
    }
}

impl FromStr for TrainSplit {
    type Err = Error;

    /// `40` (first 40 years) or `1893-1932` (inclusive year range).
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("bad training split `{s}`"));
        match s.split_once('-') {
            Some((a, b)) => {
                let first: i32 = a.trim().parse().map_err(|_| bad())?;
                let last: i32 = b.trim().parse().map_err(|_| bad())?;
                if last < first {
                    return Err(bad());
                }
                Ok(Self::Years { first, last })
            }
            None => {
                let n: usize = s.trim().parse().map_err(|_| bad())?;
                if n == 0 {
                    return Err(bad());
                }
                Ok(Self::FirstYears(n))
            }
        }
    }
}

impl TrainSplit {
    /// Month indices of the training period within `series`.
    pub fn month_range(&self, series: &MonthlySeries) -> Result<Range<usize>> {
        let range = match *self {
            Self::FirstYears(n) => 0..(n * 12).min(series.len()),
            Self::Years { first, last } => {
                // a series starting mid-year still trains from its first month
                let start = series
                    .index_of(first, 1)
                    .or_else(|| (series.start_year() == first).then_some(0));
                let start = start.ok_or_else(|| {
                    Error::InvalidConfig(format!("training year {first} is not in the series"))
                })?;
                let end = series
                    .index_of(last, 12)
                    .map(|i| i + 1)
                    .unwrap_or(series.len());
                if series.month_at(end - 1).0 != last {
                    return Err(Error::InvalidConfig(format!(
                        "training year {last} is not in the series"
                    )));
                }
                start..end
            }
        };
        if range.len() < MIN_WINDOW_SERIES_LEN {
            return Err(Error::SeriesTooShort {
                len: range.len(),
                needed: MIN_WINDOW_SERIES_LEN,
            });
        }
        Ok(range)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub topology: Vec<usize>,
    pub train: TrainConfig,
    pub split: TrainSplit,
    pub out_lo: f64,
    pub out_hi: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            topology: vec![WINDOW_LEN, 7, 1],
            train: TrainConfig::default(),
            split: TrainSplit::default(),
            out_lo: NormalizationParams::DEFAULT_OUT_LO,
            out_hi: NormalizationParams::DEFAULT_OUT_HI,
        }
    }
}

/// Normalization and training-period extent saved next to a checkpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelMeta {
    pub params: NormalizationParams,
    pub train_start: (i32, u32),
    pub train_months: usize,
}

impl ModelMeta {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let p = &self.params;
        let _ = writeln!(out, "{SIDECAR_MAGIC}");
        let _ = writeln!(out, "lo = {:.16e}", p.lo);
        let _ = writeln!(out, "hi = {:.16e}", p.hi);
        let _ = writeln!(out, "out_lo = {:.16e}", p.out_lo);
        let _ = writeln!(out, "out_hi = {:.16e}", p.out_hi);
        let _ = writeln!(
            out,
            "train_start = {}-{:02}",
            self.train_start.0, self.train_start.1
        );
        let _ = writeln!(out, "train_months = {}", self.train_months);
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
        let err = |line: usize, msg: String| Error::Checkpoint { line, msg };
        if lines.next().map(|(_, l)| l) != Some(SIDECAR_MAGIC) {
            return Err(err(1, format!("expected `{SIDECAR_MAGIC}`")));
        }
        let mut field = |key: &str| -> Result<(usize, String)> {
            let (n, line) = lines
                .next()
                .ok_or_else(|| err(0, format!("missing `{key}`")))?;
            match line.split_once('=') {
                Some((k, v)) if k.trim() == key => Ok((n, v.trim().to_string())),
                _ => Err(err(n, format!("expected `{key} = ...`"))),
            }
        };
        let mut num = |key: &str| -> Result<f64> {
            let (n, v) = field(key)?;
            v.parse().map_err(|_| err(n, format!("bad number for {key}")))
        };
        let lo = num("lo")?;
        let hi = num("hi")?;
        let out_lo = num("out_lo")?;
        let out_hi = num("out_hi")?;
        let (n, start) = field("train_start")?;
        let train_start = start
            .split_once('-')
            .and_then(|(y, m)| Some((y.parse().ok()?, m.parse().ok()?)))
            .filter(|(_, m): &(i32, u32)| (1..=12).contains(m))
            .ok_or_else(|| err(n, format!("bad train_start `{start}`")))?;
        let (n, months) = field("train_months")?;
        let train_months = months
            .parse()
            .map_err(|_| err(n, format!("bad train_months `{months}`")))?;
        Ok(Self {
            params: NormalizationParams::new(lo, hi, out_lo, out_hi)?,
            train_start,
            train_months,
        })
    }

    /// Month indices of the training period within `series`, which must
    /// contain it.
    pub fn train_range(&self, series: &MonthlySeries) -> Result<Range<usize>> {
        let (y, m) = self.train_start;
        let start = series.index_of(y, m).ok_or_else(|| {
            Error::Misaligned(format!("series does not contain training start {y}-{m:02}"))
        })?;
        if start + self.train_months > series.len() {
            return Err(Error::Misaligned(format!(
                "series ends before the {}-month training period",
                self.train_months
            )));
        }
        Ok(start..start + self.train_months)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub network: Network,
    pub meta: ModelMeta,
    pub report: TrainReport,
}

impl TrainedModel {
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<(PathBuf, PathBuf)> {
        save_model(&self.network, &self.meta, dir)
    }
}

pub fn save_model(
    network: &Network,
    meta: &ModelMeta,
    dir: impl AsRef<Path>,
) -> Result<(PathBuf, PathBuf)> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let ckpt = dir.join(CHECKPOINT_FILE);
    let side = dir.join(SIDECAR_FILE);
    checkpoint::save(network, &ckpt)?;
    std::fs::write(&side, meta.to_text()).map_err(|e| Error::io(&side, e))?;
    Ok((ckpt, side))
}

pub fn load_model(dir: impl AsRef<Path>) -> Result<(Network, ModelMeta)> {
    let dir = dir.as_ref();
    let network = checkpoint::load(dir.join(CHECKPOINT_FILE))?;
    let side = dir.join(SIDECAR_FILE);
    let text = std::fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
    Ok((network, ModelMeta::from_text(&text)?))
}

/// Training and test patterns for a series split at `train`.
///
/// Training targets need their whole 49-month history inside the training
/// period; test targets are all months after it (their history may reach
/// back into the training period).
pub fn split_datasets(
    series: &MonthlySeries,
    params: &NormalizationParams,
    train: Range<usize>,
) -> Result<(WindowedDataset, WindowedDataset)> {
    let all = build_windows(series, params)?;
    let train_data = all.select_targets(train.start + MIN_WINDOW_SERIES_LEN - 1..train.end);
    let test_data = all.select_targets(train.end..usize::MAX);
    Ok((train_data, test_data))
}

/// Runs the training half of the experiment.
pub fn fit(series: &MonthlySeries, cfg: &RunConfig) -> Result<TrainedModel> {
    fit_with_callback(series, cfg, |_, _, _| Ok(()))
}

/// [`fit`] with a per-epoch callback (see [`train_with_callback`]).
pub fn fit_with_callback<F>(
    series: &MonthlySeries,
    cfg: &RunConfig,
    on_epoch: F,
) -> Result<TrainedModel>
where
    F: FnMut(usize, &Network, f64) -> Result<()>,
{
    let range = cfg.split.month_range(series)?;
    let params = fit_normalization(&series.slice(range.clone())?, cfg.out_lo, cfg.out_hi)?;
    let (train_data, test_data) = split_datasets(series, &params, range.clone())?;
    let network = Network::init(&cfg.topology, cfg.train.seed)?;
    let (network, mut report) = train_with_callback(&network, &train_data, &cfg.train, on_epoch)?;
    if !test_data.is_empty() {
        report.final_test_rmse = Some(evaluate(&network, &test_data)?);
    }
    Ok(TrainedModel {
        network,
        meta: ModelMeta {
            params,
            train_start: series.month_at(range.start),
            train_months: range.len(),
        },
        report,
    })
}

/// Every data product of a model evaluated over a full series.
#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    /// One-step-ahead predictions, from the 50th month on (mm).
    pub predicted: MonthlySeries,
    /// The actual values over the same months.
    pub actual: MonthlySeries,
    pub difference: DifferenceSeries,
    pub actual_spectrum: PowerSpectrum,
    pub predicted_spectrum: PowerSpectrum,
    /// Residual panels; `None` when the series has fewer than two months
    /// after the training period.
    pub comparison: Option<SpectrumComparison>,
    pub train_rmse: f64,
    pub test_rmse: Option<f64>,
}

impl Analysis {
    pub fn metrics_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "train_rmse = {}", self.train_rmse);
        match self.test_rmse {
            Some(r) => {
                let _ = writeln!(out, "test_rmse = {r}");
            }
            None => out.push_str("test_rmse = n/a\n"),
        }
        let mae = self.difference.deltas.iter().map(|d| d.abs()).sum::<f64>()
            / self.difference.deltas.len() as f64;
        let _ = writeln!(out, "mean_abs_difference_mm = {mae}");
        if let Some(c) = &self.comparison {
            let _ = writeln!(out, "spectrum_window_months = {}", c.window_len);
            let _ = writeln!(
                out,
                "model_residual_fraction = {}",
                c.model.enclosed_power_fraction
            );
            let _ = writeln!(out, "model_residual_peak_freq = {}", c.model.peak_freq());
            let _ = writeln!(
                out,
                "drift_residual_fraction = {}",
                c.drift.enclosed_power_fraction
            );
            let _ = writeln!(out, "drift_residual_peak_freq = {}", c.drift.peak_freq());
            let _ = writeln!(out, "model_below_drift = {}", c.model_beats_drift());
        }
        out
    }
}

/// Evaluates a trained network over `series`. Spectra use millimeters unless
/// `normalized_spectra` is set.
pub fn analyze(
    series: &MonthlySeries,
    network: &Network,
    meta: &ModelMeta,
    normalized_spectra: bool,
) -> Result<Analysis> {
    if network.n_inputs() != WINDOW_LEN || network.n_outputs() != 1 {
        return Err(Error::Misaligned(format!(
            "checkpoint topology {:?} does not map {WINDOW_LEN} inputs to 1 output",
            network.topology()
        )));
    }
    let train = meta.train_range(series)?;
    let params = &meta.params;
    let offset = MIN_WINDOW_SERIES_LEN - 1;

    let predicted = predict_series(network, series, params)?;
    let actual = series.slice(offset..series.len())?;
    let difference = difference_series(&predicted, &actual)?;

    let to_domain = |v: &[f64]| -> Vec<f64> {
        if normalized_spectra {
            v.iter().map(|&x| params.normalize(x)).collect()
        } else {
            v.to_vec()
        }
    };
    let actual_spectrum = periodogram(&to_domain(actual.values()), MONTHLY_FS)?;
    let predicted_spectrum = periodogram(&to_domain(predicted.values()), MONTHLY_FS)?;

    let (train_data, test_data) = split_datasets(series, params, train.clone())?;
    let train_rmse = evaluate(network, &train_data)?;
    let test_rmse = if test_data.is_empty() {
        None
    } else {
        Some(evaluate(network, &test_data)?)
    };

    let comparison = if series.len() >= train.end + 2 {
        let train_actual = to_domain(&series.values()[train.clone()]);
        let test_actual = to_domain(&series.values()[train.end..]);
        let test_predicted = to_domain(&predicted.values()[train.end - offset..]);
        Some(spectrum_compare_report(
            &train_actual,
            &test_actual,
            &test_predicted,
            MONTHLY_FS,
        )?)
    } else {
        None
    };

    Ok(Analysis {
        predicted,
        actual,
        difference,
        actual_spectrum,
        predicted_spectrum,
        comparison,
        train_rmse,
        test_rmse,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timeseries::synthesize_rainfall;

    #[test]
    fn split_parsing() {
        assert_eq!("40".parse::<TrainSplit>().unwrap(), TrainSplit::FirstYears(40));
        assert_eq!(
            "1893-1932".parse::<TrainSplit>().unwrap(),
            TrainSplit::Years {
                first: 1893,
                last: 1932
            }
        );
        assert!("0".parse::<TrainSplit>().is_err());
        assert!("1900-1890".parse::<TrainSplit>().is_err());
        assert!("abc".parse::<TrainSplit>().is_err());
    }

    #[test]
    fn split_ranges() {
        let s = synthesize_rainfall(87, 1, 0.0).unwrap();
        assert_eq!(TrainSplit::FirstYears(40).month_range(&s).unwrap(), 0..480);
        let years = TrainSplit::Years {
            first: 1893,
            last: 1932,
        };
        assert_eq!(years.month_range(&s).unwrap(), 0..480);
        let inner = TrainSplit::Years {
            first: 1900,
            last: 1909,
        };
        assert_eq!(inner.month_range(&s).unwrap(), 84..204);
        assert!(TrainSplit::FirstYears(4).month_range(&s).is_err());
        assert!(TrainSplit::Years {
            first: 1800,
            last: 1900
        }
        .month_range(&s)
        .is_err());
    }

    #[test]
    fn datasets_partition_targets() {
        let s = synthesize_rainfall(10, 1, 0.0).unwrap();
        let p = fit_normalization(&s, 0.05, 0.95).unwrap();
        let (train, test) = split_datasets(&s, &p, 0..72).unwrap();
        assert_eq!(train.target_index().first(), Some(&49));
        assert_eq!(train.target_index().last(), Some(&71));
        assert_eq!(test.target_index().first(), Some(&72));
        assert_eq!(train.len() + test.len(), 120 - 49);
    }

    #[test]
    fn sidecar_round_trip_and_errors() {
        let meta = ModelMeta {
            params: NormalizationParams::new(0.5, 612.25, 0.05, 0.95).unwrap(),
            train_start: (1893, 1),
            train_months: 480,
        };
        let text = meta.to_text();
        assert_eq!(ModelMeta::from_text(&text).unwrap(), meta);
        assert!(ModelMeta::from_text("nope").is_err());
        assert!(ModelMeta::from_text(&text.replace("train_start = 1893-01", "train_start = 1893-13")).is_err());
        assert!(ModelMeta::from_text(&text.replace("hi = ", "hx = ")).is_err());

        let s = synthesize_rainfall(20, 1, 0.0).unwrap();
        assert!(matches!(meta.train_range(&s), Err(Error::Misaligned(_))));
        let later = s.slice(12..240).unwrap();
        assert!(matches!(meta.train_range(&later), Err(Error::Misaligned(_))));
    }
}
