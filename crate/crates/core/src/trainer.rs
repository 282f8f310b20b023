//! Gradient-descent training, evaluation and one-step-ahead prediction.
//!
//! RMSE is reported in normalized target units and relates to the summed
//! squared-error loss `E` over `N` patterns as `RMSE = sqrt(2 E / N)`.

use std::fmt;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::abfnn::{loss, Gradients, Network};
use crate::error::{Error, Result};
use crate::timeseries::{
    build_windows, MonthlySeries, NormalizationParams, WindowedDataset, MIN_WINDOW_SERIES_LEN,
    WINDOW_LEN,
};

/// Minimum RMSE decrease that resets the patience counter.
pub const MIN_IMPROVEMENT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TrainMode {
    /// One update per epoch with the pattern-averaged gradient.
    #[default]
    Batch,
    /// One update per pattern, patterns in dataset order.
    Online,
}

impl FromStr for TrainMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "batch" => Ok(Self::Batch),
            "online" => Ok(Self::Online),
            other => Err(Error::InvalidConfig(format!(
                "unknown training mode `{other}` (expected batch or online)"
            ))),
        }
    }
}

impl fmt::Display for TrainMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Batch => "batch",
            Self::Online => "online",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Learning parameter shared by weight, bias and `a` updates.
    pub beta: f64,
    pub max_epochs: usize,
    pub target_rmse: f64,
    /// Epochs without an RMSE improvement of at least [`MIN_IMPROVEMENT`]
    /// before stopping.
    pub patience: usize,
    pub mode: TrainMode,
    /// Seed for network initialization when the trainer creates the network.
    pub seed: u64,
    /// Hold all biases at zero.
    pub freeze_biases: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            beta: 0.25,
            max_epochs: 5000,
            target_rmse: 0.085,
            patience: 200,
            mode: TrainMode::Batch,
            seed: 0,
            freeze_biases: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "beta must be positive, got {}",
                self.beta
            )));
        }
        if self.max_epochs == 0 {
            return Err(Error::InvalidConfig("max_epochs must be at least 1".into()));
        }
        if !(self.target_rmse > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "target_rmse must be positive, got {}",
                self.target_rmse
            )));
        }
        if self.patience == 0 {
            return Err(Error::InvalidConfig("patience must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    TargetReached,
    Patience,
    MaxEpochs,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::TargetReached => "target-reached",
            Self::Patience => "patience",
            Self::MaxEpochs => "max-epochs",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub rmse_per_epoch: Vec<f64>,
    pub epochs_run: usize,
    pub stop_reason: StopReason,
    pub final_train_rmse: f64,
    pub final_test_rmse: Option<f64>,
}

impl TrainReport {
    /// `epoch,rmse` rows, epochs counted from 1.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,rmse\n");
        for (i, r) in self.rmse_per_epoch.iter().enumerate() {
            let _ = writeln!(out, "{},{}", i + 1, r);
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    /// Reads back the per-epoch trace written by [`TrainReport::to_csv`].
    pub fn read_rmse_csv(text: &str) -> Result<Vec<f64>> {
        let mut lines = text.lines();
        if lines.next() != Some("epoch,rmse") {
            return Err(Error::MalformedRow {
                line: 1,
                msg: "expected header `epoch,rmse`".into(),
            });
        }
        lines
            .enumerate()
            .map(|(i, l)| {
                let line = i as u64 + 2;
                let (epoch, rmse) = l.split_once(',').ok_or_else(|| Error::MalformedRow {
                    line,
                    msg: "expected two fields".into(),
                })?;
                if epoch.parse::<usize>().ok() != Some(i + 1) {
                    return Err(Error::MalformedRow {
                        line,
                        msg: format!("expected epoch {}", i + 1),
                    });
                }
                rmse.parse().map_err(|_| Error::MalformedRow {
                    line,
                    msg: format!("bad rmse `{rmse}`"),
                })
            })
            .collect()
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "epochs_run = {}", self.epochs_run);
        let _ = writeln!(out, "stop_reason = {}", self.stop_reason);
        let _ = writeln!(out, "final_train_rmse = {}", self.final_train_rmse);
        match self.final_test_rmse {
            Some(r) => {
                let _ = writeln!(out, "final_test_rmse = {r}");
            }
            None => out.push_str("final_test_rmse = n/a\n"),
        }
        out
    }
}

fn check_dataset(net: &Network, data: &WindowedDataset) -> Result<()> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if net.n_inputs() != WINDOW_LEN {
        return Err(Error::DimensionMismatch {
            expected: WINDOW_LEN,
            got: net.n_inputs(),
        });
    }
    if net.n_outputs() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: net.n_outputs(),
        });
    }
    Ok(())
}

fn total_loss(net: &Network, data: &WindowedDataset) -> Result<f64> {
    data.inputs()
        .iter()
        .zip(data.targets())
        .try_fold(0.0, |acc, (x, &t)| {
            Ok(acc + loss(&net.predict(x)?, &[t])?)
        })
}

/// RMSE of `net` over `data`, in normalized units.
pub fn evaluate(net: &Network, data: &WindowedDataset) -> Result<f64> {
    check_dataset(net, data)?;
    let e = total_loss(net, data)?;
    Ok((2.0 * e / data.len() as f64).sqrt())
}

/// Trains a copy of `net` on `data`.
pub fn train(
    net: &Network,
    data: &WindowedDataset,
    cfg: &TrainConfig,
) -> Result<(Network, TrainReport)> {
    train_with_callback(net, data, cfg, |_, _, _| Ok(()))
}

/// Like [`train`], calling `on_epoch(epoch, &network, rmse)` after every
/// epoch (epochs counted from 1). An error from the callback aborts training.
pub fn train_with_callback<F>(
    net: &Network,
    data: &WindowedDataset,
    cfg: &TrainConfig,
    mut on_epoch: F,
) -> Result<(Network, TrainReport)>
where
    F: FnMut(usize, &Network, f64) -> Result<()>,
{
    cfg.validate()?;
    check_dataset(net, data)?;

    let mut net = net.clone();
    if cfg.freeze_biases {
        net.zero_biases();
    }
    let mut grads = Gradients::zeros_like(&net);
    let n = data.len() as f64;
    let mut trace = Vec::with_capacity(cfg.max_epochs.min(100_000));
    let mut best = f64::INFINITY;
    let mut stale = 0usize;
    let mut stop_reason = StopReason::MaxEpochs;

    for epoch in 1..=cfg.max_epochs {
        match cfg.mode {
            TrainMode::Batch => {
                grads.fill_zero();
                for (x, &t) in data.inputs().iter().zip(data.targets()) {
                    let fwd = net.forward(x)?;
                    net.accumulate_gradients(&fwd, &[t], &mut grads)
                        .map_err(|_| Error::Diverged { epoch })?;
                }
                grads.scale(1.0 / n);
                step(&mut net, &mut grads, cfg)?;
            }
            TrainMode::Online => {
                for (x, &t) in data.inputs().iter().zip(data.targets()) {
                    grads.fill_zero();
                    let fwd = net.forward(x)?;
                    net.accumulate_gradients(&fwd, &[t], &mut grads)
                        .map_err(|_| Error::Diverged { epoch })?;
                    step(&mut net, &mut grads, cfg)?;
                }
            }
        }

        let rmse = (2.0 * total_loss(&net, data)? / n).sqrt();
        if !rmse.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        trace.push(rmse);
        on_epoch(epoch, &net, rmse)?;

        if rmse <= cfg.target_rmse {
            stop_reason = StopReason::TargetReached;
            break;
        }
        if rmse < best - MIN_IMPROVEMENT {
            best = rmse;
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.patience {
                stop_reason = StopReason::Patience;
                break;
            }
        }
    }

    let report = TrainReport {
        epochs_run: trace.len(),
        final_train_rmse: *trace.last().expect("at least one epoch runs"),
        rmse_per_epoch: trace,
        stop_reason,
        final_test_rmse: None,
    };
    Ok((net, report))
}

fn step(net: &mut Network, grads: &mut Gradients, cfg: &TrainConfig) -> Result<()> {
    if cfg.freeze_biases {
        grads.d_biases.iter_mut().flatten().for_each(|g| *g = 0.0);
    }
    net.update_in_place(grads, cfg.beta)
}

/// One-step-ahead predictions for every month from index 49 onward, in
/// millimeters. Each prediction uses the actual preceding values.
pub fn predict_series(
    net: &Network,
    series: &MonthlySeries,
    params: &NormalizationParams,
) -> Result<MonthlySeries> {
    if series.len() < MIN_WINDOW_SERIES_LEN {
        return Err(Error::SeriesTooShort {
            len: series.len(),
            needed: MIN_WINDOW_SERIES_LEN,
        });
    }
    let data = build_windows(series, params)?;
    check_dataset(net, &data)?;
    let values = data
        .inputs()
        .iter()
        .map(|x| Ok(params.denormalize(net.predict(x)?[0]).max(0.0)))
        .collect::<Result<Vec<f64>>>()?;
    let (year, month) = series.month_at(data.target_index()[0]);
    MonthlySeries::new(year, month, values, format!("{}-predicted", series.name()))
}
