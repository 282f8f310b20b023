//! Adaptive basis function neural networks for monthly rainfall forecasting.
//!
//! The crate is organised around the forecasting pipeline:
//!
//! - [`timeseries`]: monthly series ingestion, normalization, sliding windows
//!   and a synthetic two-monsoon generator.
//! - [`abfnn`]: the network itself. Every non-input node carries its own
//!   shape parameter `a` in the activation `(a + tanh x) / (1 + a)`, learned
//!   by gradient descent next to the weights.
//! - [`trainer`]: batch/online gradient descent with RMSE tracking and
//!   one-step-ahead series prediction.
//! - [`spectral`]: periodograms, residual power spectra and difference series
//!   used to diagnose a trained model.
//! - [`pipeline`]: the end-to-end experiment (train split, fit, analyze) shared
//!   by the command line tool and the Python bindings.

pub mod abfnn;
pub mod error;
pub mod pipeline;
pub mod spectral;
pub mod timeseries;
pub mod trainer;

pub use abfnn::{
    activate, activate_deriv, basis_param_deriv, loss, ForwardTrace, Gradients, Layer, Network,
    NodeParam, EPSILON_A,
};
pub use error::{Error, Result};
pub use pipeline::{Analysis, RunConfig, TrainSplit, TrainedModel};
pub use spectral::{
    difference_series, periodogram, periodogram_direct, residual_fps, spectrum_compare_report,
    DifferenceSeries, PowerSpectrum, ResidualSpectrum, SpectrumComparison, MONTHLY_FS,
};
pub use timeseries::{
    build_windows, fit_normalization, load_csv, synthesize_rainfall, MonthlySeries,
    NormalizationParams, SynthConfig, WindowedDataset, WINDOW_LEN,
};
pub use trainer::{evaluate, predict_series, train, StopReason, TrainConfig, TrainMode, TrainReport};
