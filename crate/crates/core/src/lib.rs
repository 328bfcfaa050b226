//! Cluster-pooled Bi-LSTM forecasting of cumulative epidemic case curves.
//!
//! The pipeline: parse and date-align per-country case and lockdown data
//! ([`ingest`]), group countries with similar demographic, socioeconomic
//! and health indicators by K-Means with Elbow selection ([`clustering`]),
//! assemble normalized fixed-lookback windows pooled across the target's
//! cluster ([`features`]), train a from-scratch bidirectional LSTM by
//! backpropagation through time ([`neural`]), and evaluate rolling
//! one-step forecasts against classical baselines ([`baselines`]) with the
//! measures in [`metrics`].

pub mod baselines;
pub mod clustering;
pub mod date;
pub mod features;
pub mod ingest;
pub mod linalg;
pub mod metrics;
pub mod neural;
pub mod series;
pub mod synth;

pub use date::Day;
pub use series::{CountryProfile, LockdownLevels, LockdownRecord, MultivariateSeries};
