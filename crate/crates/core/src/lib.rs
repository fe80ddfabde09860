//! Differential absorption imaging with twin-mode probe light.
//!
//! A signal beam crosses an absorbing sample (absorption `alpha`) while a
//! twin reference beam bypasses it; the detected intensity difference is
//! compared between a clean spot and a spot with a small extra absorption
//! `delta_alpha`. This crate models how well that defect can be resolved
//! (the defect SNR, written `SNR*` throughout) for coherent, two-mode
//! squeezed vacuum (TMSV) and twin-Fock (TF) probes, including photon loss
//! and detector dark counts.
//!
//! The crate is organised in layers:
//!
//! * [`states`]: probe descriptors `(N, Q, sigma)` and truncated per-bin
//!   photon-presence probabilities.
//! * [`channels`]: absorption/loss thinning, dark-count dressing and the
//!   photon-number moment transforms.
//! * [`analytic`]: closed-form SNR, SNR*, quantum gain, critical loss and
//!   effective-photon-number thresholds for photon-number-resolving
//!   detection.
//! * [`clickstats`]: multinomial click statistics for threshold detectors
//!   integrated over `m` time bins, plus the per-state closed forms.
//! * [`montecarlo`]: a seeded per-bin simulator used as an independent
//!   oracle for everything above.
//!
//! ```
//! use twinbeam::analytic;
//!
//! // Twin-Fock light, nearly transparent sample, one effective photon:
//! // the largest tolerable loss is about one third.
//! let gc = analytic::critical_loss(0.01, -1.0, 0.0, 0.0, 1.0);
//! assert!((gc.value().unwrap() - 0.332).abs() < 1e-3);
//! ```
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod channels;
pub mod clickstats;
mod error;
pub mod montecarlo;
pub mod states;

pub use error::{Error, Result};

pub use analytic::{CriticalLoss, GainReport, Regime, SnrInputs};
pub use channels::{ChannelParams, MomentSet, OutcomeProbs};
pub use clickstats::{ClickMoments, DifferentialStats, ExposureConfig};
pub use montecarlo::{ExposureCounts, McConfig, McEstimate};
pub use states::{ClickBasisState, CustomState, StateKind, TwinModeDescriptor};

/// Tolerance used when checking that four outcome probabilities sum to one.
pub const NORMALIZATION_TOL: f64 = 1e-12;
