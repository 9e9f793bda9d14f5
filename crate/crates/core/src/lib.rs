//! Simulation and training stack for a base station that allocates uplink
//! resource blocks, headset transmit power and CPU shares to VR-BCI users
//! while classifying the biosignal windows they uplink.
//!
//! - [`signal`]: labeled EEG-shaped windows (synthetic generator, CSV ingest).
//! - [`env`]: channel/CPU dynamics, link budget, delay, packet loss and QoE.
//! - [`learner`]: the actor / critic / convolutional-classifier learner.
//! - [`baselines`]: monolithic PPO, vanilla policy gradient and linear SVM.
//! - [`harness`]: configuration, experiment runs, sweeps and metric files.

pub mod baselines;
pub mod env;
pub mod error;
pub mod harness;
pub mod learner;
pub mod rng;
pub mod signal;

pub use error::{Error, Result};
