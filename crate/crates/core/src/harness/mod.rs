//! Monte Carlo BER sweeps, closed-form BER and result files.
//!
//! Each trial is one slot of `symbols_per_slot` OFDM symbols over one
//! channel draw. Channel, payload bits and noise come from separate ChaCha
//! streams keyed by `(seed, grid point, trial)`, so two configurations with
//! the same seed see the same channels and bits, and a sweep gives the same
//! numbers on any number of threads.

mod config;
mod results;
mod sim;

pub use config::{ChannelModel, Estimation, Mobility, SchemeChoice, SimConfig, StopRule};
pub use results::{read_results, sidecar_path, write_results, BerCurve, BerPoint};
pub use sim::{analytic_ber, run_sweep, run_trial, Simulator, TrialOutcome, TrialSeed};
