//! Link-level OFDM simulation with cyclic, zero-padded and generalized
//! (ψ-weighted) prefixes.
//!
//! The generalized prefix scales the copied tail of each OFDM symbol by
//! φ = ψᴺ. After weighting the received block by `D = diag(1, ψ, …, ψᴺ⁻¹)`
//! the channel matrix becomes circulant again and the DFT diagonalizes it,
//! with the subcarrier gains sampled from the channel response shifted by
//! arg ψ. Choosing ψ per channel moves spectral nulls off the subcarrier
//! grid.
//!
//! Layout:
//! - [`spectral`]: DFT, circulant / generalized skew-circulant / ZP matrices, pseudoinverse.
//! - [`modem`]: Gray QAM and the D-weighted multicarrier modulator.
//! - [`guard`]: prefix construction, guard removal, generalized skew-circular convolution.
//! - [`channel`]: power delay profiles, Rayleigh draws, AWGN, Doppler evolution.
//! - [`detect`]: zero-forcing and ZP pseudoinverse detection.
//! - [`psi_opt`]: ψ objectives, golden-section search, multiplication budget.
//! - [`chanest`]: block and comb least-squares channel estimation.
//! - [`harness`]: Monte Carlo sweeps, analytic BER, result files.

// `!(x > 0.0)` is used on purpose throughout: it rejects NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
pub mod chanest;
pub mod channel;
pub mod detect;
mod error;
pub mod guard;
pub mod harness;
pub mod modem;
pub mod psi_opt;
pub mod spectral;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Version string written into result metadata.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
