//! Pilot-aided least-squares channel estimation.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::spectral;

/// Where pilots go.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum PilotPlan {
    /// First OFDM symbol of each slot carries pilots on every subcarrier.
    Block { symbols_per_slot: usize },
    /// One pilot every `spacing` subcarriers (bins 0, s, 2s, …) in every symbol.
    Comb {
        spacing: usize,
        #[serde(default = "unit_pilot")]
        pilot_value: Complex64,
    },
}

fn unit_pilot() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

impl PilotPlan {
    /// PIR 1:4 with all-ones pilots.
    pub fn comb_quarter() -> Self {
        PilotPlan::Comb {
            spacing: 4,
            pilot_value: unit_pilot(),
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        match *self {
            PilotPlan::Block { symbols_per_slot } => {
                if symbols_per_slot < 2 {
                    return Err(invalid("a block slot needs a pilot symbol and at least one data symbol"));
                }
            }
            PilotPlan::Comb { spacing, pilot_value } => {
                if spacing < 2 || !n.is_multiple_of(spacing) {
                    return Err(invalid(format!(
                        "pilot spacing {spacing} must be >= 2 and divide N={n}"
                    )));
                }
                if (pilot_value.norm() - 1.0).abs() > 1e-9 {
                    return Err(invalid("comb pilot value must have unit magnitude"));
                }
            }
        }
        Ok(())
    }

    /// Whether subcarrier `k` carries a pilot in a data-bearing symbol.
    pub fn is_pilot_bin(&self, k: usize) -> bool {
        match *self {
            PilotPlan::Block { .. } => false,
            PilotPlan::Comb { spacing, .. } => k.is_multiple_of(spacing),
        }
    }
}

/// `Ĥ[k] = Y[k] / P[k]` on a full pilot symbol.
pub fn ls_estimate_block(y_freq: &[Complex64], pilots: &[Complex64]) -> Result<Vec<Complex64>> {
    if y_freq.len() != pilots.len() {
        return Err(invalid(format!(
            "{} received bins but {} pilots",
            y_freq.len(),
            pilots.len()
        )));
    }
    if pilots.iter().any(|p| p.norm() == 0.0) {
        return Err(invalid("pilot symbols must be nonzero"));
    }
    Ok(y_freq.iter().zip(pilots).map(|(y, p)| y / p).collect())
}

/// LS on the comb pilots followed by transform-domain interpolation.
///
/// The `N/s` pilot estimates are inverse transformed (giving the impulse
/// response aliased modulo `N/s`), zero padded to `N` and transformed back.
/// Reconstruction is exact when the channel has at most `N/s` taps.
pub fn ls_estimate_comb(y_freq: &[Complex64], plan: &PilotPlan) -> Result<Vec<Complex64>> {
    let n = y_freq.len();
    let PilotPlan::Comb { spacing, pilot_value } = *plan else {
        return Err(invalid("comb estimation needs a comb pilot plan"));
    };
    plan.validate(n)?;
    let pilots: Vec<Complex64> = y_freq.iter().step_by(spacing).map(|y| y / pilot_value).collect();
    let taps = spectral::idft(&pilots)?;
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    buf[..taps.len()].copy_from_slice(&taps);
    spectral::dft_in_place(&mut buf);
    Ok(buf)
}

/// Time-domain impulse response from a full-band estimate, keeping the
/// first `taps` coefficients.
pub fn impulse_response(h_freq: &[Complex64], taps: usize) -> Result<Vec<Complex64>> {
    if taps == 0 || taps > h_freq.len() {
        return Err(invalid(format!(
            "cannot keep {taps} taps of a {}-point response",
            h_freq.len()
        )));
    }
    let mut h = spectral::idft(h_freq)?;
    h.truncate(taps);
    Ok(h)
}
