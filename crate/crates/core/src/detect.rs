//! Symbol detection: per-subcarrier zero forcing, and least squares for ZP.

use num_complex::Complex64;

use crate::channel::ChannelRealization;
use crate::error::{invalid, Error, Result};
use crate::spectral::{self, CMatrix};

/// Above this inverse growth the square ZP window loses too much precision.
const MAX_SQUARE_GROWTH: f64 = 1e6;

/// Below this `|H[k]|` a subcarrier is treated as a spectral null.
pub const EPS_DIV: f64 = 1e-15;

#[derive(Clone, Debug, PartialEq)]
pub struct ZfOutput {
    pub symbols: Vec<Complex64>,
    /// Bins whose channel gain was below [`EPS_DIV`]; their symbol is 0.
    pub null_bins: Vec<usize>,
}

/// `X̂[k] = Y[k] / H[k]`, with nulled bins set to zero and flagged.
pub fn zf_detect(y_freq: &[Complex64], h_freq: &[Complex64]) -> Result<ZfOutput> {
    if y_freq.len() != h_freq.len() {
        return Err(invalid(format!(
            "{} received bins but {} channel bins",
            y_freq.len(),
            h_freq.len()
        )));
    }
    let mut null_bins = Vec::new();
    let symbols = y_freq
        .iter()
        .zip(h_freq)
        .enumerate()
        .map(|(k, (y, h))| {
            if h.norm() < EPS_DIV {
                null_bins.push(k);
                Complex64::new(0.0, 0.0)
            } else {
                y / h
            }
        })
        .collect();
    Ok(ZfOutput { symbols, null_bins })
}

/// ZP receiver for one channel: `X̂ = F·H⁺·y` with `H` the leading rows of
/// the tall convolution matrix that the receive window covers.
///
/// A window of exactly `n` samples uses the square lower-triangular top of
/// `H_ZP`; a window of `n + L - 1` samples uses the whole tall matrix.
#[derive(Clone, Debug)]
pub struct ZpDetector {
    n: usize,
    window: usize,
    pinv: CMatrix,
}

impl ZpDetector {
    pub fn new(h: &ChannelRealization, n: usize, window: usize) -> Result<Self> {
        let full = n + h.len() - 1;
        if window < n || window > full {
            return Err(invalid(format!(
                "ZP window must have between {n} and {full} samples, got {window}"
            )));
        }
        let tall = spectral::build_zp_matrix(h.taps(), n)?;
        let pinv = spectral::pseudoinverse(&tall.top_rows(window))?;
        Ok(Self { n, window, pinv })
    }

    /// Square window when its matrix is well conditioned, otherwise the full
    /// tall window. The square top of `H_ZP` is triangular Toeplitz; it is
    /// singular when `h[0]` vanishes, and its inverse grows geometrically
    /// with `n` when the channel has zeros outside the unit circle.
    pub fn auto(h: &ChannelRealization, n: usize) -> Result<Self> {
        let tall = n + h.len() - 1;
        if tall == n {
            return Self::new(h, n, n);
        }
        match Self::new(h, n, n) {
            Ok(square) if square.growth(h) <= MAX_SQUARE_GROWTH => Ok(square),
            Ok(_) | Err(Error::SingularMatrix { .. }) => Self::new(h, n, tall),
            Err(e) => Err(e),
        }
    }

    /// `max|H⁺| · max|h|`, a cheap proxy for the condition number.
    fn growth(&self, h: &ChannelRealization) -> f64 {
        let inv = (0..self.pinv.rows())
            .flat_map(|i| self.pinv.row(i).iter().map(|v| v.norm()))
            .fold(0.0, f64::max);
        inv * h.taps().iter().map(|t| t.norm()).fold(0.0, f64::max)
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn detect(&self, y: &[Complex64]) -> Result<Vec<Complex64>> {
        if y.len() != self.window {
            return Err(invalid(format!(
                "expected {} received samples, got {}",
                self.window,
                y.len()
            )));
        }
        let mut x = self.pinv.mul_vec(y);
        debug_assert_eq!(x.len(), self.n);
        spectral::dft_in_place(&mut x);
        Ok(x)
    }
}

/// One-shot ZP detection; the window length selects the rows of `H_ZP` used.
pub fn zp_detect(y_window: &[Complex64], h: &ChannelRealization, n: usize) -> Result<Vec<Complex64>> {
    ZpDetector::new(h, n, y_window.len())?.detect(y_window)
}
