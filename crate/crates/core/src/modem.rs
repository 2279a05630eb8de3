//! Gray-coded square QAM and the multicarrier modulator.
//!
//! With a generalized prefix the transmitter sends `D⁻¹·idft(X)` and the
//! receiver computes `dft(D·y)`. For `ψ = 1` both reduce to the plain
//! IDFT/DFT pair used by CP and ZP systems.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::spectral;

/// Tolerance on `|ψ| = 1`.
pub const UNIT_TOL: f64 = 1e-9;

pub(crate) fn check_unit(psi: Complex64) -> Result<()> {
    if !psi.re.is_finite() || !psi.im.is_finite() || (psi.norm() - 1.0).abs() > UNIT_TOL {
        return Err(invalid(format!("|psi| must be 1, got {}", psi.norm())));
    }
    Ok(())
}

/// Square M-QAM with per-axis Gray labels and unit average energy.
///
/// Label bits are MSB first; the first half selects the in-phase level and
/// the second half the quadrature level. Bit value 0 maps to the positive
/// half-axis, so 4-QAM labels 00, 01, 11, 10 walk around the square.
#[derive(Clone, Debug, PartialEq)]
pub struct QamConstellation {
    order: usize,
    bits_per_symbol: usize,
    /// Indexed by label.
    points: Vec<Complex64>,
}

impl QamConstellation {
    pub fn new(order: usize) -> Result<Self> {
        if !matches!(order, 4 | 16 | 64 | 256) {
            return Err(invalid(format!("unsupported QAM order {order}")));
        }
        let bits = order.trailing_zeros() as usize;
        let half = bits / 2;
        let side = 1usize << half;
        // Mean energy of odd-integer square QAM is 2(M-1)/3.
        let scale = (3.0 / (2.0 * (order as f64 - 1.0))).sqrt();
        let level = |g: usize| {
            let idx = gray_to_index(g);
            (side as f64 - 1.0) - 2.0 * idx as f64
        };
        let points = (0..order)
            .map(|label| {
                let i = label >> half;
                let q = label & (side - 1);
                Complex64::new(level(i), level(q)) * scale
            })
            .collect();
        Ok(Self {
            order,
            bits_per_symbol: bits,
            points,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    /// Constellation points indexed by their label.
    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    /// Label of the nearest point; ties resolve to the smallest label.
    pub fn decide(&self, s: Complex64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (label, p) in self.points.iter().enumerate() {
            let d = (s - p).norm_sqr();
            if d < best_d {
                best_d = d;
                best = label;
            }
        }
        best
    }
}

fn gray_to_index(mut g: usize) -> usize {
    let mut idx = g;
    while g > 0 {
        g >>= 1;
        idx ^= g;
    }
    idx
}

/// Static OFDM system parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OfdmConfig {
    /// Subcarriers, N.
    pub n: usize,
    /// Guard length in samples, K.
    pub k: usize,
    /// QAM order M.
    pub modulation_order: usize,
    #[serde(default = "default_sample_rate")]
    pub sample_rate_hz: f64,
}

fn default_sample_rate() -> f64 {
    5e6
}

impl OfdmConfig {
    pub fn new(n: usize, k: usize, modulation_order: usize) -> Result<Self> {
        let cfg = Self {
            n,
            k,
            modulation_order,
            sample_rate_hz: default_sample_rate(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(invalid(format!("N must be at least 2, got {}", self.n)));
        }
        if self.k == 0 || self.k >= self.n {
            return Err(invalid(format!(
                "guard length must satisfy 0 < K < N, got K={} N={}",
                self.k, self.n
            )));
        }
        if !(self.sample_rate_hz > 0.0) {
            return Err(invalid("sample rate must be positive"));
        }
        QamConstellation::new(self.modulation_order).map(|_| ())
    }

    pub fn constellation(&self) -> Result<QamConstellation> {
        QamConstellation::new(self.modulation_order)
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.modulation_order.trailing_zeros() as usize
    }

    /// `N / (N + K)`, the share of transmitted energy that is not guard.
    pub fn overhead_factor(&self) -> f64 {
        self.n as f64 / (self.n + self.k) as f64
    }

    /// Duration of one OFDM symbol including its guard.
    pub fn symbol_period_s(&self) -> f64 {
        (self.n + self.k) as f64 / self.sample_rate_hz
    }
}

/// Maps bits (0/1, MSB first per symbol) onto constellation points.
pub fn map_bits(bits: &[u8], c: &QamConstellation) -> Result<Vec<Complex64>> {
    let m = c.bits_per_symbol;
    if !bits.len().is_multiple_of(m) {
        return Err(invalid(format!(
            "{} bits is not a multiple of {m} bits per symbol",
            bits.len()
        )));
    }
    Ok(bits
        .chunks_exact(m)
        .map(|chunk| {
            let label = chunk
                .iter()
                .fold(0usize, |acc, &b| (acc << 1) | usize::from(b != 0));
            c.points[label]
        })
        .collect())
}

/// Hard-decision demapping, inverse of [`map_bits`].
pub fn demap_symbols(symbols: &[Complex64], c: &QamConstellation) -> Vec<u8> {
    let m = c.bits_per_symbol;
    let mut out = Vec::with_capacity(symbols.len() * m);
    for &s in symbols {
        let label = c.decide(s);
        out.extend((0..m).rev().map(|b| ((label >> b) & 1) as u8));
    }
    out
}

/// `x = D⁻¹·idft(X)`.
pub fn ofdm_modulate(x_freq: &[Complex64], psi: Complex64) -> Result<Vec<Complex64>> {
    check_unit(psi)?;
    let mut x = spectral::idft(x_freq)?;
    if psi != Complex64::new(1.0, 0.0) {
        let d = spectral::d_matrix(psi, x.len())?;
        for (v, w) in x.iter_mut().zip(&d) {
            *v *= w.conj();
        }
    }
    Ok(x)
}

/// `Y = dft(D·y)`.
pub fn ofdm_demodulate(y_time: &[Complex64], psi: Complex64) -> Result<Vec<Complex64>> {
    check_unit(psi)?;
    if y_time.is_empty() {
        return Err(invalid("empty OFDM symbol"));
    }
    let mut y = y_time.to_vec();
    if psi != Complex64::new(1.0, 0.0) {
        let d = spectral::d_matrix(psi, y.len())?;
        for (v, w) in y.iter_mut().zip(&d) {
            *v *= w;
        }
    }
    spectral::dft_in_place(&mut y);
    Ok(y)
}
