//! Multipath channel models, AWGN and the frequency-shifted response.

use std::path::Path;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::modem::{check_unit, OfdmConfig};
use crate::spectral;

// Rounded, so 20 km/h at 2.4 GHz gives 44.44 Hz.
const SPEED_OF_LIGHT: f64 = 3.0e8;

/// Default carrier implied by 44.44 Hz Doppler at 20 km/h.
pub const DEFAULT_CARRIER_HZ: f64 = 2.4e9;

const TU12_TOML: &str = include_str!("../data/cost207_tu12.toml");
const BU12_TOML: &str = include_str!("../data/cost207_bu12.toml");

/// Mean power per delay tap, normalized to unit total energy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawProfile")]
pub struct PowerDelayProfile {
    pub name: String,
    pub sample_period_us: f64,
    /// `(delay in samples, linear power)`, delays strictly increasing from 0.
    pub taps: Vec<(usize, f64)>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProfile {
    name: String,
    sample_period_us: f64,
    taps: Vec<(usize, f64)>,
}

impl TryFrom<RawProfile> for PowerDelayProfile {
    type Error = Error;
    fn try_from(raw: RawProfile) -> Result<Self> {
        PowerDelayProfile::new(raw.name, raw.sample_period_us, raw.taps)
    }
}

impl PowerDelayProfile {
    /// Validates the profile and rescales the powers to sum to one.
    pub fn new(name: impl Into<String>, sample_period_us: f64, taps: Vec<(usize, f64)>) -> Result<Self> {
        let name = name.into();
        if taps.is_empty() {
            return Err(invalid(format!("profile {name} has no taps")));
        }
        if taps[0].0 != 0 {
            return Err(invalid(format!("profile {name}: first delay must be 0")));
        }
        if taps.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(invalid(format!(
                "profile {name}: delays must be strictly increasing"
            )));
        }
        if taps.iter().any(|&(_, p)| !(p >= 0.0) || !p.is_finite()) {
            return Err(invalid(format!("profile {name}: powers must be finite and >= 0")));
        }
        if !(sample_period_us > 0.0) {
            return Err(invalid(format!("profile {name}: sample period must be positive")));
        }
        let total: f64 = taps.iter().map(|t| t.1).sum();
        if !(total > 0.0) {
            return Err(invalid(format!("profile {name}: total power is zero")));
        }
        if (total - 1.0).abs() > 1e-9 {
            log::warn!("profile {name}: powers sum to {total}, normalizing");
        }
        let taps = taps.into_iter().map(|(d, p)| (d, p / total)).collect();
        Ok(Self {
            name,
            sample_period_us,
            taps,
        })
    }

    pub fn from_toml_str(s: &str) -> std::result::Result<Self, String> {
        toml::from_str(s).map_err(|e| e.to_string())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::from_toml_str(&text).map_err(|message| Error::Parse {
            path: path.to_owned(),
            message,
        })
    }

    /// Shipped profiles: `TU12`, `BU12` (COST-207, 5 MHz grid) and `two-tap`.
    pub fn preset(name: &str) -> Result<Self> {
        let text = match name.to_ascii_lowercase().as_str() {
            "tu12" | "cost207-tu12" => TU12_TOML,
            "bu12" | "cost207-bu12" => BU12_TOML,
            "two-tap" => return Self::new("two-tap", 0.2, vec![(0, 0.5), (1, 0.5)]),
            _ => return Err(invalid(format!("unknown profile preset {name:?}"))),
        };
        Ok(Self::from_toml_str(text).expect("shipped profile parses"))
    }

    /// Number of taps of a realization, `max delay + 1`.
    pub fn span(&self) -> usize {
        self.taps.last().map_or(0, |t| t.0 + 1)
    }
}

/// One channel impulse response `h[0..L]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelRealization {
    taps: Vec<Complex64>,
}

impl ChannelRealization {
    pub fn new(taps: Vec<Complex64>) -> Result<Self> {
        if taps.is_empty() {
            return Err(invalid("channel needs at least one tap"));
        }
        if taps.iter().any(|t| !t.re.is_finite() || !t.im.is_finite()) {
            return Err(invalid("channel taps must be finite"));
        }
        Ok(Self { taps })
    }

    pub fn taps(&self) -> &[Complex64] {
        &self.taps
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    pub fn energy(&self) -> f64 {
        self.taps.iter().map(|t| t.norm_sqr()).sum()
    }
}

/// AWGN level for a given Eb/N0.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseConfig {
    pub ebno_db: f64,
    pub bits_per_symbol: usize,
    /// `N / (N + K)`.
    pub overhead_factor: f64,
    /// Mean energy per transmitted time sample (`1/N` for unit-energy subcarriers).
    pub sample_energy: f64,
}

impl NoiseConfig {
    pub fn for_ofdm(ebno_db: f64, cfg: &OfdmConfig) -> Self {
        Self {
            ebno_db,
            bits_per_symbol: cfg.bits_per_symbol(),
            overhead_factor: cfg.overhead_factor(),
            sample_energy: 1.0 / cfg.n as f64,
        }
    }

    /// Single-sided noise density per time sample. Each subcarrier then sees
    /// an SNR of `log2(M)·(N/(N+K))·Eb/N0·|H[k]|²`.
    pub fn n0(&self) -> f64 {
        let ebno = 10f64.powf(self.ebno_db / 10.0);
        self.sample_energy / (self.bits_per_symbol as f64 * self.overhead_factor * ebno)
    }
}

fn complex_gaussian(rng: &mut impl Rng, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * s, im * s)
}

/// Rayleigh draw: independent CN(0, p) taps at the profile delays.
pub fn draw_realization(pdp: &PowerDelayProfile, rng: &mut impl Rng) -> ChannelRealization {
    let mut taps = vec![Complex64::new(0.0, 0.0); pdp.span()];
    for &(d, p) in &pdp.taps {
        taps[d] = complex_gaussian(rng, p);
    }
    ChannelRealization { taps }
}

/// Full linear convolution, length `|x| + |h| - 1`.
pub fn convolve(x: &[Complex64], h: &[Complex64]) -> Vec<Complex64> {
    if x.is_empty() || h.is_empty() {
        return Vec::new();
    }
    let mut y = vec![Complex64::new(0.0, 0.0); x.len() + h.len() - 1];
    for (l, &hl) in h.iter().enumerate() {
        if hl == Complex64::new(0.0, 0.0) {
            continue;
        }
        for (yi, &xi) in y[l..].iter_mut().zip(x) {
            *yi += hl * xi;
        }
    }
    y
}

/// Linear convolution with `h`, plus AWGN when `noise` is given.
pub fn apply_channel(
    x: &[Complex64],
    h: &ChannelRealization,
    noise: Option<&NoiseConfig>,
    rng: &mut impl Rng,
) -> Vec<Complex64> {
    let mut y = convolve(x, &h.taps);
    if let Some(cfg) = noise {
        let n0 = cfg.n0();
        for v in y.iter_mut() {
            *v += complex_gaussian(rng, n0);
        }
    }
    y
}

/// `H[k]`, the n-point DFT of the zero-padded impulse response.
pub fn frequency_response(h: &ChannelRealization, n: usize) -> Result<Vec<Complex64>> {
    shifted_frequency_response(h, n, Complex64::new(1.0, 0.0))
}

/// `H_ψ[k]`, the DFT of `D·h`; for `ψ = e^{jα}` this is `H(e^{j(ω_k - α)})`.
pub fn shifted_frequency_response(
    h: &ChannelRealization,
    n: usize,
    psi: Complex64,
) -> Result<Vec<Complex64>> {
    check_unit(psi)?;
    if h.len() > n {
        return Err(invalid(format!(
            "channel length {} exceeds DFT size {n}",
            h.len()
        )));
    }
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    if psi == Complex64::new(1.0, 0.0) {
        buf[..h.len()].copy_from_slice(&h.taps);
    } else {
        let d = spectral::d_matrix(psi, h.len())?;
        for (b, (t, w)) in buf.iter_mut().zip(h.taps.iter().zip(&d)) {
            *b = t * w;
        }
    }
    spectral::dft_in_place(&mut buf);
    Ok(buf)
}

/// Zeroth-order Bessel function of the first kind.
pub fn bessel_j0(x: f64) -> f64 {
    libm::j0(x)
}

/// Maximum Doppler shift for a terminal moving at `speed_kmh`.
pub fn doppler_hz(speed_kmh: f64, carrier_hz: f64) -> f64 {
    speed_kmh / 3.6 * carrier_hz / SPEED_OF_LIGHT
}

/// One Gauss–Markov step of every profile tap with correlation
/// `ρ = J₀(2π·f_d·dt)`; innovations keep each tap's marginal power.
pub fn evolve_doppler(
    h_prev: &ChannelRealization,
    pdp: &PowerDelayProfile,
    doppler_hz: f64,
    dt_s: f64,
    rng: &mut impl Rng,
) -> Result<ChannelRealization> {
    if !(doppler_hz >= 0.0) || !(dt_s > 0.0) {
        return Err(invalid(format!(
            "need doppler >= 0 and dt > 0, got {doppler_hz} Hz, {dt_s} s"
        )));
    }
    if h_prev.len() != pdp.span() {
        return Err(invalid(format!(
            "channel has {} taps but profile {} spans {}",
            h_prev.len(),
            pdp.name,
            pdp.span()
        )));
    }
    if doppler_hz == 0.0 {
        return Ok(h_prev.clone());
    }
    let rho = bessel_j0(2.0 * std::f64::consts::PI * doppler_hz * dt_s);
    let innov = (1.0 - rho * rho).max(0.0);
    let mut taps = h_prev.taps.clone();
    for &(d, p) in &pdp.taps {
        taps[d] = rho * taps[d] + complex_gaussian(rng, innov * p);
    }
    Ok(ChannelRealization { taps })
}
