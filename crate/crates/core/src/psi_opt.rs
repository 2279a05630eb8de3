//! Choosing ψ = e^{jα} per channel.
//!
//! Two objectives are supported: the average bit error probability of the
//! shifted channel (minimized), and the smallest subcarrier gain (maximized).
//! Both are searched over one subcarrier spacing `[0, 2π/N]` by golden-section
//! search, since shifts differing by `2π/N` only rotate the subcarrier grid.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelRealization;
use crate::error::{invalid, Error, Result};
use crate::modem::OfdmConfig;
use crate::spectral;

/// Golden ratio conjugate, (√5 − 1)/2.
pub const GOLDEN: f64 = 0.618_033_988_749_894_8;

/// Gaussian tail probability `Q(x) = ½·erfc(x/√2)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / SQRT_2)
}

/// AWGN bit error probability of Gray-mapped square M-QAM at per-bit SNR
/// `gamma_b` (linear). Exact for M = 4, the usual nearest-neighbour
/// approximation otherwise; clamped to `[0, ½]`.
pub fn p_qam(gamma_b: f64, m: usize) -> Result<f64> {
    if !(gamma_b >= 0.0) {
        return Err(invalid(format!("per-bit SNR must be >= 0, got {gamma_b}")));
    }
    let p = match m {
        4 => q_function((2.0 * gamma_b).sqrt()),
        16 | 64 | 256 => {
            let mf = m as f64;
            let bits = mf.log2();
            4.0 / bits * (1.0 - 1.0 / mf.sqrt()) * q_function((3.0 * bits * gamma_b / (mf - 1.0)).sqrt())
        }
        _ => return Err(invalid(format!("unsupported QAM order {m}"))),
    };
    Ok(p.clamp(0.0, 0.5))
}

/// Which figure of merit drives the ψ search.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectiveKind {
    MinPe,
    MaxMin,
}

impl std::str::FromStr for ObjectiveKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "minpe" => Ok(Self::MinPe),
            "maxmin" => Ok(Self::MaxMin),
            _ => Err(invalid(format!("unknown objective {s:?}, expected minpe or maxmin"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Objective {
    /// Minimize the average BER at this Eb/N0 (linear, before the guard
    /// overhead factor).
    MinPe { ebno_linear: f64 },
    /// Maximize `min_k |H_ψ[k]|`.
    MaxMin,
}

impl Objective {
    pub fn kind(&self) -> ObjectiveKind {
        match self {
            Objective::MinPe { .. } => ObjectiveKind::MinPe,
            Objective::MaxMin => ObjectiveKind::MaxMin,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchConfig {
    pub lo: f64,
    pub hi: f64,
    pub tol: f64,
    pub max_iterations: usize,
    /// Cross-check the result against a 256-point grid and warn on mismatch.
    pub check_unimodal: bool,
}

impl SearchConfig {
    /// `[0, 2π/N]` with tolerance `tol`.
    pub fn for_subcarriers(n: usize, tol: f64) -> Self {
        Self {
            lo: 0.0,
            hi: 2.0 * PI / n as f64,
            tol,
            max_iterations: 100,
            check_unimodal: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.lo < self.hi) || !self.lo.is_finite() || !self.hi.is_finite() {
            return Err(invalid(format!("bad search interval [{}, {}]", self.lo, self.hi)));
        }
        if !(self.tol > 0.0) {
            return Err(invalid(format!("tolerance must be positive, got {}", self.tol)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GoldenResult {
    /// Midpoint of the final bracket.
    pub argmin: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub bracket: (f64, f64),
}

/// Golden-section minimization of `f` on `[cfg.lo, cfg.hi]`.
///
/// Two probes are evaluated up front; every iteration then reuses one
/// function value and evaluates one new probe, until the bracket is shorter
/// than `cfg.tol`.
pub fn golden_section(mut f: impl FnMut(f64) -> f64, cfg: &SearchConfig) -> Result<GoldenResult> {
    cfg.validate()?;
    let (mut a, mut b) = (cfg.lo, cfg.hi);
    let mut p = b - (b - a) * GOLDEN;
    let mut q = a + (b - a) * GOLDEN;
    let mut fp = f(p);
    let mut fq = f(q);
    let mut iterations = 0;
    let mut evaluations = 2;

    while b - a >= cfg.tol {
        if iterations == cfg.max_iterations {
            return Err(Error::ConvergenceFailure {
                iterations,
                lo: a,
                hi: b,
            });
        }
        if fp <= fq {
            b = q;
            q = p;
            p = b - (b - a) * GOLDEN;
            fq = fp;
            fp = f(p);
        } else {
            a = p;
            p = q;
            q = a + (b - a) * GOLDEN;
            fp = fq;
            fq = f(q);
        }
        evaluations += 1;
        iterations += 1;
    }

    let argmin = 0.5 * (a + b);
    if cfg.check_unimodal {
        let grid = 256;
        let step = (cfg.hi - cfg.lo) / (grid - 1) as f64;
        let (best, _) = (0..grid)
            .map(|i| {
                let x = cfg.lo + step * i as f64;
                (x, f(x))
            })
            .fold((cfg.lo, f64::INFINITY), |acc, c| if c.1 < acc.1 { c } else { acc });
        if (best - argmin).abs() > 2.0 * cfg.tol {
            log::warn!(
                "golden-section result {argmin} disagrees with grid minimum {best}; objective may not be unimodal"
            );
        }
    }

    Ok(GoldenResult {
        argmin,
        iterations,
        evaluations,
        bracket: (a, b),
    })
}

/// `|H_ψ[k]|²` for ψ = e^{jα}. Callers guarantee `h.len() <= n`.
fn shifted_gains(taps: &[Complex64], n: usize, alpha: f64) -> Vec<f64> {
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for (l, (b, t)) in buf.iter_mut().zip(taps).enumerate() {
        *b = t * Complex64::from_polar(1.0, alpha * l as f64);
    }
    spectral::dft_in_place(&mut buf);
    buf.iter().map(|v| v.norm_sqr()).collect()
}

fn check_fit(h: &ChannelRealization, n: usize) -> Result<()> {
    if h.len() > n {
        return Err(invalid(format!("channel length {} exceeds N={n}", h.len())));
    }
    Ok(())
}

fn mean_pe(gains: &[f64], snr: f64, m: usize) -> f64 {
    gains
        .iter()
        .map(|g| p_qam(snr * g, m).unwrap_or(0.5))
        .sum::<f64>()
        / gains.len() as f64
}

/// Average bit error probability with ψ = e^{jα}:
/// `(1/N)·Σ_k P_QAM((N/(N+K))·Eb/N0·|H_ψ[k]|²)`.
pub fn pe_objective(alpha: f64, h: &ChannelRealization, cfg: &OfdmConfig, ebno_linear: f64) -> Result<f64> {
    check_fit(h, cfg.n)?;
    if !(ebno_linear > 0.0) {
        return Err(invalid(format!("Eb/N0 must be positive, got {ebno_linear}")));
    }
    p_qam(0.0, cfg.modulation_order)?;
    let gains = shifted_gains(h.taps(), cfg.n, alpha);
    Ok(mean_pe(&gains, cfg.overhead_factor() * ebno_linear, cfg.modulation_order))
}

/// `min_k |H_ψ[k]|` with ψ = e^{jα}.
pub fn maxmin_objective(alpha: f64, h: &ChannelRealization, n: usize) -> Result<f64> {
    check_fit(h, n)?;
    Ok(shifted_gains(h.taps(), n, alpha)
        .into_iter()
        .fold(f64::INFINITY, f64::min)
        .sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PsiChoice {
    pub alpha_star: f64,
    pub psi_star: Complex64,
    /// Pe at α* for MinPe, `min_k |H_ψ[k]|` at α* for MaxMin.
    pub objective_value: f64,
    pub iterations: usize,
}

/// Runs the golden-section search for the chosen objective. Any
/// `α* + 2πm/N` is equivalent to the returned shift.
pub fn optimize_psi(
    h: &ChannelRealization,
    cfg: &OfdmConfig,
    obj: Objective,
    search: &SearchConfig,
) -> Result<PsiChoice> {
    check_fit(h, cfg.n)?;
    let n = cfg.n;
    let m = cfg.modulation_order;
    let taps = h.taps();
    let result = match obj {
        Objective::MinPe { ebno_linear } => {
            // Validates SNR and modulation order once up front.
            pe_objective(0.0, h, cfg, ebno_linear)?;
            let snr = cfg.overhead_factor() * ebno_linear;
            let r = golden_section(|a| mean_pe(&shifted_gains(taps, n, a), snr, m), search)?;
            let value = mean_pe(&shifted_gains(taps, n, r.argmin), snr, m);
            (r, value)
        }
        Objective::MaxMin => {
            let min_gain = |a| {
                shifted_gains(taps, n, a)
                    .into_iter()
                    .fold(f64::INFINITY, f64::min)
                    .sqrt()
            };
            let r = golden_section(|a| -min_gain(a), search)?;
            (r, min_gain(r.argmin))
        }
    };
    let (r, objective_value) = result;
    Ok(PsiChoice {
        alpha_star: r.argmin,
        psi_star: Complex64::from_polar(1.0, r.argmin),
        objective_value,
        iterations: r.iterations,
    })
}

/// Complex multiplications spent on the generalized prefix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct CmBudget {
    /// Prefix scaling (K), building D⁻¹ (N), applying D⁻¹ (N).
    pub tx_cm: u64,
    /// Building D (N) and applying it (N).
    pub rx_fixed_cm: u64,
    /// One golden-section iteration.
    pub per_iteration_cm: u64,
    pub total_cm: u64,
}

/// Worst-case multiplication counts, charging `N·log2 N` per DFT
/// (`log2 N` rounded up when N is not a power of two).
pub fn cm_budget(cfg: &OfdmConfig, l: usize, z: usize, kind: ObjectiveKind) -> Result<CmBudget> {
    if z == 0 {
        return Err(invalid("iteration count Z must be at least 1"));
    }
    if l == 0 {
        return Err(invalid("channel length L must be at least 1"));
    }
    let n = cfg.n as u64;
    let k = cfg.k as u64;
    let l = l as u64;
    let log2n = u64::from(cfg.n.next_power_of_two().trailing_zeros());
    let dft = n * log2n;
    let tx_cm = 2 * n + k;
    let rx_fixed_cm = 2 * n;
    let per_iteration_cm = match kind {
        ObjectiveKind::MinPe => n + l - 1 + dft,
        ObjectiveKind::MaxMin => l - 1 + dft,
    };
    Ok(CmBudget {
        tx_cm,
        rx_fixed_cm,
        per_iteration_cm,
        total_cm: tx_cm + rx_fixed_cm + z as u64 * per_iteration_cm,
    })
}
