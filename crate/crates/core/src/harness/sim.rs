use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{ChannelModel, Estimation, SchemeChoice, SimConfig};
use super::results::{BerCurve, BerPoint};
use crate::chanest::{impulse_response, ls_estimate_block, ls_estimate_comb, PilotPlan};
use crate::channel::{
    apply_channel, draw_realization, evolve_doppler, shifted_frequency_response,
    ChannelRealization, NoiseConfig, PowerDelayProfile,
};
use crate::detect::{zf_detect, ZpDetector};
use crate::error::{invalid, Result};
use crate::guard::{add_prefix, strip_guard, PrefixScheme};
use crate::modem::{check_unit, demap_symbols, map_bits, ofdm_demodulate, ofdm_modulate, QamConstellation};
use crate::psi_opt::{optimize_psi, p_qam, Objective, ObjectiveKind, SearchConfig};

/// Trials per parallel batch. The stop rule is checked between batches, so
/// results do not depend on the thread count.
const BATCH: u64 = 32;

/// Bits per point when no `max_trials` is configured.
const DEFAULT_BIT_BUDGET: f64 = 1e7;

const STREAM_CHANNEL: u64 = 0;
const STREAM_BITS: u64 = 1;
const STREAM_NOISE: u64 = 2;

/// Identifies one trial; each random stream is seeded from all three parts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TrialSeed {
    pub base: u64,
    pub point: u64,
    pub trial: u64,
}

impl TrialSeed {
    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut bytes = [0u8; 32];
        for (chunk, word) in bytes
            .chunks_exact_mut(8)
            .zip([self.base, self.point, self.trial, stream])
        {
            chunk.copy_from_slice(&word.to_le_bytes());
        }
        ChaCha8Rng::from_seed(bytes)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TrialOutcome {
    pub bit_errors: u64,
    pub bits: u64,
}

impl std::ops::AddAssign for TrialOutcome {
    fn add_assign(&mut self, rhs: Self) {
        self.bit_errors += rhs.bit_errors;
        self.bits += rhs.bits;
    }
}

enum Source {
    Fixed {
        h: ChannelRealization,
        zp: Option<ZpDetector>,
    },
    Rayleigh(PowerDelayProfile),
}

/// A validated configuration ready to run.
pub struct Simulator {
    cfg: SimConfig,
    constellation: QamConstellation,
    source: Source,
    pilots: Option<PilotPlan>,
    data_bins: Vec<usize>,
}

impl Simulator {
    pub fn new(cfg: SimConfig) -> Result<Self> {
        cfg.validate()?;
        let n = cfg.ofdm.n;
        let source = match &cfg.channel {
            ChannelModel::Fixed { taps } => {
                let h = ChannelRealization::new(
                    taps.iter().map(|t| Complex64::new(t[0], t[1])).collect(),
                )?;
                let zp = if cfg.scheme == SchemeChoice::ZeroPad {
                    Some(ZpDetector::auto(&h, n)?)
                } else {
                    None
                };
                Source::Fixed { h, zp }
            }
            ChannelModel::Rayleigh { profile, .. } => Source::Rayleigh(
                profile
                    .clone()
                    .ok_or_else(|| invalid("rayleigh channel profile not resolved"))?,
            ),
        };
        let pilots = cfg.pilot_plan();
        let data_bins = (0..n)
            .filter(|&k| !pilots.is_some_and(|p| p.is_pilot_bin(k)))
            .collect();
        if let SchemeChoice::Generalized { alpha } = cfg.scheme {
            check_unit(Complex64::from_polar(1.0, alpha))?;
        }
        Ok(Self {
            constellation: cfg.ofdm.constellation()?,
            cfg,
            source,
            pilots,
            data_bins,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    /// Payload bits carried by one trial (one slot).
    pub fn bits_per_trial(&self) -> u64 {
        let symbols = match self.cfg.estimation {
            Estimation::Block => self.cfg.symbols_per_slot - 1,
            _ => self.cfg.symbols_per_slot,
        };
        (symbols * self.data_bins.len() * self.constellation.bits_per_symbol()) as u64
    }

    pub fn max_trials(&self) -> u64 {
        self.cfg
            .stop
            .max_trials
            .unwrap_or_else(|| (DEFAULT_BIT_BUDGET / self.bits_per_trial() as f64).ceil() as u64)
    }

    /// One slot: channel draw, `symbols_per_slot` OFDM symbols (the first a
    /// pilot under block estimation), detection and bit-error count.
    pub fn run_trial(&self, ebno_db: f64, seed: TrialSeed) -> Result<TrialOutcome> {
        let mut link = Link {
            sim: self,
            ebno_db,
            noise: self
                .cfg
                .awgn
                .then(|| NoiseConfig::for_ofdm(ebno_db, &self.cfg.ofdm)),
            channel_rng: seed.rng(STREAM_CHANNEL),
            bit_rng: seed.rng(STREAM_BITS),
            noise_rng: seed.rng(STREAM_NOISE),
            h: ChannelRealization::new(vec![Complex64::new(1.0, 0.0)])?,
        };
        link.h = match &self.source {
            Source::Fixed { h, .. } => h.clone(),
            Source::Rayleigh(pdp) => draw_realization(pdp, &mut link.channel_rng),
        };
        match self.cfg.estimation {
            Estimation::Perfect => link.perfect_csi_slot(),
            Estimation::Block => link.block_slot(),
            Estimation::Comb { .. } => link.comb_slot(),
        }
    }

    /// Runs every grid point until the stop rule fires.
    pub fn run_sweep(&self) -> Result<BerCurve> {
        let max_trials = self.max_trials();
        let stop = self.cfg.stop;
        let mut points = Vec::with_capacity(self.cfg.ebno_grid_db.len());
        for (p, &ebno_db) in self.cfg.ebno_grid_db.iter().enumerate() {
            let mut total = TrialOutcome::default();
            let mut trials = 0;
            while trials < max_trials {
                let end = (trials + BATCH).min(max_trials);
                let batch: Vec<Result<TrialOutcome>> = (trials..end)
                    .into_par_iter()
                    .map(|t| {
                        self.run_trial(
                            ebno_db,
                            TrialSeed {
                                base: self.cfg.seed,
                                point: p as u64,
                                trial: t,
                            },
                        )
                    })
                    .collect();
                for outcome in batch {
                    total += outcome?;
                }
                trials = end;
                if total.bit_errors >= stop.min_errors && trials >= stop.min_trials {
                    break;
                }
            }
            log::info!(
                "{}: {ebno_db} dB, {} errors in {} bits ({trials} trials)",
                self.cfg.name,
                total.bit_errors,
                total.bits
            );
            points.push(BerPoint::from_counts(ebno_db, total.bit_errors, total.bits, trials));
        }
        Ok(BerCurve {
            points,
            config: Some(self.cfg.clone()),
        })
    }

    fn fixed_psi(&self) -> Complex64 {
        match self.cfg.scheme {
            SchemeChoice::Generalized { alpha } => Complex64::from_polar(1.0, alpha),
            _ => Complex64::new(1.0, 0.0),
        }
    }

    /// ψ used for data given the receiver's view of the channel.
    fn choose_psi(&self, h: &ChannelRealization, ebno_db: f64) -> Result<Complex64> {
        if self.cfg.scheme != SchemeChoice::Optimized {
            return Ok(self.fixed_psi());
        }
        let objective = match self.cfg.objective {
            ObjectiveKind::MinPe => Objective::MinPe {
                ebno_linear: 10f64.powf(ebno_db / 10.0),
            },
            ObjectiveKind::MaxMin => Objective::MaxMin,
        };
        let search = SearchConfig::for_subcarriers(self.cfg.ofdm.n, self.cfg.search_tol);
        Ok(optimize_psi(h, &self.cfg.ofdm, objective, &search)?.psi_star)
    }
}

/// Per-trial state: the current channel and the three random streams.
struct Link<'a> {
    sim: &'a Simulator,
    ebno_db: f64,
    noise: Option<NoiseConfig>,
    channel_rng: ChaCha8Rng,
    bit_rng: ChaCha8Rng,
    noise_rng: ChaCha8Rng,
    h: ChannelRealization,
}

impl Link<'_> {
    fn cfg(&self) -> &SimConfig {
        &self.sim.cfg
    }

    /// Advances the channel by one OFDM symbol; false when it is static.
    fn step(&mut self) -> Result<bool> {
        let (Some(m), Source::Rayleigh(pdp)) = (self.cfg().mobility, &self.sim.source) else {
            return Ok(false);
        };
        let dt = self.cfg().ofdm.symbol_period_s();
        self.h = evolve_doppler(&self.h, pdp, m.doppler(), dt, &mut self.channel_rng)?;
        Ok(true)
    }

    fn draw_bits(&mut self) -> Vec<u8> {
        let count = self.sim.data_bins.len() * self.sim.constellation.bits_per_symbol();
        (0..count).map(|_| u8::from(self.bit_rng.gen::<bool>())).collect()
    }

    /// Guard insertion, channel, noise, guard removal and demodulation.
    fn transmit(&mut self, x_freq: &[Complex64], psi: Complex64) -> Result<Vec<Complex64>> {
        let (n, k) = (self.cfg().ofdm.n, self.cfg().ofdm.k);
        let scheme = if psi == Complex64::new(1.0, 0.0) {
            PrefixScheme::Cyclic
        } else {
            PrefixScheme::Generalized { psi }
        };
        let tx = add_prefix(&ofdm_modulate(x_freq, psi)?, k, scheme)?;
        let rx = apply_channel(&tx, &self.h, self.noise.as_ref(), &mut self.noise_rng);
        ofdm_demodulate(&strip_guard(&rx, n, k)?, psi)
    }

    /// ZP block preceded by the previous block's zero guard.
    fn transmit_zp(&mut self, x_freq: &[Complex64]) -> Result<Vec<Complex64>> {
        let (n, k) = (self.cfg().ofdm.n, self.cfg().ofdm.k);
        let x = ofdm_modulate(x_freq, Complex64::new(1.0, 0.0))?;
        let mut tx = vec![Complex64::new(0.0, 0.0); k];
        tx.extend(add_prefix(&x, k, PrefixScheme::ZeroPad)?);
        let rx = apply_channel(&tx, &self.h, self.noise.as_ref(), &mut self.noise_rng);
        let built;
        let det = match &self.sim.source {
            Source::Fixed { zp: Some(det), .. } => det,
            _ => {
                built = ZpDetector::auto(&self.h, n)?;
                &built
            }
        };
        det.detect(&rx[k..k + det.window()])
    }

    /// Maps fresh bits onto the data bins, pilots (if any) elsewhere.
    fn data_symbol(&mut self) -> Result<(Vec<u8>, Vec<Complex64>)> {
        let bits = self.draw_bits();
        let symbols = map_bits(&bits, &self.sim.constellation)?;
        let mut x = vec![Complex64::new(0.0, 0.0); self.cfg().ofdm.n];
        if let Some(PilotPlan::Comb { pilot_value, .. }) = self.sim.pilots {
            for (k, v) in x.iter_mut().enumerate() {
                if self.sim.pilots.is_some_and(|p| p.is_pilot_bin(k)) {
                    *v = pilot_value;
                }
            }
        }
        for (&k, s) in self.sim.data_bins.iter().zip(symbols) {
            x[k] = s;
        }
        Ok((bits, x))
    }

    fn score(&self, bits: &[u8], y: &[Complex64], h_eff: &[Complex64]) -> Result<TrialOutcome> {
        let eq = zf_detect(y, h_eff)?.symbols;
        Ok(self.count(bits, &eq))
    }

    fn count(&self, bits: &[u8], eq: &[Complex64]) -> TrialOutcome {
        let data: Vec<Complex64> = self.sim.data_bins.iter().map(|&k| eq[k]).collect();
        let decided = demap_symbols(&data, &self.sim.constellation);
        TrialOutcome {
            bit_errors: bits.iter().zip(&decided).filter(|(a, b)| a != b).count() as u64,
            bits: bits.len() as u64,
        }
    }

    fn perfect_csi_slot(&mut self) -> Result<TrialOutcome> {
        let n = self.cfg().ofdm.n;
        let zero_pad = self.cfg().scheme == SchemeChoice::ZeroPad;
        let mut psi = self.sim.choose_psi(&self.h, self.ebno_db)?;
        let mut total = TrialOutcome::default();
        for s in 0..self.cfg().symbols_per_slot {
            if s > 0 && self.step()? {
                psi = self.sim.choose_psi(&self.h, self.ebno_db)?;
            }
            let (bits, x) = self.data_symbol()?;
            total += if zero_pad {
                let eq = self.transmit_zp(&x)?;
                self.count(&bits, &eq)
            } else {
                let y = self.transmit(&x, psi)?;
                let h_eff = shifted_frequency_response(&self.h, n, psi)?;
                self.score(&bits, &y, &h_eff)?
            };
        }
        Ok(total)
    }

    /// Pilot symbol with the scheme's fixed ψ, then data. The optimized
    /// receiver keeps only the first K+1 taps of the estimate before
    /// choosing ψ.
    fn block_slot(&mut self) -> Result<TrialOutcome> {
        let (n, k) = (self.cfg().ofdm.n, self.cfg().ofdm.k);
        let pilot_psi = self.sim.fixed_psi();
        let pilots = vec![Complex64::new(1.0, 0.0); n];
        let y = self.transmit(&pilots, pilot_psi)?;
        let h_hat = ls_estimate_block(&y, &pilots)?;
        let (psi, h_eff) = if self.cfg().scheme == SchemeChoice::Optimized {
            let h_est = ChannelRealization::new(impulse_response(&h_hat, k + 1)?)?;
            let psi = self.sim.choose_psi(&h_est, self.ebno_db)?;
            (psi, shifted_frequency_response(&h_est, n, psi)?)
        } else {
            (pilot_psi, h_hat)
        };
        let mut total = TrialOutcome::default();
        for _ in 1..self.cfg().symbols_per_slot {
            self.step()?;
            let (bits, x) = self.data_symbol()?;
            let y = self.transmit(&x, psi)?;
            total += self.score(&bits, &y, &h_eff)?;
        }
        Ok(total)
    }

    /// Comb pilots in every symbol; the optimized receiver picks the next
    /// symbol's ψ from the current estimate.
    fn comb_slot(&mut self) -> Result<TrialOutcome> {
        let (n, k) = (self.cfg().ofdm.n, self.cfg().ofdm.k);
        let plan = self.sim.pilots.expect("comb plan");
        let PilotPlan::Comb { spacing, .. } = plan else {
            unreachable!("comb estimation has a comb plan")
        };
        let mut psi = self.sim.fixed_psi();
        let mut total = TrialOutcome::default();
        for s in 0..self.cfg().symbols_per_slot {
            if s > 0 {
                self.step()?;
            }
            let (bits, x) = self.data_symbol()?;
            let y = self.transmit(&x, psi)?;
            let h_hat = ls_estimate_comb(&y, &plan)?;
            total += self.score(&bits, &y, &h_hat)?;
            if self.cfg().scheme == SchemeChoice::Optimized {
                // The estimate is of D·h; undo the weighting before re-optimizing.
                let taps = impulse_response(&h_hat, (k + 1).min(n / spacing))?;
                let (_, theta) = psi.to_polar();
                let h_est = ChannelRealization::new(
                    taps.iter()
                        .enumerate()
                        .map(|(l, t)| t * Complex64::from_polar(1.0, -theta * l as f64))
                        .collect(),
                )?;
                psi = self.sim.choose_psi(&h_est, self.ebno_db)?;
            }
        }
        Ok(total)
    }
}

/// One trial of `cfg` at `ebno_db`, seeded by `seed`.
pub fn run_trial(cfg: &SimConfig, ebno_db: f64, seed: u64) -> Result<TrialOutcome> {
    Simulator::new(cfg.clone())?.run_trial(
        ebno_db,
        TrialSeed {
            base: seed,
            point: 0,
            trial: 0,
        },
    )
}

/// Full Monte Carlo sweep of `cfg`.
pub fn run_sweep(cfg: &SimConfig) -> Result<BerCurve> {
    Simulator::new(cfg.clone())?.run_sweep()
}

/// Average BER predicted from the subcarrier gains under ψ:
/// `(1/N)·Σ_k P_QAM((N/(N+K))·Eb/N0·|H_ψ[k]|²)`.
pub fn analytic_ber(
    h: &ChannelRealization,
    cfg: &crate::modem::OfdmConfig,
    psi: Complex64,
    ebno_db: f64,
) -> Result<f64> {
    cfg.validate()?;
    let gains = shifted_frequency_response(h, cfg.n, psi)?;
    let snr = cfg.overhead_factor() * 10f64.powf(ebno_db / 10.0);
    let mut sum = 0.0;
    for g in &gains {
        sum += p_qam(snr * g.norm_sqr(), cfg.modulation_order)?;
    }
    Ok(sum / cfg.n as f64)
}
