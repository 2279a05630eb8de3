use gpofdm::channel::{draw_realization, ChannelRealization, PowerDelayProfile};
use gpofdm::harness::{
    analytic_ber, run_sweep, sidecar_path, write_results, ChannelModel, Estimation, SchemeChoice,
    SimConfig, Simulator, StopRule, TrialSeed,
};
use gpofdm::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn example1(scheme: SchemeChoice, grid: Vec<f64>) -> SimConfig {
    let mut cfg = SimConfig::preset("example1").unwrap();
    cfg.scheme = scheme;
    cfg.ebno_grid_db = grid;
    cfg
}

fn two_tap() -> ChannelRealization {
    ChannelRealization::new(vec![Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0); 2]).unwrap()
}

fn fixed_bits(cfg: &mut SimConfig, bits: u64) {
    let per = Simulator::new(cfg.clone()).unwrap().bits_per_trial();
    let trials = bits.div_ceil(per);
    cfg.stop = StopRule {
        min_errors: 1,
        min_trials: trials,
        max_trials: Some(trials),
    };
}

#[test]
fn two_tap_floor_and_its_removal() {
    let mut cp = example1(SchemeChoice::Cyclic, vec![35.0]);
    fixed_bits(&mut cp, 1_000_000);
    let floor = run_sweep(&cp).unwrap().points[0].ber;
    assert!((0.006..=0.010).contains(&floor), "{floor}");

    // With ψ* the two bins either side of the old null keep |H|² = 1 - cos(π/64),
    // so the closed form puts 35 dB at about 2.2e-4: far below the floor,
    // but not below 1e-4.
    let mut opt = example1(SchemeChoice::Optimized, vec![35.0]);
    fixed_bits(&mut opt, 1_000_000);
    let p = &run_sweep(&opt).unwrap().points[0];
    let psi = Complex64::from_polar(1.0, std::f64::consts::PI / 64.0);
    let want = analytic_ber(&two_tap(), &opt.ofdm, psi, 35.0).unwrap();
    let sigma = (want * (1.0 - want) / p.bits_simulated as f64).sqrt();
    assert!((p.ber - want).abs() <= 3.0 * sigma, "{} vs {want}", p.ber);
    assert!(p.ber < floor / 20.0);
}

#[test]
fn optimized_never_worse_than_cyclic_with_paired_seeds() {
    let grid: Vec<f64> = (10..=30).step_by(5).map(f64::from).collect();
    let mut cp = example1(SchemeChoice::Cyclic, grid.clone());
    let mut opt = example1(SchemeChoice::Optimized, grid);
    fixed_bits(&mut cp, 100_000);
    fixed_bits(&mut opt, 100_000);
    let a = run_sweep(&cp).unwrap();
    let b = run_sweep(&opt).unwrap();
    for (p, q) in a.points.iter().zip(&b.points) {
        assert!(q.ber <= p.ber, "{} dB: optimized {} vs cyclic {}", p.ebno_db, q.ber, p.ber);
    }
}

#[test]
fn analytic_agrees_with_monte_carlo_at_25_db() {
    let mut cfg = example1(SchemeChoice::Cyclic, vec![25.0]);
    fixed_bits(&mut cfg, 500_000);
    let p = &run_sweep(&cfg).unwrap().points[0];
    let want = analytic_ber(&two_tap(), &cfg.ofdm, Complex64::new(1.0, 0.0), 25.0).unwrap();
    let sigma = (want * (1.0 - want) / p.bits_simulated as f64).sqrt();
    assert!((p.ber - want).abs() <= 3.0 * sigma, "{} vs {want}", p.ber);
}

#[test]
fn error_free_point_is_flagged_as_bound() {
    let mut cfg = example1(SchemeChoice::Cyclic, vec![20.0]);
    cfg.channel = ChannelModel::fixed(&[Complex64::new(1.0, 0.0)]);
    cfg.awgn = false;
    cfg.stop = StopRule {
        min_errors: 1,
        min_trials: 0,
        max_trials: Some(10),
    };
    let p = &run_sweep(&cfg).unwrap().points[0];
    assert!(p.upper_bound);
    assert_eq!(p.bit_errors, 0);
    assert_eq!(p.bits_simulated, 10 * 64 * 2 * 7);
    assert_eq!(p.ber, 1.0 / p.bits_simulated as f64);
}

#[test]
fn same_seed_gives_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = SimConfig::preset("example2-tu").unwrap();
    cfg.ebno_grid_db = vec![5.0, 15.0];
    cfg.estimation = Estimation::Block;
    cfg.stop.max_trials = Some(64);
    let mut bytes = Vec::new();
    for i in 0..2 {
        let path = dir.path().join(format!("{i}.csv"));
        write_results(&run_sweep(&cfg).unwrap(), &path).unwrap();
        bytes.push((std::fs::read(&path).unwrap(), std::fs::read(sidecar_path(&path)).unwrap()));
    }
    assert_eq!(bytes[0], bytes[1]);

    cfg.seed += 1;
    let path = dir.path().join("other.csv");
    write_results(&run_sweep(&cfg).unwrap(), &path).unwrap();
    assert_ne!(std::fs::read(&path).unwrap(), bytes[0].0);
}

#[test]
fn estimated_channel_ber_falls_with_snr() {
    for scheme in [SchemeChoice::Cyclic, SchemeChoice::Optimized] {
        for estimation in [
            Estimation::Block,
            Estimation::Comb {
                spacing: 4,
                pilot_value: Complex64::new(1.0, 0.0),
            },
        ] {
            let mut cfg = SimConfig::preset("example2-bu").unwrap();
            cfg.scheme = scheme;
            cfg.estimation = estimation;
            cfg.ebno_grid_db = vec![0.0, 10.0, 20.0, 30.0];
            fixed_bits(&mut cfg, 200_000);
            let curve = run_sweep(&cfg).unwrap();
            for w in curve.points.windows(2) {
                assert!(w[1].ber < w[0].ber, "{scheme:?} {estimation:?}: {:?}", curve.points);
            }
        }
    }
}

#[test]
fn mobility_costs_more_with_comb_at_speed() {
    // Comb pilots track the channel symbol by symbol; a block estimate ages
    // across the slot, so at high Doppler it loses more.
    let mut base = SimConfig::preset("example2-bu").unwrap();
    base.ebno_grid_db = vec![25.0];
    base.mobility = Some(gpofdm::harness::Mobility {
        speed_kmh: 300.0,
        carrier_hz: 2.4e9,
        doppler_hz: None,
    });
    let run = |estimation| {
        let mut cfg = base.clone();
        cfg.estimation = estimation;
        fixed_bits(&mut cfg, 300_000);
        run_sweep(&cfg).unwrap().points[0].ber
    };
    let block = run(Estimation::Block);
    let comb = run(Estimation::Comb {
        spacing: 4,
        pilot_value: Complex64::new(1.0, 0.0),
    });
    assert!(comb < block, "comb {comb} vs block {block}");
}

#[test]
fn rayleigh_profiles_have_unit_mean_energy() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for name in ["TU12", "BU12", "two-tap"] {
        let pdp = PowerDelayProfile::preset(name).unwrap();
        let draws = 100_000;
        let mean = (0..draws).map(|_| draw_realization(&pdp, &mut rng).energy()).sum::<f64>() / draws as f64;
        assert!((mean - 1.0).abs() < 0.02, "{name}: {mean}");
    }
}

#[test]
fn single_trial_entry_point_matches_simulator() {
    let cfg = example1(SchemeChoice::Optimized, vec![20.0]);
    let a = gpofdm::harness::run_trial(&cfg, 20.0, 5).unwrap();
    let b = Simulator::new(cfg)
        .unwrap()
        .run_trial(20.0, TrialSeed { base: 5, point: 0, trial: 0 })
        .unwrap();
    assert_eq!(a, b);
    assert_eq!(a.bits, 7 * 64 * 2);
}
