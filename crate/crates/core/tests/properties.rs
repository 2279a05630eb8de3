use std::f64::consts::PI;

use gpofdm::chanest::{ls_estimate_comb, PilotPlan};
use gpofdm::channel::{convolve, frequency_response, shifted_frequency_response, ChannelRealization};
use gpofdm::detect::{zf_detect, ZpDetector};
use gpofdm::guard::{add_prefix, gsc_convolve, strip_guard, PrefixScheme};
use gpofdm::modem::{demap_symbols, map_bits, ofdm_demodulate, ofdm_modulate, QamConstellation};
use gpofdm::psi_opt::{golden_section, SearchConfig, GOLDEN};
use gpofdm::spectral::{self, build_circulant, build_generalized_skew_circulant, d_matrix, CMatrix};
use gpofdm::Complex64;
use proptest::prelude::*;

fn complex() -> impl Strategy<Value = Complex64> {
    (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(re, im)| Complex64::new(re, im))
}

fn vec_c(len: impl Into<proptest::collection::SizeRange>) -> impl Strategy<Value = Vec<Complex64>> {
    proptest::collection::vec(complex(), len)
}

fn unit() -> impl Strategy<Value = Complex64> {
    (0.0..2.0 * PI).prop_map(|a| Complex64::from_polar(1.0, a))
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// N, K and a channel with L ≤ K + 1 taps.
fn system() -> impl Strategy<Value = (usize, usize, Vec<Complex64>)> {
    (2u32..=7)
        .prop_flat_map(|e| {
            let n = 1usize << e;
            (Just(n), 1..n)
        })
        .prop_flat_map(|(n, k)| (Just(n), Just(k), vec_c(1..=k + 1)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn unit_phi_skew_circulant_is_circulant(h in vec_c(1..=16), extra in 0usize..16) {
        let n = h.len() + extra;
        let a = build_generalized_skew_circulant(&h, n, Complex64::new(1.0, 0.0)).unwrap();
        prop_assert_eq!(a, build_circulant(&h, n).unwrap());
    }

    #[test]
    fn dft_round_trip_and_parseval(e in 0u32..=12, seed in any::<u64>()) {
        let n = 1usize << e;
        let x: Vec<Complex64> = (0..n)
            .map(|i| {
                let t = (seed.wrapping_mul(6364136223846793005).wrapping_add(i as u64) >> 11) as f64;
                Complex64::from_polar(1.0 + (t * 1e-9).sin(), t * 1e-7)
            })
            .collect();
        let big = spectral::dft(&x).unwrap();
        let back = spectral::idft(&big).unwrap();
        prop_assert!(max_diff(&back, &x) <= 1e-10 * norm(&x));
        let ratio = norm(&big).powi(2) / (n as f64 * norm(&x).powi(2));
        prop_assert!((ratio - 1.0).abs() < 1e-10);
    }

    #[test]
    fn d_weighting_is_an_isometry(x in vec_c(1..64), psi in unit()) {
        let d = d_matrix(psi, x.len()).unwrap();
        let y: Vec<Complex64> = x.iter().zip(&d).map(|(a, b)| a * b).collect();
        prop_assert!((norm(&y) - norm(&x)).abs() <= 1e-12 * norm(&x).max(1e-300));
    }

    #[test]
    fn d_weighted_skew_circulant_is_diagonalized(
        e in 2u32..=6,
        h in vec_c(1..=4),
        psi in unit(),
    ) {
        let n = 1usize << e;
        let phi = psi.powu(n as u32);
        let hm = build_generalized_skew_circulant(&h, n, phi).unwrap();
        let d = d_matrix(psi, n).unwrap();
        let dinv: Vec<Complex64> = d.iter().map(|v| v.conj()).collect();
        let f = CMatrix::from_fn(n, n, |i, j| Complex64::from_polar(1.0, -2.0 * PI * ((i * j) % n) as f64 / n as f64));
        let m = f.matmul(&hm.scale_rows(&d).scale_cols(&dinv)).matmul(&f.adjoint());
        let hr = ChannelRealization::new(h.clone()).unwrap();
        let expect = shifted_frequency_response(&hr, n, psi).unwrap();
        let hn = norm(&h);
        for i in 0..n {
            for j in 0..n {
                let v = m[(i, j)] / n as f64;
                if i == j {
                    prop_assert!((v - expect[i]).norm() <= 1e-9 * expect[i].norm().max(hn));
                } else {
                    prop_assert!(v.norm() < 1e-9 * hn);
                }
            }
        }
    }

    #[test]
    fn transmitted_energy_independent_of_psi(x in vec_c(1..=64), psi in unit()) {
        let plain = ofdm_modulate(&x, Complex64::new(1.0, 0.0)).unwrap();
        let shifted = ofdm_modulate(&x, psi).unwrap();
        prop_assert!((norm(&plain) - norm(&shifted)).abs() <= 1e-12 * norm(&plain).max(1e-300));
    }

    #[test]
    fn prefix_pipeline_is_generalized_convolution((n, k, h) in system(), psi in unit(), seed in vec_c(128)) {
        let x = &seed[..n];
        let phi = psi.powu(n as u32);
        let piped = strip_guard(&convolve(&add_prefix(x, k, PrefixScheme::Generalized { psi }).unwrap(), &h), n, k).unwrap();
        let direct = gsc_convolve(x, &h, phi).unwrap();
        prop_assert!(max_diff(&piped, &direct) <= 1e-12 * norm(&direct).max(1e-300));

        // Cyclic guard gives circular convolution.
        let cyc = strip_guard(&convolve(&add_prefix(x, k, PrefixScheme::Cyclic).unwrap(), &h), n, k).unwrap();
        let circ = build_circulant(&h, n).unwrap().mul_vec(x);
        prop_assert!(max_diff(&cyc, &circ) <= 1e-12 * norm(&circ).max(1e-300));
    }

    #[test]
    fn one_bin_shift_rotates_response(h in vec_c(1..=16)) {
        let n = 16;
        let hr = ChannelRealization::new(h).unwrap();
        let plain = frequency_response(&hr, n).unwrap();
        let shifted = shifted_frequency_response(&hr, n, Complex64::from_polar(1.0, 2.0 * PI / n as f64)).unwrap();
        for k in 0..n {
            prop_assert!((shifted[k] - plain[(k + n - 1) % n]).norm() < 1e-10);
        }
    }

    #[test]
    fn noiseless_chain_returns_bits((n, k, h) in system(), psi in unit(), order in prop::sample::select(vec![4usize, 16, 64])) {
        let hr = ChannelRealization::new(h.clone()).unwrap();
        let h_eff = shifted_frequency_response(&hr, n, psi).unwrap();
        prop_assume!(h[0].norm() > 1e-3 && h_eff.iter().all(|v| v.norm() > 1e-3));
        let c = QamConstellation::new(order).unwrap();
        let bits: Vec<u8> = (0..n * c.bits_per_symbol()).map(|i| ((i * 7 + n) % 3 % 2) as u8).collect();
        let x = map_bits(&bits, &c).unwrap();
        let tx = add_prefix(&ofdm_modulate(&x, psi).unwrap(), k, PrefixScheme::Generalized { psi }).unwrap();
        let y = ofdm_demodulate(&strip_guard(&convolve(&tx, &h), n, k).unwrap(), psi).unwrap();
        let eq = zf_detect(&y, &h_eff).unwrap();
        prop_assert!(max_diff(&eq.symbols, &x) < 1e-9 * norm(&x));
        prop_assert_eq!(demap_symbols(&eq.symbols, &c), bits);
    }

    #[test]
    fn zero_pad_recovers_any_channel_with_leading_tap((n, k, mut h) in system(), x in vec_c(128), null in any::<bool>()) {
        prop_assume!(n <= 64);
        h[0] = Complex64::new(1.0, 0.0) + h[0] * 0.5;
        if null && h.len() == 1 {
            h.push(h[0]); // two equal taps: exact null at the half-band bin
        }
        let x = &x[..n];
        let time = ofdm_modulate(x, Complex64::new(1.0, 0.0)).unwrap();
        let mut tx = vec![Complex64::new(0.0, 0.0); k];
        tx.extend(add_prefix(&time, k, PrefixScheme::ZeroPad).unwrap());
        let rx = convolve(&tx, &h);
        let hr = ChannelRealization::new(h).unwrap();
        let det = ZpDetector::auto(&hr, n).unwrap();
        let got = det.detect(&rx[k..k + det.window()]).unwrap();
        prop_assert!(max_diff(&got, x) < 1e-9 * norm(x).max(1.0));
    }

    #[test]
    fn comb_is_exact_when_pilots_cover_taps(h in vec_c(1..=16), spacing in prop::sample::select(vec![2usize, 4])) {
        let n = 64;
        prop_assume!(h.len() <= n / spacing);
        let hr = ChannelRealization::new(h).unwrap();
        let big = frequency_response(&hr, n).unwrap();
        let plan = PilotPlan::Comb { spacing, pilot_value: Complex64::new(1.0, 0.0) };
        prop_assert!(max_diff(&ls_estimate_comb(&big, &plan).unwrap(), &big) < 1e-9);
    }

    #[test]
    fn golden_bracket_width_is_geometric(lo in -5.0f64..5.0, width in 0.01f64..10.0, tol in 1e-6f64..1e-2, c in -1.0f64..1.0) {
        let cfg = SearchConfig { lo, hi: lo + width, tol, max_iterations: 200, check_unimodal: false };
        let r = golden_section(|a| (a - (lo + width * (0.5 + 0.4 * c))).powi(2), &cfg).unwrap();
        let expect = width * GOLDEN.powi(r.iterations as i32);
        prop_assert!(((r.bracket.1 - r.bracket.0) - expect).abs() <= 1e-9 * width);
        prop_assert!(expect < tol && width * GOLDEN.powi(r.iterations as i32 - 1) >= tol);
    }
}
