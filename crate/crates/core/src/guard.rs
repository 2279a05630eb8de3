//! Guard-interval construction and removal.

use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::modem::check_unit;

/// How the guard interval of each OFDM symbol is built.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PrefixScheme {
    /// Copy of the last K samples.
    Cyclic,
    /// K trailing zeros.
    ZeroPad,
    /// Copy of the last K samples scaled by φ = ψᴺ, with |ψ| = 1.
    Generalized { psi: Complex64 },
}

impl PrefixScheme {
    /// The ψ the modulator must use with this guard.
    pub fn psi(&self) -> Complex64 {
        match *self {
            PrefixScheme::Generalized { psi } => psi,
            _ => Complex64::new(1.0, 0.0),
        }
    }

    /// φ = ψᴺ for a symbol of `n` samples.
    pub fn phi(&self, n: usize) -> Complex64 {
        let (r, theta) = self.psi().to_polar();
        Complex64::from_polar(r.powi(n as i32), theta * n as f64)
    }
}

/// Appends the guard for `scheme` to one time-domain symbol.
///
/// Cyclic and generalized guards are prepended, the zero guard is appended.
pub fn add_prefix(x: &[Complex64], k: usize, scheme: PrefixScheme) -> Result<Vec<Complex64>> {
    let n = x.len();
    if k == 0 || k >= n {
        return Err(invalid(format!(
            "guard length must satisfy 0 < K < N, got K={k} N={n}"
        )));
    }
    let mut out = Vec::with_capacity(n + k);
    match scheme {
        PrefixScheme::Cyclic => {
            out.extend_from_slice(&x[n - k..]);
            out.extend_from_slice(x);
        }
        PrefixScheme::Generalized { psi } => {
            check_unit(psi)?;
            let phi = scheme.phi(n);
            out.extend(x[n - k..].iter().map(|v| phi * v));
            out.extend_from_slice(x);
        }
        PrefixScheme::ZeroPad => {
            out.extend_from_slice(x);
            out.resize(n + k, Complex64::new(0.0, 0.0));
        }
    }
    Ok(out)
}

/// Keeps received samples `k..n+k`, discarding the guard region.
pub fn strip_guard(y: &[Complex64], n: usize, k: usize) -> Result<Vec<Complex64>> {
    if y.len() < n + k {
        return Err(invalid(format!(
            "received block has {} samples, need at least {}",
            y.len(),
            n + k
        )));
    }
    Ok(y[k..n + k].to_vec())
}

/// Generalized skew-circular convolution: wrapped terms are weighted by φ.
///
/// `y[m] = Σ_l h[l]·u[m-l]·x[⟨m-l⟩_N]` with `u[i] = 1` for `i ≥ 0` and `φ`
/// otherwise.
pub fn gsc_convolve(x: &[Complex64], h: &[Complex64], phi: Complex64) -> Result<Vec<Complex64>> {
    let n = x.len();
    if h.is_empty() || h.len() > n {
        return Err(invalid(format!(
            "need 1 <= L <= N, got L={} N={n}",
            h.len()
        )));
    }
    if phi == Complex64::new(0.0, 0.0) {
        return Err(invalid("phi must be nonzero"));
    }
    Ok((0..n)
        .map(|m| {
            h.iter()
                .enumerate()
                .map(|(l, &hl)| {
                    if l <= m {
                        hl * x[m - l]
                    } else {
                        phi * hl * x[n + m - l]
                    }
                })
                .sum()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::convolve;
    use crate::spectral::build_generalized_skew_circulant;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn abcd() -> Vec<Complex64> {
        vec![c(1.0, 0.5), c(2.0, -1.0), c(3.0, 0.0), c(4.0, 2.0)]
    }

    #[test]
    fn cyclic_prefix_copies_tail_in_order() {
        let x = abcd();
        let y = add_prefix(&x, 2, PrefixScheme::Cyclic).unwrap();
        assert_eq!(y, vec![x[2], x[3], x[0], x[1], x[2], x[3]]);
    }

    #[test]
    fn generalized_prefix_scales_tail_by_phi() {
        let x = abcd();
        let psi = Complex64::from_polar(1.0, 0.4);
        let phi = psi.powu(4);
        let y = add_prefix(&x, 2, PrefixScheme::Generalized { psi }).unwrap();
        let expect = [phi * x[2], phi * x[3], x[0], x[1], x[2], x[3]];
        for (a, b) in y.iter().zip(&expect) {
            assert!((a - b).norm() < 1e-14);
        }
        let unit = add_prefix(&x, 2, PrefixScheme::Generalized { psi: c(1.0, 0.0) }).unwrap();
        assert_eq!(unit, add_prefix(&x, 2, PrefixScheme::Cyclic).unwrap());
    }

    #[test]
    fn zero_pad_appends_zeros() {
        let x = abcd();
        let y = add_prefix(&x, 2, PrefixScheme::ZeroPad).unwrap();
        assert_eq!(&y[..4], &x[..]);
        assert_eq!(&y[4..], &[c(0.0, 0.0); 2]);
    }

    #[test]
    fn bad_guard_lengths() {
        let x = abcd();
        assert!(add_prefix(&x, 0, PrefixScheme::Cyclic).is_err());
        assert!(add_prefix(&x, 4, PrefixScheme::Cyclic).is_err());
        let psi = c(0.5, 0.0);
        assert!(add_prefix(&x, 2, PrefixScheme::Generalized { psi }).is_err());
    }

    #[test]
    fn strip_keeps_window() {
        let y: Vec<Complex64> = (0..6).map(|i| c(i as f64, 0.0)).collect();
        assert_eq!(strip_guard(&y, 4, 2).unwrap(), y[2..].to_vec());
        assert!(strip_guard(&y[..5], 4, 2).is_err());

        let x = abcd();
        let tx = add_prefix(&x, 2, PrefixScheme::Cyclic).unwrap();
        assert_eq!(strip_guard(&tx, 4, 2).unwrap(), x);

        // Full linear convolution output of length N+K+L-1.
        let h = [c(1.0, 0.0), c(0.5, 0.0), c(0.25, 0.0)];
        let rx = convolve(&tx, &h);
        assert_eq!(rx.len(), 4 + 2 + 3 - 1);
        assert_eq!(strip_guard(&rx, 4, 2).unwrap().len(), 4);
    }

    #[test]
    fn gsc_delay_wraps_with_phi() {
        let x = abcd();
        let phi = Complex64::from_polar(1.0, 1.1);
        let y = gsc_convolve(&x, &[c(0.0, 0.0), c(1.0, 0.0)], phi).unwrap();
        assert_eq!(y, vec![phi * x[3], x[0], x[1], x[2]]);
    }

    #[test]
    fn gsc_with_unit_phi_is_circular() {
        let x = abcd();
        let h = [c(0.5, 0.0), c(-0.25, 0.5)];
        let y = gsc_convolve(&x, &h, c(1.0, 0.0)).unwrap();
        for m in 0..4 {
            let expect = h[0] * x[m] + h[1] * x[(m + 3) % 4];
            assert!((y[m] - expect).norm() < 1e-15);
        }
        assert!(gsc_convolve(&x, &[c(1.0, 0.0); 5], c(1.0, 0.0)).is_err());
        assert!(gsc_convolve(&x, &h, c(0.0, 0.0)).is_err());
    }

    #[test]
    fn gsc_matches_matrix_and_pipeline() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let n = 16;
            let k = rng.gen_range(1..n);
            let l = rng.gen_range(1..=k + 1);
            let rnd = |rng: &mut ChaCha8Rng, len| -> Vec<Complex64> {
                (0..len)
                    .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                    .collect()
            };
            let x = rnd(&mut rng, n);
            let h = rnd(&mut rng, l);
            let psi = Complex64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU));
            let scheme = PrefixScheme::Generalized { psi };
            let phi = scheme.phi(n);

            let direct = gsc_convolve(&x, &h, phi).unwrap();
            let via_matrix = build_generalized_skew_circulant(&h, n, phi).unwrap().mul_vec(&x);
            let tx = add_prefix(&x, k, scheme).unwrap();
            let via_pipeline = strip_guard(&convolve(&tx, &h), n, k).unwrap();
            for i in 0..n {
                assert!((direct[i] - via_matrix[i]).norm() < 1e-12);
                assert!((direct[i] - via_pipeline[i]).norm() < 1e-12);
            }
        }
    }
}
