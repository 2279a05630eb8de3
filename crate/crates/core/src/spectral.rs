//! Transforms and structured channel matrices.
//!
//! DFT convention: the forward transform is unnormalized,
//! `X[k] = Σ x[n]·e^{-2πikn/N}`, and the inverse carries the `1/N`, so
//! `idft(dft(x)) == x` and `‖dft(x)‖² = N·‖x‖²`.

use std::cell::RefCell;
use std::ops::{Index, IndexMut};

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{invalid, Error, Result};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Rank tolerance for the QR pivots: smallest / largest below this is singular.
pub const RANK_TOL: f64 = 1e-12;

fn transform(buf: &mut [Complex64], inverse: bool) {
    let n = buf.len();
    if n == 0 {
        return;
    }
    let fft = PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    });
    fft.process(buf);
}

/// Forward DFT in place (unnormalized).
pub fn dft_in_place(buf: &mut [Complex64]) {
    transform(buf, false);
}

/// Inverse DFT in place, including the `1/N` factor.
pub fn idft_in_place(buf: &mut [Complex64]) {
    transform(buf, true);
    let scale = 1.0 / buf.len() as f64;
    for v in buf.iter_mut() {
        *v *= scale;
    }
}

/// Forward DFT, `F_N·x`.
pub fn dft(x: &[Complex64]) -> Result<Vec<Complex64>> {
    if x.is_empty() {
        return Err(invalid("dft of an empty sequence"));
    }
    let mut out = x.to_vec();
    dft_in_place(&mut out);
    Ok(out)
}

/// Inverse DFT, `(1/N)·F_N*·X`.
pub fn idft(x: &[Complex64]) -> Result<Vec<Complex64>> {
    if x.is_empty() {
        return Err(invalid("idft of an empty sequence"));
    }
    let mut out = x.to_vec();
    idft_in_place(&mut out);
    Ok(out)
}

/// Dense row-major complex matrix. Only what the channel matrices need.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { 1.0.into() } else { 0.0.into() })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_diag(d: &[Complex64]) -> Self {
        let n = d.len();
        Self::from_fn(n, n, |i, j| if i == j { d[i] } else { 0.0.into() })
    }

    /// Builds a matrix from row-major entries.
    pub fn from_rows(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(invalid(format!(
                "{} entries do not form a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn diagonal(&self) -> Vec<Complex64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn matmul(&self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, rhs.rows, "matmul dimension mismatch");
        let mut out = CMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let rrow = rhs.row(k);
                let orow = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (o, &b) in orow.iter_mut().zip(rrow) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.cols, v.len(), "mul_vec dimension mismatch");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `diag(d)·self`.
    pub fn scale_rows(&self, d: &[Complex64]) -> Self {
        assert_eq!(d.len(), self.rows);
        Self::from_fn(self.rows, self.cols, |i, j| d[i] * self[(i, j)])
    }

    /// `self·diag(d)`.
    pub fn scale_cols(&self, d: &[Complex64]) -> Self {
        assert_eq!(d.len(), self.cols);
        Self::from_fn(self.rows, self.cols, |i, j| self[(i, j)] * d[j])
    }

    /// Leading `rows` rows.
    pub fn top_rows(&self, rows: usize) -> Self {
        assert!(rows <= self.rows);
        Self {
            rows,
            cols: self.cols,
            data: self.data[..rows * self.cols].to_vec(),
        }
    }

    /// Largest entrywise magnitude of `self - other`.
    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Numerical column rank from pivoted QR.
    pub fn column_rank(&self) -> usize {
        let qr = PivotedQr::new(self);
        let max = qr.pivot_magnitude(0);
        (0..qr.k)
            .filter(|&i| qr.pivot_magnitude(i) > RANK_TOL * max)
            .count()
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

fn check_taps(h: &[Complex64], n: usize) -> Result<()> {
    if h.is_empty() {
        return Err(invalid("channel must have at least one tap"));
    }
    if h.len() > n {
        return Err(invalid(format!(
            "channel length {} exceeds matrix size {n}",
            h.len()
        )));
    }
    Ok(())
}

/// `n×n` circulant matrix whose first column is `h` zero-padded to `n`.
pub fn build_circulant(h: &[Complex64], n: usize) -> Result<CMatrix> {
    build_generalized_skew_circulant(h, n, Complex64::new(1.0, 0.0))
}

/// Toeplitz matrix with `h[i-j]` on and below the diagonal and `φ·h[n+i-j]`
/// above it. `φ = 1` is the circulant case, `φ = -1` the skew-circulant one.
pub fn build_generalized_skew_circulant(
    h: &[Complex64],
    n: usize,
    phi: Complex64,
) -> Result<CMatrix> {
    check_taps(h, n)?;
    if phi == Complex64::new(0.0, 0.0) {
        return Err(invalid("phi must be nonzero"));
    }
    let tap = |d: usize| h.get(d).copied().unwrap_or_default();
    Ok(CMatrix::from_fn(n, n, |i, j| {
        if i >= j {
            tap(i - j)
        } else {
            let t = tap(n + i - j);
            if phi == Complex64::new(1.0, 0.0) {
                t
            } else {
                phi * t
            }
        }
    }))
}

/// Tall `(n+L-1)×n` linear-convolution matrix; column `j` holds `h` from row `j`.
pub fn build_zp_matrix(h: &[Complex64], n: usize) -> Result<CMatrix> {
    if h.is_empty() || n == 0 {
        return Err(invalid("zp matrix needs L >= 1 and n >= 1"));
    }
    let l = h.len();
    Ok(CMatrix::from_fn(n + l - 1, n, |i, j| {
        if i >= j && i - j < l {
            h[i - j]
        } else {
            0.0.into()
        }
    }))
}

/// Diagonal of `D = diag(1, ψ, ψ², …, ψⁿ⁻¹)`.
pub fn d_matrix(psi: Complex64, n: usize) -> Result<Vec<Complex64>> {
    if psi == Complex64::new(0.0, 0.0) {
        return Err(invalid("psi must be nonzero"));
    }
    let (r, theta) = psi.to_polar();
    Ok((0..n)
        .map(|k| Complex64::from_polar(r.powi(k as i32), theta * k as f64))
        .collect())
}

/// Householder QR with column pivoting, `A·P = Q·R`.
struct PivotedQr {
    m: usize,
    n: usize,
    k: usize,
    /// R in the upper triangle; below it the reflector tails.
    a: CMatrix,
    /// Householder vectors, one per step, each of length `m - step`.
    reflectors: Vec<Vec<Complex64>>,
    perm: Vec<usize>,
}

impl PivotedQr {
    fn new(m_in: &CMatrix) -> Self {
        let (m, n) = (m_in.rows, m_in.cols);
        let k = m.min(n);
        let mut a = m_in.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut reflectors = Vec::with_capacity(k);

        for step in 0..k {
            // Pivot: remaining column with the largest trailing norm.
            let (best, _) = (step..n)
                .map(|j| {
                    let s: f64 = (step..m).map(|i| a[(i, j)].norm_sqr()).sum();
                    (j, s)
                })
                .fold((step, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if best != step {
                for i in 0..m {
                    let tmp = a[(i, step)];
                    a[(i, step)] = a[(i, best)];
                    a[(i, best)] = tmp;
                }
                perm.swap(step, best);
            }

            let x: Vec<Complex64> = (step..m).map(|i| a[(i, step)]).collect();
            let norm = x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            let mut v = x;
            if norm > 0.0 {
                let phase = if v[0].norm() > 0.0 {
                    v[0] / v[0].norm()
                } else {
                    Complex64::new(1.0, 0.0)
                };
                let alpha = -phase * norm;
                v[0] -= alpha;
                let vnorm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
                if vnorm > 0.0 {
                    for c in v.iter_mut() {
                        *c /= vnorm;
                    }
                    apply_reflector(&mut a, &v, step, step);
                }
            } else {
                v.iter_mut().for_each(|c| *c = 0.0.into());
            }
            reflectors.push(v);
        }
        Self {
            m,
            n,
            k,
            a,
            reflectors,
            perm,
        }
    }

    fn pivot_magnitude(&self, i: usize) -> f64 {
        self.a[(i, i)].norm()
    }
}

/// Applies `I - 2vvᴴ` to rows `row0..` of `a`, columns `col0..`.
fn apply_reflector(a: &mut CMatrix, v: &[Complex64], row0: usize, col0: usize) {
    for j in col0..a.cols {
        let dot: Complex64 = v
            .iter()
            .enumerate()
            .map(|(t, vi)| vi.conj() * a[(row0 + t, j)])
            .sum();
        if dot == Complex64::new(0.0, 0.0) {
            continue;
        }
        for (t, vi) in v.iter().enumerate() {
            a[(row0 + t, j)] -= 2.0 * vi * dot;
        }
    }
}

/// Moore–Penrose pseudoinverse of a full-column-rank matrix via pivoted
/// Householder QR. Rank deficiency (smallest pivot below `RANK_TOL` times the
/// largest) is reported as [`Error::SingularMatrix`].
pub fn pseudoinverse(m: &CMatrix) -> Result<CMatrix> {
    if m.rows < m.cols {
        return Err(invalid(format!(
            "pseudoinverse needs a tall or square matrix, got {}x{}",
            m.rows, m.cols
        )));
    }
    let qr = PivotedQr::new(m);
    let (rows, n) = (qr.m, qr.n);
    let max_pivot = qr.pivot_magnitude(0);
    let min_pivot = (0..n).map(|i| qr.pivot_magnitude(i)).fold(f64::INFINITY, f64::min);
    if !(max_pivot > 0.0) || min_pivot < RANK_TOL * max_pivot {
        return Err(Error::SingularMatrix {
            min_pivot,
            max_pivot,
        });
    }

    // Qᴴ = H_{k-1}…H_0 applied to the identity; only the first n rows are needed.
    let mut qh = CMatrix::identity(rows);
    for (step, v) in qr.reflectors.iter().enumerate() {
        apply_reflector(&mut qh, v, step, 0);
    }

    // Back-substitute R·Z = Qᴴ[0..n, :].
    let mut z = qh.top_rows(n);
    for i in (0..n).rev() {
        let rii = qr.a[(i, i)];
        for j in 0..rows {
            let mut acc = z[(i, j)];
            for t in i + 1..n {
                acc -= qr.a[(i, t)] * z[(t, j)];
            }
            z[(i, j)] = acc / rii;
        }
    }

    // Undo the column permutation: row perm[i] of A⁺ is row i of R⁻¹Qᴴ.
    let mut out = CMatrix::zeros(n, rows);
    for (i, &p) in qr.perm.iter().enumerate() {
        for j in 0..rows {
            out[(p, j)] = z[(i, j)];
        }
    }
    Ok(out)
}
