//! Small dense complex linear algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// One draw from CN(0, 1).
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn complex_gaussian_vec<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CVec {
    CVec::from_fn(n, |_, _| complex_gaussian(rng))
}

pub fn complex_gaussian_mat<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .fold(0.0, |acc, (x, y)| acc.max((x - y).norm()))
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

pub fn ensure_square(m: &CMat, what: &str) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::dims(
            format!("square {what}"),
            format!("{}x{}", m.nrows(), m.ncols()),
        ));
    }
    Ok(m.nrows())
}

/// Returns `F` with `F F^H = C` for a Hermitian positive semi-definite `C`.
///
/// Eigenvalues down to `-1e-10 * max|λ|` are treated as zero; anything more
/// negative is rejected as not PSD.
pub fn psd_factor(cov: &CMat) -> Result<CMat> {
    let n = ensure_square(cov, "covariance")?;
    if n == 0 {
        return Ok(CMat::zeros(0, 0));
    }
    let eig = hermitian_part(cov).symmetric_eigen();
    let scale = eig.eigenvalues.iter().fold(0.0_f64, |a, l| a.max(l.abs()));
    let mut factor = eig.eigenvectors.clone();
    for (j, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda < -1e-10 * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::Numerical(format!(
                "covariance is not positive semi-definite (eigenvalue {lambda:e})"
            )));
        }
        let s = lambda.max(0.0).sqrt();
        factor.column_mut(j).scale_mut(s);
    }
    Ok(factor)
}

/// Inverse of a Hermitian positive-definite matrix via Cholesky.
pub fn hpd_inverse(m: &CMat) -> Result<CMat> {
    ensure_square(m, "matrix")?;
    hermitian_part(m)
        .cholesky()
        .map(|ch| ch.inverse())
        .ok_or_else(|| Error::Numerical("matrix is not positive definite".into()))
}

pub fn norm_sqr(v: &CVec) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// Writes a matrix as text: one row per line, entries as `re,im` pairs.
pub fn matrix_to_text(m: &CMat) -> String {
    let mut out = String::new();
    for r in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols())
            .map(|col| {
                let z = m[(r, col)];
                format!("{:.17e},{:.17e}", z.re, z.im)
            })
            .collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

/// Parses the format written by [`matrix_to_text`].
pub fn matrix_from_text(text: &str) -> Result<CMat> {
    let mut rows: Vec<Vec<C64>> = Vec::new();
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
        let mut row = Vec::new();
        for pair in line.split_whitespace() {
            let (re, im) = pair
                .split_once(',')
                .ok_or_else(|| Error::invalid(format!("bad entry `{pair}`")))?;
            let re: f64 = re
                .parse()
                .map_err(|_| Error::invalid(format!("bad real part `{re}`")))?;
            let im: f64 = im
                .parse()
                .map_err(|_| Error::invalid(format!("bad imaginary part `{im}`")))?;
            row.push(C64::new(re, im));
        }
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::dims(first.len(), row.len()));
            }
        }
        rows.push(row);
    }
    let ncols = rows.first().map_or(0, Vec::len);
    Ok(CMat::from_fn(rows.len(), ncols, |r, c| rows[r][c]))
}

/// Sparse view of a small matrix, used on the hot Monte Carlo paths where the
/// code matrices are mostly zeros.
#[derive(Debug, Clone)]
pub struct SparseMat {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<(usize, usize, C64)>,
}

impl SparseMat {
    pub fn from_dense(m: &CMat) -> Self {
        let mut entries = Vec::new();
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                let z = m[(r, c)];
                if z.norm() > 1e-15 {
                    entries.push((r, c, z));
                }
            }
        }
        SparseMat {
            rows: m.nrows(),
            cols: m.ncols(),
            entries,
        }
    }

    pub fn mul_vec(&self, v: &[C64], out: &mut [C64]) {
        debug_assert_eq!(v.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        out.iter_mut().for_each(|o| *o = ZERO);
        for &(r, c, z) in &self.entries {
            out[r] += z * v[c];
        }
    }

    /// Row indices that carry at least one entry, sorted.
    pub fn row_support(&self) -> Vec<usize> {
        let mut rows: Vec<usize> = self.entries.iter().map(|e| e.0).collect();
        rows.sort_unstable();
        rows.dedup();
        rows
    }
}
