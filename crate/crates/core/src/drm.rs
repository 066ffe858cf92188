//! Dimension-reducing matrices mapping `n_t` code ports onto `M` antennas.

use std::f64::consts::PI;

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{complex_gaussian_mat, identity, max_abs_diff, matrix_to_text, CMat, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DrmKind {
    /// Zadoff–Chu diagonal times evenly spaced DFT columns.
    Meng { zc_root: usize },
    Random,
    Dft,
    /// DFT rows at rounded fractional indices, for `(M, n_t)` pairs where the
    /// exact indices are not integers.
    DftRounded,
}

#[derive(Debug, Clone)]
pub struct Drm {
    /// `n_t × M`.
    pub matrix: CMat,
    pub kind: DrmKind,
}

impl Drm {
    pub fn n_t(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn antennas(&self) -> usize {
        self.matrix.ncols()
    }

    /// `max |Φ Φ^H − I|`.
    pub fn semi_unitarity_error(&self) -> f64 {
        max_abs_diff(&(&self.matrix * self.matrix.adjoint()), &identity(self.n_t()))
    }

    pub fn to_text(&self) -> String {
        let kind = match self.kind {
            DrmKind::Meng { zc_root } => format!("meng zc_root={zc_root}"),
            DrmKind::Random => "rand".into(),
            DrmKind::Dft => "dft".into(),
            DrmKind::DftRounded => "dft-rounded".into(),
        };
        format!(
            "# drm {kind} n_t={} M={}\n{}",
            self.n_t(),
            self.antennas(),
            matrix_to_text(&self.matrix)
        )
    }
}

/// Unit-norm DFT column `f` evaluated at antenna `m`.
fn dft_entry(m_ant: usize, m: usize, f: usize) -> C64 {
    let ang = -2.0 * PI * ((m * f) % m_ant) as f64 / m_ant as f64;
    C64::from_polar(1.0 / (m_ant as f64).sqrt(), ang)
}

fn check_sizes(m: usize, n_t: usize) -> Result<()> {
    if n_t == 0 || n_t >= m {
        return Err(Error::invalid(format!("need 0 < n_t < M, got n_t = {n_t}, M = {m}")));
    }
    Ok(())
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 { a } else { gcd(b, a % b) }
}

/// Length-`M` Zadoff–Chu sequence with the given root.
pub fn zadoff_chu(m: usize, root: usize) -> Vec<C64> {
    (0..m)
        .map(|k| {
            let k = k as u128;
            let (mm, u) = (m as u128, root as u128);
            // Reduce the quadratic phase modulo 2M before converting to f64.
            let num = if m % 2 == 0 { u * k * k } else { u * k * (k + 1) } % (2 * mm);
            C64::from_polar(1.0, -PI * num as f64 / m as f64)
        })
        .collect()
}

pub fn drm_meng(m: usize, n_t: usize) -> Result<Drm> {
    check_sizes(m, n_t)?;
    if m % n_t != 0 {
        return Err(Error::invalid(format!("n_t = {n_t} must divide M = {m}")));
    }
    let root = (1..=m).find(|&u| gcd(u, m) == 1).unwrap_or(1);
    let z = zadoff_chu(m, root);
    let step = m / n_t;
    let matrix = CMat::from_fn(n_t, m, |k, a| z[a] * dft_entry(m, a, k * step));
    Ok(Drm { matrix, kind: DrmKind::Meng { zc_root: root } })
}

/// First `n_t` rows of a Haar-distributed unitary matrix.
pub fn drm_rand<R: Rng + ?Sized>(m: usize, n_t: usize, rng: &mut R) -> Result<Drm> {
    check_sizes(m, n_t)?;
    let g = complex_gaussian_mat(rng, m, m);
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..m {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..m {
            q[(i, j)] *= phase;
        }
    }
    Ok(Drm { matrix: q.rows(0, n_t).into_owned(), kind: DrmKind::Random })
}

/// Evenly spaced DFT rows at 1-based indices `(M / 2n_t)(2n − 1)`.
pub fn drm_dft(m: usize, n_t: usize) -> Result<Drm> {
    check_sizes(m, n_t)?;
    if m % (2 * n_t) != 0 {
        return Err(Error::invalid(format!(
            "2 n_t = {} must divide M = {m} for integer DFT indices",
            2 * n_t
        )));
    }
    let half = m / (2 * n_t);
    let matrix = CMat::from_fn(n_t, m, |n, a| dft_entry(m, a, half * (2 * n + 1) - 1));
    Ok(Drm { matrix, kind: DrmKind::Dft })
}

/// Like [`drm_dft`] but rounds fractional indices half up, so it accepts any
/// `n_t < M`. The chosen indices stay distinct, so the rows stay orthonormal.
pub fn drm_dft_rounded(m: usize, n_t: usize) -> Result<Drm> {
    check_sizes(m, n_t)?;
    let idx: Vec<usize> = (0..n_t)
        .map(|n| {
            let pos = m as f64 * (2 * n + 1) as f64 / (2 * n_t) as f64;
            (pos + 0.5).floor() as usize - 1
        })
        .collect();
    let matrix = CMat::from_fn(n_t, m, |n, a| dft_entry(m, a, idx[n]));
    Ok(Drm { matrix, kind: DrmKind::DftRounded })
}

/// `C_h = Φ C_g Φ^H`.
pub fn effective_covariance(phi: &CMat, c_g: &CMat) -> Result<CMat> {
    if c_g.nrows() != c_g.ncols() || phi.ncols() != c_g.nrows() {
        return Err(Error::dims(
            format!("{0}x{0} covariance", phi.ncols()),
            format!("{}x{}", c_g.nrows(), c_g.ncols()),
        ));
    }
    Ok(phi * c_g * phi.adjoint())
}
