//! Single-cell pilot phase, estimation and the per-symbol SNR bounds.

use std::f64::consts::PI;

use rand::Rng;

use crate::codes::{MapTerm, OstbcCode};
use crate::error::{Error, Result};
use crate::linalg::{
    complex_gaussian_vec, ensure_square, hermitian_part, hpd_inverse, norm_sqr, CMat, CVec, C64,
    ZERO,
};

#[derive(Debug, Clone)]
pub struct PilotConfig {
    pub tau_p: usize,
    pub rho_p: f64,
    /// `τ_p × n_t`, with `X_p^H X_p = (τ_p / n_t) I`.
    pub matrix: CMat,
}

impl PilotConfig {
    pub fn new(n_t: usize, tau_p: usize, rho_p: f64) -> Result<Self> {
        if !(rho_p > 0.0 && rho_p.is_finite()) {
            return Err(Error::invalid(format!("pilot power must be positive, got {rho_p}")));
        }
        Ok(Self { tau_p, rho_p, matrix: make_pilot_matrix(n_t, tau_p)? })
    }

    pub fn n_t(&self) -> usize {
        self.matrix.ncols()
    }

    /// Per-entry variance of the LS error, `n_t / (ρ_p τ_p)`.
    pub fn error_variance(&self) -> f64 {
        ls_error_variance(self.n_t(), self.tau_p, self.rho_p)
    }

    pub fn error_covariance(&self) -> CMat {
        CMat::identity(self.n_t(), self.n_t()).scale(self.error_variance())
    }
}

pub fn ls_error_variance(n_t: usize, tau_p: usize, rho_p: f64) -> f64 {
    n_t as f64 / (rho_p * tau_p as f64)
}

/// Leading `τ_p × n_t` block of the τ_p-point DFT matrix scaled by `1/√n_t`.
pub fn make_pilot_matrix(n_t: usize, tau_p: usize) -> Result<CMat> {
    if n_t == 0 || tau_p < n_t {
        return Err(Error::invalid(format!("need tau_p >= n_t >= 1, got tau_p = {tau_p}, n_t = {n_t}")));
    }
    let scale = 1.0 / (n_t as f64).sqrt();
    Ok(CMat::from_fn(tau_p, n_t, |t, k| {
        let ang = -2.0 * PI * ((t * k) % tau_p) as f64 / tau_p as f64;
        C64::from_polar(scale, ang)
    }))
}

/// `y_p = √ρ_p X_p h + w` with unit-variance noise.
pub fn pilot_observation<R: Rng + ?Sized>(pilots: &PilotConfig, h: &CVec, rng: &mut R) -> CVec {
    let w = complex_gaussian_vec(rng, pilots.tau_p);
    &pilots.matrix * h * C64::new(pilots.rho_p.sqrt(), 0.0) + w
}

/// `ĥ = (√ρ_p X_p^H X_p)^{-1} X_p^H y_p`.
pub fn ls_estimate(y_p: &CVec, x_p: &CMat, rho_p: f64) -> Result<CVec> {
    if y_p.len() != x_p.nrows() {
        return Err(Error::dims(x_p.nrows(), y_p.len()));
    }
    let gram = (x_p.adjoint() * x_p).scale(rho_p.sqrt());
    let rhs = x_p.adjoint() * y_p;
    gram.cholesky()
        .map(|ch| ch.solve(&rhs))
        .ok_or_else(|| Error::Numerical("pilot Gram matrix is singular".into()))
}

/// Bayes estimate `C_h (C_h + C_e)^{-1} ĥ_ls`.
pub fn mmse_estimate(c_h: &CMat, c_e: &CMat, h_ls: &CVec) -> Result<CVec> {
    let w = hpd_inverse(&(c_h + c_e))?;
    Ok(c_h * (w * h_ls))
}

/// Moments of the LS error `e` given the estimate `ĥ`.
#[derive(Debug, Clone)]
pub struct ConditionalMoments {
    /// `C_e (C_e + C_h)^{-1}`.
    pub u: CMat,
    /// Conditional covariance `(C_e^{-1} + C_h^{-1})^{-1}`.
    pub r: CMat,
    /// `E[e | ĥ] = U ĥ`.
    pub mean: CVec,
}

impl ConditionalMoments {
    /// `E[e e^H | ĥ]`.
    pub fn second_moment(&self) -> CMat {
        &self.r + &self.mean * self.mean.adjoint()
    }

    /// `E[e e^T | ĥ]`.
    pub fn pseudo_moment(&self) -> CMat {
        &self.mean * self.mean.transpose()
    }
}

/// Conditional moments of `e` given `ĥ = h + e`.
///
/// `R` is evaluated as `U C_h`, which equals the harmonic form whenever both
/// covariances are invertible and stays finite when `C_h` is singular.
pub fn conditional_moments(c_h: &CMat, c_e: &CMat, h_hat: &CVec) -> Result<ConditionalMoments> {
    let n = ensure_square(c_h, "C_h")?;
    if c_e.shape() != (n, n) || h_hat.len() != n {
        return Err(Error::dims(n, format!("C_e {:?}, h {}", c_e.shape(), h_hat.len())));
    }
    let w = hpd_inverse(&(c_h + c_e))?;
    let u = c_e * w;
    let r = hermitian_part(&(&u * c_h));
    let mean = &u * h_hat;
    Ok(ConditionalMoments { u, r, mean })
}

/// `ŝ_n = Re(ĥ^H A_n^H y) + i Im(ĥ^H B_n^H y)`.
pub fn detect_symbols(code: &OstbcCode, h_hat: &CVec, y: &CVec) -> Result<Vec<C64>> {
    if h_hat.len() != code.n_t || y.len() != code.tau_d {
        return Err(Error::dims(
            format!("h {} / y {}", code.n_t, code.tau_d),
            format!("h {} / y {}", h_hat.len(), y.len()),
        ));
    }
    let mut buf = vec![ZERO; code.tau_d];
    Ok((0..code.n_s)
        .map(|n| {
            code.a_sparse[n].mul_vec(h_hat.as_slice(), &mut buf);
            let re = dot_conj(&buf, y.as_slice()).re;
            code.b_sparse[n].mul_vec(h_hat.as_slice(), &mut buf);
            let im = dot_conj(&buf, y.as_slice()).im;
            C64::new(re, im)
        })
        .collect())
}

fn dot_conj(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnrBreakdown {
    /// Coefficient of the error part that is fully correlated with `s_n`.
    pub c: Vec<C64>,
    /// Power of the uncorrelated error part.
    pub u: Vec<f64>,
    pub snr: Vec<f64>,
    pub snr_ostbc: f64,
}

impl SnrBreakdown {
    /// `max_n SNR_n / min_n SNR_n − 1`.
    pub fn spread(&self) -> f64 {
        let max = self.snr.iter().copied().fold(f64::MIN, f64::max);
        if self.snr_ostbc > 0.0 { max / self.snr_ostbc - 1.0 } else { 0.0 }
    }
}

/// `Σ_k (A_k S A_k^H + B_k S B_k^H)`.
pub(crate) fn gram_map(code: &OstbcCode, s: &CMat) -> CMat {
    apply_map(code.tau_d, &code.kernel.gram, s)
}

/// `Σ_k (A_k T A_k^T − B_k T B_k^T)`.
pub(crate) fn pseudo_map(code: &OstbcCode, t: &CMat) -> CMat {
    apply_map(code.tau_d, &code.kernel.pseudo, t)
}

fn apply_map(dim: usize, terms: &[MapTerm], input: &CMat) -> CMat {
    let mut out = CMat::zeros(dim, dim);
    for t in terms {
        out[(t.r as usize, t.r2 as usize)] += t.coef * input[(t.j as usize, t.j2 as usize)];
    }
    out
}

/// `x^H M x` over the listed entries of `M`.
fn quad(m: &CMat, x: &[C64], pairs: &[(usize, usize)]) -> C64 {
    pairs.iter().map(|&(r, r2)| x[r].conj() * m[(r, r2)] * x[r2]).sum()
}

/// `x^H M x*` over the listed entries of `M`.
fn quad_conj(m: &CMat, x: &[C64], pairs: &[(usize, usize)]) -> C64 {
    pairs.iter().map(|&(r, r2)| x[r].conj() * m[(r, r2)] * x[r2].conj()).sum()
}

/// Per-symbol `(E_s/4)[a^H G a + b^H G b + Re(a^H H a*) − Re(b^H H b*)]` with
/// `a = A_n ĥ`, `b = B_n ĥ`, `G = gram_map(S)`, `H = pseudo_map(T)`.
///
/// This is `E|η|² / ρ` for a term `−√ρ (Re(a^H X v) + i Im(b^H X v))` where
/// `X` is an independent codeword and `v` has moments `S = E[vv^H]`,
/// `T = E[vv^T]`.
pub(crate) fn codeword_noise_power(code: &OstbcCode, h_hat: &CVec, s: &CMat, t: &CMat) -> Vec<f64> {
    let g = gram_map(code, s);
    let h = pseudo_map(code, t);
    let es = code.symbol_energy();
    let mut a = vec![ZERO; code.tau_d];
    let mut b = vec![ZERO; code.tau_d];
    (0..code.n_s)
        .map(|n| {
            code.a_sparse[n].mul_vec(h_hat.as_slice(), &mut a);
            code.b_sparse[n].mul_vec(h_hat.as_slice(), &mut b);
            let k = &code.kernel;
            let val = quad(&g, &a, &k.a_gram_pairs[n]).re + quad(&g, &b, &k.b_gram_pairs[n]).re
                + quad_conj(&h, &a, &k.a_pseudo_pairs[n]).re
                - quad_conj(&h, &b, &k.b_pseudo_pairs[n]).re;
            (es / 4.0 * val).max(0.0)
        })
        .collect()
}

/// `c_n` for an error with conditional mean `μ`.
pub(crate) fn correlated_coefficients(code: &OstbcCode, h_hat: &CVec, mu: &CVec, rho_d: f64) -> Vec<C64> {
    let mut a = vec![ZERO; code.tau_d];
    let mut b = vec![ZERO; code.tau_d];
    let mut am = vec![ZERO; code.tau_d];
    let mut bm = vec![ZERO; code.tau_d];
    (0..code.n_s)
        .map(|n| {
            code.a_sparse[n].mul_vec(h_hat.as_slice(), &mut a);
            code.b_sparse[n].mul_vec(h_hat.as_slice(), &mut b);
            code.a_sparse[n].mul_vec(mu.as_slice(), &mut am);
            code.b_sparse[n].mul_vec(mu.as_slice(), &mut bm);
            let re = dot_conj(&a, &am).re + dot_conj(&b, &bm).re;
            let im = dot_conj(&b, &am).im + dot_conj(&a, &bm).im;
            C64::new(re, im) * (-rho_d.sqrt() / 2.0)
        })
        .collect()
}

/// Assembles `SNR_n = E_s |√ρ_d ‖ĥ‖² + c_n|² / (U_n + ‖ĥ‖² + extra_n)`.
pub(crate) fn assemble_snr(
    code: &OstbcCode,
    h_norm2: f64,
    rho_d: f64,
    c: Vec<C64>,
    eta1_power: &[f64],
    extra: Option<&[f64]>,
) -> SnrBreakdown {
    let es = code.symbol_energy();
    let u: Vec<f64> = c
        .iter()
        .zip(eta1_power)
        .map(|(cn, p)| (p - es * cn.norm_sqr()).max(0.0))
        .collect();
    let snr: Vec<f64> = (0..code.n_s)
        .map(|n| {
            let num = es * (C64::new(rho_d.sqrt() * h_norm2, 0.0) + c[n]).norm_sqr();
            let den = u[n] + h_norm2 + extra.map_or(0.0, |x| x[n]);
            if den > 0.0 { num / den } else { 0.0 }
        })
        .collect();
    let snr_ostbc = snr.iter().copied().fold(f64::INFINITY, f64::min);
    SnrBreakdown { c, u, snr, snr_ostbc }
}

/// Returns `s` if `m = s I` up to round-off.
pub(crate) fn scaled_identity(m: &CMat) -> Option<f64> {
    let s = m[(0, 0)].re;
    let tol = 1e-12 * s.abs().max(f64::MIN_POSITIVE);
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let want = if i == j { s } else { 0.0 };
            if (m[(i, j)] - C64::new(want, 0.0)).norm() > tol {
                return None;
            }
        }
    }
    Some(s)
}

/// Per-symbol SNR bounds given the estimate and the channel/error statistics.
///
/// Uses the closed-form shortcut when both covariances are scaled identities
/// and the code's Gram sum is a scaled identity; otherwise evaluates the full
/// moment expansion.
pub fn symbol_snr(code: &OstbcCode, c_h: &CMat, c_e: &CMat, h_hat: &CVec, rho_d: f64) -> Result<SnrBreakdown> {
    check_link_dims(code, c_h, c_e, h_hat)?;
    if let (Some(beta), Some(sigma2), Some(_)) = (scaled_identity(c_h), scaled_identity(c_e), code.gram_scale) {
        return symbol_snr_iid(code, beta, sigma2, norm_sqr(h_hat), rho_d);
    }
    symbol_snr_full(code, c_h, c_e, h_hat, rho_d)
}

fn check_link_dims(code: &OstbcCode, c_h: &CMat, c_e: &CMat, h_hat: &CVec) -> Result<()> {
    let n = code.n_t;
    if c_h.shape() != (n, n) || c_e.shape() != (n, n) || h_hat.len() != n {
        return Err(Error::dims(
            format!("n_t = {n}"),
            format!("C_h {:?}, C_e {:?}, h {}", c_h.shape(), c_e.shape(), h_hat.len()),
        ));
    }
    Ok(())
}

fn rho_d_invalid(rho_d: f64) -> bool {
    !(rho_d >= 0.0 && rho_d.is_finite())
}

/// Full moment expansion without shortcuts.
pub fn symbol_snr_full(code: &OstbcCode, c_h: &CMat, c_e: &CMat, h_hat: &CVec, rho_d: f64) -> Result<SnrBreakdown> {
    check_link_dims(code, c_h, c_e, h_hat)?;
    if rho_d_invalid(rho_d) {
        return Err(Error::invalid(format!("data power must be non-negative, got {rho_d}")));
    }
    let m = conditional_moments(c_h, c_e, h_hat)?;
    Ok(symbol_snr_from_moments(code, &m, h_hat, rho_d))
}

/// Full moment expansion from precomputed conditional moments of the error.
pub fn symbol_snr_from_moments(code: &OstbcCode, m: &ConditionalMoments, h_hat: &CVec, rho_d: f64) -> SnrBreakdown {
    let s = m.second_moment();
    let t = m.pseudo_moment();
    let power: Vec<f64> = codeword_noise_power(code, h_hat, &s, &t)
        .into_iter()
        .map(|p| p * rho_d)
        .collect();
    let c = correlated_coefficients(code, h_hat, &m.mean, rho_d);
    assemble_snr(code, norm_sqr(h_hat), rho_d, c, &power, None)
}

/// Closed form for `C_h = β I`, `C_e = σ² I`; depends on `ĥ` only via `‖ĥ‖²`.
pub fn symbol_snr_iid(code: &OstbcCode, beta: f64, sigma2: f64, h_norm2: f64, rho_d: f64) -> Result<SnrBreakdown> {
    if rho_d_invalid(rho_d) || beta < 0.0 || !(sigma2 > 0.0) {
        return Err(Error::invalid("need rho_d >= 0, beta >= 0, sigma2 > 0"));
    }
    let g0 = code
        .gram_scale
        .ok_or_else(|| Error::invalid("code Gram sum is not a scaled identity"))?;
    let es = code.symbol_energy();
    let u = sigma2 / (sigma2 + beta);
    let r = sigma2 * beta / (sigma2 + beta);
    let c = vec![C64::new(-rho_d.sqrt() * u * h_norm2, 0.0); code.n_s];
    let power = vec![es * rho_d * r * g0 * h_norm2 / 2.0 + es * c[0].norm_sqr(); code.n_s];
    Ok(assemble_snr(code, h_norm2, rho_d, c, &power, None))
}

/// The square-code, IID closed form, evaluated literally.
#[allow(clippy::too_many_arguments)]
pub fn snr_square(h_norm2: f64, beta: f64, n_t: usize, tau_d: usize, tau_p: usize, rho_p: f64, rho_d: f64, e_s: f64) -> f64 {
    let n_t = n_t as f64;
    let q = beta * tau_p as f64 * rho_p;
    if q + n_t <= 0.0 {
        return 0.0;
    }
    let den = rho_d * tau_d as f64 * beta / (n_t + q) + 1.0;
    e_s * rho_d * h_norm2 / den * (q / (q + n_t)).powi(2)
}

/// The structure-free bound driven by the Bayes estimate, evaluated literally.
pub fn snr_general(h_mmse_norm2: f64, beta: f64, n_t: usize, tau_p: usize, rho_p: f64, rho_d: f64) -> f64 {
    let n_t = n_t as f64;
    let den = n_t * rho_d * beta / (n_t + tau_p as f64 * rho_p * beta) + 1.0;
    rho_d / n_t * h_mmse_norm2 / den
}

/// Structure-free bound for correlated channels: the scalar `n_t β/(n_t +
/// τ_p ρ_p β)` becomes `tr(R)` of the conditional error covariance.
pub fn snr_general_correlated(h_mmse_norm2: f64, error_trace: f64, n_t: usize, rho_d: f64) -> f64 {
    let n_t = n_t as f64;
    rho_d / n_t * h_mmse_norm2 / (rho_d * error_trace / n_t + 1.0)
}

/// Scale of the law `‖ĥ‖² ~ scale · χ²(2 n_t)` for IID channels.
pub fn estimate_norm_scale(beta: f64, n_t: usize, tau_p: usize, rho_p: f64) -> f64 {
    let q = rho_p * tau_p as f64;
    (n_t as f64 + q * beta) / (2.0 * q)
}

/// Scale of the law `‖ĥ_mmse‖² ~ scale · χ²(2 n_t)` for IID channels.
pub fn mmse_norm_scale(beta: f64, n_t: usize, tau_p: usize, rho_p: f64) -> f64 {
    let q = rho_p * tau_p as f64;
    q * beta * beta / (2.0 * (q * beta + n_t as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::{make_code, CodeId};
    use crate::linalg::{complex_gaussian_mat, identity, max_abs_diff, psd_factor};
    use rand::SeedableRng;

    fn rng(seed: u64) -> rand_chacha::ChaCha8Rng {
        rand_chacha::ChaCha8Rng::seed_from_u64(seed)
    }

    fn random_psd(r: &mut rand_chacha::ChaCha8Rng, n: usize, scale: f64) -> CMat {
        let a = complex_gaussian_mat(r, n, n);
        (&a * a.adjoint()).scale(scale / n as f64)
    }

    #[test]
    fn pilot_matrix_gram() {
        let x = make_pilot_matrix(2, 2).unwrap();
        assert!(max_abs_diff(&(x.adjoint() * &x), &identity(2)) < 1e-14);
        let x = make_pilot_matrix(2, 4).unwrap();
        assert!(max_abs_diff(&(x.adjoint() * &x), &identity(2).scale(2.0)) < 1e-14);
        assert!(x.iter().all(|z| (z.norm() - 0.5f64.sqrt()).abs() < 1e-15));
        assert!(make_pilot_matrix(4, 3).is_err());
    }

    #[test]
    fn ls_noiseless_and_high_power() {
        let mut r = rng(1);
        let x = make_pilot_matrix(4, 8).unwrap();
        let h = complex_gaussian_vec(&mut r, 4);
        let y = &x * &h * C64::new(2.0, 0.0);
        let est = ls_estimate(&y, &x, 4.0).unwrap();
        assert!((&est - &h).norm() < 1e-12);

        let pilots = PilotConfig { tau_p: 8, rho_p: 1e8, matrix: x };
        let y = pilot_observation(&pilots, &h, &mut r);
        let est = ls_estimate(&y, &pilots.matrix, pilots.rho_p).unwrap();
        assert!((&est - &h).norm() < 1e-3);
    }

    #[test]
    fn ls_error_covariance() {
        let mut r = rng(2);
        let pilots = PilotConfig::new(2, 4, 0.5).unwrap();
        let h = complex_gaussian_vec(&mut r, 2);
        let n = 100_000;
        let mut acc = CMat::zeros(2, 2);
        for _ in 0..n {
            let y = pilot_observation(&pilots, &h, &mut r);
            let e = ls_estimate(&y, &pilots.matrix, pilots.rho_p).unwrap() - &h;
            acc += &e * e.adjoint();
        }
        acc /= C64::new(n as f64, 0.0);
        let s2 = pilots.error_variance();
        assert!((s2 - 1.0).abs() < 1e-15);
        let se = s2 / (n as f64).sqrt();
        assert!((acc[(0, 0)].re - s2).abs() < 3.0 * se);
        assert!((acc[(1, 1)].re - s2).abs() < 3.0 * se);
        assert!(acc[(0, 1)].norm() < 3.0 * se);
    }

    #[test]
    fn conditional_moments_limits() {
        let h = CVec::from_element(2, C64::new(1.0, -1.0));
        let m = conditional_moments(&identity(2), &identity(2), &h).unwrap();
        assert!(max_abs_diff(&m.u, &identity(2).scale(0.5)) < 1e-14);
        assert!(max_abs_diff(&m.r, &identity(2).scale(0.5)) < 1e-14);
        let m = conditional_moments(&identity(2), &identity(2).scale(1e-12), &h).unwrap();
        assert!(m.u.norm() < 1e-11 && m.mean.norm() < 1e-11);
        // singular C_h does not break the evaluation
        let mut ch = CMat::zeros(2, 2);
        ch[(0, 0)] = C64::new(1.0, 0.0);
        let m = conditional_moments(&ch, &identity(2), &h).unwrap();
        assert!((m.r[(1, 1)].re).abs() < 1e-14 && (m.r[(0, 0)].re - 0.5).abs() < 1e-14);
    }

    #[test]
    fn conditional_mean_matches_regression() {
        // Regress e on ĥ over joint draws; the least-squares slope is U.
        let mut r = rng(3);
        let n_t = 3;
        let ch = random_psd(&mut r, n_t, 1.0);
        let ce = identity(n_t).scale(0.7);
        let (fh, fe) = (psd_factor(&ch).unwrap(), psd_factor(&ce).unwrap());
        let draws = 200_000;
        let mut seh = CMat::zeros(n_t, n_t);
        let mut shh = CMat::zeros(n_t, n_t);
        for _ in 0..draws {
            let h = &fh * complex_gaussian_vec(&mut r, n_t);
            let e = &fe * complex_gaussian_vec(&mut r, n_t);
            let hh = &h + &e;
            seh += &e * hh.adjoint();
            shh += &hh * hh.adjoint();
        }
        let slope = seh * shh.try_inverse().unwrap();
        let m = conditional_moments(&ch, &ce, &CVec::zeros(n_t)).unwrap();
        assert!(max_abs_diff(&slope, &m.u) < 0.01, "{}", max_abs_diff(&slope, &m.u));
    }

    #[test]
    fn detection_is_exact_with_perfect_csi() {
        let mut r = rng(4);
        for id in CodeId::ALL {
            let code = make_code(id);
            let h = complex_gaussian_vec(&mut r, code.n_t);
            let s = complex_gaussian_vec(&mut r, code.n_s);
            let rho_d = 2.5_f64;
            let y = code.encode(s.as_slice()).unwrap() * &h * C64::new(rho_d.sqrt(), 0.0);
            let det = detect_symbols(&code, &h, &y).unwrap();
            let g = rho_d.sqrt() * norm_sqr(&h);
            for (d, sn) in det.iter().zip(s.iter()) {
                assert!((d / g - sn).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn iid_closed_forms() {
        let (beta, tau_p, rho_p, rho_d) = (0.3, 2, 3.0, 0.8_f64);
        let code = make_code(CodeId::C2);
        let mut r = rng(5);
        let h = complex_gaussian_vec(&mut r, 2);
        let s2 = ls_error_variance(2, tau_p, rho_p);
        let ch = identity(2).scale(beta);
        let ce = identity(2).scale(s2);
        let full = symbol_snr_full(&code, &ch, &ce, &h, rho_d).unwrap();
        let fast = symbol_snr(&code, &ch, &ce, &h, rho_d).unwrap();
        let hn = norm_sqr(&h);
        let q = beta * tau_p as f64 * rho_p;
        let c_closed = -rho_d.sqrt() * hn * 2.0 / (q + 2.0);
        let u_closed = rho_d * 2.0 * beta / (q + 2.0) * hn;
        for n in 0..2 {
            assert!((full.c[n] - C64::new(c_closed, 0.0)).norm() < 1e-12);
            assert!((full.u[n] - u_closed).abs() < 1e-12);
            assert!((full.snr[n] - fast.snr[n]).abs() < 1e-10 * fast.snr[n]);
        }
        let sq = snr_square(hn, beta, 2, 2, tau_p, rho_p, rho_d, code.symbol_energy());
        assert!((sq - full.snr_ostbc).abs() < 1e-10 * sq);
    }

    #[test]
    fn fast_path_matches_full_for_every_code() {
        let mut r = rng(6);
        for id in CodeId::ALL {
            let code = make_code(id);
            let h = complex_gaussian_vec(&mut r, code.n_t);
            let ch = identity(code.n_t).scale(0.4);
            let ce = identity(code.n_t).scale(0.9);
            let full = symbol_snr_full(&code, &ch, &ce, &h, 1.3).unwrap();
            let fast = symbol_snr(&code, &ch, &ce, &h, 1.3).unwrap();
            assert!((full.snr_ostbc - fast.snr_ostbc).abs() < 1e-10 * fast.snr_ostbc, "{id}");
        }
    }

    #[test]
    fn snr_limits() {
        assert_eq!(snr_square(1.0, 0.0, 2, 2, 2, 1.0, 1.0, 1.0), 0.0);
        let big = snr_square(2.0, 0.5, 2, 2, 2, 1e12, 3.0, 0.5);
        assert!((big - 0.5 * 3.0 * 2.0).abs() < 1e-6);
        assert_eq!(snr_general(1.0, 0.5, 2, 2, 1.0, 0.0), 0.0);
    }

    #[test]
    fn correlated_snr_is_consistent() {
        let mut r = rng(7);
        for id in [CodeId::C2, CodeId::C4, CodeId::C8] {
            let code = make_code(id);
            let ch = random_psd(&mut r, code.n_t, 0.5);
            let ce = identity(code.n_t).scale(0.2);
            let h = complex_gaussian_vec(&mut r, code.n_t);
            let b = symbol_snr(&code, &ch, &ce, &h, 1.0).unwrap();
            assert!(b.snr.iter().all(|&s| s >= 0.0));
            assert_eq!(b.snr_ostbc, b.snr.iter().copied().fold(f64::INFINITY, f64::min));
            assert!(b.u.iter().all(|&u| u >= 0.0));
        }
    }
}
