//! Independent Monte Carlo oracles shared by the integration tests.
//!
//! The oracle conditions the stacked vector of all Gaussian blocks on their
//! sum and measures the detector output by simulation, so it shares no
//! algebra with the closed forms under test beyond the code matrices.

#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use si_broadcast::codes::OstbcCode;
use si_broadcast::linalg::{complex_gaussian_mat, complex_gaussian_vec, psd_factor, CMat, CVec, C64};
use si_broadcast::link::detect_symbols;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_psd(r: &mut ChaCha8Rng, n: usize, scale: f64) -> CMat {
    let a = complex_gaussian_mat(r, n, n);
    (&a * a.adjoint()).scale(scale / n as f64) + CMat::identity(n, n).scale(1e-3 * scale)
}

/// Exponential-correlation style covariance with random magnitude and phase.
pub fn random_correlated(r: &mut ChaCha8Rng, n: usize, beta: f64) -> CMat {
    use rand::Rng;
    let mag: f64 = r.random_range(0.3..0.95);
    let ph: f64 = r.random_range(-3.0..3.0);
    CMat::from_fn(n, n, |i, j| {
        let lag = j as f64 - i as f64;
        C64::from_polar(beta * mag.powf(lag.abs()), ph * lag)
    })
}

/// Posterior of independent blocks `z_j ~ CN(0, P_j)` given their sum
/// `Σ_j z_j = y`, by joint-Gaussian conditioning on the stacked vector.
pub struct Posterior {
    pub mean: Vec<CVec>,
    pub cov: CMat,
    pub n: usize,
}

pub fn condition_on_sum(priors: &[CMat], y: &CVec) -> Posterior {
    let n = y.len();
    let blocks = priors.len();
    let dim = n * blocks;
    let mut joint = CMat::zeros(dim, dim);
    let mut cross = CMat::zeros(dim, n);
    let mut syy = CMat::zeros(n, n);
    for (j, p) in priors.iter().enumerate() {
        joint.view_mut((j * n, j * n), (n, n)).copy_from(p);
        cross.view_mut((j * n, 0), (n, n)).copy_from(p);
        syy += p;
    }
    let chol = syy.cholesky().expect("sum of priors positive definite");
    let gain = chol.solve(&cross.adjoint()).adjoint();
    let cov = &joint - &gain * cross.adjoint();
    let cov = (&cov + cov.adjoint()).scale(0.5);
    let m = &gain * y;
    let mean = (0..blocks).map(|j| m.rows(j * n, n).into_owned()).collect();
    Posterior { mean, cov, n }
}

/// Oracle estimates for one symbol index.
#[derive(Debug, Clone, Copy)]
pub struct OracleEstimate {
    pub c: C64,
    pub c_se: (f64, f64),
    /// Power of everything uncorrelated with the symbol, thermal noise and
    /// interference included.
    pub u: f64,
    pub u_se: f64,
    pub snr: f64,
    pub snr_se: f64,
}

/// Simulates the detector for fixed `ĥ`.
///
/// Posterior blocks are ordered `(h, e, h_k for k in K)`; `others` are
/// covariances of interferers outside `K`. Every interfering cell sends an
/// independent Gaussian-symbol codeword at `ρ_d`.
pub fn detector_oracle(
    code: &OstbcCode,
    h_hat: &CVec,
    post: &Posterior,
    others: &[CMat],
    rho_d: f64,
    samples: usize,
    seed: u64,
) -> Vec<OracleEstimate> {
    let mut r = rng(seed);
    let n = post.n;
    let blocks = post.mean.len();
    let factor = psd_factor(&post.cov).expect("posterior covariance PSD");
    let other_f: Vec<CMat> = others.iter().map(|c| psd_factor(c).unwrap()).collect();
    let es = code.symbol_energy();
    let sq = C64::new(rho_d.sqrt(), 0.0);
    let gain = rho_d.sqrt() * h_hat.norm_squared();
    let batches = 50;
    let per = samples / batches;
    // per batch, per symbol: Σ s* noise, Σ |noise|²
    let mut bc = vec![vec![C64::new(0.0, 0.0); code.n_s]; batches];
    let mut bp = vec![vec![0.0; code.n_s]; batches];
    let sym_scale = C64::new(es.sqrt(), 0.0);
    for b in 0..batches {
        for _ in 0..per {
            let z = &factor * complex_gaussian_vec(&mut r, n * blocks);
            let block = |j: usize| -> CVec { &post.mean[j] + z.rows(j * n, n) };
            let h = block(0);
            let s = complex_gaussian_vec(&mut r, code.n_s) * sym_scale;
            let x = code.encode(s.as_slice()).unwrap();
            let mut y = &x * &h * sq + complex_gaussian_vec(&mut r, code.tau_d);
            let mut interferers: Vec<CVec> = (2..blocks).map(block).collect();
            interferers.extend(other_f.iter().map(|f| f * complex_gaussian_vec(&mut r, n)));
            for hk in &interferers {
                let sk = complex_gaussian_vec(&mut r, code.n_s) * sym_scale;
                y += code.encode(sk.as_slice()).unwrap() * hk * sq;
            }
            let det = detect_symbols(code, h_hat, &y).unwrap();
            for k in 0..code.n_s {
                let noise = det[k] - s[k] * gain;
                bc[b][k] += s[k].conj() * noise;
                bp[b][k] += noise.norm_sqr();
            }
        }
    }
    let snr_of = |c: C64, u: f64| es * (C64::new(gain, 0.0) + c).norm_sqr() / u;
    (0..code.n_s)
        .map(|k| {
            let stats: Vec<(C64, f64)> = (0..batches)
                .map(|b| {
                    let c = bc[b][k] / (per as f64 * es);
                    let p = bp[b][k] / per as f64;
                    (c, p - es * c.norm_sqr())
                })
                .collect();
            let bf = batches as f64;
            let mean_c = stats.iter().map(|s| s.0).sum::<C64>() / bf;
            let mean_u = stats.iter().map(|s| s.1).sum::<f64>() / bf;
            let sd = |f: &dyn Fn(&(C64, f64)) -> f64, m: f64| {
                let v = stats.iter().map(|s| (f(s) - m).powi(2)).sum::<f64>() / (bf - 1.0);
                (v / bf).sqrt()
            };
            // The SNR is a ratio, so use the pooled estimate with a
            // leave-one-batch-out jackknife instead of averaging batch ratios.
            let snr = snr_of(mean_c, mean_u);
            let loo: Vec<f64> = stats
                .iter()
                .map(|s| snr_of((mean_c * bf - s.0) / (bf - 1.0), (mean_u * bf - s.1) / (bf - 1.0)))
                .collect();
            let loo_mean = loo.iter().sum::<f64>() / bf;
            let snr_se = ((bf - 1.0) / bf * loo.iter().map(|x| (x - loo_mean).powi(2)).sum::<f64>()).sqrt();
            OracleEstimate {
                c: mean_c,
                c_se: (sd(&|s| s.0.re, mean_c.re), sd(&|s| s.0.im, mean_c.im)),
                u: mean_u,
                u_se: sd(&|s| s.1, mean_u),
                snr,
                snr_se,
            }
        })
        .collect()
}

pub fn real_identity(n: usize) -> DMatrix<f64> {
    DMatrix::identity(n, n)
}
