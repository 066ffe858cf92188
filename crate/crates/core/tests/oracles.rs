//! Cross-checks of the closed-form SNR machinery against the simulation oracle.

mod common;

use common::*;
use si_broadcast::codes::{make_code, CodeId};
use si_broadcast::linalg::{complex_gaussian_vec, identity, CMat};
use si_broadcast::link::{conditional_moments, symbol_snr_full};
use si_broadcast::multicell::{mc_symbol_snr, MultiCellStatistics};

#[test]
fn posterior_conditioning_matches_closed_form_moments() {
    let mut r = rng(11);
    let ch = random_psd(&mut r, 3, 1.0);
    let ce = identity(3).scale(0.4);
    let h_hat = complex_gaussian_vec(&mut r, 3);
    let post = condition_on_sum(&[ch.clone(), ce.clone()], &h_hat);
    let m = conditional_moments(&ch, &ce, &h_hat).unwrap();
    assert!((&post.mean[1] - &m.mean).norm() < 1e-6);
    let cov_e: CMat = post.cov.view((3, 3), (3, 3)).into_owned();
    assert!((cov_e - &m.r).norm() < 1e-6);
}

#[test]
fn oracle_reproduces_iid_closed_form() {
    let code = make_code(CodeId::C2);
    let mut r = rng(12);
    let h_hat = complex_gaussian_vec(&mut r, 2);
    let (beta, s2, rho_d) = (0.5, 0.25, 2.0);
    let ch = identity(2).scale(beta);
    let ce = identity(2).scale(s2);
    let post = condition_on_sum(&[ch.clone(), ce.clone()], &h_hat);
    let est = detector_oracle(&code, &h_hat, &post, &[], rho_d, 200_000, 5);
    let closed = symbol_snr_full(&code, &ch, &ce, &h_hat, rho_d).unwrap();
    for n in 0..2 {
        assert!((est[n].c.re - closed.c[n].re).abs() < 3.0 * est[n].c_se.0, "{:?} vs {:?}", est[n], closed.c[n]);
        let want = closed.u[n] + h_hat.norm_squared();
        assert!((est[n].u - want).abs() < 3.0 * est[n].u_se, "{:?} vs {want}", est[n]);
    }
}

#[test]
fn oracle_checks_correlated_single_cell() {
    let mut r = rng(13);
    let code = make_code(CodeId::C4);
    let ch = random_correlated(&mut r, 4, 0.7);
    let ce = identity(4).scale(0.3);
    let h_hat = complex_gaussian_vec(&mut r, 4);
    let post = condition_on_sum(&[ch.clone(), ce.clone()], &h_hat);
    let est = detector_oracle(&code, &h_hat, &post, &[], 1.5, 200_000, 6);
    let closed = symbol_snr_full(&code, &ch, &ce, &h_hat, 1.5).unwrap();
    for n in 0..code.n_s {
        let z = (est[n].snr - closed.snr[n]) / est[n].snr_se;
        assert!(z.abs() < 3.0, "symbol {n}: oracle {:?} closed {}", est[n], closed.snr[n]);
    }
}

#[test]
fn oracle_checks_multicell() {
    let mut r = rng(14);
    let code = make_code(CodeId::C2);
    let ch = random_correlated(&mut r, 2, 1.0);
    let ce = identity(2).scale(0.3);
    let contaminating = vec![random_correlated(&mut r, 2, 0.3), random_correlated(&mut r, 2, 0.2)];
    let others = vec![random_correlated(&mut r, 2, 0.4)];
    let h_hat = complex_gaussian_vec(&mut r, 2);
    let mut priors = vec![ch.clone(), ce.clone()];
    priors.extend(contaminating.iter().cloned());
    let post = condition_on_sum(&priors, &h_hat);
    let est = detector_oracle(&code, &h_hat, &post, &others, 1.0, 200_000, 7);
    let stats = MultiCellStatistics { c_h: ch, c_e: ce, contaminating, others };
    let closed = mc_symbol_snr(&code, &stats, &h_hat, 1.0).unwrap();
    for n in 0..code.n_s {
        let z = (est[n].snr - closed.snr[n]) / est[n].snr_se;
        assert!(z.abs() < 3.0, "symbol {n}: oracle {:?} closed {}", est[n], closed.snr[n]);
    }
}

/// A loose bound that only a real discrepancy trips: the acceptance target
/// applies the strict 3 SE check.
#[test]
fn oracle_agrees_on_random_correlated_configs() {
    use rand::Rng;
    let mut r = rng(15);
    let mut worst = 0.0f64;
    for cfg in 0..6 {
        let code = make_code([CodeId::C1, CodeId::C2, CodeId::C4][cfg % 3]);
        let n = code.n_t;
        let b = r.random_range(0.5..2.0);
        let ch = random_correlated(&mut r, n, b);
        let ce = identity(n).scale(r.random_range(0.05..0.5));
        let contaminating: Vec<CMat> = (0..cfg % 3).map(|_| random_correlated(&mut r, n, 0.3)).collect();
        let others: Vec<CMat> = (0..cfg % 2).map(|_| random_correlated(&mut r, n, 0.2)).collect();
        let h_hat = complex_gaussian_vec(&mut r, n).scale(r.random_range(0.5..2.0));
        let rho_d = r.random_range(0.3..3.0);
        let mut priors = vec![ch.clone(), ce.clone()];
        priors.extend(contaminating.iter().cloned());
        let post = condition_on_sum(&priors, &h_hat);
        let est = detector_oracle(&code, &h_hat, &post, &others, rho_d, 100_000, 20 + cfg as u64);
        let stats = MultiCellStatistics { c_h: ch, c_e: ce, contaminating, others };
        let closed = mc_symbol_snr(&code, &stats, &h_hat, rho_d).unwrap();
        for k in 0..code.n_s {
            worst = worst.max(((est[k].snr - closed.snr[k]) / est[k].snr_se).abs());
            worst = worst.max(((est[k].c.re - closed.c[k].re) / est[k].c_se.0).abs());
        }
    }
    assert!(worst < 4.5, "worst |z| = {worst}");
}
