//! Outage capacities and rates from Monte Carlo samples.

use rand::Rng;

use crate::codes::CodeId;
use crate::error::{Error, Result};
use crate::rng::SimRng;
use statrs::distribution::{Binomial, DiscreteCDF};

/// Minimum number of samples that must fall below the quantile.
pub const MIN_TAIL_SAMPLES: f64 = 10.0;

pub const BOOTSTRAP_RESAMPLES: usize = 200;

/// `(1/L) Σ_l rate · log2(1 + SNR_l)`.
pub fn supported_rate(snrs: &[f64], code_rate: f64) -> Result<f64> {
    if snrs.is_empty() {
        return Err(Error::invalid("need at least one SNR value"));
    }
    if let Some(bad) = snrs.iter().find(|s| !(**s >= 0.0)) {
        return Err(Error::invalid(format!("SNR values must be non-negative, got {bad}")));
    }
    Ok(snrs.iter().map(|s| code_rate * s.ln_1p() / std::f64::consts::LN_2).sum::<f64>() / snrs.len() as f64)
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::invalid(format!("outage probability must lie in (0, 1), got {eps}")));
    }
    Ok(())
}

/// 1-based rank of the ε-quantile order statistic, `⌈εN⌉`.
pub fn quantile_rank(n: usize, eps: f64) -> usize {
    ((eps * n as f64).ceil() as usize).clamp(1, n)
}

/// Empirical ε-quantile of the supported rate (lower order statistic).
pub fn outage_capacity(samples: &[f64], eps: f64) -> Result<f64> {
    check_eps(eps)?;
    let need = (MIN_TAIL_SAMPLES / eps).ceil() as usize;
    if samples.len() < need {
        return Err(Error::invalid(format!(
            "need at least {need} samples for eps = {eps}, got {}",
            samples.len()
        )));
    }
    let mut v = samples.to_vec();
    let k = quantile_rank(v.len(), eps) - 1;
    let (_, q, _) = v.select_nth_unstable_by(k, f64::total_cmp);
    Ok(*q)
}

/// `((τ_c − τ_p)/τ_c) C_ε`.
pub fn outage_rate(capacity: f64, tau_c: f64, tau_p: f64) -> Result<f64> {
    Ok(prelog(tau_c, tau_p)? * capacity)
}

pub fn prelog(tau_c: f64, tau_p: f64) -> Result<f64> {
    if !(tau_p >= 0.0 && tau_p < tau_c) {
        return Err(Error::invalid(format!("need 0 <= tau_p < tau_c, got tau_p = {tau_p}, tau_c = {tau_c}")));
    }
    Ok((tau_c - tau_p) / tau_c)
}

/// Half-width of the 95% percentile-bootstrap interval of the ε-quantile.
pub fn bootstrap_halfwidth(samples: &[f64], eps: f64, resamples: usize, rng: &mut SimRng) -> Result<f64> {
    check_eps(eps)?;
    if samples.is_empty() || resamples < 2 {
        return Err(Error::invalid("bootstrap needs samples and at least two resamples"));
    }
    let n = samples.len();
    let k = quantile_rank(n, eps) - 1;
    let mut buf = vec![0.0; n];
    let mut qs: Vec<f64> = (0..resamples)
        .map(|_| {
            for slot in buf.iter_mut() {
                *slot = samples[rng.random_range(0..n)];
            }
            *buf.select_nth_unstable_by(k, f64::total_cmp).1
        })
        .collect();
    qs.sort_by(f64::total_cmp);
    let at = |p: f64| qs[((p * resamples as f64).ceil() as usize).clamp(1, resamples) - 1];
    Ok((at(0.975) - at(0.025)) / 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutageResult {
    pub eps: f64,
    /// Outage capacity before pilot overhead.
    pub capacity: f64,
    /// Outage rate after pilot overhead.
    pub rate: f64,
    pub prelog: f64,
    pub n_samples: usize,
    /// Bootstrap half-width of `rate`.
    pub half_width: f64,
}

impl OutageResult {
    pub fn relative_half_width(&self) -> f64 {
        if self.rate > 0.0 { self.half_width / self.rate } else { f64::INFINITY }
    }
}

pub fn outage_result(samples: &[f64], eps: f64, tau_c: f64, tau_p: f64) -> Result<OutageResult> {
    let capacity = outage_capacity(samples, eps)?;
    let pre = prelog(tau_c, tau_p)?;
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let hw = order_statistic_halfwidth(&sorted, quantile_rank(sorted.len(), eps));
    Ok(OutageResult {
        eps,
        capacity,
        rate: pre * capacity,
        prelog: pre,
        n_samples: samples.len(),
        half_width: pre * hw,
    })
}

/// 95% percentile-bootstrap interval of the `rank`-th order statistic (1-based)
/// in the limit of infinitely many resamples.
///
/// A resample's `k`-th order statistic is at most `x_(j)` exactly when at
/// least `k` of the `N` draws land on `x_(1..=j)`, a `Bin(N, j/N)` event, so
/// the interval follows from two binomial tail searches.
pub fn order_statistic_interval(sorted: &[f64], rank: usize) -> (f64, f64) {
    let n = sorted.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let k = rank.clamp(1, n);
    let tail = |j: usize| -> f64 {
        if j >= n {
            return 1.0;
        }
        match Binomial::new(j as f64 / n as f64, n as u64) {
            Ok(b) => 1.0 - b.cdf(k as u64 - 1),
            Err(_) => 1.0,
        }
    };
    let first_reaching = |level: f64| -> usize {
        let (mut lo, mut hi) = (1usize, n);
        while lo < hi {
            let mid = (lo + hi) / 2;
            if tail(mid) >= level { hi = mid } else { lo = mid + 1 }
        }
        lo
    };
    (sorted[first_reaching(0.025) - 1], sorted[first_reaching(0.975) - 1])
}

/// Half of [`order_statistic_interval`]'s width.
pub fn order_statistic_halfwidth(sorted: &[f64], rank: usize) -> f64 {
    let (lo, hi) = order_statistic_interval(sorted, rank);
    (hi - lo) / 2.0
}

/// Channel-use accounting when one coherence interval is split in `L` parts,
/// each with its own `n_t`-long pilot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitBudget {
    pub pilot_uses: usize,
    pub data_uses: usize,
}

pub fn split_budget(tau_c: usize, intervals: usize, n_t: usize) -> Result<SplitBudget> {
    let pilot_uses = intervals * n_t;
    if intervals == 0 || pilot_uses >= tau_c {
        return Err(Error::invalid(format!(
            "need 1 <= L and L n_t < tau_c, got L = {intervals}, n_t = {n_t}, tau_c = {tau_c}"
        )));
    }
    Ok(SplitBudget { pilot_uses, data_uses: tau_c - pilot_uses })
}

/// Total bits through a split coherence interval, `(τ_c − L n_t) C_ε(L)`.
pub fn split_bits(tau_c: usize, intervals: usize, n_t: usize, capacity: f64) -> Result<f64> {
    Ok(split_budget(tau_c, intervals, n_t)?.data_uses as f64 * capacity)
}

/// Smallest `L` with `L τ_c R_ε(L) ≥ N_b`. `rates[i]` is `R_ε` for `L = i + 1`.
pub fn min_intervals_for_message(n_bits: f64, tau_c: f64, rates: &[f64]) -> Result<usize> {
    if rates.is_empty() {
        return Err(Error::invalid("empty rate table"));
    }
    rates
        .iter()
        .enumerate()
        .find(|(i, r)| (*i as f64 + 1.0) * tau_c * **r >= n_bits)
        .map(|(i, _)| i + 1)
        .ok_or_else(|| Error::invalid(format!("{n_bits} bits not reachable within L = {}", rates.len())))
}

/// Code needing the fewest intervals; ties go to the code with more ports.
pub fn preferred_code(n_bits: f64, tau_c: f64, tables: &[(CodeId, Vec<f64>)]) -> Option<(CodeId, usize)> {
    tables
        .iter()
        .filter_map(|(id, rates)| min_intervals_for_message(n_bits, tau_c, rates).ok().map(|l| (*id, l)))
        .min_by(|a, b| a.1.cmp(&b.1).then(b.0.n_t().cmp(&a.0.n_t())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn supported_rate_examples() {
        assert!((supported_rate(&[1.0], 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((supported_rate(&[0.0, 3.0], 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(supported_rate(&[0.0, 0.0], 0.5).unwrap(), 0.0);
        assert!(supported_rate(&[], 1.0).is_err());
        assert!(supported_rate(&[-1.0], 1.0).is_err());
    }

    #[test]
    fn quantile_examples() {
        let v: Vec<f64> = (1..=1000).map(f64::from).collect();
        assert_eq!(outage_capacity(&v, 0.01).unwrap(), 10.0);
        assert_eq!(outage_capacity(&[2.5; 2000], 0.01).unwrap(), 2.5);
        let sym: Vec<f64> = (-500..=500).map(f64::from).collect();
        assert_eq!(outage_capacity(&sym, 0.5).unwrap(), 0.0);
        assert!(outage_capacity(&v[..500], 0.01).is_err());
        assert!(outage_capacity(&v, 0.0).is_err());
    }

    #[test]
    fn rate_examples() {
        assert_eq!(outage_rate(0.3, 256.0, 0.0).unwrap(), 0.3);
        assert!((outage_rate(0.130, 256.0, 8.0).unwrap() - 0.1259375).abs() < 1e-12);
        assert!((outage_rate(0.4, 256.0, 128.0).unwrap() - 0.2).abs() < 1e-15);
        assert!(outage_rate(0.4, 256.0, 256.0).is_err());
    }

    #[test]
    fn split_examples() {
        assert_eq!(split_budget(256, 1, 8).unwrap().data_uses, 248);
        assert!(split_budget(256, 32, 8).is_err());
        assert_eq!(split_budget(256, 4, 2).unwrap().data_uses, 248);
    }

    #[test]
    fn interval_search() {
        let rates = [0.1, 0.15, 0.2];
        assert_eq!(min_intervals_for_message(0.0, 256.0, &rates).unwrap(), 1);
        assert_eq!(min_intervals_for_message(25.6 + 1e-9, 256.0, &rates).unwrap(), 2);
        assert!(min_intervals_for_message(1e6, 256.0, &rates).is_err());
        let tables = vec![(CodeId::C2, vec![0.1, 0.2]), (CodeId::C4, vec![0.05, 0.2])];
        // both need two intervals for 60 bits; the larger code wins
        assert_eq!(preferred_code(60.0, 256.0, &tables), Some((CodeId::C4, 2)));
        assert_eq!(preferred_code(20.0, 256.0, &tables), Some((CodeId::C2, 1)));
    }

    #[test]
    fn exact_interval_matches_resampling() {
        let mut r = SimRng::seed_from_u64(11);
        let mut x: Vec<f64> = (0..5000).map(|_| r.random::<f64>().powi(3)).collect();
        let hw_boot = bootstrap_halfwidth(&x, 0.05, 4000, &mut r).unwrap();
        x.sort_by(f64::total_cmp);
        let hw_exact = order_statistic_halfwidth(&x, quantile_rank(x.len(), 0.05));
        assert!((hw_boot / hw_exact - 1.0).abs() < 0.15, "{hw_boot} vs {hw_exact}");
        let (lo, hi) = order_statistic_interval(&x, 250);
        assert!(lo <= x[249] && x[249] <= hi);
    }

    #[test]
    fn constant_samples_have_zero_width() {
        let x = vec![2.0; 1000];
        assert_eq!(order_statistic_halfwidth(&x, 10), 0.0);
        let res = outage_result(&x, 0.01, 256.0, 8.0).unwrap();
        assert_eq!(res.half_width, 0.0);
        assert!((res.rate - 2.0 * 248.0 / 256.0).abs() < 1e-15);
    }

    #[test]
    fn bootstrap_shrinks_with_samples() {
        let mut r = SimRng::seed_from_u64(1);
        let small: Vec<f64> = (0..2_000).map(|_| r.random::<f64>()).collect();
        let large: Vec<f64> = (0..50_000).map(|_| r.random::<f64>()).collect();
        let a = bootstrap_halfwidth(&small, 0.1, 200, &mut r).unwrap();
        let b = bootstrap_halfwidth(&large, 0.1, 200, &mut r).unwrap();
        assert!(a > b && b > 0.0);
        // Binomial approximation for the uniform 0.1-quantile: 1.96 sqrt(0.09/N).
        assert!((b / (1.96 * (0.09f64 / 50_000.0).sqrt()) - 1.0).abs() < 0.3);
    }
}
