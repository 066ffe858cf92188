//! CSI-free pilot-energy heuristic under a fixed per-interval energy budget.
//!
//! The base station maximizes the outage rate of a simplified scenario: an
//! IID channel at the ε-percentile large-scale gain, with `‖ĥ‖²` replaced by
//! its ε-quantile. Nothing about the actual users enters.

use rand::SeedableRng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::channel::{place_user, CellShape, UserGeometry};
use crate::codes::OstbcCode;
use crate::error::{Error, Result};
use crate::link::{estimate_norm_scale, snr_square};
use crate::outage::prelog;
use crate::rng::SimRng;

/// `τ_p ρ_p + (τ_c − τ_p) ρ_d = τ_c ρ̄`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBudget {
    pub coherence: f64,
    pub nominal_power: f64,
}

impl EnergyBudget {
    pub fn new(coherence: f64) -> Self {
        Self { coherence, nominal_power: 1.0 }
    }

    pub fn max_pilot_power(&self, tau_p: usize) -> f64 {
        self.coherence * self.nominal_power / tau_p as f64
    }

    pub fn data_power(&self, tau_p: usize, rho_p: f64) -> Result<f64> {
        let tp = tau_p as f64;
        if !(tp > 0.0 && tp < self.coherence) {
            return Err(Error::invalid(format!("need 0 < tau_p < tau_c, got {tau_p} and {}", self.coherence)));
        }
        let rho_d = (self.coherence * self.nominal_power - tp * rho_p) / (self.coherence - tp);
        if !(rho_p > 0.0 && rho_d > 0.0) {
            return Err(Error::invalid(format!("pilot power {rho_p} leaves no data energy")));
        }
        Ok(rho_d)
    }

    /// `τ_p ρ_p + (τ_c − τ_p) ρ_d − τ_c ρ̄`.
    pub fn residual(&self, tau_p: usize, rho_p: f64, rho_d: f64) -> f64 {
        let tp = tau_p as f64;
        tp * rho_p + (self.coherence - tp) * rho_d - self.coherence * self.nominal_power
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PilotPowers {
    pub tau_p: usize,
    pub rho_p: f64,
    pub rho_d: f64,
}

impl PilotPowers {
    /// Equal pilot and data power.
    pub fn baseline(tau_p: usize) -> Self {
        Self { tau_p, rho_p: 1.0, rho_d: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub rho_p: f64,
    pub rho_d: f64,
    pub objective: f64,
}

/// Every objective evaluation made by the search, in order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OptimizerTrace {
    pub points: Vec<TracePoint>,
}

impl OptimizerTrace {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("rho_p,rho_d,objective\n");
        for p in &self.points {
            out.push_str(&format!("{:.8e},{:.8e},{:.8e}\n", p.rho_p, p.rho_d, p.objective));
        }
        out
    }
}

/// Large-scale gain exceeded by a fraction `1 − ε` of uniformly placed users.
pub fn beta_percentile(geometry: &UserGeometry, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::invalid(format!("eps must lie in (0, 1), got {eps}")));
    }
    geometry.validate()?;
    match geometry.shape {
        CellShape::Disk => {
            let a2 = geometry.exclusion_radius.powi(2);
            Ok(geometry.beta_at((1.0 - eps * (1.0 - a2)).sqrt()))
        }
        CellShape::Hexagon => {
            let mut rng = SimRng::seed_from_u64(0x6865_7861);
            Ok(beta_percentile_monte_carlo(geometry, eps, 1_000_000, &mut rng))
        }
    }
}

pub fn beta_percentile_monte_carlo(geometry: &UserGeometry, eps: f64, draws: usize, rng: &mut SimRng) -> f64 {
    let mut betas: Vec<f64> = (0..draws).map(|_| place_user(geometry, rng).beta).collect();
    let k = ((eps * draws as f64).ceil() as usize).clamp(1, draws) - 1;
    *betas.select_nth_unstable_by(k, f64::total_cmp).1
}

/// The heuristic's outage rate for one candidate pilot power.
pub fn heuristic_objective(
    code: &OstbcCode,
    budget: &EnergyBudget,
    tau_p: usize,
    eps: f64,
    beta_eps: f64,
    rho_p: f64,
) -> Result<f64> {
    let rho_d = budget.data_power(tau_p, rho_p)?;
    let chi = ChiSquared::new(2.0 * code.n_t as f64).map_err(|e| Error::Numerical(e.to_string()))?;
    let h_norm2 = estimate_norm_scale(beta_eps, code.n_t, tau_p, rho_p) * chi.inverse_cdf(eps);
    let snr = snr_square(h_norm2, beta_eps, code.n_t, code.tau_d, tau_p, rho_p, rho_d, code.symbol_energy());
    Ok(prelog(budget.coherence, tau_p as f64)? * code.code_rate() * snr.ln_1p() / std::f64::consts::LN_2)
}

/// Maximizes `f` on `[lo, hi]` by golden-section search.
pub fn golden_section_max(mut f: impl FnMut(f64) -> f64, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd { (c, fc) } else { (d, fd) }
}

/// Optimal pilot power with `τ_p = n_t` for users placed by `geometry`.
pub fn optimize_pilot_power(code: &OstbcCode, tau_c: f64, eps: f64, geometry: &UserGeometry) -> Result<PilotPowers> {
    let beta_eps = beta_percentile(geometry, eps)?;
    Ok(optimize_pilot_power_traced(code, &EnergyBudget::new(tau_c), code.n_t, eps, beta_eps)?.0)
}

/// Golden-section search over `log10 ρ_p ∈ [−2, min(4, log10 ρ_p,max)]`,
/// restarted on three equal sub-brackets.
pub fn optimize_pilot_power_traced(
    code: &OstbcCode,
    budget: &EnergyBudget,
    tau_p: usize,
    eps: f64,
    beta_eps: f64,
) -> Result<(PilotPowers, OptimizerTrace)> {
    if tau_p < code.n_t || (tau_p as f64) >= budget.coherence {
        return Err(Error::invalid(format!(
            "infeasible budget: tau_p = {tau_p}, n_t = {}, tau_c = {}",
            code.n_t, budget.coherence
        )));
    }
    if !(beta_eps > 0.0) {
        return Err(Error::invalid("percentile gain must be positive"));
    }
    let lo = -2.0;
    let hi = 4f64.min((budget.max_pilot_power(tau_p) * (1.0 - 1e-9)).log10());
    if hi <= lo {
        return Err(Error::invalid("pilot power bracket is empty"));
    }
    let mut trace = OptimizerTrace::default();
    let mut eval = |x: f64| {
        let rho_p = 10f64.powf(x);
        let obj = heuristic_objective(code, budget, tau_p, eps, beta_eps, rho_p).unwrap_or(f64::NEG_INFINITY);
        let rho_d = budget.data_power(tau_p, rho_p).unwrap_or(0.0);
        trace.points.push(TracePoint { rho_p, rho_d, objective: obj });
        obj
    };
    let tol = (1.0 + 1e-4f64).log10();
    let width = (hi - lo) / 3.0;
    let mut best = (lo, f64::NEG_INFINITY);
    for i in 0..3 {
        let a = lo + width * i as f64;
        let cand = golden_section_max(&mut eval, a, a + width, tol);
        if cand.1 > best.1 {
            best = cand;
        }
    }
    let rho_p = 10f64.powf(best.0);
    let rho_d = budget.data_power(tau_p, rho_p)?;
    Ok((PilotPowers { tau_p, rho_p, rho_d }, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::{make_code, CodeId};

    #[test]
    fn budget_accounting() {
        let b = EnergyBudget::new(256.0);
        let rho_d = b.data_power(8, 10.0).unwrap();
        assert!(b.residual(8, 10.0, rho_d).abs() < 1e-12);
        assert!(b.data_power(8, 32.0).is_err());
        assert!(b.data_power(256, 0.5).is_err());
    }

    #[test]
    fn disk_percentile_matches_monte_carlo() {
        let g = UserGeometry::disk();
        let mut rng = SimRng::seed_from_u64(9);
        for eps in [0.01, 0.5] {
            let closed = beta_percentile(&g, eps).unwrap();
            let d = (1.0 - eps * (1.0 - 0.035f64.powi(2))).sqrt();
            assert!((closed - g.beta_at(d)).abs() < 1e-15);
            let mc = beta_percentile_monte_carlo(&g, eps, 400_000, &mut rng);
            assert!((mc / closed - 1.0).abs() < 0.02, "{eps}: {mc} vs {closed}");
        }
        let near_one = beta_percentile(&g, 1.0 - 1e-12).unwrap();
        assert!((near_one / g.beta_at(0.035) - 1.0).abs() < 1e-6);
        assert!(beta_percentile(&g, 0.0).is_err());
    }

    #[test]
    fn golden_section_finds_parabola_peak() {
        let (x, fx) = golden_section_max(|x| -(x - 0.3).powi(2), -2.0, 4.0, 1e-9);
        assert!((x - 0.3).abs() < 1e-6 && fx.abs() < 1e-12);
    }

    #[test]
    fn optimum_matches_dense_grid() {
        let g = UserGeometry::disk();
        let beta = beta_percentile(&g, 0.01).unwrap();
        let budget = EnergyBudget::new(256.0);
        for id in CodeId::ALL {
            let code = make_code(id);
            let (p, _) = optimize_pilot_power_traced(&code, &budget, code.n_t, 0.01, beta).unwrap();
            let hi = (budget.max_pilot_power(code.n_t) * (1.0 - 1e-9)).log10().min(4.0);
            let grid_best = (0..=20_000)
                .map(|i| -2.0 + (hi + 2.0) * i as f64 / 20_000.0)
                .map(|x| heuristic_objective(&code, &budget, code.n_t, 0.01, beta, 10f64.powf(x)).unwrap_or(f64::MIN))
                .fold(f64::MIN, f64::max);
            let got = heuristic_objective(&code, &budget, code.n_t, 0.01, beta, p.rho_p).unwrap();
            assert!(got >= grid_best - 1e-9, "{id}: {got} < {grid_best}");
            assert!(p.rho_p > p.rho_d, "{id}");
            assert!(budget.residual(p.tau_p, p.rho_p, p.rho_d).abs() < 1e-12);
        }
    }

    #[test]
    fn tight_budget_and_smoothness() {
        let code = make_code(CodeId::C2);
        let g = UserGeometry::disk();
        // τ_c = τ_p + 1: one data use.
        let p = optimize_pilot_power(&code, 3.0, 0.01, &g).unwrap();
        assert!(EnergyBudget::new(3.0).residual(2, p.rho_p, p.rho_d).abs() < 1e-12);
        assert!(p.rho_d > 0.0);
        for eps in [0.01, 0.1, 0.5, 0.9, 0.99] {
            let a = optimize_pilot_power(&code, 256.0, eps, &g).unwrap();
            let b = optimize_pilot_power(&code, 256.0, eps + 1e-3, &g).unwrap();
            assert!((a.rho_p / b.rho_p - 1.0).abs() < 0.1, "eps {eps}");
        }
    }

    #[test]
    fn trace_records_evaluations() {
        let code = make_code(CodeId::C4);
        let beta = beta_percentile(&UserGeometry::disk(), 0.01).unwrap();
        let (_, trace) = optimize_pilot_power_traced(&code, &EnergyBudget::new(256.0), 4, 0.01, beta).unwrap();
        assert!(trace.points.len() > 30);
        assert!(trace.to_csv().starts_with("rho_p,rho_d,objective\n"));
    }
}
