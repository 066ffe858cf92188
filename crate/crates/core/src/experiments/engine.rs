//! Per-trial link simulation and the deterministic parallel trial loop.

use rayon::prelude::*;

use crate::channel::{place_cell_edge_user, place_user, ExponentialChannel, UserGeometry, UserPlacement};
use crate::codes::OstbcCode;
use crate::error::{Error, Result};
use crate::linalg::{complex_gaussian_vec, norm_sqr, CMat, CVec, C64};
use crate::link::{
    conditional_moments, ls_estimate, pilot_observation, scaled_identity, snr_general, snr_general_correlated,
    symbol_snr_from_moments, symbol_snr_iid, PilotConfig,
};
use crate::multicell::{link_geometry, mc_estimate, mc_symbol_snr, CellGrid, MultiCellStatistics};
use crate::optimizer::PilotPowers;
use crate::rng::{trial_rng, SimRng};

/// Environment variable overriding the worker count.
pub const WORKERS_ENV: &str = "SIM_WORKERS";

/// Reads [`WORKERS_ENV`]; unset or empty means "use the default pool".
pub fn workers_from_env() -> Result<Option<usize>> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) if !v.trim().is_empty() => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::Config(format!("{WORKERS_ENV} must be a positive integer, got '{v}'"))),
        },
        _ => Ok(None),
    }
}

/// Runs `f` inside a pool of `workers` threads, or the global pool.
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("cannot start {n} workers: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Evaluates `f` for trials `0..n`, each with its own derived generator, and
/// returns the results in trial order.
pub fn run_trials<T, F>(n: usize, seed: u64, stream: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut SimRng) -> Result<T> + Sync,
{
    (0..n)
        .into_par_iter()
        .map(|i| f(&mut trial_rng(seed, stream, i as u64)))
        .collect()
}

/// Small-scale fading model of the physical array.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChannelModel {
    Iid,
    Exponential { magnitude: f64 },
}

impl ChannelModel {
    pub fn from_magnitude(magnitude: f64) -> Self {
        if magnitude == 0.0 { ChannelModel::Iid } else { ChannelModel::Exponential { magnitude } }
    }
}

/// A physical array seen through a DRM: samples port-level channels and
/// their covariances.
#[derive(Debug, Clone)]
pub struct PortChannel {
    pub phi: CMat,
    pub model: ChannelModel,
    exp: Option<ExponentialChannel>,
    phi_gram: CMat,
    /// `s` when `Φ Φ^H = s I`.
    gram_scale: Option<f64>,
}

impl PortChannel {
    pub fn new(phi: CMat, model: ChannelModel) -> Result<Self> {
        let exp = match model {
            ChannelModel::Iid => None,
            ChannelModel::Exponential { magnitude } => Some(ExponentialChannel::new(phi.ncols(), magnitude)?),
        };
        let phi_gram = &phi * phi.adjoint();
        let gram_scale = scaled_identity(&phi_gram);
        Ok(Self { phi, model, exp, phi_gram, gram_scale })
    }

    pub fn n_t(&self) -> usize {
        self.phi.nrows()
    }

    /// `h = Φ g` for a user with gain `beta` at broadside angle `phase`.
    pub fn sample(&self, beta: f64, phase: f64, rng: &mut SimRng) -> CVec {
        let g = match &self.exp {
            None => complex_gaussian_vec(rng, self.phi.ncols()) * C64::new(beta.max(0.0).sqrt(), 0.0),
            Some(ch) => ch.sample(beta, phase, rng),
        };
        &self.phi * g
    }

    /// `C_h = Φ C_g Φ^H`.
    pub fn covariance(&self, beta: f64, phase: f64) -> Result<CMat> {
        match &self.exp {
            None => Ok(self.phi_gram.scale(beta)),
            Some(ch) => ch.project_covariance(&self.phi, beta, phase),
        }
    }

    /// `Some(s β)` when `C_h` is a scaled identity for every user.
    fn iid_gain(&self, beta: f64) -> Option<f64> {
        match self.model {
            ChannelModel::Iid => self.gram_scale.map(|s| s * beta),
            ChannelModel::Exponential { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Placement {
    /// Uniform over the cell area outside the exclusion disk.
    Uniform,
    /// Uniform in angle on the unit circle.
    CellEdge,
}

/// SNR values of one coherence interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkSample {
    /// Worst per-symbol SNR of the OSTBC receiver.
    pub snr_ostbc: f64,
    /// Structure-free bound driven by the Bayes estimate.
    pub snr_general: f64,
}

/// A single-cell broadcast link: code, DRM, channel law, user law, powers.
#[derive(Debug, Clone)]
pub struct LinkScenario {
    pub code: OstbcCode,
    pub channel: PortChannel,
    pub geometry: UserGeometry,
    pub placement: Placement,
    pub powers: PilotPowers,
    pilots: PilotConfig,
}

impl LinkScenario {
    pub fn new(
        code: OstbcCode,
        channel: PortChannel,
        geometry: UserGeometry,
        placement: Placement,
        powers: PilotPowers,
    ) -> Result<Self> {
        if channel.n_t() != code.n_t {
            return Err(Error::dims(code.n_t, channel.n_t()));
        }
        geometry.validate()?;
        let pilots = PilotConfig::new(code.n_t, powers.tau_p, powers.rho_p)?;
        Ok(Self { code, channel, geometry, placement, powers, pilots })
    }

    pub fn draw_user(&self, rng: &mut SimRng) -> UserPlacement {
        match self.placement {
            Placement::Uniform => place_user(&self.geometry, rng),
            Placement::CellEdge => place_cell_edge_user(&self.geometry, rng),
        }
    }

    /// One coherence interval for a given user: fading, pilot phase, LS
    /// estimate and both SNR bounds.
    pub fn interval(&self, user: &UserPlacement, rng: &mut SimRng) -> Result<LinkSample> {
        let h = self.channel.sample(user.beta, user.phase, rng);
        let y = pilot_observation(&self.pilots, &h, rng);
        let h_hat = ls_estimate(&y, &self.pilots.matrix, self.pilots.rho_p)?;
        let sigma2 = self.pilots.error_variance();
        let (n_t, rho_d) = (self.code.n_t, self.powers.rho_d);
        if let (Some(beta), Some(_)) = (self.channel.iid_gain(user.beta), self.code.gram_scale) {
            let n2 = norm_sqr(&h_hat);
            let snr_ostbc = symbol_snr_iid(&self.code, beta, sigma2, n2, rho_d)?.snr_ostbc;
            let k = beta / (beta + sigma2);
            let snr_general = snr_general(k * k * n2, beta, n_t, self.powers.tau_p, self.powers.rho_p, rho_d);
            return Ok(LinkSample { snr_ostbc, snr_general });
        }
        let c_h = self.channel.covariance(user.beta, user.phase)?;
        let m = conditional_moments(&c_h, &self.pilots.error_covariance(), &h_hat)?;
        let snr_ostbc = symbol_snr_from_moments(&self.code, &m, &h_hat, rho_d).snr_ostbc;
        let h_mmse = &h_hat - &m.mean;
        let snr_general = snr_general_correlated(norm_sqr(&h_mmse), m.r.trace().re, n_t, rho_d);
        Ok(LinkSample { snr_ostbc, snr_general })
    }

    /// A fresh user and one interval.
    pub fn trial(&self, rng: &mut SimRng) -> Result<LinkSample> {
        let user = self.draw_user(rng);
        self.interval(&user, rng)
    }
}

/// A terminal in the centre cell of a pilot-reuse layout.
#[derive(Debug, Clone)]
pub struct MultiCellScenario {
    pub code: OstbcCode,
    pub channel: PortChannel,
    pub grid: CellGrid,
    pub geometry: UserGeometry,
    pub powers: PilotPowers,
    pilots: PilotConfig,
}

impl MultiCellScenario {
    pub fn new(
        code: OstbcCode,
        channel: PortChannel,
        grid: CellGrid,
        geometry: UserGeometry,
        powers: PilotPowers,
    ) -> Result<Self> {
        if channel.n_t() != code.n_t {
            return Err(Error::dims(code.n_t, channel.n_t()));
        }
        geometry.validate()?;
        let pilots = PilotConfig::new(code.n_t, powers.tau_p, powers.rho_p)?;
        Ok(Self { code, channel, grid, geometry, powers, pilots })
    }

    /// Worst per-symbol SNR for one user and one interval.
    pub fn trial(&self, rng: &mut SimRng) -> Result<f64> {
        let user = place_user(&self.geometry, rng);
        let links = link_geometry(&self.grid, &self.geometry, user.position);
        let (b0, a0) = links[0];
        let h = self.channel.sample(b0, a0, rng);
        let contaminators: Vec<CVec> = self
            .grid
            .contaminating
            .iter()
            .map(|&k| self.channel.sample(links[k].0, links[k].1, rng))
            .collect();
        let h_hat = mc_estimate(&self.pilots, &h, &contaminators, rng)?;
        let cov = |k: usize| self.channel.covariance(links[k].0, links[k].1);
        let stats = MultiCellStatistics {
            c_h: cov(0)?,
            c_e: self.pilots.error_covariance(),
            contaminating: self.grid.contaminating.iter().map(|&k| cov(k)).collect::<Result<_>>()?,
            others: self
                .grid
                .interferers()
                .filter(|&k| !self.grid.is_contaminating(k))
                .map(cov)
                .collect::<Result<_>>()?,
        };
        Ok(mc_symbol_snr(&self.code, &stats, &h_hat, self.powers.rho_d)?.snr_ostbc)
    }
}
