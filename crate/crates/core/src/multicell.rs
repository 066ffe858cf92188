//! Nineteen-cell hexagonal layout with pilot reuse, pilot contamination and
//! inter-cell data interference.

use rand::Rng;

use crate::channel::{broadside_angle, UserGeometry};
use crate::codes::OstbcCode;
use crate::error::{Error, Result};
use crate::linalg::{complex_gaussian_vec, hermitian_part, hpd_inverse, norm_sqr, CMat, CVec, C64};
use crate::link::{assemble_snr, codeword_noise_power, correlated_coefficients, ls_estimate, PilotConfig, SnrBreakdown};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    /// Axial hex coordinates `(q, r)`.
    pub axial: (i32, i32),
    pub center: [f64; 2],
    /// Pilot group.
    pub color: usize,
}

#[derive(Debug, Clone)]
pub struct CellGrid {
    /// Home cell first, then the first and second rings.
    pub cells: Vec<Cell>,
    pub reuse: usize,
    /// Indices of interfering cells that share the home pilot.
    pub contaminating: Vec<usize>,
}

impl CellGrid {
    pub fn interferers(&self) -> std::ops::Range<usize> {
        1..self.cells.len()
    }

    pub fn is_contaminating(&self, k: usize) -> bool {
        self.contaminating.contains(&k)
    }

    /// Pilot length under this reuse factor.
    pub fn pilot_length(&self, n_t: usize) -> usize {
        self.reuse * n_t
    }
}

fn hex_distance(q: i32, r: i32) -> i32 {
    q.abs().max(r.abs()).max((q + r).abs())
}

/// Flat-topped hexagons of circumradius 1; neighbor centers are √3 apart.
pub fn build_grid(reuse: usize) -> Result<CellGrid> {
    let color_of: fn(i32, i32) -> usize = match reuse {
        1 => |_, _| 0,
        3 => |q, r| (q - r).rem_euclid(3) as usize,
        4 => |q, r| (q.rem_euclid(2) + 2 * r.rem_euclid(2)) as usize,
        _ => return Err(Error::invalid(format!("pilot reuse must be 1, 3 or 4, got {reuse}"))),
    };
    let mut axial: Vec<(i32, i32)> = Vec::new();
    for ring in 0..=2 {
        for q in -2..=2 {
            for r in -2..=2 {
                if hex_distance(q, r) == ring {
                    axial.push((q, r));
                }
            }
        }
    }
    let s3 = 3f64.sqrt();
    let cells: Vec<Cell> = axial
        .into_iter()
        .map(|(q, r)| Cell {
            axial: (q, r),
            center: [1.5 * q as f64, s3 * (r as f64 + q as f64 / 2.0)],
            color: color_of(q, r),
        })
        .collect();
    let home = cells[0].color;
    let contaminating = (1..cells.len()).filter(|&k| cells[k].color == home).collect();
    Ok(CellGrid { cells, reuse, contaminating })
}

/// Large-scale gain and incidence angle from every base station to a user in
/// the home cell.
pub fn link_geometry(grid: &CellGrid, geometry: &UserGeometry, position: [f64; 2]) -> Vec<(f64, f64)> {
    grid.cells
        .iter()
        .map(|cell| {
            let dx = position[0] - cell.center[0];
            let dy = position[1] - cell.center[1];
            (geometry.beta_at(dx.hypot(dy)), broadside_angle(dx, dy))
        })
        .collect()
}

/// Contaminated LS estimate `ĥ_MC = h + e + Σ_{k∈K} h_k` from a pilot
/// observation where contaminating cells send the home pilot synchronously.
pub fn mc_estimate<R: Rng + ?Sized>(
    pilots: &PilotConfig,
    h: &CVec,
    contaminators: &[CVec],
    rng: &mut R,
) -> Result<CVec> {
    let mut total = h.clone();
    for hk in contaminators {
        if hk.len() != h.len() {
            return Err(Error::dims(h.len(), hk.len()));
        }
        total += hk;
    }
    let y = &pilots.matrix * total * C64::new(pilots.rho_p.sqrt(), 0.0)
        + complex_gaussian_vec(rng, pilots.tau_p);
    ls_estimate(&y, &pilots.matrix, pilots.rho_p)
}

/// Second-order statistics seen by a terminal in the home cell.
#[derive(Debug, Clone)]
pub struct MultiCellStatistics {
    pub c_h: CMat,
    pub c_e: CMat,
    /// Effective-channel covariances of the cells sharing the home pilot.
    pub contaminating: Vec<CMat>,
    /// Covariances of the remaining interfering cells.
    pub others: Vec<CMat>,
}

/// Per-symbol SNR with contamination and data interference from every other
/// cell, each transmitting an independent codeword of the same code at `ρ_d`.
pub fn mc_symbol_snr(code: &OstbcCode, stats: &MultiCellStatistics, h_hat: &CVec, rho_d: f64) -> Result<SnrBreakdown> {
    let n = code.n_t;
    let all = std::iter::once(&stats.c_h)
        .chain(std::iter::once(&stats.c_e))
        .chain(&stats.contaminating)
        .chain(&stats.others);
    for m in all {
        if m.shape() != (n, n) {
            return Err(Error::dims(format!("{n}x{n}"), format!("{:?}", m.shape())));
        }
    }
    if h_hat.len() != n {
        return Err(Error::dims(n, h_hat.len()));
    }
    if !(rho_d >= 0.0 && rho_d.is_finite()) {
        return Err(Error::invalid(format!("data power must be non-negative, got {rho_d}")));
    }

    // ε = e + Σ_K h_k plays the role of the single-cell estimation error.
    let mut c_eps = stats.c_e.clone();
    for ck in &stats.contaminating {
        c_eps += ck;
    }
    let w = hpd_inverse(&(&stats.c_h + &c_eps))?;
    let wh = &w * h_hat;
    let mu = &c_eps * &wh;
    let cov = hermitian_part(&(&c_eps - &c_eps * &w * &c_eps));
    let s_eps = &cov + &mu * mu.adjoint();
    let t_eps = &mu * mu.transpose();
    let eta1: Vec<f64> = codeword_noise_power(code, h_hat, &s_eps, &t_eps)
        .into_iter()
        .map(|p| p * rho_d)
        .collect();
    let c = correlated_coefficients(code, h_hat, &mu, rho_d);

    let mut s_int = CMat::zeros(n, n);
    let mut t_int = CMat::zeros(n, n);
    for ck in &stats.others {
        s_int += ck;
    }
    for ck in &stats.contaminating {
        let mk = ck * &wh;
        s_int += hermitian_part(&(ck - ck * &w * ck)) + &mk * mk.adjoint();
        t_int += &mk * mk.transpose();
    }
    let interference: Vec<f64> = codeword_noise_power(code, h_hat, &s_int, &t_int)
        .into_iter()
        .map(|p| p * rho_d)
        .collect();
    Ok(assemble_snr(code, norm_sqr(h_hat), rho_d, c, &eta1, Some(&interference)))
}
