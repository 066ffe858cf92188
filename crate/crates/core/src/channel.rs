//! Channel statistics, large-scale fading and user placement.

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{complex_gaussian, complex_gaussian_vec, psd_factor, CMat, CVec, C64, ZERO};

/// Spatial correlation model of the physical array channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Correlation {
    Iid,
    /// `C_g(i, j) = β |r|^{|j−i|} e^{i arg(r) (j−i)}`.
    Exponential { magnitude: f64, phase: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceSpec {
    pub antennas: usize,
    pub beta: f64,
    pub kind: Correlation,
}

pub fn exp_covariance(spec: &CovarianceSpec) -> Result<CMat> {
    let m = spec.antennas;
    if spec.beta < 0.0 || !spec.beta.is_finite() {
        return Err(Error::invalid(format!("beta must be finite and non-negative, got {}", spec.beta)));
    }
    match spec.kind {
        Correlation::Iid => Ok(CMat::identity(m, m).scale(spec.beta)),
        Correlation::Exponential { magnitude, phase } => {
            check_magnitude(magnitude)?;
            Ok(CMat::from_fn(m, m, |i, j| {
                let lag = j as f64 - i as f64;
                C64::from_polar(spec.beta * magnitude.powf(lag.abs()), phase * lag)
            }))
        }
    }
}

fn check_magnitude(magnitude: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&magnitude) {
        return Err(Error::invalid(format!("|r| must lie in [0, 1], got {magnitude}")));
    }
    Ok(())
}

/// Draws `g ~ CN(0, C_g)` through an eigen-factor of `C_g`.
pub fn sample_channel<R: Rng + ?Sized>(c_g: &CMat, rng: &mut R) -> Result<CVec> {
    let f = psd_factor(c_g)?;
    Ok(&f * complex_gaussian_vec(rng, c_g.nrows()))
}

/// O(M) sampling and projection for the exponential model.
///
/// With `D = diag(e^{−i arg(r) m})`, `C_g = β D K D^H` where `K` is the real
/// Kac–Murdock–Szegő matrix `|r|^{|i−j|}`, i.e. the covariance of a stationary
/// AR(1) sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentialChannel {
    pub antennas: usize,
    pub magnitude: f64,
}

impl ExponentialChannel {
    pub fn new(antennas: usize, magnitude: f64) -> Result<Self> {
        check_magnitude(magnitude)?;
        Ok(Self { antennas, magnitude })
    }

    pub fn sample<R: Rng + ?Sized>(&self, beta: f64, phase: f64, rng: &mut R) -> CVec {
        let a = self.magnitude;
        let innov = (1.0 - a * a).max(0.0).sqrt();
        let scale = beta.max(0.0).sqrt();
        let mut x = ZERO;
        CVec::from_fn(self.antennas, |m, _| {
            let z = complex_gaussian(rng);
            x = if m == 0 { z } else { x * a + z * innov };
            x * C64::from_polar(scale, -phase * m as f64)
        })
    }

    /// `Φ C_g Φ^H` in O(n_t² M) without forming `C_g`.
    pub fn project_covariance(&self, phi: &CMat, beta: f64, phase: f64) -> Result<CMat> {
        let m = self.antennas;
        if phi.ncols() != m {
            return Err(Error::dims(format!("{m} columns"), phi.ncols()));
        }
        let n = phi.nrows();
        let a = self.magnitude;
        let rot: Vec<C64> = (0..m).map(|i| C64::from_polar(1.0, -phase * i as f64)).collect();
        // psi = Φ D, stored row-major for cache-friendly filtering.
        let psi: Vec<Vec<C64>> = (0..n)
            .map(|k| (0..m).map(|i| phi[(k, i)] * rot[i]).collect())
            .collect();
        // w_l = K conj(psi_l) via a forward and a backward first-order filter.
        let mut w = vec![vec![ZERO; m]; n];
        let mut fwd = vec![ZERO; m];
        for (l, psi_l) in psi.iter().enumerate() {
            let mut acc = ZERO;
            for i in 0..m {
                acc = acc * a + psi_l[i].conj();
                fwd[i] = acc;
            }
            let mut acc = ZERO;
            for i in (0..m).rev() {
                let v = psi_l[i].conj();
                acc = acc * a + v;
                w[l][i] = fwd[i] + acc - v;
            }
        }
        let mut out = CMat::zeros(n, n);
        for k in 0..n {
            for l in k..n {
                let s: C64 = psi[k].iter().zip(&w[l]).map(|(p, q)| p * q).sum::<C64>() * beta;
                out[(k, l)] = s;
                out[(l, k)] = s.conj();
            }
            out[(k, k)] = C64::new(out[(k, k)].re, 0.0);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellShape {
    Disk,
    /// Flat-topped regular hexagon, vertices at multiples of 60°.
    Hexagon,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserGeometry {
    pub shape: CellShape,
    pub exclusion_radius: f64,
    pub pathloss_exponent: f64,
    pub cell_edge_snr_db: f64,
}

impl UserGeometry {
    pub fn disk() -> Self {
        Self {
            shape: CellShape::Disk,
            exclusion_radius: 0.035,
            pathloss_exponent: 3.8,
            cell_edge_snr_db: -5.0,
        }
    }

    pub fn hexagon() -> Self {
        Self { shape: CellShape::Hexagon, ..Self::disk() }
    }

    /// Large-scale gain at unit distance.
    pub fn beta0(&self) -> f64 {
        10f64.powf(self.cell_edge_snr_db / 10.0)
    }

    pub fn beta_at(&self, distance: f64) -> f64 {
        self.beta0() * distance.powf(-self.pathloss_exponent)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.exclusion_radius >= 0.0 && self.exclusion_radius < 0.5) {
            return Err(Error::invalid("exclusion radius must lie in [0, 0.5)"));
        }
        if self.pathloss_exponent <= 0.0 {
            return Err(Error::invalid("pathloss exponent must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserPlacement {
    pub position: [f64; 2],
    pub distance: f64,
    pub beta: f64,
    /// Azimuth seen from the array broadside (the +y axis).
    pub phase: f64,
}

impl UserPlacement {
    fn at(geometry: &UserGeometry, x: f64, y: f64) -> Self {
        let distance = x.hypot(y);
        Self {
            position: [x, y],
            distance,
            beta: geometry.beta_at(distance),
            phase: broadside_angle(x, y),
        }
    }
}

/// Angle of `(x, y)` from the +y axis, positive towards +x.
pub fn broadside_angle(x: f64, y: f64) -> f64 {
    x.atan2(y)
}

pub fn point_in_hexagon(x: f64, y: f64) -> bool {
    let s3 = 3f64.sqrt();
    y.abs() <= s3 / 2.0 && s3 * x.abs() + y.abs() <= s3
}

/// Uniform position over the cell minus the exclusion disk.
pub fn place_user<R: Rng + ?Sized>(geometry: &UserGeometry, rng: &mut R) -> UserPlacement {
    let a = geometry.exclusion_radius;
    match geometry.shape {
        CellShape::Disk => {
            let u: f64 = rng.random();
            let d = (a * a + u * (1.0 - a * a)).sqrt();
            let ang = rng.random::<f64>() * std::f64::consts::TAU;
            UserPlacement::at(geometry, d * ang.cos(), d * ang.sin())
        }
        CellShape::Hexagon => {
            let h = 3f64.sqrt() / 2.0;
            loop {
                let x = rng.random_range(-1.0..1.0);
                let y = rng.random_range(-h..h);
                if point_in_hexagon(x, y) && x.hypot(y) >= a {
                    return UserPlacement::at(geometry, x, y);
                }
            }
        }
    }
}

/// Uniform position on the unit circle, the disk's cell edge.
pub fn place_cell_edge_user<R: Rng + ?Sized>(geometry: &UserGeometry, rng: &mut R) -> UserPlacement {
    let ang = rng.random::<f64>() * std::f64::consts::TAU;
    UserPlacement::at(geometry, ang.cos(), ang.sin())
}
