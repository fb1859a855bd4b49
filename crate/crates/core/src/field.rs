//! Wigner fields, initial states, marginals and moments.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::PhaseSpaceGrid;

/// Relative boundary tail allowed for a freshly built state.
pub const BOUNDARY_TAIL: f64 = 1e-12;

/// Real distribution sampled on a grid, row-major with `x` outer and `p` inner.
#[derive(Debug, Clone)]
pub struct WignerField {
    grid: Arc<PhaseSpaceGrid>,
    values: Vec<f64>,
}

impl WignerField {
    /// Wraps raw samples. Fails on a length mismatch or non-finite entries.
    pub fn from_values(grid: Arc<PhaseSpaceGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Contract(format!("field has {} samples, grid expects {}", values.len(), grid.len())));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Contract(format!("non-finite sample at flat index {i}")));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Arc<PhaseSpaceGrid>) -> Self {
        let n = grid.len();
        Self { grid, values: vec![0.0; n] }
    }

    pub fn grid(&self) -> &PhaseSpaceGrid {
        &self.grid
    }
    pub fn grid_arc(&self) -> &Arc<PhaseSpaceGrid> {
        &self.grid
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn at(&self, ix: usize, ip: usize) -> f64 {
        self.values[self.grid.index(ix, ip)]
    }

    /// Row of all `p` samples at position index `ix`.
    pub fn row(&self, ix: usize) -> &[f64] {
        let np = self.grid.np();
        &self.values[ix * np..(ix + 1) * np]
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_area()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// L2 distance `sqrt(∫∫(W-V)² dx dp)`.
    pub fn l2_distance(&self, other: &WignerField) -> Result<f64> {
        self.check_same_grid(other)?;
        let s: f64 = self.values.iter().zip(&other.values).map(|(a, b)| (a - b) * (a - b)).sum();
        Ok((s * self.grid.cell_area()).sqrt())
    }

    pub fn l2_norm(&self) -> f64 {
        let s: f64 = self.values.iter().map(|a| a * a).sum();
        (s * self.grid.cell_area()).sqrt()
    }

    pub(crate) fn check_same_grid(&self, other: &WignerField) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid {
            Ok(())
        } else {
            Err(Error::Mismatch("fields live on different grids".into()))
        }
    }

    /// Position and momentum densities, each integrating to the field norm.
    pub fn marginals(&self) -> (Vec<f64>, Vec<f64>) {
        let g = &self.grid;
        let (nx, np) = (g.nx(), g.np());
        let mut rho_x = vec![0.0; nx];
        let mut rho_p = vec![0.0; np];
        for (ix, rx) in rho_x.iter_mut().enumerate() {
            let row = self.row(ix);
            *rx = row.iter().sum::<f64>() * g.dp();
            for (acc, w) in rho_p.iter_mut().zip(row) {
                *acc += w;
            }
        }
        for v in &mut rho_p {
            *v *= g.dx();
        }
        (rho_x, rho_p)
    }

    /// First and second moments, normalized by the field norm.
    pub fn moments(&self) -> Moments {
        let g = &self.grid;
        let (x, p) = (g.x(), g.p());
        let mut m0 = 0.0;
        let (mut mx, mut mp, mut mxx, mut mpp, mut mxp) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (ix, &xi) in x.iter().enumerate() {
            let row = self.row(ix);
            let (mut r0, mut r1, mut r2) = (0.0, 0.0, 0.0);
            for (w, &pj) in row.iter().zip(p) {
                r0 += w;
                r1 += w * pj;
                r2 += w * pj * pj;
            }
            m0 += r0;
            mx += xi * r0;
            mxx += xi * xi * r0;
            mp += r1;
            mxp += xi * r1;
            mpp += r2;
        }
        let area = g.cell_area();
        let norm = m0 * area;
        Moments { norm, mean_x: mx / m0, mean_p: mp / m0, x2: mxx / m0, p2: mpp / m0, xp: mxp / m0 }
    }
}

/// Raw moments `⟨x⟩, ⟨p⟩, ⟨x²⟩, ⟨p²⟩, ⟨xp⟩_sym` of a field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub norm: f64,
    pub mean_x: f64,
    pub mean_p: f64,
    pub x2: f64,
    pub p2: f64,
    pub xp: f64,
}

impl Moments {
    pub fn var_x(&self) -> f64 {
        self.x2 - self.mean_x * self.mean_x
    }
    pub fn var_p(&self) -> f64 {
        self.p2 - self.mean_p * self.mean_p
    }
    pub fn cov_xp(&self) -> f64 {
        self.xp - self.mean_x * self.mean_p
    }
    /// Covariance matrix `[[σxx, σxp], [σxp, σpp]]`.
    pub fn covariance(&self) -> [[f64; 2]; 2] {
        let c = self.cov_xp();
        [[self.var_x(), c], [c, self.var_p()]]
    }
}

/// Initial state description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialStateSpec {
    Gaussian {
        x0: f64,
        p0: f64,
        sigma_x: f64,
        sigma_p: f64,
        /// Symmetrized covariance `⟨δx δp⟩`.
        #[serde(default)]
        cov_xp: f64,
    },
    /// Superposition of two packets at `x0 ± separation/2`.
    Cat {
        x0: f64,
        separation: f64,
        p0: f64,
        sigma_x: f64,
        sigma_p: f64,
        #[serde(default)]
        phase: f64,
    },
}

impl InitialStateSpec {
    pub fn gaussian(x0: f64, p0: f64, sigma_x: f64, sigma_p: f64) -> Self {
        InitialStateSpec::Gaussian { x0, p0, sigma_x, sigma_p, cov_xp: 0.0 }
    }

    pub fn cat(separation: f64, sigma_x: f64, sigma_p: f64) -> Self {
        InitialStateSpec::Cat { x0: 0.0, separation, p0: 0.0, sigma_x, sigma_p, phase: 0.0 }
    }

    pub fn validate(&self, hbar: f64) -> Result<()> {
        let (sx, sp, c) = match *self {
            InitialStateSpec::Gaussian { sigma_x, sigma_p, cov_xp, .. } => (sigma_x, sigma_p, cov_xp),
            InitialStateSpec::Cat { separation, sigma_x, sigma_p, .. } => {
                if !(separation > 0.0 && separation.is_finite()) {
                    return Err(Error::config("separation", "separation must be positive"));
                }
                (sigma_x, sigma_p, 0.0)
            }
        };
        if !(sx > 0.0 && sx.is_finite()) {
            return Err(Error::config("sigma_x", "sigma_x must be positive"));
        }
        if !(sp > 0.0 && sp.is_finite()) {
            return Err(Error::config("sigma_p", "sigma_p must be positive"));
        }
        let det = sx * sx * sp * sp - c * c;
        let floor = 0.25 * hbar * hbar;
        if det < floor * (1.0 - 1e-9) {
            return Err(Error::Unphysical(format!("covariance determinant {det:e} is below (hbar/2)^2 = {floor:e}")));
        }
        Ok(())
    }
}

fn gaussian_values(grid: &PhaseSpaceGrid, x0: f64, p0: f64, sx: f64, sp: f64, c: f64) -> Vec<f64> {
    let (vxx, vpp) = (sx * sx, sp * sp);
    let det = vxx * vpp - c * c;
    let (ixx, ipp, ixp) = (vpp / det, vxx / det, -c / det);
    let pref = 1.0 / (2.0 * PI * det.sqrt());
    let mut out = Vec::with_capacity(grid.len());
    for &x in grid.x() {
        let dx = x - x0;
        for &p in grid.p() {
            let dp = p - p0;
            let q = ixx * dx * dx + 2.0 * ixp * dx * dp + ipp * dp * dp;
            out.push(pref * (-0.5 * q).exp());
        }
    }
    out
}

// Cat of two (possibly mixed) packets. A mixed component is a pure packet with
// extra momentum spread; the interference term is convolved accordingly, which
// lowers its fringe frequency and amplitude.
fn cat_values(grid: &PhaseSpaceGrid, x0: f64, sep: f64, p0: f64, sx: f64, sp: f64, phase: f64) -> Vec<f64> {
    let hbar = grid.hbar();
    let a = 0.5 * sep;
    let kappa = sep / hbar;
    let s0 = hbar / (2.0 * sx);
    let r = (s0 / sp).powi(2);
    let fringe_k = kappa * r;
    let fringe_amp = (-0.5 * kappa * kappa * s0 * s0 * (1.0 - r)).exp();
    let gx = |u: f64| (-0.5 * u * u / (sx * sx)).exp();
    let mut out = Vec::with_capacity(grid.len());
    for &x in grid.x() {
        let u = x - x0;
        let direct = gx(u - a) + gx(u + a);
        let cross = 2.0 * fringe_amp * gx(u);
        for &p in grid.p() {
            let q = p - p0;
            let gp = (-0.5 * q * q / (sp * sp)).exp();
            out.push(gp * (direct + cross * (q * fringe_k + phase).cos()));
        }
    }
    out
}

fn boundary_tail(grid: &PhaseSpaceGrid, v: &[f64]) -> f64 {
    let (nx, np) = (grid.nx(), grid.np());
    let mut m: f64 = 0.0;
    for ix in 0..nx {
        m = m.max(v[ix * np].abs()).max(v[ix * np + np - 1].abs());
    }
    for ip in 0..np {
        m = m.max(v[ip].abs()).max(v[(nx - 1) * np + ip].abs());
    }
    m
}

/// Builds a normalized initial field.
pub fn make_state(grid: Arc<PhaseSpaceGrid>, spec: &InitialStateSpec) -> Result<WignerField> {
    spec.validate(grid.hbar())?;
    let mut values = match *spec {
        InitialStateSpec::Gaussian { x0, p0, sigma_x, sigma_p, cov_xp } => {
            gaussian_values(&grid, x0, p0, sigma_x, sigma_p, cov_xp)
        }
        InitialStateSpec::Cat { x0, separation, p0, sigma_x, sigma_p, phase } => {
            cat_values(&grid, x0, separation, p0, sigma_x, sigma_p, phase)
        }
    };
    let peak = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let tail = boundary_tail(&grid, &values);
    if !(peak > 0.0) || tail > BOUNDARY_TAIL * peak {
        return Err(Error::DomainTooSmall(format!(
            "boundary tail {:.3e} of peak exceeds {BOUNDARY_TAIL:e}",
            if peak > 0.0 { tail / peak } else { f64::INFINITY }
        )));
    }
    let sum: f64 = values.iter().sum::<f64>() * grid.cell_area();
    if !(sum > 0.0) {
        return Err(Error::Resolution("state integrates to a non-positive value on this grid".into()));
    }
    for v in &mut values {
        *v /= sum;
    }
    Ok(WignerField { grid, values })
}
