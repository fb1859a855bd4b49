//! Discretized phase-space rectangle.
//!
//! The grid is periodic in both directions. Sample `(i, j)` sits at
//! `x = x_min + i*dx`, `p = p_min + j*dp`; the upper edges are excluded.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

const MIN_POINTS: usize = 16;

/// Raw grid parameters as they appear in a run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub nx: usize,
    pub np: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub hbar: f64,
    pub mass: f64,
}

/// Validated grid with precomputed axes and conjugate frequencies.
///
/// `k` is conjugate to `x` and `s` is conjugate to `p`; both are stored in
/// standard FFT order (zero, positive, then negative frequencies).
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpaceGrid {
    config: GridConfig,
    dx: f64,
    dp: f64,
    x: Vec<f64>,
    p: Vec<f64>,
    k: Vec<f64>,
    s: Vec<f64>,
}

fn check_size(name: &str, n: usize) -> Result<()> {
    if !n.is_power_of_two() {
        return Err(Error::config(name, format!("{name} must be a power of two (got {n})")));
    }
    if n < MIN_POINTS {
        return Err(Error::config(name, format!("{name} must be at least {MIN_POINTS} (got {n})")));
    }
    Ok(())
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::config(name, format!("{name} must be positive (got {v})")));
    }
    Ok(())
}

/// Angular frequencies of an `n`-point transform with sample spacing `h`, FFT order.
pub fn fft_frequencies(n: usize, h: f64) -> Vec<f64> {
    let base = 2.0 * PI / (n as f64 * h);
    (0..n)
        .map(|j| {
            let m = if j < n / 2 { j as isize } else { j as isize - n as isize };
            m as f64 * base
        })
        .collect()
}

impl PhaseSpaceGrid {
    pub fn new(config: GridConfig) -> Result<Self> {
        check_size("nx", config.nx)?;
        check_size("np", config.np)?;
        if !(config.x_min.is_finite() && config.x_max.is_finite() && config.x_max > config.x_min) {
            return Err(Error::config("x_max", "x_max must exceed x_min"));
        }
        if !(config.p_min.is_finite() && config.p_max.is_finite() && config.p_max > config.p_min) {
            return Err(Error::config("p_max", "p_max must exceed p_min"));
        }
        check_positive("hbar", config.hbar)?;
        check_positive("mass", config.mass)?;

        let dx = (config.x_max - config.x_min) / config.nx as f64;
        let dp = (config.p_max - config.p_min) / config.np as f64;
        let x = (0..config.nx).map(|i| config.x_min + i as f64 * dx).collect();
        let p = (0..config.np).map(|j| config.p_min + j as f64 * dp).collect();
        let k = fft_frequencies(config.nx, dx);
        let s = fft_frequencies(config.np, dp);
        Ok(Self { config, dx, dp, x, p, k, s })
    }

    /// Symmetric square-ish grid centred on the origin; convenient in tests.
    pub fn symmetric(n: usize, x_half: f64, p_half: f64, hbar: f64, mass: f64) -> Result<Self> {
        Self::new(GridConfig { nx: n, np: n, x_min: -x_half, x_max: x_half, p_min: -p_half, p_max: p_half, hbar, mass })
    }

    pub fn config(&self) -> &GridConfig {
        &self.config
    }
    pub fn nx(&self) -> usize {
        self.config.nx
    }
    pub fn np(&self) -> usize {
        self.config.np
    }
    pub fn len(&self) -> usize {
        self.config.nx * self.config.np
    }
    pub fn is_empty(&self) -> bool {
        false
    }
    pub fn dx(&self) -> f64 {
        self.dx
    }
    pub fn dp(&self) -> f64 {
        self.dp
    }
    pub fn cell_area(&self) -> f64 {
        self.dx * self.dp
    }
    pub fn hbar(&self) -> f64 {
        self.config.hbar
    }
    pub fn mass(&self) -> f64 {
        self.config.mass
    }
    pub fn x(&self) -> &[f64] {
        &self.x
    }
    pub fn p(&self) -> &[f64] {
        &self.p
    }
    /// Wavenumbers conjugate to `x`, FFT order.
    pub fn k(&self) -> &[f64] {
        &self.k
    }
    /// Frequencies conjugate to `p`, FFT order.
    pub fn s(&self) -> &[f64] {
        &self.s
    }
    /// Non-negative `s` frequencies of the real-to-complex transform along `p`.
    pub fn s_half(&self) -> &[f64] {
        &self.s[..=self.np() / 2]
    }
    /// Non-negative `k` frequencies of the real-to-complex transform along `x`.
    pub fn k_half(&self) -> &[f64] {
        &self.k[..=self.nx() / 2]
    }
    pub fn s_nyquist(&self) -> f64 {
        PI / self.dp
    }
    pub fn k_nyquist(&self) -> f64 {
        PI / self.dx
    }

    #[inline]
    pub fn index(&self, ix: usize, ip: usize) -> usize {
        ix * self.config.np + ip
    }

    /// Copy of this grid with a different `hbar`.
    pub fn with_hbar(&self, hbar: f64) -> Result<Self> {
        let mut c = self.config.clone();
        c.hbar = hbar;
        Self::new(c)
    }

    /// Same extents, twice the points in each direction.
    pub fn refined(&self) -> Result<Self> {
        let mut c = self.config.clone();
        c.nx *= 2;
        c.np *= 2;
        Self::new(c)
    }
}

/// Validates a configuration and builds the grid.
pub fn make_grid(config: GridConfig) -> Result<PhaseSpaceGrid> {
    PhaseSpaceGrid::new(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> GridConfig {
        GridConfig { nx: 256, np: 256, x_min: -10.0, x_max: 10.0, p_min: -10.0, p_max: 10.0, hbar: 1.0, mass: 1.0 }
    }

    #[test]
    fn spacing_of_reference_grid() {
        let g = make_grid(base()).unwrap();
        assert_eq!(g.dx(), 0.078125);
        assert_eq!(g.dp(), 0.078125);
        assert_eq!(g.x()[0], -10.0);
        assert_eq!(g.p()[128], 0.0);
    }

    #[test]
    fn rejects_non_power_of_two() {
        let err = make_grid(GridConfig { nx: 100, ..base() }).unwrap_err();
        assert!(err.to_string().contains("nx must be a power of two"), "{err}");
    }

    #[test]
    fn rejects_small_and_nonpositive() {
        assert!(make_grid(GridConfig { np: 8, ..base() }).is_err());
        let err = make_grid(GridConfig { hbar: 0.0, ..base() }).unwrap_err();
        assert!(err.to_string().contains("hbar must be positive"), "{err}");
        assert!(make_grid(GridConfig { mass: -1.0, ..base() }).is_err());
        assert!(make_grid(GridConfig { x_max: -10.0, ..base() }).is_err());
    }

    #[test]
    fn frequencies_in_fft_order() {
        let f = fft_frequencies(8, 0.5);
        let b = 2.0 * PI / 4.0;
        assert_eq!(f, vec![0.0, b, 2.0 * b, 3.0 * b, -4.0 * b, -3.0 * b, -2.0 * b, -b]);
    }
}
