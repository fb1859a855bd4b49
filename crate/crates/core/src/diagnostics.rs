//! Observables, trajectory records and timescale detectors.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Write;

use crate::error::{Error, Result};
use crate::field::{Moments, WignerField};

const NORM_TOLERANCE: f64 = 1e-6;

fn check_normalized(field: &WignerField) -> Result<f64> {
    let n = field.norm();
    if !((n - 1.0).abs() <= NORM_TOLERANCE) {
        return Err(Error::Contract(format!("field norm {n} differs from 1 by more than {NORM_TOLERANCE:e}")));
    }
    Ok(n)
}

/// `(2πħ) ∫∫ W² dx dp` without the normalization check.
pub fn purity_unchecked(field: &WignerField) -> f64 {
    let g = field.grid();
    let s: f64 = field.values().iter().map(|w| w * w).sum();
    2.0 * PI * g.hbar() * s * g.cell_area()
}

pub fn purity(field: &WignerField) -> Result<f64> {
    check_normalized(field)?;
    Ok(purity_unchecked(field))
}

/// Linear entropy `-ln(purity)`.
pub fn linear_entropy(field: &WignerField) -> Result<f64> {
    entropy_from_purity(purity(field)?)
}

pub fn entropy_from_purity(purity: f64) -> Result<f64> {
    if !(purity > 0.0) {
        return Err(Error::Contract(format!("purity {purity} is not positive")));
    }
    Ok(-purity.ln())
}

/// `∫∫ |W| dx dp - 1`.
pub fn negativity_volume(field: &WignerField) -> f64 {
    let g = field.grid();
    field.values().iter().map(|w| w.abs()).sum::<f64>() * g.cell_area() - 1.0
}

/// Eigenvalues of a symmetric 2×2 matrix, ascending.
pub fn eigenvalues_2x2(m: [[f64; 2]; 2]) -> [f64; 2] {
    let tr = m[0][0] + m[1][1];
    let half_diff = 0.5 * (m[0][0] - m[1][1]);
    let r = (half_diff * half_diff + m[0][1] * m[0][1]).sqrt();
    [0.5 * tr - r, 0.5 * tr + r]
}

/// Direction along which [`contracting_width`] measures the spread.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StableDirection {
    /// Eigenvector of the smallest covariance eigenvalue.
    MinEigenvalue,
    /// Stable eigenvector of the flow linearized at the centroid, where the
    /// potential curvature is `curvature` (must be negative).
    Linearized { curvature: f64, mass: f64 },
}

/// Standard deviation of a covariance along the contracting direction.
pub fn contracting_width(cov: [[f64; 2]; 2], direction: StableDirection) -> Result<f64> {
    let [lo, _] = eigenvalues_2x2(cov);
    if !(lo > 0.0) || !cov[0][0].is_finite() {
        return Err(Error::Contract(format!("covariance is not positive definite (min eigenvalue {lo:e})")));
    }
    match direction {
        StableDirection::MinEigenvalue => Ok(lo.sqrt()),
        StableDirection::Linearized { curvature, mass } => {
            let v = stable_vector(curvature, mass)?;
            let q = cov[0][0] * v[0] * v[0] + 2.0 * cov[0][1] * v[0] * v[1] + cov[1][1] * v[1] * v[1];
            Ok(q.sqrt())
        }
    }
}

/// Unit stable eigenvector `(1, -mμ)/|·|` of the flow near a maximum of curvature `curvature`.
pub fn stable_vector(curvature: f64, mass: f64) -> Result<[f64; 2]> {
    if !(curvature < 0.0) {
        return Err(Error::Contract("no contracting direction at a stable point".into()));
    }
    let mu = (-curvature / mass).sqrt();
    let n = (1.0 + mass * mass * mu * mu).sqrt();
    Ok([1.0 / n, -mass * mu / n])
}

/// Variance of `w = e·(x, p)` over the part of the field with `|w - w̄| ≤ half_window`.
///
/// Restricting to a window around the bulk keeps the estimate local: mass far
/// away in `w`, such as a tail wrapped around the periodic domain, is ignored.
pub fn local_variance(field: &WignerField, e: [f64; 2], half_window: f64) -> Result<f64> {
    let g = field.grid();
    let m = field.moments();
    let mut centre = e[0] * m.mean_x + e[1] * m.mean_p;
    let mut var = f64::NAN;
    for _ in 0..3 {
        let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
        for (ix, &x) in g.x().iter().enumerate() {
            for (&p, &w) in g.p().iter().zip(field.row(ix)) {
                let d = e[0] * x + e[1] * p - centre;
                if d.abs() <= half_window {
                    s0 += w;
                    s1 += w * d;
                    s2 += w * d * d;
                }
            }
        }
        if !(s0 > 0.0) {
            return Err(Error::Contract("no weight inside the window".into()));
        }
        let mean = s1 / s0;
        var = s2 / s0 - mean * mean;
        centre += mean;
    }
    Ok(var)
}

/// Fourier amplitude `|∫∫ W e^{-i p s0} dx dp|` at `s0 = Δx/ħ`, relative to a reference field.
#[derive(Debug, Clone)]
pub struct FringeProbe {
    s0: f64,
    phases: Vec<Complex64>,
    reference: f64,
}

impl FringeProbe {
    pub fn new(initial: &WignerField, separation: f64) -> Result<Self> {
        let g = initial.grid();
        let s0 = separation / g.hbar();
        let phases = g.p().iter().map(|&p| Complex64::from_polar(1.0, -p * s0)).collect();
        let mut probe = Self { s0, phases, reference: 1.0 };
        let a = probe.amplitude(initial);
        if !(a > 1e-12 * initial.norm().abs()) {
            return Err(Error::Contract(format!("initial fringe amplitude {a:e} at s = {s0} is zero")));
        }
        probe.reference = a;
        Ok(probe)
    }

    pub fn frequency(&self) -> f64 {
        self.s0
    }

    pub fn initial_amplitude(&self) -> f64 {
        self.reference
    }

    pub fn amplitude(&self, field: &WignerField) -> f64 {
        let g = field.grid();
        let np = g.np();
        let mut acc = Complex64::new(0.0, 0.0);
        for row in field.values().chunks(np) {
            for (w, ph) in row.iter().zip(&self.phases) {
                acc += ph * w;
            }
        }
        acc.norm() * g.cell_area()
    }

    pub fn contrast(&self, field: &WignerField) -> f64 {
        self.amplitude(field) / self.reference
    }
}

/// Fringe contrast of `field` relative to `initial` at separation `Δx`.
pub fn fringe_contrast(initial: &WignerField, field: &WignerField, separation: f64) -> Result<f64> {
    Ok(FringeProbe::new(initial, separation)?.contrast(field))
}

/// Diagnostics at one recorded time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub moments: Moments,
    pub min_cov_eig: f64,
    pub purity: f64,
    pub linear_entropy: f64,
    pub negativity: f64,
    pub fringe_contrast: Option<f64>,
    pub correction_ratio: Option<f64>,
    /// L2 distance to the partner run of a paired evolution.
    pub field_distance: Option<f64>,
}

impl Sample {
    /// Field-only diagnostics; optional columns are left empty.
    pub fn measure(t: f64, field: &WignerField) -> Self {
        let moments = field.moments();
        let purity = purity_unchecked(field) / (moments.norm * moments.norm);
        let [lo, _] = eigenvalues_2x2(moments.covariance());
        Sample {
            t,
            moments,
            min_cov_eig: lo,
            purity,
            linear_entropy: -purity.ln(),
            negativity: negativity_volume(field),
            fringe_contrast: None,
            correction_ratio: None,
            field_distance: None,
        }
    }
}

pub const CSV_COLUMNS: [&str; 18] = [
    "t",
    "norm",
    "mean_x",
    "mean_p",
    "x2",
    "p2",
    "xp",
    "var_x",
    "var_p",
    "cov_xp",
    "min_cov_eig",
    "purity",
    "linear_entropy",
    "negativity",
    "fringe_contrast",
    "correction_ratio",
    "field_distance",
    "sqrt_min_cov_eig",
];

/// Shortest representation that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// Time series of [`Sample`]s with strictly increasing times.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub samples: Vec<Sample>,
}

impl TrajectoryRecord {
    pub fn push(&mut self, s: Sample) -> Result<()> {
        if let Some(last) = self.samples.last() {
            if !(s.t > last.t) {
                return Err(Error::Contract(format!("time {} does not follow {}", s.t, last.t)));
            }
        }
        self.samples.push(s);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }
    pub fn column(&self, f: impl Fn(&Sample) -> f64) -> Vec<f64> {
        self.samples.iter().map(f).collect()
    }
    pub fn entropy(&self) -> Vec<f64> {
        self.column(|s| s.linear_entropy)
    }
    pub fn last(&self) -> Option<&Sample> {
        self.samples.last()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", CSV_COLUMNS.join(","))?;
        for s in &self.samples {
            let m = &s.moments;
            let row = [
                fmt_f64(s.t),
                fmt_f64(m.norm),
                fmt_f64(m.mean_x),
                fmt_f64(m.mean_p),
                fmt_f64(m.x2),
                fmt_f64(m.p2),
                fmt_f64(m.xp),
                fmt_f64(m.var_x()),
                fmt_f64(m.var_p()),
                fmt_f64(m.cov_xp()),
                fmt_f64(s.min_cov_eig),
                fmt_f64(s.purity),
                fmt_f64(s.linear_entropy),
                fmt_f64(s.negativity),
                fmt_opt(s.fringe_contrast),
                fmt_opt(s.correction_ratio),
                fmt_opt(s.field_distance),
                fmt_f64(s.min_cov_eig.max(0.0).sqrt()),
            ];
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Quantum-vs-classical differences at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DivergencePoint {
    pub t: f64,
    /// `|⟨x⟩_q - ⟨x⟩_c| / √⟨x²⟩_c`.
    pub mean_x: f64,
    /// `|⟨x²⟩_q - ⟨x²⟩_c| / ⟨x²⟩_c`.
    pub x2: f64,
    pub p2: f64,
    pub field_distance: Option<f64>,
}

impl DivergencePoint {
    pub fn max_moment(&self) -> f64 {
        self.mean_x.max(self.x2).max(self.p2)
    }
}

pub const DIVERGENCE_COLUMNS: [&str; 5] = ["t", "rel_mean_x", "rel_x2", "rel_p2", "field_distance"];

pub fn write_divergence_csv<W: Write>(points: &[DivergencePoint], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{}", DIVERGENCE_COLUMNS.join(","))?;
    for d in points {
        writeln!(
            w,
            "{},{},{},{},{}",
            fmt_f64(d.t),
            fmt_f64(d.mean_x),
            fmt_f64(d.x2),
            fmt_f64(d.p2),
            fmt_opt(d.field_distance)
        )?;
    }
    Ok(())
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs()
    }
}

/// Per-time moment differences between a quantum and a classical record.
pub fn divergence(quantum: &TrajectoryRecord, classical: &TrajectoryRecord) -> Result<Vec<DivergencePoint>> {
    if quantum.len() != classical.len() {
        return Err(Error::Mismatch(format!("{} vs {} samples", quantum.len(), classical.len())));
    }
    quantum
        .samples
        .iter()
        .zip(&classical.samples)
        .map(|(q, c)| {
            if q.t != c.t {
                return Err(Error::Mismatch(format!("time {} vs {}", q.t, c.t)));
            }
            let (mq, mc) = (&q.moments, &c.moments);
            let dx = mq.mean_x - mc.mean_x;
            Ok(DivergencePoint {
                t: q.t,
                mean_x: if dx == 0.0 { 0.0 } else { dx.abs() / mc.x2.sqrt() },
                x2: rel(mq.x2, mc.x2),
                p2: rel(mq.p2, mc.p2),
                field_distance: q.field_distance.or(c.field_distance),
            })
        })
        .collect()
}

/// Result of a threshold-crossing search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Breakdown {
    Reached { t: f64 },
    NotReached { max_time: f64 },
}

impl Breakdown {
    pub fn time(&self) -> Option<f64> {
        match *self {
            Breakdown::Reached { t } => Some(t),
            Breakdown::NotReached { .. } => None,
        }
    }
}

impl std::fmt::Display for Breakdown {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match *self {
            Breakdown::Reached { t } => write!(f, "{t}"),
            Breakdown::NotReached { max_time } => write!(f, "not reached (t <= {max_time})"),
        }
    }
}

/// First time `values` reaches `threshold`, linearly interpolated.
pub fn breakdown_time(times: &[f64], values: &[f64], threshold: f64) -> Breakdown {
    let n = times.len().min(values.len());
    if n == 0 {
        return Breakdown::NotReached { max_time: 0.0 };
    }
    if values[0] >= threshold {
        return Breakdown::Reached { t: times[0] };
    }
    for i in 1..n {
        if values[i] >= threshold {
            let (t0, t1, v0, v1) = (times[i - 1], times[i], values[i - 1], values[i]);
            let f = (threshold - v0) / (v1 - v0);
            return Breakdown::Reached { t: t0 + f * (t1 - t0) };
        }
    }
    Breakdown::NotReached { max_time: times[n - 1] }
}

/// Ordinary least-squares line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub r_squared: f64,
    /// Root-mean-square residual.
    pub rms: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return Err(Error::Contract(format!("linear fit needs >= 2 paired points (got {n})")));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if !(sxx > 0.0) {
        return Err(Error::Contract("degenerate abscissa in linear fit".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    let slope_stderr = if n > 2 { (ssr / (nf - 2.0) / sxx).sqrt() } else { 0.0 };
    let r_squared = if syy > 0.0 { 1.0 - ssr / syy } else { 1.0 };
    Ok(LinearFit { slope, intercept, slope_stderr, r_squared, rms: (ssr / nf).sqrt() })
}

/// Centered-difference derivative, one-sided at the ends.
pub fn derivative_series(times: &[f64], values: &[f64]) -> Vec<f64> {
    let n = times.len();
    (0..n)
        .map(|i| {
            let (a, b) = match i {
                _ if n < 2 => return 0.0,
                0 => (0, 1),
                _ if i == n - 1 => (n - 2, n - 1),
                _ => (i - 1, i + 1),
            };
            (values[b] - values[a]) / (times[b] - times[a])
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyRateFit {
    pub rate: f64,
    pub intercept: f64,
    /// RMS residual of the straight-line fit on the window.
    pub residual: f64,
    /// `(t, dH/dt)` over the whole record.
    pub rate_series: Vec<(f64, f64)>,
}

/// Least-squares slope of `H(t)` on `[t0, t1]`.
pub fn entropy_rate_fit(times: &[f64], entropy: &[f64], window: (f64, f64)) -> Result<EntropyRateFit> {
    let (t0, t1) = window;
    let idx: Vec<usize> = (0..times.len()).filter(|&i| times[i] >= t0 && times[i] <= t1).collect();
    if !(t1 > t0) || idx.len() < 8 {
        return Err(Error::Contract(format!("degenerate window [{t0}, {t1}]: {} samples, need at least 8", idx.len())));
    }
    let xs: Vec<f64> = idx.iter().map(|&i| times[i]).collect();
    let ys: Vec<f64> = idx.iter().map(|&i| entropy[i]).collect();
    let fit = linear_fit(&xs, &ys)?;
    let d = derivative_series(times, entropy);
    Ok(EntropyRateFit {
        rate: fit.slope,
        intercept: fit.intercept,
        residual: fit.rms,
        rate_series: times.iter().copied().zip(d).collect(),
    })
}

/// Rate profile `λ / (1 + (v0/v∞ - 1) e^{-2λt})` for a contracting variance
/// relaxing from `v0` towards `v∞`.
pub fn entropy_rate_profile(lambda: f64, ratio: f64, t: f64) -> f64 {
    lambda / (1.0 + (ratio - 1.0) * (-2.0 * lambda * t).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{make_state, InitialStateSpec};
    use crate::grid::PhaseSpaceGrid;
    use approx::assert_relative_eq;
    use std::sync::Arc;

    fn grid() -> Arc<PhaseSpaceGrid> {
        Arc::new(PhaseSpaceGrid::symmetric(256, 12.0, 12.0, 1.0, 1.0).unwrap())
    }

    #[test]
    fn gaussian_purity() {
        let g = grid();
        let pure = make_state(g.clone(), &InitialStateSpec::gaussian(0.0, 0.0, 1.0, 0.5)).unwrap();
        assert_relative_eq!(purity(&pure).unwrap(), 1.0, epsilon = 1e-6);
        assert!(linear_entropy(&pure).unwrap().abs() < 1e-5);
        let mixed = make_state(g, &InitialStateSpec::gaussian(0.0, 0.0, 1.0, 1.0)).unwrap();
        // Independent quadrature of (2πħ)∫W² for W = exp(-(x²+p²)/2)/(2π): 1/(4π)·2π = 1/2.
        assert_relative_eq!(purity(&mixed).unwrap(), 0.5, epsilon = 1e-6);
        assert_relative_eq!(linear_entropy(&mixed).unwrap(), 2f64.ln(), epsilon = 1e-6);
    }

    #[test]
    fn entropy_tracks_covariance_determinant() {
        let g = grid();
        let c: f64 = 0.4;
        let sx = (0.5 * c.exp()).sqrt();
        let w = make_state(g, &InitialStateSpec::gaussian(0.0, 0.0, sx, sx)).unwrap();
        assert_relative_eq!(linear_entropy(&w).unwrap(), c, epsilon = 1e-6);
    }

    #[test]
    fn classical_mixture_purity_half() {
        let g = grid();
        let a = make_state(g.clone(), &InitialStateSpec::gaussian(-5.0, 0.0, 0.7, 0.5 / 0.7)).unwrap();
        let b = make_state(g.clone(), &InitialStateSpec::gaussian(5.0, 0.0, 0.7, 0.5 / 0.7)).unwrap();
        let vals = a.values().iter().zip(b.values()).map(|(x, y)| 0.5 * (x + y)).collect();
        let mix = WignerField::from_values(g, vals).unwrap();
        assert_relative_eq!(purity(&mix).unwrap(), 0.5, epsilon = 1e-4);
    }

    #[test]
    fn purity_rejects_unnormalized() {
        let g = grid();
        let w = make_state(g.clone(), &InitialStateSpec::gaussian(0.0, 0.0, 1.0, 0.5)).unwrap();
        let twice = WignerField::from_values(g, w.values().iter().map(|v| 2.0 * v).collect()).unwrap();
        assert!(matches!(purity(&twice), Err(Error::Contract(_))));
    }

    #[test]
    fn negativity_of_gaussian_and_cat() {
        let g = grid();
        let w = make_state(g.clone(), &InitialStateSpec::gaussian(1.0, -1.0, 1.0, 0.5)).unwrap();
        assert!(negativity_volume(&w).abs() < 1e-9);
        let cat = make_state(g, &InitialStateSpec::cat(4.0, 0.5, 1.0)).unwrap();
        assert!(negativity_volume(&cat) > 0.1);
    }

    #[test]
    fn isotropic_covariance_width() {
        let cov = [[0.3, 0.0], [0.0, 0.3]];
        assert_eq!(eigenvalues_2x2(cov), [0.3, 0.3]);
        assert_relative_eq!(contracting_width(cov, StableDirection::MinEigenvalue).unwrap(), 0.3f64.sqrt());
        let along = contracting_width(cov, StableDirection::Linearized { curvature: -1.0, mass: 1.0 }).unwrap();
        assert_relative_eq!(along, 0.3f64.sqrt(), epsilon = 1e-15);
        assert!(contracting_width([[1.0, 2.0], [2.0, 1.0]], StableDirection::MinEigenvalue).is_err());
    }

    #[test]
    fn fringe_probe_starts_at_one() {
        let g = grid();
        let cat = make_state(g.clone(), &InitialStateSpec::cat(4.0, 0.5, 1.0)).unwrap();
        assert_relative_eq!(fringe_contrast(&cat, &cat, 4.0).unwrap(), 1.0, epsilon = 1e-15);
        let flat = WignerField::zeros(g);
        assert!(FringeProbe::new(&flat, 4.0).is_err());
    }

    #[test]
    fn breakdown_interpolates() {
        let t = [0.0, 1.0, 2.0, 3.0, 4.0];
        let v = [0.0, 0.04, 0.08, 0.12, 0.2];
        assert_eq!(breakdown_time(&t, &v, 0.10), Breakdown::Reached { t: 2.5 });
        assert_eq!(breakdown_time(&t, &[0.5, 0.1, 0.0, 0.0, 0.0], 0.1), Breakdown::Reached { t: 0.0 });
        assert_eq!(breakdown_time(&t, &[0.0; 5], 0.1), Breakdown::NotReached { max_time: 4.0 });
    }

    #[test]
    fn entropy_rate_of_line() {
        let t: Vec<f64> = (0..50).map(|i| 0.1 * i as f64).collect();
        let h: Vec<f64> = t.iter().map(|t| 0.3 * t).collect();
        let fit = entropy_rate_fit(&t, &h, (1.0, 4.0)).unwrap();
        assert_relative_eq!(fit.rate, 0.3, epsilon = 1e-12);
        assert!(fit.residual < 1e-12);
        assert!(fit.rate_series.iter().all(|(_, r)| (r - 0.3).abs() < 1e-12));
        assert!(entropy_rate_fit(&t, &h, (1.0, 1.3)).is_err());
    }

    #[test]
    fn divergence_of_identical_records_is_zero() {
        let g = grid();
        let w = make_state(g, &InitialStateSpec::gaussian(0.5, 0.0, 1.0, 0.5)).unwrap();
        let mut r = TrajectoryRecord::default();
        r.push(Sample::measure(0.0, &w)).unwrap();
        r.push(Sample::measure(1.0, &w)).unwrap();
        let d = divergence(&r, &r).unwrap();
        assert!(d.iter().all(|p| p.max_moment() == 0.0));
        let mut short = r.clone();
        short.samples.pop();
        assert!(divergence(&r, &short).is_err());
        assert!(r.push(Sample::measure(1.0, &w)).is_err());
    }

    #[test]
    fn csv_round_trips_floats() {
        let g = grid();
        let w = make_state(g, &InitialStateSpec::gaussian(0.1, 0.2, 1.0, 0.5)).unwrap();
        let mut r = TrajectoryRecord::default();
        r.push(Sample::measure(0.1, &w)).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_COLUMNS.join(","));
        let cols: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(cols.len(), CSV_COLUMNS.len());
        assert_eq!(cols[2].parse::<f64>().unwrap(), r.samples[0].moments.mean_x);
        assert_eq!(cols[14], "");
    }
}
