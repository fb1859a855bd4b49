//! Fourier machinery along the `p` and `x` axes.
//!
//! Internally the propagators use real-to-complex row transforms. The public
//! [`to_xs`]/[`from_xs`] pair exposes the full `(x, s)` representation for
//! analysis.

use num_complex::Complex64;
use rayon::prelude::*;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::FftPlanner;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::WignerField;
use crate::grid::PhaseSpaceGrid;

const TRANSPOSE_BLOCK: usize = 32;

/// Forward and inverse real transforms of one length.
#[derive(Clone)]
pub(crate) struct RealPlan {
    fwd: Arc<dyn RealToComplex<f64>>,
    inv: Arc<dyn ComplexToReal<f64>>,
    n: usize,
}

impl RealPlan {
    pub(crate) fn new(planner: &mut RealFftPlanner<f64>, n: usize) -> Self {
        Self { fwd: planner.plan_fft_forward(n), inv: planner.plan_fft_inverse(n), n }
    }

    pub(crate) fn half_len(&self) -> usize {
        self.n / 2 + 1
    }

    fn scratch_len(&self) -> usize {
        self.fwd.get_scratch_len().max(self.inv.get_scratch_len())
    }
}

/// Per-thread work buffers for a row pass.
pub(crate) struct RowScratch {
    pub spec: Vec<Complex64>,
    fft: Vec<Complex64>,
}

impl RowScratch {
    fn new(plan: &RealPlan) -> Self {
        Self {
            spec: vec![Complex64::new(0.0, 0.0); plan.half_len()],
            fft: vec![Complex64::new(0.0, 0.0); plan.scratch_len()],
        }
    }
}

impl RealPlan {
    pub(crate) fn scratch(&self) -> RowScratch {
        RowScratch::new(self)
    }

    /// Forward transform of `row` into `scr.spec`. `row` is clobbered.
    pub(crate) fn forward(&self, row: &mut [f64], scr: &mut RowScratch) {
        self.fwd.process_with_scratch(row, &mut scr.spec, &mut scr.fft).expect("row length matches plan");
    }

    /// Inverse transform of `scr.spec` into `row` (unnormalized).
    pub(crate) fn inverse(&self, scr: &mut RowScratch, row: &mut [f64]) {
        scr.spec[0].im = 0.0;
        let last = scr.spec.len() - 1;
        scr.spec[last].im = 0.0;
        self.inv.process_with_scratch(&mut scr.spec, row, &mut scr.fft).expect("row length matches plan");
    }
}

/// Transform pair along both axes plus a transpose buffer.
#[derive(Clone)]
pub(crate) struct Transforms {
    pub p: RealPlan,
    pub x: RealPlan,
    nx: usize,
    np: usize,
}

impl Transforms {
    pub(crate) fn new(nx: usize, np: usize) -> Self {
        let mut planner = RealFftPlanner::new();
        let p = RealPlan::new(&mut planner, np);
        let x = RealPlan::new(&mut planner, nx);
        Self { p, x, nx, np }
    }

    pub(crate) fn for_grid(grid: &PhaseSpaceGrid) -> Self {
        Self::new(grid.nx(), grid.np())
    }

    /// Transforms every `x`-row along `p`, applies `f(ix, spectrum)`, and
    /// transforms back. Returns the per-row sum of the input samples.
    pub(crate) fn p_pass<F>(&self, values: &mut [f64], f: F) -> Vec<f64>
    where
        F: Fn(usize, &mut [Complex64]) + Sync,
    {
        let plan = &self.p;
        values
            .par_chunks_mut(self.np)
            .enumerate()
            .map_init(
                || plan.scratch(),
                |scr, (ix, row)| {
                    plan.forward(row, scr);
                    let dc = scr.spec[0].re;
                    f(ix, &mut scr.spec);
                    plan.inverse(scr, row);
                    dc
                },
            )
            .collect()
    }

    /// Same as [`p_pass`](Self::p_pass) but along `x`, via a transpose.
    pub(crate) fn x_pass<F>(&self, values: &mut [f64], buf: &mut Vec<f64>, f: F)
    where
        F: Fn(usize, &mut [Complex64]) + Sync,
    {
        buf.resize(values.len(), 0.0);
        transpose(values, buf, self.nx, self.np);
        let plan = &self.x;
        buf.par_chunks_mut(self.nx).enumerate().for_each_init(
            || plan.scratch(),
            |scr, (ip, row)| {
                plan.forward(row, scr);
                f(ip, &mut scr.spec);
                plan.inverse(scr, row);
            },
        );
        transpose(buf, values, self.np, self.nx);
    }
}

/// Writes the transpose of the `rows × cols` matrix `src` into `dst`.
pub(crate) fn transpose(src: &[f64], dst: &mut [f64], rows: usize, cols: usize) {
    debug_assert_eq!(src.len(), rows * cols);
    let b = TRANSPOSE_BLOCK.min(cols);
    dst.par_chunks_mut(rows * b).enumerate().for_each(|(blk, out)| {
        let c0 = blk * b;
        let width = out.len() / rows;
        for r0 in (0..rows).step_by(TRANSPOSE_BLOCK) {
            let r1 = (r0 + TRANSPOSE_BLOCK).min(rows);
            for dc in 0..width {
                let o = &mut out[dc * rows..(dc + 1) * rows];
                for r in r0..r1 {
                    o[r] = src[r * cols + c0 + dc];
                }
            }
        }
    });
}

/// Field in the mixed `(x, s)` representation.
///
/// `data[ix*np + j]` approximates `∫ W(x_ix, p) e^{-i s_j (p - p_min)} dp`, with
/// `s_j` from [`PhaseSpaceGrid::s`].
#[derive(Debug, Clone)]
pub struct XsField {
    grid: Arc<PhaseSpaceGrid>,
    data: Vec<Complex64>,
}

impl XsField {
    pub fn grid(&self) -> &PhaseSpaceGrid {
        &self.grid
    }
    pub fn s(&self) -> &[f64] {
        self.grid.s()
    }
    pub fn data(&self) -> &[Complex64] {
        &self.data
    }
    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }
    pub fn row(&self, ix: usize) -> &[Complex64] {
        let np = self.grid.np();
        &self.data[ix * np..(ix + 1) * np]
    }

    /// `∫ |W̃(x, s_j)|² dx` for each `s_j`.
    pub fn power_by_s(&self) -> Vec<f64> {
        let np = self.grid.np();
        let mut out = vec![0.0; np];
        for row in self.data.chunks(np) {
            for (o, c) in out.iter_mut().zip(row) {
                *o += c.norm_sqr();
            }
        }
        for o in &mut out {
            *o *= self.grid.dx();
        }
        out
    }
}

/// Fourier transform along `p`.
pub fn to_xs(field: &WignerField) -> XsField {
    let grid = field.grid_arc().clone();
    let np = grid.np();
    let fft = FftPlanner::new().plan_fft_forward(np);
    let dp = grid.dp();
    let mut data: Vec<Complex64> = field.values().iter().map(|&v| Complex64::new(v * dp, 0.0)).collect();
    data.par_chunks_mut(np).for_each(|row| fft.process(row));
    XsField { grid, data }
}

/// Inverse of [`to_xs`]. Fails if the result carries an imaginary residue above 1e-10.
pub fn from_xs(xs: &XsField) -> Result<WignerField> {
    let grid = xs.grid.clone();
    let np = grid.np();
    let fft = FftPlanner::new().plan_fft_inverse(np);
    let mut data = xs.data.clone();
    data.par_chunks_mut(np).for_each(|row| fft.process(row));
    let scale = 1.0 / (np as f64 * grid.dp());
    let peak = data.iter().fold(0.0_f64, |m, c| m.max(c.re.abs()));
    let resid = data.iter().fold(0.0_f64, |m, c| m.max(c.im.abs()));
    if resid > 1e-10 * peak.max(f64::MIN_POSITIVE) {
        return Err(Error::Contract(format!(
            "inverse transform left imaginary residue {:.3e} relative to peak",
            resid / peak
        )));
    }
    let values = data.iter().map(|c| c.re * scale).collect();
    WignerField::from_values(grid, values)
}
