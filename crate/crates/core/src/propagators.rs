//! Split-operator time stepping.
//!
//! Each sub-flow is exact and diagonal in some representation:
//!
//! * kinetic shear `x → x + p dt/m` is a phase `exp(-i k p dt/m)` in `(k, p)`;
//! * the potential bracket is a phase `exp(i dt K(x, s))` in `(x, s)`;
//! * momentum diffusion is the damping `exp(-D s² dt)`, also in `(x, s)`;
//! * friction `2γ ∂_p(pW)` is the dilation `W → e^{2γdt} W(x, p e^{2γdt})`.
//!
//! A full step is the Strang composition half kinetic, potential, diffusion,
//! friction, half kinetic. Consecutive kinetic halves are merged.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

use crate::diagnostics::{FringeProbe, Sample, TrajectoryRecord};
use crate::error::{Error, Result};
use crate::field::WignerField;
use crate::grid::PhaseSpaceGrid;
use crate::potentials::{static_kernel, truncated_kernel, Bracket, PotentialModel};
use crate::spectral::{RealPlan, Transforms};

const NORM_DRIFT_LIMIT: f64 = 1e-6;
const FRICTION_BAND_LIMIT: f64 = 1e-10;

/// Momentum diffusion and relaxation of the surrounding bath.
///
/// `temperature` is in energy units (`k_B = 1`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub diffusion: f64,
    #[serde(default)]
    pub gamma: f64,
    #[serde(default)]
    pub temperature: Option<f64>,
}

impl Environment {
    pub fn diffusive(diffusion: f64) -> Self {
        Self { diffusion, gamma: 0.0, temperature: None }
    }

    pub fn validate(&self, mass: f64) -> Result<()> {
        if !(self.diffusion >= 0.0 && self.diffusion.is_finite()) {
            return Err(Error::config("D", "diffusion must be non-negative"));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::config("gamma", "gamma must be non-negative"));
        }
        if let Some(t) = self.temperature {
            let expected = 2.0 * mass * self.gamma * t;
            let scale = expected.abs().max(self.diffusion.abs()).max(f64::MIN_POSITIVE);
            if (self.diffusion - expected).abs() > 1e-9 * scale {
                return Err(Error::config(
                    "temperature",
                    format!("D = {} but 2 m gamma T = {expected}", self.diffusion),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolutionSpec {
    pub bracket: Bracket,
    pub environment: Option<Environment>,
    pub dt: f64,
    pub n_steps: usize,
    pub record_every: usize,
}

impl EvolutionSpec {
    pub fn diffusion(&self) -> f64 {
        self.environment.map_or(0.0, |e| e.diffusion)
    }

    pub fn gamma(&self) -> f64 {
        self.environment.map_or(0.0, |e| e.gamma)
    }

    pub fn duration(&self) -> f64 {
        self.n_steps as f64 * self.dt
    }

    pub fn with_bracket(&self, bracket: Bracket) -> Self {
        Self { bracket, ..*self }
    }

    pub fn validate(&self, model: &PotentialModel, mass: f64) -> Result<()> {
        model.validate()?;
        self.bracket.validate()?;
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::config("dt", "dt must be positive"));
        }
        if self.n_steps < 1 {
            return Err(Error::config("n_steps", "n_steps must be at least 1"));
        }
        if self.record_every < 1 {
            return Err(Error::config("record_every", "record_every must be at least 1"));
        }
        if let Some(limit) = model.stability_limit(mass) {
            if self.dt > limit * (1.0 + 1e-12) {
                return Err(Error::config("dt", format!("dt = {} exceeds the stability bound {limit}", self.dt)));
            }
        }
        if let Some(env) = &self.environment {
            env.validate(mass)?;
        }
        Ok(())
    }
}

fn potential_table(
    grid: &PhaseSpaceGrid,
    model: &PotentialModel,
    bracket: Bracket,
    dt: f64,
    diffusion: f64,
) -> Vec<Complex64> {
    let (hbar, mass) = (grid.hbar(), grid.mass());
    let s = grid.s_half();
    let damp: Vec<f64> = s.iter().map(|s| (-diffusion * s * s * dt).exp()).collect();
    let mut table = vec![Complex64::new(0.0, 0.0); grid.nx() * s.len()];
    table.par_chunks_mut(s.len()).zip(grid.x().par_iter()).for_each(|(row, &x)| {
        for ((c, &sj), &d) in row.iter_mut().zip(s).zip(&damp) {
            let k = match bracket {
                Bracket::MoyalTruncated { n_max } => truncated_kernel(model, n_max, x, sj, hbar, mass),
                b => static_kernel(model, b, x, sj, hbar, mass),
            };
            *c = Complex64::from_polar(d, k * dt);
        }
    });
    table
}

fn kinetic_table(grid: &PhaseSpaceGrid, dt: f64) -> Vec<Complex64> {
    let k = grid.k_half();
    let a = dt / grid.mass();
    grid.p().iter().flat_map(|&p| k.iter().map(move |&kj| Complex64::from_polar(1.0, -kj * p * a))).collect()
}

// Periodic band-limited interpolation weight for an even number of samples.
fn periodic_sinc(d: f64, n: usize) -> f64 {
    let a = PI * d / n as f64;
    if a.sin().abs() < 1e-12 {
        (PI * d).cos() * a.cos() * a.cos()
    } else {
        (PI * d).sin() / (n as f64 * a.tan())
    }
}

#[derive(Clone)]
struct Friction {
    matrix: Vec<f64>,
    cutoff: f64,
}

impl Friction {
    fn new(grid: &PhaseSpaceGrid, gamma: f64, dt: f64) -> Self {
        let c = (2.0 * gamma * dt).exp();
        let np = grid.np();
        let (p, dp) = (grid.p(), grid.dp());
        let mut matrix = vec![0.0; np * np];
        for (l, row) in matrix.chunks_mut(np).enumerate() {
            let target = c * p[l];
            for (j, m) in row.iter_mut().enumerate() {
                *m = c * periodic_sinc((target - p[j]) / dp, np);
            }
        }
        Self { matrix, cutoff: grid.s_nyquist() / c }
    }

    fn apply(&self, grid: &PhaseSpaceGrid, plan: &RealPlan, values: &mut [f64], step: usize) -> Result<()> {
        let np = grid.np();
        let s = grid.s_half();
        let parts: Vec<(f64, f64)> = values
            .par_chunks_mut(np)
            .map_init(
                || (plan.scratch(), vec![0.0; np]),
                |(scr, tmp), row| {
                    tmp.copy_from_slice(row);
                    plan.forward(tmp, scr);
                    let (mut high, mut total) = (0.0, 0.0);
                    for (j, c) in scr.spec.iter().enumerate() {
                        let w = if j == 0 || j == np / 2 { 1.0 } else { 2.0 };
                        let e = w * c.norm_sqr();
                        total += e;
                        if s[j].abs() > self.cutoff {
                            high += e;
                        }
                    }
                    tmp.copy_from_slice(row);
                    for (out, m) in row.iter_mut().zip(self.matrix.chunks(np)) {
                        *out = m.iter().zip(tmp.iter()).map(|(a, b)| a * b).sum();
                    }
                    (high, total)
                },
            )
            .collect();
        let (high, total) = parts.iter().fold((0.0, 0.0), |(h, t), (a, b)| (h + a, t + b));
        if high > FRICTION_BAND_LIMIT * total {
            return Err(Error::Resolution(format!(
                "friction step {step}: fraction {:.3e} of the spectral power leaves the resolvable band",
                high / total
            )));
        }
        Ok(())
    }
}

/// Reusable stepper holding transform plans and precomputed phase tables.
pub struct Propagator {
    grid: Arc<PhaseSpaceGrid>,
    model: PotentialModel,
    dt: f64,
    tf: Transforms,
    pot: Vec<Complex64>,
    kin: Vec<Complex64>,
    friction: Option<Friction>,
    buf: Vec<f64>,
    norm0: Option<f64>,
    steps: usize,
}

impl Propagator {
    pub fn new(grid: Arc<PhaseSpaceGrid>, model: PotentialModel, spec: &EvolutionSpec) -> Result<Self> {
        spec.validate(&model, grid.mass())?;
        let tf = Transforms::for_grid(&grid);
        let pot = potential_table(&grid, &model, spec.bracket, spec.dt, spec.diffusion());
        let kin = kinetic_table(&grid, 0.5 * spec.dt);
        let friction = (spec.gamma() > 0.0).then(|| Friction::new(&grid, spec.gamma(), spec.dt));
        Ok(Self { grid, model, dt: spec.dt, tf, pot, kin, friction, buf: Vec::new(), norm0: None, steps: 0 })
    }

    pub fn time(&self) -> f64 {
        self.steps as f64 * self.dt
    }

    pub fn steps_taken(&self) -> usize {
        self.steps
    }

    fn kinetic(&mut self, values: &mut [f64], halves: u8) {
        let Self { tf, buf, kin, grid, .. } = self;
        let nkh = grid.nx() / 2 + 1;
        let scale = 1.0 / grid.nx() as f64;
        tf.x_pass(values, buf, |ip, spec| {
            let row = &kin[ip * nkh..(ip + 1) * nkh];
            if halves == 1 {
                for (c, k) in spec.iter_mut().zip(row) {
                    *c *= k * scale;
                }
            } else {
                for (c, k) in spec.iter_mut().zip(row) {
                    *c *= k * k * scale;
                }
            }
        });
    }

    fn potential(&self, values: &mut [f64], t_mid: f64) -> Vec<f64> {
        let nsh = self.grid.np() / 2 + 1;
        let scale = 1.0 / self.grid.np() as f64;
        let f = self.model.drive(t_mid);
        let drive: Vec<Complex64> = if f != 0.0 {
            self.grid.s_half().iter().map(|s| Complex64::from_polar(scale, s * f * self.dt)).collect()
        } else {
            Vec::new()
        };
        let pot = &self.pot;
        self.tf.p_pass(values, |ix, spec| {
            let row = &pot[ix * nsh..(ix + 1) * nsh];
            if drive.is_empty() {
                for (c, k) in spec.iter_mut().zip(row) {
                    *c *= k * scale;
                }
            } else {
                for ((c, k), d) in spec.iter_mut().zip(row).zip(&drive) {
                    *c *= k * d;
                }
            }
        })
    }

    fn check_norm(&self, norm: f64, norm0: f64, step: usize) -> Result<()> {
        if !norm.is_finite() {
            return Err(Error::NumericAbort { step, message: "non-finite values in field".into() });
        }
        if (norm - norm0).abs() > NORM_DRIFT_LIMIT * norm0.abs() {
            return Err(Error::NumericAbort { step, message: format!("norm drifted from {norm0} to {norm}") });
        }
        Ok(())
    }

    /// Advances `field` by `steps` full Strang steps.
    pub fn advance(&mut self, field: &mut WignerField, steps: usize) -> Result<()> {
        if steps == 0 {
            return Ok(());
        }
        if field.grid() != &*self.grid {
            return Err(Error::Mismatch("field grid differs from propagator grid".into()));
        }
        let area = self.grid.cell_area();
        let norm0 = *self.norm0.get_or_insert_with(|| field.norm());
        let values = field.values_mut();
        self.kinetic(values, 1);
        for n in 0..steps {
            let step = self.steps + 1;
            let t_mid = (self.steps as f64 + 0.5) * self.dt;
            let rows = self.potential(values, t_mid);
            let norm = rows.iter().sum::<f64>() * area;
            self.check_norm(norm, norm0, step)?;
            if let Some(fr) = &self.friction {
                fr.apply(&self.grid, &self.tf.p, values, step)?;
            }
            self.steps = step;
            self.kinetic(values, if n + 1 < steps { 2 } else { 1 });
        }
        let norm = values.iter().sum::<f64>() * area;
        self.check_norm(norm, norm0, self.steps)
    }
}

/// Free flight `W(x, p) → W(x - p dt/m, p)`.
pub fn step_kinetic(field: &mut WignerField, dt: f64) {
    let grid = field.grid_arc().clone();
    let tf = Transforms::for_grid(&grid);
    let (k, p) = (grid.k_half(), grid.p());
    let a = dt / grid.mass();
    let scale = 1.0 / grid.nx() as f64;
    let mut buf = Vec::new();
    tf.x_pass(field.values_mut(), &mut buf, |ip, spec| {
        for (c, &kj) in spec.iter_mut().zip(k) {
            *c *= Complex64::from_polar(scale, -kj * p[ip] * a);
        }
    });
}

/// Potential bracket over `dt`, with any drive evaluated at `t + dt/2`.
pub fn step_potential(field: &mut WignerField, model: &PotentialModel, bracket: Bracket, t: f64, dt: f64) {
    let grid = field.grid_arc().clone();
    let tf = Transforms::for_grid(&grid);
    let (hbar, mass) = (grid.hbar(), grid.mass());
    let s = grid.s_half();
    let x = grid.x();
    let f = model.drive(t + 0.5 * dt);
    let scale = 1.0 / grid.np() as f64;
    tf.p_pass(field.values_mut(), |ix, spec| {
        for (c, &sj) in spec.iter_mut().zip(s) {
            let k = match bracket {
                Bracket::MoyalTruncated { n_max } => truncated_kernel(model, n_max, x[ix], sj, hbar, mass),
                b => static_kernel(model, b, x[ix], sj, hbar, mass),
            };
            *c *= Complex64::from_polar(scale, (k + sj * f) * dt);
        }
    });
}

/// Momentum diffusion `D ∂²_p W` over `dt`.
pub fn step_decoherence(field: &mut WignerField, diffusion: f64, dt: f64) {
    let grid = field.grid_arc().clone();
    let tf = Transforms::for_grid(&grid);
    let s = grid.s_half();
    let scale = 1.0 / grid.np() as f64;
    tf.p_pass(field.values_mut(), |_, spec| {
        for (c, &sj) in spec.iter_mut().zip(s) {
            *c *= scale * (-diffusion * sj * sj * dt).exp();
        }
    });
}

/// Relaxation `2γ ∂_p(pW)` over `dt`.
pub fn step_friction(field: &mut WignerField, gamma: f64, dt: f64) -> Result<()> {
    if gamma == 0.0 || dt == 0.0 {
        return Ok(());
    }
    let grid = field.grid_arc().clone();
    let tf = Transforms::for_grid(&grid);
    Friction::new(&grid, gamma, dt).apply(&grid, &tf.p, field.values_mut(), 0)
}

/// `‖(ħ²/24) V''' ∂³_p W‖ / ‖V' ∂_p W‖` with spectral derivatives.
pub fn first_correction_ratio(field: &WignerField, model: &PotentialModel, t: f64) -> Result<f64> {
    let grid = field.grid();
    let (np, hbar, mass) = (grid.np(), grid.hbar(), grid.mass());
    let tf = Transforms::for_grid(grid);
    let plan = &tf.p;
    let s = grid.s_half();
    let nyq = np / 2;
    let scale = 1.0 / np as f64;
    let c3 = hbar * hbar / 24.0;
    let parts: Vec<(f64, f64)> = field
        .values()
        .par_chunks(np)
        .zip(grid.x().par_iter())
        .map_init(
            || (plan.scratch(), plan.scratch(), vec![0.0; np]),
            |(s1, s3, tmp), (row, &x)| {
                let pv = model.evaluate(x, t, mass);
                tmp.copy_from_slice(row);
                plan.forward(tmp, s1);
                s3.spec.copy_from_slice(&s1.spec);
                for (j, (a, b)) in s1.spec.iter_mut().zip(s3.spec.iter_mut()).enumerate() {
                    if j == nyq {
                        *a = Complex64::new(0.0, 0.0);
                        *b = Complex64::new(0.0, 0.0);
                        continue;
                    }
                    let is = Complex64::new(0.0, s[j]);
                    *a *= is * scale;
                    *b *= is * is * is * scale;
                }
                plan.inverse(s1, tmp);
                let den: f64 = tmp.iter().map(|v| (pv.d1 * v).powi(2)).sum();
                let num: f64 = if pv.d3 == 0.0 {
                    0.0
                } else {
                    plan.inverse(s3, tmp);
                    tmp.iter().map(|v| (c3 * pv.d3 * v).powi(2)).sum()
                };
                (num, den)
            },
        )
        .collect();
    let (num, den) = parts.iter().fold((0.0, 0.0), |(n, d), (a, b)| (n + a, d + b));
    if !(den > 1e-300) {
        return Err(Error::UndefinedRatio(format!("Liouville term norm {den:e} is too small")));
    }
    Ok((num / den).sqrt())
}

/// What to measure beyond the basic moments.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Observers {
    /// Track fringe contrast for a cat of this separation.
    pub fringe_separation: Option<f64>,
    pub correction_ratio: bool,
    /// Keep a copy of the field every this many steps.
    pub snapshot_every: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct Evolution {
    pub record: TrajectoryRecord,
    pub final_field: WignerField,
    pub snapshots: Vec<(f64, WignerField)>,
}

struct Measurer<'a> {
    model: &'a PotentialModel,
    probe: Option<FringeProbe>,
    correction_ratio: bool,
}

impl<'a> Measurer<'a> {
    fn new(initial: &WignerField, model: &'a PotentialModel, obs: &Observers) -> Result<Self> {
        let probe = obs.fringe_separation.map(|d| FringeProbe::new(initial, d)).transpose()?;
        Ok(Self { model, probe, correction_ratio: obs.correction_ratio })
    }

    fn measure(&self, t: f64, field: &WignerField) -> Result<Sample> {
        let mut s = Sample::measure(t, field);
        s.fringe_contrast = self.probe.as_ref().map(|p| p.contrast(field));
        if self.correction_ratio {
            s.correction_ratio = Some(first_correction_ratio(field, self.model, t)?);
        }
        Ok(s)
    }
}

fn schedule(step: usize, spec: &EvolutionSpec, obs: &Observers) -> usize {
    let next_multiple = |every: usize| (step / every + 1) * every;
    let mut next = next_multiple(spec.record_every).min(spec.n_steps);
    if let Some(e) = obs.snapshot_every.filter(|&e| e > 0) {
        next = next.min(next_multiple(e));
    }
    next
}

fn wants_record(step: usize, spec: &EvolutionSpec) -> bool {
    step.is_multiple_of(spec.record_every) || step == spec.n_steps
}

fn wants_snapshot(step: usize, obs: &Observers) -> bool {
    obs.snapshot_every.is_some_and(|e| e > 0 && step.is_multiple_of(e))
}

/// Runs `spec.n_steps` Strang steps from `initial`, recording diagnostics.
pub fn evolve(
    initial: &WignerField,
    model: &PotentialModel,
    spec: &EvolutionSpec,
    obs: &Observers,
) -> Result<Evolution> {
    let mut prop = Propagator::new(initial.grid_arc().clone(), *model, spec)?;
    let measurer = Measurer::new(initial, model, obs)?;
    let mut field = initial.clone();
    let mut record = TrajectoryRecord::default();
    let mut snapshots = Vec::new();
    record.push(measurer.measure(0.0, &field)?)?;
    if wants_snapshot(0, obs) {
        snapshots.push((0.0, field.clone()));
    }
    let mut step = 0;
    while step < spec.n_steps {
        let next = schedule(step, spec, obs);
        prop.advance(&mut field, next - step)?;
        step = next;
        let t = step as f64 * spec.dt;
        if wants_record(step, spec) {
            record.push(measurer.measure(t, &field)?)?;
        }
        if wants_snapshot(step, obs) {
            snapshots.push((t, field.clone()));
        }
    }
    Ok(Evolution { record, final_field: field, snapshots })
}

#[derive(Debug, Clone)]
pub struct PairedEvolution {
    pub quantum: Evolution,
    pub classical: Evolution,
}

/// Evolves the same initial field under two specs in lockstep, recording the
/// L2 distance between them at every record time.
pub fn evolve_paired(
    initial: &WignerField,
    model: &PotentialModel,
    quantum: &EvolutionSpec,
    classical: &EvolutionSpec,
    obs: &Observers,
) -> Result<PairedEvolution> {
    if quantum.dt != classical.dt
        || quantum.n_steps != classical.n_steps
        || quantum.record_every != classical.record_every
    {
        return Err(Error::Mismatch("paired runs need identical dt, n_steps and record_every".into()));
    }
    let grid = initial.grid_arc().clone();
    let mut pq = Propagator::new(grid.clone(), *model, quantum)?;
    let mut pc = Propagator::new(grid, *model, classical)?;
    let measurer = Measurer::new(initial, model, obs)?;
    let (mut fq, mut fc) = (initial.clone(), initial.clone());
    let (mut rq, mut rc) = (TrajectoryRecord::default(), TrajectoryRecord::default());
    let (mut sq, mut sc) = (Vec::new(), Vec::new());

    let push = |t: f64,
                fq: &WignerField,
                fc: &WignerField,
                rq: &mut TrajectoryRecord,
                rc: &mut TrajectoryRecord|
     -> Result<()> {
        let d = fq.l2_distance(fc)?;
        let mut a = measurer.measure(t, fq)?;
        let mut b = measurer.measure(t, fc)?;
        a.field_distance = Some(d);
        b.field_distance = Some(d);
        rq.push(a)?;
        rc.push(b)
    };
    push(0.0, &fq, &fc, &mut rq, &mut rc)?;
    if wants_snapshot(0, obs) {
        sq.push((0.0, fq.clone()));
        sc.push((0.0, fc.clone()));
    }
    let mut step = 0;
    while step < quantum.n_steps {
        let next = schedule(step, quantum, obs);
        pq.advance(&mut fq, next - step)?;
        pc.advance(&mut fc, next - step)?;
        step = next;
        let t = step as f64 * quantum.dt;
        if wants_record(step, quantum) {
            push(t, &fq, &fc, &mut rq, &mut rc)?;
        }
        if wants_snapshot(step, obs) {
            sq.push((t, fq.clone()));
            sc.push((t, fc.clone()));
        }
    }
    Ok(PairedEvolution {
        quantum: Evolution { record: rq, final_field: fq, snapshots: sq },
        classical: Evolution { record: rc, final_field: fc, snapshots: sc },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::{purity, purity_unchecked};
    use crate::field::{make_state, InitialStateSpec};
    use approx::assert_relative_eq;

    fn grid(n: usize, half: f64) -> Arc<PhaseSpaceGrid> {
        Arc::new(PhaseSpaceGrid::symmetric(n, half, half, 1.0, 1.0).unwrap())
    }

    fn spec(bracket: Bracket, dt: f64, n: usize) -> EvolutionSpec {
        EvolutionSpec { bracket, environment: None, dt, n_steps: n, record_every: 1 }
    }

    #[test]
    fn free_flight_moves_mean() {
        let g = grid(128, 10.0);
        let mut w = make_state(g, &InitialStateSpec::gaussian(0.0, 2.0, 1.0, 0.5)).unwrap();
        step_kinetic(&mut w, 0.5);
        assert_relative_eq!(w.moments().mean_x, 1.0, epsilon = 1e-9);
        assert_relative_eq!(w.norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn kinetic_composes_exactly() {
        let g = grid(64, 10.0);
        let w0 = make_state(g, &InitialStateSpec::gaussian(0.3, 1.0, 1.0, 0.5)).unwrap();
        let mut a = w0.clone();
        step_kinetic(&mut a, 0.3);
        let mut b = w0.clone();
        step_kinetic(&mut b, 0.15);
        step_kinetic(&mut b, 0.15);
        assert!(a.l2_distance(&b).unwrap() < 1e-12);
        let mut c = w0.clone();
        step_kinetic(&mut c, 0.0);
        assert!(c.l2_distance(&w0).unwrap() < 1e-14);
    }

    #[test]
    fn harmonic_sign_convention() {
        let g = grid(128, 10.0);
        let m = PotentialModel::Harmonic { omega: 1.0 };
        let w = make_state(g, &InitialStateSpec::gaussian(0.0, 1.0, 1.0, 0.5)).unwrap();
        let ev = evolve(&w, &m, &spec(Bracket::Moyal, 0.01, 10), &Observers::default()).unwrap();
        let last = ev.record.last().unwrap();
        assert!(last.moments.mean_x > 0.0);
        assert_relative_eq!(last.moments.mean_x, 0.1f64.sin(), epsilon = 1e-5);
    }

    #[test]
    fn potential_step_force_direction() {
        let g = grid(128, 10.0);
        let m = PotentialModel::Harmonic { omega: 1.0 };
        let mut w = make_state(g, &InitialStateSpec::gaussian(1.0, 0.0, 1.0, 0.5)).unwrap();
        step_potential(&mut w, &m, Bracket::Poisson, 0.0, 0.2);
        assert_relative_eq!(w.moments().mean_p, -0.2, epsilon = 1e-9);
    }

    #[test]
    fn quadratic_brackets_agree() {
        let g = grid(64, 10.0);
        let w0 = make_state(g, &InitialStateSpec::gaussian(1.0, 0.5, 1.0, 0.5)).unwrap();
        for m in [PotentialModel::Harmonic { omega: 1.0 }, PotentialModel::Inverted { lambda: 0.5 }] {
            let mut a = w0.clone();
            let mut b = w0.clone();
            step_potential(&mut a, &m, Bracket::Moyal, 0.0, 0.1);
            step_potential(&mut b, &m, Bracket::Poisson, 0.0, 0.1);
            assert_eq!(a.values(), b.values());
        }
    }

    #[test]
    fn double_well_brackets_differ() {
        let g = grid(256, 10.0);
        let m = PotentialModel::QuarticDoubleWell { a: 1.0, b: 1.0 };
        let w0 = make_state(g, &InitialStateSpec::gaussian(1.5, 0.0, 0.4, 1.25)).unwrap();
        let mut a = w0.clone();
        let mut b = w0.clone();
        step_potential(&mut a, &m, Bracket::Moyal, 0.0, 0.05);
        step_potential(&mut b, &m, Bracket::Poisson, 0.0, 0.05);
        assert!(a.l2_distance(&b).unwrap() > 1e-6);
    }

    #[test]
    fn diffusion_broadens_momentum() {
        let g = grid(128, 10.0);
        let mut w = make_state(g, &InitialStateSpec::gaussian(0.0, 0.0, 1.0, 0.5)).unwrap();
        let p0 = purity(&w).unwrap();
        step_decoherence(&mut w, 0.1, 2.0);
        let m = w.moments();
        assert_relative_eq!(m.var_p(), 0.25 + 2.0 * 0.1 * 2.0, max_relative = 1e-9);
        assert_relative_eq!(w.norm(), 1.0, epsilon = 1e-12);
        assert!(purity(&w).unwrap() < p0);
    }

    #[test]
    fn friction_relaxes_mean_momentum() {
        let g = Arc::new(PhaseSpaceGrid::symmetric(64, 8.0, 8.0, 1.0, 1.0).unwrap());
        let mut w = make_state(g, &InitialStateSpec::gaussian(0.0, 1.0, 1.0, 0.6)).unwrap();
        let gamma = 0.1;
        let dt = 0.05;
        for _ in 0..20 {
            step_friction(&mut w, gamma, dt).unwrap();
        }
        let m = w.moments();
        assert_relative_eq!(m.mean_p, (-2.0 * gamma * 1.0f64).exp(), max_relative = 1e-8);
        assert_relative_eq!(w.norm(), 1.0, epsilon = 1e-8);
    }

    #[test]
    fn friction_flags_unresolved_contraction() {
        let g = Arc::new(PhaseSpaceGrid::symmetric(32, 8.0, 8.0, 1.0, 1.0).unwrap());
        let mut w = make_state(g, &InitialStateSpec::gaussian(0.0, 0.0, 1.0, 0.6)).unwrap();
        assert!(matches!(step_friction(&mut w, 5.0, 0.1), Err(Error::Resolution(_))));
    }

    #[test]
    fn harmonic_correction_ratio_is_zero() {
        let g = grid(64, 10.0);
        let w = make_state(g, &InitialStateSpec::gaussian(1.0, 0.0, 1.0, 0.5)).unwrap();
        assert_eq!(first_correction_ratio(&w, &PotentialModel::Harmonic { omega: 1.0 }, 0.0).unwrap(), 0.0);
        assert!(matches!(first_correction_ratio(&w, &PotentialModel::Free, 0.0), Err(Error::UndefinedRatio(_))));
    }

    #[test]
    fn purity_non_increasing_with_diffusion() {
        let g = grid(128, 8.0);
        let m = PotentialModel::QuarticDoubleWell { a: 1.0, b: 0.5 };
        let w0 = make_state(g, &InitialStateSpec::gaussian(1.0, 0.0, 0.5, 1.0)).unwrap();
        let sp = EvolutionSpec { environment: Some(Environment::diffusive(0.05)), ..spec(Bracket::Moyal, 0.02, 1) };
        let mut prop = Propagator::new(w0.grid_arc().clone(), m, &sp).unwrap();
        let mut w = w0;
        let mut last = purity_unchecked(&w);
        for _ in 0..30 {
            prop.advance(&mut w, 1).unwrap();
            let p = purity_unchecked(&w);
            assert!(p <= last + 1e-10);
            last = p;
        }
    }

    #[test]
    fn merged_halves_match_single_steps() {
        let g = grid(128, 8.0);
        let m = PotentialModel::DrivenDoubleWell { a: 1.0, b: 1.0, amplitude: 0.3, frequency: 1.0 };
        let w0 = make_state(g.clone(), &InitialStateSpec::gaussian(1.0, 0.0, 0.5, 1.0)).unwrap();
        let sp = spec(Bracket::Moyal, 0.02, 1);
        let mut a = w0.clone();
        Propagator::new(g.clone(), m, &sp).unwrap().advance(&mut a, 6).unwrap();
        let mut b = w0.clone();
        let mut p = Propagator::new(g, m, &sp).unwrap();
        for _ in 0..6 {
            p.advance(&mut b, 1).unwrap();
        }
        let d = a.l2_distance(&b).unwrap();
        assert!(d < 1e-12, "{d}");
        let mut c = w0;
        for n in 0..6 {
            let t = n as f64 * 0.02;
            step_kinetic(&mut c, 0.01);
            step_potential(&mut c, &m, Bracket::Moyal, t, 0.02);
            step_kinetic(&mut c, 0.01);
        }
        let d2 = a.l2_distance(&c).unwrap();
        assert!(d2 < 1e-11, "{d2}");
    }

    #[test]
    fn rejects_bad_specs() {
        let m = PotentialModel::Harmonic { omega: 1.0 };
        assert!(spec(Bracket::Moyal, 0.0, 1).validate(&m, 1.0).is_err());
        assert!(spec(Bracket::Moyal, 1.0, 1).validate(&m, 1.0).is_err());
        assert!(spec(Bracket::MoyalTruncated { n_max: 0 }, 0.01, 1).validate(&m, 1.0).is_err());
        let env = Environment { diffusion: 0.2, gamma: 0.1, temperature: Some(1.0) };
        assert!(env.validate(1.0).is_ok());
        assert!(env.validate(2.0).is_err());
    }

    #[test]
    fn nan_aborts_with_step() {
        let g = grid(32, 8.0);
        let mut vals = vec![0.0; g.len()];
        vals[0] = 1.0;
        let mut w = WignerField::from_values(g.clone(), vals).unwrap();
        w.values_mut()[5] = f64::NAN;
        let mut p =
            Propagator::new(g, PotentialModel::Harmonic { omega: 1.0 }, &spec(Bracket::Moyal, 0.01, 3)).unwrap();
        match p.advance(&mut w, 3) {
            Err(Error::NumericAbort { step, .. }) => assert_eq!(step, 1),
            other => panic!("expected abort, got {other:?}"),
        }
    }
}
