//! Closed-form timescales, the Gaussian covariance oracle, a tangent-map
//! Lyapunov estimator and the macroscopic-body scenario report.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};
use crate::ode::{dopri5, rk4_step};
use crate::potentials::PotentialModel;
use crate::propagators::Environment;

/// Reduced Planck constant in J·s.
pub const HBAR_SI: f64 = 1.054_571_817e-34;
/// Boltzmann constant in J/K.
pub const KB_SI: f64 = 1.380_649e-23;
pub const SECONDS_PER_DAY: f64 = 86_400.0;
pub const SECONDS_PER_YEAR: f64 = 365.25 * SECONDS_PER_DAY;

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(name, format!("{name} must be positive (got {v})")))
    }
}

/// `(1/λ) ln(χσ_p/ħ)`.
pub fn t_hbar_chaotic(lambda: f64, chi: f64, sigma_p: f64, hbar: f64) -> Result<f64> {
    positive("lambda", lambda)?;
    positive("chi", chi)?;
    positive("sigma_p", sigma_p)?;
    positive("hbar", hbar)?;
    let ratio = chi * sigma_p / hbar;
    if ratio <= 1.0 {
        return Err(Error::AlreadyQuantum(format!("chi*sigma_p/hbar = {ratio} leaves no classical epoch")));
    }
    Ok(ratio.ln() / lambda)
}

/// `(1/λ) ln(A₀/ħ)`. Returns `f64::INFINITY` for `λ = 0`.
pub fn t_r(lambda: f64, action: f64, hbar: f64) -> Result<f64> {
    positive("action", action)?;
    positive("hbar", hbar)?;
    if !(lambda >= 0.0) {
        return Err(Error::config("lambda", "lambda must be non-negative"));
    }
    let ratio = action / hbar;
    if ratio < 1.0 {
        return Err(Error::AlreadyQuantum(format!("A0/hbar = {ratio} is below one")));
    }
    if lambda == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(ratio.ln() / lambda)
}

/// `(1/Ω)(A₀/ħ)^α`.
pub fn t_hbar_integrable(omega: f64, action: f64, hbar: f64, alpha: f64) -> Result<f64> {
    positive("omega", omega)?;
    positive("action", action)?;
    positive("hbar", hbar)?;
    positive("alpha", alpha)?;
    Ok((action / hbar).powf(alpha) / omega)
}

/// Thermal bath parameters; `temperature` is `k_B T` in energy units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalBath {
    pub gamma: f64,
    pub mass: f64,
    pub temperature: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecoherenceTime {
    /// `ħ²/(D Δx²)`, the decay time of `cos(pΔx/ħ)` fringes under diffusion `D`.
    pub fringe: f64,
    /// `τ_R (λ_dB/Δx)²` with `τ_R = 1/γ` and `λ_dB = ħ/√(2 m k_B T)`.
    pub thermal: Option<f64>,
    /// `γ⁻¹ ħ²/(D Δx²)` taken literally; dimensionally a time squared.
    pub literal_prefactor: Option<f64>,
    /// Whether `thermal` agrees with `fringe` to 1e-9 relative.
    pub consistent: Option<bool>,
}

pub fn decoherence_time(
    diffusion: f64,
    separation: f64,
    hbar: f64,
    bath: Option<ThermalBath>,
) -> Result<DecoherenceTime> {
    positive("D", diffusion)?;
    positive("separation", separation)?;
    positive("hbar", hbar)?;
    let fringe = hbar * hbar / (diffusion * separation * separation);
    let mut out = DecoherenceTime { fringe, thermal: None, literal_prefactor: None, consistent: None };
    if let Some(b) = bath {
        positive("gamma", b.gamma)?;
        positive("mass", b.mass)?;
        positive("temperature", b.temperature)?;
        let lambda_db = hbar / (2.0 * b.mass * b.temperature).sqrt();
        let thermal = (lambda_db / separation).powi(2) / b.gamma;
        out.thermal = Some(thermal);
        out.literal_prefactor = Some(fringe / b.gamma);
        out.consistent = Some((thermal - fringe).abs() <= 1e-9 * fringe);
    }
    Ok(out)
}

/// Critical dispersion `√(2D/λ)`.
pub fn sigma_c(diffusion: f64, lambda: f64) -> Result<f64> {
    if !(diffusion >= 0.0) {
        return Err(Error::config("D", "D must be non-negative"));
    }
    positive("lambda", lambda)?;
    Ok((2.0 * diffusion / lambda).sqrt())
}

/// Coherence length `ħ/σ_c`; infinite when `D = 0`.
pub fn coherence_length(diffusion: f64, lambda: f64, hbar: f64) -> Result<f64> {
    positive("hbar", hbar)?;
    Ok(hbar / sigma_c(diffusion, lambda)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibrationTime {
    /// `(H_eq/H₀)/Ḣ`.
    pub rate_form: f64,
    /// `λ⁻¹ H_eq/H₀`.
    pub lyapunov_form: f64,
}

pub fn t_eq(h_eq: f64, h0: f64, h_dot: f64, lambda: f64) -> Result<EquilibrationTime> {
    positive("H_eq", h_eq)?;
    positive("H0", h0)?;
    positive("lambda", lambda)?;
    if !(h_dot > 0.0) {
        return Err(Error::config("H_dot", "H_dot must be positive"));
    }
    Ok(EquilibrationTime { rate_form: h_eq / h0 / h_dot, lyapunov_form: h_eq / h0 / lambda })
}

/// Mean and covariance of a Gaussian phase-space distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianState {
    pub mean: [f64; 2],
    /// `[σxx, σxp, σpp]`.
    pub cov: [f64; 3],
}

impl GaussianState {
    pub fn new(mean: [f64; 2], cov: [[f64; 2]; 2]) -> Self {
        Self { mean, cov: [cov[0][0], cov[0][1], cov[1][1]] }
    }

    pub fn det(&self) -> f64 {
        self.cov[0] * self.cov[2] - self.cov[1] * self.cov[1]
    }

    pub fn matrix(&self) -> [[f64; 2]; 2] {
        [[self.cov[0], self.cov[1]], [self.cov[1], self.cov[2]]]
    }

    pub fn validate(&self, hbar: f64) -> Result<()> {
        let floor = 0.25 * hbar * hbar;
        if !(self.cov[0] > 0.0 && self.cov[2] > 0.0) || self.det() < floor * (1.0 - 1e-9) {
            return Err(Error::Unphysical(format!(
                "covariance determinant {:e} below (hbar/2)^2 = {floor:e}",
                self.det()
            )));
        }
        Ok(())
    }

    /// Linear entropy `ln(2√det Σ / ħ)`.
    pub fn entropy(&self, hbar: f64) -> f64 {
        (2.0 * self.det().sqrt() / hbar).ln()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<GaussianState>,
    pub entropy: Vec<f64>,
    /// Variance along the unit stable eigenvector of the flow, when the
    /// linearized flow has one.
    pub contracting_variance: Option<Vec<f64>>,
}

pub const ORACLE_TOLERANCE: f64 = 1e-10;

type Mat2 = [[f64; 2]; 2];

fn mat_mul(a: Mat2, b: Mat2) -> Mat2 {
    let mut r = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            r[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    r
}

fn transpose2(a: Mat2) -> Mat2 {
    [[a[0][0], a[1][0]], [a[0][1], a[1][1]]]
}

fn congruence(t: Mat2, s: Mat2) -> Mat2 {
    mat_mul(mat_mul(t, s), transpose2(t))
}

fn inverse2(a: Mat2) -> Mat2 {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    [[a[1][1] / det, -a[0][1] / det], [-a[1][0] / det, a[0][0] / det]]
}

/// Exact mean and covariance dynamics of a Gaussian under a quadratic
/// potential with momentum diffusion and friction.
///
/// When the flow matrix has real eigenvalues the equations are integrated in
/// its eigenbasis, so the contracting component is never computed as a small
/// difference of large numbers.
pub fn gaussian_oracle(
    model: &PotentialModel,
    env: Option<&Environment>,
    initial: GaussianState,
    mass: f64,
    hbar: f64,
    times: &[f64],
) -> Result<OracleTrajectory> {
    if !model.is_quadratic() {
        return Err(Error::UnsupportedModel(format!("{model:?} is not quadratic")));
    }
    positive("mass", mass)?;
    initial.validate(hbar)?;
    let k = 2.0 * model.coefficients(mass).0;
    let (d, g) = env.map_or((0.0, 0.0), |e| (e.diffusion, e.gamma));
    let a: Mat2 = [[0.0, 1.0 / mass], [-k, -2.0 * g]];
    let q: Mat2 = [[0.0, 0.0], [0.0, 2.0 * d]];

    // Columns of `v` are right eigenvectors (unstable first) when real.
    let disc = g * g - k / mass;
    let basis = (disc > 0.0).then(|| {
        let r = disc.sqrt();
        let (mu_u, mu_s) = (-g + r, -g - r);
        let v: Mat2 = [[1.0, 1.0], [mass * mu_u, mass * mu_s]];
        (v, mu_s)
    });
    let v = basis.map_or([[1.0, 0.0], [0.0, 1.0]], |(v, _)| v);
    let t = inverse2(v);
    let ap = mat_mul(mat_mul(t, a), v);
    let qp = congruence(t, q);
    let s0 = congruence(t, initial.matrix());
    let m0 =
        [t[0][0] * initial.mean[0] + t[0][1] * initial.mean[1], t[1][0] * initial.mean[0] + t[1][1] * initial.mean[1]];

    let rhs = move |_t: f64, y: &[f64; 5]| {
        let s: Mat2 = [[y[2], y[3]], [y[3], y[4]]];
        let as_ = mat_mul(ap, s);
        [
            ap[0][0] * y[0] + ap[0][1] * y[1],
            ap[1][0] * y[0] + ap[1][1] * y[1],
            2.0 * as_[0][0] + qp[0][0],
            as_[0][1] + as_[1][0] + qp[0][1],
            2.0 * as_[1][1] + qp[1][1],
        ]
    };
    let y0 = [m0[0], m0[1], s0[0][0], s0[0][1], s0[1][1]];
    let ys = dopri5(rhs, 0.0, y0, times, ORACLE_TOLERANCE, ORACLE_TOLERANCE * 1e-3)?;

    let states: Vec<GaussianState> = ys
        .iter()
        .map(|y| {
            let sp: Mat2 = [[y[2], y[3]], [y[3], y[4]]];
            let mean = [v[0][0] * y[0] + v[0][1] * y[1], v[1][0] * y[0] + v[1][1] * y[1]];
            GaussianState::new(mean, congruence(v, sp))
        })
        .collect();
    let entropy = ys
        .iter()
        .map(|y| {
            // det Σ = det(V)² det Σ'.
            let dv = v[0][0] * v[1][1] - v[0][1] * v[1][0];
            let det = dv * dv * (y[2] * y[4] - y[3] * y[3]);
            (2.0 * det.sqrt() / hbar).ln()
        })
        .collect();
    let contracting_variance = basis.map(|(v, _)| {
        let n = (v[0][1] * v[0][1] + v[1][1] * v[1][1]).sqrt();
        let u = [v[0][1] / n, v[1][1] / n];
        let c = [u[0] * v[0][0] + u[1] * v[1][0], u[0] * v[0][1] + u[1] * v[1][1]];
        ys.iter().map(|y| c[0] * c[0] * y[2] + 2.0 * c[0] * c[1] * y[3] + c[1] * c[1] * y[4]).collect()
    });
    Ok(OracleTrajectory { times: times.to_vec(), states, entropy, contracting_variance })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovEstimate {
    pub rate: f64,
    pub stderr: f64,
    pub segment_rates: Vec<f64>,
    /// Set when the segment scatter exceeds half the mean rate.
    pub low_confidence: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovSettings {
    pub step: f64,
    /// Deviation vector is renormalized after this much time.
    pub renormalize_every: f64,
    pub segments: usize,
}

impl Default for LyapunovSettings {
    fn default() -> Self {
        Self { step: 0.005, renormalize_every: 0.5, segments: 10 }
    }
}

/// Largest Lyapunov exponent along the trajectory from `(x0, p0)`.
pub fn classical_lyapunov(
    model: &PotentialModel,
    mass: f64,
    initial: [f64; 2],
    duration: f64,
    settings: LyapunovSettings,
) -> Result<LyapunovEstimate> {
    positive("duration", duration)?;
    positive("step", settings.step)?;
    positive("renormalize_every", settings.renormalize_every)?;
    if settings.segments < 2 {
        return Err(Error::config("segments", "need at least two segments"));
    }
    let m = *model;
    let rhs = move |t: f64, y: &[f64; 4]| {
        let v1 = m.evaluate(y[0], t, mass).d1;
        let v2 = m.derivative(2, y[0], t, mass);
        [y[1] / mass, -v1, y[3] / mass, -v2 * y[2]]
    };
    let sub = (settings.renormalize_every / settings.step).ceil().max(1.0) as usize;
    let h = settings.renormalize_every / sub as f64;
    let blocks = (duration / settings.renormalize_every).round().max(settings.segments as f64) as usize;
    let per_segment = blocks / settings.segments;
    let blocks = per_segment * settings.segments;
    let mut y = [initial[0], initial[1], 1.0, 0.0];
    let mut t = 0.0;
    let mut step = 0usize;
    let mut seg_sum = 0.0;
    let mut segment_rates = Vec::with_capacity(settings.segments);
    for b in 0..blocks {
        for _ in 0..sub {
            y = rk4_step(&rhs, t, &y, h);
            step += 1;
            t = step as f64 * h;
        }
        let n = (y[2] * y[2] + y[3] * y[3]).sqrt();
        if !(n.is_finite() && n > 0.0) || !y[0].is_finite() {
            return Err(Error::NumericAbort { step, message: "tangent integration diverged".into() });
        }
        seg_sum += n.ln();
        y[2] /= n;
        y[3] /= n;
        if (b + 1) % per_segment == 0 {
            segment_rates.push(seg_sum / (per_segment as f64 * settings.renormalize_every));
            seg_sum = 0.0;
        }
    }
    let ns = segment_rates.len() as f64;
    let rate = segment_rates.iter().sum::<f64>() / ns;
    let var = segment_rates.iter().map(|r| (r - rate).powi(2)).sum::<f64>() / (ns - 1.0);
    let sd = var.sqrt();
    Ok(LyapunovEstimate { rate, stderr: sd / ns.sqrt(), low_confidence: !(sd <= 0.5 * rate.abs()), segment_rates })
}

/// Inputs for the action and recurrence-time estimate of a macroscopic body.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MacroScenario {
    pub name: String,
    pub mass_kg: f64,
    pub velocity_m_per_s: f64,
    /// Period multiplying the kinetic energy to form the action.
    pub period_s: f64,
    /// Lyapunov time `1/λ`.
    pub lyapunov_time_s: f64,
    #[serde(default)]
    pub temperature_k: Option<f64>,
    #[serde(default)]
    pub separation_m: Option<f64>,
    #[serde(default)]
    pub relaxation_time_s: Option<f64>,
    #[serde(default = "default_hbar")]
    pub hbar_j_s: f64,
    /// Published value for comparison, in years.
    #[serde(default)]
    pub reference_t_r_years: Option<f64>,
    #[serde(default)]
    pub reference_log_ratio: Option<f64>,
}

fn default_hbar() -> f64 {
    HBAR_SI
}

impl MacroScenario {
    pub fn validate(&self) -> Result<()> {
        positive("mass_kg", self.mass_kg)?;
        positive("velocity_m_per_s", self.velocity_m_per_s)?;
        positive("period_s", self.period_s)?;
        positive("hbar_j_s", self.hbar_j_s)?;
        if !(self.lyapunov_time_s > 0.0) {
            return Err(Error::config("lyapunov_time_s", "lyapunov_time_s must be positive"));
        }
        Ok(())
    }

    /// `A₀ = ½ m v² · period`.
    pub fn action(&self) -> f64 {
        0.5 * self.mass_kg * self.velocity_m_per_s.powi(2) * self.period_s
    }

    pub fn lambda(&self) -> f64 {
        1.0 / self.lyapunov_time_s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub name: String,
    pub action_j_s: f64,
    pub log_ratio: f64,
    pub lambda_per_s: f64,
    pub t_r_s: f64,
    pub t_r_years: f64,
    pub reference_t_r_years: Option<f64>,
    pub reference_log_ratio: Option<f64>,
    /// Decoherence time for the given separation, if temperature and relaxation time are known.
    pub decoherence_time_s: Option<f64>,
    pub warnings: Vec<String>,
}

impl ScenarioReport {
    pub fn ratio_to_reference(&self) -> Option<f64> {
        self.reference_t_r_years.map(|r| self.t_r_years / r)
    }

    pub fn rows(&self) -> Vec<(String, String)> {
        let mut rows = vec![
            ("scenario".into(), self.name.clone()),
            ("action_J_s".into(), format!("{:e}", self.action_j_s)),
            ("ln_A0_over_hbar".into(), format!("{:.3}", self.log_ratio)),
            ("lambda_per_s".into(), format!("{:e}", self.lambda_per_s)),
            ("t_r_s".into(), format!("{:e}", self.t_r_s)),
            ("t_r_years".into(), format!("{:.3}", self.t_r_years)),
        ];
        if let Some(r) = self.reference_log_ratio {
            rows.push(("reference_ln_A0_over_hbar".into(), format!("{r}")));
        }
        if let Some(r) = self.reference_t_r_years {
            rows.push(("reference_t_r_years".into(), format!("{r}")));
            rows.push(("t_r_over_reference".into(), format!("{:.3}", self.t_r_years / r)));
        }
        if let Some(td) = self.decoherence_time_s {
            rows.push(("decoherence_time_s".into(), format!("{td:e}")));
        }
        rows
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("quantity,value\n");
        for (k, v) in self.rows() {
            s.push_str(&format!("{k},{v}\n"));
        }
        s
    }
}

impl fmt::Display for ScenarioReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows = self.rows();
        let w = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        for (k, v) in rows {
            writeln!(f, "{k:<w$}  {v}")?;
        }
        for warn in &self.warnings {
            writeln!(f, "warning: {warn}")?;
        }
        Ok(())
    }
}

/// Action, `ln(A₀/ħ)` and recurrence time for a macroscopic scenario.
pub fn hyperion_report(sc: &MacroScenario) -> Result<ScenarioReport> {
    sc.validate()?;
    let action = sc.action();
    let lambda = sc.lambda();
    let log_ratio = (action / sc.hbar_j_s).ln();
    let t_r_s = t_r(lambda, action, sc.hbar_j_s)?;
    let mut warnings = Vec::new();
    if log_ratio < 10.0 {
        warnings.push(format!("A0/hbar = e^{log_ratio:.2} is not large; the estimate is marginal"));
    }
    let decoherence_time_s = match (sc.temperature_k, sc.separation_m, sc.relaxation_time_s) {
        (Some(t), Some(dx), Some(tau)) => {
            let bath = ThermalBath { gamma: 1.0 / tau, mass: sc.mass_kg, temperature: KB_SI * t };
            let d = 2.0 * bath.mass * bath.gamma * bath.temperature;
            Some(decoherence_time(d, dx, sc.hbar_j_s, Some(bath))?.fringe)
        }
        _ => None,
    };
    Ok(ScenarioReport {
        name: sc.name.clone(),
        action_j_s: action,
        log_ratio,
        lambda_per_s: lambda,
        t_r_s,
        t_r_years: t_r_s / SECONDS_PER_YEAR,
        reference_t_r_years: sc.reference_t_r_years,
        reference_log_ratio: sc.reference_log_ratio,
        decoherence_time_s,
        warnings,
    })
}
