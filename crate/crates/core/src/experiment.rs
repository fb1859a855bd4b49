//! Orchestration of runs, paired comparisons, sweeps and estimates.
//!
//! Every file written here is accompanied by `<file>.config.toml`, a verbatim
//! copy of the configuration that produced it. Snapshot and heatmap
//! directories get a single `config.toml`.

use rayon::prelude::*;
use serde::Serialize;
use std::fs;
use std::path::{Path, PathBuf};

use crate::config::{RunConfig, SweepConfig, SweepParameter};
use crate::diagnostics::{
    breakdown_time, divergence, entropy_rate_fit, fmt_f64, linear_fit, local_variance, stable_vector,
    write_divergence_csv, Breakdown, DivergencePoint, LinearFit,
};
use crate::error::{Error, Result};
use crate::estimators::{
    classical_lyapunov, gaussian_oracle, hyperion_report, GaussianState, LyapunovEstimate, LyapunovSettings,
    MacroScenario, ScenarioReport,
};
use crate::field::{make_state, InitialStateSpec, WignerField};
use crate::io::{read_snapshot, save_pgm, write_snapshot};
use crate::potentials::{Bracket, PotentialModel};
use crate::propagators::{evolve, evolve_paired, Evolution, PairedEvolution};

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn sidecar_path(file: &Path) -> PathBuf {
    let mut s = file.as_os_str().to_owned();
    s.push(".config.toml");
    PathBuf::from(s)
}

/// Writes `bytes` to `dir/name` plus the config sidecar. Returns the path.
fn emit(dir: &Path, name: &Path, bytes: &[u8], config_text: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    if let Some(parent) = path.parent() {
        create_dir(parent)?;
    }
    fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
    let side = sidecar_path(&path);
    fs::write(&side, config_text).map_err(|e| Error::io(&side, e))?;
    Ok(path)
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Vec<u8> {
    let mut buf = Vec::new();
    f(&mut buf).expect("writing to memory cannot fail");
    buf
}

fn json_bytes<T: Serialize>(v: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("report types serialize");
    s.push('\n');
    s.into_bytes()
}

fn step_label(t: f64, dt: f64) -> String {
    format!("{:06}", (t / dt).round() as u64)
}

/// Writes snapshots (and heatmaps if enabled) under `dir/<prefix>snapshots`.
fn emit_fields(cfg: &RunConfig, evo: &Evolution, dir: &Path, prefix: &str, config_text: &str) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    let dt = cfg.evolution.dt;
    if !evo.snapshots.is_empty() {
        let sdir = dir.join(format!("{prefix}snapshots"));
        create_dir(&sdir)?;
        fs::write(sdir.join("config.toml"), config_text).map_err(|e| Error::io(&sdir, e))?;
        for (t, field) in &evo.snapshots {
            let (bin, _) = write_snapshot(&sdir.join(format!("snap_{}", step_label(*t, dt))), field, *t)?;
            files.push(bin);
        }
    }
    if cfg.outputs.heatmaps {
        let hdir = dir.join(format!("{prefix}heatmaps"));
        create_dir(&hdir)?;
        fs::write(hdir.join("config.toml"), config_text).map_err(|e| Error::io(&hdir, e))?;
        for (t, field) in &evo.snapshots {
            let p = hdir.join(format!("snap_{}.pgm", step_label(*t, dt)));
            save_pgm(&p, field)?;
            files.push(p);
        }
        let p = hdir.join("final.pgm");
        save_pgm(&p, &evo.final_field)?;
        files.push(p);
    }
    Ok(files)
}

pub struct RunOutcome {
    pub evolution: Evolution,
    pub csv: PathBuf,
}

/// Single evolution. Writes the trajectory CSV and any snapshots/heatmaps.
pub fn run(cfg: &RunConfig, config_text: &str, out: &Path) -> Result<RunOutcome> {
    create_dir(out)?;
    let initial = cfg.initial_field()?;
    log::info!(
        "run: {:?}, {:?} bracket, {}x{} grid, {} steps of {}",
        cfg.potential,
        cfg.evolution.bracket,
        cfg.grid.nx,
        cfg.grid.np,
        cfg.evolution.n_steps,
        cfg.evolution.dt
    );
    let evolution = evolve(&initial, &cfg.potential, &cfg.evolution, &cfg.observers())?;
    let csv = emit(out, &cfg.outputs.csv, &csv_bytes(|b| evolution.record.write_csv(b)), config_text)?;
    emit_fields(cfg, &evolution, out, "", config_text)?;
    Ok(RunOutcome { evolution, csv })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BreakdownReport {
    pub moment_threshold: f64,
    pub moment: Breakdown,
    pub correction_threshold: f64,
    /// Present only when the correction ratio was recorded.
    pub correction: Option<Breakdown>,
}

pub struct CompareOutcome {
    pub paired: PairedEvolution,
    pub divergence: Vec<DivergencePoint>,
    pub breakdown: BreakdownReport,
}

/// Quantum and classical runs from the same initial field, sharing the environment.
pub fn compare_paired(cfg: &RunConfig) -> Result<(PairedEvolution, Vec<DivergencePoint>, BreakdownReport)> {
    if cfg.evolution.bracket == Bracket::Poisson {
        return Err(Error::config("evolution.bracket", "compare needs a quantum bracket (moyal or moyal_truncated)"));
    }
    let initial = cfg.initial_field()?;
    let classical = cfg.evolution.with_bracket(Bracket::Poisson);
    let paired = evolve_paired(&initial, &cfg.potential, &cfg.evolution, &classical, &cfg.observers())?;
    let points = divergence(&paired.quantum.record, &paired.classical.record)?;
    let times: Vec<f64> = points.iter().map(|d| d.t).collect();
    let moments: Vec<f64> = points.iter().map(|d| d.max_moment()).collect();
    let correction = if cfg.outputs.correction_ratio {
        let r: Vec<f64> = paired.quantum.record.column(|s| s.correction_ratio.unwrap_or(f64::NAN));
        Some(breakdown_time(&times, &r, cfg.compare.correction_threshold))
    } else {
        None
    };
    let report = BreakdownReport {
        moment_threshold: cfg.compare.moment_threshold,
        moment: breakdown_time(&times, &moments, cfg.compare.moment_threshold),
        correction_threshold: cfg.compare.correction_threshold,
        correction,
    };
    Ok((paired, points, report))
}

/// Paired run. Writes both trajectories, the divergence series and the breakdown report.
pub fn compare(cfg: &RunConfig, config_text: &str, out: &Path) -> Result<CompareOutcome> {
    create_dir(out)?;
    log::info!("compare: {:?}, {}x{} grid, {} steps", cfg.potential, cfg.grid.nx, cfg.grid.np, cfg.evolution.n_steps);
    let (paired, points, breakdown) = compare_paired(cfg)?;
    emit(out, Path::new("quantum.csv"), &csv_bytes(|b| paired.quantum.record.write_csv(b)), config_text)?;
    emit(out, Path::new("classical.csv"), &csv_bytes(|b| paired.classical.record.write_csv(b)), config_text)?;
    emit(out, Path::new("divergence.csv"), &csv_bytes(|b| write_divergence_csv(&points, b)), config_text)?;
    emit(out, Path::new("breakdown.json"), &json_bytes(&breakdown), config_text)?;
    emit_fields(cfg, &paired.quantum, out, "quantum_", config_text)?;
    emit_fields(cfg, &paired.classical, out, "classical_", config_text)?;
    Ok(CompareOutcome { paired, divergence: points, breakdown })
}

/// Aggregated results of one sweep member.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MemberSummary {
    pub breakdown: Option<BreakdownReport>,
    pub final_min_cov_eig: f64,
    /// Final variance along the contracting direction of an inverted
    /// quadratic potential, measured in a window around the bulk.
    pub contracting_variance: Option<f64>,
    /// Late-window (second half) slope of the linear entropy.
    pub entropy_rate: Option<f64>,
    /// L2 distance of the final field from the reference (dt sweeps only).
    pub reference_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MemberResult {
    pub index: usize,
    pub value: f64,
    pub summary: std::result::Result<MemberSummary, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepFit {
    /// What was regressed on what.
    pub description: String,
    pub fit: LinearFit,
    /// Value the slope is compared against.
    pub expected_slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub parameter: &'static str,
    pub members: Vec<MemberResult>,
    /// One fit per applicable estimator; ħ sweeps fit both breakdown detectors.
    pub fits: Vec<SweepFit>,
    pub lyapunov: Option<LyapunovEstimate>,
    pub notes: Vec<String>,
}

impl SweepReport {
    pub fn failures(&self) -> usize {
        self.members.iter().filter(|m| m.summary.is_err()).count()
    }
}

fn gaussian_reference(cfg: &RunConfig, like: &WignerField) -> Result<Option<WignerField>> {
    let InitialStateSpec::Gaussian { x0, p0, sigma_x, sigma_p, cov_xp } = cfg.initial else {
        return Ok(None);
    };
    if !cfg.potential.is_quadratic() {
        return Ok(None);
    }
    let init = GaussianState::new([x0, p0], [[sigma_x * sigma_x, cov_xp], [cov_xp, sigma_p * sigma_p]]);
    let t = cfg.evolution.duration();
    let orc =
        gaussian_oracle(&cfg.potential, cfg.evolution.environment.as_ref(), init, cfg.grid.mass, cfg.grid.hbar, &[t])?;
    let s = orc.states[0];
    let spec = InitialStateSpec::Gaussian {
        x0: s.mean[0],
        p0: s.mean[1],
        sigma_x: s.cov[0].sqrt(),
        sigma_p: s.cov[2].sqrt(),
        cov_xp: s.cov[1],
    };
    Ok(Some(make_state(like.grid_arc().clone(), &spec)?))
}

struct MemberRun {
    summary: MemberSummary,
    final_field: WignerField,
}

fn run_member(sweep: &SweepConfig, cfg: &RunConfig, config_text: &str, dir: &Path) -> Result<MemberRun> {
    let (evo, breakdown) = if sweep.paired {
        let out = compare(cfg, config_text, dir)?;
        (out.paired.quantum, Some(out.breakdown))
    } else {
        (run(cfg, config_text, dir)?.evolution, None)
    };
    let times = evo.record.times();
    let t_end = cfg.evolution.duration();
    let entropy_rate = entropy_rate_fit(&times, &evo.record.entropy(), (0.5 * t_end, t_end)).ok().map(|f| f.rate);
    let summary = MemberSummary {
        breakdown,
        final_min_cov_eig: evo.record.last().map_or(f64::NAN, |s| s.min_cov_eig),
        contracting_variance: contracting_variance(cfg, &evo.final_field)?,
        entropy_rate,
        reference_error: None,
    };
    Ok(MemberRun { summary, final_field: evo.final_field })
}

/// Window half-width is 30 diffusion lengths `sqrt(D/λ)`, wide enough for the
/// plateau and narrow enough to exclude mass wrapped around the domain.
fn contracting_variance(cfg: &RunConfig, field: &WignerField) -> Result<Option<f64>> {
    let mass = cfg.grid.mass;
    let d = cfg.evolution.environment.map_or(0.0, |e| e.diffusion);
    let Some(lambda) = quadratic_rate(&cfg.potential, mass).filter(|_| d > 0.0) else {
        return Ok(None);
    };
    let e = stable_vector(2.0 * cfg.potential.coefficients(mass).0, mass)?;
    local_variance(field, e, 30.0 * (d / lambda).sqrt()).map(Some)
}

fn quadratic_rate(model: &PotentialModel, mass: f64) -> Option<f64> {
    match *model {
        PotentialModel::Inverted { lambda } => Some(lambda),
        _ if model.is_quadratic() => {
            let c2 = model.coefficients(mass).0;
            (c2 < 0.0).then(|| (-2.0 * c2 / mass).sqrt())
        }
        _ => None,
    }
}

/// Tangent-map exponent along the orbit of the initial centroid.
fn sweep_lyapunov(cfg: &SweepConfig) -> Result<LyapunovEstimate> {
    let (InitialStateSpec::Gaussian { x0, p0, .. } | InitialStateSpec::Cat { x0, p0, .. }) = cfg.base.initial;
    classical_lyapunov(
        &cfg.base.potential,
        cfg.base.grid.mass,
        [x0, p0],
        cfg.lyapunov_duration,
        LyapunovSettings::default(),
    )
}

fn clone_error(e: &Error) -> Error {
    match e {
        Error::Config { field, message } => Error::config(field.clone(), message.clone()),
        other => Error::Contract(other.to_string()),
    }
}

fn member_label(i: usize) -> String {
    format!("member_{i:03}")
}

/// Runs every sweep member (on `parallel` threads) and fits the scaling law
/// appropriate to the swept parameter. Member failures are collected, not fatal.
pub fn sweep(cfg: &SweepConfig, config_text: &str, out: &Path, parallel: usize) -> Result<SweepReport> {
    create_dir(out)?;
    let members: Vec<Result<RunConfig>> = cfg.values.iter().map(|&v| cfg.member(v)).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallel.max(1))
        .build()
        .map_err(|e| Error::Contract(format!("thread pool: {e}")))?;
    log::info!("sweep over {} = {:?} on {} thread(s)", cfg.parameter.name(), cfg.values, parallel.max(1));
    let runs: Vec<Result<MemberRun>> = pool.install(|| {
        members
            .par_iter()
            .enumerate()
            .map(|(i, m)| {
                let r = m
                    .as_ref()
                    .map_err(clone_error)
                    .and_then(|m| run_member(cfg, m, config_text, &out.join(member_label(i))));
                if let Err(e) = &r {
                    log::warn!("member {i} ({} = {}) failed: {e}", cfg.parameter.name(), cfg.values[i]);
                }
                r
            })
            .collect()
    });

    let mut notes = Vec::new();
    let mut results: Vec<MemberResult> = Vec::with_capacity(runs.len());
    let mut finals: Vec<Option<WignerField>> = Vec::with_capacity(runs.len());
    for (i, r) in runs.into_iter().enumerate() {
        let (summary, field) = match r {
            Ok(m) => (Ok(m.summary), Some(m.final_field)),
            Err(e) => (Err(e.to_string()), None),
        };
        results.push(MemberResult { index: i, value: cfg.values[i], summary });
        finals.push(field);
    }

    let mut lyapunov = None;
    let fits: Vec<SweepFit> = match cfg.parameter {
        SweepParameter::Hbar => {
            let est = sweep_lyapunov(cfg)?;
            let expected = 1.0 / est.rate;
            lyapunov = Some(est);
            type Detector = fn(&BreakdownReport) -> Option<f64>;
            let detectors: [(&str, Detector); 2] = [
                ("moment breakdown time vs ln(1/hbar)", |b| b.moment.time()),
                ("correction-ratio breakdown time vs ln(1/hbar)", |b| b.correction.as_ref()?.time()),
            ];
            detectors
                .into_iter()
                .filter_map(|(description, time)| {
                    let (xs, ys): (Vec<f64>, Vec<f64>) = results
                        .iter()
                        .filter_map(|m| {
                            Some(((1.0 / m.value).ln(), time(m.summary.as_ref().ok()?.breakdown.as_ref()?)?))
                        })
                        .unzip();
                    fit_or_note(&xs, &ys, description, expected, &mut notes)
                })
                .collect()
        }
        SweepParameter::Diffusion => {
            let mass = cfg.base.grid.mass;
            let lambda = match quadratic_rate(&cfg.base.potential, mass) {
                Some(l) => l,
                None => {
                    let est = sweep_lyapunov(cfg)?;
                    let r = est.rate;
                    lyapunov = Some(est);
                    r
                }
            };
            let windowed = quadratic_rate(&cfg.base.potential, mass).is_some();
            let (xs, ys): (Vec<f64>, Vec<f64>) = results
                .iter()
                .filter_map(|m| {
                    let s = m.summary.as_ref().ok()?;
                    let v = if windowed { s.contracting_variance? } else { s.final_min_cov_eig };
                    Some((2.0 * m.value / lambda, v))
                })
                .unzip();
            let description = if windowed {
                "final contracting-direction variance vs 2D/lambda"
            } else {
                "final min covariance eigenvalue vs 2D/lambda"
            };
            fit_or_note(&xs, &ys, description, 1.0, &mut notes).into_iter().collect()
        }
        SweepParameter::Dt => {
            let ok = (0..finals.len()).find(|&i| finals[i].is_some());
            let reference = match ok {
                Some(i) => {
                    gaussian_reference(members[i].as_ref().map_err(clone_error)?, finals[i].as_ref().expect("checked"))?
                }
                None => None,
            };
            let reference = match reference {
                Some(r) => {
                    notes.push("reference: exact Gaussian evolution".into());
                    Some((r, usize::MAX))
                }
                None => {
                    let finest = (0..results.len())
                        .filter(|&i| finals[i].is_some())
                        .min_by(|&a, &b| cfg.values[a].total_cmp(&cfg.values[b]));
                    if let Some(i) = finest {
                        notes.push(format!("reference: finest member dt = {}", cfg.values[i]));
                    }
                    finest.map(|i| (finals[i].clone().expect("finest member succeeded"), i))
                }
            };
            let mut pts = Vec::new();
            if let Some((r, skip)) = reference {
                for (i, m) in results.iter_mut().enumerate() {
                    if let (Ok(s), Some(f)) = (m.summary.as_mut(), &finals[i]) {
                        if i != skip {
                            let e = f.l2_distance(&r)?;
                            s.reference_error = Some(e);
                            pts.push((m.value.ln(), e.ln()));
                        }
                    }
                }
            }
            let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
            fit_or_note(&xs, &ys, "ln(final L2 error) vs ln(dt)", 2.0, &mut notes).into_iter().collect()
        }
        SweepParameter::DriveAmplitude => Vec::new(),
    };

    let report = SweepReport { parameter: cfg.parameter.name(), members: results, fits, lyapunov, notes };
    emit(out, Path::new("summary.csv"), summary_csv(&report).as_bytes(), config_text)?;
    emit(out, Path::new("failures.csv"), failures_csv(&report).as_bytes(), config_text)?;
    emit(out, Path::new("fit.json"), &json_bytes(&report), config_text)?;
    Ok(report)
}

fn fit_or_note(xs: &[f64], ys: &[f64], description: &str, expected: f64, notes: &mut Vec<String>) -> Option<SweepFit> {
    match linear_fit(xs, ys) {
        Ok(fit) => Some(SweepFit { description: description.into(), fit, expected_slope: expected }),
        Err(e) => {
            notes.push(format!("no fit of {description}: {e}"));
            None
        }
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn breakdown_cell(b: Option<&Breakdown>) -> String {
    match b {
        Some(Breakdown::Reached { t }) => fmt_f64(*t),
        Some(Breakdown::NotReached { .. }) => "not_reached".into(),
        None => String::new(),
    }
}

pub fn summary_csv(report: &SweepReport) -> String {
    let mut s = String::from(
        "index,value,status,breakdown_moment_t,breakdown_correction_t,final_min_cov_eig,contracting_variance,entropy_rate,reference_error\n",
    );
    for m in &report.members {
        match &m.summary {
            Ok(x) => {
                let b = x.breakdown.as_ref();
                s += &format!(
                    "{},{},ok,{},{},{},{},{},{}\n",
                    m.index,
                    fmt_f64(m.value),
                    breakdown_cell(b.map(|b| &b.moment)),
                    breakdown_cell(b.and_then(|b| b.correction.as_ref())),
                    fmt_f64(x.final_min_cov_eig),
                    opt(x.contracting_variance),
                    opt(x.entropy_rate),
                    opt(x.reference_error)
                );
            }
            Err(_) => s += &format!("{},{},failed,,,,,,\n", m.index, fmt_f64(m.value)),
        }
    }
    s
}

pub fn failures_csv(report: &SweepReport) -> String {
    let mut s = String::from("index,value,error\n");
    for m in &report.members {
        if let Err(e) = &m.summary {
            s += &format!("{},{},\"{}\"\n", m.index, fmt_f64(m.value), e.replace('"', "'"));
        }
    }
    s
}

/// Closed-form estimate for a macroscopic body; writes `estimate.csv`.
pub fn estimate(sc: &MacroScenario, config_text: &str, out: &Path) -> Result<ScenarioReport> {
    create_dir(out)?;
    let report = hyperion_report(sc)?;
    emit(out, Path::new("estimate.csv"), report.to_csv().as_bytes(), config_text)?;
    Ok(report)
}

/// Converts a stored snapshot into a 16-bit PGM heatmap.
pub fn snapshot_to_pgm(input: &Path, output: &Path) -> Result<f64> {
    let (field, t) = read_snapshot(input)?;
    if let Some(parent) = output.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    save_pgm(output, &field)?;
    Ok(t)
}
