//! TOML run, sweep and scenario configuration.
//!
//! Keys carry their units in the name (`dt_time`, `D_p2_per_time`, ...).
//! Every validation error names the block and key it concerns, e.g.
//! `invalid evolution.dt_time: dt must be positive`.

use serde::de::DeserializeOwned;
use serde::Deserialize;
use std::path::PathBuf;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::estimators::MacroScenario;
use crate::field::{make_state, InitialStateSpec, WignerField};
use crate::grid::{GridConfig, PhaseSpaceGrid};
use crate::potentials::{Bracket, PotentialModel};
use crate::propagators::{Environment, EvolutionSpec, Observers};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridBlock {
    nx: usize,
    np: usize,
    x_min_length: f64,
    x_max_length: f64,
    p_min_momentum: f64,
    p_max_momentum: f64,
    hbar_action: f64,
    #[serde(default = "one")]
    mass: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PotentialBlock {
    kind: String,
    omega_per_time: Option<f64>,
    lambda_per_time: Option<f64>,
    a_energy_per_length2: Option<f64>,
    b_energy_per_length4: Option<f64>,
    drive_force: Option<f64>,
    drive_frequency_per_time: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct InitialBlock {
    kind: String,
    #[serde(default)]
    x0_length: f64,
    #[serde(default)]
    p0_momentum: f64,
    sigma_x_length: f64,
    sigma_p_momentum: f64,
    #[serde(default)]
    cov_xp_action: f64,
    separation_length: Option<f64>,
    #[serde(default)]
    phase_rad: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EvolutionBlock {
    bracket: String,
    n_max: Option<u32>,
    dt_time: f64,
    n_steps: usize,
    #[serde(default = "one_usize")]
    record_every: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
struct EnvironmentBlock {
    #[serde(default)]
    D_p2_per_time: f64,
    #[serde(default)]
    gamma_per_time: f64,
    temperature_energy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputsConfig {
    #[serde(default = "default_csv")]
    pub csv: PathBuf,
    /// Steps between field snapshots; 0 disables them.
    #[serde(default)]
    pub snapshot_every_steps: usize,
    /// Write a PGM heatmap for every snapshot and for the final field.
    #[serde(default)]
    pub heatmaps: bool,
    #[serde(default)]
    pub correction_ratio: bool,
    /// Fringe tracking for cat states; defaults to on.
    #[serde(default = "yes")]
    pub fringes: bool,
}

impl Default for OutputsConfig {
    fn default() -> Self {
        Self { csv: default_csv(), snapshot_every_steps: 0, heatmaps: false, correction_ratio: false, fringes: true }
    }
}

/// Breakdown detection thresholds for paired runs.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    #[serde(default = "default_moment_threshold")]
    pub moment_threshold: f64,
    #[serde(default = "one")]
    pub correction_threshold: f64,
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self { moment_threshold: default_moment_threshold(), correction_threshold: 1.0 }
    }
}

fn one() -> f64 {
    1.0
}
fn one_usize() -> usize {
    1
}
fn yes() -> bool {
    true
}
fn default_csv() -> PathBuf {
    PathBuf::from("trajectory.csv")
}
fn default_moment_threshold() -> f64 {
    0.1
}

/// A fully validated single-run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub potential: PotentialModel,
    pub initial: InitialStateSpec,
    pub evolution: EvolutionSpec,
    pub outputs: OutputsConfig,
    pub compare: CompareConfig,
}

const RUN_BLOCKS: [&str; 7] = ["grid", "potential", "initial", "evolution", "environment", "outputs", "compare"];

fn parse_table(text: &str) -> Result<toml::Table> {
    text.parse::<toml::Table>().map_err(|e| Error::Parse(e.to_string()))
}

fn block<T: DeserializeOwned>(table: &toml::Table, name: &str) -> Result<Option<T>> {
    match table.get(name) {
        None => Ok(None),
        Some(toml::Value::Table(t)) => {
            serde_path_to_error::deserialize(toml::Value::Table(t.clone())).map(Some).map_err(|e| {
                let field = match e.path().iter().count() {
                    0 => name.to_owned(),
                    _ => format!("{name}.{}", e.path()),
                };
                Error::config(field, e.inner().message().to_string())
            })
        }
        Some(_) => Err(Error::config(name, "expected a [table]")),
    }
}

fn required<T: DeserializeOwned>(table: &toml::Table, name: &str) -> Result<T> {
    block(table, name)?.ok_or_else(|| Error::config(name, "missing block"))
}

/// Rewrites an error raised by a library validator so it names the config key.
fn in_block(name: &str, keys: &[(&str, &str)], err: Error) -> Error {
    match err {
        Error::Config { field, message } => {
            let key = keys.iter().find(|(lib, _)| *lib == field).map_or(field.as_str(), |(_, k)| k);
            Error::config(format!("{name}.{key}"), message)
        }
        other => Error::config(name, other.to_string()),
    }
}

const GRID_KEYS: [(&str, &str); 6] = [
    ("x_min", "x_min_length"),
    ("x_max", "x_max_length"),
    ("p_min", "p_min_momentum"),
    ("p_max", "p_max_momentum"),
    ("hbar", "hbar_action"),
    ("mass", "mass"),
];
const POTENTIAL_KEYS: [(&str, &str); 6] = [
    ("omega", "omega_per_time"),
    ("lambda", "lambda_per_time"),
    ("a", "a_energy_per_length2"),
    ("b", "b_energy_per_length4"),
    ("amplitude", "drive_force"),
    ("frequency", "drive_frequency_per_time"),
];
const INITIAL_KEYS: [(&str, &str); 3] =
    [("sigma_x", "sigma_x_length"), ("sigma_p", "sigma_p_momentum"), ("separation", "separation_length")];
const EVOLUTION_KEYS: [(&str, &str); 2] = [("dt", "dt_time"), ("n_max", "n_max")];
const ENVIRONMENT_KEYS: [(&str, &str); 3] =
    [("D", "D_p2_per_time"), ("gamma", "gamma_per_time"), ("temperature", "temperature_energy")];

fn need(v: Option<f64>, kind: &str, key: &str) -> Result<f64> {
    v.ok_or_else(|| Error::config(format!("potential.{key}"), format!("required for kind \"{kind}\"")))
}

impl PotentialBlock {
    fn into_model(self) -> Result<PotentialModel> {
        let k = self.kind.as_str();
        let forbid = |present: bool, key: &str| -> Result<()> {
            if present {
                Err(Error::config(format!("potential.{key}"), format!("not used by kind \"{k}\"")))
            } else {
                Ok(())
            }
        };
        let well = matches!(k, "quartic_double_well" | "driven_double_well");
        forbid(self.omega_per_time.is_some() && k != "harmonic", "omega_per_time")?;
        forbid(self.lambda_per_time.is_some() && k != "inverted", "lambda_per_time")?;
        forbid(self.a_energy_per_length2.is_some() && !well, "a_energy_per_length2")?;
        forbid(self.b_energy_per_length4.is_some() && !well, "b_energy_per_length4")?;
        forbid(self.drive_force.is_some() && k != "driven_double_well", "drive_force")?;
        forbid(self.drive_frequency_per_time.is_some() && k != "driven_double_well", "drive_frequency_per_time")?;
        let model = match k {
            "free" => PotentialModel::Free,
            "harmonic" => PotentialModel::Harmonic { omega: need(self.omega_per_time, k, "omega_per_time")? },
            "inverted" => PotentialModel::Inverted { lambda: need(self.lambda_per_time, k, "lambda_per_time")? },
            "quartic_double_well" => PotentialModel::QuarticDoubleWell {
                a: need(self.a_energy_per_length2, k, "a_energy_per_length2")?,
                b: need(self.b_energy_per_length4, k, "b_energy_per_length4")?,
            },
            "driven_double_well" => PotentialModel::DrivenDoubleWell {
                a: need(self.a_energy_per_length2, k, "a_energy_per_length2")?,
                b: need(self.b_energy_per_length4, k, "b_energy_per_length4")?,
                amplitude: need(self.drive_force, k, "drive_force")?,
                frequency: need(self.drive_frequency_per_time, k, "drive_frequency_per_time")?,
            },
            other => {
                return Err(Error::config(
                    "potential.kind",
                    format!(
                        "unknown kind \"{other}\" (expected free, harmonic, inverted, quartic_double_well or driven_double_well)"
                    ),
                ))
            }
        };
        model.validate().map_err(|e| in_block("potential", &POTENTIAL_KEYS, e))?;
        Ok(model)
    }
}

impl InitialBlock {
    fn into_spec(self) -> Result<InitialStateSpec> {
        match self.kind.as_str() {
            "gaussian" => {
                if self.separation_length.is_some() {
                    return Err(Error::config("initial.separation_length", "not used by kind \"gaussian\""));
                }
                Ok(InitialStateSpec::Gaussian {
                    x0: self.x0_length,
                    p0: self.p0_momentum,
                    sigma_x: self.sigma_x_length,
                    sigma_p: self.sigma_p_momentum,
                    cov_xp: self.cov_xp_action,
                })
            }
            "cat" => {
                if self.cov_xp_action != 0.0 {
                    return Err(Error::config("initial.cov_xp_action", "not supported for kind \"cat\""));
                }
                let separation = self
                    .separation_length
                    .ok_or_else(|| Error::config("initial.separation_length", "required for kind \"cat\""))?;
                Ok(InitialStateSpec::Cat {
                    x0: self.x0_length,
                    separation,
                    p0: self.p0_momentum,
                    sigma_x: self.sigma_x_length,
                    sigma_p: self.sigma_p_momentum,
                    phase: self.phase_rad,
                })
            }
            other => Err(Error::config("initial.kind", format!("unknown kind \"{other}\" (expected gaussian or cat)"))),
        }
    }
}

fn parse_bracket(name: &str, n_max: Option<u32>) -> Result<Bracket> {
    let b = match name {
        "poisson" => Bracket::Poisson,
        "moyal" => Bracket::Moyal,
        "moyal_truncated" => Bracket::MoyalTruncated {
            n_max: n_max.ok_or_else(|| Error::config("evolution.n_max", "required for bracket \"moyal_truncated\""))?,
        },
        other => {
            return Err(Error::config(
                "evolution.bracket",
                format!("unknown bracket \"{other}\" (expected poisson, moyal or moyal_truncated)"),
            ))
        }
    };
    if n_max.is_some() && !matches!(b, Bracket::MoyalTruncated { .. }) {
        return Err(Error::config("evolution.n_max", "only used by bracket \"moyal_truncated\""));
    }
    Ok(b)
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let table = parse_table(text)?;
        if table.contains_key("sweep") {
            return Err(Error::config("sweep", "sweep block is only accepted by the sweep subcommand"));
        }
        Self::from_table(&table)
    }

    fn from_table(table: &toml::Table) -> Result<Self> {
        for key in table.keys() {
            if !RUN_BLOCKS.contains(&key.as_str()) {
                return Err(Error::config(key, "unknown block"));
            }
        }
        let g: GridBlock = required(table, "grid")?;
        let grid = GridConfig {
            nx: g.nx,
            np: g.np,
            x_min: g.x_min_length,
            x_max: g.x_max_length,
            p_min: g.p_min_momentum,
            p_max: g.p_max_momentum,
            hbar: g.hbar_action,
            mass: g.mass,
        };
        let potential = required::<PotentialBlock>(table, "potential")?.into_model()?;
        let initial = required::<InitialBlock>(table, "initial")?.into_spec()?;
        let ev: EvolutionBlock = required(table, "evolution")?;
        let environment = block::<EnvironmentBlock>(table, "environment")?.map(|e| Environment {
            diffusion: e.D_p2_per_time,
            gamma: e.gamma_per_time,
            temperature: e.temperature_energy,
        });
        let evolution = EvolutionSpec {
            bracket: parse_bracket(&ev.bracket, ev.n_max)?,
            environment,
            dt: ev.dt_time,
            n_steps: ev.n_steps,
            record_every: ev.record_every,
        };
        let outputs = block(table, "outputs")?.unwrap_or_default();
        let compare = block(table, "compare")?.unwrap_or_default();
        let cfg = Self { grid, potential, initial, evolution, outputs, compare };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks every block against the invariants of the module it feeds.
    pub fn validate(&self) -> Result<()> {
        PhaseSpaceGrid::new(self.grid.clone()).map_err(|e| in_block("grid", &GRID_KEYS, e))?;
        self.potential.validate().map_err(|e| in_block("potential", &POTENTIAL_KEYS, e))?;
        self.initial.validate(self.grid.hbar).map_err(|e| in_block("initial", &INITIAL_KEYS, e))?;
        if let Some(env) = &self.evolution.environment {
            env.validate(self.grid.mass).map_err(|e| in_block("environment", &ENVIRONMENT_KEYS, e))?;
        }
        self.evolution.validate(&self.potential, self.grid.mass).map_err(|e| match &e {
            Error::Config { field, .. } if ENVIRONMENT_KEYS.iter().any(|(lib, _)| lib == field) => {
                in_block("environment", &ENVIRONMENT_KEYS, e)
            }
            _ => in_block("evolution", &EVOLUTION_KEYS, e),
        })?;
        if self.outputs.csv.as_os_str().is_empty() {
            return Err(Error::config("outputs.csv", "path must not be empty"));
        }
        let c = &self.compare;
        if !(c.moment_threshold > 0.0 && c.moment_threshold.is_finite()) {
            return Err(Error::config("compare.moment_threshold", "must be positive"));
        }
        if !(c.correction_threshold > 0.0 && c.correction_threshold.is_finite()) {
            return Err(Error::config("compare.correction_threshold", "must be positive"));
        }
        Ok(())
    }

    pub fn build_grid(&self) -> Result<Arc<PhaseSpaceGrid>> {
        Ok(Arc::new(PhaseSpaceGrid::new(self.grid.clone()).map_err(|e| in_block("grid", &GRID_KEYS, e))?))
    }

    /// Builds the grid and samples the initial state on it.
    pub fn initial_field(&self) -> Result<WignerField> {
        make_state(self.build_grid()?, &self.initial).map_err(|e| match e {
            Error::DomainTooSmall(m) => {
                Error::DomainTooSmall(format!("initial state does not fit the [grid] extents: {m}"))
            }
            other => in_block("initial", &INITIAL_KEYS, other),
        })
    }

    pub fn observers(&self) -> Observers {
        let fringe_separation = match self.initial {
            InitialStateSpec::Cat { separation, .. } if self.outputs.fringes => Some(separation),
            _ => None,
        };
        Observers {
            fringe_separation,
            correction_ratio: self.outputs.correction_ratio,
            snapshot_every: (self.outputs.snapshot_every_steps > 0).then_some(self.outputs.snapshot_every_steps),
        }
    }
}

/// The parameter a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub enum SweepParameter {
    #[serde(rename = "hbar")]
    Hbar,
    #[serde(rename = "D")]
    Diffusion,
    #[serde(rename = "dt")]
    Dt,
    #[serde(rename = "drive_amplitude")]
    DriveAmplitude,
}

impl SweepParameter {
    pub fn name(&self) -> &'static str {
        match self {
            SweepParameter::Hbar => "hbar",
            SweepParameter::Diffusion => "D",
            SweepParameter::Dt => "dt",
            SweepParameter::DriveAmplitude => "drive_amplitude",
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepBlock {
    parameter: SweepParameter,
    values: Vec<f64>,
    #[serde(default)]
    paired: bool,
    #[serde(default = "default_lyapunov_duration")]
    lyapunov_duration_time: f64,
}

fn default_lyapunov_duration() -> f64 {
    400.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub base: RunConfig,
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
    /// Run quantum and classical members from identical initial data.
    pub paired: bool,
    /// Orbit length for the classical Lyapunov estimate in ħ sweeps.
    pub lyapunov_duration: f64,
}

impl SweepConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut table = parse_table(text)?;
        let sweep: SweepBlock = required(&table, "sweep")?;
        table.remove("sweep");
        let base = RunConfig::from_table(&table)?;
        let cfg = Self {
            base,
            parameter: sweep.parameter,
            values: sweep.values,
            paired: sweep.paired,
            lyapunov_duration: sweep.lyapunov_duration_time,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.len() < 2 {
            return Err(Error::config("sweep.values", "a sweep needs at least two values"));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("sweep.values", "values must be finite"));
        }
        let positive = !matches!(self.parameter, SweepParameter::Diffusion | SweepParameter::DriveAmplitude);
        if positive && self.values.iter().any(|&v| v <= 0.0) {
            return Err(Error::config("sweep.values", format!("{} values must be positive", self.parameter.name())));
        }
        if self.values.iter().any(|&v| v < 0.0) {
            return Err(Error::config(
                "sweep.values",
                format!("{} values must be non-negative", self.parameter.name()),
            ));
        }
        if !(self.lyapunov_duration > 0.0) {
            return Err(Error::config("sweep.lyapunov_duration_time", "must be positive"));
        }
        match self.parameter {
            SweepParameter::DriveAmplitude
                if !matches!(self.base.potential, PotentialModel::DrivenDoubleWell { .. }) =>
            {
                Err(Error::config("sweep.parameter", "drive_amplitude needs potential kind \"driven_double_well\""))
            }
            SweepParameter::Diffusion if self.base.evolution.environment.and_then(|e| e.temperature).is_some() => {
                Err(Error::config("sweep.parameter", "cannot sweep D while environment.temperature_energy pins it"))
            }
            _ => Ok(()),
        }
    }

    /// Configuration of the member run for `value`.
    pub fn member(&self, value: f64) -> Result<RunConfig> {
        let mut cfg = self.base.clone();
        match self.parameter {
            SweepParameter::Hbar => cfg.grid.hbar = value,
            SweepParameter::Diffusion => {
                let mut env = cfg.evolution.environment.unwrap_or(Environment::diffusive(0.0));
                env.diffusion = value;
                cfg.evolution.environment = Some(env);
            }
            SweepParameter::Dt => {
                let base = &self.base.evolution;
                let steps = base.duration() / value;
                let n = steps.round();
                if (steps - n).abs() > 1e-9 * steps.max(1.0) || n < 1.0 {
                    return Err(Error::config(
                        "sweep.values",
                        format!("dt = {value} does not divide the run duration {}", base.duration()),
                    ));
                }
                let rec = (base.record_every as f64 * base.dt / value).round().max(1.0);
                cfg.evolution.dt = value;
                cfg.evolution.n_steps = n as usize;
                cfg.evolution.record_every = rec as usize;
            }
            SweepParameter::DriveAmplitude => {
                if let PotentialModel::DrivenDoubleWell { amplitude, .. } = &mut cfg.potential {
                    *amplitude = value;
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Parses a `[scenario]` file for the macroscopic estimate.
pub fn parse_scenario(text: &str) -> Result<MacroScenario> {
    let table = parse_table(text)?;
    for key in table.keys() {
        if key != "scenario" {
            return Err(Error::config(key, "unknown block"));
        }
    }
    let sc: MacroScenario = required(&table, "scenario")?;
    sc.validate().map_err(|e| in_block("scenario", &[], e))?;
    Ok(sc)
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
[grid]
nx = 64
np = 64
x_min_length = -8.0
x_max_length = 8.0
p_min_momentum = -8.0
p_max_momentum = 8
hbar_action = 1.0

[potential]
kind = "harmonic"
omega_per_time = 1.0

[initial]
kind = "gaussian"
sigma_x_length = 0.7071067811865476
sigma_p_momentum = 0.7071067811865476

[evolution]
bracket = "moyal"
dt_time = 0.05
n_steps = 40
record_every = 4
"#;

    fn err_field(text: &str) -> String {
        match RunConfig::parse(text) {
            Err(Error::Config { field, .. }) => field,
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn parses_minimal_config() {
        let c = RunConfig::parse(BASE).unwrap();
        assert_eq!(c.grid.nx, 64);
        assert_eq!(c.grid.p_max, 8.0);
        assert_eq!(c.grid.mass, 1.0);
        assert_eq!(c.potential, PotentialModel::Harmonic { omega: 1.0 });
        assert_eq!(c.evolution.bracket, Bracket::Moyal);
        assert!(c.evolution.environment.is_none());
        assert_eq!(c.outputs, OutputsConfig::default());
        assert_eq!(c.observers(), Observers::default());
    }

    #[test]
    fn errors_name_block_and_key() {
        assert_eq!(err_field(&BASE.replace("dt_time = 0.05", "dt_time = -1.0")), "evolution.dt_time");
        assert_eq!(err_field(&BASE.replace("dt_time = 0.05", "dt_time = 2.0")), "evolution.dt_time");
        assert_eq!(
            err_field(&BASE.replace("omega_per_time = 1.0", "omega_per_time = 0.0")),
            "potential.omega_per_time"
        );
        assert_eq!(err_field(&BASE.replace("omega_per_time", "lambda_per_time")), "potential.lambda_per_time");
        assert_eq!(err_field(&BASE.replace("x_max_length = 8.0", "x_max_length = -9.0")), "grid.x_max_length");
        assert_eq!(
            err_field(&BASE.replace("sigma_p_momentum = 0.7071067811865476", "sigma_p_momentum = 0.1")),
            "initial"
        );
        assert_eq!(err_field(&format!("{BASE}\n[environment]\nD_p2_per_time = -1.0\n")), "environment.D_p2_per_time");
        assert_eq!(err_field(&format!("{BASE}\n[bogus]\n")), "bogus");
        assert_eq!(err_field(&BASE.replace("[potential]", "[potentials]")), "potentials");
    }

    #[test]
    fn serde_errors_mention_the_key() {
        let e = RunConfig::parse(&BASE.replace("dt_time", "dt")).unwrap_err().to_string();
        assert!(e.contains("evolution") && e.contains("`dt`"), "{e}");
        let e = RunConfig::parse(&BASE.replace("n_steps = 40\n", "")).unwrap_err().to_string();
        assert!(e.contains("evolution") && e.contains("n_steps"), "{e}");
    }

    #[test]
    fn environment_and_outputs() {
        let text = format!(
            "{BASE}\n[environment]\nD_p2_per_time = 0.02\ngamma_per_time = 0.01\ntemperature_energy = 1.0\n\n[outputs]\nheatmaps = true\nsnapshot_every_steps = 10\n"
        );
        let c = RunConfig::parse(&text).unwrap();
        let env = c.evolution.environment.unwrap();
        assert_eq!((env.diffusion, env.gamma, env.temperature), (0.02, 0.01, Some(1.0)));
        assert_eq!(c.observers().snapshot_every, Some(10));
        let bad = text.replace("temperature_energy = 1.0", "temperature_energy = 2.0");
        assert!(
            matches!(RunConfig::parse(&bad), Err(Error::Config { field, .. }) if field == "environment.temperature_energy")
        );
    }

    #[test]
    fn cat_tracks_fringes() {
        let text = BASE.replace("kind = \"gaussian\"", "kind = \"cat\"\nseparation_length = 3.0");
        let c = RunConfig::parse(&text).unwrap();
        assert_eq!(c.observers().fringe_separation, Some(3.0));
        let text = text.replace("separation_length = 3.0", "");
        assert!(
            matches!(RunConfig::parse(&text), Err(Error::Config { field, .. }) if field == "initial.separation_length")
        );
    }

    #[test]
    fn sweep_members() {
        let text = format!("{BASE}\n[sweep]\nparameter = \"dt\"\nvalues = [0.05, 0.025, 0.0125]\n");
        assert!(RunConfig::parse(&text).is_err());
        let s = SweepConfig::parse(&text).unwrap();
        let m = s.member(0.0125).unwrap();
        assert_eq!((m.evolution.n_steps, m.evolution.record_every), (160, 16));
        assert!(s.member(0.03).is_err());

        let text = format!("{BASE}\n[sweep]\nparameter = \"hbar\"\nvalues = [1.0]\n");
        assert!(matches!(SweepConfig::parse(&text), Err(Error::Config { field, .. }) if field == "sweep.values"));
        let text = format!("{BASE}\n[sweep]\nparameter = \"drive_amplitude\"\nvalues = [1.0, 2.0]\n");
        assert!(matches!(SweepConfig::parse(&text), Err(Error::Config { field, .. }) if field == "sweep.parameter"));
        let text = format!("{BASE}\n[sweep]\nparameter = \"D\"\nvalues = [0.0, 0.01]\npaired = true\n");
        let s = SweepConfig::parse(&text).unwrap();
        assert!(s.paired);
        assert_eq!(s.member(0.01).unwrap().evolution.diffusion(), 0.01);
    }

    #[test]
    fn scenario_file() {
        let text =
            "[scenario]\nname = \"x\"\nmass_kg = 1.0\nvelocity_m_per_s = 2.0\nperiod_s = 3.0\nlyapunov_time_s = 4.0\n";
        let sc = parse_scenario(text).unwrap();
        assert_eq!(sc.action(), 6.0);
        let e = parse_scenario(&text.replace("mass_kg = 1.0", "mass_kg = -1.0")).unwrap_err();
        assert!(matches!(e, Error::Config { field, .. } if field == "scenario.mass_kg"));
    }
}
