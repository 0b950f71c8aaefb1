//! Experiment configuration files.
//!
//! One TOML file describes one experiment: a `spec_version`, a `kind`, a
//! kind-specific `[params]` table and optional integrator settings. All
//! randomness derives from the top-level `seed`.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use cotangent_lab::hamiltonians::{
    build_profile_family, linear_combination, make_momentum_hamiltonian, sharpness_profile, trig_bump, FamilyTag,
};
use cotangent_lab::hofer::SamplingPlan;
use cotangent_lab::homology::{ClassKind, GeometryCase};
use cotangent_lab::orbits::NewtonSettings;
use cotangent_lab::propagation::{DampedSystem, FixedPointSearch, PerturbationSource};
use cotangent_lab::{HamiltonianField, IntegratorSettings, ProfileFunction};

/// Schema version understood by this build.
pub const SPEC_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub spec_version: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub integrator: IntegratorSettings,
    #[serde(flatten)]
    pub experiment: Experiment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "kebab-case")]
pub enum Experiment {
    Orbit(OrbitParams),
    Spectrum(SpectrumParams),
    Propagate(PropagateParams),
    TheoremA(TheoremAParams),
    RotationSet(RotationSetParams),
    Counterexample(CounterexampleParams),
    Capacity(CapacityParams),
    ShTable(ShTableParams),
    HoferCertify(HoferParams),
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Orbit(_) => "orbit",
            Self::Spectrum(_) => "spectrum",
            Self::Propagate(_) => "propagate",
            Self::TheoremA(_) => "theorem-a",
            Self::RotationSet(_) => "rotation-set",
            Self::Counterexample(_) => "counterexample",
            Self::Capacity(_) => "capacity",
            Self::ShTable(_) => "sh-table",
            Self::HoferCertify(_) => "hofer-certify",
        }
    }
}

/// Kinds with a one-line description of their parameters, for `list`.
pub const CATALOG: [(&str, &str); 9] = [
    ("orbit", "field, class [, guess, newton]: one periodic orbit by Newton shooting; writes trajectory.csv"),
    ("spectrum", "field, class [, resolution, newton]: action spectrum from the seed grid; writes spectrum.csv"),
    ("propagate", "system, k [, resolution, momentum_cap]: fan-coverage propagation radius; writes propagation.csv"),
    ("theorem-a", "field, a, perturbation, ks, displacements | all_within_threshold [, search]: displaced fixed points; writes theorem_a.csv"),
    ("rotation-set", "n, profile, samples, k [, amplitude, alpha, y0]: rotation-vector hull of a skew product; writes rotation_samples.csv, hull.csv"),
    ("counterexample", "shift | crossing_steps [, grid, iterations]: displacement bound of the damped map; writes damped_orbits.csv"),
    ("capacity", "case, class, a [, scan_c, scan_a]: capacity from the homology tables; writes capacity.csv"),
    ("sh-table", "case, classes, a_grid, c_grid: filtered homology ranks and T flags; writes sh_table.csv"),
    ("hofer-certify", "field [, plan, transfer]: oscillation certificate of a generating Hamiltonian; writes certificate.csv"),
];

/// Radial profile `f` of `H = f(|p|)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileSpec {
    CutParabola {
        height: f64,
        #[serde(default = "default_cut_start")]
        cut_start: f64,
        #[serde(default = "default_support_end")]
        support_end: f64,
    },
    Sharpness { m: f64, delta: f64 },
    Family { family: FamilyTag, s: f64, c: f64, #[serde(default)] ell: f64 },
}

fn default_cut_start() -> f64 {
    0.9
}

fn default_support_end() -> f64 {
    0.98
}

impl ProfileSpec {
    pub fn build(&self) -> Result<ProfileFunction> {
        Ok(match *self {
            Self::CutParabola { height, cut_start, support_end } => ProfileFunction::cut_parabola(height, cut_start, support_end)?,
            Self::Sharpness { m, delta } => sharpness_profile(m, delta)?,
            Self::Family { family, s, c, ell } => build_profile_family(family, s, c, ell)?.profile,
        })
    }
}

/// `A cos(2π(⟨k, q⟩ + phase)) · g(|p|) · cos(2π(m t + time_phase))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpSpec {
    pub wave: Vec<i64>,
    pub amplitude: f64,
    #[serde(default)]
    pub phase: f64,
    #[serde(default)]
    pub time_frequency: u32,
    #[serde(default)]
    pub time_phase: f64,
    pub envelope: ProfileSpec,
}

/// `H = f(|p|) + Σ bumps`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    pub n: usize,
    pub profile: ProfileSpec,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bumps: Vec<BumpSpec>,
}

impl FieldSpec {
    pub fn build(&self) -> Result<HamiltonianField> {
        let base = make_momentum_hamiltonian(self.n, self.profile.build()?)?;
        if self.bumps.is_empty() {
            return Ok(base);
        }
        let mut terms = vec![(1.0, base)];
        for (i, b) in self.bumps.iter().enumerate() {
            let bump = trig_bump(self.n, b.wave.clone(), b.phase, b.envelope.build()?, b.amplitude, b.time_frequency, b.time_phase)
                .with_context(|| format!("params.field.bumps[{i}]"))?;
            terms.push((1.0, bump));
        }
        Ok(linear_combination(terms)?)
    }

    /// The radial profile when the field has no bumps.
    pub fn radial_profile(&self) -> Result<Option<ProfileFunction>> {
        Ok(if self.bumps.is_empty() { Some(self.profile.build()?) } else { None })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GuessSpec {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrbitParams {
    pub field: FieldSpec,
    pub class: Vec<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub guess: Option<GuessSpec>,
    #[serde(default)]
    pub newton: NewtonSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumParams {
    pub field: FieldSpec,
    pub class: Vec<i64>,
    /// Fundamental-domain grid resolution for fields with bumps.
    #[serde(default = "default_resolution")]
    pub resolution: usize,
    #[serde(default)]
    pub newton: NewtonSettings,
    /// Lower bound for the best action; the run reports not-found below it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub require_action: Option<f64>,
}

fn default_resolution() -> usize {
    9
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemSpec {
    Constant { field: FieldSpec },
    Damped(DampedSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DampedSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shift: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crossing_steps: Option<usize>,
}

impl DampedSpec {
    pub fn build(&self) -> Result<DampedSystem> {
        match (self.shift, self.crossing_steps) {
            (Some(shift), None) => Ok(DampedSystem::with_shift(shift)?),
            (None, Some(steps)) => Ok(DampedSystem::with_crossing_steps(steps)?),
            _ => bail!("exactly one of `shift` and `crossing_steps` must be given"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropagateParams {
    pub system: SystemSpec,
    pub k: usize,
    #[serde(default = "default_grid")]
    pub resolution: usize,
    #[serde(default = "default_cap")]
    pub momentum_cap: f64,
    /// Lower bound for `speed_estimate`; the run reports not-found below it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_speed: Option<f64>,
    /// Upper bound for `radius_over_k` at `k`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_speed: Option<f64>,
}

fn default_grid() -> usize {
    200
}

fn default_cap() -> f64 {
    0.99
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PerturbationSpec {
    Zero,
    Random { min_fraction: f64, max_fraction: f64 },
}

impl PerturbationSpec {
    pub fn source(&self, seed: u64) -> PerturbationSource {
        match *self {
            Self::Zero => PerturbationSource::Zero,
            Self::Random { min_fraction, max_fraction } => PerturbationSource::Random { seed, min_fraction, max_fraction },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TheoremAParams {
    /// The unperturbed generator `h`; its zero-section infimum is `c`.
    pub field: FieldSpec,
    pub a: f64,
    pub perturbation: PerturbationSpec,
    pub ks: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub displacements: Vec<Vec<i64>>,
    /// Every integer `v` with `|v| ≤ k (c − a)`, in addition to `displacements`.
    #[serde(default)]
    pub all_within_threshold: bool,
    #[serde(default)]
    pub search: FixedPointSearch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RotationSetParams {
    pub n: usize,
    pub profile: ProfileSpec,
    /// Modulation `ε` of `(1 + ε mean cos 2π y_j) f`; zero gives a constant system.
    #[serde(default)]
    pub amplitude: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub alpha: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub y0: Vec<f64>,
    pub samples: usize,
    pub k: usize,
    /// Points the hull must contain.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub require_contains: Vec<Vec<f64>>,
    #[serde(default)]
    pub min_extremal_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CounterexampleParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shift: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crossing_steps: Option<usize>,
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
}

impl CounterexampleParams {
    pub fn damped(&self) -> DampedSpec {
        DampedSpec { shift: self.shift, crossing_steps: self.crossing_steps }
    }
}

fn default_iterations() -> usize {
    500
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapacityParams {
    pub case: GeometryCase,
    pub class: ClassKind,
    /// Action window; `-inf` is allowed.
    pub a: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub scan_c: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub scan_a: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShTableParams {
    pub case: GeometryCase,
    pub classes: Vec<ClassKind>,
    pub a_grid: Vec<f64>,
    pub c_grid: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransferSpec {
    pub perturbation: FieldSpec,
    pub c: f64,
    pub a: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HoferParams {
    pub field: FieldSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<SamplingPlan>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transfer: Option<TransferSpec>,
}

const TOP_LEVEL_KEYS: [&str; 6] = ["spec_version", "seed", "output_dir", "integrator", "kind", "params"];

/// Parses a config, reporting schema violations with their field path.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let de = toml::Deserializer::new(text);
    let config: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        anyhow::anyhow!("schema violation at `{path}`: {}", e.into_inner().message().trim())
    })?;
    // `flatten` rules out `deny_unknown_fields` on the top level.
    let table: toml::Table = toml::from_str(text).context("invalid TOML")?;
    if let Some(key) = table.keys().find(|k| !TOP_LEVEL_KEYS.contains(&k.as_str())) {
        bail!("schema violation at `{key}`: unknown field");
    }
    if config.spec_version != SPEC_VERSION {
        bail!("schema violation at `spec_version`: expected {SPEC_VERSION}, found {}", config.spec_version);
    }
    config.integrator.validate().context("schema violation at `integrator`")?;
    Ok(config)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_config(&text).with_context(|| format!("in {}", path.display()))
}

pub fn to_toml(config: &ExperimentConfig) -> Result<String> {
    Ok(toml::to_string(config)?)
}
