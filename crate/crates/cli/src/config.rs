//! Run configuration: a single TOML file wires the whole pipeline, with
//! per-command overrides from flags and `GRIDFREQ_*` environment
//! variables (flag beats env beats file).

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use gridfreq::density::{DensityBlock, DensityModel};
use gridfreq::grid::ReducedNetwork;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub case: CaseSection,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub region: RegionSection,
    #[serde(default)]
    pub sampler: SamplerSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseSection {
    /// MATPOWER case file.
    pub file: PathBuf,
    /// Machine-parameter sidecar (generator label -> inertia/damping).
    pub machines: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    /// "case-study": heavy-tailed pair on G1/G2, Gaussians sigma =
    /// P_nom/65 elsewhere. "blocks": explicit block list below.
    #[serde(default = "default_model_kind")]
    pub kind: String,
    #[serde(default)]
    pub blocks: Vec<BlockSpec>,
}

fn default_model_kind() -> String {
    "case-study".into()
}

impl Default for ModelSection {
    fn default() -> Self {
        Self { kind: default_model_kind(), blocks: Vec::new() }
    }
}

/// Density block with 1-based generator numbers, as written in configs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BlockSpec {
    Gaussian {
        generators: Vec<usize>,
        std_devs: Vec<f64>,
    },
    HeavyTailedPair {
        first: usize,
        second: usize,
        #[serde(default = "default_scale")]
        scale: f64,
        #[serde(default = "default_exponent")]
        exponent: u32,
        #[serde(default = "default_coupling")]
        coupling: f64,
    },
}

fn default_scale() -> f64 {
    30.0
}
fn default_exponent() -> u32 {
    4
}
fn default_coupling() -> f64 {
    0.5
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionSection {
    /// "max-nodal", "system-max" or "system-average".
    #[serde(default = "default_metric")]
    pub metric: String,
    /// Threshold in Hz/s: a scalar or one value per generator
    /// (per-generator lists apply to max-nodal only).
    #[serde(default = "default_r_max")]
    pub r_max: RMaxSpec,
    /// Observation window, seconds.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Time discretization N of the window.
    #[serde(default = "default_n_steps")]
    pub n_steps: usize,
    /// Optional N sweep; when present `sample` runs one chain set per N.
    pub sweep_n: Option<Vec<usize>>,
}

fn default_metric() -> String {
    "max-nodal".into()
}
fn default_r_max() -> RMaxSpec {
    RMaxSpec::Scalar(1.0)
}
fn default_epsilon() -> f64 {
    0.5
}
fn default_n_steps() -> usize {
    100
}

impl Default for RegionSection {
    fn default() -> Self {
        Self {
            metric: default_metric(),
            r_max: default_r_max(),
            epsilon: default_epsilon(),
            n_steps: default_n_steps(),
            sweep_n: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RMaxSpec {
    Scalar(f64),
    PerGenerator(Vec<f64>),
}

impl RMaxSpec {
    pub fn per_node(&self, n: usize) -> Result<Vec<f64>> {
        match self {
            RMaxSpec::Scalar(r) => Ok(vec![*r; n]),
            RMaxSpec::PerGenerator(v) => {
                if v.len() != n {
                    bail!("r_max lists {} values for {} generators", v.len(), n);
                }
                Ok(v.clone())
            }
        }
    }

    pub fn scalar(&self) -> Result<f64> {
        match self {
            RMaxSpec::Scalar(r) => Ok(*r),
            RMaxSpec::PerGenerator(_) => {
                bail!("system-frequency metrics take a single r_max, not a per-generator list")
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerSection {
    #[serde(default = "default_sigma0")]
    pub sigma0: f64,
    #[serde(default = "default_target_acceptance")]
    pub target_acceptance: f64,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_chains")]
    pub chains: usize,
    /// Optional explicit start point (p.u. per generator); otherwise a
    /// point outside the region is searched automatically.
    pub initial_state: Option<Vec<f64>>,
}

fn default_sigma0() -> f64 {
    1e-3f64.sqrt()
}
fn default_target_acceptance() -> f64 {
    0.15
}
fn default_burn_in() -> usize {
    10_000
}
fn default_samples() -> usize {
    100_000
}
fn default_seed() -> u64 {
    1
}
fn default_chains() -> usize {
    1
}

impl Default for SamplerSection {
    fn default() -> Self {
        Self {
            sigma0: default_sigma0(),
            target_acceptance: default_target_acceptance(),
            burn_in: default_burn_in(),
            samples: default_samples(),
            seed: default_seed(),
            chains: default_chains(),
            initial_state: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_out_dir")]
    pub dir: PathBuf,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: default_out_dir() }
    }
}

/// Marker for configuration/input problems; these exit with code 2,
/// runtime failures with 1.
#[derive(Debug)]
pub struct InputError(pub anyhow::Error);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:#}", self.0)
    }
}

impl std::error::Error for InputError {}

/// Tag a result's error as an input problem.
pub fn mark_input<T>(result: Result<T>) -> Result<T> {
    result.map_err(|e| {
        if e.downcast_ref::<InputError>().is_some() {
            e
        } else {
            anyhow::Error::new(InputError(e))
        }
    })
}

/// Flag values that override the file; `None` leaves the file value.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub burn_in: Option<usize>,
    pub chains: Option<usize>,
    pub n_steps: Option<usize>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    /// Load from a TOML config, or from the `resolved_config` of a run
    /// manifest (`.json`) to replay an earlier run.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        if path.extension().is_some_and(|e| e == "json") {
            #[derive(Deserialize)]
            struct ManifestConfig {
                resolved_config: RunConfig,
            }
            let manifest: ManifestConfig = serde_json::from_str(&text)
                .with_context(|| format!("{} is not a run manifest", path.display()))?;
            return Ok(manifest.resolved_config);
        }
        let config: RunConfig = toml::from_str(&text)
            .with_context(|| format!("invalid config {}", path.display()))?;
        Ok(config)
    }

    /// Apply environment variables then explicit flags.
    pub fn apply_overrides(&mut self, overrides: &Overrides) -> Result<()> {
        fn env_parse<T: std::str::FromStr>(name: &str) -> Result<Option<T>> {
            match std::env::var(name) {
                Ok(v) => v
                    .parse()
                    .map(Some)
                    .map_err(|_| anyhow::anyhow!("{name} has invalid value `{v}`")),
                Err(_) => Ok(None),
            }
        }
        if let Some(seed) = env_parse::<u64>("GRIDFREQ_SEED")? {
            self.sampler.seed = seed;
        }
        if let Some(samples) = env_parse::<usize>("GRIDFREQ_SAMPLES")? {
            self.sampler.samples = samples;
        }
        if let Some(burn_in) = env_parse::<usize>("GRIDFREQ_BURN_IN")? {
            self.sampler.burn_in = burn_in;
        }
        if let Some(chains) = env_parse::<usize>("GRIDFREQ_CHAINS")? {
            self.sampler.chains = chains;
        }
        if let Some(n) = env_parse::<usize>("GRIDFREQ_N")? {
            self.region.n_steps = n;
        }
        if let Some(out) = env_parse::<PathBuf>("GRIDFREQ_OUT")? {
            self.output.dir = out;
        }

        if let Some(seed) = overrides.seed {
            self.sampler.seed = seed;
        }
        if let Some(samples) = overrides.samples {
            self.sampler.samples = samples;
        }
        if let Some(burn_in) = overrides.burn_in {
            self.sampler.burn_in = burn_in;
        }
        if let Some(chains) = overrides.chains {
            self.sampler.chains = chains;
        }
        if let Some(n) = overrides.n_steps {
            self.region.n_steps = n;
        }
        if let Some(out) = &overrides.out {
            self.output.dir = out.clone();
        }
        Ok(())
    }

    pub fn sampler_config(&self) -> gridfreq::sampler::SamplerConfig {
        gridfreq::sampler::SamplerConfig {
            sigma0: self.sampler.sigma0,
            target_acceptance: self.sampler.target_acceptance,
            burn_in: self.sampler.burn_in,
            samples: self.sampler.samples,
            seed: self.sampler.seed,
            initial_state: self.sampler.initial_state.clone(),
            ..gridfreq::sampler::SamplerConfig::default()
        }
    }

    /// Build the disturbance model for a reduced network.
    pub fn density_model(&self, net: &ReducedNetwork) -> Result<DensityModel> {
        match self.model.kind.as_str() {
            "case-study" => Ok(gridfreq::density::make_case_study_model(net)?),
            "blocks" => {
                let mut blocks = Vec::with_capacity(self.model.blocks.len());
                for spec in &self.model.blocks {
                    blocks.push(match spec {
                        BlockSpec::Gaussian { generators, std_devs } => {
                            let indices = to_zero_based(generators, net.n)?;
                            DensityBlock::IndependentGaussian {
                                indices,
                                std_devs: std_devs.clone(),
                            }
                        }
                        BlockSpec::HeavyTailedPair { first, second, scale, exponent, coupling } => {
                            DensityBlock::HeavyTailedPair {
                                first: one_to_zero(*first, net.n)?,
                                second: one_to_zero(*second, net.n)?,
                                scale: *scale,
                                exponent: *exponent,
                                coupling: *coupling,
                            }
                        }
                    });
                }
                Ok(DensityModel::new(net.n, blocks)?)
            }
            other => bail!("unknown model kind `{other}` (use case-study or blocks)"),
        }
    }
}

fn one_to_zero(g: usize, n: usize) -> Result<usize> {
    if g == 0 || g > n {
        bail!("generator number {g} out of range 1..={n}");
    }
    Ok(g - 1)
}

fn to_zero_based(gens: &[usize], n: usize) -> Result<Vec<usize>> {
    gens.iter().map(|&g| one_to_zero(g, n)).collect()
}
