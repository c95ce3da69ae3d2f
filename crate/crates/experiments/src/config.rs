//! Experiment configuration, read from TOML.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use saa_core::prediction::PredictorParams;
use saa_core::strategies::{StrategyParams, StrategyRegistry};
use saa_core::valuations::GeneratorParams;

use crate::error::{io_err, ExperimentError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub master_seed: u64,
    /// Number of instances to play.
    pub instances: usize,
    #[serde(default = "default_workers")]
    pub workers: usize,
    pub output: PathBuf,
    pub family: FamilySpec,
    #[serde(default)]
    pub predictor: PredictorSpec,
    /// Strategy labels used by profiles, each naming a registered strategy.
    pub strategies: BTreeMap<String, StrategySpec>,
    /// Explicit profiles: one strategy label per seat.
    #[serde(default)]
    pub profiles: Vec<Vec<String>>,
    /// Two-strategy symmetric game; expands to profiles with k = 0..n A-seats.
    pub game: Option<GameSpec>,
    /// Overrides the per-decision search budget of every strategy.
    pub budget: Option<BudgetSpec>,
    #[serde(default)]
    pub traces: bool,
    pub sweep: Option<SweepSpec>,
}

fn default_name() -> String {
    "experiment".into()
}

fn default_workers() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilySpec {
    /// Random instances from the generic value-function generator.
    Generator {
        n: usize,
        m: usize,
        #[serde(default = "default_epsilon")]
        epsilon: f64,
        #[serde(default = "default_v_cap")]
        v_cap: f64,
        #[serde(default = "default_b_min")]
        b_min: f64,
        #[serde(default = "default_b_max")]
        b_max: f64,
    },
    /// Instances listed in a JSON file (an array of instances), used in order.
    File { path: PathBuf },
}

fn default_epsilon() -> f64 {
    1.0
}
fn default_v_cap() -> f64 {
    GeneratorParams::default().v_cap
}
fn default_b_min() -> f64 {
    GeneratorParams::default().b_min
}
fn default_b_max() -> f64 {
    GeneratorParams::default().b_max
}

impl FamilySpec {
    pub fn generator_params(&self) -> Option<GeneratorParams> {
        match self {
            FamilySpec::Generator { v_cap, b_min, b_max, .. } => {
                Some(GeneratorParams { v_cap: *v_cap, b_min: *b_min, b_max: *b_max })
            }
            FamilySpec::File { .. } => None,
        }
    }
}

/// Fixed-point predictor settings; unset fields take the engine defaults.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictorSpec {
    pub mc_samples: Option<u32>,
    pub max_iters: Option<u32>,
    pub tolerance: Option<f64>,
}

impl PredictorSpec {
    pub fn params(&self, config: &saa_core::AuctionConfig, seed: u64) -> PredictorParams {
        let d = PredictorParams::for_config(config);
        PredictorParams {
            mc_samples: self.mc_samples.unwrap_or(d.mc_samples),
            max_iters: self.max_iters.unwrap_or(d.max_iters),
            tolerance: self.tolerance.unwrap_or(d.tolerance),
            rng_seed: seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategySpec {
    /// Registered strategy name (SB, PP, EPE, SMS, ...).
    pub strategy: String,
    #[serde(default)]
    pub params: StrategyParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameSpec {
    pub a: String,
    pub b: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetSpec {
    pub iterations: Option<u64>,
    pub time_ms: Option<u64>,
}

/// Grid over search parameters of one strategy label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub target: String,
    #[serde(default)]
    pub alpha: Vec<f64>,
    #[serde(default)]
    pub n_act: Vec<usize>,
    #[serde(default)]
    pub iterations: Vec<u64>,
}

/// One point of a sweep grid. Unset fields keep the base value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub alpha: Option<f64>,
    pub n_act: Option<usize>,
    pub iterations: Option<u64>,
}

impl GridPoint {
    /// Directory name, e.g. `alpha=7_n_act=20`.
    pub fn label(&self) -> String {
        let mut parts = Vec::new();
        if let Some(a) = self.alpha {
            parts.push(format!("alpha={a}"));
        }
        if let Some(n) = self.n_act {
            parts.push(format!("n_act={n}"));
        }
        if let Some(i) = self.iterations {
            parts.push(format!("iterations={i}"));
        }
        if parts.is_empty() {
            "base".into()
        } else {
            parts.join("_")
        }
    }

    pub fn apply(&self, params: &mut StrategyParams) {
        if let Some(a) = self.alpha {
            params.alpha = a;
        }
        if let Some(n) = self.n_act {
            params.n_act = n;
        }
        if let Some(i) = self.iterations {
            params.iterations = Some(i);
            params.time_ms = None;
        }
    }
}

impl SweepSpec {
    /// Cartesian product of the listed values, in listing order.
    pub fn grid(&self) -> Vec<GridPoint> {
        fn axis<T: Copy>(v: &[T]) -> Vec<Option<T>> {
            if v.is_empty() { vec![None] } else { v.iter().copied().map(Some).collect() }
        }
        let mut out = Vec::new();
        for alpha in axis(&self.alpha) {
            for n_act in axis(&self.n_act) {
                for iterations in axis(&self.iterations) {
                    out.push(GridPoint { alpha, n_act, iterations });
                }
            }
        }
        out
    }
}

/// A named seat assignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub label: String,
    pub seats: Vec<String>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    /// Reads a config; a relative instance-file path is resolved against the config's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        let mut config = Self::from_toml(&text)?;
        if let FamilySpec::File { path: file } = &mut config.family {
            if file.is_relative() {
                if let Some(dir) = path.parent() {
                    *file = dir.join(&*file);
                }
            }
        }
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Effective parameters of a strategy label, with the budget override applied.
    pub fn params_for(&self, label: &str) -> Option<StrategyParams> {
        let spec = self.strategies.get(label)?;
        let mut params = spec.params.clone();
        if let Some(b) = self.budget {
            params.iterations = b.iterations;
            params.time_ms = b.time_ms;
        }
        Some(params)
    }

    /// Explicit profiles followed by the game's symmetric profiles.
    pub fn expanded_profiles(&self, n: usize) -> Vec<Profile> {
        let mut out: Vec<Profile> =
            self.profiles.iter().map(|seats| Profile { label: seats.join("-"), seats: seats.clone() }).collect();
        if let Some(game) = &self.game {
            for k in 0..=n {
                let seats: Vec<String> = (0..n).map(|i| if i < k { game.a.clone() } else { game.b.clone() }).collect();
                let label = seats.join("-");
                if !out.iter().any(|p| p.label == label) {
                    out.push(Profile { label, seats });
                }
            }
        }
        out
    }

    /// Checks everything that can be checked before any simulation runs.
    pub fn validate(&self, registry: &StrategyRegistry, n_bidders: usize) -> Result<()> {
        let bad = |msg: String| Err(ExperimentError::Config(msg));
        if self.instances == 0 {
            return bad("instances must be positive".into());
        }
        if self.workers == 0 {
            return bad("workers must be positive".into());
        }
        if let FamilySpec::Generator { n, m, epsilon, .. } = &self.family {
            saa_core::AuctionConfig::new(*n, *m, *epsilon)?;
            self.family.generator_params().expect("generator family").validate()?;
        }
        for (label, spec) in &self.strategies {
            if !registry.contains(&spec.strategy) {
                return bad(format!("strategy {label:?} names unknown strategy {:?}", spec.strategy));
            }
            let params = self.params_for(label).expect("label exists");
            if params.iterations.is_none() && params.time_ms.is_none() {
                return bad(format!("strategy {label:?} has neither an iteration nor a time budget"));
            }
        }
        if let Some(game) = &self.game {
            if game.a == game.b {
                return bad("game needs two different strategies".into());
            }
        }
        let profiles = self.expanded_profiles(n_bidders);
        if profiles.is_empty() {
            return bad("no profiles: give `profiles` or `game`".into());
        }
        for p in &profiles {
            if p.seats.len() != n_bidders {
                return bad(format!("profile {} has {} seats for {n_bidders} bidders", p.label, p.seats.len()));
            }
            if let Some(s) = p.seats.iter().find(|s| !self.strategies.contains_key(*s)) {
                return bad(format!("profile {} uses undefined strategy label {s:?}", p.label));
            }
        }
        if let Some(sweep) = &self.sweep {
            if !self.strategies.contains_key(&sweep.target) {
                return bad(format!("sweep target {:?} is not a strategy label", sweep.target));
            }
            if sweep.alpha.is_empty() && sweep.n_act.is_empty() && sweep.iterations.is_empty() {
                return bad("sweep grid is empty".into());
            }
        }
        Ok(())
    }
}
