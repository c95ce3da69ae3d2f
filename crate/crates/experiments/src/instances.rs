use std::path::Path;

use saa_core::seed::{derive_seed, rng_for};
use saa_core::strategies::PreparedInstance;
use saa_core::valuations::{generate_instance, Instance};

use crate::archive::read_json;
use crate::config::{ExperimentConfig, FamilySpec};
use crate::error::{ExperimentError, Result};

/// Stream tags under the master seed. Each instance and each play draws from
/// its own stream, so changing the instance count leaves earlier streams alone.
pub const INSTANCE_STREAM: u64 = 1;
pub const PREDICTOR_STREAM: u64 = 2;
pub const PLAY_STREAM: u64 = 3;

pub fn instance_seed(master: u64, k: usize) -> u64 {
    derive_seed(master, &[INSTANCE_STREAM, k as u64])
}

pub fn predictor_seed(master: u64, k: usize) -> u64 {
    derive_seed(master, &[PREDICTOR_STREAM, k as u64])
}

/// Stable 64-bit key of a profile label (FNV-1a).
pub fn label_key(label: &str) -> u64 {
    label.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

pub fn play_seed(master: u64, k: usize, profile: &str) -> u64 {
    derive_seed(master, &[PLAY_STREAM, k as u64, label_key(profile)])
}

pub fn load_instance_file(path: &Path) -> Result<Vec<Instance>> {
    let instances: Vec<Instance> = read_json(path)?;
    for inst in &instances {
        inst.validate()?;
    }
    Ok(instances)
}

/// The first `config.instances` instances of the configured family.
pub fn build_instances(config: &ExperimentConfig) -> Result<Vec<Instance>> {
    match &config.family {
        FamilySpec::Generator { n, m, epsilon, .. } => {
            let params = config.family.generator_params().expect("generator family");
            params.validate()?;
            Ok((0..config.instances)
                .map(|k| {
                    let mut rng = rng_for(instance_seed(config.master_seed, k), &[]);
                    generate_instance(*n, *m, *epsilon, &params, &mut rng)
                })
                .collect())
        }
        FamilySpec::File { path } => {
            let all = load_instance_file(path)?;
            if all.len() < config.instances {
                return Err(ExperimentError::Config(format!(
                    "{} holds {} instances, config asks for {}",
                    path.display(),
                    all.len(),
                    config.instances
                )));
            }
            let first = &all[0].config;
            if all.iter().any(|i| i.config.n_bidders != first.n_bidders || i.config.m_items != first.m_items) {
                return Err(ExperimentError::Config("instance file mixes auction sizes".into()));
            }
            Ok(all.into_iter().take(config.instances).collect())
        }
    }
}

/// Wraps instances with their predictor settings; predictions are computed on first use.
pub fn prepare(config: &ExperimentConfig, instances: Vec<Instance>) -> Vec<PreparedInstance> {
    instances
        .into_iter()
        .enumerate()
        .map(|(k, inst)| {
            let params = config.predictor.params(&inst.config, predictor_seed(config.master_seed, k));
            PreparedInstance::new(inst, params)
        })
        .collect()
}

/// Bidder and item counts of the configured family.
pub fn dimensions(config: &ExperimentConfig) -> Result<(usize, usize)> {
    match &config.family {
        FamilySpec::Generator { n, m, .. } => Ok((*n, *m)),
        FamilySpec::File { path } => {
            let all = load_instance_file(path)?;
            let first = all.first().ok_or_else(|| ExperimentError::Config(format!("{} is empty", path.display())))?;
            Ok((first.config.n_bidders, first.config.m_items))
        }
    }
}
