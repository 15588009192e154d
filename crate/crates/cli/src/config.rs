use std::path::Path;

use anyhow::{Context, Result};
use qtk_core::gates::HardwareProfile;
use qtk_core::noise::NoiseProfile;
use serde::{Deserialize, Serialize};

pub const SCHEMA: &str = "1";

/// Contents of a `--config` file. Unknown keys are rejected.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub noise: NoiseProfile,
    pub hardware: HardwareProfile,
}

/// Resolved settings for one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub seed: u64,
    pub noise: NoiseProfile,
    pub hardware: HardwareProfile,
}

impl RunConfig {
    /// Seed precedence: `--seed`, then the config file, then `QTK_SEED`, then 0.
    pub fn resolve(path: Option<&Path>, seed_flag: Option<u64>, noiseless: bool) -> Result<Self> {
        let file = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                toml::from_str::<FileConfig>(&text).with_context(|| format!("parsing {}", p.display()))?
            }
            None => FileConfig::default(),
        };
        let env_seed = match std::env::var("QTK_SEED") {
            Ok(v) => Some(v.trim().parse::<u64>().with_context(|| format!("QTK_SEED is not an integer: {v:?}"))?),
            Err(_) => None,
        };
        let seed = seed_flag.or(file.seed).or(env_seed).unwrap_or(0);
        let mut noise = if noiseless {
            NoiseProfile { enabled: qtk_core::noise::Channels::all(false), ..file.noise }
        } else {
            file.noise
        };
        noise.master_seed = seed;
        noise.validate()?;
        file.hardware.validate()?;
        Ok(Self { seed, noise, hardware: file.hardware })
    }
}

/// Versioned envelope written for every command.
#[derive(Debug, Serialize)]
pub struct Output<'a, T: Serialize> {
    pub schema: &'static str,
    pub command: &'a str,
    pub config: &'a RunConfig,
    pub result: T,
}
