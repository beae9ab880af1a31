use std::fs;
use std::path::Path;

use anyhow::Result;
use sfl_core::env::Environment;
use sfl_core::rng::stream;

use crate::config::RunConfig;
use crate::with_env;

/// Samples `count` levels from the configured distribution in the level text
/// format, separated by blank lines.
pub fn gen_levels(cfg: &RunConfig, count: usize, solvable: bool, seed: u64) -> Result<String> {
    let texts = with_env!(cfg, env => {
        let mut rng = stream(seed, &[11]);
        (0..count)
            .map(|_| {
                let l = if solvable { env.sample_solvable_level(&mut rng)? } else { env.sample_level(&mut rng)? };
                Ok(env.level_text(&l))
            })
            .collect::<Result<Vec<String>>>()?
    });
    Ok(texts.iter().map(|t| t.trim_end()).collect::<Vec<_>>().join("\n\n") + "\n")
}

pub fn write_levels(cfg: &RunConfig, count: usize, solvable: bool, seed: u64, out: &Path) -> Result<()> {
    let text = gen_levels(cfg, count, solvable, seed)?;
    fs::write(out, text)?;
    Ok(())
}
