//! Evaluation protocols run from checkpoints.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use sfl_core::env::Environment;
use sfl_core::eval::{cvar_success, domination_heatmap, evaluate_levels, EvalReport, HeatmapGrid};
use sfl_core::learner::{load_checkpoint, PolicyParams};
use sfl_core::level::parse_levels;
use sfl_core::rng::stream;
use sfl_core::rollout::NetPolicy;
use sfl_core::Error;

use crate::config::RunConfig;
use crate::with_env;

/// Loads a checkpoint and checks it fits the environment.
pub fn load_policy<E: Environment>(env: &E, path: &Path) -> Result<PolicyParams> {
    let params = load_checkpoint(path).with_context(|| format!("loading {}", path.display()))?;
    if params.shape.obs_dim != env.obs_dim() {
        return Err(Error::Compatibility(format!(
            "{} expects {} observation features, the environment provides {}",
            path.display(),
            params.shape.obs_dim,
            env.obs_dim()
        ))
        .into());
    }
    NetPolicy::new(&params, env.action_space())?;
    Ok(params)
}

/// CVaR protocol; writes `cvar.csv` and `levels.jsonl` into `out`.
pub fn eval_cvar(cfg: &RunConfig, checkpoint: &Path, seed: u64, out: &Path) -> Result<EvalReport> {
    let report = with_env!(cfg, env => {
        let params = load_policy(&env, checkpoint)?;
        let policy = NetPolicy::new(&params, env.action_space())?;
        let e = &cfg.eval;
        cvar_success(&env, &policy, e.n_levels, &e.alphas, e.episodes, e.chunk_envs, seed, &mut stream(seed, &[5]))?
    });
    fs::create_dir_all(out)?;
    let mut csv = BufWriter::new(File::create(out.join("cvar.csv"))?);
    writeln!(csv, "alpha,value,seed")?;
    report.write_cvar_rows(&mut csv)?;
    csv.flush()?;
    let mut levels = BufWriter::new(File::create(out.join("levels.jsonl"))?);
    report.write_records(&mut levels)?;
    levels.flush()?;
    Ok(report)
}

/// Success rate on every level of the given level files; writes `testset.csv`.
pub fn eval_testset(cfg: &RunConfig, checkpoint: &Path, files: &[PathBuf], seed: u64, out: &Path) -> Result<Vec<f64>> {
    let rates = with_env!(cfg, env => {
        let params = load_policy(&env, checkpoint)?;
        let policy = NetPolicy::new(&params, env.action_space())?;
        let mut names = Vec::new();
        let mut levels = Vec::new();
        for f in files {
            let text = fs::read_to_string(f).with_context(|| format!("reading {}", f.display()))?;
            let specs = parse_levels(&text).with_context(|| format!("parsing {}", f.display()))?;
            for (i, spec) in specs.iter().enumerate() {
                levels.push(env.level_from_spec(spec).with_context(|| format!("{} level {i}", f.display()))?);
                names.push((f.display().to_string(), i));
            }
        }
        let rates = evaluate_levels(&env, &policy, &levels, cfg.eval.episodes, cfg.eval.chunk_envs, &mut stream(seed, &[6]))?;
        fs::create_dir_all(out)?;
        let mut csv = BufWriter::new(File::create(out.join("testset.csv"))?);
        writeln!(csv, "file,index,rate")?;
        for ((file, i), r) in names.iter().zip(&rates) {
            writeln!(csv, "{file},{i},{r}")?;
        }
        csv.flush()?;
        rates
    });
    Ok(rates)
}

/// Rates of two checkpoints on the same solvable levels, binned into a
/// 10 x 10 grid; writes `heatmap.csv` (row = A's bin, column = B's bin).
pub fn eval_heatmap_pair(cfg: &RunConfig, a: &Path, b: &Path, seed: u64, out: &Path) -> Result<HeatmapGrid> {
    let grid = with_env!(cfg, env => {
        let pa = load_policy(&env, a)?;
        let pb = load_policy(&env, b)?;
        let mut rng = stream(seed, &[7]);
        let levels = (0..cfg.eval.n_levels).map(|_| env.sample_solvable_level(&mut rng)).collect::<sfl_core::Result<Vec<_>>>()?;
        let e = &cfg.eval;
        let ra = evaluate_levels(&env, &NetPolicy::new(&pa, env.action_space())?, &levels, e.episodes, e.chunk_envs, &mut stream(seed, &[8]))?;
        let rb = evaluate_levels(&env, &NetPolicy::new(&pb, env.action_space())?, &levels, e.episodes, e.chunk_envs, &mut stream(seed, &[9]))?;
        domination_heatmap(&ra, &rb, 10)?
    });
    fs::create_dir_all(out)?;
    write_heatmap(&grid, &out.join("heatmap.csv"))?;
    Ok(grid)
}

pub fn write_heatmap(grid: &HeatmapGrid, path: &Path) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    for row in &grid.counts {
        let cells: Vec<String> = row.iter().map(u64::to_string).collect();
        writeln!(f, "{}", cells.join(","))?;
    }
    f.flush()?;
    Ok(())
}
