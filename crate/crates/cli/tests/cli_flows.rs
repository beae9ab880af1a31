use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use sfl_cli::config::RunConfig;
use sfl_cli::{evaluate, levels, plot, train};
use sfl_core::curricula::{BatchKind, Method};
use sfl_core::level::{parse_levels, EnvKind, GenParams};

fn small_maze(out: &Path, method: Method, updates: u64) -> RunConfig {
    let mut cfg = RunConfig { updates, seeds: vec![3], out_dir: out.to_path_buf(), ..RunConfig::default() };
    cfg.gen = GenParams::gridmaze(7, 8);
    cfg.maze.max_steps = 20;
    cfg.ppo.n_steps = 16;
    cfg.ppo.hidden = 16;
    cfg.scheduler.method = method;
    cfg.scheduler.batch_levels = 4;
    cfg.scheduler.sfl.n_levels = 16;
    cfg.scheduler.sfl.rollout_steps = 24;
    cfg.scheduler.sfl.buffer_size = 4;
    cfg.scheduler.sfl.refresh_every = 2;
    cfg.eval.n_levels = 20;
    cfg.eval.alphas = vec![10.0, 50.0, 100.0];
    cfg.eval.episodes = 2;
    cfg
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sfl"))
}

#[test]
fn dr_training_writes_checkpoint_and_one_record_per_update() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_maze(dir.path(), Method::Dr, 10);
    let out = train::run_train(&cfg).unwrap();
    assert_eq!(out[0].records.len(), 10);
    assert!(out[0].records.iter().all(|r| r.gradient && r.kind == BatchKind::Random));
    let seed = train::seed_dir(dir.path(), 3);
    assert!(seed.join("final.ckpt").is_file());
    assert_eq!(fs::read_to_string(seed.join("metrics.jsonl")).unwrap().lines().count(), 10);
    assert_eq!(fs::read_to_string(seed.join("timing.jsonl")).unwrap().lines().count(), 10);
    // the written config reloads to the same run
    assert_eq!(RunConfig::load(&dir.path().join("config.toml")).unwrap(), cfg);
}

#[test]
fn sfl_refreshes_on_schedule() {
    let dir = tempfile::tempdir().unwrap();
    let out = train::run_train(&small_maze(dir.path(), Method::Sfl, 4)).unwrap();
    let refreshed: Vec<u64> = out[0].records.iter().filter_map(|r| r.refresh.as_ref().map(|f| f.update)).collect();
    assert_eq!(refreshed, vec![0, 2]);
    assert!(out[0].records.iter().all(|r| r.buffer.size <= 4));
}

#[test]
fn training_is_byte_reproducible() {
    let metrics = |m: Method| {
        let dir = tempfile::tempdir().unwrap();
        train::run_train(&small_maze(dir.path(), m, 6)).unwrap();
        let s = train::seed_dir(dir.path(), 3);
        (fs::read(s.join("metrics.jsonl")).unwrap(), fs::read(s.join("final.ckpt")).unwrap())
    };
    for m in [Method::Dr, Method::Sfl, Method::Accel] {
        assert_eq!(metrics(m), metrics(m), "{m:?}");
    }
}

fn trained(dir: &Path) -> (RunConfig, PathBuf) {
    let cfg = small_maze(dir, Method::Dr, 2);
    train::run_train(&cfg).unwrap();
    (cfg, train::seed_dir(dir, 3).join("final.ckpt"))
}

#[test]
fn cvar_csv_has_a_row_per_alpha() {
    let dir = tempfile::tempdir().unwrap();
    let (cfg, ckpt) = trained(dir.path());
    let out = dir.path().join("cvar");
    let r = evaluate::eval_cvar(&cfg, &ckpt, 1, &out).unwrap();
    let csv = fs::read_to_string(out.join("cvar.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[2].starts_with("100,") || rows[2].starts_with("100.0,"), "{}", rows[2]);
    assert_eq!(fs::read_to_string(out.join("levels.jsonl")).unwrap().lines().count(), 20);
    let v: Vec<f64> = r.cvar_by_alpha.iter().map(|x| x.1).collect();
    assert!(v[0] <= v[1] && v[1] <= v[2]);
}

#[test]
fn testset_rows_per_level_and_heatmap_counts() {
    let dir = tempfile::tempdir().unwrap();
    let (cfg, ckpt) = trained(dir.path());
    let files: Vec<PathBuf> = (0..3)
        .map(|i| {
            let p = dir.path().join(format!("set{i}.txt"));
            levels::write_levels(&cfg, 1, true, i, &p).unwrap();
            p
        })
        .collect();
    let rates = evaluate::eval_testset(&cfg, &ckpt, &files, 0, &dir.path().join("ts")).unwrap();
    assert_eq!(rates.len(), 3);
    assert_eq!(fs::read_to_string(dir.path().join("ts/testset.csv")).unwrap().lines().count(), 4);

    let g = evaluate::eval_heatmap_pair(&cfg, &ckpt, &ckpt, 0, &dir.path().join("hm")).unwrap();
    assert_eq!(g.total(), 20);
    let csv = fs::read_to_string(dir.path().join("hm/heatmap.csv")).unwrap();
    let cells: u64 = csv.lines().flat_map(|l| l.split(',')).map(|c| c.parse::<u64>().unwrap()).sum();
    assert_eq!((csv.lines().count(), cells), (10, 20));
}

#[test]
fn checkpoint_from_other_env_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let (mut cfg, ckpt) = trained(dir.path());
    cfg.gen = GenParams { env_kind: EnvKind::Jaxnav, ..GenParams::default() };
    let err = evaluate::eval_cvar(&cfg, &ckpt, 0, &dir.path().join("x")).unwrap_err();
    assert!(matches!(err.downcast_ref::<sfl_core::Error>(), Some(sfl_core::Error::Compatibility(_))), "{err:#}");
}

#[test]
fn generated_levels_parse_back() {
    let dir = tempfile::tempdir().unwrap();
    for cfg in [small_maze(dir.path(), Method::Dr, 1), RunConfig::default()] {
        let text = levels::gen_levels(&cfg, 5, true, 4).unwrap();
        let specs = parse_levels(&text).unwrap();
        assert_eq!(specs.len(), 5);
        assert!(specs.iter().all(|s| s.kind() == cfg.gen.env_kind));
    }
    let path = dir.path().join("l.txt");
    let ok = bin().args(["gen-levels", "--count", "3", "--out"]).arg(&path).status().unwrap();
    assert!(ok.success());
    assert_eq!(parse_levels(&fs::read_to_string(&path).unwrap()).unwrap().len(), 3);
}

#[test]
fn plot_data_mean_and_stderr() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, v: f64| {
        let p = dir.path().join(name);
        fs::write(&p, format!("alpha,value,seed\n10,{v},0\n")).unwrap();
        p
    };
    let a = write("a.csv", 0.4);
    let b = write("b.csv", 0.6);
    let text = plot::emit_plot_data(plot::PlotKind::CvarCurve, &[a.clone(), b], "").unwrap();
    let row: Vec<f64> = text.lines().nth(1).unwrap().split(',').map(|c| c.parse().unwrap()).collect();
    assert!((row[1] - 0.5).abs() < 1e-12 && (row[2] - 0.1).abs() < 1e-12 && row[3] == 2.0);
    let single = plot::emit_plot_data(plot::PlotKind::CvarCurve, &[a], "").unwrap();
    assert_eq!(single.lines().nth(1).unwrap(), "10,0.4,0,1");
}

#[test]
fn plot_data_on_empty_input_fails_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.jsonl");
    fs::write(&empty, "").unwrap();
    let out = dir.path().join("plot.csv");
    let st = bin().args(["plot-data", "--kind", "training-curve", "--out"]).arg(&out).arg(&empty).status().unwrap();
    assert!(!st.success());
    assert!(!out.exists());
}

#[test]
fn metrics_jsonl_feeds_training_curve() {
    let dir = tempfile::tempdir().unwrap();
    train::run_train(&small_maze(dir.path(), Method::Dr, 3)).unwrap();
    let m = train::seed_dir(dir.path(), 3).join("metrics.jsonl");
    let text = plot::emit_plot_data(plot::PlotKind::TrainingCurve, &[m], "ppo.value_loss").unwrap();
    assert_eq!(text.lines().count(), 4, "{text}");
}
