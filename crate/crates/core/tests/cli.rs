use std::path::Path;
use std::process::{Command, Output};

use hvac_maac::cli::{read_runs_csv, read_summary_csv, read_sweep_csv, SUMMARY_HEADER, SWEEP_HEADER};
use hvac_maac::maac::{AgentSet, TrainingLog};

const TINY: &str = "\
n_zones = 2
alpha = 6
beta = 0.1
synth.days = 4
synth.seed = 1
split.train_days = 2
train.preset = compact
train.episodes = 3
train.batch_size = 8
train.update_every = 8
train.actor_hidden = 8
train.critic_hidden = 8
train.attend_dim = 8
train.buffer_capacity = 1000
seeds = 0, 1
sweep.alpha = 2, 24
sweep.beta = 0.5
";

fn hvac(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hvac-maac")).args(args).output().unwrap()
}

fn write_config(dir: &Path, extra: &str) -> String {
    let path = dir.join("run.conf");
    std::fs::write(&path, format!("{TINY}out = {}\n{extra}", dir.join("out").display())).unwrap();
    path.display().to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn parse_svg(path: &Path) {
    let text = std::fs::read_to_string(path).unwrap();
    roxmltree::Document::parse(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
}

fn header(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

#[test]
fn help_lists_every_subcommand() {
    let o = hvac(&["--help"]);
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    for cmd in ["synth", "train", "eval", "compare", "sweep", "--config", "--seed", "--out"] {
        assert!(text.contains(cmd), "{cmd} missing from help");
    }
}

#[test]
fn errors_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");

    let o = hvac(&["--config", &cfg, "eval"]);
    assert_eq!(o.status.code(), Some(5), "{}", stderr(&o));
    assert!(stderr(&o).starts_with("error [checkpoint]"));

    let bad = dir.path().join("bad.conf");
    std::fs::write(&bad, "synth.days = 4\nsynth.colour = red\n").unwrap();
    let o = hvac(&["--config", bad.to_str().unwrap(), "synth"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("synth.colour"));

    let o = hvac(&["--config", dir.path().join("absent.conf").to_str().unwrap(), "synth"]);
    assert_ne!(o.status.code(), Some(0));

    let traces = dir.path().join("t");
    std::fs::create_dir_all(&traces).unwrap();
    std::fs::write(traces.join("price.csv"), "slot,price_rmb_per_kwh\n0,abc\n").unwrap();
    std::fs::write(traces.join("weather.csv"), "slot,outdoor_temp_c,outdoor_co2_ppm\n0,20,400\n").unwrap();
    std::fs::write(traces.join("occupancy.csv"), "slot,zone1,zone2\n0,1,1\n").unwrap();
    let files = dir.path().join("files.conf");
    std::fs::write(&files, format!("n_zones = 2\ntraces.dir = {}\n", traces.display())).unwrap();
    let o = hvac(&["--config", files.to_str().unwrap(), "train"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));

    assert_eq!(hvac(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn full_pipeline_writes_readable_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let out = dir.path().join("out");

    let o = hvac(&["--config", &cfg, "synth"]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["price.csv", "weather.csv", "occupancy.csv"] {
        assert!(out.join("traces").join(f).exists());
    }

    let o = hvac(&["--config", &cfg, "train"]);
    assert!(o.status.success(), "{}", stderr(&o));
    for seed in [0, 1] {
        let d = out.join(format!("seed_{seed}"));
        let agents = AgentSet::load(&d.join("agents.ckpt")).unwrap();
        assert_eq!(agents.num_agents(), 3);
        assert_eq!(TrainingLog::read_csv(&d.join("training_log.csv")).unwrap().len(), 3);
        parse_svg(&d.join("reward_curve.svg"));
    }

    let o = hvac(&["--config", &cfg, "--seed", "1", "eval"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.starts_with("seed,tec,atd,acd\n1,"), "{text}");
    assert_eq!(header(&out.join("seed_1/eval_metrics.csv")), "tec,atd,acd,comfort_ok");
    assert!(!out.join("seed_0/eval_metrics.csv").exists());

    let o = hvac(&["--config", &cfg, "compare"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let cmp = out.join("compare");
    assert_eq!(read_runs_csv(&cmp.join("runs.csv")).unwrap().len(), 6);
    assert_eq!(header(&cmp.join("summary.csv")), SUMMARY_HEADER.join(","));
    assert_eq!(read_summary_csv(&cmp.join("summary.csv")).unwrap().len(), 9);
    assert!(cmp.join("profile.csv").exists());
    for scheme in ["proposed", "rs", "hs"] {
        assert!(cmp.join(format!("slots_{scheme}_seed_0.csv")).exists());
    }
    parse_svg(&cmp.join("tec.svg"));
    parse_svg(&cmp.join("profile_airflow.svg"));

    let o = hvac(&["--config", &cfg, "--seed", "0", "sweep"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let sweep = out.join("sweep");
    assert_eq!(header(&sweep.join("results.csv")), SWEEP_HEADER.join(","));
    let rows = read_sweep_csv(&sweep.join("results.csv")).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.seed == 0));
    for f in ["surface.csv", "tec.svg", "atd.svg", "acd.svg"] {
        assert!(sweep.join(f).exists(), "{f}");
    }
    parse_svg(&sweep.join("acd.svg"));
}

#[test]
fn out_flag_overrides_config_and_reruns_are_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for d in [&a, &b] {
        let o = hvac(&["--config", &cfg, "--seed", "4", "--out", d.to_str().unwrap(), "train"]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    assert!(!dir.path().join("out").exists());
    for f in ["agents.ckpt", "training_log.csv", "reward_curve.svg"] {
        let p = Path::new("seed_4").join(f);
        assert_eq!(std::fs::read(a.join(&p)).unwrap(), std::fs::read(b.join(&p)).unwrap(), "{f}");
    }
}
