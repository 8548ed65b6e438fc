use std::path::Path;

use super::*;
use crate::traces::TracePaths;

fn tiny(out: &Path) -> ExperimentConfig {
    let mut c = ExperimentConfig::synthetic();
    c.traces = TraceSource::Synth {
        config: SynthConfig {
            days: 5,
            ..SynthConfig::default()
        },
        seed: 3,
    };
    c.train_days = Some(3);
    c.train = TrainConfig {
        episodes: 3,
        batch_size: 8,
        actor_hidden: 8,
        critic_hidden: 8,
        attend_dim: 8,
        buffer_capacity: 1000,
        update_every: 8,
        ..TrainConfig::compact()
    };
    c.out_dir = out.to_path_buf();
    c.seeds = vec![0, 1];
    c.alpha_grid = vec![6.0];
    c.beta_grid = vec![0.1];
    c
}

fn bytes(p: &Path) -> Vec<u8> {
    std::fs::read(p).unwrap()
}

#[test]
fn interval_oracle() {
    let i = Interval::of(&[1.0, 2.0, 3.0]);
    assert_eq!(i.mean, 2.0);
    assert!((i.half_width - 1.96 / 3f64.sqrt()).abs() < 1e-15);
    assert!(!i.degenerate);
    let one = Interval::of(&[4.5]);
    assert_eq!((one.half_width, one.degenerate), (0.0, true));
    assert!(Interval::of(&[]).mean.is_nan());
}

#[test]
fn config_requires_a_trace_source() {
    let cfg = KvConfig::parse_str("alpha = 3\n", Path::new(".")).unwrap();
    assert!(matches!(ExperimentConfig::from_kv(&cfg), Err(Error::Config(_))));
    let cfg = KvConfig::parse_str("synth.days = 9\nsynth.typo = 1\n", Path::new(".")).unwrap();
    let err = ExperimentConfig::from_kv(&cfg).unwrap_err();
    assert!(err.to_string().contains("synth.typo"), "{err}");
    let cfg = KvConfig::parse_str("traces.dir = /does/not/exist\n", Path::new(".")).unwrap();
    assert!(matches!(ExperimentConfig::from_kv(&cfg), Err(Error::Config(_))));
    let cfg = KvConfig::parse_str("synth.days = 9\nseeds = \n", Path::new(".")).unwrap();
    assert!(ExperimentConfig::from_kv(&cfg).is_err());
}

#[test]
fn config_keys_reach_their_fields() {
    let text = "synth.days = 9\nsynth.seed = 4\nalpha = 3\nseeds = 5, 6\nsweep.alpha = 1, 2\n\
                train.preset = desk\ntrain.episodes = 7\nsplit.train_days = 6\nhs.zeta = 0.9\n\
                comfort.atd_max = 1.2\nout = results\nzone.upsilon = 2\n";
    let c = ExperimentConfig::from_kv(&KvConfig::parse_str(text, Path::new("/tmp/x")).unwrap()).unwrap();
    assert_eq!(c.building.alpha, 3.0);
    assert_eq!(c.building.beta, DEFAULT_BETA);
    assert_eq!(c.seeds, vec![5, 6]);
    assert_eq!(c.alpha_grid, vec![1.0, 2.0]);
    assert_eq!(c.train.episodes, 7);
    assert_eq!(c.train.batch_size, TrainConfig::desk().batch_size);
    assert_eq!(c.train_days, Some(6));
    assert_eq!(c.hs.zeta, 0.9);
    assert_eq!(c.atd_max, 1.2);
    assert_eq!(c.out_dir, Path::new("/tmp/x/results"));
    assert!(c.building.zones.iter().all(|z| z.upsilon == 2.0));
    match c.traces {
        TraceSource::Synth { config, seed } => assert_eq!((config.days, seed), (9, 4)),
        other => panic!("{other:?}"),
    }
}

#[test]
fn synth_then_load_from_files() {
    let dir = tempfile::tempdir().unwrap();
    let c = tiny(dir.path());
    let paths = cmd_synth(&c).unwrap();
    assert_eq!(paths, TracePaths::in_dir(&dir.path().join("traces")));
    let text = format!("traces.dir = {}\nsplit.train_days = 3\n", dir.path().join("traces").display());
    let from_files = ExperimentConfig::from_kv(&KvConfig::parse_str(&text, Path::new(".")).unwrap()).unwrap();
    let a = Experiment::prepare(&c).unwrap();
    let b = Experiment::prepare(&from_files).unwrap();
    assert_eq!(a.traces, b.traces);
    assert_eq!(a.test_window(), (3 * 96, 2 * 96));
}

#[test]
fn train_is_reproducible_and_emits_parseable_svg() {
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    let a = cmd_train(&tiny(d1.path()), 4).unwrap();
    let b = cmd_train(&tiny(d2.path()), 4).unwrap();
    for f in ["agents.ckpt", "training_log.csv", "reward_curve.svg"] {
        assert_eq!(bytes(&a.dir.join(f)), bytes(&b.dir.join(f)), "{f}");
    }
    let svg = std::fs::read_to_string(a.dir.join("reward_curve.svg")).unwrap();
    roxmltree::Document::parse(&svg).unwrap();
    let back = TrainingLog::read_csv(&a.dir.join("training_log.csv")).unwrap();
    assert_eq!(back.episode_sums(), a.log.episode_sums());

    // a rerun into the same directory overwrites byte for byte
    let before = bytes(&a.checkpoint);
    cmd_train(&tiny(d1.path()), 4).unwrap();
    assert_eq!(bytes(&a.checkpoint), before);
}

#[test]
fn eval_and_compare_need_checkpoints() {
    let dir = tempfile::tempdir().unwrap();
    let c = tiny(dir.path());
    assert!(matches!(cmd_eval(&c, 0), Err(Error::Checkpoint(_))));
    assert!(matches!(cmd_compare(&c), Err(Error::Checkpoint(_))));
}

#[test]
fn compare_report_is_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let c = tiny(dir.path());
    for &s in &c.seeds {
        cmd_train(&c, s).unwrap();
    }
    let m0 = cmd_eval(&c, 0).unwrap();
    let (back, _) = read_metrics_csv(&c.seed_dir(0).join("eval_metrics.csv")).unwrap();
    assert_eq!(back, m0);

    let report = cmd_compare(&c).unwrap();
    assert_eq!(report.runs.len(), 6);
    let exp = Experiment::prepare(&c).unwrap();
    for r in &report.runs {
        let log = EpisodeLog::read_csv(&dir.path().join(format!("compare/slots_{}_seed_{}.csv", r.scheme, r.seed))).unwrap();
        assert_eq!(metrics(&log, &exp.params).unwrap(), r.metrics);
    }
    let proposed0 = report.runs.iter().find(|r| r.scheme == "proposed" && r.seed == 0).unwrap();
    assert_eq!(proposed0.metrics, m0);

    assert_eq!(read_runs_csv(&dir.path().join("compare/runs.csv")).unwrap(), report.runs);
    let summary = read_summary_csv(&dir.path().join("compare/summary.csv")).unwrap();
    assert_eq!(summary.len(), 9);
    for (a, b) in summary.iter().zip(&report.summary) {
        assert_eq!((&a.scheme, &a.metric, a.interval.n, a.interval.mean), (&b.scheme, &b.metric, b.interval.n, b.interval.mean));
        assert!((a.interval.half_width - b.interval.half_width).abs() <= 1e-9 * b.interval.mean.abs().max(1.0));
    }
    for f in ["tec.svg", "profile_airflow.svg"] {
        roxmltree::Document::parse(&std::fs::read_to_string(dir.path().join("compare").join(f)).unwrap()).unwrap();
    }

    // baselines ignore the checkpoint: retrain seed 0 differently and compare again
    let mut other = c.clone();
    other.train.episodes = 1;
    cmd_train(&other, 0).unwrap();
    let again = cmd_compare(&c).unwrap();
    for scheme in ["rs", "hs"] {
        let pick = |rep: &CompareReport| -> Vec<RunRow> { rep.runs.iter().filter(|r| r.scheme == scheme).cloned().collect() };
        assert_eq!(pick(&report), pick(&again));
    }

    let mut single = c.clone();
    single.seeds = vec![1];
    let rep = cmd_compare(&single).unwrap();
    let i = rep.summary_of(Scheme::Rs, "tec").unwrap();
    assert!(i.degenerate && i.half_width == 0.0 && i.n == 1);
}

#[test]
fn one_cell_sweep_matches_train_and_compare() {
    let d1 = tempfile::tempdir().unwrap();
    let c = ExperimentConfig {
        seeds: vec![2],
        ..tiny(d1.path())
    };
    let rows = cmd_sweep(&c).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(read_sweep_csv(&d1.path().join("sweep/results.csv")).unwrap(), rows);
    for f in ["tec.svg", "atd.svg", "acd.svg"] {
        roxmltree::Document::parse(&std::fs::read_to_string(d1.path().join("sweep").join(f)).unwrap()).unwrap();
    }

    let d2 = tempfile::tempdir().unwrap();
    let plain = ExperimentConfig {
        seeds: vec![2],
        ..tiny(d2.path())
    };
    cmd_train(&plain, 2).unwrap();
    let rep = cmd_compare(&plain).unwrap();
    let proposed = rep.runs.iter().find(|r| r.scheme == "proposed").unwrap();
    assert_eq!(proposed.metrics, rows[0].metrics);
    assert_eq!(
        bytes(&cell_dir(&c, 6.0, 0.1).join("seed_2/agents.ckpt")),
        bytes(&plain.seed_dir(2).join("agents.ckpt"))
    );
}

#[test]
fn sweep_cells_are_independent_of_order() {
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    let mut a = tiny(d1.path());
    a.train.episodes = 1;
    a.seeds = vec![0];
    a.alpha_grid = vec![1.0, 30.0];
    a.beta_grid = vec![0.01, 2.0];
    let mut b = a.clone();
    b.out_dir = d2.path().to_path_buf();
    b.alpha_grid.reverse();
    b.beta_grid.reverse();
    let ra = cmd_sweep(&a).unwrap();
    let rb = cmd_sweep(&b).unwrap();
    assert_eq!(ra.len(), a.alpha_grid.len() * a.beta_grid.len() * a.seeds.len());
    for r in &ra {
        assert!(rb.contains(r));
        let p = format!("sweep/alpha_{}_beta_{}/seed_0/agents.ckpt", r.alpha, r.beta);
        assert_eq!(bytes(&d1.path().join(&p)), bytes(&d2.path().join(&p)));
    }
    let mut empty = a.clone();
    empty.beta_grid.clear();
    assert!(matches!(cmd_sweep(&empty), Err(Error::Config(_))));
}
