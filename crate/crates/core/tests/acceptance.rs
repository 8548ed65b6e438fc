//! Acceptance suite. Prints one `criterion N PASS|FAIL` line per criterion
//! and exits non-zero if any fails.
//!
//! cargo test --release --test acceptance -- [criterion numbers]
//!
//! Criteria 6 to 9 train on the four-zone synthetic building and take about
//! an hour on one core.

use std::io::Write;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use hvac_maac::cli::{cmd_train, Experiment, ExperimentConfig, Scheme, TraceSource};
use hvac_maac::env::{metrics, BuildingParams, EnvState, JointAction, Metrics};
use hvac_maac::maac::{train, AgentSet, Batch, MarkovGame, MatrixGame, TrainConfig, TrainingLog};
use hvac_maac::nn::{attend, attention_contribution, glorot, grad_check, AttentionBlock};
use hvac_maac::traces::{SynthConfig, TraceSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DYNAMICS_TOL: f64 = 1e-12;
const GRAD_TOL: f64 = 1e-4;
const ATTENTION_TOL: f64 = 1e-12;
const TOY_RUNS: u64 = 20;
const TOY_HITS: usize = 19;
const TOY_MAX_ROUNDS: usize = 5000;
const WINDOW: usize = 200;
const STUDY_SEEDS: u64 = 10;
const CONVERGE_MIN: usize = 8;
const DOMINANCE_MIN: usize = 8;
const ROBUST_MIN: usize = 7;
const GRID_SEEDS: u64 = 5;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

fn note(line: impl AsRef<str>) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "    {}", line.as_ref());
    let _ = out.flush();
}

/// `|a - b|` relative to the oracle `b`; exact zeros must match exactly.
fn rel(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        a.abs()
    } else {
        (a - b).abs() / b.abs()
    }
}

// ---------------------------------------------------------------------------
// random buildings and traces

fn random_building(rng: &mut ChaCha8Rng) -> BuildingParams {
    let n = rng.gen_range(1..=6);
    let mut p = BuildingParams::default_line(n);
    for i in 0..n {
        let z = &mut p.zones[i];
        z.ell = rng.gen_range(0.5..0.99);
        z.hbar.clear();
        for j in (0..n).filter(|&j| j != i) {
            if rng.gen_bool(0.5) {
                z.hbar.push((j, rng.gen_range(0.0..0.05)));
            }
        }
        z.varpi = rng.gen_range(1e-5..1e-3);
        z.varrho = rng.gen_range(0.0..0.2);
        z.upsilon = if rng.gen_bool(0.5) { rng.gen_range(0.1..3.0) } else { 0.0 };
        z.volume = rng.gen_range(100.0..2000.0);
        z.o_max = rng.gen_range(800.0..1500.0);
        z.t_min = rng.gen_range(17.0..21.0);
        z.t_max = z.t_min + rng.gen_range(1.0..6.0);
        let levels = rng.gen_range(2..8);
        let mut l: Vec<f64> = (0..levels).map(|_| rng.gen_range(0.0..600.0)).collect();
        l[0] = 0.0;
        l.sort_by(f64::total_cmp);
        z.airflow_levels = l;
    }
    p.mu = rng.gen_range(1e-7..1e-5);
    p.c_a = rng.gen_range(0.9..1.1);
    p.eta = rng.gen_range(0.5..1.0);
    p.cop = rng.gen_range(2.0..7.0);
    p.t_supply = rng.gen_range(10.0..18.0);
    p.kappa = rng.gen_range(500.0..2000.0);
    p.chi = rng.gen_range(0.001..0.01);
    p.damper_levels = (0..rng.gen_range(2..6)).map(|_| rng.gen_range(0.0..=1.0)).collect();
    p.alpha = rng.gen_range(0.1..30.0);
    p.beta = rng.gen_range(0.001..2.0);
    p.set_tau_minutes([5.0, 15.0, 30.0, 60.0][rng.gen_range(0..4)]);
    p
}

fn random_traces(rng: &mut ChaCha8Rng, zones: usize, minutes: u32) -> TraceSet {
    let len = rng.gen_range(1..40);
    TraceSet::new(
        (0..len).map(|_| rng.gen_range(0.1..2.0)).collect(),
        (0..len).map(|_| rng.gen_range(-5.0..40.0)).collect(),
        (0..len).map(|_| rng.gen_range(350.0..500.0)).collect(),
        (0..zones)
            .map(|_| (0..len).map(|_| if rng.gen_bool(0.3) { 0 } else { rng.gen_range(1..40) }).collect())
            .collect(),
        minutes,
    )
    .unwrap()
}

fn random_state(rng: &mut ChaCha8Rng, p: &BuildingParams, traces: &TraceSet) -> EnvState {
    let slot = rng.gen_range(0..traces.len() + 5);
    EnvState {
        temps: (0..p.num_zones()).map(|_| rng.gen_range(10.0..35.0)).collect(),
        co2: (0..p.num_zones()).map(|_| rng.gen_range(400.0..2500.0)).collect(),
        slot,
        slot_of_day: slot % traces.slots_per_day(),
    }
}

fn random_action(rng: &mut ChaCha8Rng, p: &BuildingParams) -> JointAction {
    JointAction {
        airflow_idx: p.zones.iter().map(|z| rng.gen_range(0..z.airflow_levels.len())).collect(),
        damper_idx: rng.gen_range(0..p.damper_levels.len()),
    }
}

fn random_case(rng: &mut ChaCha8Rng) -> (BuildingParams, TraceSet, EnvState, JointAction) {
    let p = random_building(rng);
    let traces = random_traces(rng, p.num_zones(), (p.tau_seconds / 60.0) as u32);
    let state = random_state(rng, &p, &traces);
    let action = random_action(rng, &p);
    (p, traces, state, action)
}

// ---------------------------------------------------------------------------
// criterion 1

fn criterion_1() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let (p, tr, s, a) = random_case(&mut rng);
        let t = s.slot.min(tr.len() - 1);
        let m: Vec<f64> = (0..p.num_zones()).map(|i| p.zones[i].airflow_levels[a.airflow_idx[i]]).collect();
        let sigma = p.damper_levels[a.damper_idx];
        let (t_out, o_out, price) = (tr.outdoor_temp(t), tr.outdoor_co2(t), tr.price(t));

        let draw_rng = ChaCha8Rng::seed_from_u64(rng.gen());
        let mut oracle_rng = draw_rng.clone();
        let temps = p.thermal_step(&s, &a, &tr, &mut draw_rng.clone());
        for (i, z) in p.zones.iter().enumerate() {
            let omega = if z.upsilon > 0.0 { oracle_rng.gen_range(-z.upsilon..=z.upsilon) } else { 0.0 };
            let oracle = z.ell * s.temps[i]
                + z.hbar.iter().map(|&(j, h)| h * s.temps[j]).sum::<f64>()
                + z.varpi * m[i] * (p.t_supply - s.temps[i])
                + z.varrho * t_out
                + omega;
            worst = worst.max(rel(temps[i], oracle));
        }

        let co2 = p.co2_step(&s, &a, &tr);
        let m_total: f64 = m.iter().sum();
        for (i, z) in p.zones.iter().enumerate() {
            let ret = if m_total > 0.0 { s.co2.iter().zip(&m).map(|(o, mi)| o * mi).sum::<f64>() / m_total } else { 0.0 };
            let oracle = (1.0 - m[i] * p.tau_seconds / (p.kappa * z.volume)) * s.co2[i]
                + m[i] * p.tau_seconds / (p.kappa * z.volume) * ((1.0 - sigma) * o_out + sigma * ret)
                + tr.occupancy(i, t) as f64 * p.tau_seconds * p.chi * 1000.0 / z.volume;
            worst = worst.max(rel(co2[i], oracle));
        }

        let fan = p.fan_energy_cost(&m, price);
        let fan_oracle = p.mu * m_total * m_total * m_total / 1000.0 * price * p.tau_hours;
        worst = worst.max(rel(fan, fan_oracle));

        let powers = p.coil_power_per_zone(&s, &a, &tr);
        let mut coil_sum = 0.0;
        for i in 0..p.num_zones() {
            let oracle = (m[i] * p.c_a / (p.eta * p.cop) * (sigma * s.temps[i] + (1.0 - sigma) * t_out - p.t_supply)).max(0.0);
            worst = worst.max(rel(powers[i], oracle));
            coil_sum += oracle;
        }
        worst = worst.max(rel(p.coil_energy_cost(&powers, price), coil_sum / 1000.0 * price * p.tau_hours));
    }
    let elapsed = started.elapsed();
    Outcome::new(
        worst <= DYNAMICS_TOL && elapsed < Duration::from_secs(1),
        format!("max rel error {worst:.2e} (tol {DYNAMICS_TOL:.0e}), {elapsed:.2?} (limit 1 s)"),
    )
}

// ---------------------------------------------------------------------------
// criterion 2

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let (p, tr, prev, a) = random_case(&mut rng);
        let (next, r) = p.transition(&prev, &a, &tr, &mut ChaCha8Rng::seed_from_u64(rng.gen()));
        let t = prev.slot.min(tr.len() - 1);
        let t_next = next.slot.min(tr.len() - 1);
        let m: Vec<f64> = (0..p.num_zones()).map(|i| p.zones[i].airflow_levels[a.airflow_idx[i]]).collect();
        let price = tr.price(t);

        let phi1 = p.mu * m.iter().sum::<f64>().powi(3) / 1000.0 * price * p.tau_hours;
        let sigma = p.damper_levels[a.damper_idx];
        let coil: f64 = (0..p.num_zones())
            .map(|i| (m[i] * p.c_a / (p.eta * p.cop) * (sigma * prev.temps[i] + (1.0 - sigma) * tr.outdoor_temp(t) - p.t_supply)).max(0.0))
            .sum::<f64>()
            / 1000.0
            * price
            * p.tau_hours;
        let violation: f64 = (0..p.num_zones())
            .map(|i| if tr.occupancy(i, t_next) > 0 { (next.co2[i] - p.zones[i].o_max).max(0.0) } else { 0.0 })
            .sum();

        let fan_sum: f64 = r.parts.iter().map(|x| x.fan).sum();
        let coil_sum: f64 = r.parts.iter().map(|x| x.coil).sum();
        let co2_sum: f64 = r.parts.iter().map(|x| x.co2).sum();
        worst = worst.max(rel(fan_sum, -phi1)).max(rel(coil_sum, -coil)).max(rel(co2_sum, -violation));
        for (total, x) in r.totals.iter().zip(&r.parts) {
            worst = worst.max(rel(*total, p.alpha * (x.fan + x.coil) + p.beta * x.co2 + x.temp));
        }
    }
    Outcome::new(worst <= DYNAMICS_TOL, format!("max rel error {worst:.2e} (tol {DYNAMICS_TOL:.0e})"))
}

// ---------------------------------------------------------------------------
// criterion 3

fn criterion_3() -> Outcome {
    let started = Instant::now();
    let (od, ad) = ([4, 3, 5], [3, 2, 4]);
    let config = TrainConfig {
        actor_hidden: 16,
        critic_hidden: 16,
        attend_dim: 8,
        ..TrainConfig::paper()
    };
    let mut worst_critic: f64 = 0.0;
    let mut worst_policy: f64 = 0.0;
    let mut pass = true;
    for seed in 0..3u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(300 + seed);
        let size = 6;
        let batch = Batch {
            obs: od.iter().map(|&d| glorot(size, d, &mut rng) * 2.0).collect(),
            actions: ad.iter().map(|&a| (0..size).map(|_| rng.gen_range(0..a)).collect()).collect(),
            next_obs: od.iter().map(|&d| glorot(size, d, &mut rng) * 2.0).collect(),
            rewards: od.iter().map(|_| (0..size).map(|_| rng.gen_range(-3.0..0.0)).collect()).collect(),
        };
        let agents = AgentSet::new(&od, &ad, &config, &mut rng).unwrap();

        let targets = agents.critic_targets(&batch, &mut rng).unwrap();
        let (_, grad) = agents.critic_loss_grad(&batch, &targets).unwrap();
        let mut critic = agents.critic.clone();
        let report = grad_check(
            &mut critic,
            |c| {
                let mut probe = agents.clone();
                probe.critic = c.clone();
                probe.critic_loss_grad(&batch, &targets).unwrap().0
            },
            &grad,
            GRAD_TOL,
        );
        worst_critic = worst_critic.max(report.max_rel_error);
        pass &= report.passed();

        let terms = agents.policy_terms(&batch, &mut rng).unwrap();
        for i in 0..od.len() {
            let (_, grad) = agents.policy_surrogate_grad(i, &batch.obs[i], &terms.actions[i], &terms.rho[i]).unwrap();
            let mut actor = agents.actors[i].clone();
            let report = grad_check(
                &mut actor,
                |act| {
                    let mut probe = agents.clone();
                    probe.actors[i] = act.clone();
                    probe.policy_surrogate_grad(i, &batch.obs[i], &terms.actions[i], &terms.rho[i]).unwrap().0
                },
                &grad,
                GRAD_TOL,
            );
            worst_policy = worst_policy.max(report.max_rel_error);
            pass &= report.passed();
        }
    }
    let elapsed = started.elapsed();
    Outcome::new(
        pass && elapsed < Duration::from_secs(30),
        format!(
            "critic loss max rel {worst_critic:.2e}, policy surrogate max rel {worst_policy:.2e} (tol {GRAD_TOL:.0e}), {elapsed:.2?} (limit 30 s)"
        ),
    )
}

// ---------------------------------------------------------------------------
// criterion 4

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut sum_err: f64 = 0.0;
    let mut perm_err: f64 = 0.0;
    let mut uniform_exact = true;
    for _ in 0..500 {
        let d = rng.gen_range(1..12);
        let block = AttentionBlock::new(d, rng.gen_range(1..10), &mut rng);
        let n = rng.gen_range(2..8);
        let embeds: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.gen_range(-3.0..3.0)).collect()).collect();
        let i = rng.gen_range(0..n);
        let base = attention_contribution(&embeds, i, &block).unwrap();
        sum_err = sum_err.max((base.weights.iter().sum::<f64>() - 1.0).abs());

        let mut others: Vec<(usize, &[f64])> = embeds
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(j, e)| (j, e.as_slice()))
            .collect();
        for k in (1..others.len()).rev() {
            others.swap(k, rng.gen_range(0..=k));
        }
        let shuffled: Vec<&[f64]> = others.iter().map(|o| o.1).collect();
        let permuted = attend(&embeds[i], &shuffled, &block).unwrap();
        for (a, b) in base.x.iter().zip(&permuted.x) {
            perm_err = perm_err.max((a - b).abs() / a.abs().max(1.0));
        }
        // each weight travels with its embedding
        let original_pos = |j: usize| if j < i { j } else { j - 1 };
        for (pos, (j, _)) in others.iter().enumerate() {
            perm_err = perm_err.max((permuted.weights[pos] - base.weights[original_pos(*j)]).abs());
        }

        let same = vec![embeds[0].clone(); n];
        let u = attention_contribution(&same, i, &block).unwrap();
        uniform_exact &= u.weights.iter().all(|w| *w == 1.0 / (n - 1) as f64);
    }
    Outcome::new(
        sum_err <= ATTENTION_TOL && perm_err <= ATTENTION_TOL && uniform_exact,
        format!(
            "weight sum error {sum_err:.1e}, permutation error {perm_err:.1e} (tol {ATTENTION_TOL:.0e}), identical embeddings uniform exactly: {uniform_exact}"
        ),
    )
}

// ---------------------------------------------------------------------------
// criterion 5

fn criterion_5() -> Outcome {
    let started = Instant::now();
    let config = TrainConfig::matrix_game();
    let game = MatrixGame::coordination();
    let best = game.best_joint_action();
    let mut hits = 0;
    let mut max_rounds = 0;
    for seed in 0..TOY_RUNS {
        let (agents, log) = train(|_| Ok(MatrixGame::coordination()), &config, seed).unwrap();
        let obs = game.clone().reset(&mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let a = agents.act(&obs, true, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        max_rounds = max_rounds.max(log.learning_rounds());
        if (a[0], a[1]) == best {
            hits += 1;
        } else {
            note(format!("seed {seed}: greedy ({}, {})", a[0], a[1]));
        }
    }
    let elapsed = started.elapsed();
    Outcome::new(
        hits >= TOY_HITS && max_rounds <= TOY_MAX_ROUNDS && elapsed < Duration::from_secs(120),
        format!(
            "{hits}/{TOY_RUNS} runs chose {best:?} (need {TOY_HITS}), at most {max_rounds} updates (limit {TOY_MAX_ROUNDS}), {elapsed:.1?} (limit 2 min)"
        ),
    )
}

// ---------------------------------------------------------------------------
// criteria 6 to 9: training studies on the synthetic building

struct SeedResult {
    seed: u64,
    log: TrainingLog,
    proposed: Metrics,
    rs: Metrics,
}

fn study_config(upsilon: f64) -> ExperimentConfig {
    let mut c = ExperimentConfig::synthetic();
    c.building.set_upsilon(upsilon);
    c
}

fn run_study(config: &ExperimentConfig, seeds: std::ops::Range<u64>, label: &str) -> (Experiment, Vec<SeedResult>) {
    let exp = Experiment::prepare(config).unwrap();
    let mut results = Vec::new();
    for seed in seeds {
        let started = Instant::now();
        let (agents, log) = exp.train(seed).unwrap();
        let proposed = metrics(&exp.run_scheme(Scheme::Proposed, Some(&agents), seed).unwrap(), &exp.params).unwrap();
        let rs = metrics(&exp.run_scheme(Scheme::Rs, None, seed).unwrap(), &exp.params).unwrap();
        note(format!(
            "{label} seed {seed}: TEC {:.1} vs RS {:.1}, ATD {:.3}, ACD {:.2} ({:.0?})",
            proposed.tec,
            rs.tec,
            proposed.atd,
            proposed.acd,
            started.elapsed()
        ));
        results.push(SeedResult { seed, log, proposed, rs });
    }
    (exp, results)
}

/// `(first, last)` window means of every agent.
fn windows(log: &TrainingLog) -> Vec<(f64, f64)> {
    let len = log.len();
    let w = WINDOW.min(len);
    (0..log.num_agents())
        .map(|a| (log.mean_over(a, 0..w), log.mean_over(a, len - w..len)))
        .collect()
}

/// Seeds whose mean over agents improved, and seeds where every agent did.
fn convergence(results: &[SeedResult]) -> (usize, usize) {
    let mut mean_ok = 0;
    let mut strict_ok = 0;
    for r in results {
        let w = windows(&r.log);
        let first: f64 = w.iter().map(|x| x.0).sum::<f64>() / w.len() as f64;
        let last: f64 = w.iter().map(|x| x.1).sum::<f64>() / w.len() as f64;
        if last > first {
            mean_ok += 1;
        }
        if w.iter().all(|(f, l)| l > f) {
            strict_ok += 1;
        }
        let per_agent: Vec<String> = w.iter().map(|(f, l)| format!("{:+.1}", l - f)).collect();
        note(format!("seed {}: mean {first:.1} -> {last:.1}, per agent [{}]", r.seed, per_agent.join(", ")));
    }
    (mean_ok, strict_ok)
}

fn dominance(exp: &Experiment, results: &[SeedResult]) -> usize {
    results
        .iter()
        .filter(|r| exp.comfort_ok(&r.proposed) && exp.comfort_ok(&r.rs) && r.proposed.tec < r.rs.tec)
        .count()
}

fn criterion_6(results: &[SeedResult]) -> Outcome {
    let (mean_ok, strict_ok) = convergence(results);
    Outcome::new(
        mean_ok >= CONVERGE_MIN,
        format!(
            "mean agent reward over the last {WINDOW} episodes beat the first {WINDOW} in {mean_ok}/{} seeds (need {CONVERGE_MIN}); every agent individually in {strict_ok}",
            results.len()
        ),
    )
}

fn criterion_7(exp: &Experiment, results: &[SeedResult]) -> Outcome {
    let wins = dominance(exp, results);
    let mean = |f: &dyn Fn(&SeedResult) -> f64| results.iter().map(f).sum::<f64>() / results.len() as f64;
    let prop = mean(&|r| r.proposed.tec);
    let rs = mean(&|r| r.rs.tec);
    Outcome::new(
        wins >= DOMINANCE_MIN,
        format!(
            "comfort-satisfying and cheaper than RS in {wins}/{} seeds (need {DOMINANCE_MIN}); mean TEC {prop:.1} vs {rs:.1} ({:.1}% saving), RS ATD {:.3} ACD {:.2}",
            results.len(),
            100.0 * (1.0 - prop / rs),
            mean(&|r| r.rs.atd),
            mean(&|r| r.rs.acd),
        ),
    )
}

fn criterion_8() -> Outcome {
    let base = ExperimentConfig::synthetic();
    let (lo_a, hi_a) = (base.alpha_grid[0], base.alpha_grid[base.alpha_grid.len() - 1]);
    let (lo_b, hi_b) = (base.beta_grid[0], base.beta_grid[base.beta_grid.len() - 1]);
    let mut cells = Vec::new();
    for &alpha in &base.alpha_grid {
        for &beta in &base.beta_grid {
            let cfg = base.with_weights(alpha, beta, base.out_dir.clone());
            let (_, results) = run_study(&cfg, 0..GRID_SEEDS, &format!("alpha {alpha} beta {beta}"));
            let n = results.len() as f64;
            let tec = results.iter().map(|r| r.proposed.tec).sum::<f64>() / n;
            let acd = results.iter().map(|r| r.proposed.acd).sum::<f64>() / n;
            let atd = results.iter().map(|r| r.proposed.atd).sum::<f64>() / n;
            note(format!("cell alpha {alpha} beta {beta}: mean TEC {tec:.1}, ATD {atd:.3}, ACD {acd:.2}"));
            cells.push((alpha, beta, tec, acd));
        }
    }
    let find = |a: f64, b: f64| *cells.iter().find(|c| c.0 == a && c.1 == b).unwrap();
    let cheap = find(hi_a, lo_b);
    let comfy = find(lo_a, hi_b);
    Outcome::new(
        cheap.2 < comfy.2 && cheap.3 > comfy.3,
        format!(
            "seeds 0..{GRID_SEEDS}: TEC(alpha {hi_a}, beta {lo_b}) {:.1} < TEC(alpha {lo_a}, beta {hi_b}) {:.1}; ACD {:.2} > {:.2}",
            cheap.2, comfy.2, cheap.3, comfy.3
        ),
    )
}

fn criterion_9() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for upsilon in [1.0, 2.0, 3.0] {
        let (exp, results) = run_study(&study_config(upsilon), 0..STUDY_SEEDS, &format!("upsilon {upsilon}"));
        let (mean_ok, strict_ok) = convergence(&results);
        let wins = dominance(&exp, &results);
        pass &= mean_ok >= ROBUST_MIN;
        parts.push(format!("upsilon {upsilon}: converged {mean_ok}/{STUDY_SEEDS} (strict {strict_ok}), beat RS {wins}/{STUDY_SEEDS}"));
    }
    Outcome::new(pass, format!("{} (need {ROBUST_MIN} converged each)", parts.join("; ")))
}

// ---------------------------------------------------------------------------
// criterion 10

fn criterion_10() -> Outcome {
    let mut cfg = ExperimentConfig::synthetic();
    cfg.traces = TraceSource::Synth {
        config: SynthConfig {
            days: 6,
            ..SynthConfig::default()
        },
        seed: 5,
    };
    cfg.train_days = Some(4);
    cfg.building.set_upsilon(1.0);
    cfg.train.episodes = 12;
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    let mut identical = true;
    let mut rounds = 0;
    for seed in [3, 11] {
        cfg.out_dir = d1.path().to_path_buf();
        let a = cmd_train(&cfg, seed).unwrap();
        cfg.out_dir = d2.path().to_path_buf();
        let b = cmd_train(&cfg, seed).unwrap();
        rounds += a.log.learning_rounds();
        for f in ["training_log.csv", "agents.ckpt"] {
            identical &= std::fs::read(a.dir.join(f)).unwrap() == std::fs::read(b.dir.join(f)).unwrap();
        }
    }
    Outcome::new(
        identical && rounds > 0,
        format!("training logs and checkpoints byte-identical across reruns: {identical} ({rounds} learning rounds)"),
    )
}

// ---------------------------------------------------------------------------

fn main() -> ExitCode {
    let wanted: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let on = |k: u32| wanted.is_empty() || wanted.contains(&k);
    let mut failed = Vec::new();
    let mut report = |k: u32, o: Outcome| {
        let mut out = std::io::stdout().lock();
        let _ = writeln!(out, "criterion {k} {}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        let _ = out.flush();
        if !o.pass {
            failed.push(k);
        }
    };

    let quick: [(u32, fn() -> Outcome); 5] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
    ];
    for (k, f) in quick {
        if on(k) {
            report(k, f());
        }
    }
    if on(6) || on(7) {
        let (exp, results) = run_study(&study_config(0.0), 0..STUDY_SEEDS, "upsilon 0");
        if on(6) {
            report(6, criterion_6(&results));
        }
        if on(7) {
            report(7, criterion_7(&exp, &results));
        }
    }
    if on(8) {
        report(8, criterion_8());
    }
    if on(9) {
        report(9, criterion_9());
    }
    if on(10) {
        report(10, criterion_10());
    }

    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("failed criteria: {failed:?}");
        ExitCode::FAILURE
    }
}
