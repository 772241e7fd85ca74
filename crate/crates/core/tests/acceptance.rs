//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

use std::path::Path;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use lado::battery::{
    build_net_demand, canonicalize_disturbances, direct_cost, recover_soc, schedule_to_actions,
    simulate_soc, synthetic_traces, BatteryParams, BatteryUnit, RenewableConstants, WINDOW_LENGTH,
};
use lado::bounds::{bound_blackbox, default_lambda_grid, illustration_curves, BoundInputs, StylizedBoundSetting};
use lado::costs::{global_cost, global_gradient, smoothness_of, SpatialCost};
use lado::engine::{simulate, Combiner, EpisodeState, SimOptions};
use lado::harness::{
    batch_bounds, emit_tables, metrics, run_batch, run_instance, synthetic_instance, RosterEntry,
    RunConfig, Scenario, SyntheticConfig,
};
use lado::lado::{
    lado_step, project_to_robust_set, sufficient_ball_radius_sq, AgentLedger, Lambda0Mode,
    RobustSetHalfspaceData, RobustnessConfig,
};
use lado::harness::PolicyMetrics;
use lado::offline_opt::{brute_force_opt, grid_error_bound, GlobalQuadraticSystem};
use lado::policies::{expert_step, ExpertPolicy, HitOnlyPolicy, PolicyKind};
use lado::vector::norm_sq;

const LAMBDAS: [f64; 4] = [0.2, 0.5, 1.0, 2.0];

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo..hi)
}

fn random_edges(rng: &mut ChaCha8Rng, agents: usize) -> Vec<(usize, usize)> {
    match rng.random_range(0..3) {
        0 => (0..agents).flat_map(|a| (a + 1..agents).map(move |b| (a, b))).collect(),
        1 => (1..agents).map(|v| (v - 1, v)).collect(),
        _ => (1..agents).map(|v| (0, v)).collect(),
    }
}

fn random_synthetic(rng: &mut ChaCha8Rng, agents: usize, horizon: usize, dim: usize) -> SyntheticConfig {
    SyntheticConfig {
        agents,
        horizon,
        dim,
        edges: Some(random_edges(rng, agents)),
        spatial_weight: uniform(rng, 0.1, 3.0),
        transition: uniform(rng, 0.5, 1.2),
        step_std: uniform(rng, 0.2, 2.0),
        offset_std: uniform(rng, 0.0, 1.0),
        initial_std: uniform(rng, 0.0, 1.0),
    }
}

fn ml_kind(index: usize) -> PolicyKind {
    match index % 5 {
        0 => PolicyKind::MlSyntheticPerturbedOpt { sigma: 0.0 },
        1 => PolicyKind::MlSyntheticPerturbedOpt { sigma: 0.5 },
        2 => PolicyKind::MlSyntheticPerturbedOpt { sigma: 5.0 },
        3 => PolicyKind::MlAdversarial { lo: -10.0, hi: 10.0 },
        _ => PolicyKind::Expert,
    }
}

fn robustness() -> Outcome {
    const EPISODES: usize = 1200;
    let start = Instant::now();
    let results: Vec<(f64, usize, f64)> = (0..EPISODES)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(0xA11CE ^ i as u64);
            let agents = [1, 2, 3, 5][rng.random_range(0..4)];
            let horizon = rng.random_range(2..=24);
            let dim = rng.random_range(1..=2);
            let synthetic = random_synthetic(&mut rng, agents, horizon, dim);
            let instance = synthetic_instance(&synthetic, rng.random()).expect("instance");
            let config = RunConfig {
                seed: i as u64,
                lambdas: LAMBDAS.to_vec(),
                roster: vec![RosterEntry::Expert, RosterEntry::Lado],
                ml: ml_kind(i),
                verify_ledger: true,
                ..Default::default()
            };
            let report = run_instance(&config, &instance, i).expect("episode");
            let expert = report.cost("Expert").expect("expert cost");
            let mut worst_excess = f64::NEG_INFINITY;
            let mut violations = 0;
            let mut worst_slack = f64::NEG_INFINITY;
            for r in &report.lado {
                if expert > 0.0 {
                    worst_excess = worst_excess.max(r.cost / expert - (1.0 + r.lambda));
                } else {
                    worst_excess = worst_excess.max(r.cost - 1e-12);
                }
                violations += r.violations;
                worst_slack = worst_slack.max(r.max_slack);
            }
            (worst_excess, violations, worst_slack)
        })
        .collect();
    let elapsed = start.elapsed();
    let worst_excess = results.iter().map(|r| r.0).fold(f64::NEG_INFINITY, f64::max);
    let violations: usize = results.iter().map(|r| r.1).sum();
    let worst_slack = results.iter().map(|r| r.2).fold(f64::NEG_INFINITY, f64::max);
    let passed = worst_excess <= 1e-6 && violations == 0 && elapsed <= Duration::from_secs(120);
    outcome(
        passed,
        format!(
            "{EPISODES} episodes x {} lambdas, max ratio-(1+lambda) {worst_excess:.3e}, slack violations {violations}, worst slack {worst_slack:.3e}, {:.1}s",
            LAMBDAS.len(),
            elapsed.as_secs_f64()
        ),
    )
}

fn projection_oracle() -> Outcome {
    const PROBLEMS: usize = 500;
    const GRID_STEPS: usize = 1_000_000;
    let start = Instant::now();
    let results: Vec<(f64, bool)> = (0..PROBLEMS)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(0xB0B ^ i as u64);
            let terms: Vec<(f64, [f64; 1])> = (0..rng.random_range(1..=3))
                .map(|_| (uniform(&mut rng, 0.1, 5.0), [uniform(&mut rng, -20.0, 20.0)]))
                .collect();
            let refs: Vec<(f64, &[f64])> = terms.iter().map(|(w, c)| (*w, &c[..])).collect();
            let q = |z: f64| terms.iter().map(|(w, c)| w * (z - c[0]).powi(2)).sum::<f64>();
            let total: f64 = terms.iter().map(|t| t.0).sum();
            let probe = RobustSetHalfspaceData::from_squared_terms(&refs, &[0.0], 0.0);
            let radius = uniform(&mut rng, 0.01, 20.0);
            let bound = probe.min_value + total * radius * radius;
            let set = RobustSetHalfspaceData::from_squared_terms(&refs, &[0.0], bound);
            let target = if i % 2 == 0 {
                probe.center[0] + radius * uniform(&mut rng, -0.99, 0.99)
            } else {
                uniform(&mut rng, -50.0, 50.0)
            };
            let projected = project_to_robust_set(&[target], &set).expect("projection").point[0];

            let mut best = (f64::INFINITY, f64::NAN);
            for k in 0..=GRID_STEPS {
                let z = -50.0 + k as f64 * 1e-4;
                if q(z) <= bound {
                    let d = (z - target).abs();
                    if d < best.0 {
                        best = (d, z);
                    }
                }
            }
            let feasible = q(target) <= bound;
            let unchanged_ok = !feasible || projected.to_bits() == target.to_bits();
            ((projected - best.1).abs(), unchanged_ok)
        })
        .collect();
    let elapsed = start.elapsed();
    let worst = results.iter().map(|r| r.0).fold(0.0, f64::max);
    let moved = results.iter().filter(|r| !r.1).count();
    let passed = worst <= 2e-4 && moved == 0 && elapsed <= Duration::from_secs(10);
    outcome(
        passed,
        format!(
            "{PROBLEMS} problems, max |x - grid argmin| {worst:.2e}, feasible inputs moved {moved}, {:.1}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn opt_correctness() -> Outcome {
    const INSTANCES: usize = 100;
    const GRID_BUDGET: f64 = 1e6;
    let shapes = [
        (1, 1, 1), (1, 2, 1), (1, 3, 1), (1, 6, 1), (2, 1, 1), (2, 2, 1), (2, 3, 1),
        (3, 1, 1), (3, 2, 1), (1, 1, 2), (1, 2, 2), (1, 3, 2), (2, 1, 2), (3, 1, 2),
    ];
    let start = Instant::now();
    let results: Vec<(f64, f64, bool, f64)> = (0..INSTANCES)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(0x0F7 ^ i as u64);
            let (agents, horizon, dim) = shapes[i % shapes.len()];
            // unit transition and zero offsets keep OPT inside the hull of the data
            let config = SyntheticConfig {
                transition: 1.0,
                offset_std: 0.0,
                ..random_synthetic(&mut rng, agents, horizon, dim)
            };
            let instance = synthetic_instance(&config, rng.random()).expect("instance");
            let data = instance
                .node
                .iter()
                .flatten()
                .flat_map(|f| f.target.iter().copied())
                .chain(instance.initial.iter().flatten().copied());
            let (lo, hi) = data.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), x| (l.min(x), h.max(x)));
            let (lo, hi) = if hi - lo < 1e-6 { (lo - 0.5, hi + 0.5) } else { (lo, hi) };
            let dims = instance.decision_len();
            let points = GRID_BUDGET.powf(1.0 / dims as f64).floor().min(2001.0).max(3.0);
            let h = (hi - lo) / (points - 1.0);

            let opt = lado::solve_opt(&instance).expect("solve");
            let opt_cost = global_cost(&instance, &opt).expect("cost");
            let (_, brute_cost) = brute_force_opt(&instance, lo, hi, h).expect("brute force");
            let allowed = grid_error_bound(&instance, h).expect("grid bound");
            let gap = brute_cost - opt_cost;
            let not_beaten = gap >= -1e-9 * (1.0 + opt_cost.abs());

            let system = GlobalQuadraticSystem::assemble(&instance).expect("system");
            let grad = global_gradient(&instance, &opt).expect("gradient");
            let certificate = norm_sq(&grad).sqrt() / (1.0 + 2.0 * norm_sq(&system.rhs).sqrt());
            (gap, allowed, not_beaten, certificate)
        })
        .collect();
    let elapsed = start.elapsed();
    let within = results.iter().filter(|r| r.0.abs() <= r.1 && r.2).count();
    let worst_cert = results.iter().map(|r| r.3).fold(0.0, f64::max);
    let worst_gap_ratio = results
        .iter()
        .map(|r| if r.1 > 0.0 { r.0 / r.1 } else { r.0 })
        .fold(f64::NEG_INFINITY, f64::max);
    let passed = within == INSTANCES && worst_cert <= 1e-8 && elapsed <= Duration::from_secs(60);
    outcome(
        passed,
        format!(
            "{within}/{INSTANCES} within grid bound (worst gap/bound {worst_gap_ratio:.3}), worst scaled gradient {worst_cert:.2e}, {:.1}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn spatial_splitting_inequality() -> Outcome {
    const CHECKS: usize = 100_000;
    let mut rng = ChaCha8Rng::seed_from_u64(0x1E44A);
    let mut violations = 0;
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..CHECKS {
        let n = rng.random_range(1..=3);
        let spread = 10f64.powf(rng.random_range(-3.0..1.0));
        let weight = rng.random_range(0.01..5.0);
        let lambda = 10f64.powf(rng.random_range(-3.0..3.0));
        let mut vec = |scale: f64| -> Vec<f64> { (0..n).map(|_| scale * rng.random_range(-1.0..1.0)).collect() };
        let offset = vec(2.0);
        let xa_e = vec(5.0);
        let xb_e = vec(5.0);
        let da = vec(spread);
        let db = vec(spread);
        let cost = SpatialCost::new(offset, weight);
        let xa: Vec<f64> = xa_e.iter().zip(&da).map(|(a, d)| a + d).collect();
        let xb: Vec<f64> = xb_e.iter().zip(&db).map(|(b, d)| b + d).collect();
        let lhs = cost.eval(&xa, &xb) - (1.0 + lambda) * cost.eval(&xa_e, &xb_e);
        let rhs = 0.5 * cost.smoothness() * (1.0 + 1.0 / lambda) * (norm_sq(&da) + norm_sq(&db));
        let excess = lhs - rhs;
        worst = worst.max(excess);
        if excess > 1e-9 {
            violations += 1;
        }
    }
    outcome(violations == 0, format!("{CHECKS} checks, violations {violations}, max lhs-rhs {worst:.3e}"))
}

fn sufficient_ball() -> Outcome {
    const TARGET: usize = 10_000;
    let mut checks = 0;
    let mut violations = 0;
    let mut worst = f64::NEG_INFINITY;
    let mut episode = 0u64;
    while checks < TARGET {
        let mut rng = ChaCha8Rng::seed_from_u64(0xBA11 ^ episode);
        episode += 1;
        let agents = [1, 2, 3, 5][rng.random_range(0..4)];
        let horizon = rng.random_range(2..=12);
        let dim = rng.random_range(1..=2);
        let synthetic = random_synthetic(&mut rng, agents, horizon, dim);
        let instance = synthetic_instance(&synthetic, rng.random()).expect("instance");
        let smooth = smoothness_of(&instance);
        let lambda = LAMBDAS[rng.random_range(0..LAMBDAS.len())];
        let config = RobustnessConfig::new(lambda, Lambda0Mode::Optimal).expect("config");
        let noise = Normal::new(0.0, uniform(&mut rng, 0.1, 5.0)).expect("normal");

        let mut state = EpisodeState::new(&instance);
        let mut ledgers: Vec<AgentLedger> = (0..agents).map(AgentLedger::new).collect();
        for t in 1..=horizon {
            let mut chosen = Vec::with_capacity(agents);
            for (v, ledger) in ledgers.iter_mut().enumerate() {
                let obs = state.observe(v, t).expect("observe");
                let x_expert = expert_step(&obs);
                let step = ledger.prepare(&obs, &x_expert, &smooth, &config).expect("prepare");
                let prev_expert = obs.own_expert.last().expect("history");
                let expert_cost = obs.node_now().eval(&x_expert) + obs.temporal_now().eval(&x_expert, prev_expert);
                let r2 = sufficient_ball_radius_sq(expert_cost, &smooth, obs.degree(), lambda, config.lambda0);
                let radius = if r2.is_finite() { r2.sqrt() } else { 1e3 };
                for k in 0..4 {
                    let dir: Vec<f64> = (0..dim).map(|_| noise.sample(&mut rng)).collect();
                    let norm = norm_sq(&dir).sqrt().max(1e-300);
                    let s = if k == 0 { 1.0 } else { rng.random_range(0.0..1.0) };
                    let x: Vec<f64> = x_expert.iter().zip(&dir).map(|(e, d)| e + radius * s * d / norm).collect();
                    let slack = step.slack(&x);
                    worst = worst.max(slack);
                    if slack > 1e-9 {
                        violations += 1;
                    }
                    checks += 1;
                }
                let advice: Vec<f64> = x_expert.iter().map(|e| e + noise.sample(&mut rng)).collect();
                let chosen_step = lado_step(ledger, &obs, &advice, &x_expert, &smooth, &config).expect("lado step");
                chosen.push((chosen_step.action, x_expert, advice));
            }
            for (v, (x, e, a)) in chosen.into_iter().enumerate() {
                state.actual.set(v, t, &x);
                state.expert.set(v, t, &e);
                state.advice.set(v, t, &a);
            }
            state.mark_completed(t);
        }
    }
    outcome(
        violations == 0,
        format!("{checks} checks over {episode} episodes, violations {violations}, max slack {worst:.3e}"),
    )
}

fn random_battery(rng: &mut ChaCha8Rng) -> BatteryParams {
    let units = (0..rng.random_range(1..=4))
        .map(|_| BatteryUnit {
            degradation: uniform(rng, 0.5, 1.0),
            efficiency: uniform(rng, 0.5, 2.0),
            nominal: uniform(rng, 0.0, 1.0),
            initial: uniform(rng, 0.0, 1.0),
            demand_share: uniform(rng, 0.1, 1.0),
        })
        .collect();
    BatteryParams {
        units,
        grid_penalty: uniform(rng, 0.1, 20.0),
        soc_penalty: uniform(rng, 0.0, 5.0),
        edges: None,
    }
}

fn battery_canonicalization() -> Outcome {
    const TRIPLES: usize = 100;
    let mut worst_rel = 0.0f64;
    let mut worst_pin = 0.0f64;
    for i in 0..TRIPLES {
        let mut rng = ChaCha8Rng::seed_from_u64(0xBA77 ^ i as u64);
        let params = random_battery(&mut rng);
        let horizon = rng.random_range(1..=24);
        let normal = Normal::new(0.0, 1.0).expect("normal");
        let mut series = |scale: f64| -> Vec<Vec<f64>> {
            (0..params.units.len())
                .map(|_| (0..horizon).map(|_| scale * normal.sample(&mut rng)).collect())
                .collect()
        };
        let w = series(0.5);
        let xi = series(1.0);
        let direct = direct_cost(&params, &simulate_soc(&params, &w, &xi), &xi).expect("direct cost");
        let instance = canonicalize_disturbances(&params, &w).expect("canonical instance");
        let canonical = global_cost(&instance, &schedule_to_actions(&params, &xi)).expect("canonical cost");
        worst_rel = worst_rel.max((direct - canonical).abs() / direct.abs().max(1e-300));

        let hit = simulate(&instance, &ExpertPolicy, Some(&HitOnlyPolicy), Combiner::FollowAdvice, &SimOptions::default())
            .expect("hitonly run");
        let soc = recover_soc(&params, &w, &hit.actual);
        for (v, u) in params.units.iter().enumerate() {
            for s in &soc[v][1..] {
                worst_pin = worst_pin.max((s - u.nominal).abs());
            }
        }
    }
    outcome(
        worst_rel <= 1e-8 && worst_pin <= 1e-9,
        format!("{TRIPLES} triples, max relative cost difference {worst_rel:.2e}, max HitOnly |SoC - nominal| {worst_pin:.2e}"),
    )
}

fn is_non_increasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] <= w[0] + 1e-12)
}

fn bound_formulas() -> Outcome {
    let mut failures = Vec::new();
    let at_infinity = BoundInputs { avg_expert: 2.5, avg_ml: 4.0, scale: 1.0, omega: f64::INFINITY };
    let exact = bound_blackbox(&at_infinity, 0.2).expect("bound");
    if exact != 3.0 {
        failures.push(format!("bound at omega=inf is {exact:?}"));
    }

    let grid = default_lambda_grid();
    let curves = illustration_curves(&grid).expect("curves");
    let expert = curves.iter().find(|c| c.name == "expert").expect("expert curve");
    let linear = expert.points.iter().all(|(l, b)| (b - 2.5 * (1.0 + l)).abs() <= 1e-12);
    if !linear {
        failures.push("expert term not linear in lambda".into());
    }
    let settings = [
        StylizedBoundSetting { avg_expert: 2.5, avg_ml: 1.0, scale: 1.0, ratio: 0.6 },
        StylizedBoundSetting { avg_expert: 2.5, avg_ml: 4.0, scale: 1.0, ratio: 0.7 },
    ];
    for s in &settings {
        let omegas: Vec<f64> = grid.iter().map(|&l| s.omega(l).expect("omega")).collect();
        let ml_terms: Vec<f64> = omegas.iter().map(|o| (s.avg_ml.sqrt() + (s.scale * o).sqrt()).powi(2)).collect();
        if !is_non_increasing(&omegas) || !is_non_increasing(&ml_terms) {
            failures.push(format!("omega not non-increasing for avg_ml={}", s.avg_ml));
        }
    }

    let mut batches = Vec::new();
    let mk = |scenario: Scenario, ml: PolicyKind, synthetic: SyntheticConfig| RunConfig {
        scenario,
        episodes: 40,
        seed: 5,
        lambdas: LAMBDAS.to_vec(),
        roster: vec![RosterEntry::Expert, RosterEntry::Ml, RosterEntry::Lado],
        ml,
        synthetic,
        ..Default::default()
    };
    batches.push(mk(Scenario::SyntheticRandom, PolicyKind::MlSyntheticPerturbedOpt { sigma: 0.5 }, SyntheticConfig::default()));
    batches.push(mk(Scenario::SyntheticRandom, PolicyKind::MlSyntheticPerturbedOpt { sigma: 5.0 }, SyntheticConfig::default()));
    batches.push(mk(Scenario::SyntheticRandom, PolicyKind::MlAdversarial { lo: -10.0, hi: 10.0 }, SyntheticConfig::default()));
    batches.push(mk(
        Scenario::SyntheticRandom,
        PolicyKind::MlSyntheticPerturbedOpt { sigma: 1.0 },
        SyntheticConfig { agents: 5, dim: 2, edges: Some(vec![(0, 1), (1, 2), (2, 3), (3, 4)]), offset_std: 0.5, ..Default::default() },
    ));
    batches.push(mk(Scenario::Battery, PolicyKind::MlSyntheticPerturbedOpt { sigma: 0.5 }, SyntheticConfig::default()));
    let mut held = 0;
    let mut total = 0;
    let mut tightest = f64::INFINITY;
    for config in &batches {
        let batch = run_batch(config).expect("batch");
        let bounds = batch_bounds(&batch).expect("bounds");
        let omegas: Vec<f64> = bounds.iter().map(|b| b.omega).collect();
        if !is_non_increasing(&omegas) {
            failures.push(format!("empirical omega increases in lambda on {:?}", config.ml));
        }
        for b in &bounds {
            total += 1;
            if b.holds() {
                held += 1;
            }
            tightest = tightest.min(b.bound - b.avg_lado);
        }
    }
    if held != total {
        failures.push(format!("measured AVG above bound in {} of {total} cases", total - held));
    }
    let detail = format!(
        "bound(2.5, 0.2, inf) = {exact:?}, curve monotonicity checked on {} lambdas, AVG <= bound in {held}/{total} (min margin {tightest:.3}){}",
        grid.len(),
        if failures.is_empty() { String::new() } else { format!("; {}", failures.join("; ")) }
    );
    outcome(failures.is_empty(), detail)
}

fn get<'a>(ms: &'a [PolicyMetrics], name: &str) -> &'a PolicyMetrics {
    ms.iter().find(|m| m.policy == name).unwrap_or_else(|| panic!("policy {name} missing"))
}

fn qualitative_ordering() -> Outcome {
    const SEEDS: u64 = 10;
    let mut avg_ok = 0;
    let mut cr_expert_ok = 0;
    let mut cr_rest_ok = 0;
    let mut monotone_pairs = 0;
    let mut pairs = 0;
    let mut sample = String::new();
    for seed in 0..SEEDS {
        let config = RunConfig {
            scenario: Scenario::Battery,
            episodes: 100,
            seed,
            lambdas: LAMBDAS.to_vec(),
            ml: PolicyKind::MlSyntheticPerturbedOpt { sigma: 0.5 },
            ..Default::default()
        };
        let ms = metrics(&run_batch(&config).expect("battery batch")).expect("metrics");
        let avg = |n: &str| get(&ms, n).avg;
        let cr = |n: &str| get(&ms, n).cr.expect("cr");
        if avg("OPT") <= avg("ML") && avg("ML") <= avg("Expert") {
            avg_ok += 1;
        }
        if cr("Expert") <= cr("LADO(0.2)") {
            cr_expert_ok += 1;
        }
        if cr("LADO(0.2)") <= cr("LADO(2.0)") && cr("LADO(2.0)") <= cr("ML") {
            cr_rest_ok += 1;
        }
        let lado: Vec<f64> = ["LADO(0.2)", "LADO(0.5)", "LADO(1.0)", "LADO(2.0)"].iter().map(|n| avg(n)).collect();
        for w in lado.windows(2) {
            pairs += 1;
            if w[1] <= w[0] {
                monotone_pairs += 1;
            }
        }
        if seed == 0 {
            sample = format!(
                "seed 0: AVG OPT {:.1} ML {:.1} Expert {:.1}; CR Expert {:.3} LADO(0.2) {:.3} LADO(2) {:.3} ML {:.3}",
                avg("OPT"), avg("ML"), avg("Expert"), cr("Expert"), cr("LADO(0.2)"), cr("LADO(2.0)"), cr("ML")
            );
        }
    }
    let monotone_fraction = monotone_pairs as f64 / pairs as f64;
    let passed = avg_ok == SEEDS
        && cr_expert_ok == SEEDS
        && cr_rest_ok == SEEDS
        && monotone_fraction >= 0.99;
    outcome(
        passed,
        format!(
            "{SEEDS} seeds: AVG order {avg_ok}/{SEEDS}, CR(Expert)<=CR(LADO(0.2)) {cr_expert_ok}/{SEEDS}, CR(LADO(0.2))<=CR(LADO(2))<=CR(ML) {cr_rest_ok}/{SEEDS}, AVG(LADO) non-increasing pairs {monotone_pairs}/{pairs}; {sample}"
        ),
    )
}

fn window_count() -> Outcome {
    let (demand, weather) = synthetic_traces(1440, 2024);
    let data = build_net_demand(&demand, &weather, &RenewableConstants::default(), WINDOW_LENGTH, 1440)
        .expect("dataset");
    let default_split = {
        let b = RunConfig::default().battery;
        build_net_demand(&demand, &weather, &b.renewables, b.window, b.train_hours).expect("dataset")
    };
    let passed = data.len() == 1416 && default_split.len() == 1416 && data.train.iter().all(|w| w.len() == 25);
    outcome(
        passed,
        format!(
            "1440 samples -> {} windows (default split {} train + {} test)",
            data.len(),
            default_split.train.len(),
            default_split.test.len()
        ),
    )
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .expect("read dir")
        .map(|e| {
            let e = e.expect("entry");
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).expect("read"))
        })
        .collect();
    files.sort();
    files
}

fn determinism() -> Outcome {
    let configs = [
        RunConfig {
            episodes: 60,
            seed: 17,
            ml: PolicyKind::MlSyntheticPerturbedOpt { sigma: 0.5 },
            synthetic: SyntheticConfig { agents: 4, dim: 2, offset_std: 0.3, ..Default::default() },
            ..Default::default()
        },
        RunConfig { scenario: Scenario::Battery, episodes: 30, seed: 3, ..Default::default() },
    ];
    let curves = illustration_curves(&default_lambda_grid()).expect("curves");
    let mut identical = 0;
    let mut files = 0;
    for config in &configs {
        let dirs: Vec<tempfile::TempDir> = (0..2).map(|_| tempfile::tempdir().expect("tempdir")).collect();
        let serial = rayon::ThreadPoolBuilder::new().num_threads(1).build().expect("pool");
        let first = serial.install(|| run_batch(config)).expect("batch");
        let second = run_batch(config).expect("batch");
        emit_tables(&first, &curves, dirs[0].path()).expect("tables");
        emit_tables(&second, &curves, dirs[1].path()).expect("tables");
        let (a, b) = (dir_bytes(dirs[0].path()), dir_bytes(dirs[1].path()));
        files += a.len();
        if a == b {
            identical += 1;
        }
    }
    outcome(
        identical == configs.len(),
        format!("{identical}/{} configurations byte-identical across runs and thread counts ({files} files)", configs.len()),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("robustness", robustness),
        ("projection-oracle", projection_oracle),
        ("opt-correctness", opt_correctness),
        ("spatial-splitting-inequality", spatial_splitting_inequality),
        ("sufficient-ball", sufficient_ball),
        ("battery-canonicalization", battery_canonicalization),
        ("bound-formulas", bound_formulas),
        ("qualitative-ordering", qualitative_ordering),
        ("window-count", window_count),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let result = check();
        if !result.passed {
            failed += 1;
        }
        println!("{} {name}: {}", if result.passed { "PASS" } else { "FAIL" }, result.detail);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
