//! Acceptance suite. Prints one PASS/FAIL line per criterion to stderr
//! (uncaptured) and fails if any criterion fails.

mod common;

use common::{random_instance, BUDGETS};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::time::Instant;
use vesonet::audit;
use vesonet::content_embed::*;
use vesonet::provider_rl::*;
use vesonet::road_net::{shortest_path, GridSpec};
use vesonet::sim::*;
use vesonet::social_path::{
    alternative_social_path, brute_force_plan, brute_force_social_path, DetourBudget, SocialPlanner,
};
use vesonet::CostCounter;

const REPLICATES: u32 = 5;

struct Verdicts(Vec<(u32, bool)>);

impl Verdicts {
    fn record(&mut self, n: u32, title: &str, pass: bool, detail: String) {
        let line = format!(
            "criterion {n:>2} {}: {title} ({detail})\n",
            if pass { "PASS" } else { "FAIL" }
        );
        let _ = std::io::stderr().write_all(line.as_bytes());
        self.0.push((n, pass));
    }
}

fn grid_scenario(size: u32, vehicles: u32, rsus: usize) -> Scenario {
    let mut sc = Scenario {
        network: NetworkSource::Grid(GridSpec {
            rows: size,
            cols: size,
            ..Default::default()
        }),
        ..Default::default()
    };
    let net = sc.build_network().unwrap();
    sc.rsus = Scenario::spread_rsus(&net, rsus);
    sc.vehicles.consumers = (vehicles as f64 * 0.7).round() as u32;
    sc.vehicles.providers = vehicles - sc.vehicles.consumers;
    sc
}

fn sweep(sc: &Scenario, axis: SweepAxis, values: &[f64]) -> (Vec<SweepRow>, Vec<SweepRun>) {
    let spec = SweepSpec {
        axis,
        values: values.to_vec(),
        policies: vec![Policy::Vesonet, Policy::BaselineNoReroute],
        replicates: REPLICATES,
        jobs: 0,
        keep_events: true,
    };
    run_sweep(sc, &spec).unwrap()
}

fn mean(rows: &[SweepRow], metric: &str, value: f64, policy: Policy) -> f64 {
    rows.iter()
        .find(|r| r.metric == metric && r.value == value && r.policy == policy)
        .and_then(|r| r.mean)
        .unwrap_or(f64::NAN)
}

fn log_text(events: &[Event]) -> String {
    let mut buf = Vec::new();
    write_events(events, &mut buf).unwrap();
    String::from_utf8(buf).unwrap()
}

/// Trip rows read straight from the CSV text: (reference ms, realized ms)
/// pairs for completed trips, plus the budget from the run header.
fn trip_pairs(text: &str) -> (u64, Vec<(u64, u64)>) {
    let mut budget = 0;
    let mut open = BTreeMap::new();
    let mut pairs = Vec::new();
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        match f[1] {
            "run_start" => budget = f[2].parse().unwrap(),
            "trip_start" => {
                open.insert(f[2].to_string(), f[7].parse::<u64>().unwrap());
            }
            "trip_end" => {
                if let Some(r) = open.remove(f[2]) {
                    pairs.push((r, f[7].parse().unwrap()));
                }
            }
            _ => {}
        }
    }
    (budget, pairs)
}

#[derive(Default)]
struct RunLedger {
    runs: usize,
    vesonet_trips: usize,
    detour_violations: usize,
    audit_mismatches: Vec<String>,
}

impl RunLedger {
    fn check(&mut self, tag: &str, run: &SweepRun) {
        let text = log_text(run.events.as_deref().unwrap());
        self.runs += 1;
        if run.policy == Policy::Vesonet {
            let (budget, pairs) = trip_pairs(&text);
            self.vesonet_trips += pairs.len();
            self.detour_violations += pairs.iter().filter(|(r, t)| *t > r + budget + 1).count();
        }
        let rows = match audit::parse_log(&text) {
            Ok(rows) => rows,
            Err(bad) => {
                self.audit_mismatches.push(format!("{tag}: malformed {:?}", bad.first()));
                return;
            }
        };
        let report = audit::audit_rows(&rows);
        let runner = audit::parse_metrics_csv(&run.metrics.to_csv()).unwrap();
        let mut problems = audit::compare(&report.metrics, &runner);
        problems.extend(report.violations);
        if !problems.is_empty() {
            self.audit_mismatches.push(format!(
                "{tag} {} {} seed {}: {}",
                run.value,
                run.policy.name(),
                run.seed,
                problems[0]
            ));
        }
    }
}

fn oracle_equivalence(v: &mut Verdicts) -> Vec<f64> {
    let t = Instant::now();
    let (mut total, mut agree) = (0, 0);
    let mut ratios = Vec::new();
    for seed in 0..200u64 {
        let (net, s, d) = random_instance(1000 + seed);
        let sh = net.travel_time(&shortest_path(&net, s, d).unwrap()).unwrap();
        for eps in BUDGETS {
            total += 1;
            let budget = DetourBudget::new(eps).unwrap();
            let fast = alternative_social_path(&net, s, d, budget);
            let slow = brute_force_social_path(&net, s, d, budget);
            let ok = match (&fast, &slow) {
                (Ok(a), Ok(b)) => {
                    let ta = net.travel_time(a).unwrap();
                    let tb = net.travel_time(b).unwrap();
                    net.providers_on_path(a) == net.providers_on_path(b) && ta <= sh + eps && tb <= sh + eps
                }
                (Err(_), Err(_)) => true,
                _ => false,
            };
            agree += ok as usize;
            let pruned = SocialPlanner::new(&net).alternative(s, d, budget).unwrap();
            let exhaustive = brute_force_plan(&net, s, d, budget).unwrap();
            ratios.push(pruned.expansions as f64 / exhaustive.expansions as f64);
        }
    }
    let secs = t.elapsed().as_secs_f64();
    v.record(
        1,
        "pruned planner matches exhaustive oracle",
        agree == total && secs < 60.0,
        format!("{agree}/{total} instances agree, {secs:.1} s"),
    );
    ratios
}

fn pruning_efficiency(v: &mut Verdicts, mut ratios: Vec<f64>) {
    ratios.sort_by(f64::total_cmp);
    let median = ratios[ratios.len() / 2];
    v.record(
        3,
        "pruned search expands at most half of exhaustive search",
        median <= 0.5,
        format!("median expansion ratio {median:.4} over {} instances", ratios.len()),
    );
}

fn random_model(rng: &mut ChaCha8Rng, n: u32, d: usize) -> EmbeddingModel {
    let ids = (0..n).map(ContentId).collect();
    let vecs = (0..n).map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    EmbeddingModel::from_vectors(ids, vecs).unwrap()
}

fn embedding_correctness(v: &mut Verdicts) {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let mut softmax_err = 0.0f64;
    for _ in 0..50 {
        let (n, d) = (rng.gen_range(2..60), rng.gen_range(1..10));
        let m = random_model(&mut rng, n, d);
        for &c in m.ids() {
            let s: f64 = softmax_row(&m, c).unwrap().iter().sum();
            softmax_err = softmax_err.max((s - 1.0).abs());
        }
    }
    let mut grad_err = 0.0f64;
    let h = 1e-5;
    for _ in 0..100 {
        let (n, d) = (rng.gen_range(2..10), rng.gen_range(1..6));
        let mut m = random_model(&mut rng, n, d);
        let c = ContentId(rng.gen_range(0..m.len() as u32));
        let n = ContentId(rng.gen_range(0..m.len() as u32));
        let g = pair_gradient(&m, c, n).unwrap();
        let (mut diff, mut norm) = (0.0f64, 0.0f64);
        for k in 0..g.len() {
            let x = m.parameters()[k];
            m.parameters_mut()[k] = x + h;
            let up = pair_loss(&m, c, n).unwrap();
            m.parameters_mut()[k] = x - h;
            let down = pair_loss(&m, c, n).unwrap();
            m.parameters_mut()[k] = x;
            let fd = (up - down) / (2.0 * h);
            diff = diff.max((fd - g[k]).abs());
            norm = norm.max(fd.abs().max(g[k].abs()));
        }
        grad_err = grad_err.max(diff / norm.max(1e-8));
    }
    let log = generate_log(&LogSpec::default()).unwrap();
    let graph = build_content_graph(&log.records, 1).unwrap();
    let params = EmbeddingParams::default();
    let t = Instant::now();
    let model = train_embeddings(&graph, &params).unwrap();
    let secs = t.elapsed().as_secs_f64();
    let ids = model.ids();
    let (mut intra, mut ni, mut inter, mut nx) = (0.0, 0usize, 0.0, 0usize);
    for (i, &a) in ids.iter().enumerate() {
        for &b in &ids[i + 1..] {
            let s = cosine_similarity(model.vector(a).unwrap(), model.vector(b).unwrap()).unwrap();
            if log.item_cluster[a.0 as usize] == log.item_cluster[b.0 as usize] {
                intra += s;
                ni += 1;
            } else {
                inter += s;
                nx += 1;
            }
        }
    }
    let gap = intra / ni as f64 - inter / nx as f64;
    let pass = softmax_err <= 1e-9
        && grad_err <= 1e-4
        && gap >= 0.2
        && params.epochs <= 5
        && graph.node_count() == 200
        && params.dimension == 32
        && secs < 30.0;
    v.record(
        4,
        "embedding normalization, gradient and cluster separation",
        pass,
        format!(
            "softmax err {softmax_err:.1e}, gradient rel err {grad_err:.1e}, cosine gap {gap:.3} after {} epochs, {} items d={} in {secs:.1} s",
            params.epochs,
            graph.node_count(),
            params.dimension
        ),
    );
}

fn recommendation_properties(v: &mut Verdicts) {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut monotone = 0;
    for _ in 0..50 {
        let d = rng.gen_range(2..6);
        let n = rng.gen_range(5..30);
        let model = random_model(&mut rng, n, d);
        let n = model.len() as u32;
        let nearby: Vec<NearbyCatalog> = (0..rng.gen_range(1..4))
            .map(|p| NearbyCatalog {
                provider: p,
                items: (0..rng.gen_range(1..10)).map(|_| ContentId(rng.gen_range(0..n))).collect(),
            })
            .collect();
        let consumers: Vec<Vehicle2Vec> = (0..rng.gen_range(1..5))
            .map(|i| {
                let h: Vec<ContentId> = (0..rng.gen_range(1..6)).map(|_| ContentId(rng.gen_range(0..n))).collect();
                Vehicle2Vec::from_history(&model, i, &h)
            })
            .collect();
        let cached: BTreeSet<ContentId> = (0..rng.gen_range(0..3)).map(|_| ContentId(rng.gen_range(0..n))).collect();
        let pick = |alpha: f64| -> BTreeSet<ContentId> {
            let mut cost = CostCounter::default();
            intersection_recommendation(
                &model,
                &cached,
                &nearby,
                &consumers,
                SimilarityThreshold::new(alpha).unwrap(),
                &mut cost,
            )
            .into_iter()
            .map(|r| r.content)
            .collect()
        };
        let alphas = [0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0];
        let sets: Vec<_> = alphas.iter().map(|&a| pick(a)).collect();
        if sets.windows(2).all(|w| w[1].is_subset(&w[0])) {
            monotone += 1;
        }
    }
    // consumer row (1, 0) against item (3, 4) has cosine exactly 3/5
    let model =
        EmbeddingModel::from_vectors(vec![ContentId(0), ContentId(1)], vec![vec![1.0, 0.0], vec![3.0, 4.0]]).unwrap();
    let consumer = Vehicle2Vec::from_history(&model, 0, &[ContentId(0)]);
    let nearby = [NearbyCatalog {
        provider: 1,
        items: vec![ContentId(1)],
    }];
    let at = |alpha: f64| {
        let mut cost = CostCounter::default();
        intersection_recommendation(
            &model,
            &BTreeSet::new(),
            &nearby,
            std::slice::from_ref(&consumer),
            SimilarityThreshold::new(alpha).unwrap(),
            &mut cost,
        )
        .len()
    };
    let below = f64::from_bits(0.6f64.to_bits() - 1);
    let boundary = at(0.6) == 0 && at(below) == 1;
    v.record(
        5,
        "recommendation monotone in threshold, strict boundary",
        monotone == 50 && boundary,
        format!("{monotone}/50 configurations nested, equal-score item excluded: {boundary}"),
    );
}

fn rl_properties(v: &mut Verdicts) {
    let cases = [
        (0.0, 1.0, 0.0, 0.5, 0.9, 0.5),
        (2.0, -1.0, 4.0, 0.25, 0.5, 1.75),
        (1.5, 3.0, 2.0, 0.1, 0.95, 1.84),
        (-1.0, 0.5, -2.0, 1.0, 0.0, 0.5),
    ];
    let backup_err = cases
        .iter()
        .map(|&(q, r, m, b, g, want)| (q_backup(q, r, m, b, g) - want).abs())
        .fold(0.0, f64::max);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut grad_err = 0.0f64;
    let k = 3;
    let state = |rng: &mut ChaCha8Rng| {
        let slots: Vec<(f64, bool)> = (0..k).map(|i| (rng.gen_range(-1.0..1.0), i == 0 || rng.gen_bool(0.7))).collect();
        RlState::new(&slots, k, rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)).unwrap()
    };
    for _ in 0..10 {
        let mut online = Mlp::new(&[k + 2, 16, k], true, &mut rng);
        let target = Mlp::new(&[k + 2, 16, k], true, &mut rng);
        let batch: Vec<Transition> = (0..8)
            .map(|_| Transition {
                s_o: state(&mut rng),
                a_o: 0,
                r: rng.gen_range(-2.0..2.0),
                s_n: state(&mut rng),
                terminal: rng.gen_bool(0.3),
            })
            .collect();
        let refs: Vec<&Transition> = batch.iter().collect();
        let g = td_gradient(&online, &target, &refs, 0.9);
        let h = 1e-6;
        let (mut diff, mut norm) = (0.0f64, 0.0f64);
        for i in 0..g.len() {
            let x = online.params()[i];
            online.params_mut()[i] = x + h;
            let up = td_loss(&online, &target, &refs, 0.9);
            online.params_mut()[i] = x - h;
            let down = td_loss(&online, &target, &refs, 0.9);
            online.params_mut()[i] = x;
            let fd = (up - down) / (2.0 * h);
            diff = diff.max((fd - g[i]).abs());
            norm = norm.max(fd.abs().max(g[i].abs()));
        }
        grad_err = grad_err.max(diff / norm);
    }
    let config = DqnConfig {
        epsilon_decay_steps: 1000,
        buffer_capacity: 2000,
        target_sync: 100,
        ..Default::default()
    };
    let t = Instant::now();
    let steps = 2000;
    let acc: f64 = (0..5)
        .map(|seed| run_two_exit_toy(config.clone(), steps, 200, seed).unwrap().greedy_accuracy)
        .sum::<f64>()
        / 5.0;
    let secs = t.elapsed().as_secs_f64();
    v.record(
        6,
        "Q backup, TD gradient and two-exit convergence",
        backup_err <= 1e-12 && grad_err <= 1e-4 && acc >= 0.95 && secs < 60.0,
        format!(
            "backup err {backup_err:.1e}, gradient rel err {grad_err:.1e}, greedy accuracy {acc:.3} after {steps} steps, {secs:.1} s"
        ),
    );
}

#[test]
fn acceptance_criteria() {
    let mut v = Verdicts(Vec::new());
    let ratios = oracle_equivalence(&mut v);
    pruning_efficiency(&mut v, ratios);
    embedding_correctness(&mut v);
    recommendation_properties(&mut v);
    rl_properties(&mut v);

    let mut ledger = RunLedger::default();
    let mut travel = Vec::new();
    let vn = Policy::Vesonet;
    let bl = Policy::BaselineNoReroute;

    let density_base = grid_scenario(4, 100, 2);
    let t = Instant::now();
    let densities = [10.0, 50.0, 100.0, 200.0];
    let (rows, runs) = sweep(&density_base, SweepAxis::Density, &densities);
    let secs = t.elapsed().as_secs_f64();
    let delay: Vec<f64> = densities.iter().map(|&d| mean(&rows, "mean_delay_s", d, vn)).collect();
    let base_200 = mean(&rows, "mean_delay_s", 200.0, bl);
    let monotone = delay[1..].windows(2).all(|w| w[1] <= w[0]);
    let gain = 1.0 - delay[3] / base_200;
    v.record(
        7,
        "delivery delay falls with density and beats no-reroute baseline",
        monotone && gain >= 0.10 && secs < 300.0,
        format!(
            "vesonet delay {:.3}/{:.3}/{:.3}/{:.3} s at 10/50/100/200 vehicles, baseline {base_200:.3} s at 200, {:.1}% lower, {secs:.1} s",
            delay[0], delay[1], delay[2], delay[3], gain * 100.0
        ),
    );
    for r in &runs {
        ledger.check("density", r);
    }
    for &d in &densities {
        travel.push((format!("density {d}"), mean(&rows, "mean_travel_time_s", d, vn), mean(&rows, "mean_travel_time_s", d, bl)));
    }
    let reference_run = runs
        .iter()
        .find(|r| r.value == 100.0 && r.policy == vn && r.seed == density_base.rng_seed)
        .map(|r| log_text(r.events.as_deref().unwrap()))
        .unwrap();

    let rsu_base = grid_scenario(10, 40, 0);
    let counts = [8.0, 4.0, 2.0, 1.0, 0.0];
    let (rows, runs) = sweep(&rsu_base, SweepAxis::RsuCount, &counts);
    let rate = |c: f64, p: Policy| mean(&rows, "delivery_rate", c, p);
    let drop_v = rate(8.0, vn) - rate(1.0, vn);
    let drop_b = rate(8.0, bl) - rate(1.0, bl);
    let (zero_v, zero_b) = (rate(0.0, vn), rate(0.0, bl));
    v.record(
        8,
        "delivery rate robust to fewer RSUs",
        drop_v < drop_b && zero_v > 0.0 && zero_b == 0.0,
        format!(
            "8->1 RSU drop vesonet {drop_v:.4} vs baseline {drop_b:.4}; at 0 RSUs vesonet {zero_v:.3}, baseline {zero_b:.3}"
        ),
    );
    for r in &runs {
        ledger.check("rsu_count", r);
    }
    for &c in &counts {
        travel.push((format!("rsu {c}"), mean(&rows, "mean_travel_time_s", c, vn), mean(&rows, "mean_travel_time_s", c, bl)));
    }

    let accident_base = grid_scenario(4, 100, 2);
    let accidents = [0.0, 2.0, 4.0];
    let (rows, runs) = sweep(&accident_base, SweepAxis::Accidents, &accidents);
    for r in &runs {
        ledger.check("accidents", r);
    }
    let eps = density_base.epsilon_s;
    let mut within = true;
    let mut worst = f64::NEG_INFINITY;
    for (_, tv, tb) in &travel {
        within &= *tv >= *tb && *tv <= *tb + eps;
        worst = worst.max(tv - tb);
    }
    let t0 = (mean(&rows, "mean_travel_time_s", 0.0, vn), mean(&rows, "mean_travel_time_s", 0.0, bl));
    within &= t0.0 >= t0.1 && t0.0 <= t0.1 + eps;
    worst = worst.max(t0.0 - t0.1);
    let mut avoids = true;
    let mut detail = Vec::new();
    for &a in &accidents[1..] {
        let (tv, tb) = (mean(&rows, "mean_travel_time_s", a, vn), mean(&rows, "mean_travel_time_s", a, bl));
        avoids &= tv <= tb;
        detail.push(format!("{a} accidents {tv:.2} vs {tb:.2} s"));
    }
    v.record(
        9,
        "rerouting costs at most the detour budget and pays off around accidents",
        within && avoids,
        format!(
            "{} accident-free points within [0, {eps}] s of baseline (largest gap {worst:.2} s); {}",
            travel.len() + 1,
            detail.join(", ")
        ),
    );

    v.record(
        2,
        "vesonet trips stay within the detour budget",
        ledger.detour_violations == 0 && ledger.vesonet_trips > 0,
        format!(
            "{} violations over {} vesonet trips in {} runs",
            ledger.detour_violations,
            ledger.vesonet_trips,
            ledger.runs / 2
        ),
    );

    let mut sc = density_base.clone();
    sc.accidents = sc.random_accidents(&sc.build_network().unwrap(), 2);
    let mut identical = true;
    for policy in [vn, bl] {
        sc.policy = policy;
        let a = log_text(&run_scenario(&sc).unwrap().events);
        let b = log_text(&run_scenario(&sc).unwrap().events);
        identical &= a == b;
    }
    let standalone = log_text(&run_scenario(&density_base).unwrap().events);
    identical &= standalone == reference_run;
    v.record(
        10,
        "deterministic logs and audit agreement",
        identical && ledger.audit_mismatches.is_empty(),
        format!(
            "re-runs byte-identical: {identical}; audit disagreed on {} of {} runs{}",
            ledger.audit_mismatches.len(),
            ledger.runs,
            ledger.audit_mismatches.first().map(|m| format!(", first: {m}")).unwrap_or_default()
        ),
    );

    let failed: Vec<u32> = v.0.iter().filter(|(_, p)| !p).map(|(n, _)| *n).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
