//! Acceptance checks. Runs as a plain binary so every criterion prints one
//! PASS/FAIL line; exits non-zero if any fails.

mod common;

use std::collections::BTreeMap;
use std::time::Instant;

use common::{close, contribution_oracle, reputation_oracle, selection_oracle};
use fedauct::auction::{select_winners, AuctionConfig, Bid, Mechanism};
use fedauct::contribution::{compute_round_contribution, compute_sample_weights, PredictionMatrix};
use fedauct::flsim::{generate_population, LogisticModel, SyntheticTaskSpec, WorkerDataProfile};
use fedauct::harness::config::PropertySuiteConfig;
use fedauct::harness::multitask::{self, MultiTaskSummary};
use fedauct::harness::{self, properties, ExperimentConfig, ExperimentKind};
use fedauct::reputation::{
    g_factor, gompertz_trust, h_factor, update_accumulated, ReputationParams, ReputationRecord,
};
use fedauct::{seed, WorkerId};
use rand::Rng;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn economic_properties() -> Verdict {
    let start = Instant::now();
    let cfg = ExperimentConfig {
        properties: PropertySuiteConfig {
            measure_complexity: false,
            ..Default::default()
        },
        ..ExperimentConfig::for_kind(ExperimentKind::PropertySuite)
    };
    let r = properties::property_report(&cfg).expect("property suite");
    let secs = start.elapsed().as_secs_f64();
    let p = &cfg.properties;
    let pass = r.budget.violations == 0
        && r.individual_rationality.violations == 0
        && r.truthfulness.violations == 0
        && p.budget_instances >= 10_000
        && p.ir_instances >= 10_000
        && p.truthfulness_instances >= 2_000
        && p.deviations.len() >= 6
        && secs < 60.0;
    verdict(
        pass,
        format!(
            "budget {}/{} IR {}/{} truthfulness {}/{} violations (tol {:e}); dishonest gains {}/{} (not covered); {secs:.1}s",
            r.budget.violations,
            r.budget.trials,
            r.individual_rationality.violations,
            r.individual_rationality.trials,
            r.truthfulness.violations,
            r.truthfulness.trials,
            p.tolerance,
            r.dishonest_gains.violations,
            r.dishonest_gains.trials,
        ),
    )
}

fn hand_trace() -> Verdict {
    let bids: Vec<Bid<f64>> = vec![
        Bid::truthful(WorkerId(0), 2.0),
        Bid::truthful(WorkerId(1), 4.0),
        Bid::truthful(WorkerId(2), 4.0),
    ];
    let reps = BTreeMap::from([(WorkerId(0), 1.0), (WorkerId(1), 0.8), (WorkerId(2), 0.5)]);
    let o = select_winners(&bids, &reps, &AuctionConfig::new(10.0).unwrap()).unwrap();
    let rho = o.rho_star.unwrap();
    let (a, b) = (o.upper_bounds[&WorkerId(0)], o.upper_bounds[&WorkerId(1)]);
    let pass = o.winners == vec![WorkerId(0), WorkerId(1)]
        && (rho - 50.0 / 9.0).abs() <= 1e-12
        && (a - 50.0 / 9.0).abs() <= 1e-12
        && (b - 40.0 / 9.0).abs() <= 1e-12;
    verdict(
        pass,
        format!("S = {:?}, rho* = {rho}, p_up = {{{a}, {b}}}", o.winners),
    )
}

fn spot_values() -> Verdict {
    let p = ReputationParams::default();
    let t0 = gompertz_trust(0.0, &p);
    let grid = 10_000;
    let mut mono = true;
    for i in 0..grid {
        let (x, y) = (i as f64 / grid as f64, (i + 1) as f64 / grid as f64);
        mono &= h_factor(y) < h_factor(x) && y * h_factor(y) > x * h_factor(x);
    }
    let pass = (t0 - (-1f64).exp()).abs() <= 1e-12
        && g_factor(0, &p) == 1.0
        && h_factor(0.0) == 1.0
        && mono;
    verdict(
        pass,
        format!(
            "trust(0) = {t0}, g(0) = {}, h(0) = {}, monotone on grid: {mono}",
            g_factor(0, &p),
            h_factor(0.0)
        ),
    )
}

fn asymmetry() -> Verdict {
    let p = ReputationParams::default();
    let mut worst = f64::INFINITY;
    for prev in [0.2, 0.5, 0.8] {
        for d in [0.05, 0.1] {
            let rec = ReputationRecord::new(prev);
            let up = update_accumulated(&rec, 0, prev + d, &p).accumulated - prev;
            let down = prev - update_accumulated(&rec, 0, prev - d, &p).accumulated;
            worst = worst.min(down - up);
        }
    }
    verdict(
        worst > 0.0,
        format!("smallest (bad move - good move) = {worst:.6}"),
    )
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.3}")).unwrap_or_else(|| "-".into())
}

fn strictly_increasing(v: &[Option<f64>]) -> bool {
    v.iter().all(Option::is_some) && v.windows(2).all(|w| w[0].unwrap() < w[1].unwrap())
}

fn table2(ours: &MultiTaskSummary, secs: f64) -> Verdict {
    let c: Vec<Option<f64>> = ours.groups.iter().map(|g| g.mean_contribution).collect();
    let r: Vec<Option<f64>> = ours
        .groups
        .iter()
        .map(|g| Some(g.mean_reputation))
        .collect();
    let p: Vec<Option<f64>> = ours.groups.iter().map(|g| g.mean_payment).collect();
    let acc: Vec<String> = ours.groups.iter().map(|g| g.accuracy.to_string()).collect();
    let pass = strictly_increasing(&c)
        && strictly_increasing(&r)
        && strictly_increasing(&p)
        && secs < 600.0;
    let show = |v: &[Option<f64>]| {
        v.iter()
            .map(|x| fmt_opt(*x))
            .collect::<Vec<_>>()
            .join(" < ")
    };
    let sci = |v: &[Option<f64>]| {
        v.iter()
            .map(|x| x.map(|y| format!("{y:.3e}")).unwrap_or_else(|| "-".into()))
            .collect::<Vec<_>>()
            .join(" < ")
    };
    verdict(
        pass,
        format!(
            "accuracy {}: contribution {} | reputation {} | payment {} ({secs:.0}s)",
            acc.join("/"),
            show(&c),
            sci(&r),
            sci(&p)
        ),
    )
}

fn table3(s: &BTreeMap<Mechanism, MultiTaskSummary>) -> Verdict {
    let prop = |m| s[&m].top_accuracy_proportion;
    let (o, v, b) = (
        prop(Mechanism::Ours),
        prop(Mechanism::VanillaFl),
        prop(Mechanism::BidGreedy),
    );
    verdict(
        o >= 0.95 && o > v && o > b,
        format!("ours {o:.4}, vanilla_fl {v:.4}, bid_greedy {b:.4}"),
    )
}

fn table4(s: &BTreeMap<Mechanism, MultiTaskSummary>) -> Verdict {
    let loss = |m| s[&m].mean_final_loss;
    let (o, r, v, b) = (
        loss(Mechanism::Ours),
        loss(Mechanism::ReputationGreedy),
        loss(Mechanism::VanillaFl),
        loss(Mechanism::BidGreedy),
    );
    verdict(
        o <= r + 0.01 && o < v && o < b,
        format!("ours {o:.4}, reputation_greedy {r:.4}, vanilla_fl {v:.4}, bid_greedy {b:.4}"),
    )
}

fn sweeps() -> Verdict {
    let mechs = [
        Mechanism::Ours,
        Mechanism::ProportionalShare,
        Mechanism::VanillaFl,
        Mechanism::BidGreedy,
        Mechanism::ApproxOptimal,
    ];
    let mut points = 0;
    let mut good = 0;
    let mut opt_ok = 0;
    for kind in [
        ExperimentKind::AuctionSweepBudget,
        ExperimentKind::AuctionSweepWorkers,
    ] {
        let cfg = ExperimentConfig {
            mechanisms: mechs.to_vec(),
            ..ExperimentConfig::for_kind(kind)
        };
        assert!(cfg.repetitions >= 30);
        let t = harness::run_auction_sweep(&cfg).expect("sweep");
        let xs: Vec<f64> = match kind {
            ExperimentKind::AuctionSweepBudget => cfg.budgets.clone(),
            _ => cfg.worker_counts.iter().map(|&n| n as f64).collect(),
        };
        for x in xs {
            let u = |m: Mechanism| t.value(m.name(), "unit_utility", Some(x)).expect("row");
            let ours = u(Mechanism::Ours);
            points += 1;
            opt_ok += usize::from(u(Mechanism::ApproxOptimal) >= ours);
            good += usize::from(
                [
                    Mechanism::ProportionalShare,
                    Mechanism::VanillaFl,
                    Mechanism::BidGreedy,
                ]
                .iter()
                .all(|m| ours >= u(*m)),
            );
        }
    }
    let pass = opt_ok as f64 >= 0.9 * points as f64 && good as f64 >= 0.9 * points as f64;
    verdict(
        pass,
        format!(
            "{points} grid points: optimum >= ours at {opt_ok}, ours >= every baseline at {good}"
        ),
    )
}

fn oracles() -> Verdict {
    let n_inst = 1000;
    let mut rng = seed::rng(2024, &[]);
    let mut bad = [0usize; 3];
    let params = ReputationParams::default();
    for _ in 0..n_inst {
        let n = rng.random_range(1..8);
        let m = rng.random_range(1..12);
        let p: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..m).map(|_| rng.random_range(0.0..=1.0)).collect())
            .collect();
        let pm =
            PredictionMatrix::<f64>::from_rows((0..n as u32).map(WorkerId).collect(), &p).unwrap();
        let sw = compute_sample_weights(&pm);
        let rc = compute_round_contribution(&pm, &sw, 0).unwrap();
        let (w, raw, std) = contribution_oracle(&p);
        let ok = sw.weights.iter().zip(&w).all(|(a, b)| close(*a, *b, 1e-12))
            && rc.raw.iter().zip(&raw).all(|(a, b)| close(*a, *b, 1e-12))
            && rc
                .standardized
                .iter()
                .zip(&std)
                .all(|(a, b)| close(*a, *b, 1e-12));
        bad[0] += usize::from(!ok);

        let mut rec = ReputationRecord::new(rng.random_range(0.0..=1.0));
        let (mut acc, mut g, mut b) = (rec.accumulated, 0, 0);
        let mut ok = true;
        for t in 0..rng.random_range(1..10) {
            let re: f64 = rng.random_range(0.0..=1.0);
            let alpha = rec.apply(t, re, &params);
            let (a2, g2, b2, al2) = reputation_oracle(acc, g, b, re);
            (acc, g, b) = (a2, g2, b2);
            ok &= close(alpha, al2, 1e-12)
                && close(rec.accumulated, acc, 1e-12)
                && (rec.n_good, rec.n_bad) == (g, b);
        }
        bad[1] += usize::from(!ok);

        let k = rng.random_range(1..25);
        let market: Vec<(u32, f64, f64)> = (0..k)
            .map(|i| {
                (
                    i as u32,
                    rng.random_range(0.1..10.0),
                    rng.random_range(0.05..=1.0),
                )
            })
            .collect();
        let budget = rng.random_range(0.5..60.0);
        let bids: Vec<Bid<f64>> = market
            .iter()
            .map(|&(i, c, _)| Bid::truthful(WorkerId(i), c))
            .collect();
        let reps: BTreeMap<WorkerId, f64> =
            market.iter().map(|&(i, _, r)| (WorkerId(i), r)).collect();
        let o = select_winners(&bids, &reps, &AuctionConfig::new(budget).unwrap()).unwrap();
        let (winners, rho, caps) = selection_oracle(&market, budget);
        let ok = o.winners.iter().map(|w| w.0).collect::<Vec<_>>() == winners
            && close(o.rho_star.unwrap(), rho, 1e-12)
            && caps
                .iter()
                .all(|(id, c)| close(o.upper_bounds[&WorkerId(*id)], *c, 1e-12));
        bad[2] += usize::from(!ok);
    }
    verdict(
        bad == [0, 0, 0],
        format!(
            "mismatches over {n_inst} instances each: contribution {}, reputation {}, selection {}",
            bad[0], bad[1], bad[2]
        ),
    )
}

fn gradient_check() -> Verdict {
    let spec = SyntheticTaskSpec {
        num_classes: 5,
        feature_dim: 6,
        train_size_per_worker: 100,
        validation_size: 10,
        test_size: 10,
        ..Default::default()
    };
    let pop = generate_population::<f64>(&spec, &[WorkerDataProfile::iid(0.8)]).unwrap();
    let data = &pop.workers[0];
    let mut rng = seed::rng(77, &[]);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let mut model = LogisticModel::<f64>::zeros(5, 6);
        for p in model.params.iter_mut() {
            *p = rng.random_range(-1.0..1.0);
        }
        let batch: Vec<usize> = (0..20).map(|_| rng.random_range(0..data.len())).collect();
        let (_, grad) = model.loss_and_gradient(data, &batch);
        let eps = 1e-5;
        for (k, &g) in grad.iter().enumerate() {
            let mut hi = model.clone();
            hi.params[k] += eps;
            let mut lo = model.clone();
            lo.params[k] -= eps;
            let num = (hi.loss_and_gradient(data, &batch).0 - lo.loss_and_gradient(data, &batch).0)
                / (2.0 * eps);
            worst = worst.max((num - g).abs() / num.abs().max(g.abs()).max(1e-6));
        }
    }
    verdict(worst < 1e-5, format!("worst relative error {worst:.2e}"))
}

fn determinism() -> Verdict {
    let small_task = r#""task": {"train_size_per_worker": 300, "validation_size": 1000, "test_size": 1000, "rounds": 3}"#;
    let configs = [
        r#"{"kind": "auction_sweep_budget"}"#.to_string(),
        r#"{"kind": "auction_sweep_workers"}"#.to_string(),
        format!(r#"{{"kind": "multi_task", "tasks": 8, "discard": 2, {small_task}}}"#),
        format!(r#"{{"kind": "contribution_case1", {small_task}}}"#),
        format!(r#"{{"kind": "contribution_case2", {small_task}}}"#),
        r#"{"kind": "property_suite", "properties": {"budget_instances": 1000, "ir_instances": 1000, "truthfulness_instances": 200, "measure_complexity": false}}"#.to_string(),
    ];
    let mut same = 0;
    for text in &configs {
        let cfg = ExperimentConfig::from_json(text).expect("config");
        let a = harness::run_experiment(&cfg)
            .unwrap()
            .to_csv_string()
            .unwrap();
        let b = harness::run_experiment(&cfg)
            .unwrap()
            .to_csv_string()
            .unwrap();
        same += usize::from(a == b);
    }
    verdict(
        same == configs.len(),
        format!(
            "{same}/{} experiment kinds byte-identical on rerun",
            configs.len()
        ),
    )
}

fn main() {
    let mut results: Vec<(u32, &str, Verdict)> = vec![
        (1, "economic-property suites", economic_properties()),
        (2, "selection hand trace", hand_trace()),
        (3, "closed-form spot values", spot_values()),
        (4, "reputation asymmetry", asymmetry()),
    ];

    let cfg = ExperimentConfig {
        mechanisms: vec![
            Mechanism::Ours,
            Mechanism::VanillaFl,
            Mechanism::BidGreedy,
            Mechanism::ReputationGreedy,
        ],
        ..ExperimentConfig::for_kind(ExperimentKind::MultiTask)
    };
    let start = Instant::now();
    let runs = multitask::run_multitask_detailed(&cfg).expect("multi-task run");
    let secs = start.elapsed().as_secs_f64();
    let summaries: BTreeMap<Mechanism, MultiTaskSummary> = runs
        .into_iter()
        .map(|(run, s)| (run.mechanism, s))
        .collect();
    results.push((
        5,
        "per-accuracy contribution/reputation/payment",
        table2(&summaries[&Mechanism::Ours], secs),
    ));
    results.push((6, "selection purity", table3(&summaries)));
    results.push((7, "final loss ordering", table4(&summaries)));
    results.push((8, "unit-utility sweeps", sweeps()));
    results.push((9, "oracle equivalence", oracles()));
    results.push((10, "gradient check", gradient_check()));
    results.push((11, "determinism", determinism()));

    let mut failed = 0;
    for (id, name, v) in &results {
        let tag = if v.pass { "PASS" } else { "FAIL" };
        failed += usize::from(!v.pass);
        println!("[{tag}] criterion {id:>2}: {name}: {}", v.detail);
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        results.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
