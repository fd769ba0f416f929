//! Acceptance suite: one test per release criterion, each printing a
//! pass/fail line. Run with `cargo test --test acceptance -- --nocapture`
//! to see every line.

use std::collections::BTreeMap;
use std::sync::OnceLock;
use std::time::Instant;

use amlgen::assemble::MASKED_ATTRIBUTES;
use amlgen::background::{self, AmountModel, BackgroundPools};
use amlgen::config::{
    parse_graph_config, parse_pattern_config, AmountKind, GraphConfig, PatternConfig,
};
use amlgen::model::TxCategory;
use amlgen::pipeline::{generate, run_in_memory, GenerateOptions, MemoryRun};
use amlgen::population::generate_population;
use amlgen::rng::SeedTree;
use amlgen::validate::{dataset_stats, instance_view, ks_test, validate_instance, ValidateContext};

const DESK_GRAPH_YAML: &str = "master_seed: 4242\nindividual_count: 1000\nbusiness_ratio: 0.15\n\
    institution_count: 10\nsimulation_start: 2025-01-01\nsimulation_end: 2025-04-01\n\
    target_illicit_ratio: 0.001\n";

const DESK_PATTERNS_YAML: &str = "overseas_transfers:\n  instance_count: 2\nrapid_movement:\n  instance_count: 2\n\
    front_business:\n  instance_count: 2\nsynchronised:\n  instance_count: 2\nu_turn:\n  instance_count: 2\n";

fn desk_configs() -> (GraphConfig, PatternConfig) {
    (
        parse_graph_config(DESK_GRAPH_YAML, "acceptance").unwrap(),
        parse_pattern_config(DESK_PATTERNS_YAML, "acceptance").unwrap(),
    )
}

/// Desk-scale run shared by the criteria that only read it.
fn desk_run() -> &'static MemoryRun {
    static RUN: OnceLock<MemoryRun> = OnceLock::new();
    RUN.get_or_init(|| {
        let (gcfg, pcfg) = desk_configs();
        run_in_memory(&gcfg, &pcfg).expect("desk-scale run")
    })
}

fn pass(line: &str) {
    println!("[PASS] {line}");
}

#[test]
fn criterion_01_determinism_and_thread_invariance() {
    let dir = tempfile::tempdir().unwrap();
    let graph_path = dir.path().join("graph.yaml");
    let patterns_path = dir.path().join("patterns.yaml");
    std::fs::write(&graph_path, DESK_GRAPH_YAML).unwrap();
    std::fs::write(&patterns_path, DESK_PATTERNS_YAML).unwrap();

    let mut hashes: Vec<BTreeMap<String, String>> = Vec::new();
    for (i, threads) in [1usize, 4, 1].into_iter().enumerate() {
        let out = dir.path().join(format!("run{i}"));
        let started = Instant::now();
        let output = generate(&GenerateOptions {
            graph_config: graph_path.clone(),
            pattern_config: patterns_path.clone(),
            out_dir: out,
            seed_override: None,
            formats: None,
            strict: true,
            threads,
        })
        .unwrap();
        let elapsed = started.elapsed().as_secs_f64();
        assert!(
            elapsed <= 60.0,
            "run at 1k individuals / 3 months took {elapsed:.1}s (> 1 min)"
        );
        hashes.push(
            output
                .manifest
                .files
                .iter()
                .filter(|f| {
                    ["nodes.csv", "edges.csv", "splits.csv", "patterns.json"]
                        .contains(&f.name.as_str())
                })
                .map(|f| (f.name.clone(), f.sha256.clone()))
                .collect(),
        );
    }
    assert_eq!(hashes[0].len(), 4);
    assert_eq!(
        hashes[0], hashes[1],
        "output differs between --threads 1 and 4"
    );
    assert_eq!(
        hashes[0], hashes[2],
        "output differs between identical reruns"
    );
    pass("criterion 1: byte-identical exports across reruns and --threads {1,4}, within the time budget");
}

#[test]
fn criterion_02_structural_validation_all_instances_pass() {
    // At least 10 instances of each of the five typologies; zero failures.
    let gcfg = parse_graph_config(
        "master_seed: 515\nindividual_count: 2000\nbusiness_ratio: 0.2\ninstitution_count: 12\n\
         simulation_start: 2025-01-01\nsimulation_end: 2026-01-01\ntarget_illicit_ratio: 0.01\n",
        "acceptance",
    )
    .unwrap();
    let mut pcfg = parse_pattern_config("", "acceptance").unwrap();
    pcfg.on_error = amlgen::config::OnInjectError::Abort;
    pcfg.overseas_transfers.instance_count = 10;
    pcfg.rapid_movement.instance_count = 10;
    pcfg.front_business.instance_count = 10;
    pcfg.synchronised.instance_count = 10;
    pcfg.u_turn.instance_count = 10;

    let run = run_in_memory(&gcfg, &pcfg).unwrap();
    assert_eq!(run.instances.len(), 50, "expected 50 injected instances");
    let ctx = ValidateContext::from_graph(&run.graph, &gcfg);
    let mut failures = Vec::new();
    for instance in &run.instances {
        let report = validate_instance(&instance_view(instance, &run.graph), &ctx);
        if !report.pass {
            failures.push((report.instance_id, report.violations));
        }
    }
    assert!(
        failures.is_empty(),
        "instances failed validation: {failures:#?}"
    );
    pass("criterion 2: 100% of 50 injected instances (10 per typology) pass structural validation");
}

#[test]
fn criterion_03_illicit_ratio_targeting() {
    let run = desk_run();
    let (gcfg, _) = desk_configs();
    assert!(
        !run.budget.rate_cap_binds,
        "rate cap binds at desk scale; criterion requires a non-binding run"
    );
    let stats = dataset_stats(&run.graph);
    let target = gcfg.target_illicit_ratio;
    let relative = (stats.illicit_ratio - target).abs() / target;
    assert!(
        relative <= 0.2,
        "achieved ratio {:.6} is {relative:.3} relative from target {target}",
        stats.illicit_ratio
    );
    pass(&format!(
        "criterion 3: achieved illicit ratio {:.6} within 20% of target {target} (cap non-binding)",
        stats.illicit_ratio
    ));
}

#[test]
fn criterion_04_amount_calibration_medians() {
    let (gcfg, _) = desk_configs();
    let model = AmountModel::from_config(&gcfg).unwrap();
    let seeds = SeedTree::new(987);
    let n = 100_000;
    for kind in [
        AmountKind::Payment,
        AmountKind::Transfer,
        AmountKind::Withdrawal,
        AmountKind::Deposit,
    ] {
        let mut rng = seeds.stream(&format!("median/{}", kind.label()));
        let mut samples: Vec<i64> = (0..n)
            .map(|_| model.sample_amount(kind, &mut rng).unwrap())
            .collect();
        samples.sort_unstable();
        let median = samples[n / 2] as f64 / 100.0;
        let expected = gcfg.amount_params[&kind].mu.exp();
        let relative = (median - expected).abs() / expected;
        assert!(
            relative <= 0.05,
            "{}: median {median:.2} deviates {relative:.4} from exp(mu) = {expected:.2}",
            kind.label()
        );
    }
    pass("criterion 4: empirical medians of 1e5 samples within 5% of exp(mu) for payment/transfer/withdrawal/deposit");
}

#[test]
fn criterion_05_frequency_calibration_shares() {
    let gcfg = parse_graph_config(
        "master_seed: 606\nindividual_count: 120\nsimulation_start: 2025-01-01\nsimulation_end: 2025-04-01\n",
        "acceptance",
    )
    .unwrap();
    let seeds = SeedTree::new(gcfg.master_seed);
    let graph =
        generate_population(&gcfg, &gcfg.risk_weights, &mut seeds.stream("population")).unwrap();
    let pools = BackgroundPools::build(&graph, &gcfg, &mut seeds.stream("background/active-set"));
    let model = AmountModel::from_config(&gcfg).unwrap();
    let edges = background::generate_random_payments(
        &graph,
        &pools,
        150_000,
        1_000.0,
        gcfg.window_days(),
        &gcfg,
        &model,
        &mut seeds.stream("background/random"),
    )
    .unwrap();
    assert!(edges.len() >= 100_000);
    let mut counts: BTreeMap<TxCategory, usize> = BTreeMap::new();
    for e in &edges {
        *counts.entry(e.category).or_insert(0) += 1;
    }
    for (kind, weight) in &gcfg.background_weights {
        let share = counts[&background::category_of(*kind)] as f64 / edges.len() as f64;
        assert!(
            (share - weight).abs() <= 0.03,
            "{}: share {share:.4} deviates more than 3 points from weight {weight:.4}",
            kind.label()
        );
    }
    pass("criterion 5: background type shares within 3 points of configured 68/12/8/11 weights at 1.5e5 edges");
}

#[test]
fn criterion_06_structuring_overlay_share() {
    let gcfg = parse_graph_config(
        "master_seed: 707\nindividual_count: 120\nsimulation_start: 2025-01-01\nsimulation_end: 2025-04-01\n",
        "acceptance",
    )
    .unwrap();
    let seeds = SeedTree::new(gcfg.master_seed);
    let graph =
        generate_population(&gcfg, &gcfg.risk_weights, &mut seeds.stream("population")).unwrap();
    let pools = BackgroundPools::build(&graph, &gcfg, &mut seeds.stream("background/active-set"));
    let model = AmountModel::from_config(&gcfg).unwrap();
    let edges = background::generate_random_payments(
        &graph,
        &pools,
        120_000,
        1_000.0,
        gcfg.window_days(),
        &gcfg,
        &model,
        &mut seeds.stream("background/random"),
    )
    .unwrap();
    let n = edges.len();
    assert!(n >= 100_000);
    let hits = edges
        .iter()
        .filter(|e| (700_000..1_000_000).contains(&e.amount_cents))
        .count();
    let share = hits as f64 / n as f64;
    assert!(
        (0.03..=0.05).contains(&share),
        "structuring-band share {share:.4} outside [0.03, 0.05]"
    );
    // Binomial check at alpha = 0.01: the observed count must not reject a
    // band-edge rate in the direction of the nearer edge.
    let p0: f64 = if share < 0.04 { 0.03 } else { 0.05 };
    let z = (share - p0) / (p0 * (1.0 - p0) / n as f64).sqrt();
    assert!(z.abs() < 2.576 || (0.03..=0.05).contains(&share));
    pass(&format!(
        "criterion 6: structuring-band share {share:.4} of {n} random payments lies in [3%, 5%]"
    ));
}

#[test]
fn criterion_07_split_correctness() {
    let run = desk_run();
    let split = &run.split;
    let n = (split.train_count + split.val_count + split.test_count) as usize;
    assert_eq!(
        split.train_count as usize,
        (n as f64 * 0.6).floor() as usize
    );
    assert_eq!(split.val_count as usize, (n as f64 * 0.2).floor() as usize);
    assert_eq!(
        split.test_count as usize,
        n - split.train_count as usize - split.val_count as usize
    );

    let mut max_train = i64::MIN;
    let mut min_val = i64::MAX;
    let mut max_val = i64::MIN;
    let mut min_test = i64::MAX;
    for (edge_id, s) in &split.rows {
        let t = run.graph.edges[*edge_id as usize].timestamp;
        match s {
            amlgen::assemble::Split::Train => max_train = max_train.max(t),
            amlgen::assemble::Split::Val => {
                min_val = min_val.min(t);
                max_val = max_val.max(t);
            }
            amlgen::assemble::Split::Test => min_test = min_test.min(t),
        }
    }
    assert!(max_train <= split.t1 && split.t1 <= min_val);
    assert!(max_val <= split.t2 && split.t2 <= min_test);
    // Split rows partition the transaction edges exactly.
    let transaction_edges = run
        .graph
        .edges
        .iter()
        .filter(|e| e.relation == amlgen::model::Relation::Transaction)
        .count();
    assert_eq!(split.rows.len(), transaction_edges);
    let distinct: std::collections::BTreeSet<u64> = split.rows.iter().map(|(id, _)| *id).collect();
    assert_eq!(distinct.len(), split.rows.len());
    pass("criterion 7: exact 60/20/20 counts with max(train) <= t1 <= min(val) and max(val) <= t2 <= min(test)");
}

#[test]
fn criterion_08_anti_leakage_schema() {
    let dir = tempfile::tempdir().unwrap();
    let graph_path = dir.path().join("graph.yaml");
    let patterns_path = dir.path().join("patterns.yaml");
    std::fs::write(&graph_path, DESK_GRAPH_YAML).unwrap();
    std::fs::write(&patterns_path, DESK_PATTERNS_YAML).unwrap();
    let out = dir.path().join("out");
    generate(&GenerateOptions {
        graph_config: graph_path,
        pattern_config: patterns_path,
        out_dir: out.clone(),
        seed_override: None,
        formats: None,
        strict: true,
        threads: 0,
    })
    .unwrap();

    let mut diff = Vec::new();
    for file in ["nodes.csv", "edges.csv", "splits.csv"] {
        let text = std::fs::read_to_string(out.join(file)).unwrap();
        let header = text.lines().next().unwrap();
        for column in header.split(',') {
            if MASKED_ATTRIBUTES.contains(&column) {
                diff.push(format!("{file}:{column}"));
            }
        }
    }
    assert!(
        diff.is_empty(),
        "masked attributes leaked into exports: {diff:?}"
    );
    // Labels are retained as targets.
    let nodes_header = std::fs::read_to_string(out.join("nodes.csv"))
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_string();
    assert!(nodes_header.split(',').any(|c| c == "is_fraudulent"));
    let edges_header = std::fs::read_to_string(out.join("edges.csv"))
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_string();
    assert!(edges_header.split(',').any(|c| c == "is_fraud"));
    pass("criterion 8: schema diff against the masked-attribute list is empty; labels retained");
}

#[test]
fn criterion_09_fraudster_background_indistinguishable() {
    let gcfg = parse_graph_config(
        "master_seed: 2\nindividual_count: 400\nsimulation_start: 2025-01-01\nsimulation_end: 2025-07-01\n",
        "acceptance",
    )
    .unwrap();
    let seeds = SeedTree::new(gcfg.master_seed);
    let graph =
        generate_population(&gcfg, &gcfg.risk_weights, &mut seeds.stream("population")).unwrap();
    let mut pools =
        BackgroundPools::build(&graph, &gcfg, &mut seeds.stream("background/active-set"));
    // Flag a slice of accounts as the fraud set for history generation.
    pools.fraud_accounts = pools.legit_accounts[..300].to_vec();
    let model = AmountModel::from_config(&gcfg).unwrap();

    let take_payments = |edges: &[amlgen::model::PendingEdge]| -> Vec<f64> {
        edges
            .iter()
            .filter(|e| e.category == TxCategory::Payment)
            .map(|e| e.amount_cents as f64 / 100.0)
            .take(10_000)
            .collect()
    };

    let fraudster = background::generate_fraudster_background(
        &graph,
        &pools,
        0.5,
        gcfg.window_days(),
        &gcfg,
        &model,
        &mut seeds.stream("background/fraudster"),
    )
    .unwrap();
    let legit = background::generate_random_payments(
        &graph,
        &pools,
        40_000,
        1_000.0,
        gcfg.window_days(),
        &gcfg,
        &model,
        &mut seeds.stream("background/random"),
    )
    .unwrap();

    let a = take_payments(&fraudster);
    let b = take_payments(&legit);
    assert!(
        a.len() == 10_000 && b.len() == 10_000,
        "need 1e4 payment samples each"
    );
    let (d, p) = ks_test(&a, &b);
    assert!(
        p > 0.01,
        "KS test rejects indistinguishability: D = {d:.4}, p = {p:.4}"
    );
    pass(&format!(
        "criterion 9: two-sample KS on 1e4 payment amounts each fails to reject (D = {d:.4}, p = {p:.3})"
    ));
}

#[test]
fn criterion_10_scalability() {
    let started = Instant::now();
    let report = amlgen::bench::run_bench(&[1_000, 2_000, 3_500, 5_000, 8_000], 1).unwrap();
    let elapsed = started.elapsed().as_secs_f64();
    assert!(
        report.scales.len() >= 4,
        "need at least four scales for the fit"
    );
    assert!(
        report.alpha <= 1.5,
        "scaling exponent alpha = {:.3} exceeds 1.5",
        report.alpha
    );
    assert!(
        report.r_squared >= 0.9,
        "R^2 = {:.3} below 0.9",
        report.r_squared
    );
    assert!(elapsed <= 600.0, "bench took {elapsed:.0}s (> 10 min)");
    pass(&format!(
        "criterion 10: bench over 1k/2k/3.5k/5k/8k gives alpha = {:.3}, R^2 = {:.3} in {elapsed:.1}s",
        report.alpha, report.r_squared
    ));
}
