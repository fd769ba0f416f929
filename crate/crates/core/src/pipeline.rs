//! Full-run orchestration: population, pattern injection, background
//! budgeting and generation, merge, split, and export.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use thiserror::Error;

use crate::assemble::{self, AssembleError, ExportManifest, SplitIndex};
use crate::background::{
    self, AmountModel, BackgroundBudget, BackgroundError, BackgroundPools, BackgroundStats,
};
use crate::config::{self, ConfigError, GraphConfig, OnInjectError, OutputFormats, PatternConfig};
use crate::model::Graph;
use crate::patterns::{self, PatternError, PatternInstance};
use crate::population::{self, PopulationError};
use crate::rng::SeedTree;
use crate::validate::DatasetStats;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Population(#[from] PopulationError),
    #[error(transparent)]
    Pattern(#[from] PatternError),
    #[error(transparent)]
    Background(#[from] BackgroundError),
    #[error(transparent)]
    Assemble(#[from] AssembleError),
}

#[derive(Debug, Clone)]
pub struct GenerateOptions {
    pub graph_config: PathBuf,
    pub pattern_config: PathBuf,
    pub out_dir: PathBuf,
    pub seed_override: Option<u64>,
    pub formats: Option<OutputFormats>,
    /// Abort on the first failed pattern instance instead of skipping.
    pub strict: bool,
    /// Worker thread budget; 0 keeps the default. Output is invariant to
    /// this setting.
    pub threads: usize,
}

/// A finished in-memory run, before (or without) export.
pub struct MemoryRun {
    pub graph: Graph,
    pub instances: Vec<PatternInstance>,
    pub seq_to_edge_id: Vec<u64>,
    pub split: SplitIndex,
    pub budget: BackgroundBudget,
    pub background: BackgroundStats,
    pub warnings: Vec<String>,
}

/// Result of a full `generate` invocation.
pub struct GenerationOutput {
    pub manifest: ExportManifest,
    pub stats: DatasetStats,
    pub background: BackgroundStats,
    pub warnings: Vec<String>,
    pub elapsed_secs: f64,
}

/// Runs the whole generation workflow in memory. Deterministic under
/// (configs, master seed); thread count does not affect the result.
pub fn run_in_memory(gcfg: &GraphConfig, pcfg: &PatternConfig) -> Result<MemoryRun, PipelineError> {
    let seeds = SeedTree::new(gcfg.master_seed);
    let mut warnings = config::validate_combined(gcfg, pcfg);

    let mut graph =
        population::generate_population(gcfg, &gcfg.risk_weights, &mut seeds.stream("population"))?;

    let (instances, pattern_warnings) = patterns::inject_all(&mut graph, pcfg, gcfg, &seeds)?;
    warnings.extend(pattern_warnings);

    let pools = BackgroundPools::build(&graph, gcfg, &mut seeds.stream("background/active-set"));
    let model = AmountModel::from_config(gcfg)?;
    let fraud_edges: u64 = instances.iter().map(|i| i.transactions.len() as u64).sum();
    let budget = background::compute_background_budget(
        gcfg,
        fraud_edges,
        pools.active_accounts.len(),
        pools.fraud_accounts.len(),
        gcfg.window_days(),
    )?;
    warnings.extend(budget.warnings.iter().cloned());

    let (background_edges, background_stats) =
        background::generate_all_background(&graph, gcfg, &budget, &pools, &model, &seeds)?;

    let seq_to_edge_id = assemble::merge_and_finalize(&mut graph, background_edges)?;
    let split = assemble::temporal_split(&graph)?;

    Ok(MemoryRun {
        graph,
        instances,
        seq_to_edge_id,
        split,
        budget,
        background: background_stats,
        warnings,
    })
}

/// Loads configs, applies CLI overrides, runs the pipeline, and exports.
pub fn generate(options: &GenerateOptions) -> Result<GenerationOutput, PipelineError> {
    let started = Instant::now();
    let graph_bytes = std::fs::read(&options.graph_config).map_err(|source| ConfigError::Io {
        path: options.graph_config.display().to_string(),
        source,
    })?;
    let pattern_bytes =
        std::fs::read(&options.pattern_config).map_err(|source| ConfigError::Io {
            path: options.pattern_config.display().to_string(),
            source,
        })?;

    let mut gcfg = config::parse_graph_config(
        &String::from_utf8_lossy(&graph_bytes),
        &options.graph_config.display().to_string(),
    )?;
    let mut pcfg = config::parse_pattern_config(
        &String::from_utf8_lossy(&pattern_bytes),
        &options.pattern_config.display().to_string(),
    )?;
    if let Some(seed) = options.seed_override {
        gcfg.master_seed = seed;
    }
    if let Some(formats) = options.formats {
        gcfg.output_formats = formats;
    }
    if options.strict {
        pcfg.on_error = OnInjectError::Abort;
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.threads)
        .build()
        .expect("thread pool construction");
    let run = pool.install(|| run_in_memory(&gcfg, &pcfg))?;

    let mut config_sha256 = BTreeMap::new();
    config_sha256.insert(
        "graph_config".to_string(),
        assemble::sha256_hex(&graph_bytes),
    );
    config_sha256.insert(
        "pattern_config".to_string(),
        assemble::sha256_hex(&pattern_bytes),
    );

    let inputs = assemble::ExportInputs {
        graph: &run.graph,
        split: &run.split,
        instances: &run.instances,
        seq_to_edge_id: &run.seq_to_edge_id,
        config_sha256,
        warnings: run.warnings.clone(),
    };
    let manifest = assemble::export_dataset(&inputs, &gcfg, gcfg.output_formats, &options.out_dir)?;
    let stats = crate::validate::dataset_stats(&run.graph);

    Ok(GenerationOutput {
        manifest,
        stats,
        background: run.background,
        warnings: run.warnings,
        elapsed_secs: started.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{parse_graph_config, parse_pattern_config};

    fn desk_configs() -> (GraphConfig, PatternConfig) {
        let gcfg = parse_graph_config(
            "master_seed: 77\nindividual_count: 300\nbusiness_ratio: 0.2\n\
             simulation_start: 2025-01-01\nsimulation_end: 2025-04-01\n\
             target_illicit_ratio: 0.005\n",
            "test",
        )
        .unwrap();
        let mut pcfg = parse_pattern_config("", "test").unwrap();
        pcfg.overseas_transfers.instance_count = 1;
        pcfg.rapid_movement.instance_count = 1;
        pcfg.front_business.instance_count = 1;
        pcfg.synchronised.instance_count = 1;
        pcfg.u_turn.instance_count = 1;
        (gcfg, pcfg)
    }

    #[test]
    fn full_run_meets_budget() {
        let (gcfg, pcfg) = desk_configs();
        let run = run_in_memory(&gcfg, &pcfg).unwrap();
        assert_eq!(run.instances.len(), 5);
        let stats = crate::validate::dataset_stats(&run.graph);
        assert!(stats.fraud_edges > 0);
        // Within 20% of the target when the cap does not bind.
        assert!(!run.budget.rate_cap_binds, "{:?}", run.budget.warnings);
        let rel =
            (stats.illicit_ratio - gcfg.target_illicit_ratio).abs() / gcfg.target_illicit_ratio;
        assert!(
            rel <= 0.2,
            "ratio {} vs target {}",
            stats.illicit_ratio,
            gcfg.target_illicit_ratio
        );
    }

    #[test]
    fn reruns_are_identical() {
        let (gcfg, pcfg) = desk_configs();
        let a = run_in_memory(&gcfg, &pcfg).unwrap();
        let b = run_in_memory(&gcfg, &pcfg).unwrap();
        assert_eq!(a.graph.edges.len(), b.graph.edges.len());
        for (x, y) in a.graph.edges.iter().zip(b.graph.edges.iter()) {
            assert_eq!(x, y);
        }
        assert_eq!(a.split.t1, b.split.t1);
        assert_eq!(a.split.t2, b.split.t2);
    }

    #[test]
    fn every_edge_endpoint_resolves() {
        let (gcfg, pcfg) = desk_configs();
        let run = run_in_memory(&gcfg, &pcfg).unwrap();
        let n = run.graph.node_count() as u32;
        assert!(run.graph.edges.iter().all(|e| e.source < n && e.target < n));
    }
}
