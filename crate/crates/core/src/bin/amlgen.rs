//! Command-line front end: generate, validate, stats, bench, and
//! check-determinism. All behavior lives in the library; this binary only
//! parses arguments, wires options, and renders summaries.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use amlgen::config::OutputFormats;
use amlgen::pipeline::{generate, GenerateOptions};

#[derive(Parser)]
#[command(
    name = "amlgen",
    version,
    about = "Deterministic generator for labelled synthetic financial transaction graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline (population, patterns, background, assembly)
    /// and export the dataset.
    Generate {
        /// Graph-level configuration file (YAML).
        #[arg(long)]
        graph_config: PathBuf,
        /// Pattern-level configuration file (YAML).
        #[arg(long)]
        patterns_config: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Override the master seed from the config file.
        #[arg(long)]
        seed: Option<u64>,
        /// Comma-separated output formats: csv, json.
        #[arg(long)]
        format: Option<String>,
        /// Abort on the first failed pattern instance instead of skipping.
        #[arg(long)]
        strict: bool,
        /// Worker thread budget (0 = library default). Output is invariant
        /// to this setting.
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
    /// Re-validate every pattern instance recorded in an export directory
    /// and write report.json.
    Validate {
        /// Export directory produced by `generate`.
        #[arg(long)]
        dir: PathBuf,
        /// Report path; defaults to `<dir>/report.json`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print dataset statistics for an export directory.
    Stats {
        #[arg(long)]
        dir: PathBuf,
    },
    /// Scaling benchmark: generation across increasing population sizes
    /// with a fitted log-log exponent.
    Bench {
        /// Output directory for bench_report.{csv,json}.
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated individual counts.
        #[arg(long, default_value = "1000,2000,3500,5000,8000")]
        scales: String,
        #[arg(long, default_value_t = 1)]
        repeats: u32,
    },
    /// Generate twice with the same configs and compare export hashes.
    CheckDeterminism {
        #[arg(long)]
        graph_config: PathBuf,
        #[arg(long)]
        patterns_config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
}

fn parse_formats(text: &str) -> Result<OutputFormats, String> {
    let mut formats = OutputFormats {
        csv: false,
        json: false,
    };
    for part in text.split(',') {
        match part.trim() {
            "csv" => formats.csv = true,
            "json" => formats.json = true,
            other => return Err(format!("unknown format `{other}` (expected csv, json)")),
        }
    }
    Ok(formats)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Generate {
            graph_config,
            patterns_config,
            out,
            seed,
            format,
            strict,
            threads,
        } => {
            let formats = match format {
                Some(text) => Some(parse_formats(&text).map_err(anyhow::Error::msg)?),
                None => None,
            };
            let options = GenerateOptions {
                graph_config,
                pattern_config: patterns_config,
                out_dir: out.clone(),
                seed_override: seed,
                formats,
                strict,
                threads,
            };
            let output = generate(&options)?;
            for warning in &output.warnings {
                log::warn!("{warning}");
            }
            let m = &output.manifest;
            println!(
                "generated {} nodes, {} edges ({} transactions, {} fraud) in {:.2}s",
                m.node_count,
                m.edge_count,
                m.transaction_edge_count,
                m.fraud_edge_count,
                output.elapsed_secs
            );
            println!(
                "seed {}; illicit ratio {:.6} (target {:.6}); split {}/{}/{}",
                m.seed,
                m.achieved_illicit_ratio,
                m.target_illicit_ratio,
                m.split_counts.0,
                m.split_counts.1,
                m.split_counts.2
            );
            for file in &m.files {
                println!(
                    "  {}  {} bytes  sha256:{}",
                    file.name, file.bytes, file.sha256
                );
            }
            println!("written to {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { dir, out } => {
            let report = amlgen::validate::validate_export(&dir)?;
            print!("{}", report.render_text());
            let out = out.unwrap_or_else(|| dir.join("report.json"));
            std::fs::write(&out, serde_json::to_string_pretty(&report)? + "\n")?;
            println!("report written to {}", out.display());
            Ok(if report.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::Stats { dir } => {
            let loaded = amlgen::validate::load_export(&dir)?;
            let stats = &loaded.stats;
            println!("transaction edges: {}", stats.transaction_edges);
            println!("fraud edges: {}", stats.fraud_edges);
            println!(
                "achieved illicit ratio: {:.6} (manifest {:.6}, target {:.6})",
                stats.illicit_ratio,
                loaded.manifest.achieved_illicit_ratio,
                loaded.manifest.target_illicit_ratio
            );
            println!("imbalance: {:.0}:1", stats.imbalance);
            println!("structuring-band share: {:.4}", stats.structuring_share);
            println!(
                "both-endpoint-fraud fraction: {:.6}",
                stats.both_endpoint_fraud_fraction
            );
            for (category, share) in &stats.type_shares {
                println!(
                    "  {category}: share {:.4}, median {:.2}",
                    share, stats.type_medians[category]
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Bench {
            out,
            scales,
            repeats,
        } => {
            let scales: Vec<u32> = scales
                .split(',')
                .map(|s| s.trim().parse::<u32>())
                .collect::<Result<_, _>>()
                .map_err(|e| anyhow::anyhow!("bad --scales: {e}"))?;
            anyhow::ensure!(scales.len() >= 2, "need at least two scales");
            let report = amlgen::bench::run_bench(&scales, repeats)?;
            amlgen::bench::write_bench_report(&report, &out)?;
            for row in &report.scales {
                println!(
                    "{} individuals: N={} wall={:.3}s peak={}MB throughput={:.0} kElements/s",
                    row.individuals,
                    row.total_elements,
                    row.wall_secs,
                    row.peak_rss_bytes / (1024 * 1024),
                    row.throughput_kelements_per_sec
                );
            }
            println!(
                "alpha = {:.3}, R^2 = {:.3}, pearson r = {:.3}",
                report.alpha, report.r_squared, report.pearson_r
            );
            println!("report written to {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::CheckDeterminism {
            graph_config,
            patterns_config,
            seed,
            threads,
        } => {
            let (identical, h1, h2) = amlgen::validate::check_determinism(
                &graph_config,
                &patterns_config,
                seed,
                threads,
            )?;
            if identical {
                println!("deterministic: both runs produced identical files");
                for (name, hash) in &h1 {
                    println!("  {name}  sha256:{hash}");
                }
                Ok(ExitCode::SUCCESS)
            } else {
                println!("NOT deterministic; differing files:");
                for (name, hash) in &h1 {
                    if h2.get(name) != Some(hash) {
                        println!(
                            "  {name}: {hash} vs {}",
                            h2.get(name).map(String::as_str).unwrap_or("missing")
                        );
                    }
                }
                Ok(ExitCode::FAILURE)
            }
        }
    }
}
