//! Scaling benchmark: runs generation across increasing population sizes,
//! records wall time, peak memory, and throughput, and fits the log-log
//! scaling exponent of time against total graph elements.

use std::path::Path;

use serde::Serialize;

use crate::config::{parse_graph_config, parse_pattern_config, GraphConfig, PatternConfig};
use crate::pipeline::{run_in_memory, PipelineError};

#[derive(Debug, Clone, Serialize)]
pub struct BenchScale {
    pub individuals: u32,
    pub nodes: u64,
    pub edges: u64,
    /// nodes + edges created.
    pub total_elements: u64,
    pub wall_secs: f64,
    pub peak_rss_bytes: u64,
    pub throughput_kelements_per_sec: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub scales: Vec<BenchScale>,
    pub repeats: u32,
    /// Least-squares slope of log(wall) on log(N).
    pub alpha: f64,
    pub r_squared: f64,
    pub pearson_r: f64,
    /// Peak memory is a cumulative process maximum when scales run
    /// in-process; ascending order keeps per-scale readings meaningful.
    pub memory_note: String,
}

/// Peak resident set size of this process, from process accounting, with a
/// /proc fallback.
pub fn peak_rss_bytes() -> Option<u64> {
    unsafe {
        let mut usage: libc::rusage = std::mem::zeroed();
        if libc::getrusage(libc::RUSAGE_SELF, &mut usage) == 0 {
            // ru_maxrss is kilobytes on Linux, bytes on macOS.
            let raw = usage.ru_maxrss as u64;
            #[cfg(target_os = "macos")]
            return Some(raw);
            #[cfg(not(target_os = "macos"))]
            return Some(raw * 1024);
        }
    }
    proc_vm_hwm()
}

fn proc_vm_hwm() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    for line in status.lines() {
        if let Some(rest) = line.strip_prefix("VmHWM:") {
            let kb: u64 = rest.trim().trim_end_matches("kB").trim().parse().ok()?;
            return Some(kb * 1024);
        }
    }
    None
}

/// Ordinary least squares of y on x. Returns (slope, intercept, r^2, r).
pub fn fit_log_log(xs: &[f64], ys: &[f64]) -> (f64, f64, f64, f64) {
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys.iter()) {
        sxx += (x - mean_x) * (x - mean_x);
        syy += (y - mean_y) * (y - mean_y);
        sxy += (x - mean_x) * (y - mean_y);
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let r = sxy / (sxx.sqrt() * syy.sqrt());
    (slope, intercept, r * r, r)
}

/// The fixed-ratio config used for benchmark runs: a 12-month window at the
/// default rate cap and illicit ratio, with pattern volume scaling linearly
/// in the population.
pub fn bench_configs(individuals: u32, seed: u64) -> (GraphConfig, PatternConfig) {
    let gcfg = parse_graph_config(
        &format!(
            "master_seed: {seed}\nindividual_count: {individuals}\nbusiness_ratio: 0.15\n\
             institution_count: {}\nsimulation_start: 2025-01-01\nsimulation_end: 2026-01-01\n\
             target_illicit_ratio: 0.001\n",
            (individuals / 200).clamp(5, 40),
        ),
        "bench",
    )
    .expect("static bench config");
    // Three instances per typology per 1000 individuals lands a 1k run near
    // 0.37M transactions at the default ratio and rate cap, and keeps the
    // fraud volume (hence total volume) linear in the population.
    let per_typology = ((individuals as f64 * 3.0 / 1000.0).round() as u32).max(1);
    let mut pcfg = parse_pattern_config("", "bench").expect("static bench config");
    pcfg.overseas_transfers.instance_count = per_typology;
    pcfg.rapid_movement.instance_count = per_typology;
    pcfg.front_business.instance_count = per_typology;
    pcfg.synchronised.instance_count = per_typology;
    pcfg.u_turn.instance_count = per_typology;
    (gcfg, pcfg)
}

/// Runs the benchmark over ascending scales and fits the scaling exponent.
/// At least two scales are required; four or more give a meaningful fit.
pub fn run_bench(scales: &[u32], repeats: u32) -> Result<BenchReport, PipelineError> {
    assert!(scales.len() >= 2, "need at least two scales");
    let mut ordered: Vec<u32> = scales.to_vec();
    ordered.sort_unstable();

    let mut rows = Vec::new();
    for &individuals in &ordered {
        let (gcfg, pcfg) = bench_configs(individuals, 7_777);
        let mut best_wall = f64::INFINITY;
        let mut nodes = 0u64;
        let mut edges = 0u64;
        for _ in 0..repeats.max(1) {
            let started = std::time::Instant::now();
            let run = run_in_memory(&gcfg, &pcfg)?;
            let wall = started.elapsed().as_secs_f64();
            best_wall = best_wall.min(wall);
            nodes = run.graph.node_count() as u64;
            edges = run.graph.edge_count() as u64;
        }
        let total = nodes + edges;
        rows.push(BenchScale {
            individuals,
            nodes,
            edges,
            total_elements: total,
            wall_secs: best_wall,
            peak_rss_bytes: peak_rss_bytes().unwrap_or(0),
            throughput_kelements_per_sec: total as f64 / best_wall / 1000.0,
        });
    }

    let xs: Vec<f64> = rows
        .iter()
        .map(|r| (r.total_elements as f64).ln())
        .collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.wall_secs.ln()).collect();
    let (alpha, _, r_squared, pearson_r) = fit_log_log(&xs, &ys);

    Ok(BenchReport {
        scales: rows,
        repeats: repeats.max(1),
        alpha,
        r_squared,
        pearson_r,
        memory_note:
            "peak_rss is the process high-water mark; scales run ascending in-process, so each \
             reading is dominated by the current scale"
                .to_string(),
    })
}

/// Writes the report as both CSV rows and JSON under `dir`.
pub fn write_bench_report(report: &BenchReport, dir: &Path) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut csv = String::from(
        "individuals,nodes,edges,total_elements,wall_secs,peak_rss_bytes,throughput_kelements_per_sec\n",
    );
    for row in &report.scales {
        csv.push_str(&format!(
            "{},{},{},{},{:.6},{},{:.3}\n",
            row.individuals,
            row.nodes,
            row.edges,
            row.total_elements,
            row.wall_secs,
            row.peak_rss_bytes,
            row.throughput_kelements_per_sec,
        ));
    }
    std::fs::write(dir.join("bench_report.csv"), csv)?;
    let json = serde_json::to_string_pretty(report).expect("report serializes");
    std::fs::write(dir.join("bench_report.json"), json + "\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ols_recovers_known_slope() {
        // y = 2x + 1, exactly.
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys = [3.0, 5.0, 7.0, 9.0];
        let (slope, intercept, r2, r) = fit_log_log(&xs, &ys);
        assert!((slope - 2.0).abs() < 1e-12);
        assert!((intercept - 1.0).abs() < 1e-12);
        assert!((r2 - 1.0).abs() < 1e-12);
        assert!((r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn peak_rss_readable() {
        let rss = peak_rss_bytes();
        assert!(rss.is_some());
        assert!(rss.unwrap() > 1024 * 1024, "peak RSS should exceed 1 MiB");
    }

    #[test]
    fn tiny_bench_produces_fit() {
        let report = run_bench(&[50, 100], 1).unwrap();
        assert_eq!(report.scales.len(), 2);
        assert!(report.scales[0].total_elements < report.scales[1].total_elements);
        assert!(report.alpha.is_finite());
        for row in &report.scales {
            assert!(row.throughput_kelements_per_sec > 0.0);
        }
    }
}
