//! Workflow step 4: merge pattern and background edges, finalize per-source
//! inter-arrival deltas, compute the chronological 60/20/20 split, mask
//! internal attributes, and export CSV/JSON artifacts.
//!
//! Exports are pure functions of the in-memory graph: re-exporting without
//! regeneration yields byte-identical files. Rows render with bit-stable
//! integer arithmetic (cents, unix seconds) and files are written
//! temp-then-rename.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::config::{GraphConfig, OutputFormats};
use crate::model::{Graph, ModelError, NodeKind, PendingEdge, Relation};
use crate::patterns::PatternInstance;

#[derive(Debug, Error)]
pub enum AssembleError {
    #[error("too few transaction edges to split: {0} (need at least 5)")]
    TooFewEdges(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("export i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization: {0}")]
    Json(#[from] serde_json::Error),
}

/// Node attributes that exist during generation but are masked from the
/// exported feature columns.
pub const MASKED_ATTRIBUTES: [&str; 6] = [
    "risk_score",
    "occupation",
    "business_category",
    "is_high_risk_category",
    "name",
    "institution_name",
];

pub const NODES_HEADER: &str = "node_id,node_type,country_code,account_category,currency,owner_id,institution_id,age_group,gender,incorporation_year,number_of_employees,creation_year,is_fraudulent";
pub const EDGES_HEADER: &str =
    "edge_id,source_id,target_id,relation,amount,timestamp,time_since_prev,category,is_fraud";
pub const SPLITS_HEADER: &str = "edge_id,split";

/// Inserts the background edges, sorts every edge globally by
/// (timestamp, insertion sequence), recomputes each source's inter-arrival
/// delta over the merged order, and returns the map from insertion sequence
/// to final exported edge id.
pub fn merge_and_finalize(
    graph: &mut Graph,
    background_edges: Vec<PendingEdge>,
) -> Result<Vec<u64>, AssembleError> {
    for edge in background_edges {
        graph.insert_transaction(edge)?;
    }
    // (timestamp, seq) is a total order, so the parallel sort is
    // deterministic regardless of worker count.
    use rayon::slice::ParallelSliceMut;
    graph
        .edges
        .par_sort_unstable_by_key(|e| (e.timestamp, e.seq));

    let mut seq_to_edge_id = vec![0u64; graph.edges.len()];
    let mut last_seen: Vec<i64> = vec![i64::MIN; graph.node_count()];
    for (edge_id, edge) in graph.edges.iter_mut().enumerate() {
        seq_to_edge_id[edge.seq as usize] = edge_id as u64;
        if edge.relation == Relation::Transaction {
            let prev = last_seen[edge.source as usize];
            edge.time_since_prev = if prev == i64::MIN {
                0
            } else {
                edge.timestamp - prev
            };
            last_seen[edge.source as usize] = edge.timestamp;
        } else {
            edge.time_since_prev = 0;
        }
    }
    Ok(seq_to_edge_id)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn label(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

/// Chronological 60/20/20 partition of the transaction edges.
#[derive(Debug, Clone, Serialize)]
pub struct SplitIndex {
    /// Timestamp of the first validation edge.
    pub t1: i64,
    /// Timestamp of the first test edge.
    pub t2: i64,
    pub train_count: u64,
    pub val_count: u64,
    pub test_count: u64,
    /// (edge_id, split) in chronological order; transaction edges only.
    #[serde(skip)]
    pub rows: Vec<(u64, Split)>,
}

/// Splits the chronologically ordered transaction edges into exact
/// floor(0.6n) / floor(0.2n) / remainder counts, ties broken by edge id.
/// Ownership edges are not split.
pub fn temporal_split(graph: &Graph) -> Result<SplitIndex, AssembleError> {
    let transaction_ids: Vec<(u64, i64)> = graph
        .edges
        .iter()
        .enumerate()
        .filter(|(_, e)| e.relation == Relation::Transaction)
        .map(|(id, e)| (id as u64, e.timestamp))
        .collect();
    let n = transaction_ids.len();
    if n < 5 {
        return Err(AssembleError::TooFewEdges(n));
    }
    let train_count = (n as f64 * 0.6).floor() as usize;
    let val_count = (n as f64 * 0.2).floor() as usize;
    let test_count = n - train_count - val_count;

    let t1 = transaction_ids[train_count].1;
    let t2 = transaction_ids[train_count + val_count].1;
    let mut rows = Vec::with_capacity(n);
    for (i, (edge_id, _)) in transaction_ids.iter().enumerate() {
        let split = if i < train_count {
            Split::Train
        } else if i < train_count + val_count {
            Split::Val
        } else {
            Split::Test
        };
        rows.push((*edge_id, split));
    }
    Ok(SplitIndex {
        t1,
        t2,
        train_count: train_count as u64,
        val_count: val_count as u64,
        test_count: test_count as u64,
        rows,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FileEntry {
    pub name: String,
    pub bytes: u64,
    pub sha256: String,
}

/// Everything a consumer needs to verify and interpret an export.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExportManifest {
    pub format_version: u32,
    pub seed: u64,
    pub currency: String,
    pub config_sha256: BTreeMap<String, String>,
    pub simulation_start: i64,
    pub simulation_end: i64,
    pub node_count: u64,
    pub edge_count: u64,
    pub transaction_edge_count: u64,
    pub ownership_edge_count: u64,
    pub fraud_edge_count: u64,
    pub pattern_instance_count: u64,
    pub target_illicit_ratio: f64,
    pub achieved_illicit_ratio: f64,
    pub reporting_threshold: f64,
    /// Country codes flagged high-risk in the run config; validators need
    /// them to re-check jurisdiction constraints from the export alone.
    pub high_risk_countries: Vec<String>,
    pub split_t1: i64,
    pub split_t2: i64,
    pub split_counts: (u64, u64, u64),
    pub warnings: Vec<String>,
    pub files: Vec<FileEntry>,
}

struct HashingWriter<W: Write> {
    inner: W,
    hasher: Sha256,
    bytes: u64,
}

impl<W: Write> HashingWriter<W> {
    fn new(inner: W) -> Self {
        Self {
            inner,
            hasher: Sha256::new(),
            bytes: 0,
        }
    }

    fn finish(self) -> (W, String, u64) {
        (self.inner, hex_digest(self.hasher), self.bytes)
    }
}

impl<W: Write> Write for HashingWriter<W> {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        let n = self.inner.write(buf)?;
        self.hasher.update(&buf[..n]);
        self.bytes += n as u64;
        Ok(n)
    }

    fn flush(&mut self) -> std::io::Result<()> {
        self.inner.flush()
    }
}

fn hex_digest(hasher: Sha256) -> String {
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hex_digest(hasher)
}

/// Writes `render` into `dir/name` atomically (temp file, then rename),
/// returning the file entry with its content hash.
fn write_file<F>(dir: &Path, name: &str, render: F) -> Result<FileEntry, AssembleError>
where
    F: FnOnce(&mut HashingWriter<std::io::BufWriter<std::fs::File>>) -> Result<(), AssembleError>,
{
    let tmp_path: PathBuf = dir.join(format!(".{name}.tmp"));
    let final_path = dir.join(name);
    let file = std::fs::File::create(&tmp_path)?;
    let mut writer = HashingWriter::new(std::io::BufWriter::new(file));
    render(&mut writer)?;
    writer.flush()?;
    let (buf, sha256, bytes) = writer.finish();
    drop(buf);
    std::fs::rename(&tmp_path, &final_path)?;
    Ok(FileEntry {
        name: name.to_string(),
        bytes,
        sha256,
    })
}

fn render_cents(cents: i64) -> String {
    format!("{}.{:02}", cents / 100, cents % 100)
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn render_nodes_csv<W: Write>(graph: &Graph, currency: &str, w: &mut W) -> std::io::Result<()> {
    writeln!(w, "{NODES_HEADER}")?;
    for node in &graph.nodes {
        let mut account_category = "";
        let mut owner_id = "";
        let mut institution_id = "";
        let mut age_group = "";
        let mut gender = "";
        let mut incorporation_year = String::new();
        let mut employees = String::new();
        let mut node_currency = "";
        match &node.kind {
            NodeKind::Individual {
                age_group: ag,
                gender: g,
                ..
            } => {
                age_group = ag.label();
                gender = g.label();
            }
            NodeKind::Business {
                incorporation_year: y,
                employees: e,
                ..
            } => {
                incorporation_year = y.to_string();
                employees = e.to_string();
            }
            NodeKind::Account {
                category,
                owner,
                institution,
            } => {
                account_category = category.label();
                owner_id = &graph.nodes[*owner as usize].node_id;
                institution_id = &graph.nodes[*institution as usize].node_id;
                node_currency = currency;
            }
            NodeKind::Institution { .. } => {}
            NodeKind::Cash => {
                account_category = "cash";
                node_currency = currency;
            }
        }
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            csv_field(&node.node_id),
            node.node_type().label(),
            csv_field(&node.country_code),
            account_category,
            node_currency,
            owner_id,
            institution_id,
            age_group,
            gender,
            incorporation_year,
            employees,
            node.creation_year,
            node.is_fraudulent,
        )?;
    }
    Ok(())
}

fn render_edges_csv<W: Write>(graph: &Graph, w: &mut W) -> std::io::Result<()> {
    writeln!(w, "{EDGES_HEADER}")?;
    for (edge_id, edge) in graph.edges.iter().enumerate() {
        let category = match edge.relation {
            Relation::Transaction => edge.category.label(),
            Relation::Ownership => "",
        };
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            edge_id,
            graph.nodes[edge.source as usize].node_id,
            graph.nodes[edge.target as usize].node_id,
            edge.relation.label(),
            render_cents(edge.amount_cents),
            edge.timestamp,
            edge.time_since_prev,
            category,
            edge.is_fraud,
        )?;
    }
    Ok(())
}

fn render_splits_csv<W: Write>(split: &SplitIndex, w: &mut W) -> std::io::Result<()> {
    writeln!(w, "{SPLITS_HEADER}")?;
    for (edge_id, s) in &split.rows {
        writeln!(w, "{},{}", edge_id, s.label())?;
    }
    Ok(())
}

/// One JSON record per instance: typology, role bindings, ordered final
/// edge ids with role tags, and resolved parameters.
pub fn pattern_metadata_json(
    instances: &[PatternInstance],
    seq_to_edge_id: &[u64],
) -> Result<serde_json::Value, AssembleError> {
    let records: Vec<serde_json::Value> = instances
        .iter()
        .map(|instance| {
            let edge_ids: Vec<u64> = instance
                .edge_seqs
                .iter()
                .map(|s| seq_to_edge_id[*s as usize])
                .collect();
            serde_json::to_value(serde_json::json!({
                "instance_id": instance.instance_id(),
                "typology": instance.typology.label(),
                "instance_index": instance.instance_index,
                "role_bindings": instance.role_bindings,
                "edge_ids": edge_ids,
                "edge_roles": instance.edge_roles,
                "params": instance.params,
            }))
        })
        .collect::<Result<_, _>>()?;
    Ok(serde_json::Value::Array(records))
}

/// Writes patterns.json on its own (the `export_pattern_metadata` surface).
pub fn export_pattern_metadata(
    instances: &[PatternInstance],
    seq_to_edge_id: &[u64],
    dir: &Path,
) -> Result<FileEntry, AssembleError> {
    let value = pattern_metadata_json(instances, seq_to_edge_id)?;
    write_file(dir, "patterns.json", |w| {
        serde_json::to_writer_pretty(&mut *w, &value)?;
        w.write_all(b"\n")?;
        Ok(())
    })
}

pub struct ExportInputs<'a> {
    pub graph: &'a Graph,
    pub split: &'a SplitIndex,
    pub instances: &'a [PatternInstance],
    pub seq_to_edge_id: &'a [u64],
    pub config_sha256: BTreeMap<String, String>,
    pub warnings: Vec<String>,
}

/// Exports nodes.csv, edges.csv, splits.csv, patterns.json, and
/// manifest.json into `dir`, honoring the output format flags. Masked
/// attributes never reach the files; `is_fraudulent`/`is_fraud` are kept as
/// target labels.
pub fn export_dataset(
    inputs: &ExportInputs,
    cfg: &GraphConfig,
    formats: OutputFormats,
    dir: &Path,
) -> Result<ExportManifest, AssembleError> {
    std::fs::create_dir_all(dir)?;
    let graph = inputs.graph;
    let mut files = Vec::new();

    if formats.csv {
        files.push(write_file(dir, "nodes.csv", |w| {
            render_nodes_csv(graph, &cfg.currency, w)?;
            Ok(())
        })?);
        files.push(write_file(dir, "edges.csv", |w| {
            render_edges_csv(graph, w)?;
            Ok(())
        })?);
        files.push(write_file(dir, "splits.csv", |w| {
            render_splits_csv(inputs.split, w)?;
            Ok(())
        })?);
    }
    if formats.json {
        files.push(export_pattern_metadata(
            inputs.instances,
            inputs.seq_to_edge_id,
            dir,
        )?);
    }

    let transaction_edges = graph
        .edges
        .iter()
        .filter(|e| e.relation == Relation::Transaction)
        .count() as u64;
    let fraud_edges = graph.edges.iter().filter(|e| e.is_fraud).count() as u64;
    let achieved = if transaction_edges == 0 {
        0.0
    } else {
        fraud_edges as f64 / transaction_edges as f64
    };
    let window = cfg.window();
    let mut manifest = ExportManifest {
        format_version: 1,
        seed: cfg.master_seed,
        currency: cfg.currency.clone(),
        config_sha256: inputs.config_sha256.clone(),
        simulation_start: window.0,
        simulation_end: window.1,
        node_count: graph.node_count() as u64,
        edge_count: graph.edge_count() as u64,
        transaction_edge_count: transaction_edges,
        ownership_edge_count: graph.edge_count() as u64 - transaction_edges,
        fraud_edge_count: fraud_edges,
        pattern_instance_count: inputs.instances.len() as u64,
        target_illicit_ratio: cfg.target_illicit_ratio,
        achieved_illicit_ratio: achieved,
        reporting_threshold: cfg.reporting_threshold,
        high_risk_countries: cfg
            .country_table
            .iter()
            .filter(|c| c.high_risk)
            .map(|c| c.code.clone())
            .collect(),
        split_t1: inputs.split.t1,
        split_t2: inputs.split.t2,
        split_counts: (
            inputs.split.train_count,
            inputs.split.val_count,
            inputs.split.test_count,
        ),
        warnings: inputs.warnings.clone(),
        files,
    };

    let manifest_value = serde_json::to_value(&manifest)?;
    let entry = write_file(dir, "manifest.json", |w| {
        serde_json::to_writer_pretty(&mut *w, &manifest_value)?;
        w.write_all(b"\n")?;
        Ok(())
    })?;
    manifest.files.push(entry);
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Graph, PendingEdge, TxCategory};

    fn graph_with_edges(times: &[(u32, u32, i64)]) -> Graph {
        let mut graph = Graph::new((0, 1_000_000));
        for i in 0..4u32 {
            graph.push_node(crate::model::EntityNode {
                idx: i,
                node_id: format!("N{i}"),
                kind: crate::model::NodeKind::Cash,
                country_code: "US".into(),
                high_risk_country: false,
                creation_year: 2025,
                is_fraudulent: false,
                risk_score: 0.0,
            });
        }
        for &(src, dst, t) in times {
            graph
                .insert_transaction(PendingEdge::transaction(
                    src,
                    dst,
                    100,
                    t,
                    TxCategory::Payment,
                    false,
                ))
                .unwrap();
        }
        graph
    }

    #[test]
    fn delta_is_zero_for_first_edge() {
        let mut graph = graph_with_edges(&[(0, 1, 100)]);
        merge_and_finalize(&mut graph, Vec::new()).unwrap();
        assert_eq!(graph.edges[0].time_since_prev, 0);
    }

    #[test]
    fn delta_tracks_source_gaps() {
        let mut graph = graph_with_edges(&[(0, 1, 1_000), (0, 2, 4_600), (1, 0, 2_000)]);
        merge_and_finalize(&mut graph, Vec::new()).unwrap();
        // Sorted: (0->1 @1000), (1->0 @2000), (0->2 @4600).
        assert_eq!(graph.edges[0].time_since_prev, 0);
        assert_eq!(graph.edges[1].time_since_prev, 0);
        assert_eq!(graph.edges[2].time_since_prev, 3_600);
    }

    #[test]
    fn merge_orders_by_time_then_seq() {
        let mut graph = graph_with_edges(&[(0, 1, 500), (2, 3, 100), (1, 2, 500)]);
        let map = merge_and_finalize(&mut graph, Vec::new()).unwrap();
        let times: Vec<i64> = graph.edges.iter().map(|e| e.timestamp).collect();
        assert_eq!(times, vec![100, 500, 500]);
        // Equal timestamps tie-break on insertion sequence.
        assert_eq!(graph.edges[1].seq, 0);
        assert_eq!(graph.edges[2].seq, 2);
        // seq -> edge id mapping is consistent.
        assert_eq!(map[graph.edges[1].seq as usize], 1);
    }

    #[test]
    fn split_counts_are_exact() {
        let times: Vec<(u32, u32, i64)> = (0..10).map(|i| (0u32, 1u32, 100 + i as i64)).collect();
        let mut graph = graph_with_edges(&times);
        merge_and_finalize(&mut graph, Vec::new()).unwrap();
        let split = temporal_split(&graph).unwrap();
        assert_eq!(
            (split.train_count, split.val_count, split.test_count),
            (6, 2, 2)
        );
        assert!(split.t1 <= split.t2);
    }

    #[test]
    fn split_handles_equal_timestamps() {
        let times: Vec<(u32, u32, i64)> = (0..10).map(|_| (0u32, 1u32, 555)).collect();
        let mut graph = graph_with_edges(&times);
        merge_and_finalize(&mut graph, Vec::new()).unwrap();
        let split = temporal_split(&graph).unwrap();
        assert_eq!(
            (split.train_count, split.val_count, split.test_count),
            (6, 2, 2)
        );
        assert_eq!(split.t1, 555);
        assert_eq!(split.t2, 555);
    }

    #[test]
    fn split_boundaries_order_chronologically() {
        let times: Vec<(u32, u32, i64)> = (0..50).map(|i| (0u32, 1u32, 10 * i as i64)).collect();
        let mut graph = graph_with_edges(&times);
        merge_and_finalize(&mut graph, Vec::new()).unwrap();
        let split = temporal_split(&graph).unwrap();
        let max_train = split
            .rows
            .iter()
            .filter(|(_, s)| *s == Split::Train)
            .map(|(id, _)| graph.edges[*id as usize].timestamp)
            .max()
            .unwrap();
        let min_val = split
            .rows
            .iter()
            .filter(|(_, s)| *s == Split::Val)
            .map(|(id, _)| graph.edges[*id as usize].timestamp)
            .min()
            .unwrap();
        let max_val = split
            .rows
            .iter()
            .filter(|(_, s)| *s == Split::Val)
            .map(|(id, _)| graph.edges[*id as usize].timestamp)
            .max()
            .unwrap();
        let min_test = split
            .rows
            .iter()
            .filter(|(_, s)| *s == Split::Test)
            .map(|(id, _)| graph.edges[*id as usize].timestamp)
            .min()
            .unwrap();
        assert!(max_train <= split.t1 && split.t1 <= min_val);
        assert!(max_val <= split.t2 && split.t2 <= min_test);
    }

    #[test]
    fn split_rejects_tiny_graphs() {
        let mut graph = graph_with_edges(&[(0, 1, 1), (1, 2, 2)]);
        merge_and_finalize(&mut graph, Vec::new()).unwrap();
        assert!(matches!(
            temporal_split(&graph),
            Err(AssembleError::TooFewEdges(2))
        ));
    }

    #[test]
    fn cents_render_two_decimals() {
        assert_eq!(render_cents(12_345), "123.45");
        assert_eq!(render_cents(100), "1.00");
        assert_eq!(render_cents(7), "0.07");
        assert_eq!(render_cents(0), "0.00");
    }

    #[test]
    fn masked_attributes_not_in_headers() {
        for masked in MASKED_ATTRIBUTES {
            for header in [NODES_HEADER, EDGES_HEADER, SPLITS_HEADER] {
                assert!(
                    !header.split(',').any(|c| c == masked),
                    "`{masked}` leaked into an export header"
                );
            }
        }
    }
}
