//! Workflow step 1: create individuals, businesses, institutions, accounts,
//! ownership edges, the global cash node, and the cluster index.

use std::collections::BTreeMap;

use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::catalog::{self, AccountCategory, AgeGroup, Gender};
use crate::config::{GraphConfig, RiskWeights};
use crate::model::{
    assign_clusters, risk_score, EntityNode, Graph, ModelError, NodeIdx, NodeKind, NodeType,
    PendingEdge, Relation, TxCategory,
};
use crate::rng::RngStream;

#[derive(Debug, Error)]
pub enum PopulationError {
    #[error("unknown owner index {0}")]
    UnknownOwner(NodeIdx),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Counts and cluster cardinalities of a generated population.
#[derive(Debug, Clone, Serialize)]
pub struct PopulationSummary {
    pub counts_by_type: BTreeMap<String, usize>,
    pub cluster_sizes: BTreeMap<String, usize>,
    pub seed_fingerprint: String,
}

pub fn summarize(graph: &Graph, master_seed: u64) -> PopulationSummary {
    let mut counts_by_type = BTreeMap::new();
    for node in &graph.nodes {
        *counts_by_type
            .entry(node.node_type().label().to_string())
            .or_insert(0) += 1;
    }
    let cluster_sizes = graph
        .clusters
        .iter()
        .map(|(id, members)| (id.label().to_string(), members.len()))
        .collect();
    PopulationSummary {
        counts_by_type,
        cluster_sizes,
        seed_fingerprint: format!("{master_seed:016x}"),
    }
}

struct IdCounters {
    individual: u32,
    business: u32,
    account: u32,
    institution: u32,
}

impl IdCounters {
    fn new() -> Self {
        Self {
            individual: 0,
            business: 0,
            account: 0,
            institution: 0,
        }
    }

    fn next(&mut self, t: NodeType) -> String {
        match t {
            NodeType::Individual => {
                self.individual += 1;
                format!("I{:06}", self.individual)
            }
            NodeType::Business => {
                self.business += 1;
                format!("B{:06}", self.business)
            }
            NodeType::Account => {
                self.account += 1;
                format!("A{:08}", self.account)
            }
            NodeType::Institution => {
                self.institution += 1;
                format!("F{:03}", self.institution)
            }
            NodeType::Cash => "CASH".to_string(),
        }
    }
}

/// Builds the full entity population. Deterministic under (config, stream).
pub fn generate_population(
    cfg: &GraphConfig,
    weights: &RiskWeights,
    rng: &mut RngStream,
) -> Result<Graph, PopulationError> {
    let mut graph = Graph::new(cfg.window());
    let mut ids = IdCounters::new();
    let start_year = chrono::Datelike::year(&cfg.simulation_start);

    let country_weights =
        WeightedIndex::new(cfg.country_table.iter().map(|c| c.weight)).expect("validated weights");
    let age_weights = WeightedIndex::new(AgeGroup::WEIGHTS).expect("static weights");

    // Institutions first so accounts can reference them.
    let mut institutions = Vec::with_capacity(cfg.institution_count as usize);
    for _ in 0..cfg.institution_count {
        let country = &cfg.country_table[rng.sample(&country_weights)];
        let node_id = ids.next(NodeType::Institution);
        let idx = graph.push_node(EntityNode {
            idx: 0,
            node_id: node_id.clone(),
            kind: NodeKind::Institution {
                name: format!("Bank {node_id}"),
            },
            country_code: country.code.clone(),
            high_risk_country: country.high_risk,
            creation_year: start_year - rng.random_range(5..=40),
            is_fraudulent: false,
            risk_score: 0.0,
        });
        institutions.push(idx);
    }

    // The single global cash node.
    let cash = graph.push_node(EntityNode {
        idx: 0,
        node_id: ids.next(NodeType::Cash),
        kind: NodeKind::Cash,
        country_code: String::new(),
        high_risk_country: false,
        creation_year: start_year,
        is_fraudulent: false,
        risk_score: 0.0,
    });
    graph.cash_node = cash;

    // Individuals.
    let mut individuals = Vec::with_capacity(cfg.individual_count as usize);
    for _ in 0..cfg.individual_count {
        let country = &cfg.country_table[rng.sample(&country_weights)];
        let age_group = AgeGroup::ALL[rng.sample(&age_weights)];
        let occupation = rng.random_range(0..catalog::OCCUPATIONS.len()) as u16;
        let gender = if rng.random_bool(0.5) {
            Gender::Female
        } else {
            Gender::Male
        };
        let first = catalog::FIRST_NAMES[rng.random_range(0..catalog::FIRST_NAMES.len())];
        let last = catalog::LAST_NAMES[rng.random_range(0..catalog::LAST_NAMES.len())];
        let idx = graph.push_node(EntityNode {
            idx: 0,
            node_id: ids.next(NodeType::Individual),
            kind: NodeKind::Individual {
                name: format!("{first} {last}"),
                age_group,
                occupation,
                gender,
            },
            country_code: country.code.clone(),
            high_risk_country: country.high_risk,
            creation_year: start_year - rng.random_range(0..=10),
            is_fraudulent: false,
            risk_score: 0.0,
        });
        individuals.push(idx);
    }

    // Businesses, each owned by a sampled individual.
    let business_count = (cfg.individual_count as f64 * cfg.business_ratio).floor() as usize;
    let mut businesses = Vec::with_capacity(business_count);
    for _ in 0..business_count {
        let owner = individuals[rng.random_range(0..individuals.len())];
        let (owner_country, owner_high_risk) = {
            let o = graph.node(owner);
            (o.country_code.clone(), o.high_risk_country)
        };
        let category = rng.random_range(0..catalog::BUSINESS_CATEGORIES.len()) as u16;
        // Log-uniform head count over [1, 500]: most firms are small, a few
        // are large, and both the <=5 and >10 bands stay populated.
        let employees = (500f64.ln() * rng.random::<f64>())
            .exp()
            .round()
            .clamp(1.0, 500.0) as u32;
        let incorporation_year = start_year - rng.random_range(0..=30);
        let idx = graph.push_node(EntityNode {
            idx: 0,
            node_id: ids.next(NodeType::Business),
            kind: NodeKind::Business {
                category,
                incorporation_year,
                employees,
            },
            country_code: owner_country,
            high_risk_country: owner_high_risk,
            creation_year: incorporation_year,
            is_fraudulent: false,
            risk_score: 0.0,
        });
        graph
            .insert_transaction(PendingEdge {
                source: owner,
                target: idx,
                relation: Relation::Ownership,
                amount_cents: 0,
                timestamp: cfg.window().0,
                category: TxCategory::Transfer,
                is_fraud: false,
            })
            .map_err(PopulationError::Model)?;
        graph
            .businesses_by_owner
            .entry(owner)
            .or_default()
            .push(idx);
        businesses.push(idx);
    }

    // Accounts: a sampled number of regular accounts plus the dedicated
    // cash account, for every individual and business.
    for &owner in &individuals {
        let n =
            rng.random_range(cfg.accounts_per_individual.lo()..=cfg.accounts_per_individual.hi());
        attach_accounts_inner(
            &mut graph,
            &mut ids,
            &institutions,
            owner,
            n,
            start_year,
            rng,
        )?;
    }
    for &owner in &businesses {
        let n = rng.random_range(cfg.accounts_per_business.lo()..=cfg.accounts_per_business.hi());
        attach_accounts_inner(
            &mut graph,
            &mut ids,
            &institutions,
            owner,
            n,
            start_year,
            rng,
        )?;
    }

    // Risk scores, then cluster assignment over individuals and businesses.
    for idx in individuals.iter().chain(businesses.iter()).copied() {
        let score = risk_score(graph.node(idx), weights)?;
        graph.nodes[idx as usize].risk_score = score;
    }
    for idx in individuals.iter().chain(businesses.iter()).copied() {
        for cluster in assign_clusters(graph.node(idx))? {
            graph.clusters.get_mut(&cluster).unwrap().push(idx);
        }
    }
    graph.sort_clusters();
    Ok(graph)
}

/// Attaches `n` regular accounts (plus the owner's cash account if missing)
/// at randomly chosen institutions. Returns the new regular account indices.
pub fn attach_accounts(
    graph: &mut Graph,
    owner: NodeIdx,
    n: u32,
    rng: &mut RngStream,
) -> Result<Vec<NodeIdx>, PopulationError> {
    if owner as usize >= graph.nodes.len() || !graph.node(owner).is_entity() {
        return Err(PopulationError::UnknownOwner(owner));
    }
    let institutions: Vec<NodeIdx> = graph
        .nodes
        .iter()
        .filter(|n| matches!(n.kind, NodeKind::Institution { .. }))
        .map(|n| n.idx)
        .collect();
    let mut ids = IdCounters::new();
    ids.account = graph
        .nodes
        .iter()
        .filter(|n| matches!(n.kind, NodeKind::Account { .. }))
        .count() as u32;
    let year = chrono::DateTime::from_timestamp(graph.window.0, 0)
        .map(|d| chrono::Datelike::year(&d))
        .unwrap_or(2025);
    attach_accounts_inner(graph, &mut ids, &institutions, owner, n, year, rng)
}

#[allow(clippy::too_many_arguments)]
fn attach_accounts_inner(
    graph: &mut Graph,
    ids: &mut IdCounters,
    institutions: &[NodeIdx],
    owner: NodeIdx,
    n: u32,
    start_year: i32,
    rng: &mut RngStream,
) -> Result<Vec<NodeIdx>, PopulationError> {
    let is_business = matches!(graph.node(owner).kind, NodeKind::Business { .. });
    let (owner_country, owner_high_risk) = {
        let o = graph.node(owner);
        (o.country_code.clone(), o.high_risk_country)
    };

    // Institution choice: when the owner holds several accounts and several
    // institutions exist, spread over at least two banks (the front-business
    // pattern requires accounts across different institutions).
    let mut chosen = Vec::with_capacity(n as usize);
    for i in 0..n as usize {
        let inst = institutions[rng.random_range(0..institutions.len())];
        chosen.push(inst);
        if i == 1 && institutions.len() >= 2 && chosen[0] == chosen[1] {
            let mut other = inst;
            while other == chosen[0] {
                other = institutions[rng.random_range(0..institutions.len())];
            }
            chosen[1] = other;
        }
    }

    let mut created = Vec::with_capacity(n as usize);
    for (i, inst) in chosen.into_iter().enumerate() {
        let category = match (is_business, i) {
            (false, 0) => AccountCategory::Current,
            (false, 1) => AccountCategory::Savings,
            (false, _) => AccountCategory::MoneyMarket,
            (true, i) if i < 2 => AccountCategory::BusinessCurrent,
            (true, _) => AccountCategory::MoneyMarket,
        };
        let idx = push_account(
            graph,
            ids,
            owner,
            inst,
            category,
            &owner_country,
            owner_high_risk,
            start_year,
            rng,
        )?;
        graph.accounts_by_owner.entry(owner).or_default().push(idx);
        graph.regular_accounts.push(idx);
        created.push(idx);
    }

    // Dedicated cash account, created once per owner.
    if !graph.cash_account_by_owner.contains_key(&owner) {
        let inst = institutions[rng.random_range(0..institutions.len())];
        let idx = push_account(
            graph,
            ids,
            owner,
            inst,
            AccountCategory::Cash,
            &owner_country,
            owner_high_risk,
            start_year,
            rng,
        )?;
        graph.cash_account_by_owner.insert(owner, idx);
    }
    Ok(created)
}

#[allow(clippy::too_many_arguments)]
fn push_account(
    graph: &mut Graph,
    ids: &mut IdCounters,
    owner: NodeIdx,
    institution: NodeIdx,
    category: AccountCategory,
    country: &str,
    high_risk_country: bool,
    start_year: i32,
    rng: &mut RngStream,
) -> Result<NodeIdx, PopulationError> {
    let idx = graph.push_node(EntityNode {
        idx: 0,
        node_id: ids.next(NodeType::Account),
        kind: NodeKind::Account {
            category,
            owner,
            institution,
        },
        country_code: country.to_string(),
        high_risk_country,
        creation_year: start_year - rng.random_range(0..=5),
        is_fraudulent: false,
        risk_score: 0.0,
    });
    graph
        .insert_transaction(PendingEdge {
            source: owner,
            target: idx,
            relation: Relation::Ownership,
            amount_cents: 0,
            timestamp: graph.window.0,
            category: TxCategory::Transfer,
            is_fraud: false,
        })
        .map_err(PopulationError::Model)?;
    Ok(idx)
}

/// True when the cluster index covers every individual and business.
pub fn cluster_coverage_complete(graph: &Graph) -> bool {
    let mut covered = vec![false; graph.nodes.len()];
    for members in graph.clusters.values() {
        for &m in members {
            covered[m as usize] = true;
        }
    }
    graph
        .nodes
        .iter()
        .filter(|n| n.is_entity())
        .all(|n| covered[n.idx as usize])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_graph_config;
    use crate::model::ClusterId;
    use crate::rng::SeedTree;

    fn small_cfg(individuals: u32, extra: &str) -> GraphConfig {
        parse_graph_config(
            &format!("master_seed: 7\nindividual_count: {individuals}\n{extra}"),
            "test",
        )
        .unwrap()
    }

    fn build(cfg: &GraphConfig) -> Graph {
        let tree = SeedTree::new(cfg.master_seed);
        generate_population(cfg, &cfg.risk_weights, &mut tree.stream("population")).unwrap()
    }

    #[test]
    fn minimal_population() {
        let cfg = small_cfg(1, "business_ratio: 0\ninstitution_count: 2\n");
        let graph = build(&cfg);
        let individuals = graph
            .nodes
            .iter()
            .filter(|n| n.node_type() == NodeType::Individual)
            .count();
        let accounts = graph
            .nodes
            .iter()
            .filter(|n| n.node_type() == NodeType::Account)
            .count();
        let cash_nodes = graph
            .nodes
            .iter()
            .filter(|n| n.node_type() == NodeType::Cash)
            .count();
        assert_eq!(individuals, 1);
        assert!(accounts >= 2, "at least one regular plus the cash account");
        assert_eq!(cash_nodes, 1);
    }

    #[test]
    fn population_counts_scale() {
        let cfg = small_cfg(200, "business_ratio: 0.15\n");
        let graph = build(&cfg);
        let businesses = graph
            .nodes
            .iter()
            .filter(|n| n.node_type() == NodeType::Business)
            .count();
        assert_eq!(businesses, 30);
        let institutions = graph
            .nodes
            .iter()
            .filter(|n| n.node_type() == NodeType::Institution)
            .count();
        assert_eq!(institutions, 10);
        // Every account has exactly one ownership edge.
        let mut ownership_targets = std::collections::BTreeMap::new();
        for e in &graph.edges {
            if e.relation == Relation::Ownership
                && graph.node(e.target).node_type() == NodeType::Account
            {
                *ownership_targets.entry(e.target).or_insert(0u32) += 1;
            }
        }
        for node in &graph.nodes {
            if node.node_type() == NodeType::Account {
                assert_eq!(ownership_targets.get(&node.idx), Some(&1));
            }
        }
    }

    #[test]
    fn same_seed_same_population() {
        let cfg = small_cfg(120, "");
        let a = build(&cfg);
        let b = build(&cfg);
        assert_eq!(a.nodes.len(), b.nodes.len());
        for (x, y) in a.nodes.iter().zip(b.nodes.iter()) {
            assert_eq!(x, y);
        }
        assert_eq!(a.edges.len(), b.edges.len());
    }

    #[test]
    fn cluster_index_covers_entities() {
        let cfg = small_cfg(300, "");
        let graph = build(&cfg);
        assert!(cluster_coverage_complete(&graph));
        assert!(!graph.clusters[&ClusterId::Legit].is_empty());
    }

    #[test]
    fn multi_account_owners_span_institutions() {
        let cfg = small_cfg(
            150,
            "accounts_per_individual: [2, 3]\ninstitution_count: 5\n",
        );
        let graph = build(&cfg);
        for (&owner, accounts) in &graph.accounts_by_owner {
            if accounts.len() >= 2 {
                let mut insts: Vec<NodeIdx> = accounts
                    .iter()
                    .map(|a| match graph.node(*a).kind {
                        NodeKind::Account { institution, .. } => institution,
                        _ => unreachable!(),
                    })
                    .collect();
                insts.sort_unstable();
                insts.dedup();
                assert!(
                    insts.len() >= 2,
                    "owner {owner} has all accounts at one bank"
                );
            }
        }
    }

    #[test]
    fn attach_accounts_is_idempotent_for_cash() {
        let cfg = small_cfg(5, "");
        let mut graph = build(&cfg);
        let owner = graph
            .nodes
            .iter()
            .find(|n| n.node_type() == NodeType::Individual)
            .unwrap()
            .idx;
        let cash_before = graph.cash_account_by_owner[&owner];
        let tree = SeedTree::new(1);
        let created = attach_accounts(&mut graph, owner, 2, &mut tree.stream("attach")).unwrap();
        assert_eq!(created.len(), 2);
        assert_eq!(graph.cash_account_by_owner[&owner], cash_before);
    }

    #[test]
    fn attach_accounts_rejects_non_entities() {
        let cfg = small_cfg(5, "");
        let mut graph = build(&cfg);
        let cash = graph.cash_node;
        let tree = SeedTree::new(1);
        assert!(matches!(
            attach_accounts(&mut graph, cash, 1, &mut tree.stream("attach")),
            Err(PopulationError::UnknownOwner(_))
        ));
    }

    #[test]
    fn summary_counts_match_node_store() {
        let cfg = small_cfg(80, "");
        let graph = build(&cfg);
        let summary = summarize(&graph, cfg.master_seed);
        let total: usize = summary.counts_by_type.values().sum();
        assert_eq!(total, graph.node_count());
        assert_eq!(summary.counts_by_type["individual"], 80);
        assert_eq!(summary.counts_by_type["cash"], 1);
        assert_eq!(summary.cluster_sizes.len(), ClusterId::ALL.len());
        assert_eq!(
            summary.seed_fingerprint,
            format!("{:016x}", cfg.master_seed)
        );
    }

    #[test]
    fn country_shares_track_weights() {
        let cfg = small_cfg(
            100_000,
            "business_ratio: 0\naccounts_per_individual: [1, 1]\ninstitution_count: 2\n",
        );
        let graph = build(&cfg);
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for node in &graph.nodes {
            if node.node_type() == NodeType::Individual {
                *counts.entry(node.country_code.as_str()).or_insert(0) += 1;
            }
        }
        let total: usize = counts.values().sum();
        for entry in &cfg.country_table {
            let share = *counts.get(entry.code.as_str()).unwrap_or(&0) as f64 / total as f64;
            assert!(
                (share - entry.weight).abs() < 0.02,
                "country {} share {share:.4} vs weight {:.4}",
                entry.code,
                entry.weight
            );
        }
    }
}
